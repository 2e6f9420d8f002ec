//! Spectra, the pair collection rate R_c and the two-waist R_c surface.
//!
//! R_c is computed by two independent routes:
//!
//! * direct: adaptive Gauss-Kronrod over ω_s of P(ω_s) = |C(ω_s)|²;
//! * kernel: R_c = ∫∫ F(u₁) F*(u₂) Q(u₁ − u₂) du₁ du₂ with
//!   Q(Δu) = ∫ dω_s exp(iΦ(ω_s)Δu), which depends on the temperature only.
//!
//! Writing A(Δ) = ∫ F(u+Δ)F*(u) du turns the kernel route into
//! R_c = 2 Re ∫₀² Q(Δ) A(Δ) dΔ. A is smooth, so it is sampled on the u-grid and
//! interpolated by piecewise cubics; the table stores the exact integrals of
//! Q against each cubic cardinal function. Q itself oscillates on a scale of
//! 1/max|Φ|, far below the grid step, so it is never interpolated inside the
//! rate.
//!
//! Rates are in arbitrary units with ω_s in rad/s.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::{Cell, RefCell};
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::amplitude::{AmplitudeEngine, DegenerateSum, Method};
use crate::exec::Executor;
use crate::lgmodes::{FocalConfig, ModeSpec, WaistConfig};
use crate::quadrature::{gauss_kronrod, GaussLegendre};
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Uniform ω_r sampling grid.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct FrequencyGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self { start: 0.7, stop: 1.3, points: 2001 }
    }
}

impl FrequencyGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.start > 0.0 && self.stop > self.start && self.stop < 2.0 && self.points >= 2) {
            return Err(Error::Contract(format!(
                "ω_r grid needs 0 < start < stop < 2 and at least 2 points, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.points - 1;
        (0..self.points).map(|i| self.start + (self.stop - self.start) * i as f64 / n as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Normalization {
    GlobalMax,
    Raw,
}

/// Coincidence probability sampled over ω_r.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub omega_r: Vec<f64>,
    pub probability: Vec<f64>,
    pub normalization: Normalization,
    pub method: Method,
    pub converged: bool,
}

impl SpectrumResult {
    fn finish(
        omega_r: Vec<f64>,
        mut probability: Vec<f64>,
        normalization: Normalization,
        method: Method,
        converged: bool,
    ) -> Self {
        if normalization == Normalization::GlobalMax {
            let max = probability.iter().copied().fold(0.0, f64::max);
            if max > 0.0 {
                for p in &mut probability {
                    *p /= max;
                }
            }
        }
        Self { omega_r, probability, normalization, method, converged }
    }

    /// Index of the global maximum; ties resolve to the point nearest ω_r = 1.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probability.iter().enumerate() {
            let b = self.probability[best];
            if p > b || (p == b && (self.omega_r[i] - 1.0).abs() < (self.omega_r[best] - 1.0).abs()) {
                best = i;
            }
        }
        best
    }

    /// |ω_r − 1| of the global maximum, refined by a parabola through the
    /// neighbouring samples.
    pub fn peak_offset(&self) -> f64 {
        let i = self.argmax();
        let x = &self.omega_r;
        let y = &self.probability;
        if i == 0 || i + 1 == y.len() {
            return (x[i] - 1.0).abs();
        }
        let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
        let den = y0 - 2.0 * y1 + y2;
        let shift = if den < 0.0 { 0.5 * (y0 - y2) / den } else { 0.0 };
        let h = x[i + 1] - x[i];
        (x[i] + shift * h - 1.0).abs()
    }

    /// max |P_a − P_b| over a shared grid.
    pub fn linf_distance(&self, other: &SpectrumResult) -> f64 {
        self.probability.iter().zip(&other.probability).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Root mean square of P_a − P_b over a shared grid.
    pub fn l2_distance(&self, other: &SpectrumResult) -> f64 {
        let n = self.probability.len().max(1) as f64;
        let s: f64 = self.probability.iter().zip(&other.probability).map(|(a, b)| (a - b) * (a - b)).sum();
        (s / n).sqrt()
    }
}

fn spectrum_with<E: Executor>(
    exec: &E,
    grid: &FrequencyGrid,
    normalization: Normalization,
    method: Method,
    eval: impl Fn(f64) -> Result<(f64, bool)> + Sync + Send,
) -> Result<SpectrumResult> {
    grid.validate()?;
    let omega_r = grid.values();
    let out = exec.map(omega_r.clone(), eval);
    let mut probability = Vec::with_capacity(out.len());
    let mut converged = true;
    for r in out {
        let (p, c) = r?;
        probability.push(p);
        converged &= c;
    }
    Ok(SpectrumResult::finish(omega_r, probability, normalization, method, converged))
}

/// P(ω_r) of the degenerate approximation.
pub fn spectrum<E: Executor>(
    exec: &E,
    engine: &AmplitudeEngine<'_>,
    mode: &ModeSpec,
    focal: &FocalConfig,
    grid: &FrequencyGrid,
    normalization: Normalization,
) -> Result<SpectrumResult> {
    let sum = engine.degenerate_sum(mode, focal)?;
    spectrum_with(exec, grid, normalization, Method::DegenerateApprox, |r| {
        let a = engine.degenerate_at_phi(&sum, engine.phi(engine.omega_from_r(r))?)?;
        Ok((a.probability(), a.converged))
    })
}

/// P(ω_r) of the degenerate approximation with quadratic Φ.
pub fn spectrum_quadratic<E: Executor>(
    exec: &E,
    engine: &AmplitudeEngine<'_>,
    mode: &ModeSpec,
    focal: &FocalConfig,
    grid: &FrequencyGrid,
    normalization: Normalization,
) -> Result<SpectrumResult> {
    let sum = engine.degenerate_sum(mode, focal)?;
    let quad = engine.quadratic_phase()?;
    spectrum_with(exec, grid, normalization, Method::QuadraticKz, |r| {
        let phi = engine.phi_quadratic(&quad, engine.omega_from_r(r));
        let a = engine.degenerate_at_phi(&sum, phi)?;
        Ok((a.probability(), a.converged))
    })
}

/// P(ω_r) of the full closed form.
pub fn spectrum_full<E: Executor>(
    exec: &E,
    engine: &AmplitudeEngine<'_>,
    mode: &ModeSpec,
    waists: &WaistConfig,
    grid: &FrequencyGrid,
    normalization: Normalization,
) -> Result<SpectrumResult> {
    spectrum_with(exec, grid, normalization, Method::FullClosedForm, |r| {
        let a = engine.full(mode, waists, engine.omega_from_r(r))?;
        Ok((a.probability(), a.converged))
    })
}

/// ω_si integration window in ω_r.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct RateWindow {
    pub lo: f64,
    pub hi: f64,
}

impl Default for RateWindow {
    fn default() -> Self {
        Self { lo: 0.55, hi: 1.45 }
    }
}

impl RateWindow {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.lo < 1.0 && self.hi > 1.0 && self.hi < 2.0) {
            return Err(Error::Contract(format!("rate window must satisfy 0 < lo < 1 < hi < 2, got {self:?}")));
        }
        Ok(())
    }

    /// Window restricted so both ω_s and ω_p − ω_s stay inside the model's
    /// wavelength range. The flag is set when anything was cut.
    pub fn clipped_to(&self, engine: &AmplitudeEngine<'_>) -> (RateWindow, bool) {
        let (lam_lo, lam_hi) = engine.model().lambda_range_um();
        let lam_p = engine.crystal().pump_wavelength * 1e6;
        let r_min = 2.0 * lam_p / lam_hi;
        let r_max = 2.0 * lam_p / lam_lo;
        let lo = self.lo.max(r_min).max(2.0 - r_max);
        let hi = self.hi.min(r_max).min(2.0 - r_min);
        let w = RateWindow { lo, hi };
        (w, w != *self)
    }

    fn is_symmetric(&self) -> bool {
        (self.lo + self.hi - 2.0).abs() <= 1e-15
    }
}

/// Settings shared by both R_c routes.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct RateSettings {
    pub window: RateWindow,
    /// Relative tolerance of the adaptive ω_s integral.
    pub rel_tolerance: f64,
    /// Maximum number of Gauss-Kronrod segments.
    pub max_segments: usize,
    /// u-grid size of the kernel route (odd, the Δu grid has the same step).
    pub u_points: usize,
}

impl Default for RateSettings {
    fn default() -> Self {
        Self { window: RateWindow::default(), rel_tolerance: 1e-7, max_segments: 20_000, u_points: 2049 }
    }
}

impl RateSettings {
    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        if !(self.rel_tolerance > 0.0) || self.max_segments == 0 {
            return Err(Error::Contract(format!("invalid rate tolerance settings: {self:?}")));
        }
        if self.u_points < 65 || self.u_points.is_multiple_of(2) {
            return Err(Error::Contract(format!("u_points must be odd and ≥ 65, got {}", self.u_points)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Route {
    DirectFrequencyIntegral,
    PhaseKernel,
}

/// Pair collection rate with convergence metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateResult {
    pub value: f64,
    pub route: Route,
    pub converged: bool,
    /// P at a window edge exceeds 1e-4 of its maximum, or the window had to
    /// be cut to the dispersion model's range.
    pub clipped: bool,
    pub error: f64,
}

/// Edge-to-peak probability ratio above which a window counts as clipped.
pub const CLIPPING_RATIO: f64 = 1e-4;

/// P(edge)/max P for a degenerate-approximation sum. P depends on ω only
/// through Φ, so the maximum is found by scanning Φ.
pub fn degenerate_edge_ratio(engine: &AmplitudeEngine<'_>, sum: &DegenerateSum, window: &RateWindow) -> Result<f64> {
    let phi_edge = engine.phi(engine.omega_from_r(window.lo))?.min(engine.phi(engine.omega_from_r(window.hi))?);
    let phi_top = engine.phi(engine.omega_from_r(1.0))?;
    let p = |phi: f64| -> Result<f64> { Ok(engine.degenerate_at_phi(sum, phi)?.probability()) };
    let edge = p(engine.phi(engine.omega_from_r(window.lo))?)?.max(p(engine.phi(engine.omega_from_r(window.hi))?)?);
    let lo = phi_edge.max(phi_top - 200.0);
    let n = 200;
    let mut max = edge;
    for i in 0..=n {
        max = max.max(p(lo + (phi_top - lo) * i as f64 / n as f64)?);
    }
    Ok(if max > 0.0 { edge / max } else { 0.0 })
}

fn direct_route(
    engine: &AmplitudeEngine<'_>,
    settings: &RateSettings,
    symmetric_spectrum: bool,
    p: impl Fn(f64) -> Result<f64>,
) -> Result<(RateResult, f64)> {
    settings.validate()?;
    let (window, cut) = settings.window.clipped_to(engine);
    let first_err: RefCell<Option<Error>> = RefCell::new(None);
    let max_p = Cell::new(0.0f64);
    let f = |omega: f64| -> f64 {
        if first_err.borrow().is_some() {
            return 0.0;
        }
        match p(omega) {
            Ok(v) => {
                max_p.set(max_p.get().max(v));
                v
            }
            Err(e) => {
                *first_err.borrow_mut() = Some(e);
                0.0
            }
        }
    };
    let centre = 0.5 * engine.omega_p();
    let (lo, hi) = (engine.omega_from_r(window.lo), engine.omega_from_r(window.hi));
    let out = if symmetric_spectrum && window.is_symmetric() {
        let r = gauss_kronrod(f, centre, hi, 64, 0.0, settings.rel_tolerance, settings.max_segments);
        crate::quadrature::Adaptive { value: 2.0 * r.value, error: 2.0 * r.error, ..r }
    } else {
        gauss_kronrod(f, lo, hi, 128, 0.0, settings.rel_tolerance, settings.max_segments)
    };
    if let Some(e) = first_err.into_inner() {
        return Err(e);
    }
    let edge = p(lo)?.max(p(hi)?);
    let max = max_p.get().max(edge);
    let ratio = if max > 0.0 { edge / max } else { 0.0 };
    Ok((
        RateResult {
            value: out.value.max(0.0),
            route: Route::DirectFrequencyIntegral,
            converged: out.converged,
            clipped: cut || ratio > CLIPPING_RATIO,
            error: out.error,
        },
        ratio,
    ))
}

/// R_c of the degenerate approximation by adaptive integration of P over ω_s.
pub fn pair_rate_direct(
    engine: &AmplitudeEngine<'_>,
    mode: &ModeSpec,
    focal: &FocalConfig,
    settings: &RateSettings,
) -> Result<RateResult> {
    let sum = engine.degenerate_sum(mode, focal)?;
    let p = |omega: f64| -> Result<f64> { Ok(engine.degenerate_at_phi(&sum, engine.phi(omega)?)?.probability()) };
    Ok(direct_route(engine, settings, true, p)?.0)
}

/// R_c of the full closed form by adaptive integration of P over ω_s.
pub fn pair_rate_full(
    engine: &AmplitudeEngine<'_>,
    mode: &ModeSpec,
    waists: &WaistConfig,
    settings: &RateSettings,
) -> Result<RateResult> {
    // With n_s = n_i and a mirror-symmetric window R_c is exchange symmetric;
    // a canonical waist order makes that hold bit for bit.
    let mut waists = *waists;
    if mode.is_symmetric() && settings.window.clipped_to(engine).0.is_symmetric() && waists.w_s > waists.w_i {
        core::mem::swap(&mut waists.w_s, &mut waists.w_i);
    }
    let waists = &waists;
    let symmetric = mode.is_symmetric() && waists.w_s == waists.w_i;
    let p = |omega: f64| -> Result<f64> { Ok(engine.full(mode, waists, omega)?.probability()) };
    Ok(direct_route(engine, settings, symmetric, p)?.0)
}

/// Gauss-Legendre nodes over the ω_s window with their exact Φ, sized so the
/// phase Φ·Δu changes by at most a few radians per panel for |Δu| ≤ 2.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaNodes {
    pub omega: Vec<f64>,
    pub weight: Vec<f64>,
    pub phi: Vec<f64>,
    pub window: RateWindow,
    pub clipped: bool,
}

const OMEGA_RULE_NODES: usize = 8;
const OMEGA_PANEL_PHASE: f64 = 3.0;

impl OmegaNodes {
    pub fn new(engine: &AmplitudeEngine<'_>, window: &RateWindow) -> Result<Self> {
        window.validate()?;
        let (window, clipped) = window.clipped_to(engine);
        let centre = 0.5 * engine.omega_p();
        let up = engine.omega_from_r(window.hi) - centre;
        let down = centre - engine.omega_from_r(window.lo);
        let mut out = Self { omega: Vec::new(), weight: Vec::new(), phi: Vec::new(), window, clipped };
        if window.is_symmetric() {
            out.push_half(engine, up, 2.0)?;
        } else {
            out.push_half(engine, up, 1.0)?;
            out.push_half(engine, down, 1.0)?;
        }
        Ok(out)
    }

    /// Nodes on [ω_p/2, ω_p/2 + extent]; the mirrored half has identical Φ.
    fn push_half(&mut self, engine: &AmplitudeEngine<'_>, extent: f64, scale: f64) -> Result<()> {
        let centre = 0.5 * engine.omega_p();
        let t = engine.temperature();
        let model = engine.model();
        let half_len = 0.5 * engine.crystal().length;
        let slope = |omega: f64| -> Result<f64> {
            let a = model.inverse_group_velocity(omega, t)?;
            let b = model.inverse_group_velocity(2.0 * centre - omega, t)?;
            Ok((half_len * (b - a)).abs())
        };
        let rule = GaussLegendre::new(OMEGA_RULE_NODES);
        let max_step = extent / 32.0;
        let end = centre + extent;
        let mut a = centre;
        while a < end {
            let mut step = max_step;
            for _ in 0..2 {
                let b = (a + step).min(end);
                let s = slope(a)?.max(slope(b)?);
                if s > 0.0 {
                    step = step.min(OMEGA_PANEL_PHASE / (2.0 * s));
                }
            }
            let b = if end - (a + step) < 1e-9 * step { end } else { a + step };
            for (x, w) in rule.mapped(a, b) {
                self.omega.push(x);
                self.weight.push(w * scale);
                self.phi.push(engine.phi(x)?);
            }
            a = b;
        }
        Ok(())
    }

    /// Q(Δu) = Σ w exp(iΦΔu).
    pub fn q(&self, delta_u: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&w, &phi) in self.weight.iter().zip(&self.phi) {
            acc += Complex64::from_polar(w, phi * delta_u);
        }
        acc
    }

    /// Total window width in rad/s.
    pub fn width(&self) -> f64 {
        self.weight.iter().sum()
    }
}

/// Q(T, Δu) evaluated directly over the rate window.
pub fn q_kernel(engine: &AmplitudeEngine<'_>, window: &RateWindow, delta_u: f64) -> Result<Complex64> {
    if !(delta_u.abs() <= 2.0) {
        return Err(Error::Contract(format!("|Δu| must be ≤ 2, got {delta_u}")));
    }
    Ok(OmegaNodes::new(engine, window)?.q(delta_u))
}

fn cubic_cardinals(ts: [f64; 4]) -> [[f64; 4]; 4] {
    // Row i: monomial coefficients (τ⁰..τ³) of the Lagrange basis ℓ_i.
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        let mut poly = [1.0, 0.0, 0.0, 0.0];
        let mut den = 1.0;
        for (k, &tk) in ts.iter().enumerate() {
            if k == i {
                continue;
            }
            let mut next = [0.0; 4];
            for d in 0..3 {
                next[d + 1] += poly[d];
                next[d] -= tk * poly[d];
            }
            poly = next;
            den *= ts[i] - tk;
        }
        for d in 0..4 {
            out[i][d] = poly[d] / den;
        }
    }
    out
}

/// Geometry-independent Q data on the Δu grid of the kernel route.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    temperature: f64,
    step: f64,
    /// Q(k·h), k = 0..=M.
    values: Vec<Complex64>,
    /// ∫₀² Q(Δ) ℓ_k(Δ) dΔ for the piecewise-cubic cardinal functions ℓ_k.
    weights: Vec<Complex64>,
    width: f64,
    window: RateWindow,
    clipped: bool,
}

impl QTable {
    pub fn new(engine: &AmplitudeEngine<'_>, settings: &RateSettings) -> Result<Self> {
        settings.validate()?;
        let nodes = OmegaNodes::new(engine, &settings.window)?;
        let m = settings.u_points - 1;
        let h = 2.0 / m as f64;
        let mut values = vec![Complex64::new(0.0, 0.0); m + 1];
        // Per panel j and monomial τ^d: ∫₀¹ Q(h(j+τ)) τ^d h dτ.
        let mut moments = vec![[Complex64::new(0.0, 0.0); 4]; m];
        for (&w, &phi) in nodes.weight.iter().zip(&nodes.phi) {
            let theta = phi * h;
            let nq = 8 + (2.0 * theta.abs()).ceil() as usize;
            let rule = GaussLegendre::new(nq);
            let mut local = [Complex64::new(0.0, 0.0); 4];
            for (tau, gw) in rule.mapped(0.0, 1.0) {
                let e = Complex64::from_polar(gw * h * w, theta * tau);
                local[0] += e;
                local[1] += e * tau;
                local[2] += e * (tau * tau);
                local[3] += e * (tau * tau * tau);
            }
            let step = Complex64::from_polar(1.0, theta);
            let mut e = Complex64::new(1.0, 0.0);
            for j in 0..m {
                values[j] += e * w;
                let mj = &mut moments[j];
                mj[0] += e * local[0];
                mj[1] += e * local[1];
                mj[2] += e * local[2];
                mj[3] += e * local[3];
                e *= step;
            }
            values[m] += e * w;
        }
        let interior = cubic_cardinals([-1.0, 0.0, 1.0, 2.0]);
        let first = cubic_cardinals([0.0, 1.0, 2.0, 3.0]);
        let last = cubic_cardinals([-2.0, -1.0, 0.0, 1.0]);
        let mut weights = vec![Complex64::new(0.0, 0.0); m + 1];
        for (j, mj) in moments.iter().enumerate() {
            let (base, card) = if j == 0 {
                (0, &first)
            } else if j + 1 == m {
                (j - 2, &last)
            } else {
                (j - 1, &interior)
            };
            for (i, row) in card.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for d in 0..4 {
                    acc += mj[d] * row[d];
                }
                weights[base + i] += acc;
            }
        }
        Ok(Self {
            temperature: engine.temperature(),
            step: h,
            values,
            weights,
            width: nodes.width(),
            window: nodes.window,
            clipped: nodes.clipped,
        })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of u-grid points the table was built for.
    pub fn u_points(&self) -> usize {
        self.values.len()
    }

    pub fn window(&self) -> RateWindow {
        self.window
    }

    /// Window width in rad/s, equal to Q(0).
    pub fn width(&self) -> f64 {
        self.width
    }

    /// Tabulated Q(k·h).
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Q(Δu) by cubic interpolation of the table, Hermitian for Δu < 0.
    pub fn interpolate(&self, delta_u: f64) -> Complex64 {
        let x = delta_u.abs().min(2.0) / self.step;
        let m = self.values.len() - 1;
        let j = (x.floor() as usize).min(m - 1);
        let base = j.clamp(1, m - 2) - 1;
        let ts = [0.0, 1.0, 2.0, 3.0].map(|t| t + base as f64);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..4 {
            let mut l = 1.0;
            for k in 0..4 {
                if k != i {
                    l *= (x - ts[k]) / (ts[i] - ts[k]);
                }
            }
            acc += self.values[base + i] * l;
        }
        if delta_u < 0.0 {
            acc.conj()
        } else {
            acc
        }
    }

    /// ∫∫ F(u₁)F*(u₂)Q(u₁−u₂) from F sampled at u_j = −1 + j·h.
    pub fn rate_from_samples(&self, f: &[Complex64]) -> f64 {
        let n = f.len();
        assert_eq!(n, self.values.len(), "samples must match the table grid");
        let h = self.step;
        let mut total = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let overlap = n - k;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..overlap {
                s += f[j + k] * f[j].conj();
            }
            let p = |j: usize| f[j + k] * f[j].conj();
            let a = if overlap >= 6 {
                s - (p(0) + p(overlap - 1)) * (5.0 / 8.0) + (p(1) + p(overlap - 2)) * (1.0 / 6.0)
                    - (p(2) + p(overlap - 3)) * (1.0 / 24.0)
            } else if overlap >= 2 {
                s - (p(0) + p(overlap - 1)) * 0.5
            } else {
                Complex64::new(0.0, 0.0)
            };
            total += self.weights[k] * (a * h);
        }
        (2.0 * total.re).max(0.0)
    }

    /// ∫∫ F(u₁)F*(u₂)Q(u₁−u₂) for an arbitrary smooth F.
    pub fn rate_with(&self, f: impl Fn(f64) -> Complex64) -> f64 {
        let samples: Vec<Complex64> = (0..self.values.len()).map(|j| f(-1.0 + j as f64 * self.step)).collect();
        self.rate_from_samples(&samples)
    }
}

/// R_c of the degenerate approximation through the phase kernel, without the
/// clipping diagnostic. Used by the optimiser.
pub fn kernel_rate_value(table: &QTable, sum: &DegenerateSum) -> f64 {
    table.rate_with(|u| sum.eval(u))
}

/// R_c of the degenerate approximation through the phase kernel.
pub fn pair_rate_kernel(
    engine: &AmplitudeEngine<'_>,
    table: &QTable,
    mode: &ModeSpec,
    focal: &FocalConfig,
) -> Result<RateResult> {
    if table.temperature != engine.temperature() {
        return Err(Error::Contract(format!(
            "Q table built at {} °C used at {} °C",
            table.temperature,
            engine.temperature()
        )));
    }
    let sum = engine.degenerate_sum(mode, focal)?;
    let value = kernel_rate_value(table, &sum);
    let ratio = degenerate_edge_ratio(engine, &sum, &table.window)?;
    Ok(RateResult {
        value,
        route: Route::PhaseKernel,
        converged: true,
        clipped: table.clipped || ratio > CLIPPING_RATIO,
        error: 0.0,
    })
}

/// How the pump waist is chosen at each (w_s, w_i) point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PumpWaistPolicy {
    /// Maximise R_c over w_p ∈ [lo, hi] (metres) at every grid point.
    Optimize { lo: f64, hi: f64 },
    /// Use the given w_p everywhere.
    Fixed(f64),
}

impl Default for PumpWaistPolicy {
    fn default() -> Self {
        PumpWaistPolicy::Optimize { lo: 5e-6, hi: 200e-6 }
    }
}

/// Range and density of one waist axis, log-spaced.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct WaistAxis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl WaistAxis {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.lo > 0.0 && self.hi > self.lo && self.points >= 2) {
            return Err(Error::Contract(format!("invalid waist axis {self:?}")));
        }
        Ok(log_space(self.lo, self.hi, self.points))
    }
}

pub(crate) fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else if i == 0 {
                lo
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Maximiser of a unimodal function of ln x on [lo, hi].
pub(crate) fn golden_max(lo: f64, hi: f64, rel_tol: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c.exp())?;
    let mut fd = f(d.exp())?;
    while (b - a) > rel_tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c.exp())?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d.exp())?;
        }
    }
    Ok(if fc >= fd { (c.exp(), fc) } else { (d.exp(), fd) })
}

/// R_c over a (w_s, w_i) grid from the full closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct WaistSurface {
    pub w_s: Vec<f64>,
    pub w_i: Vec<f64>,
    /// Row-major over w_s: values[i_s * w_i.len() + i_i].
    pub values: Vec<f64>,
    /// Pump waist used at each grid point.
    pub w_p: Vec<f64>,
    /// R_c divided by its grid maximum.
    pub normalized: Vec<f64>,
    /// (w_s, w_i, w_p, R_c) of the refined optimum.
    pub argmax: (f64, f64, f64, f64),
    pub converged: bool,
}

fn full_rate_value(
    engine: &AmplitudeEngine<'_>,
    mode: &ModeSpec,
    w: &WaistConfig,
    settings: &RateSettings,
) -> Result<(f64, bool)> {
    let r = pair_rate_full(engine, mode, w, settings)?;
    Ok((r.value, r.converged))
}

fn best_pump(
    engine: &AmplitudeEngine<'_>,
    mode: &ModeSpec,
    w_s: f64,
    w_i: f64,
    policy: &PumpWaistPolicy,
    settings: &RateSettings,
) -> Result<(f64, f64, bool)> {
    match *policy {
        PumpWaistPolicy::Fixed(w_p) => {
            let (v, c) = full_rate_value(engine, mode, &WaistConfig::new(w_p, w_s, w_i)?, settings)?;
            Ok((w_p, v, c))
        }
        PumpWaistPolicy::Optimize { lo, hi } => {
            let mut conv = true;
            let (w_p, v) = golden_max(lo, hi, 2e-3, |w_p| {
                let (v, c) = full_rate_value(engine, mode, &WaistConfig::new(w_p, w_s, w_i)?, settings)?;
                conv &= c;
                Ok(v)
            })?;
            Ok((w_p, v, conv))
        }
    }
}

/// Local maximiser of R_c over (w_s, w_i), and over w_p when the policy asks
/// for it, by cyclic golden-section searches in log space from `start`.
pub fn waist_optimum(
    engine: &AmplitudeEngine<'_>,
    mode: &ModeSpec,
    start: (f64, f64, f64),
    policy: &PumpWaistPolicy,
    settings: &RateSettings,
) -> Result<(f64, f64, f64, f64)> {
    let rate = |w: [f64; 3]| -> Result<f64> {
        Ok(full_rate_value(engine, mode, &WaistConfig::new(w[0], w[1], w[2])?, settings)?.0)
    };
    let (first, (p_lo, p_hi)) = match *policy {
        PumpWaistPolicy::Fixed(w_p) => (1, (w_p, w_p)),
        PumpWaistPolicy::Optimize { lo, hi } => (0, (lo, hi)),
    };
    let mut w = [start.2, start.0, start.1];
    if first == 1 {
        w[0] = p_lo;
    }
    let mut best = rate(w)?;
    for _ in 0..8 {
        let prev = w;
        for c in first..3 {
            let (mut lo, mut hi) = (w[c] / 1.5, w[c] * 1.5);
            if c == 0 {
                lo = lo.max(p_lo);
                hi = hi.min(p_hi);
            }
            let (x, v) = golden_max(lo, hi, 2e-3, |x| {
                let mut t = w;
                t[c] = x;
                rate(t)
            })?;
            if v > best {
                best = v;
                w[c] = x;
            }
        }
        if (0..3).all(|c| (w[c] / prev[c] - 1.0).abs() < 2e-3) {
            break;
        }
    }
    Ok((w[1], w[2], w[0], best))
}

/// R_c(w_s, w_i) from the full closed form, normalised to its grid maximum,
/// with the optimum refined from the best grid point.
#[allow(clippy::too_many_arguments)]
pub fn waist_surface<E: Executor>(
    exec: &E,
    engine: &AmplitudeEngine<'_>,
    mode: &ModeSpec,
    w_s_axis: &WaistAxis,
    w_i_axis: &WaistAxis,
    policy: &PumpWaistPolicy,
    settings: &RateSettings,
    refine: bool,
) -> Result<WaistSurface> {
    let w_s = w_s_axis.values()?;
    let w_i = w_i_axis.values()?;
    let points: Vec<(f64, f64)> = w_s.iter().flat_map(|&a| w_i.iter().map(move |&b| (a, b))).collect();
    let out = exec.map(points, |(a, b)| best_pump(engine, mode, a, b, policy, settings));
    let mut values = Vec::with_capacity(out.len());
    let mut pumps = Vec::with_capacity(out.len());
    let mut converged = true;
    for r in out {
        let (p, v, c) = r?;
        values.push(v);
        pumps.push(p);
        converged &= c;
    }
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = k;
        }
    }
    let max = values[best];
    let normalized = values.iter().map(|v| if max > 0.0 { v / max } else { 0.0 }).collect();
    let grid_best = (w_s[best / w_i.len()], w_i[best % w_i.len()]);
    let argmax = if refine {
        let r = waist_optimum(engine, mode, (grid_best.0, grid_best.1, pumps[best]), policy, settings)?;
        if r.3 >= max {
            r
        } else {
            (grid_best.0, grid_best.1, pumps[best], max)
        }
    } else {
        (grid_best.0, grid_best.1, pumps[best], max)
    };
    Ok(WaistSurface { w_s, w_i, values, w_p: pumps, normalized, argmax, converged })
}

/// Angular frequency of vacuum wavelength λ.
pub fn omega_of_wavelength(lambda: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / lambda
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{CrystalSpec, DispersionModel};
    use crate::quadrature::QuadratureSettings;
    use crate::Sequential;

    fn setup() -> (DispersionModel, CrystalSpec) {
        (DispersionModel::ktp_qpm_calibrated(), CrystalSpec::ppktp_405())
    }

    #[test]
    fn cardinals_reproduce_cubics() {
        let c = cubic_cardinals([-1.0, 0.0, 1.0, 2.0]);
        let p = |t: f64| 0.3 - 1.2 * t + 0.7 * t * t + 0.25 * t * t * t;
        let ys = [-1.0, 0.0, 1.0, 2.0].map(p);
        for d in 0..4 {
            let coef: f64 = (0..4).map(|i| ys[i] * c[i][d]).sum();
            let expect = [0.3, -1.2, 0.7, 0.25][d];
            assert!((coef - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn grid_and_spectrum_normalisation() {
        let (m, c) = setup();
        let e = AmplitudeEngine::new(&m, c, QuadratureSettings::default()).unwrap();
        let grid = FrequencyGrid { start: 0.9, stop: 1.1, points: 41 };
        let s = spectrum(
            &Sequential,
            &e,
            &ModeSpec::symmetric(1, 1),
            &FocalConfig::new(1.0, 1.0).unwrap(),
            &grid,
            Normalization::GlobalMax,
        )
        .unwrap();
        let max = s.probability.iter().copied().fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
        for i in 0..s.probability.len() {
            let j = s.probability.len() - 1 - i;
            assert!((s.probability[i] - s.probability[j]).abs() < 1e-9);
        }
        assert!(FrequencyGrid { start: 1.2, stop: 1.1, points: 3 }.validate().is_err());
    }

    #[test]
    fn q_kernel_properties() {
        let (m, c) = setup();
        let e = AmplitudeEngine::new(&m, c, QuadratureSettings::default()).unwrap();
        let w = RateWindow::default();
        let nodes = OmegaNodes::new(&e, &w).unwrap();
        let width = e.omega_from_r(w.hi) - e.omega_from_r(w.lo);
        assert!((nodes.q(0.0).re - width).abs() < 1e-12 * width);
        assert_eq!(nodes.q(0.0).im, 0.0);
        for d in [0.01, 0.37, 1.9] {
            assert_eq!(nodes.q(-d), nodes.q(d).conj());
        }
        assert!(nodes.q(2.0).norm() < nodes.q(0.1).norm());
        assert!(q_kernel(&e, &w, 2.5).is_err());
    }

    #[test]
    fn kernel_matches_direct() {
        let (m, c) = setup();
        let e = AmplitudeEngine::new(&m, c, QuadratureSettings::default()).unwrap();
        let s = RateSettings::default();
        let table = QTable::new(&e, &s).unwrap();
        for (mode, f) in [(ModeSpec::symmetric(0, 0), (1.0, 1.0)), (ModeSpec::symmetric(2, 1), (0.4, 3.0))] {
            let focal = FocalConfig::new(f.0, f.1).unwrap();
            let k = pair_rate_kernel(&e, &table, &mode, &focal).unwrap();
            let d = pair_rate_direct(&e, &mode, &focal, &s).unwrap();
            assert!(d.converged);
            assert!(!k.clipped && !d.clipped);
            assert!((k.value / d.value - 1.0).abs() < 1e-4, "{} vs {}", k.value, d.value);
        }
    }

    #[test]
    fn golden_finds_peak() {
        let (x, v) = golden_max(0.1, 10.0, 1e-6, |x| Ok(-(x.ln() - 0.5).powi(2))).unwrap();
        assert!((x.ln() - 0.5).abs() < 1e-5);
        assert!(v <= 0.0);
    }
}
