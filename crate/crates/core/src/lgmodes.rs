//! Laguerre-Gaussian special functions and the closed-form coefficients of
//! the coincidence-amplitude sums.
//!
//! Only l_s + l_i = 0 pairs are representable: [`ModeSpec`] stores the common
//! azimuthal magnitude `l` (l_s = l, l_i = −l) and the two radial indices.
//! Every coefficient depends on |l| only.

use alloc::format;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use num_complex::Complex64;

use crate::{Error, Result};

/// Default cap on l and the radial indices.
pub const DEFAULT_INDEX_CAP: u32 = 8;

const FACTORIAL_TABLE_LEN: usize = 65;

const fn factorial_table() -> [f64; FACTORIAL_TABLE_LEN] {
    let mut t = [1.0; FACTORIAL_TABLE_LEN];
    let mut i = 1;
    while i < FACTORIAL_TABLE_LEN {
        t[i] = t[i - 1] * i as f64;
        i += 1;
    }
    t
}

static FACTORIALS: [f64; FACTORIAL_TABLE_LEN] = factorial_table();

/// ln n! for n ≤ 64.
///
/// # Panics
/// For n > 64.
pub fn ln_factorial(n: u32) -> f64 {
    FACTORIALS[n as usize].ln()
}

/// Associated Laguerre polynomial L_n^α(x) by the three-term recurrence.
pub fn assoc_laguerre(n: u32, alpha: u32, x: f64) -> f64 {
    let a = f64::from(alpha);
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let kf = f64::from(k);
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Projected signal/idler LG pair with l_s = l, l_i = −l.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModeSpec {
    pub l: u32,
    pub n_s: u32,
    pub n_i: u32,
}

impl ModeSpec {
    pub fn new(l: u32, n_s: u32, n_i: u32) -> Self {
        Self { l, n_s, n_i }
    }

    /// Equal radial indices n_s = n_i = n.
    pub fn symmetric(l: u32, n: u32) -> Self {
        Self { l, n_s: n, n_i: n }
    }

    pub fn is_symmetric(&self) -> bool {
        self.n_s == self.n_i
    }

    /// True when any index is above `cap`; callers should warn that the
    /// u-integrands get strongly oscillatory.
    pub fn exceeds_cap(&self, cap: u32) -> bool {
        self.l > cap || self.n_s > cap || self.n_i > cap
    }

    fn check_factorial_range(&self) -> Result<()> {
        if self.l + self.n_s + self.n_i > 60 {
            return Err(Error::Contract(format!("mode indices too large: {self:?}")));
        }
        Ok(())
    }

    fn check_sum_indices(&self, m_s: u32, m_i: u32) -> Result<()> {
        self.check_factorial_range()?;
        if m_s > self.n_s || m_i > self.n_i {
            return Err(Error::Contract(format!(
                "summation index (m_s, m_i) = ({m_s}, {m_i}) outside 0..={}, 0..={}",
                self.n_s, self.n_i
            )));
        }
        Ok(())
    }
}

/// Physical beam waists, metres.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WaistConfig {
    pub w_p: f64,
    pub w_s: f64,
    pub w_i: f64,
}

impl WaistConfig {
    pub fn new(w_p: f64, w_s: f64, w_i: f64) -> Result<Self> {
        let w = Self { w_p, w_s, w_i };
        w.validate()?;
        Ok(w)
    }

    pub fn uniform(w: f64) -> Result<Self> {
        Self::new(w, w, w)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.w_p, self.w_s, self.w_i].iter().all(|w| *w > 0.0 && w.is_finite()) {
            Ok(())
        } else {
            Err(Error::Contract(format!("beam waists must be positive: {self:?}")))
        }
    }

    /// w_p²w_s² + w_p²w_i² + w_s²w_i².
    pub fn pair_sum(&self) -> f64 {
        let (p, s, i) = (self.w_p * self.w_p, self.w_s * self.w_s, self.w_i * self.w_i);
        p * s + p * i + s * i
    }
}

/// Dimensionless focal parameters f_p = L/(k_p w_p²), f_si^d = L/(k_d w_si²).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FocalConfig {
    pub f_p: f64,
    pub f_si: f64,
}

impl FocalConfig {
    pub fn new(f_p: f64, f_si: f64) -> Result<Self> {
        let f = Self { f_p, f_si };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.f_p > 0.0 && self.f_si > 0.0 && self.f_p.is_finite() && self.f_si.is_finite() {
            Ok(())
        } else {
            Err(Error::Contract(format!("focal parameters must be positive: {self:?}")))
        }
    }

    /// w_p = √(L/(k_p f_p)), w_s = w_i = √(L/(k_d f_si^d)).
    pub fn to_waists(&self, length: f64, k_p: f64, k_d: f64) -> WaistConfig {
        let w_p = (length / (k_p * self.f_p)).sqrt();
        let w_si = (length / (k_d * self.f_si)).sqrt();
        WaistConfig { w_p, w_s: w_si, w_i: w_si }
    }
}

/// Focal parameter L/(k w²).
pub fn focal_parameter(length: f64, k: f64, w: f64) -> f64 {
    length / (k * w * w)
}

/// g = 1 + i f u.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexBeamParam {
    pub f: f64,
    pub u: f64,
}

impl ComplexBeamParam {
    pub fn new(f: f64, u: f64) -> Self {
        Self { f, u }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(1.0, self.f * self.u)
    }
}

/// Radial LG amplitude in x-space including the Gouy factor (g*/g)^n.
pub fn lg_amplitude_x(n: u32, l: u32, w: f64, r: f64, z: f64, k: f64) -> Complex64 {
    let g = Complex64::new(1.0, 2.0 * z / (k * w * w));
    let norm = (0.5 * (ln_factorial(n) - ln_factorial(n + l)) - 0.5 * PI.ln()).exp();
    let gouy = (g.conj() / g).powu(n);
    let envelope = (Complex64::new(2.0_f64.sqrt(), 0.0) / (g * w)).powu(l + 1);
    let gauss = (-(r * r) / (g * w * w)).exp();
    let lag = assoc_laguerre(n, l, 2.0 * r * r / (w * w * g.norm_sqr()));
    gouy * envelope * gauss * (norm * r.powi(l as i32) * lag)
}

fn comb_ln(l: u32, n_s: u32, n_i: u32, m_s: u32, m_i: u32) -> f64 {
    let den = |n: u32, m: u32| ln_factorial(n - m) + ln_factorial(l + m) + ln_factorial(m);
    let (a, b) = (den(n_s, m_s), den(n_i, m_i));
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let (p, q) = (ln_factorial(n_s) + ln_factorial(n_s + l), ln_factorial(n_i) + ln_factorial(n_i + l));
    let (p, q) = if p <= q { (p, q) } else { (q, p) };
    0.5 * (p + q) + ln_factorial(l + m_s + m_i) - (a + b)
}

fn parity(k: u32) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// α^{l,n_s,n_i}_{m_s,m_i}: the waist-dependent coefficient of the full sum.
pub fn alpha_coeff(mode: &ModeSpec, m_s: u32, m_i: u32, waists: &WaistConfig, length: f64) -> Result<f64> {
    mode.check_sum_indices(m_s, m_i)?;
    waists.validate()?;
    let l = mode.l;
    let big_m = f64::from(l + m_s + m_i + 1);
    let ln_abs = length.ln() + (f64::from(l + m_s + m_i) - 1.5) * 2.0_f64.ln() - 2.5 * PI.ln()
        + comb_ln(l, mode.n_s, mode.n_i, m_s, m_i)
        + (2.0 * big_m - 1.0) * waists.w_p.ln()
        + f64::from(2 * m_i + l + 1) * waists.w_s.ln()
        + f64::from(2 * m_s + l + 1) * waists.w_i.ln()
        - big_m * waists.pair_sum().ln();
    Ok(parity(m_s + m_i) * ln_abs.exp())
}

/// g*(g_p, g_s, g_i): waist-weighted combination of the three beam parameters.
pub fn g_star(
    g_p: ComplexBeamParam,
    g_s: ComplexBeamParam,
    g_i: ComplexBeamParam,
    waists: &WaistConfig,
) -> Result<Complex64> {
    if g_p.u != g_s.u || g_p.u != g_i.u {
        return Err(Error::Contract(format!(
            "beam parameters evaluated at different u: {}, {}, {}",
            g_p.u, g_s.u, g_i.u
        )));
    }
    Ok(g_star_values(g_p.value(), g_s.value(), g_i.value(), waists))
}

fn g_star_values(gp: Complex64, gs: Complex64, gi: Complex64, waists: &WaistConfig) -> Complex64 {
    let (p, s, i) = (waists.w_p * waists.w_p, waists.w_s * waists.w_s, waists.w_i * waists.w_i);
    (gp * gs.conj() * (p * s) + gp * gi.conj() * (p * i) + gs.conj() * gi.conj() * (s * i)) / (p * s + p * i + s * i)
}

/// Coefficients of g = conj(g*) = 1 + i(f₁+f₂)u − f₁f₂u², i.e. g = (1+if₁u)(1+if₂u).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocalFactorization {
    /// f₁ + f₂
    pub sum: f64,
    /// f₁·f₂
    pub product: f64,
}

impl FocalFactorization {
    pub fn new(waists: &WaistConfig, length: f64, k_p: f64, k_s: f64, k_i: f64) -> Self {
        let (p, s, i) = (waists.w_p * waists.w_p, waists.w_s * waists.w_s, waists.w_i * waists.w_i);
        let w = waists.pair_sum();
        let sum = length / w * ((p + i) / k_s + (p + s) / k_i - (s + i) / k_p);
        let product = length * length * (k_p - k_s - k_i) / (k_p * k_s * k_i * w);
        Self { sum, product }
    }

    /// (f₁, f₂) with f₁ ≥ f₂.
    pub fn roots(&self) -> (f64, f64) {
        let disc = (self.sum * self.sum - 4.0 * self.product).max(0.0).sqrt();
        let f1 = 0.5 * (self.sum + disc);
        let f2 = if f1 != 0.0 { self.product / f1 } else { 0.5 * (self.sum - disc) };
        (f1, f2)
    }
}

/// G^{l,n_s,n_i}_{m_s,m_i}(u) for the full (non-degenerate) sum.
pub fn g_term(
    mode: &ModeSpec,
    m_s: u32,
    m_i: u32,
    g_p: ComplexBeamParam,
    g_s: ComplexBeamParam,
    g_i: ComplexBeamParam,
    waists: &WaistConfig,
) -> Result<Complex64> {
    mode.check_sum_indices(m_s, m_i)?;
    let gs = g_star(g_p, g_s, g_i, waists)?;
    Ok(g_term_values(mode, m_s, m_i, g_p.value(), g_s.value(), g_i.value(), gs))
}

/// [`g_term`] with precomputed beam parameters and g*.
pub fn g_term_values(
    mode: &ModeSpec,
    m_s: u32,
    m_i: u32,
    gp: Complex64,
    gs: Complex64,
    gi: Complex64,
    gstar: Complex64,
) -> Complex64 {
    let l = mode.l;
    let num = gp.powu(m_s + m_i + l) * gs.powu(mode.n_s - m_s) * gi.powu(mode.n_i - m_i);
    let den = gs.conj().powi(mode.n_s as i32 - m_i as i32)
        * gi.conj().powi(mode.n_i as i32 - m_s as i32)
        * gstar.powu(m_s + m_i + l + 1);
    num / den
}

/// G^d: g_p^{m_s+m_i+l} (g^d)^{2n−m_s−m_i} / (g^{d*})^{2n+l+1}.
pub fn gd_term(l: u32, n_si: u32, m_s: u32, m_i: u32, g_p: Complex64, g_d: Complex64) -> Complex64 {
    gd_term_by_sum(l, n_si, m_s + m_i, g_p, g_d)
}

/// G^d depends on (m_s, m_i) only through s = m_s + m_i.
pub fn gd_term_by_sum(l: u32, n_si: u32, s: u32, g_p: Complex64, g_d: Complex64) -> Complex64 {
    g_p.powu(s + l) * g_d.powu(2 * n_si - s) / g_d.conj().powu(2 * n_si + l + 1)
}

fn check_symmetric(mode: &ModeSpec) -> Result<()> {
    if mode.n_s != mode.n_i {
        return Err(Error::Contract(format!(
            "degenerate approximation needs n_s == n_i, got {} and {}",
            mode.n_s, mode.n_i
        )));
    }
    Ok(())
}

/// ζ^{l,n}_{m_s,m_i} (signed combinatorial factor of β).
pub fn zeta_coeff(l: u32, n_si: u32, m_s: u32, m_i: u32) -> Result<f64> {
    let mode = ModeSpec::symmetric(l, n_si);
    mode.check_sum_indices(m_s, m_i)?;
    Ok(parity(m_s + m_i) * comb_ln(l, n_si, n_si, m_s, m_i).exp())
}

/// √(Lk_p)/(2π)^{5/2} · √f_p / (1 + f_p/f_si)^{s+l+1}, s = m_s + m_i.
pub fn beta_prefactor(focal: &FocalConfig, length: f64, k_p: f64, l: u32, s: u32) -> f64 {
    let ratio = 1.0 + focal.f_p / focal.f_si;
    (length * k_p).sqrt() / (2.0 * PI).powf(2.5) * focal.f_p.sqrt() / ratio.powi((s + l + 1) as i32)
}

/// β^{l,n}_{m_s,m_i} of the degenerate approximation.
pub fn beta_coeff(mode: &ModeSpec, m_s: u32, m_i: u32, focal: &FocalConfig, length: f64, k_p: f64) -> Result<f64> {
    check_symmetric(mode)?;
    focal.validate()?;
    let zeta = zeta_coeff(mode.l, mode.n_s, m_s, m_i)?;
    Ok(beta_prefactor(focal, length, k_p, mode.l, m_s + m_i) * zeta)
}

/// h(k_p, k_d, γ) = 2(k_p(1+γ²) − k_d)/(k_p(1+2γ²)), the ratio of the
/// approximate f₁ to f_si^d.
pub fn h_bound(k_p: f64, k_d: f64, gamma: f64) -> f64 {
    let g2 = gamma * gamma;
    2.0 * (k_p * (1.0 + g2) - k_d) / (k_p * (1.0 + 2.0 * g2))
}
