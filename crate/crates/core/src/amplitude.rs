//! Coincidence amplitude C(ω_s) for an LG signal/idler pair.
//!
//! Four fidelity levels share one engine:
//!
//! * full closed-form double sum with individual signal/idler waists,
//! * degenerate approximation, which needs only (f_p, f_si^d),
//! * the same with Φ replaced by its quadratic expansion about Δk = 0,
//! * a brute-force x-space integral used as an oracle.
//!
//! The pump spectrum is a unit constant and every dropped physical prefactor
//! is folded into one arbitrary-units constant shared by all methods.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::dispersion::{CrystalSpec, DispersionModel, QuadraticPhase};
use crate::lgmodes::{
    alpha_coeff, beta_prefactor, focal_parameter, lg_amplitude_x, zeta_coeff, FocalConfig, ModeSpec, WaistConfig,
};
use crate::quadrature::{GaussLegendre, QuadratureSettings, UIntegrator};
use crate::{Error, Result};

/// Fidelity level of an amplitude evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    FullClosedForm,
    DegenerateApprox,
    QuadraticKz,
    NumericOracle,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::FullClosedForm => "full",
            Method::DegenerateApprox => "degenerate",
            Method::QuadraticKz => "quadratic",
            Method::NumericOracle => "oracle",
        }
    }
}

/// Beam geometry: physical waists or dimensionless focal parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    Waists(WaistConfig),
    Focal(FocalConfig),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeRequest {
    pub mode: ModeSpec,
    pub geometry: Geometry,
    /// Signal angular frequency, rad/s.
    pub omega_s: f64,
    pub method: Method,
}

impl AmplitudeRequest {
    pub fn validate(&self) -> Result<()> {
        match (self.method, &self.geometry) {
            (Method::DegenerateApprox | Method::QuadraticKz, Geometry::Focal(f)) => {
                if !self.mode.is_symmetric() {
                    return Err(Error::Contract(format!(
                        "{} method needs n_s == n_i, got {:?}",
                        self.method.tag(),
                        self.mode
                    )));
                }
                f.validate()
            }
            (Method::FullClosedForm | Method::NumericOracle, Geometry::Waists(w)) => w.validate(),
            (m, _) => Err(Error::Contract(format!("{} method got the wrong geometry kind", m.tag()))),
        }
    }
}

/// An evaluated amplitude with its quadrature diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitude {
    pub value: Complex64,
    pub error: f64,
    pub converged: bool,
}

impl Amplitude {
    pub fn probability(&self) -> f64 {
        self.value.norm_sqr()
    }
}

/// Cost guard of the oracle: largest l and radial index accepted.
pub const ORACLE_INDEX_CAP: u32 = 2;

/// Radial quadrature of the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    /// r is truncated at this multiple of the largest local beam radius w·|g|.
    pub truncation: f64,
    pub radial_panels: usize,
    pub radial_nodes: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self { truncation: 10.0, radial_panels: 16, radial_nodes: 16 }
    }
}

/// Σ α·G(u) for the full closed form.
#[derive(Debug, Clone)]
pub struct FullSum {
    mode: ModeSpec,
    waists: WaistConfig,
    terms: Vec<(u32, u32, f64)>,
    f_p: f64,
    f_s: f64,
    f_i: f64,
}

impl FullSum {
    pub fn new(mode: &ModeSpec, waists: &WaistConfig, length: f64, k_p: f64, k_s: f64, k_i: f64) -> Result<Self> {
        let mut terms = Vec::with_capacity(((mode.n_s + 1) * (mode.n_i + 1)) as usize);
        for m_s in 0..=mode.n_s {
            for m_i in 0..=mode.n_i {
                terms.push((m_s, m_i, alpha_coeff(mode, m_s, m_i, waists, length)?));
            }
        }
        Ok(Self {
            mode: *mode,
            waists: *waists,
            terms,
            f_p: focal_parameter(length, k_p, waists.w_p),
            f_s: focal_parameter(length, k_s, waists.w_s),
            f_i: focal_parameter(length, k_i, waists.w_i),
        })
    }

    pub fn eval(&self, u: f64) -> Complex64 {
        let gp = Complex64::new(1.0, self.f_p * u);
        let gs = Complex64::new(1.0, self.f_s * u);
        let gi = Complex64::new(1.0, self.f_i * u);
        let (p, s, i) =
            (self.waists.w_p * self.waists.w_p, self.waists.w_s * self.waists.w_s, self.waists.w_i * self.waists.w_i);
        let gstar = (gp * gs.conj() * (p * s) + gp * gi.conj() * (p * i) + gs.conj() * gi.conj() * (s * i))
            / (p * s + p * i + s * i);
        let l = self.mode.l;
        let mut sum = Complex64::new(0.0, 0.0);
        for &(m_s, m_i, alpha) in &self.terms {
            let num = gp.powu(m_s + m_i + l) * gs.powu(self.mode.n_s - m_s) * gi.powu(self.mode.n_i - m_i);
            let den = gs.conj().powi(self.mode.n_s as i32 - m_i as i32)
                * gi.conj().powi(self.mode.n_i as i32 - m_s as i32)
                * gstar.powu(m_s + m_i + l + 1);
            sum += num / den * alpha;
        }
        sum
    }
}

/// Σ β·G^d(u) of the degenerate approximation, grouped by s = m_s + m_i.
#[derive(Debug, Clone)]
pub struct DegenerateSum {
    l: u32,
    n: u32,
    coeffs: Vec<f64>,
    f_p: f64,
    f_d: f64,
}

impl DegenerateSum {
    pub fn new(mode: &ModeSpec, focal: &FocalConfig, length: f64, k_p: f64) -> Result<Self> {
        if !mode.is_symmetric() {
            return Err(Error::Contract(format!("degenerate approximation needs n_s == n_i, got {mode:?}")));
        }
        focal.validate()?;
        let n = mode.n_s;
        let mut coeffs = Vec::with_capacity(2 * n as usize + 1);
        for s in 0..=2 * n {
            let lo = s.saturating_sub(n);
            let hi = s.min(n);
            let mut zeta = 0.0;
            for m_s in lo..=hi {
                zeta += zeta_coeff(mode.l, n, m_s, s - m_s)?;
            }
            coeffs.push(beta_prefactor(focal, length, k_p, mode.l, s) * zeta);
        }
        Ok(Self { l: mode.l, n, coeffs, f_p: focal.f_p, f_d: focal.f_si })
    }

    /// Σ_{m_s+m_i=s} β for s = 0..=2n.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, u: f64) -> Complex64 {
        let gp = Complex64::new(1.0, self.f_p * u);
        let gd = Complex64::new(1.0, self.f_d * u);
        let den = gd.conj().powu(2 * self.n + self.l + 1);
        let ratio = gp / gd;
        let mut term = gp.powu(self.l) * gd.powu(2 * self.n);
        let mut sum = Complex64::new(0.0, 0.0);
        for &c in &self.coeffs {
            sum += term * c;
            term *= ratio;
        }
        sum / den
    }
}

/// Shared state for amplitude evaluations at one crystal temperature.
#[derive(Debug, Clone)]
pub struct AmplitudeEngine<'a> {
    model: &'a DispersionModel,
    crystal: CrystalSpec,
    integrator: UIntegrator,
    omega_p: f64,
    k_p: f64,
    k_d: f64,
}

impl<'a> AmplitudeEngine<'a> {
    pub fn new(model: &'a DispersionModel, crystal: CrystalSpec, settings: QuadratureSettings) -> Result<Self> {
        crystal.validate()?;
        model.check_temperature(crystal.temperature)?;
        let omega_p = crystal.pump_omega();
        let k_p = model.wavenumber(omega_p, crystal.temperature)?;
        let k_d = model.wavenumber(0.5 * omega_p, crystal.temperature)?;
        Ok(Self { model, crystal, integrator: UIntegrator::new(settings)?, omega_p, k_p, k_d })
    }

    pub fn model(&self) -> &DispersionModel {
        self.model
    }

    pub fn crystal(&self) -> &CrystalSpec {
        &self.crystal
    }

    pub fn temperature(&self) -> f64 {
        self.crystal.temperature
    }

    pub fn integrator(&self) -> &UIntegrator {
        &self.integrator
    }

    pub fn omega_p(&self) -> f64 {
        self.omega_p
    }

    pub fn k_p(&self) -> f64 {
        self.k_p
    }

    /// Degenerate wave number k(ω_p/2).
    pub fn k_d(&self) -> f64 {
        self.k_d
    }

    /// ω_s for normalised frequency ω_r.
    pub fn omega_from_r(&self, omega_r: f64) -> f64 {
        0.5 * omega_r * self.omega_p
    }

    /// Exact Φ(ω_s) at the engine temperature.
    pub fn phi(&self, omega_s: f64) -> Result<f64> {
        Ok(self.model.phase_mismatch(omega_s, self.crystal.temperature, &self.crystal)?.phi)
    }

    pub fn quadratic_phase(&self) -> Result<QuadraticPhase> {
        self.model.quadratic_expansion(self.crystal.temperature, &self.crystal)
    }

    /// Quadratic Φ, expanded about whichever Δk = 0 root lies on the same side
    /// of ω_p/2 as ω_s.
    pub fn phi_quadratic(&self, quad: &QuadraticPhase, omega_s: f64) -> f64 {
        let hi = if omega_s >= 0.5 * self.omega_p { omega_s } else { self.omega_p - omega_s };
        quad.phi(hi)
    }

    /// Waists realising `focal` with w_s = w_i.
    pub fn waists_from_focal(&self, focal: &FocalConfig) -> WaistConfig {
        focal.to_waists(self.crystal.length, self.k_p, self.k_d)
    }

    pub fn evaluate(&self, req: &AmplitudeRequest) -> Result<Amplitude> {
        req.validate()?;
        match (req.method, req.geometry) {
            (Method::FullClosedForm, Geometry::Waists(w)) => self.full(&req.mode, &w, req.omega_s),
            (Method::NumericOracle, Geometry::Waists(w)) => self.oracle(
                req.mode.l as i32,
                -(req.mode.l as i32),
                req.mode.n_s,
                req.mode.n_i,
                &w,
                req.omega_s,
                &OracleSettings::default(),
            ),
            (Method::DegenerateApprox, Geometry::Focal(f)) => self.degenerate(&req.mode, &f, req.omega_s),
            (Method::QuadraticKz, Geometry::Focal(f)) => {
                let quad = self.quadratic_phase()?;
                self.quadratic_kz(&req.mode, &f, req.omega_s, &quad)
            }
            _ => unreachable!("validated above"),
        }
    }

    fn integrate(&self, mut f: impl FnMut(f64) -> Complex64, phi: f64) -> Result<Amplitude> {
        let r = self.integrator.integrate(&mut f, phi)?;
        Ok(Amplitude { value: r.value, error: r.error, converged: r.converged })
    }

    pub fn full_sum(&self, mode: &ModeSpec, waists: &WaistConfig, omega_s: f64) -> Result<FullSum> {
        let t = self.crystal.temperature;
        let k_s = self.model.wavenumber(omega_s, t)?;
        let k_i = self.model.wavenumber(self.omega_p - omega_s, t)?;
        FullSum::new(mode, waists, self.crystal.length, self.k_p, k_s, k_i)
    }

    /// Full closed form with k_s = k(ω_s), k_i = k(ω_p − ω_s).
    pub fn full(&self, mode: &ModeSpec, waists: &WaistConfig, omega_s: f64) -> Result<Amplitude> {
        let phi = self.phi(omega_s)?;
        let sum = self.full_sum(mode, waists, omega_s)?;
        self.integrate(|u| sum.eval(u), phi)
    }

    pub fn degenerate_sum(&self, mode: &ModeSpec, focal: &FocalConfig) -> Result<DegenerateSum> {
        DegenerateSum::new(mode, focal, self.crystal.length, self.k_p)
    }

    /// Degenerate approximation at a given Φ; no waists or frequencies needed.
    pub fn degenerate_at_phi(&self, sum: &DegenerateSum, phi: f64) -> Result<Amplitude> {
        self.integrate(|u| sum.eval(u), phi)
    }

    pub fn degenerate(&self, mode: &ModeSpec, focal: &FocalConfig, omega_s: f64) -> Result<Amplitude> {
        let sum = self.degenerate_sum(mode, focal)?;
        self.degenerate_at_phi(&sum, self.phi(omega_s)?)
    }

    pub fn quadratic_kz(
        &self,
        mode: &ModeSpec,
        focal: &FocalConfig,
        omega_s: f64,
        quad: &QuadraticPhase,
    ) -> Result<Amplitude> {
        let sum = self.degenerate_sum(mode, focal)?;
        self.degenerate_at_phi(&sum, self.phi_quadratic(quad, omega_s))
    }

    /// Direct x-space integral of the projection with a Gaussian pump.
    /// The azimuthal integral is done analytically, r by truncated composite
    /// Gauss-Legendre and z (as u) by the adaptive u-integrator.
    #[allow(clippy::too_many_arguments)]
    pub fn oracle(
        &self,
        l_s: i32,
        l_i: i32,
        n_s: u32,
        n_i: u32,
        waists: &WaistConfig,
        omega_s: f64,
        settings: &OracleSettings,
    ) -> Result<Amplitude> {
        let (ls, li) = (l_s.unsigned_abs(), l_i.unsigned_abs());
        if ls.max(li) > ORACLE_INDEX_CAP || n_s.max(n_i) > ORACLE_INDEX_CAP {
            return Err(Error::CostGuard(format!(
                "oracle accepts |l|, n ≤ {ORACLE_INDEX_CAP}, got l = ({l_s}, {l_i}), n = ({n_s}, {n_i})"
            )));
        }
        waists.validate()?;
        if l_s + l_i != 0 {
            return Ok(Amplitude { value: Complex64::new(0.0, 0.0), error: 0.0, converged: true });
        }
        let t = self.crystal.temperature;
        let length = self.crystal.length;
        let k_s = self.model.wavenumber(omega_s, t)?;
        let k_i = self.model.wavenumber(self.omega_p - omega_s, t)?;
        let k_p = self.k_p;
        let phi = self.phi(omega_s)?;
        let rule = GaussLegendre::new(settings.radial_nodes);
        let beams = [(waists.w_p, k_p), (waists.w_s, k_s), (waists.w_i, k_i)];
        let prefactor = length / (4.0 * PI);
        let radial = |u: f64| -> Complex64 {
            let z = 0.5 * length * u;
            let reach =
                beams.iter().map(|&(w, k)| w * (1.0 + (2.0 * z / (k * w * w)).powi(2)).sqrt()).fold(0.0, f64::max);
            let r_max = settings.truncation * reach;
            let width = r_max / settings.radial_panels as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..settings.radial_panels {
                let a = width * p as f64;
                acc += rule.integrate_complex(a, a + width, |r| {
                    let vp = lg_amplitude_x(0, 0, waists.w_p, r, z, k_p);
                    let s = lg_amplitude_x(n_s, ls, waists.w_s, r, z, k_s);
                    let i = lg_amplitude_x(n_i, li, waists.w_i, r, z, k_i);
                    vp * s.conj() * i.conj() * r
                });
            }
            acc * prefactor
        };
        self.integrate(radial, phi)
    }
}
