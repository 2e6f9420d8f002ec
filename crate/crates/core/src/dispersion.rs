//! Thermo-optic dispersion of KTP for z-polarised light.
//!
//! Type-0 phase matching keeps pump, signal and idler on the same (z)
//! polarisation, so one index n_z(λ, T) carries all of the dispersion. The
//! model is a Sellmeier polynomial at the reference temperature plus a
//! polynomial thermo-optic correction:
//!
//! ```text
//! n0(λ)²  = A + Σ_j B_j λ² / (λ² − C_j) − D λ²
//! n(λ, T) = n0(λ) + n1(λ)·ΔT + n2(λ)·ΔT²,   ΔT = T − T_ref
//! n1(λ)   = Σ_m a_m / λ^m,   n2(λ) = Σ_m b_m / λ^m
//! ```
//!
//! with λ in micrometres. Derivatives in λ are analytic, which gives exact
//! group velocity and group-velocity dispersion without a stencil.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result, SPEED_OF_LIGHT};

/// First-order linear thermal expansion of the poling period (per °C).
pub const POLING_EXPANSION_LINEAR: f64 = 6.7e-6;
/// Second-order thermal expansion of the poling period (per °C²).
pub const POLING_EXPANSION_QUADRATIC: f64 = 11e-9;
/// Reference temperature of the thermal-expansion polynomial, °C.
pub const POLING_EXPANSION_REFERENCE: f64 = 25.0;

/// Physical context of every computation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CrystalSpec {
    /// Crystal length L, metres.
    pub length: f64,
    /// Poling period Λ at the expansion reference temperature, metres.
    pub poling_period: f64,
    /// Crystal temperature, °C.
    pub temperature: f64,
    /// Vacuum wavelength of the (monochromatic) pump, metres.
    pub pump_wavelength: f64,
    /// Scale Λ with temperature. Off by default.
    #[cfg_attr(feature = "serde", serde(default))]
    pub thermal_expansion: bool,
}

impl CrystalSpec {
    /// 30 mm ppKTP, Λ = 3.425 µm, 405 nm pump at 24.5 °C.
    pub fn ppktp_405() -> Self {
        Self {
            length: 30e-3,
            poling_period: 3.425e-6,
            temperature: 24.5,
            pump_wavelength: 405e-9,
            thermal_expansion: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in
            [("length", self.length), ("poling_period", self.poling_period), ("pump_wavelength", self.pump_wavelength)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Contract(format!("crystal {name} must be positive, got {v}")));
            }
        }
        if !self.temperature.is_finite() {
            return Err(Error::Contract(String::from("crystal temperature must be finite")));
        }
        Ok(())
    }

    pub fn at_temperature(&self, temperature: f64) -> Self {
        Self { temperature, ..*self }
    }

    /// Pump angular frequency, rad/s.
    pub fn pump_omega(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.pump_wavelength
    }

    /// Poling period at the crystal temperature.
    pub fn poling_period_at(&self, temperature: f64) -> f64 {
        if self.thermal_expansion {
            let dt = temperature - POLING_EXPANSION_REFERENCE;
            self.poling_period * (1.0 + POLING_EXPANSION_LINEAR * dt + POLING_EXPANSION_QUADRATIC * dt * dt)
        } else {
            self.poling_period
        }
    }

    /// Grating wave number 2π/Λ.
    pub fn grating_wavenumber(&self, temperature: f64) -> f64 {
        2.0 * PI / self.poling_period_at(temperature)
    }
}

/// Sellmeier plus thermo-optic model for n_z. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionModel {
    name: String,
    sellmeier: Vec<f64>,
    thermo_optic: Vec<f64>,
    lambda_range_um: (f64, f64),
    temp_range_c: (f64, f64),
    reference_temp_c: f64,
}

/// n and its first two λ-derivatives (λ in µm).
#[derive(Debug, Clone, Copy)]
struct IndexJet {
    n: f64,
    dn: f64,
    d2n: f64,
}

impl DispersionModel {
    /// Build a model.
    ///
    /// `sellmeier` is `[A, B1, C1, ..., Bm, Cm, D]`; `thermo_optic` is
    /// `[a0, .., a_{p-1}, b0, .., b_{p-1}]`.
    pub fn new(
        name: impl Into<String>,
        sellmeier: Vec<f64>,
        thermo_optic: Vec<f64>,
        lambda_range_um: (f64, f64),
        temp_range_c: (f64, f64),
        reference_temp_c: f64,
    ) -> Result<Self> {
        if sellmeier.len() < 2 || !sellmeier.len().is_multiple_of(2) {
            return Err(Error::Contract(format!(
                "sellmeier needs [A, (B, C)*, D], got {} coefficients",
                sellmeier.len()
            )));
        }
        if !thermo_optic.len().is_multiple_of(2) {
            return Err(Error::Contract(format!(
                "thermo_optic needs equal-length first and second order lists, got {} coefficients",
                thermo_optic.len()
            )));
        }
        if sellmeier.iter().chain(thermo_optic.iter()).any(|c| !c.is_finite()) {
            return Err(Error::Contract(String::from("non-finite dispersion coefficient")));
        }
        let (lo, hi) = lambda_range_um;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Contract(format!("bad wavelength range [{lo}, {hi}] µm")));
        }
        let (tlo, thi) = temp_range_c;
        if !(thi > tlo) || !reference_temp_c.is_finite() {
            return Err(Error::Contract(format!("bad temperature range [{tlo}, {thi}] °C")));
        }
        let model =
            Self { name: name.into(), sellmeier, thermo_optic, lambda_range_um, temp_range_c, reference_temp_c };
        // Poles of the Sellmeier terms must stay outside the window and the
        // index must stay above one.
        let poles_outside = model.sellmeier_terms().all(|(_, c)| c <= 0.0 || c.sqrt() < lo || c.sqrt() > hi);
        if !poles_outside {
            return Err(Error::Contract(String::from("sellmeier pole inside the wavelength validity range")));
        }
        for i in 0..=16 {
            let lam = lo + (hi - lo) * f64::from(i) / 16.0;
            for t in [tlo, 0.5 * (tlo + thi), thi] {
                let n = model.jet(lam, t).n;
                if !(n > 1.0) {
                    return Err(Error::Contract(format!("model gives n = {n} at {lam} µm, {t} °C")));
                }
            }
        }
        Ok(model)
    }

    /// Fradkin et al. (1999) n_z Sellmeier with the Emanueli & Arie (2003)
    /// thermo-optic polynomial, referenced to 25 °C as published.
    pub fn ktp_fradkin_emanueli() -> Self {
        Self::new(
            "ktp-z-fradkin-emanueli",
            alloc::vec![2.12725, 1.18431, 0.0514852, 0.6603, 100.00507, 9.68956e-3],
            alloc::vec![9.9587e-6, 9.9228e-6, -8.9603e-6, 4.1010e-6, -1.1882e-8, 10.459e-8, -9.8136e-8, 3.1481e-8,],
            (0.35, 1.7),
            (0.0, 200.0),
            25.0,
        )
        .expect("built-in model is valid")
    }

    /// Same coefficients as [`Self::ktp_fradkin_emanueli`] with the thermo-optic
    /// reference moved to [`CALIBRATED_REFERENCE_TEMP_C`], so the 3.425 µm
    /// grating phase-matches slightly off degeneracy at 24.5 °C instead of
    /// only above about 37 °C. Default for reproducing the 24.5 °C operating
    /// point of the 405 nm source.
    pub fn ktp_qpm_calibrated() -> Self {
        let base = Self::ktp_fradkin_emanueli();
        Self {
            name: String::from("ktp-z-fradkin-emanueli-qpm-calibrated"),
            reference_temp_c: CALIBRATED_REFERENCE_TEMP_C,
            ..base
        }
    }

    /// Copy of the model with another thermo-optic reference temperature.
    pub fn with_reference_temp_c(&self, name: impl Into<String>, reference_temp_c: f64) -> Self {
        Self { name: name.into(), reference_temp_c, ..self.clone() }
    }

    /// Look up a built-in model by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "ktp-z-fradkin-emanueli" => Some(Self::ktp_fradkin_emanueli()),
            "ktp-z-fradkin-emanueli-qpm-calibrated" => Some(Self::ktp_qpm_calibrated()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sellmeier(&self) -> &[f64] {
        &self.sellmeier
    }

    pub fn thermo_optic(&self) -> &[f64] {
        &self.thermo_optic
    }

    pub fn lambda_range_um(&self) -> (f64, f64) {
        self.lambda_range_um
    }

    pub fn temp_range_c(&self) -> (f64, f64) {
        self.temp_range_c
    }

    pub fn reference_temp_c(&self) -> f64 {
        self.reference_temp_c
    }

    fn sellmeier_terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let inner = &self.sellmeier[1..self.sellmeier.len() - 1];
        inner.chunks_exact(2).map(|p| (p[0], p[1]))
    }

    /// Check a temperature against the validity window.
    pub fn check_temperature(&self, temperature: f64) -> Result<()> {
        let (lo, hi) = self.temp_range_c;
        if temperature.is_finite() && temperature >= lo && temperature <= hi {
            Ok(())
        } else {
            Err(Error::Domain {
                quantity: "temperature [°C]",
                value: temperature,
                bound: format!("{} valid for {lo}..={hi} °C", self.name),
            })
        }
    }

    fn check_wavelength_um(&self, lam: f64) -> Result<()> {
        let (lo, hi) = self.lambda_range_um;
        if lam.is_finite() && lam >= lo && lam <= hi {
            Ok(())
        } else {
            Err(Error::Domain {
                quantity: "wavelength [µm]",
                value: lam,
                bound: format!("{} valid for {lo}..={hi} µm", self.name),
            })
        }
    }

    fn jet(&self, lam: f64, temperature: f64) -> IndexJet {
        let x = lam * lam;
        let a = self.sellmeier[0];
        let d = self.sellmeier[self.sellmeier.len() - 1];
        let mut s = a - d * x;
        let mut ds = -2.0 * d * lam;
        let mut d2s = -2.0 * d;
        for (b, c) in self.sellmeier_terms() {
            // b x / (x - c) = b + b c / (x - c)
            let den = x - c;
            s += b * x / den;
            ds += -2.0 * b * c * lam / (den * den);
            d2s += -2.0 * b * c / (den * den) + 8.0 * b * c * x / (den * den * den);
        }
        let n0 = s.sqrt();
        let dn0 = ds / (2.0 * n0);
        let d2n0 = d2s / (2.0 * n0) - ds * ds / (4.0 * n0 * n0 * n0);

        let p = self.thermo_optic.len() / 2;
        let (first, second) = self.thermo_optic.split_at(p);
        let poly = |coef: &[f64]| {
            let mut v = 0.0;
            let mut dv = 0.0;
            let mut d2v = 0.0;
            for (m, &cm) in coef.iter().enumerate() {
                let m = m as i32;
                let mf = f64::from(m);
                v += cm * lam.powi(-m);
                dv += -mf * cm * lam.powi(-m - 1);
                d2v += mf * (mf + 1.0) * cm * lam.powi(-m - 2);
            }
            (v, dv, d2v)
        };
        let dt = temperature - self.reference_temp_c;
        let (n1, dn1, d2n1) = poly(first);
        let (n2, dn2, d2n2) = poly(second);
        IndexJet {
            n: n0 + n1 * dt + n2 * dt * dt,
            dn: dn0 + dn1 * dt + dn2 * dt * dt,
            d2n: d2n0 + d2n1 * dt + d2n2 * dt * dt,
        }
    }

    fn checked_jet(&self, wavelength_vacuum: f64, temperature: f64) -> Result<IndexJet> {
        let lam = wavelength_vacuum * 1e6;
        self.check_wavelength_um(lam)?;
        self.check_temperature(temperature)?;
        Ok(self.jet(lam, temperature))
    }

    /// n_z at a vacuum wavelength (metres) and temperature (°C).
    pub fn refractive_index(&self, wavelength_vacuum: f64, temperature: f64) -> Result<f64> {
        Ok(self.checked_jet(wavelength_vacuum, temperature)?.n)
    }

    /// dn/dλ (per metre of vacuum wavelength).
    pub fn index_derivative(&self, wavelength_vacuum: f64, temperature: f64) -> Result<f64> {
        Ok(self.checked_jet(wavelength_vacuum, temperature)?.dn * 1e6)
    }

    fn omega_jet(&self, omega: f64, temperature: f64) -> Result<(f64, IndexJet)> {
        if !(omega > 0.0) {
            return Err(Error::Domain {
                quantity: "angular frequency [rad/s]",
                value: omega,
                bound: String::from("must be positive"),
            });
        }
        let lam_m = 2.0 * PI * SPEED_OF_LIGHT / omega;
        Ok((lam_m, self.checked_jet(lam_m, temperature)?))
    }

    /// k = n(λ, T) ω / c.
    pub fn wavenumber(&self, omega: f64, temperature: f64) -> Result<f64> {
        let (_, j) = self.omega_jet(omega, temperature)?;
        Ok(j.n * omega / SPEED_OF_LIGHT)
    }

    /// ∂k/∂ω = (n − λ ∂n/∂λ)/c.
    pub fn inverse_group_velocity(&self, omega: f64, temperature: f64) -> Result<f64> {
        let (lam_m, j) = self.omega_jet(omega, temperature)?;
        let lam_um = lam_m * 1e6;
        Ok((j.n - lam_um * j.dn) / SPEED_OF_LIGHT)
    }

    /// Group velocity u_g = 1/(∂k/∂ω), m/s.
    pub fn group_velocity(&self, omega: f64, temperature: f64) -> Result<f64> {
        Ok(1.0 / self.inverse_group_velocity(omega, temperature)?)
    }

    /// Group-velocity dispersion ∂²k/∂ω² = λ³ ∂²n/∂λ² / (2π c²), s²/m.
    pub fn gvd(&self, omega: f64, temperature: f64) -> Result<f64> {
        let (lam_m, j) = self.omega_jet(omega, temperature)?;
        let d2n_si = j.d2n * 1e12;
        Ok(lam_m * lam_m * lam_m * d2n_si / (2.0 * PI * SPEED_OF_LIGHT * SPEED_OF_LIGHT))
    }

    /// Δk = k_p − k_s − k_i − 2π/Λ with ω_i = ω_p − ω_s, and Φ = ΔkL/2.
    ///
    /// The result is bit-identical for ω_s and ω_p − ω_s.
    pub fn phase_mismatch(&self, omega_s: f64, temperature: f64, crystal: &CrystalSpec) -> Result<PhaseMismatch> {
        let omega_p = crystal.pump_omega();
        if !(omega_s > 0.0 && omega_s < omega_p) {
            return Err(Error::Domain {
                quantity: "signal angular frequency [rad/s]",
                value: omega_s,
                bound: format!("must lie in (0, ω_p = {omega_p:e})"),
            });
        }
        let half = 0.5 * omega_p;
        let hi = if omega_s >= half { omega_s } else { omega_p - omega_s };
        let lo = omega_p - hi;
        let k_p = self.wavenumber(omega_p, temperature)?;
        let k_hi = self.wavenumber(hi, temperature)?;
        let k_lo = self.wavenumber(lo, temperature)?;
        let delta_k = k_p - (k_hi + k_lo) - crystal.grating_wavenumber(temperature);
        Ok(PhaseMismatch::new(delta_k, crystal.length))
    }

    /// Phase mismatch at normalised frequency ω_r = 2ω_s/ω_p.
    pub fn phase_mismatch_at(&self, omega_r: f64, temperature: f64, crystal: &CrystalSpec) -> Result<PhaseMismatch> {
        self.phase_mismatch(0.5 * omega_r * crystal.pump_omega(), temperature, crystal)
    }

    /// Signal/idler frequencies with Δk = 0, found by bisection on
    /// ω_r ∈ [1, 1.5]. Signal is the higher frequency.
    pub fn phase_matching_roots(&self, temperature: f64, crystal: &CrystalSpec) -> Result<PhaseMatchingRoots> {
        let omega_p = crystal.pump_omega();
        let dk = |omega_r: f64| -> Result<f64> {
            Ok(self.phase_mismatch(0.5 * omega_r * omega_p, temperature, crystal)?.delta_k)
        };
        let dk_deg = dk(1.0)?;
        if dk_deg == 0.0 {
            return Ok(PhaseMatchingRoots { omega_signal: 0.5 * omega_p, omega_idler: 0.5 * omega_p });
        }
        let lam_hi_um = self.lambda_range_um.1;
        // Upper end of the bracket: ω_r = 1.5, pulled in if the idler would
        // leave the model.
        let r_min_idler = 2.0 * (2.0 * PI * SPEED_OF_LIGHT / (lam_hi_um * 1e-6)) / omega_p;
        let upper = (2.0 - r_min_idler).min(1.5);
        if dk_deg < 0.0 {
            return Err(Error::NoPhaseMatching { temperature, delta_k_degenerate: dk_deg });
        }
        let dk_up = dk(upper)?;
        if dk_up > 0.0 {
            return Err(Error::NoPhaseMatching { temperature, delta_k_degenerate: dk_deg });
        }
        let (mut a, mut b) = (1.0_f64, upper);
        while (b - a) > 1e-12 * b {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if dk(m)? > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let r = 0.5 * (a + b);
        let omega_signal = 0.5 * r * omega_p;
        Ok(PhaseMatchingRoots { omega_signal, omega_idler: omega_p - omega_signal })
    }

    /// Group-velocity data at the Δk = 0 pair, used by the narrow-band
    /// (quadratic) description of Φ(ω).
    pub fn quadratic_expansion(&self, temperature: f64, crystal: &CrystalSpec) -> Result<QuadraticPhase> {
        let roots = self.phase_matching_roots(temperature, crystal)?;
        let k1s = self.inverse_group_velocity(roots.omega_signal, temperature)?;
        let k1i = self.inverse_group_velocity(roots.omega_idler, temperature)?;
        let k2s = self.gvd(roots.omega_signal, temperature)?;
        let k2i = self.gvd(roots.omega_idler, temperature)?;
        Ok(QuadraticPhase { roots, length: crystal.length, walkoff: -k1s + k1i, gvd_sum: k2s + k2i })
    }

    /// Φ at which |dω/dΦ| has fallen to half of its Φ = 0 value.
    pub fn phi_half(&self, temperature: f64, crystal: &CrystalSpec) -> Result<f64> {
        Ok(self.quadratic_expansion(temperature, crystal)?.phi_half())
    }

    /// |dω_si/dΦ| from the quadratic expansion of Φ about the Δk = 0 pair.
    pub fn domega_dphi(&self, phi: f64, temperature: f64, crystal: &CrystalSpec) -> Result<f64> {
        self.quadratic_expansion(temperature, crystal)?.domega_dphi(phi)
    }
}

/// Thermo-optic reference temperature of the calibrated built-in model.
pub const CALIBRATED_REFERENCE_TEMP_C: f64 = 12.5;

/// Δk and Φ = ΔkL/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMismatch {
    pub delta_k: f64,
    pub phi: f64,
}

impl PhaseMismatch {
    pub fn new(delta_k: f64, length: f64) -> Self {
        Self { delta_k, phi: delta_k * length / 2.0 }
    }
}

/// The Δk = 0 signal/idler pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMatchingRoots {
    pub omega_signal: f64,
    pub omega_idler: f64,
}

/// Second-order expansion of Φ about the Δk = 0 signal frequency:
///
/// ```text
/// Φ(ω_s0 + δ) ≈ (L/2)·D·δ − (L/4)·(G_s + G_i)·δ²,   D = −1/u_{g,s} + 1/u_{g,i}
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticPhase {
    pub roots: PhaseMatchingRoots,
    pub length: f64,
    /// D = −1/u_{g,s} + 1/u_{g,i}, s/m.
    pub walkoff: f64,
    /// G_s + G_i, s²/m.
    pub gvd_sum: f64,
}

impl QuadraticPhase {
    /// Φ at signal frequency ω_s.
    pub fn phi(&self, omega_s: f64) -> f64 {
        let d = omega_s - self.roots.omega_signal;
        0.5 * self.length * self.walkoff * d - 0.25 * self.length * self.gvd_sum * d * d
    }

    fn radicand(&self, phi: f64) -> f64 {
        0.25 * self.length * self.length * self.walkoff * self.walkoff - self.length * self.gvd_sum * phi
    }

    /// |dω_si/dΦ| = 1/√(L²D²/4 − L(G_s+G_i)Φ).
    pub fn domega_dphi(&self, phi: f64) -> Result<f64> {
        let r = self.radicand(phi);
        if !(r > 0.0) {
            return Err(Error::Domain {
                quantity: "Φ",
                value: phi,
                bound: format!("quadratic dω/dΦ needs a positive radicand, got {r:e}"),
            });
        }
        Ok(1.0 / r.sqrt())
    }

    /// Φ_{1/2} = −3 L D² / (4 (G_s + G_i)).
    pub fn phi_half(&self) -> f64 {
        -3.0 * self.length * self.walkoff * self.walkoff / (4.0 * self.gvd_sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> DispersionModel {
        DispersionModel::ktp_qpm_calibrated()
    }

    #[test]
    fn index_above_one_on_grid() {
        let m = model();
        for i in 0..=60 {
            let lam = 0.4e-6 + 1.2e-6 * f64::from(i) / 60.0;
            for t in [20.0, 25.0, 30.0, 35.0, 40.0] {
                assert!(m.refractive_index(lam, t).unwrap() > 1.0);
            }
        }
    }

    #[test]
    fn thermo_optic_positive_at_810() {
        let m = model();
        assert!(m.refractive_index(810e-9, 30.0).unwrap() > m.refractive_index(810e-9, 25.0).unwrap());
    }

    #[test]
    fn out_of_range_names_bound() {
        let m = model();
        match m.refractive_index(3e-6, 25.0) {
            Err(Error::Domain { quantity, bound, .. }) => {
                assert!(quantity.contains("wavelength"));
                assert!(bound.contains("1.7"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(m.refractive_index(1e-6, 500.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn wavenumber_matches_index() {
        let m = model();
        let omega = 2.0 * PI * SPEED_OF_LIGHT / 1.064e-6;
        let k = m.wavenumber(omega, 25.0).unwrap();
        let n = m.refractive_index(2.0 * PI * SPEED_OF_LIGHT / omega, 25.0).unwrap();
        assert!((k * SPEED_OF_LIGHT / omega - n).abs() < 1e-14);
    }

    #[test]
    fn bad_models_rejected() {
        assert!(DispersionModel::new("x", alloc::vec![1.0, 2.0, 3.0], alloc::vec![], (0.4, 1.6), (0.0, 50.0), 25.0)
            .is_err());
        assert!(DispersionModel::new("x", alloc::vec![0.5, 0.0], alloc::vec![], (0.4, 1.6), (0.0, 50.0), 25.0).is_err());
        assert!(DispersionModel::new(
            "x",
            alloc::vec![2.0, 1.0, 1.0, 0.0],
            alloc::vec![],
            (0.4, 1.6),
            (0.0, 50.0),
            25.0
        )
        .is_err());
        assert!(
            DispersionModel::new("x", alloc::vec![3.0, 0.0], alloc::vec![1.0], (0.4, 1.6), (0.0, 50.0), 25.0).is_err()
        );
    }

    #[test]
    fn phase_mismatch_rejects_out_of_band() {
        let m = model();
        let c = CrystalSpec::ppktp_405();
        assert!(m.phase_mismatch(0.0, 24.5, &c).is_err());
        assert!(m.phase_mismatch(c.pump_omega(), 24.5, &c).is_err());
        // idler beyond 1.7 µm
        assert!(m.phase_mismatch_at(1.6, 24.5, &c).is_err());
    }

    #[test]
    fn degenerate_roots_give_zero_phi_half() {
        let q = QuadraticPhase {
            roots: PhaseMatchingRoots { omega_signal: 1.0, omega_idler: 1.0 },
            length: 0.03,
            walkoff: 0.0,
            gvd_sum: 4e-25,
        };
        assert_eq!(q.phi_half(), 0.0);
    }

    #[test]
    fn uncalibrated_model_does_not_phase_match_at_room_temperature() {
        let m = DispersionModel::ktp_fradkin_emanueli();
        let c = CrystalSpec::ppktp_405();
        assert!(matches!(m.phase_matching_roots(24.5, &c), Err(Error::NoPhaseMatching { .. })));
        assert!(m.phase_matching_roots(45.0, &c).is_ok());
    }

    #[test]
    fn thermal_expansion_flag() {
        let mut c = CrystalSpec::ppktp_405();
        assert_eq!(c.poling_period_at(60.0), c.poling_period);
        c.thermal_expansion = true;
        assert!(c.poling_period_at(60.0) > c.poling_period);
        assert_eq!(c.poling_period_at(25.0), c.poling_period);
    }
}
