use std::f64::consts::PI;

use lgbright_core::dispersion::{CrystalSpec, DispersionModel};
use lgbright_core::{Error, SPEED_OF_LIGHT};

/// Fradkin n_z Sellmeier plus the Emanueli-Arie thermo-optic polynomial,
/// written out longhand (λ in µm, ΔT from 25 °C).
fn n_z_longhand(lambda_um: f64, t: f64) -> f64 {
    let l2 = lambda_um * lambda_um;
    let n0 = (2.12725 + 1.18431 / (1.0 - 0.0514852 / l2) + 0.6603 / (1.0 - 100.00507 / l2) - 9.68956e-3 * l2).sqrt();
    let a = [9.9587e-6, 9.9228e-6, -8.9603e-6, 4.1010e-6];
    let b = [-1.1882e-8, 10.459e-8, -9.8136e-8, 3.1481e-8];
    let n1: f64 = a.iter().enumerate().map(|(m, c)| c / lambda_um.powi(m as i32)).sum();
    let n2: f64 = b.iter().enumerate().map(|(m, c)| c / lambda_um.powi(m as i32)).sum();
    let dt = t - 25.0;
    n0 + n1 * dt + n2 * dt * dt
}

fn omega(lambda_m: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / lambda_m
}

#[test]
fn index_matches_longhand_formula() {
    let m = DispersionModel::ktp_fradkin_emanueli();
    for &(lam, t) in &[(1.064, 25.0), (0.405, 24.5), (0.81, 30.5), (1.55, 80.0), (0.532, 10.0)] {
        let n = m.refractive_index(lam * 1e-6, t).unwrap();
        let want = n_z_longhand(lam, t);
        assert!((n - want).abs() < 1e-12, "λ={lam} T={t}: {n} vs {want}");
    }
    // Tabulated n_z of KTP at 1064 nm is about 1.830.
    let n1064 = m.refractive_index(1.064e-6, 25.0).unwrap();
    assert!((n1064 - 1.830).abs() < 2e-3, "{n1064}");
}

#[test]
fn calibrated_model_only_shifts_the_temperature_reference() {
    let base = DispersionModel::ktp_fradkin_emanueli();
    let cal = DispersionModel::ktp_qpm_calibrated();
    let dt = 25.0 - cal.reference_temp_c();
    for lam in [0.405e-6, 0.81e-6, 1.2e-6] {
        let a = cal.refractive_index(lam, 24.5).unwrap();
        let b = base.refractive_index(lam, 24.5 + dt).unwrap();
        assert!((a - b).abs() < 1e-13);
    }
}

#[test]
fn index_rises_with_temperature_at_810() {
    let m = DispersionModel::ktp_qpm_calibrated();
    let cold = m.refractive_index(810e-9, 25.0).unwrap();
    let warm = m.refractive_index(810e-9, 30.0).unwrap();
    assert!(warm > cold);
}

#[test]
fn wavenumber_group_velocity_and_gvd_agree_with_finite_differences() {
    let m = DispersionModel::ktp_qpm_calibrated();
    let t = 24.5;
    for lam in [0.405e-6, 0.78e-6, 0.81e-6, 0.85e-6] {
        let w = omega(lam);
        let k = m.wavenumber(w, t).unwrap();
        let n = m.refractive_index(lam, t).unwrap();
        assert!((k - n * w / SPEED_OF_LIGHT).abs() <= 1e-12 * k);

        let h = w * 1e-5;
        let k1_fd = (m.wavenumber(w + h, t).unwrap() - m.wavenumber(w - h, t).unwrap()) / (2.0 * h);
        let k1 = m.inverse_group_velocity(w, t).unwrap();
        assert!((k1 - k1_fd).abs() < 1e-7 * k1, "{k1} {k1_fd}");

        let k2_fd =
            (m.inverse_group_velocity(w + h, t).unwrap() - m.inverse_group_velocity(w - h, t).unwrap()) / (2.0 * h);
        let k2 = m.gvd(w, t).unwrap();
        assert!((k2 - k2_fd).abs() < 1e-5 * k2.abs(), "{k2} {k2_fd}");

        // Normal dispersion: group velocity below phase velocity.
        let u_g = m.group_velocity(w, t).unwrap();
        assert!(u_g < SPEED_OF_LIGHT / n);
        assert!(k2 > 0.0);
    }
}

#[test]
fn phase_mismatch_definition_and_symmetry() {
    let m = DispersionModel::ktp_qpm_calibrated();
    let c = CrystalSpec::ppktp_405();
    let t = 24.5;
    let wp = c.pump_omega();
    assert!((wp - omega(405e-9)).abs() < 1e-3);
    for r in [0.9, 0.97, 1.0, 1.02, 1.1] {
        let ws = 0.5 * r * wp;
        let pm = m.phase_mismatch(ws, t, &c).unwrap();
        let dk = m.wavenumber(wp, t).unwrap()
            - m.wavenumber(ws, t).unwrap()
            - m.wavenumber(wp - ws, t).unwrap()
            - 2.0 * PI / 3.425e-6;
        assert!((pm.delta_k - dk).abs() < 1e-6 * m.wavenumber(wp, t).unwrap() * 1e-6);
        assert_eq!(pm.phi, pm.delta_k * c.length / 2.0);
        let mirrored = m.phase_mismatch(wp - ws, t, &c).unwrap();
        assert_eq!(pm, mirrored);
    }
}

#[test]
fn roots_zero_the_mismatch() {
    let m = DispersionModel::ktp_qpm_calibrated();
    let c = CrystalSpec::ppktp_405();
    for t in [24.5, 27.5, 30.5] {
        let roots = m.phase_matching_roots(t, &c).unwrap();
        assert_eq!(roots.omega_signal + roots.omega_idler, c.pump_omega());
        assert!(roots.omega_signal >= roots.omega_idler);
        let phi = m.phase_mismatch(roots.omega_signal, t, &c).unwrap().phi;
        assert!(phi.abs() < 1e-6, "T={t}: Φ at root {phi}");
        // Bracket check: Φ changes sign across the root.
        let d = 1e-6 * roots.omega_signal;
        let lo = m.phase_mismatch(roots.omega_signal - d, t, &c).unwrap().phi;
        let hi = m.phase_mismatch(roots.omega_signal + d, t, &c).unwrap().phi;
        assert!(lo * hi < 0.0);
    }
}

#[test]
fn roots_move_away_from_degeneracy_when_heated() {
    let m = DispersionModel::ktp_qpm_calibrated();
    let c = CrystalSpec::ppktp_405();
    let r: Vec<f64> = [24.5, 27.5, 30.5].iter().map(|&t| m.phase_matching_roots(t, &c).unwrap().omega_signal).collect();
    assert!(r[0] < r[1] && r[1] < r[2], "{r:?}");
}

/// Φ at degeneracy is a regression fixture of the calibrated model.
#[test]
fn degenerate_phi_fixture() {
    let m = DispersionModel::ktp_qpm_calibrated();
    let c = CrystalSpec::ppktp_405();
    let phi = m.phase_mismatch_at(1.0, 24.5, &c).unwrap().phi;
    let fixture = DEGENERATE_PHI_24_5;
    assert!((phi - fixture).abs() < 1e-6 * fixture.abs(), "Φ(ω_r=1) = {phi:.9}");
}

const DEGENERATE_PHI_24_5: f64 = 4.457_693_155;

#[test]
fn quadratic_expansion_uses_positive_gvd_sum() {
    let m = DispersionModel::ktp_qpm_calibrated();
    let c = CrystalSpec::ppktp_405();
    let q = m.quadratic_expansion(24.5, &c).unwrap();
    assert!(q.gvd_sum > 0.0);
    // Normal dispersion: the higher-frequency signal is the slower one.
    assert!(q.walkoff < 0.0);
}

/// Φ½ from derivatives of the exact Φ(ω_s) at the root:
/// Φ' = L D/2, Φ'' = −L G/2, so −3LD²/(4G) = 3Φ'²/(2Φ'').
fn phi_half_from_exact_phase(m: &DispersionModel, t: f64, c: &CrystalSpec) -> f64 {
    let w0 = m.phase_matching_roots(t, c).unwrap().omega_signal;
    let phi = |w: f64| m.phase_mismatch(w, t, c).unwrap().phi;
    let h = 2e-4 * w0;
    let d1 = (phi(w0 + h) - phi(w0 - h)) / (2.0 * h);
    let d2 = (phi(w0 + h) - 2.0 * phi(w0) + phi(w0 - h)) / (h * h);
    1.5 * d1 * d1 / d2
}

#[test]
fn phi_half_matches_exact_phase_oracle() {
    let m = DispersionModel::ktp_qpm_calibrated();
    let c = CrystalSpec::ppktp_405();
    for t in [27.5, 30.5] {
        let got = m.phi_half(t, &c).unwrap();
        let want = phi_half_from_exact_phase(&m, t, &c);
        assert!((got - want).abs() < 2e-3 * want.abs(), "T={t}: {got} vs {want}");
    }
}

#[test]
fn phi_half_halves_the_slope() {
    let m = DispersionModel::ktp_qpm_calibrated();
    let c = CrystalSpec::ppktp_405();
    for t in [24.5, 27.5, 30.5] {
        let q = m.quadratic_expansion(t, &c).unwrap();
        let half = q.phi_half();
        assert!(half < 0.0);
        let s0 = q.domega_dphi(0.0).unwrap();
        let sh = q.domega_dphi(half).unwrap();
        assert!((sh - 0.5 * s0).abs() < 1e-10 * s0, "T={t}");
        assert_eq!(s0, m.domega_dphi(0.0, t, &c).unwrap());
        // The quadratic Φ(ω) reaches Φ½ where its slope has doubled.
        let d = -q.walkoff / q.gvd_sum;
        let at = q.phi(q.roots.omega_signal + d);
        assert!((at - half).abs() < 1e-9 * half.abs());
    }
}

#[test]
fn phi_half_grows_with_temperature() {
    let m = DispersionModel::ktp_qpm_calibrated();
    let c = CrystalSpec::ppktp_405();
    let v: Vec<f64> = [24.5, 27.5, 30.5].iter().map(|&t| m.phi_half(t, &c).unwrap().abs()).collect();
    assert!(v[0] < v[1] && v[1] < v[2], "{v:?}");
}

#[test]
fn domain_errors_name_their_bound() {
    let m = DispersionModel::ktp_qpm_calibrated();
    match m.refractive_index(2.5e-6, 25.0) {
        Err(Error::Domain { bound, .. }) => assert!(bound.contains("1.7"), "{bound}"),
        other => panic!("{other:?}"),
    }
    match m.refractive_index(0.8e-6, 250.0) {
        Err(Error::Domain { bound, .. }) => assert!(bound.contains("200"), "{bound}"),
        other => panic!("{other:?}"),
    }
    let c = CrystalSpec::ppktp_405();
    assert!(m.phase_mismatch(-1.0, 25.0, &c).is_err());
    assert!(m.phase_mismatch(c.pump_omega(), 25.0, &c).is_err());
}

#[test]
fn published_reference_does_not_phase_match_at_the_operating_point() {
    let m = DispersionModel::ktp_fradkin_emanueli();
    let c = CrystalSpec::ppktp_405();
    assert!(matches!(m.phase_matching_roots(24.5, &c), Err(Error::NoPhaseMatching { .. })));
}
