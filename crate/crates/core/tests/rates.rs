use lgbright_core::amplitude::AmplitudeEngine;
use lgbright_core::dispersion::{CrystalSpec, DispersionModel};
use lgbright_core::lgmodes::{FocalConfig, ModeSpec};
use lgbright_core::quadrature::QuadratureSettings;
use lgbright_core::rates::{
    pair_rate_direct, pair_rate_kernel, q_kernel, OmegaNodes, QTable, RateSettings, RateWindow,
};
use lgbright_core::Error;

fn engine_at(model: &DispersionModel, t: f64) -> AmplitudeEngine<'_> {
    let crystal = CrystalSpec::ppktp_405().at_temperature(t);
    AmplitudeEngine::new(model, crystal, QuadratureSettings::default()).unwrap()
}

#[test]
fn q_kernel_is_hermitian_and_bounded() {
    let model = DispersionModel::ktp_qpm_calibrated();
    let engine = engine_at(&model, 24.5);
    let window = RateWindow::default();
    let q0 = q_kernel(&engine, &window, 0.0).unwrap();
    assert_eq!(q0.im, 0.0);
    let omega_width = engine.omega_from_r(window.hi) - engine.omega_from_r(window.lo);
    assert!((q0.re - omega_width).abs() < 1e-9 * omega_width);
    for d in [0.01, 0.3, 1.1, 2.0] {
        let a = q_kernel(&engine, &window, d).unwrap();
        let b = q_kernel(&engine, &window, -d).unwrap();
        assert!((a - b.conj()).norm() <= 1e-12 * q0.re);
        assert!(a.norm() <= q0.re * (1.0 + 1e-12));
    }
    assert!(matches!(q_kernel(&engine, &window, 2.5), Err(Error::Contract(_))));
}

#[test]
fn table_nodes_match_direct_kernel() {
    let model = DispersionModel::ktp_qpm_calibrated();
    let engine = engine_at(&model, 27.5);
    let settings = RateSettings::default();
    let table = QTable::new(&engine, &settings).unwrap();
    assert_eq!(table.temperature(), 27.5);
    assert!((table.width() - table.values()[0].re).abs() < 1e-9 * table.width());
    for k in [0, 1, 17, 640, 2048] {
        let got = table.values()[k];
        let want = q_kernel(&engine, &settings.window, k as f64 * table.step()).unwrap();
        assert!((got - want).norm() < 1e-9 * table.width(), "k={k}: {got} vs {want}");
    }
}

#[test]
fn table_interpolates_a_smooth_kernel() {
    let model = DispersionModel::ktp_qpm_calibrated();
    let engine = engine_at(&model, 24.5);
    let settings = RateSettings { window: RateWindow { lo: 0.98, hi: 1.02 }, ..Default::default() };
    let table = QTable::new(&engine, &settings).unwrap();
    for d in [0.0123, -0.5, 0.77777, 1.3, -1.999] {
        let got = table.interpolate(d);
        let want = q_kernel(&engine, &settings.window, d).unwrap();
        assert!((got - want).norm() < 1e-6 * table.width(), "Δu={d}: {got} vs {want}");
    }
}

#[test]
fn kernel_quadrature_matches_sinc_squared_sum() {
    // F ≡ 1: ∫∫ Q(u₁−u₂) du₁du₂ = Σ_ω w (2 sin Φ / Φ)².
    let model = DispersionModel::ktp_qpm_calibrated();
    let engine = engine_at(&model, 24.5);
    let settings = RateSettings::default();
    let table = QTable::new(&engine, &settings).unwrap();
    let nodes = OmegaNodes::new(&engine, &settings.window).unwrap();
    let want: f64 = nodes
        .weight
        .iter()
        .zip(&nodes.phi)
        .map(|(&w, &phi)| {
            let s = if phi == 0.0 { 2.0 } else { 2.0 * phi.sin() / phi };
            w * s * s
        })
        .sum();
    let got = table.rate_with(|_| lgbright_core::Complex64::new(1.0, 0.0));
    assert!((got - want).abs() < 1e-7 * want, "{got} vs {want}");
}

#[test]
fn kernel_route_reuses_its_table_deterministically() {
    let model = DispersionModel::ktp_qpm_calibrated();
    let engine = engine_at(&model, 24.5);
    let settings = RateSettings::default();
    let table = QTable::new(&engine, &settings).unwrap();
    let again = QTable::new(&engine, &settings).unwrap();
    assert_eq!(table, again);
    let focal = FocalConfig::new(0.5, 1.5).unwrap();
    let mut values = Vec::new();
    for (l, n) in [(0, 0), (1, 0), (2, 1)] {
        let mode = ModeSpec::symmetric(l, n);
        let a = pair_rate_kernel(&engine, &table, &mode, &focal).unwrap();
        let b = pair_rate_kernel(&engine, &again, &mode, &focal).unwrap();
        assert_eq!(a, b);
        assert!(a.value > 0.0 && !a.clipped);
        values.push(a.value);
    }
    assert!(values[0] > values[1]);

    let other = engine_at(&model, 30.5);
    let e = pair_rate_kernel(&other, &table, &ModeSpec::symmetric(0, 0), &focal).unwrap_err();
    assert!(matches!(e, Error::Contract(_)));
}

#[test]
fn routes_agree_on_a_sample_tuple() {
    let model = DispersionModel::ktp_qpm_calibrated();
    let engine = engine_at(&model, 27.5);
    let settings = RateSettings::default();
    let table = QTable::new(&engine, &settings).unwrap();
    let mode = ModeSpec::symmetric(1, 1);
    let focal = FocalConfig::new(0.8, 2.0).unwrap();
    let k = pair_rate_kernel(&engine, &table, &mode, &focal).unwrap();
    let d = pair_rate_direct(&engine, &mode, &focal, &settings).unwrap();
    assert!(d.converged);
    assert!((k.value - d.value).abs() < 1e-4 * d.value, "{} vs {}", k.value, d.value);
}

#[test]
fn rate_is_insensitive_to_a_wider_window() {
    let model = DispersionModel::ktp_qpm_calibrated();
    let engine = engine_at(&model, 24.5);
    let mode = ModeSpec::symmetric(1, 0);
    let focal = FocalConfig::new(1.0, 2.0).unwrap();
    let narrow = RateSettings::default();
    let wide = RateSettings { window: RateWindow { lo: 0.5, hi: 1.5 }, ..narrow };
    let a = pair_rate_kernel(&engine, &QTable::new(&engine, &narrow).unwrap(), &mode, &focal).unwrap();
    let b = pair_rate_kernel(&engine, &QTable::new(&engine, &wide).unwrap(), &mode, &focal).unwrap();
    assert!((a.value - b.value).abs() < 1e-4 * b.value, "{} vs {}", a.value, b.value);
}

#[test]
fn narrow_window_is_flagged_as_clipped() {
    let model = DispersionModel::ktp_qpm_calibrated();
    let engine = engine_at(&model, 24.5);
    let settings = RateSettings { window: RateWindow { lo: 0.995, hi: 1.005 }, ..Default::default() };
    let table = QTable::new(&engine, &settings).unwrap();
    let r =
        pair_rate_kernel(&engine, &table, &ModeSpec::symmetric(0, 0), &FocalConfig::new(1.0, 1.0).unwrap()).unwrap();
    assert!(r.clipped);
}
