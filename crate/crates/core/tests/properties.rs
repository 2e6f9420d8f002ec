use lgbright_core::dispersion::{CrystalSpec, DispersionModel};
use lgbright_core::lgmodes::{
    alpha_coeff, assoc_laguerre, beta_coeff, gd_term, zeta_coeff, FocalConfig, ModeSpec, WaistConfig,
};
use lgbright_core::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn laguerre_recurrence_in_degree(n in 1u32..10, a in 0u32..6, x in 0.0f64..8.0) {
        // (n+1)L_{n+1} = (2n+1+a−x)L_n − (n+a)L_{n−1}
        let nf = f64::from(n);
        let lhs = (nf + 1.0) * assoc_laguerre(n + 1, a, x);
        let rhs = (2.0 * nf + 1.0 + f64::from(a) - x) * assoc_laguerre(n, a, x)
            - (nf + f64::from(a)) * assoc_laguerre(n - 1, a, x);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
        // L_n^a(0) = C(n+a, n)
        let binom: f64 = (1..=n).map(|k| f64::from(a + k) / f64::from(k)).product();
        prop_assert!((assoc_laguerre(n, a, 0.0) - binom).abs() <= 1e-12 * binom);
    }

    #[test]
    fn alpha_exchange_symmetry(
        l in 0u32..5, n in 0u32..5, ms in 0u32..5, mi in 0u32..5,
        wp in 5e-6f64..500e-6, ws in 5e-6f64..500e-6, wi in 5e-6f64..500e-6,
    ) {
        prop_assume!(ms <= n && mi <= n);
        let mode = ModeSpec::symmetric(l, n);
        let a = alpha_coeff(&mode, ms, mi, &WaistConfig::new(wp, ws, wi).unwrap(), 0.03).unwrap();
        let b = alpha_coeff(&mode, mi, ms, &WaistConfig::new(wp, wi, ws).unwrap(), 0.03).unwrap();
        prop_assert!(a.is_finite());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn coefficients_finite_in_range(
        l in 0u32..9, n in 0u32..9, ms in 0u32..9, mi in 0u32..9,
        fp in 0.01f64..20.0, fsi in 0.01f64..20.0,
    ) {
        prop_assume!(ms <= n && mi <= n);
        let z = zeta_coeff(l, n, ms, mi).unwrap();
        prop_assert_eq!(z, zeta_coeff(l, n, mi, ms).unwrap());
        let focal = FocalConfig::new(fp, fsi).unwrap();
        let b = beta_coeff(&ModeSpec::symmetric(l, n), ms, mi, &focal, 0.03, 3.0e7).unwrap();
        prop_assert!(b.is_finite() && b != 0.0);
        prop_assert_eq!(b.signum(), z.signum());
    }

    #[test]
    fn gd_term_is_one_without_focusing(l in 0u32..9, n in 0u32..9, s in 0u32..17) {
        prop_assume!(s <= 2 * n);
        let one = Complex64::new(1.0, 0.0);
        prop_assert_eq!(gd_term(l, n, s.min(n), s - s.min(n), one, one), one);
    }

    #[test]
    fn phase_mismatch_mirror_symmetry(r in 0.6f64..1.4, t in 15.0f64..60.0) {
        let m = DispersionModel::ktp_qpm_calibrated();
        let c = CrystalSpec::ppktp_405();
        let w = 0.5 * r * c.pump_omega();
        let a = m.phase_mismatch(w, t, &c).unwrap();
        let b = m.phase_mismatch(c.pump_omega() - w, t, &c).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn focal_waist_round_trip(fp in 0.01f64..50.0, fsi in 0.01f64..50.0) {
        let (length, kp, kd) = (0.03, 2.9e7, 1.36e7);
        let w = FocalConfig::new(fp, fsi).unwrap().to_waists(length, kp, kd);
        prop_assert!((length / (kp * w.w_p * w.w_p) - fp).abs() <= 1e-12 * fp);
        prop_assert!((length / (kd * w.w_s * w.w_s) - fsi).abs() <= 1e-12 * fsi);
        prop_assert_eq!(w.w_s, w.w_i);
    }
}
