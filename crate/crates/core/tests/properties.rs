mod common;

use proptest::prelude::*;

use common::scenario;
use thzsec::atmosphere::{
    classify, db_per_km_to_np_per_m, db_to_np, np_per_m_to_db_per_km, np_to_db, rytov_variances,
    turbulence_attenuation_db, ExtinctionBreakdown, TurbulenceStrength, WaveModel,
};
use thzsec::channel::{
    los_gain, nlos_gain, optimize_steering, scattering_segment, ScatteringParams,
};
use thzsec::outage::{
    lognormal_cdf, outage_probability, threshold_gain, FadingModel, SecrecyCurve, Threshold,
};
use thzsec::secrecy::{ook_mutual_information, secrecy_capacity, DetectionRates, MiForm};

fn ext(alpha_g: f64) -> ExtinctionBreakdown {
    ExtinctionBreakdown::from_coefficients(alpha_g, 5e-4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn db_np_roundtrip(v in 1e-6f64..1e4) {
        prop_assert!((np_to_db(db_to_np(v)) / v - 1.0).abs() < 1e-12);
        prop_assert!((np_per_m_to_db_per_km(db_per_km_to_np_per_m(v)) / v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transmittance_multiplies(a1 in 0.0f64..0.02, a2 in 0.0f64..0.02, d in 1.0f64..2000.0) {
        let joint = ExtinctionBreakdown::from_coefficients(a1, a2).transmittance(d);
        let split = ExtinctionBreakdown::from_coefficients(a1, 0.0).transmittance(d)
            * ExtinctionBreakdown::from_coefficients(a2, 0.0).transmittance(d);
        prop_assert!((joint / split - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rytov_ratio(f in 100e9f64..1e12, cn2 in 1e-18f64..1e-9, l in 1.0f64..5000.0) {
        let r = rytov_variances(f, cn2, l);
        prop_assert!((r.plane / r.spherical / 2.46 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn attenuation_increases_with_cn2(f in 100e9f64..1e12, a in 1e-16f64..1e-11, b in 1e-16f64..1e-11) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi > lo * (1.0 + 1e-9));
        let at = |c| turbulence_attenuation_db(f, c, 1000.0, WaveModel::Spherical);
        if let (Ok(x), Ok(y)) = (at(lo), at(hi)) {
            prop_assert!(y > x);
        }
    }

    #[test]
    fn regime_gate_is_exact(f in 100e9f64..1e12, cn2 in 1e-14f64..1e-9) {
        let r = rytov_variances(f, cn2, 1000.0);
        for wave in [WaveModel::Plane, WaveModel::Spherical] {
            let res = turbulence_attenuation_db(f, cn2, 1000.0, wave);
            prop_assert_eq!(res.is_err(), r.for_wave(wave) >= 1.0);
        }
    }

    #[test]
    fn classification_is_monotone(a in -20.0f64..-8.0, b in -20.0f64..-8.0) {
        let rank = |c: f64| match classify(10f64.powf(c)) {
            TurbulenceStrength::Weak => 0,
            TurbulenceStrength::Moderate => 1,
            TurbulenceStrength::Strong => 2,
        };
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(rank(lo) <= rank(hi));
    }

    #[test]
    fn mi_non_negative(s in 0.0f64..500.0, n in 0.0f64..500.0, q in 0.001f64..0.999) {
        let v = ook_mutual_information(s, n, q, MiForm::Standard).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert!(v.is_finite());
    }

    #[test]
    fn mi_monotone_in_signal(s in 0.0f64..200.0, ds in 1e-3f64..50.0, n in 0.0f64..200.0, q in 0.05f64..0.95) {
        let a = ook_mutual_information(s, n, q, MiForm::Standard).unwrap();
        let b = ook_mutual_information(s + ds, n, q, MiForm::Standard).unwrap();
        prop_assert!(b >= a);
    }

    #[test]
    fn secrecy_clamps(l in 0.0f64..100.0, nn in 0.0f64..100.0, b in 0.0f64..10.0, e in 0.0f64..10.0) {
        let rates = DetectionRates {
            lambda_l: l, lambda_n: nn, lambda_b: b, lambda_e: e,
            q: 0.5, e_photon: 2.25e-22, slot_s: 1e-10,
        };
        let r = secrecy_capacity(&rates, MiForm::Standard).unwrap();
        prop_assert!(r.c_s_slot >= 0.0);
        prop_assert_eq!(r.c_s_slot, (r.i_bob - r.i_eve).max(0.0));
        prop_assert_eq!(r.insecure, r.c_s_slot == 0.0);
        // Eve sees at least as much signal through no more noise
        if nn >= l && e <= b {
            prop_assert_eq!(r.c_s_slot, 0.0);
        }
    }

    #[test]
    fn gains_reflect(x in 0.0f64..1000.0, y in 1.0f64..100.0, steer in 0.01f64..3.1) {
        let e = ext(0.008);
        let p = ScatteringParams::default();
        let up = scenario(x, y);
        let down = scenario(x, -y);
        prop_assert_eq!(los_gain(&up, &e), los_gain(&down, &e));
        let a = nlos_gain(&up, &e, &p, steer);
        let b = nlos_gain(&down, &e, &p, steer);
        prop_assert!(a == b || (a / b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nlos_linear_in_area(x in 50.0f64..950.0, y in 2.0f64..80.0, k in 0.2f64..4.0) {
        let e = ext(0.008);
        let p = ScatteringParams::default();
        let s = scenario(x, y);
        let steer = thzsec::channel::steering_for_aim(s.eve_xy, x - 10.0);
        let mut big = s;
        big.eve.aperture_d *= k.sqrt();
        let g0 = nlos_gain(&s, &e, &p, steer);
        let g1 = nlos_gain(&big, &e, &p, steer);
        prop_assume!(g0 > 0.0);
        prop_assert!((g1 / g0 / k - 1.0).abs() < 1e-9);
    }

    #[test]
    fn segment_inside_link(x in -200.0f64..1200.0, y in 1.0f64..100.0, steer in -3.1f64..3.1, fov in 1.0f64..180.0) {
        let mut s = scenario(x, y);
        s.eve.fov_full_rad = fov.to_radians();
        if let Ok((la, lb)) = scattering_segment(&s, steer) {
            prop_assert!(0.0 <= la && la < lb && lb <= 1000.0);
        }
    }

    #[test]
    fn outage_monotone_in_threshold(s2 in 0.01f64..0.95, a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let m = FadingModel::new(1e-9, s2).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let p_lo = outage_probability(&m, Threshold::Gain(m.median() * lo.exp()));
        let p_hi = outage_probability(&m, Threshold::Gain(m.median() * hi.exp()));
        prop_assert!(p_lo <= p_hi);
        prop_assert!((0.0..=1.0).contains(&p_lo) && (0.0..=1.0).contains(&p_hi));
    }

    #[test]
    fn outage_monotone_in_rate_and_eve(
        i_eve in 0.0f64..0.5,
        di in 0.0f64..0.5,
        r in 1e-4f64..2.0,
        dr in 0.0f64..1.0,
        mean in 1e-10f64..1e-8,
        dmean in 0.0f64..1e-8,
    ) {
        let curve = |i_eve| SecrecyCurve {
            bob_counts_per_gain: 4.4e8, lambda_b: 0.2, i_eve, q: 0.5, form: MiForm::Standard,
        };
        let p = |i_eve, rate, mean| {
            let m = FadingModel::new(mean, 0.3).unwrap();
            outage_probability(&m, threshold_gain(&curve(i_eve), rate).unwrap())
        };
        let base = p(i_eve, r, mean);
        prop_assert!(p(i_eve, r + dr, mean) >= base);
        prop_assert!(p(i_eve + di, r, mean) >= base);
        prop_assert!(p(i_eve, r, mean + dmean) <= base);
    }

    #[test]
    fn lognormal_cdf_bounds(s2 in 0.0f64..0.99, g in 1e-20f64..1.0) {
        let m = FadingModel::new(1e-9, s2).unwrap();
        let c = lognormal_cdf(g, &m);
        prop_assert!((0.0..=1.0).contains(&c));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn isotropic_nlos_falls_with_distance(x in 100.0f64..900.0, y in 3.0f64..60.0, dy in 1.0f64..40.0) {
        let e = ext(0.008);
        let p = ScatteringParams::new(0.0, 0.0).unwrap();
        let near = optimize_steering(&scenario(x, y), &e, &p).g_nlos;
        let far = optimize_steering(&scenario(x, y + dy), &e, &p).g_nlos;
        prop_assert!(far <= near * (1.0 + 1e-6));
    }

    #[test]
    fn optimum_not_below_foot_point(x in 0.0f64..1000.0, y in 2.0f64..100.0) {
        let e = ext(0.008);
        let p = ScatteringParams::default();
        let s = scenario(x, y);
        let opt = optimize_steering(&s, &e, &p);
        let foot = nlos_gain(&s, &e, &p, thzsec::channel::steering_for_aim(s.eve_xy, x.clamp(0.0, 1000.0)));
        prop_assert!(opt.g_nlos >= foot);
    }
}
