use mrqm::model::{
    efficiency, eval_f, eval_s, expand_symmetric, reflection_from_f, spectrum, uniform_grid,
};
use mrqm::{reference, DeviceConfig, Kappa, SymmetricHalf};
use num_complex::Complex64;
use proptest::prelude::*;

fn symmetric_device() -> impl Strategy<Value = DeviceConfig> {
    (1usize..=3, 0.3f64..2.0, 1e-3f64..3.0).prop_flat_map(|(half, du, g2)| {
        prop::collection::vec((0.0f64..2.0, 0.0f64..3.0, -4.0f64..4.0), half).prop_map(move |chans| {
            let sym = SymmetricHalf {
                gamma2_inv: g2,
                f: chans.iter().map(|c| c.0).collect(),
                g: chans.iter().map(|c| c.1).collect(),
                delta_c: chans.iter().map(|c| c.2).collect(),
            };
            expand_symmetric(&sym, 2 * half, du).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn f_is_conjugate_symmetric(cfg in symmetric_device(), nu in 0.0f64..5.0) {
        let plus = eval_f(&cfg, nu).unwrap();
        let minus = eval_f(&cfg, -nu).unwrap();
        prop_assert!((minus - plus.conj()).norm() <= 1e-12 * plus.norm().max(1.0));
    }

    #[test]
    fn matched_point_bound(re in 0.0f64..3.0, im in -3.0f64..3.0) {
        let f = Complex64::new(re, im);
        let eps = (f - 1.0).norm();
        let s = reflection_from_f(f, 0.0).unwrap();
        prop_assert!(s.norm() <= eps / (1.0 + f).norm() * (1.0 + 1e-14));
        if eps <= 1.0 {
            prop_assert!(s.norm() <= eps * (1.0 + 1e-14));
        }
    }

    #[test]
    fn efficiency_matches_pointwise_reflection(cfg in symmetric_device()) {
        let grid = uniform_grid(-3.0, 3.0, 0.25).unwrap();
        let curve = efficiency(&spectrum(&cfg, &grid).unwrap());
        for (nu, eta) in grid.iter().zip(&curve.eta) {
            let direct = 1.0 - eval_s(&cfg, *nu).unwrap().norm_sqr();
            prop_assert!((eta - direct).abs() <= 4.0 * f64::EPSILON);
        }
    }

    /// Multiplying every rate and frequency by `s` (so `f_sq` by `s^2`)
    /// leaves `S` unchanged at the correspondingly scaled frequency.
    #[test]
    fn response_is_scale_free(cfg in symmetric_device(), s in 0.2f64..5.0, nu in -3.0f64..3.0) {
        let channels = cfg.channels.iter().map(|c| {
            let mut c = c.clone();
            c.f_sq *= s * s;
            c.gamma2_inv *= s;
            c.g *= s;
            c.delta_c *= s;
            c.gamma_mini *= s;
            c
        }).collect();
        let scaled = DeviceConfig::new(cfg.n_channels, cfg.delta_unit * s, Kappa::Infinite, cfg.gamma_r_tilde, channels).unwrap();
        let a = eval_s(&cfg, nu).unwrap();
        let b = eval_s(&scaled, nu * s).unwrap();
        prop_assert!((a - b).norm() <= 1e-10);
    }
}

#[test]
fn reflection_at_centre_grows_with_common_loss() {
    // Adjust the g's so that F(0) = 1 exactly in the lossless device.
    let base = reference::hmr4_config();
    let f0 = eval_f(&base, 0.0).unwrap();
    assert!(f0.im.abs() < 1e-15);
    let mut channels = base.channels.clone();
    for c in &mut channels {
        c.g /= f0.re;
    }
    let matched = DeviceConfig::new(4, 1.0, Kappa::Infinite, 0.0, channels).unwrap();
    assert!((eval_f(&matched, 0.0).unwrap() - 1.0).norm() < 1e-14);
    assert!(eval_s(&matched, 0.0).unwrap().norm() < 1e-14);

    let mut prev = -1.0;
    for k in 0..=100 {
        let gr = 1e-3 * k as f64;
        let cfg = matched.with_losses(gr, 0.0).unwrap();
        let s0 = eval_s(&cfg, 0.0).unwrap();
        // Closed form once F(0) = 1 + gr.
        assert!((s0 - Complex64::new(-gr / (2.0 + gr), 0.0)).norm() < 1e-14, "gr = {gr}");
        assert!(s0.norm() > prev || k == 0);
        prev = s0.norm();
    }
}

#[test]
fn config_json_round_trip() {
    let cfg = reference::hmr4_config().with_kappa(Kappa::Finite(100.0)).unwrap();
    let text = serde_json::to_string(&cfg).unwrap();
    let back: DeviceConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
    assert_eq!(back.hash(), cfg.hash());

    let broadband = reference::hmr4_config();
    let back: DeviceConfig = serde_json::from_str(&serde_json::to_string(&broadband).unwrap()).unwrap();
    assert_eq!(back.kappa, Kappa::Infinite);
}
