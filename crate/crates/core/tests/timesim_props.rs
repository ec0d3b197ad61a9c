use mrqm::reference;
use mrqm::timesim::{
    compare_fd_td, discretize_all, discretize_ensemble, make_pulse, max_stable_dt, simulate, PulseShape, PulseSpec,
    SimOptions, SimRecord, TimeGrid,
};
use mrqm::{DeviceConfig, Kappa};
use num_complex::Complex64;

fn device() -> DeviceConfig {
    reference::hmr4_config().with_kappa(Kappa::Finite(100.0)).unwrap()
}

fn run(cfg: &DeviceConfig, n_spins: usize, spec: &PulseSpec, t_end: f64) -> SimRecord {
    let ens = discretize_all(cfg, n_spins).unwrap();
    let dt = max_stable_dt(cfg, &ens).unwrap();
    let pulse = make_pulse(spec, &TimeGrid::covering(t_end, dt).unwrap()).unwrap();
    simulate(cfg, &ens, &pulse, dt, &SimOptions::default()).unwrap()
}

fn peak(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

#[test]
fn response_is_linear_in_the_drive() {
    let cfg = device();
    let ens = discretize_all(&cfg, 16).unwrap();
    let dt = max_stable_dt(&cfg, &ens).unwrap();
    let spec = PulseSpec::plateau_gaussian(1.0);
    let pulse = make_pulse(&spec, &TimeGrid::covering(11.0, dt).unwrap()).unwrap();
    let alpha = Complex64::new(-0.7, 1.9);
    let base = simulate(&cfg, &ens, &pulse, dt, &SimOptions::default()).unwrap();
    let scaled = simulate(&cfg, &ens, &pulse.scaled(alpha), dt, &SimOptions::default()).unwrap();
    let tol = 1e-12 * alpha.norm() * peak(&base.a_out);
    for (x, y) in base.a_out.iter().zip(&scaled.a_out) {
        assert!((alpha * x - y).norm() <= tol);
    }
    for (bx, by) in base.b.iter().zip(&scaled.b) {
        for (x, y) in bx.iter().zip(by) {
            assert!((alpha * x - y).norm() <= tol);
        }
    }
}

#[test]
fn delayed_drive_gives_delayed_response() {
    let cfg = device();
    let ens = discretize_all(&cfg, 16).unwrap();
    let dt = max_stable_dt(&cfg, &ens).unwrap();
    let shift_steps = 1000;
    let spec = PulseSpec { shape: PulseShape::Sech, center_time: 7.0, duration: 0.3, carrier: 0.2 };
    // Centred well inside the window so both runs start from a negligible
    // tail; the carrier makes the delayed pulse pick up a constant phase.
    let delayed = PulseSpec { center_time: spec.center_time + shift_steps as f64 * dt, ..spec };
    let phase = Complex64::from_polar(1.0, -spec.carrier * shift_steps as f64 * dt);
    let grid = TimeGrid::covering(16.0, dt).unwrap();
    let rec = simulate(&cfg, &ens, &make_pulse(&spec, &grid).unwrap(), dt, &SimOptions::default()).unwrap();
    let late = simulate(&cfg, &ens, &make_pulse(&delayed, &grid).unwrap(), dt, &SimOptions::default()).unwrap();
    let tol = 1e-9 * peak(&rec.a_out);
    for k in 0..rec.len() - shift_steps {
        assert!((rec.a_out[k] * phase - late.a_out[k + shift_steps]).norm() <= tol, "k = {k}");
    }
}

#[test]
fn ledger_balances_with_losses() {
    let cfg = device().with_losses(1e-2, 2e-2).unwrap();
    let rec = run(&cfg, 32, &PulseSpec::plateau_gaussian(1.0), 12.0);
    let last = rec.last();
    assert!(last.dissipated > 0.0);
    assert!(rec.balance_error() <= 1e-6);
    // Energy in equals energy out, stored and dissipated, at every step.
    for e in &rec.ledger {
        assert!(e.imbalance().abs() <= 1e-6 * last.input.max(1e-300));
    }
}

#[test]
fn fd_td_error_shrinks_with_more_spins() {
    let cfg = device();
    let spec = PulseSpec::plateau_gaussian(1.0);
    let errs: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|&n| compare_fd_td(&run(&cfg, n, &spec, 30.0), &cfg).unwrap())
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(errs[1] <= 1e-2);
}

#[test]
fn discrete_line_converges_to_lorentzian() {
    let cfg = reference::hmr4_config();
    let ch = cfg.channel(1).unwrap();
    let damping = 0.05;
    let closed = |nu: f64| ch.f_sq / Complex64::new(ch.gamma2_inv + damping, ch.delta_spin - nu);
    let err = |n| {
        let ens = discretize_ensemble(ch, n).unwrap();
        (-20..=20)
            .map(|k| {
                let nu = ch.delta_spin + 0.05 * k as f64;
                (ens.susceptibility(nu, damping) - closed(nu)).norm() / closed(nu).norm()
            })
            .fold(0.0, f64::max)
    };
    let errs: Vec<f64> = [50, 100, 200, 400].iter().map(|&n| err(n)).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(errs[2] < 5e-3 && errs[3] < 1e-4, "{errs:?}");
}
