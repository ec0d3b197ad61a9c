//! Bounded Nelder–Mead simplex search.
//!
//! Uses the dimension-adaptive coefficients of Gao and Han (2012). Trial
//! points are clamped into the box `[lower, upper]`, which keeps the
//! simplex feasible without a barrier term.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop once every vertex lies within this distance (max-norm) of the best.
    pub tol: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 200_000,
            tol: 1e-8,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

fn clamp(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, &lo), &hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(lo, hi);
    }
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` starting from `x0` inside the box `[lower, upper]`.
pub fn minimize<F>(mut f: F, x0: &[f64], lower: &[f64], upper: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(lower.len() == n && upper.len() == n, "bounds length mismatch");
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        sanitize(f(x))
    };

    let mut start = x0.to_vec();
    clamp(&mut start, lower, upper);
    if n == 0 {
        let value = eval(&start, &mut evals);
        return Minimum { x: start, value, evals, converged: true };
    }

    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    // Single dimension: gamma would be 0.25 and delta 0, so fall back to the
    // classic coefficients.
    let (beta, gamma, delta) = if n == 1 { (2.0, 0.5, 0.5) } else { (beta, gamma, delta) };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(&start, &mut evals);
    simplex.push((start.clone(), v0));
    for i in 0..n {
        let mut x = start.clone();
        let step = opts.initial_step;
        x[i] = if x[i] + step <= upper[i] { x[i] + step } else { x[i] - step };
        clamp(&mut x, lower, upper);
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0].0;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(best).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter < opts.tol {
            converged = true;
            break;
        }
        if evals >= opts.max_evals {
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / nf;
            }
        }
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect();
            clamp(&mut p, lower, upper);
            p
        };

        let xr = along(alpha);
        let fr = eval(&xr, &mut evals);
        let f_best = simplex[0].1;
        let f_second_worst = simplex[n - 1].1;

        if fr < f_best {
            let xe = along(alpha * beta);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < f_second_worst {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = along(alpha * gamma);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-gamma);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < fr.min(worst.1) {
            simplex[n] = (xc, fc);
            continue;
        }

        // Shrink toward the best vertex.
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let mut x: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, v)| b + delta * (v - b)).collect();
            clamp(&mut x, lower, upper);
            let v = eval(&x, &mut evals);
            *vertex = (x, v);
        }
    }

    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value, evals, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 4.0 * (x[1] + 0.2).powi(2) + (x[2] - 0.7).powi(2);
        let m = minimize(f, &[0.0, 0.0, 0.0], &[-1.0; 3], &[1.0; 3], &NelderMeadOptions::default());
        assert!(m.converged);
        assert!((m.x[0] - 0.3).abs() < 1e-7);
        assert!((m.x[1] + 0.2).abs() < 1e-7);
        assert!((m.x[2] - 0.7).abs() < 1e-7);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let m = minimize(f, &[-1.2, 1.0], &[-5.0; 2], &[5.0; 2], &NelderMeadOptions::default());
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn minimum_on_the_boundary() {
        let f = |x: &[f64]| (x[0] - 2.0).powi(2) + x[1] * x[1];
        let m = minimize(f, &[0.0, 0.5], &[-1.0; 2], &[1.0; 2], &NelderMeadOptions::default());
        assert!((m.x[0] - 1.0).abs() < 1e-8);
        assert!(m.x[1].abs() < 1e-7);
    }

    #[test]
    fn nan_is_treated_as_worst() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.5).powi(2) };
        let m = minimize(f, &[0.05], &[-1.0], &[1.0], &NelderMeadOptions::default());
        assert!((m.x[0] - 0.5).abs() < 1e-7);
    }

    #[test]
    fn eval_budget_is_respected() {
        let opts = NelderMeadOptions { max_evals: 50, ..Default::default() };
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let m = minimize(f, &[-1.2, 1.0], &[-5.0; 2], &[5.0; 2], &opts);
        assert!(!m.converged);
        assert!(m.evals <= 50 + 4);
    }

    #[test]
    fn zero_dimensional() {
        let m = minimize(|_| 3.0, &[], &[], &[], &NelderMeadOptions::default());
        assert_eq!((m.value, m.evals, m.converged), (3.0, 1, true));
    }
}
