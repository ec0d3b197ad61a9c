//! Spectral fitting of the device response to an ideal absorber.
//!
//! An ideal interface has `S(nu) = 0`, i.e. `F(nu) = 1`, at every
//! frequency. The search enforces `F(0) = 1` through a quadratic penalty and
//! pulls `F` toward 1 at `2N - 1` fit points spread over the positive half of
//! the band; for index-symmetric designs `F(-nu) = conj F(nu)`, so the
//! negative half follows.
//!
//! Free parameters are `1/T2*` (shared), and `f_n`, `g_n`, `Delta_n` per
//! channel. With `symmetry` on, channels `±n` share `f` and `g` and have
//! opposite `Delta`, which leaves `1 + 3N/2` parameters (7 for `N = 4`)
//! instead of `1 + 3N` (13).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    self, eval_f, reflection_from_f, spin_line_centers, ChannelParams, DeviceConfig, Kappa,
};
use crate::nelder_mead::{self, NelderMeadOptions};
use crate::reference;

/// Objective value returned when the response cannot be evaluated.
pub const PENALTY: f64 = 1e12;

/// Largest accepted `|F(0) - 1|`.
pub const CONSTRAINT_TOL: f64 = 1e-6;

/// Penalty weights of the search phases, followed by polish weights used
/// only while the constraint is still violated.
const SEARCH_WEIGHTS: [f64; 3] = [1e2, 1e4, 1e6];
const POLISH_WEIGHTS: [f64; 3] = [1e6, 1e8, 1e10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveKind {
    /// `sum |1 - F(nu_m)|^2`, the numerator of `S` up to the common factor.
    #[serde(rename = "one_minus_F")]
    OneMinusF,
    /// `sum |S(nu_m)|^2`.
    #[serde(rename = "reflection_S")]
    ReflectionS,
}

impl Default for ObjectiveKind {
    fn default() -> Self {
        ObjectiveKind::OneMinusF
    }
}

/// Losses applied while optimizing (off by default).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Losses {
    pub gamma_r_tilde: f64,
    pub gamma_mini: f64,
}

/// `N_opt = 2N - 1` points `m * spin_max / (2 N_opt)`, where `spin_max` is
/// the outermost spin-line centre `delta_unit (N - 1) / 2`.
pub fn default_fit_points(n_channels: usize, delta_unit: f64) -> Result<Vec<f64>> {
    let centers = spin_line_centers(n_channels, delta_unit)?;
    let spin_max = centers.values().copied().fold(0.0, f64::max);
    let n_opt = 2 * n_channels - 1;
    Ok((1..=n_opt).map(|m| m as f64 * spin_max / (2 * n_opt) as f64).collect())
}

/// Ordering of the free-parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamLayout {
    pub n_channels: usize,
    pub symmetric: bool,
    /// Channel index of each `f`/`g`/`Delta` slot.
    slots: Vec<i32>,
}

impl ParamLayout {
    pub fn new(n_channels: usize, symmetric: bool) -> Result<Self> {
        let centers = spin_line_centers(n_channels, 1.0)?;
        let slots = if symmetric {
            centers.keys().copied().filter(|&n| n > 0).collect()
        } else {
            centers.keys().copied().collect()
        };
        Ok(Self { n_channels, symmetric, slots })
    }

    pub fn len(&self) -> usize {
        1 + 3 * self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn names(&self) -> Vec<String> {
        let mut names = vec!["gamma2_inv".to_string()];
        for prefix in ["f", "g", "delta_c"] {
            names.extend(self.slots.iter().map(|n| format!("{prefix}_{n}")));
        }
        names
    }

    /// Default search box: `1/T2* in [0.1, 5]`, `f, g in [0.05, 3]`,
    /// `|Delta_n| in [0, 3]`, all in units of `delta_unit`.
    pub fn default_bounds(&self, delta_unit: f64) -> Vec<[f64; 2]> {
        let k = self.slots.len();
        let mut b = vec![[0.1 * delta_unit, 5.0 * delta_unit]];
        b.extend(std::iter::repeat([0.05 * delta_unit, 3.0 * delta_unit]).take(2 * k));
        b.extend(self.slots.iter().map(|&n| {
            if n > 0 {
                [0.0, 3.0 * delta_unit]
            } else {
                [-3.0 * delta_unit, 0.0]
            }
        }));
        b
    }

    /// Lossless, broadband-limit device for a parameter vector.
    pub fn to_config(&self, params: &[f64], delta_unit: f64, losses: Losses) -> Result<DeviceConfig> {
        if params.len() != self.len() {
            return Err(Error::invalid(format!(
                "params: expected {} values, found {}",
                self.len(),
                params.len()
            )));
        }
        let k = self.slots.len();
        let gamma2_inv = params[0];
        let (f, rest) = params[1..].split_at(k);
        let (g, delta_c) = rest.split_at(k);
        let centers = spin_line_centers(self.n_channels, delta_unit)?;
        let channels = centers
            .keys()
            .map(|&n| {
                let (slot, mirror) = match self.slots.iter().position(|&s| s == n) {
                    Some(i) => (i, 1.0),
                    None => (self.slots.iter().position(|&s| s == -n).expect("mirrored slot"), -1.0),
                };
                ChannelParams::new(n, f[slot] * f[slot], gamma2_inv, g[slot], mirror * delta_c[slot], losses.gamma_mini)
            })
            .collect();
        DeviceConfig::new(self.n_channels, delta_unit, Kappa::Infinite, losses.gamma_r_tilde, channels)
    }

    /// Full 13-style vector equivalent to a symmetric one.
    pub fn symmetric_to_full(&self, params: &[f64]) -> Result<Vec<f64>> {
        if !self.symmetric {
            return Ok(params.to_vec());
        }
        let full = ParamLayout::new(self.n_channels, false)?;
        let k = self.slots.len();
        let mut out = vec![params[0]];
        for block in 0..3 {
            let sign_flip = block == 2;
            out.extend(full.slots.iter().map(|&n| {
                let v = params[1 + block * k + n.unsigned_abs() as usize - 1];
                if sign_flip && n < 0 {
                    -v
                } else {
                    v
                }
            }));
        }
        Ok(out)
    }
}

fn default_delta_unit() -> f64 {
    1.0
}

fn default_weight() -> f64 {
    SEARCH_WEIGHTS[0]
}

fn default_symmetry() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemDoc {
    #[serde(rename = "N", alias = "n_channels")]
    n_channels: usize,
    #[serde(default = "default_delta_unit")]
    delta_unit: f64,
    #[serde(default)]
    fit_points: Option<Vec<f64>>,
    #[serde(default)]
    objective_kind: ObjectiveKind,
    #[serde(default = "default_symmetry")]
    symmetry: bool,
    #[serde(default)]
    bounds: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_weight")]
    constraint_weight: f64,
    #[serde(default)]
    losses: Losses,
}

impl TryFrom<ProblemDoc> for OptimizationProblem {
    type Error = Error;

    fn try_from(doc: ProblemDoc) -> Result<Self> {
        let mut p = OptimizationProblem::new(doc.n_channels, doc.delta_unit, doc.symmetry)?;
        if let Some(points) = doc.fit_points {
            p.fit_points = points;
        }
        if let Some(bounds) = doc.bounds {
            p.bounds = bounds;
        }
        p.objective_kind = doc.objective_kind;
        p.constraint_weight = doc.constraint_weight;
        p.losses = doc.losses;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemDoc")]
pub struct OptimizationProblem {
    #[serde(rename = "N")]
    pub n_channels: usize,
    pub delta_unit: f64,
    pub fit_points: Vec<f64>,
    pub objective_kind: ObjectiveKind,
    pub symmetry: bool,
    pub bounds: Vec<[f64; 2]>,
    /// Weight of `|F(0) - 1|^2` in the reported objective.
    pub constraint_weight: f64,
    pub losses: Losses,
}

impl OptimizationProblem {
    /// Problem with default fit points, bounds and a lossless objective.
    pub fn new(n_channels: usize, delta_unit: f64, symmetry: bool) -> Result<Self> {
        let layout = ParamLayout::new(n_channels, symmetry)?;
        Ok(Self {
            n_channels,
            delta_unit,
            fit_points: default_fit_points(n_channels, delta_unit)?,
            objective_kind: ObjectiveKind::OneMinusF,
            symmetry,
            bounds: layout.default_bounds(delta_unit),
            constraint_weight: SEARCH_WEIGHTS[0],
            losses: Losses::default(),
        })
    }

    pub fn layout(&self) -> ParamLayout {
        ParamLayout::new(self.n_channels, self.symmetry).expect("validated problem")
    }

    pub fn validate(&self) -> Result<()> {
        let layout = ParamLayout::new(self.n_channels, self.symmetry)?;
        if !(self.delta_unit.is_finite() && self.delta_unit > 0.0) {
            return Err(Error::invalid("delta_unit: must be positive"));
        }
        if self.fit_points.is_empty() {
            return Err(Error::invalid("fit_points: must not be empty"));
        }
        if self.fit_points[0] <= 0.0 || self.fit_points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("fit_points: must be strictly positive and increasing"));
        }
        if self.bounds.len() != layout.len() {
            return Err(Error::invalid(format!(
                "bounds: expected {} pairs, found {}",
                layout.len(),
                self.bounds.len()
            )));
        }
        for (i, [lo, hi]) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::invalid(format!("bounds[{i}]: invalid range [{lo}, {hi}]")));
            }
        }
        if !(self.constraint_weight.is_finite() && self.constraint_weight >= 0.0) {
            return Err(Error::invalid("constraint_weight: must be >= 0"));
        }
        if !(self.losses.gamma_r_tilde >= 0.0 && self.losses.gamma_mini >= 0.0) {
            return Err(Error::invalid("losses: must be >= 0"));
        }
        Ok(())
    }

    /// Problem whose box is collapsed onto `params`.
    pub fn pinned_at(&self, params: &[f64]) -> Self {
        let mut p = self.clone();
        p.bounds = params.iter().map(|&v| [v, v]).collect();
        p
    }
}

/// Fit residual plus `weight * |F(0) - 1|^2` for a device.
fn penalized(config: &DeviceConfig, problem: &OptimizationProblem, weight: f64) -> f64 {
    let eval = || -> Result<f64> {
        let mut sum = 0.0;
        for &nu in &problem.fit_points {
            let f = eval_f(config, nu)?;
            sum += match problem.objective_kind {
                ObjectiveKind::OneMinusF => (1.0 - f).norm_sqr(),
                ObjectiveKind::ReflectionS => reflection_from_f(f, nu)?.norm_sqr(),
            };
        }
        let f0 = eval_f(config, 0.0)?;
        Ok(sum + weight * (f0 - 1.0).norm_sqr())
    };
    match eval() {
        Ok(v) if v.is_finite() => v,
        _ => PENALTY,
    }
}

/// Objective of a device under `problem`, with the problem's own weight.
/// The device is evaluated as given (its losses and `kappa` are used).
pub fn objective_for_config(config: &DeviceConfig, problem: &OptimizationProblem) -> f64 {
    penalized(config, problem, problem.constraint_weight)
}

fn weighted(params: &[f64], problem: &OptimizationProblem, layout: &ParamLayout, weight: f64) -> f64 {
    match layout.to_config(params, problem.delta_unit, problem.losses) {
        Ok(cfg) => penalized(&cfg, problem, weight),
        Err(_) => PENALTY,
    }
}

/// Objective of a parameter vector. Unevaluable points score [`PENALTY`]
/// instead of failing, so the simplex search simply moves away from them.
pub fn objective(params: &[f64], problem: &OptimizationProblem) -> f64 {
    weighted(params, problem, &problem.layout(), problem.constraint_weight)
}

/// `|F(0) - 1|` of a lossless broadband-limit device built from `params`.
pub fn constraint_residual(params: &[f64], problem: &OptimizationProblem) -> f64 {
    problem
        .layout()
        .to_config(params, problem.delta_unit, problem.losses)
        .and_then(|cfg| eval_f(&cfg, 0.0))
        .map(|f0| (f0 - 1.0).norm())
        .unwrap_or(f64::INFINITY)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions {
    pub n_starts: usize,
    pub seed: u64,
    /// Objective evaluations allowed per start, over all phases.
    pub max_evals: usize,
    /// Simplex diameter at which a phase stops, in unit-box coordinates.
    pub tol: f64,
    /// Worker threads; `None` uses the global pool.
    #[serde(default)]
    pub jobs: Option<usize>,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            n_starts: 50,
            seed: 0,
            max_evals: 200_000,
            tol: 1e-8,
            jobs: None,
        }
    }
}

/// Minimum absorbed fraction over the working band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauSummary {
    pub half_width: f64,
    pub min_eta_lossless: f64,
    /// With `gamma_r_tilde = gamma_mini = 1e-2`.
    pub min_eta_lossy: f64,
}

/// Sampling step used for plateau summaries, in units of `delta_unit`.
pub const PLATEAU_STEP: f64 = 1e-3;

impl PlateauSummary {
    pub fn of(config: &DeviceConfig) -> Self {
        let hw = reference::PLATEAU_HALF_WIDTH * config.delta_unit;
        let step = PLATEAU_STEP * config.delta_unit;
        let min_eta = |cfg: Result<DeviceConfig>| {
            cfg.and_then(|c| model::min_efficiency(&c, hw, step)).unwrap_or(f64::NAN)
        };
        Self {
            half_width: hw,
            min_eta_lossless: min_eta(config.with_losses(0.0, 0.0)),
            min_eta_lossy: min_eta(config.with_losses(1e-2, 1e-2)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub n_channels: usize,
    pub delta_unit: f64,
    pub symmetry: bool,
    pub objective_kind: ObjectiveKind,
    pub param_names: Vec<String>,
    pub best_params: Vec<f64>,
    pub objective_value: f64,
    pub constraint_residual: f64,
    pub n_starts: usize,
    pub n_converged: usize,
    pub n_evals: usize,
    pub plateau_summary: PlateauSummary,
}

impl OptResult {
    /// Scores `params` under `problem`; search statistics are left at zero.
    pub fn evaluate(problem: &OptimizationProblem, params: &[f64]) -> Result<Self> {
        let layout = problem.layout();
        let config = layout.to_config(params, problem.delta_unit, Losses::default())?;
        Ok(Self {
            n_channels: problem.n_channels,
            delta_unit: problem.delta_unit,
            symmetry: problem.symmetry,
            objective_kind: problem.objective_kind,
            param_names: layout.names(),
            best_params: params.to_vec(),
            objective_value: objective(params, problem),
            constraint_residual: constraint_residual(params, problem),
            n_starts: 0,
            n_converged: 0,
            n_evals: 0,
            plateau_summary: PlateauSummary::of(&config),
        })
    }

    /// Winning device, lossless and in the broadband limit.
    pub fn config(&self) -> Result<DeviceConfig> {
        ParamLayout::new(self.n_channels, self.symmetry)?.to_config(&self.best_params, self.delta_unit, Losses::default())
    }
}

#[derive(Debug, Clone)]
struct StartOutcome {
    params: Vec<f64>,
    value: f64,
    residual: f64,
    evals: usize,
}

fn run_start(problem: &OptimizationProblem, layout: &ParamLayout, free: &[usize], start: Vec<f64>, opts: &OptimizeOptions) -> StartOutcome {
    let to_params = |u: &[f64]| -> Vec<f64> {
        let mut p: Vec<f64> = problem.bounds.iter().map(|b| b[0]).collect();
        for (&i, &ui) in free.iter().zip(u) {
            let [lo, hi] = problem.bounds[i];
            p[i] = lo + ui * (hi - lo);
        }
        p
    };
    let lower = vec![0.0; free.len()];
    let upper = vec![1.0; free.len()];
    let mut u = start;
    let mut evals = 0;

    let phase = |u: &mut Vec<f64>, weight: f64, step: f64, evals: &mut usize| {
        let budget = opts.max_evals.saturating_sub(*evals);
        if budget == 0 {
            return;
        }
        let nm = NelderMeadOptions { max_evals: budget, tol: opts.tol, initial_step: step };
        let m = nelder_mead::minimize(|x| weighted(&to_params(x), problem, layout, weight), u, &lower, &upper, &nm);
        *evals += m.evals;
        *u = m.x;
    };

    for (k, &w) in SEARCH_WEIGHTS.iter().enumerate() {
        phase(&mut u, w, if k == 0 { 0.1 } else { 0.02 }, &mut evals);
    }
    for &w in &POLISH_WEIGHTS {
        phase(&mut u, w, 1e-3, &mut evals);
        if constraint_residual(&to_params(&u), problem) <= CONSTRAINT_TOL {
            break;
        }
    }

    let params = to_params(&u);
    StartOutcome {
        value: objective(&params, problem),
        residual: constraint_residual(&params, problem),
        params,
        evals,
    }
}

fn better(a: &StartOutcome, b: &StartOutcome) -> bool {
    a.value
        .total_cmp(&b.value)
        .then(a.residual.total_cmp(&b.residual))
        .then_with(|| {
            a.params
                .iter()
                .zip(&b.params)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .is_lt()
}

/// Multistart bounded simplex search with an escalating penalty on
/// `|F(0) - 1|`.
///
/// Start points are drawn up front from a ChaCha generator seeded with
/// `opts.seed`, so the result does not depend on `opts.jobs`.
pub fn optimize(problem: &OptimizationProblem, opts: &OptimizeOptions) -> Result<OptResult> {
    problem.validate()?;
    if opts.n_starts == 0 {
        return Err(Error::invalid("n_starts: must be >= 1"));
    }
    let layout = problem.layout();
    let free: Vec<usize> = (0..layout.len()).filter(|&i| problem.bounds[i][1] > problem.bounds[i][0]).collect();
    if free.is_empty() {
        // Nothing to search: report the pinned point as is, whatever its
        // constraint residual.
        let pinned: Vec<f64> = problem.bounds.iter().map(|b| b[0]).collect();
        let mut result = OptResult::evaluate(problem, &pinned)?;
        result.n_starts = opts.n_starts;
        result.n_evals = 1;
        return Ok(result);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<Vec<f64>> = (0..opts.n_starts)
        .map(|_| (0..free.len()).map(|_| rng.gen::<f64>()).collect())
        .collect();

    let run_all = || -> Vec<StartOutcome> {
        starts
            .into_par_iter()
            .map(|s| run_start(problem, &layout, &free, s, opts))
            .collect()
    };
    let outcomes = match opts.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::invalid(format!("jobs: {e}")))?
            .install(run_all),
        None => run_all(),
    };

    let n_evals = outcomes.iter().map(|o| o.evals).sum();
    let accepted: Vec<&StartOutcome> = outcomes
        .iter()
        .filter(|o| o.residual <= CONSTRAINT_TOL && o.value < PENALTY)
        .collect();
    let Some(best) = accepted.iter().copied().reduce(|a, b| if better(b, a) { b } else { a }) else {
        let closest = outcomes.iter().map(|o| o.residual).fold(f64::INFINITY, f64::min);
        return Err(Error::OptimizationFailed(format!(
            "none of {} starts met |F(0) - 1| <= {CONSTRAINT_TOL:e} (closest: {closest:.3e}, {n_evals} evaluations)",
            opts.n_starts
        )));
    };

    let mut result = OptResult::evaluate(problem, &best.params)?;
    result.n_starts = opts.n_starts;
    result.n_converged = accepted.len();
    result.n_evals = n_evals;
    Ok(result)
}

/// One line of a result-versus-reference comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub metric: String,
    pub result: f64,
    pub reference: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub rows: Vec<Comparison>,
    /// Lossless minimum absorbed fraction over the band reaches 0.9999.
    pub plateau_ok: bool,
}

impl VerifyReport {
    pub fn row(&self, metric: &str) -> Option<&Comparison> {
        self.rows.iter().find(|r| r.metric == metric)
    }
}

/// Plateau threshold the lossless optimum has to reach.
pub const PLATEAU_TARGET: f64 = 0.9999;

/// Loss levels at which plateau minima are compared.
pub const VERIFY_LOSSES: [f64; 3] = [0.0, 1e-2, 1e-1];

/// Compares a four-channel result with the published optimum: objective,
/// band minimum of the absorbed fraction at three loss levels, and the
/// spin absorption coefficients.
pub fn verify_against_reference(result: &OptResult) -> Result<VerifyReport> {
    if result.n_channels != reference::N_CHANNELS {
        return Err(Error::invalid(format!(
            "verification needs a {}-channel result, got {}",
            reference::N_CHANNELS,
            result.n_channels
        )));
    }
    let ours = result.config()?;
    let theirs = reference::hmr4_config();
    let mut problem = OptimizationProblem::new(reference::N_CHANNELS, 1.0, true)?;
    problem.objective_kind = result.objective_kind;

    let mut rows = Vec::new();
    let mut push = |metric: String, result: f64, reference: f64| {
        rows.push(Comparison { metric, result, reference, delta: result - reference });
    };
    push("objective".into(), objective_for_config(&ours, &problem), objective_for_config(&theirs, &problem));

    let hw = reference::PLATEAU_HALF_WIDTH * ours.delta_unit;
    let step = PLATEAU_STEP * ours.delta_unit;
    let mut lossless = f64::NAN;
    for gamma in VERIFY_LOSSES {
        let a = model::min_efficiency(&ours.with_losses(gamma, gamma)?, hw, step)?;
        let b = model::min_efficiency(&theirs.with_losses(gamma, gamma)?, hw, step)?;
        if gamma == 0.0 {
            lossless = a;
        }
        push(format!("plateau_min_eta[gamma={gamma}]"), a, b);
    }

    let ab_ours = model::absorption_coefficients(&ours);
    let ab_ref = model::absorption_coefficients(&theirs);
    for n in 1..=2 {
        let get = |v: &[(i32, f64)]| v.iter().find(|(i, _)| *i == n).map(|x| x.1).unwrap_or(f64::NAN);
        push(format!("absorption_{n}"), get(&ab_ours), get(&ab_ref));
    }

    Ok(VerifyReport { rows, plateau_ok: lossless >= PLATEAU_TARGET })
}
