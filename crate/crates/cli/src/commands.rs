use std::path::{Path, PathBuf};

use mrqm::model::{self, loss_budget};
use mrqm::optimizer::{self, OptimizationProblem, OptimizeOptions};
use mrqm::timesim::{self, PulseSpec, SimOptions, SimRecord, TimeGrid};
use mrqm::{DeviceConfig, Kappa};
use rayon::prelude::*;
use serde::Serialize;

use crate::failure::{Failure, EXIT_VERIFY};
use crate::input;
use crate::output::{num, OutDir};
use crate::summary::{self, SweepParam};
use crate::verify;
use crate::{Cli, Command, Global};

pub const SPECTRUM_HEADER: [&str; 5] = ["nu", "re_S", "im_S", "abs_S2", "eta"];
pub const SIM_HEADER: [&str; 8] = ["t", "re_a_in", "im_a_in", "re_a_out", "im_a_out", "E_spins", "E_minis", "E_common"];
pub const SWEEP_HEADER: [&str; 4] = ["param", "value", "metric", "metric_value"];

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let g = &cli.global;
    match &cli.command {
        Command::Tf => tf(g),
        Command::Optimize { starts, max_evals } => optimize(g, *starts, *max_evals),
        Command::Simulate { dt } => simulate(g, *dt),
        Command::Sweep { param, values } => sweep(g, param, values),
        Command::Verify => verify(g),
        Command::Budget { gamma_r, gamma_n, delta, target } => budget(g, *gamma_r, *gamma_n, *delta, *target),
    }
}

fn require_config(g: &Global) -> Result<&Path, Failure> {
    g.config.as_deref().ok_or_else(|| Failure::schema("--config: required by this subcommand"))
}

fn inputs(path: &Path) -> Vec<String> {
    vec![path.display().to_string()]
}

/// Runs `f` on a pool of `jobs` threads, or on the global pool.
fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::schema(format!("--jobs: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn tf(g: &Global) -> Result<(), Failure> {
    let path = require_config(g)?;
    let doc = input::read_config(path)?;
    let grid = summary::frequencies(g.grid, &doc.device)?;
    let spectrum = model::spectrum(&doc.device, &grid)?;
    let (curve, summary) = summary::summarize(&doc.device, &spectrum)?;

    let mut out = OutDir::create(&g.out)?;
    let rows = spectrum.grid.iter().zip(&spectrum.values).zip(&curve.eta).map(|((nu, s), eta)| {
        vec![num(*nu), num(s.re), num(s.im), num(s.norm_sqr()), num(*eta)]
    });
    out.csv("spectrum.csv", &SPECTRUM_HEADER, rows)?;
    out.json("tf_summary.json", &summary)?;
    out.finish("tf", inputs(path), g.seed)?;

    if summary.broadband_warning {
        eprintln!("warning: N delta_unit / kappa = {:.3} > 0.1", summary.broadband_ratio.unwrap_or(f64::NAN));
    }
    match summary.min_eta_plateau {
        Some(m) => println!("min eta on [-{hw}, {hw}]: {m:.8}", hw = summary.plateau_half_width),
        None => println!("grid does not reach the working band"),
    }
    for p in &summary.plateaus {
        match p.interval {
            Some(i) => println!("plateau at {}: [{:.4}, {:.4}]", p.threshold, i.lo, i.hi),
            None => println!("plateau at {}: none", p.threshold),
        }
    }
    Ok(())
}

fn optimize(g: &Global, starts: usize, max_evals: usize) -> Result<(), Failure> {
    let path = require_config(g)?;
    let problem: OptimizationProblem = input::read_doc(path)?;
    let opts = OptimizeOptions { n_starts: starts, seed: g.seed, max_evals, jobs: g.jobs, ..Default::default() };
    let result = optimizer::optimize(&problem, &opts)?;
    let config = result.config()?;

    let mut out = OutDir::create(&g.out)?;
    out.json("opt_result.json", &result)?;
    out.json("best_config.json", &config)?;
    out.finish("optimize", inputs(path), g.seed)?;
    println!(
        "objective {:.6e}, |F(0) - 1| = {:.2e}, lossless min eta {:.8}",
        result.objective_value, result.constraint_residual, result.plateau_summary.min_eta_lossless
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct SimReport {
    config_hash: String,
    n_spins: usize,
    pulse: PulseSpec,
    dt: f64,
    n_steps: usize,
    t_end: f64,
    input: f64,
    output: f64,
    stored: f64,
    dissipated: f64,
    balance_error: f64,
    cavity_residual: f64,
    /// `None` when the window is too short to compare.
    fd_td_error: Option<f64>,
}

fn write_spins(out: &mut OutDir, rec: &SimRecord) -> Result<(), Failure> {
    for (n, index) in rec.channels.iter().enumerate() {
        let rows = rec.spin_snapshots.iter().flat_map(|(k, spins)| {
            let t = rec.time(*k);
            spins[n].iter().enumerate().map(move |(j, s)| vec![num(t), j.to_string(), num(s.re), num(s.im)])
        });
        out.csv(&format!("spins_{index}.csv"), &["t", "spin", "re_s", "im_s"], rows)?;
    }
    Ok(())
}

fn simulate(g: &Global, dt_flag: Option<f64>) -> Result<(), Failure> {
    let path = require_config(g)?;
    let doc = input::read_config(path)?;
    let sim = doc.simulation.ok_or_else(|| Failure::schema(format!("{}: simulation: missing", path.display())))?;
    let device: DeviceConfig = doc.device;
    let Kappa::Finite(kappa) = device.kappa else {
        return Err(Failure::schema(format!("{}: kappa: simulate needs a finite kappa", path.display())));
    };

    let ensembles = timesim::discretize_all(&device, sim.n_spins)?;
    let dt = match dt_flag.or(sim.dt) {
        Some(dt) => dt,
        None => timesim::max_stable_dt(&device, &ensembles)?,
    };
    let pulse_spec = sim.pulse.unwrap_or_else(|| PulseSpec::plateau_gaussian(device.delta_unit));
    let t_end = sim.t_end.unwrap_or_else(|| pulse_spec.default_span(kappa));
    let grid = TimeGrid::covering(t_end, dt)?;
    let pulse = timesim::make_pulse(&pulse_spec, &grid)?;
    let opts = SimOptions { spin_stride: sim.spin_stride };
    let rec = timesim::simulate(&device, &ensembles, &pulse, dt, &opts)?;
    let fd_td = timesim::compare_fd_td(&rec, &device);

    let mut out = OutDir::create(&g.out)?;
    let rows = (0..rec.len()).map(|k| {
        let e = &rec.ledger[k];
        vec![
            num(rec.time(k)),
            num(rec.a_in[k].re),
            num(rec.a_in[k].im),
            num(rec.a_out[k].re),
            num(rec.a_out[k].im),
            num(e.e_spins),
            num(e.e_minis),
            num(e.e_common),
        ]
    });
    out.csv("sim.csv", &SIM_HEADER, rows)?;
    if sim.spin_stride.is_some() {
        write_spins(&mut out, &rec)?;
    }
    let last = rec.last();
    let report = SimReport {
        config_hash: device.hash(),
        n_spins: sim.n_spins,
        pulse: pulse_spec,
        dt,
        n_steps: rec.len() - 1,
        t_end: rec.t_end(),
        input: last.input,
        output: last.output,
        stored: last.stored(),
        dissipated: last.dissipated,
        balance_error: rec.balance_error(),
        cavity_residual: rec.cavity_residual(),
        fd_td_error: fd_td.as_ref().ok().copied(),
    };
    out.json("sim_report.json", &report)?;
    let err = fd_td?;
    out.finish("simulate", inputs(path), g.seed)?;
    println!(
        "balance error {:.2e}, residual {:.2e}, FD-TD error {err:.3e}",
        report.balance_error, report.cavity_residual
    );
    Ok(())
}

fn sweep(g: &Global, param: &str, values: &[String]) -> Result<(), Failure> {
    let path = require_config(g)?;
    let param: SweepParam = param.parse()?;
    let values: Vec<f64> = values.iter().map(|v| param.parse_value(v)).collect::<Result<_, _>>()?;
    let doc = input::read_config(path)?;
    let grid = summary::frequencies(g.grid, &doc.device)?;

    let point = |v: &f64| {
        let (cfg, threshold) = summary::apply(&doc.device, param, *v)?;
        summary::sweep_metrics(&cfg, &grid, threshold)
    };
    let results: Vec<Result<_, Failure>> = with_jobs(g.jobs, || values.par_iter().map(point).collect())?;

    let mut rows = Vec::new();
    for (v, metrics) in values.iter().zip(results) {
        let label = if v.is_infinite() { "inf".to_string() } else { num(*v) };
        for (metric, value) in metrics? {
            rows.push(vec![param.name().to_string(), label.clone(), metric.to_string(), num(value)]);
        }
    }
    let mut out = OutDir::create(&g.out)?;
    out.csv("sweep.csv", &SWEEP_HEADER, rows.clone())?;
    out.finish("sweep", inputs(path), g.seed)?;
    for r in rows {
        println!("{} = {}: {} = {}", r[0], r[1], r[2], r[3]);
    }
    Ok(())
}

fn verify(g: &Global) -> Result<(), Failure> {
    let doc = g.config.as_deref().map(input::read_config).transpose()?;
    let source = g.config.as_ref().map_or_else(|| "bundled:paper_n4.json".to_string(), |p: &PathBuf| p.display().to_string());
    let (device, spec) = verify::load(doc)?;
    let outcome = verify::run(&device, &spec)?;

    let mut out = OutDir::create(&g.out)?;
    out.json("verify_report.json", &outcome)?;
    out.finish("verify", vec![source], g.seed)?;
    for c in &outcome.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {:<30} {:<24} expected {}", c.name, format!("{:.8}", c.measured), c.expected);
    }
    let failed: Vec<&str> = outcome.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_VERIFY,
            format!("{} of {} checks failed: {}", failed.len(), outcome.checks.len(), failed.join(", ")),
        ))
    }
}

fn budget(g: &Global, gamma_r: f64, gamma_n: f64, delta: f64, target: f64) -> Result<(), Failure> {
    let report = loss_budget(gamma_r, gamma_n, delta, target)?;
    let mut out = OutDir::create(&g.out)?;
    out.json("budget.json", &report)?;
    out.finish("budget", Vec::new(), g.seed)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}
