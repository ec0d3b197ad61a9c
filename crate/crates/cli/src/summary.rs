//! Plateau statistics shared by `tf` and `sweep`.

use std::str::FromStr;

use mrqm::model::{self, efficiency, plateau_bandwidth, EfficiencyCurve, Interval, Spectrum};
use mrqm::{reference, DeviceConfig, Kappa};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

/// Thresholds at which `tf` reports the plateau.
pub const SUMMARY_THRESHOLDS: [f64; 2] = [0.999, 0.9999];

/// Threshold for the plateau width reported by `sweep`.
pub const SWEEP_THRESHOLD: f64 = 0.9999;

/// `--grid lo:hi:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, step] = parts.as_slice() else {
            return Err(format!("expected lo:hi:step, got {s:?}"));
        };
        let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("not a number: {v:?}"));
        let g = GridSpec { lo: parse(lo)?, hi: parse(hi)?, step: parse(step)? };
        if !(g.lo.is_finite() && g.hi.is_finite() && g.lo < g.hi && g.step > 0.0 && g.step.is_finite()) {
            return Err(format!("need finite lo < hi and step > 0, got {s:?}"));
        }
        Ok(g)
    }
}

/// Explicit grid, or the default one for the device's `delta_unit`.
pub fn frequencies(grid: Option<GridSpec>, config: &DeviceConfig) -> Result<Vec<f64>, Failure> {
    match grid {
        Some(g) => Ok(model::uniform_grid(g.lo, g.hi, g.step)?),
        None => Ok(model::default_grid(config.delta_unit)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauAt {
    pub threshold: f64,
    /// `None` when the absorbed fraction at the centre is already below
    /// the threshold.
    pub interval: Option<Interval>,
    pub width: f64,
}

pub fn plateau_at(curve: &EfficiencyCurve, threshold: f64) -> Result<PlateauAt, Failure> {
    let interval = plateau_bandwidth(curve, threshold)?;
    Ok(PlateauAt { threshold, interval, width: interval.map_or(0.0, |i| i.width()) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfSummary {
    pub config_hash: String,
    pub n_points: usize,
    pub grid_lo: f64,
    pub grid_hi: f64,
    /// The working band is `[-plateau_half_width, plateau_half_width]`.
    pub plateau_half_width: f64,
    /// Over grid points inside the working band; `None` if there are none.
    pub min_eta_plateau: Option<f64>,
    pub max_eta_plateau: Option<f64>,
    pub min_eta: f64,
    pub max_eta: f64,
    pub plateaus: Vec<PlateauAt>,
    pub broadband_ratio: Option<f64>,
    pub broadband_warning: bool,
}

pub fn summarize(config: &DeviceConfig, spectrum: &Spectrum) -> Result<(EfficiencyCurve, TfSummary), Failure> {
    let curve = efficiency(spectrum);
    let hw = reference::PLATEAU_HALF_WIDTH * config.delta_unit;
    let within = |pick: fn(f64, f64) -> f64| {
        let inside: Vec<f64> = curve
            .grid
            .iter()
            .zip(&curve.eta)
            .filter(|(nu, _)| nu.abs() <= hw * (1.0 + 1e-12))
            .map(|(_, e)| *e)
            .collect();
        inside.into_iter().reduce(pick)
    };
    let plateaus = SUMMARY_THRESHOLDS.iter().map(|&t| plateau_at(&curve, t)).collect::<Result<_, _>>()?;
    let summary = TfSummary {
        config_hash: config.hash(),
        n_points: curve.grid.len(),
        grid_lo: curve.grid[0],
        grid_hi: curve.grid[curve.grid.len() - 1],
        plateau_half_width: hw,
        min_eta_plateau: within(f64::min),
        max_eta_plateau: within(f64::max),
        min_eta: curve.min(),
        max_eta: curve.max(),
        plateaus,
        broadband_ratio: config.broadband_ratio(),
        broadband_warning: config.broadband_warning(),
    };
    Ok((curve, summary))
}

/// Scalar a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// `gamma_r_tilde` and every `gamma_mini` together.
    Gamma,
    GammaRTilde,
    GammaMini,
    Kappa,
    /// Plateau threshold; the device is left alone.
    Threshold,
}

impl SweepParam {
    pub const NAMES: [&'static str; 5] = ["gamma", "gamma_r_tilde", "gamma_mini", "kappa", "threshold"];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Gamma => "gamma",
            SweepParam::GammaRTilde => "gamma_r_tilde",
            SweepParam::GammaMini => "gamma_mini",
            SweepParam::Kappa => "kappa",
            SweepParam::Threshold => "threshold",
        }
    }

    /// Parses a value for this axis; only `kappa` accepts `inf`.
    pub fn parse_value(self, s: &str) -> Result<f64, Failure> {
        if self == SweepParam::Kappa {
            let k: Kappa = s.parse().map_err(|e: mrqm::Error| Failure::schema(format!("values: {e}")))?;
            return Ok(k.value());
        }
        match s.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Failure::schema(format!("values: {s:?} is not a finite number for {}", self.name()))),
        }
    }
}

impl FromStr for SweepParam {
    type Err = Failure;

    fn from_str(s: &str) -> Result<Self, Failure> {
        Ok(match s {
            "gamma" => SweepParam::Gamma,
            "gamma_r_tilde" => SweepParam::GammaRTilde,
            "gamma_mini" => SweepParam::GammaMini,
            "kappa" => SweepParam::Kappa,
            "threshold" => SweepParam::Threshold,
            _ => {
                return Err(Failure::schema(format!(
                    "param: unknown sweep parameter {s:?} (expected one of {})",
                    SweepParam::NAMES.join(", ")
                )))
            }
        })
    }
}

/// The device at one sweep value, and the plateau threshold to use.
pub fn apply(config: &DeviceConfig, param: SweepParam, value: f64) -> Result<(DeviceConfig, f64), Failure> {
    let rebuild = |gr: f64, gm: Option<f64>| {
        let mut channels = config.channels.clone();
        if let Some(gm) = gm {
            channels.iter_mut().for_each(|c| c.gamma_mini = gm);
        }
        DeviceConfig::new(config.n_channels, config.delta_unit, config.kappa, gr, channels)
    };
    let cfg = match param {
        SweepParam::Gamma => rebuild(value, Some(value))?,
        SweepParam::GammaRTilde => rebuild(value, None)?,
        SweepParam::GammaMini => rebuild(config.gamma_r_tilde, Some(value))?,
        SweepParam::Kappa => config.with_kappa(Kappa::from_value(value))?,
        SweepParam::Threshold => config.clone(),
    };
    let threshold = if param == SweepParam::Threshold { value } else { SWEEP_THRESHOLD };
    Ok((cfg, threshold))
}

/// `(metric, value)` pairs for one sweep point, in output order.
pub fn sweep_metrics(config: &DeviceConfig, grid: &[f64], threshold: f64) -> Result<Vec<(&'static str, f64)>, Failure> {
    let spectrum = model::spectrum(config, grid)?;
    let (curve, summary) = summarize(config, &spectrum)?;
    let plateau = plateau_at(&curve, threshold)?;
    Ok(vec![
        ("min_eta_plateau", summary.min_eta_plateau.unwrap_or(f64::NAN)),
        ("plateau_width", plateau.width),
    ])
}
