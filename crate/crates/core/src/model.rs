//! Physical parameter model and frequency-domain response of the
//! multiresonator device.
//!
//! A device is one broadband common resonator, coupled to a waveguide at
//! rate `kappa`, carrying `N` miniresonators. Miniresonator `n` holds a
//! spin ensemble with a Lorentzian inhomogeneous line centred at
//! `delta_spin = delta_unit * (n - sgn(n)/2)`. Every frequency is measured
//! in the rotating frame of the carrier and expressed in the same unit as
//! `delta_unit` (by default `delta_unit = 1`, so everything is in units of
//! the spin-line spacing).
//!
//! The reflection transfer function is
//!
//! ```text
//! S(nu) = (1 - F(nu)) / (1 + F(nu))
//! F(nu) = gr - 2i nu/kappa + sum_n g_n / ( f_n^2 / (1/T2* + i(spin_n - nu)) + gamma_n + i(Delta_n - nu) )
//! ```
//!
//! and the absorbed fraction at frequency `nu` is `1 - |S(nu)|^2`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Above this value of `N * delta_unit / kappa` the common resonator is no
/// longer a flat bus over the working band.
pub const BROADBAND_WARN_RATIO: f64 = 0.1;

/// Default spectrum grid, in units of `delta_unit`.
pub const DEFAULT_GRID_HALF_WIDTH: f64 = 2.0;
pub const DEFAULT_GRID_STEP: f64 = 0.005;

/// Coupling of the common resonator to the waveguide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kappa {
    Finite(f64),
    /// Broadband limit; the `-2i nu/kappa` term vanishes.
    Infinite,
}

impl Kappa {
    pub fn is_finite(self) -> bool {
        matches!(self, Kappa::Finite(_))
    }

    pub fn value(self) -> f64 {
        match self {
            Kappa::Finite(k) => k,
            Kappa::Infinite => f64::INFINITY,
        }
    }

    pub fn from_value(k: f64) -> Self {
        if k.is_infinite() && k > 0.0 {
            Kappa::Infinite
        } else {
            Kappa::Finite(k)
        }
    }
}

impl Default for Kappa {
    fn default() -> Self {
        Kappa::Infinite
    }
}

impl fmt::Display for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kappa::Finite(k) => write!(f, "{k}"),
            Kappa::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Kappa {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(Kappa::Infinite),
            other => other
                .parse::<f64>()
                .map(Kappa::from_value)
                .map_err(|_| Error::invalid(format!("cannot parse kappa from {s:?}"))),
        }
    }
}

impl Serialize for Kappa {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Kappa::Finite(k) => serializer.serialize_f64(*k),
            Kappa::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Kappa {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct KappaVisitor;

        impl Visitor<'_> for KappaVisitor {
            type Value = Kappa;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive number or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Kappa, E> {
                Ok(Kappa::from_value(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Kappa, E> {
                Ok(Kappa::Finite(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Kappa, E> {
                Ok(Kappa::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Kappa, E> {
                v.parse().map_err(|_| E::invalid_value(de::Unexpected::Str(v), &self))
            }
        }

        deserializer.deserialize_any(KappaVisitor)
    }
}

/// One miniresonator together with its spin ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Channel index `n`, nonzero, in `-N/2..=N/2`.
    pub index: i32,
    /// Collective spin coupling squared, `f_n^2 = N_n (f_n^0)^2`.
    pub f_sq: f64,
    /// Inhomogeneous half-width `1/T2*` of the spin line.
    pub gamma2_inv: f64,
    /// Effective miniresonator coupling `g_n = 2|g_n^0|^2 / kappa`.
    pub g: f64,
    /// Miniresonator detuning `Delta_n`.
    pub delta_c: f64,
    /// Miniresonator field decay `gamma_n`.
    #[serde(default)]
    pub gamma_mini: f64,
    /// Spin-line centre; always derived from `index` and `delta_unit`.
    #[serde(skip)]
    pub delta_spin: f64,
}

impl ChannelParams {
    /// Builds a channel; `delta_spin` is filled in when the channel is placed
    /// into a [`DeviceConfig`].
    pub fn new(index: i32, f_sq: f64, gamma2_inv: f64, g: f64, delta_c: f64, gamma_mini: f64) -> Self {
        Self {
            index,
            f_sq,
            gamma2_inv,
            g,
            delta_c,
            gamma_mini,
            delta_spin: 0.0,
        }
    }

    /// Denominator of the channel's contribution to `F`.
    fn denominator(&self, nu: f64) -> Complex64 {
        let spin = Complex64::new(self.gamma2_inv, self.delta_spin - nu);
        self.f_sq / spin + Complex64::new(self.gamma_mini, self.delta_c - nu)
    }

    /// The channel's term `g_n / denominator` in `F(nu)`.
    pub fn contribution(&self, nu: f64) -> Result<Complex64> {
        if self.g == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let d = self.denominator(nu);
        if d.norm_sqr() == 0.0 || !d.is_finite() {
            return Err(Error::SingularChannel { index: self.index, nu });
        }
        Ok(self.g / d)
    }

    fn validate(&self, at: usize) -> Result<()> {
        let field = |name: &str| format!("channels[{at}].{name}");
        let checks = [
            ("f_sq", self.f_sq, self.f_sq >= 0.0),
            ("g", self.g, self.g >= 0.0),
            ("gamma2_inv", self.gamma2_inv, self.gamma2_inv > 0.0),
            ("gamma_mini", self.gamma_mini, self.gamma_mini >= 0.0),
            ("delta_c", self.delta_c, true),
        ];
        for (name, value, ok) in checks {
            if !value.is_finite() || !ok {
                return Err(Error::invalid(format!("{}: invalid value {value}", field(name))));
            }
        }
        if self.index == 0 {
            return Err(Error::invalid(format!("{}: index 0 is not allowed", field("index"))));
        }
        Ok(())
    }
}

fn default_delta_unit() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DeviceConfigDoc {
    n_channels: usize,
    #[serde(default = "default_delta_unit")]
    delta_unit: f64,
    #[serde(default)]
    kappa: Kappa,
    #[serde(default)]
    gamma_r_tilde: f64,
    channels: Vec<ChannelParams>,
}

impl TryFrom<DeviceConfigDoc> for DeviceConfig {
    type Error = Error;

    fn try_from(doc: DeviceConfigDoc) -> Result<Self> {
        DeviceConfig::new(doc.n_channels, doc.delta_unit, doc.kappa, doc.gamma_r_tilde, doc.channels)
    }
}

/// Complete parameter set of a device with `N` channels.
///
/// Channels are kept sorted by index. Construct through [`DeviceConfig::new`]
/// or deserialization, both of which validate the invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DeviceConfigDoc")]
pub struct DeviceConfig {
    pub n_channels: usize,
    pub delta_unit: f64,
    pub kappa: Kappa,
    /// Normalized common-resonator loss `2 gamma_r / kappa`.
    pub gamma_r_tilde: f64,
    pub channels: Vec<ChannelParams>,
}

impl DeviceConfig {
    pub fn new(
        n_channels: usize,
        delta_unit: f64,
        kappa: Kappa,
        gamma_r_tilde: f64,
        mut channels: Vec<ChannelParams>,
    ) -> Result<Self> {
        let centers = spin_line_centers(n_channels, delta_unit)?;
        if channels.len() != n_channels {
            return Err(Error::invalid(format!(
                "channels: expected {n_channels} entries, found {}",
                channels.len()
            )));
        }
        for (at, ch) in channels.iter().enumerate() {
            ch.validate(at)?;
        }
        channels.sort_by_key(|c| c.index);
        for (ch, (&index, &center)) in channels.iter_mut().zip(centers.iter()) {
            if ch.index != index {
                return Err(Error::invalid(format!(
                    "channels: indices must be exactly ±1..=±{} without duplicates",
                    n_channels / 2
                )));
            }
            ch.delta_spin = center;
        }
        if !(gamma_r_tilde.is_finite() && gamma_r_tilde >= 0.0) {
            return Err(Error::invalid(format!("gamma_r_tilde: invalid value {gamma_r_tilde}")));
        }
        if let Kappa::Finite(k) = kappa {
            if !(k.is_finite() && k > 0.0) {
                return Err(Error::invalid(format!("kappa: invalid value {k}")));
            }
            let ratio = n_channels as f64 * delta_unit / k;
            if ratio >= 1.0 {
                return Err(Error::invalid(format!(
                    "kappa: N*delta_unit/kappa = {ratio} must be < 1 for a broadband common resonator"
                )));
            }
        }
        Ok(Self {
            n_channels,
            delta_unit,
            kappa,
            gamma_r_tilde,
            channels,
        })
    }

    /// `N * delta_unit / kappa`, or `None` in the broadband limit.
    pub fn broadband_ratio(&self) -> Option<f64> {
        match self.kappa {
            Kappa::Finite(k) => Some(self.n_channels as f64 * self.delta_unit / k),
            Kappa::Infinite => None,
        }
    }

    pub fn broadband_warning(&self) -> bool {
        self.broadband_ratio().is_some_and(|r| r > BROADBAND_WARN_RATIO)
    }

    /// Copy with `gamma_r_tilde` and every `gamma_mini` replaced.
    pub fn with_losses(&self, gamma_r_tilde: f64, gamma_mini: f64) -> Result<Self> {
        let mut channels = self.channels.clone();
        for ch in &mut channels {
            ch.gamma_mini = gamma_mini;
        }
        Self::new(self.n_channels, self.delta_unit, self.kappa, gamma_r_tilde, channels)
    }

    pub fn with_kappa(&self, kappa: Kappa) -> Result<Self> {
        Self::new(self.n_channels, self.delta_unit, kappa, self.gamma_r_tilde, self.channels.clone())
    }

    pub fn channel(&self, index: i32) -> Option<&ChannelParams> {
        self.channels.iter().find(|c| c.index == index)
    }

    /// Short content hash of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(&digest[..8])
    }
}

/// Spin-line centres `delta_unit * (n - sgn(n)/2)` keyed by channel index.
pub fn spin_line_centers(n_channels: usize, delta_unit: f64) -> Result<BTreeMap<i32, f64>> {
    if n_channels < 2 || n_channels % 2 != 0 {
        return Err(Error::invalid(format!(
            "n_channels: must be even and >= 2, got {n_channels}"
        )));
    }
    if !(delta_unit.is_finite() && delta_unit > 0.0) {
        return Err(Error::invalid(format!("delta_unit: must be positive, got {delta_unit}")));
    }
    let half = (n_channels / 2) as i32;
    Ok((-half..=half)
        .filter(|&n| n != 0)
        .map(|n| {
            let sgn = f64::from(n.signum());
            (n, delta_unit * (f64::from(n) - 0.5 * sgn))
        })
        .collect())
}

/// `F(nu)`; the transfer function is matched where `F = 1`.
pub fn eval_f(config: &DeviceConfig, nu: f64) -> Result<Complex64> {
    let mut f = Complex64::new(config.gamma_r_tilde, 0.0);
    if let Kappa::Finite(k) = config.kappa {
        f -= Complex64::new(0.0, 2.0 * nu / k);
    }
    for ch in &config.channels {
        f += ch.contribution(nu)?;
    }
    Ok(f)
}

/// `S = (1 - F) / (1 + F)` given a value of `F`.
pub fn reflection_from_f(f: Complex64, nu: f64) -> Result<Complex64> {
    let den = 1.0 + f;
    if den.norm_sqr() == 0.0 {
        return Err(Error::Pole { nu });
    }
    Ok((1.0 - f) / den)
}

/// Reflection transfer function `S(nu)`.
pub fn eval_s(config: &DeviceConfig, nu: f64) -> Result<Complex64> {
    reflection_from_f(eval_f(config, nu)?, nu)
}

/// Uniform grid `lo, lo+step, ..., hi` (the last point snaps to `hi` when
/// the span is a whole number of steps, within rounding).
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi < lo {
        return Err(Error::invalid(format!("grid: bad range {lo}:{hi}:{step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| lo + k as f64 * step).collect())
}

/// Default grid `[-2, 2]` with step `0.005`, scaled by `delta_unit`.
pub fn default_grid(delta_unit: f64) -> Vec<f64> {
    uniform_grid(
        -DEFAULT_GRID_HALF_WIDTH * delta_unit,
        DEFAULT_GRID_HALF_WIDTH * delta_unit,
        DEFAULT_GRID_STEP * delta_unit,
    )
    .expect("default grid is valid")
}

fn check_increasing(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("grid: must not be empty"));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("grid: values must be finite"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid: must be strictly increasing"));
    }
    Ok(())
}

/// Sampled reflection transfer function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub config_hash: String,
}

pub fn spectrum(config: &DeviceConfig, grid: &[f64]) -> Result<Spectrum> {
    check_increasing(grid)?;
    let values = grid.iter().map(|&nu| eval_s(config, nu)).collect::<Result<Vec<_>>>()?;
    Ok(Spectrum {
        grid: grid.to_vec(),
        values,
        config_hash: config.hash(),
    })
}

/// Absorbed fraction `1 - |S|^2` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyCurve {
    pub grid: Vec<f64>,
    pub eta: Vec<f64>,
}

impl EfficiencyCurve {
    /// Minimum over grid points inside `[lo, hi]`, or `None` if there are none.
    pub fn min_within(&self, lo: f64, hi: f64) -> Option<f64> {
        let slack = 1e-9 * (hi - lo).abs().max(1.0);
        self.grid
            .iter()
            .zip(&self.eta)
            .filter(|(&nu, _)| nu >= lo - slack && nu <= hi + slack)
            .map(|(_, &e)| e)
            .reduce(f64::min)
    }

    pub fn min(&self) -> f64 {
        self.eta.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.eta.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn efficiency(spec: &Spectrum) -> EfficiencyCurve {
    EfficiencyCurve {
        grid: spec.grid.clone(),
        eta: spec.values.iter().map(|s| 1.0 - s.norm_sqr()).collect(),
    }
}

/// Minimum absorbed fraction over `[-half_width, half_width]` sampled with `step`.
pub fn min_efficiency(config: &DeviceConfig, half_width: f64, step: f64) -> Result<f64> {
    let grid = uniform_grid(-half_width, half_width, step)?;
    let curve = efficiency(&spectrum(config, &grid)?);
    Ok(curve.min())
}

/// Closed frequency interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Widest contiguous interval around `nu = 0` on which `eta >= threshold`.
///
/// Edges are located by linear interpolation between the last passing and
/// the first failing sample; an interval that runs into the end of the grid
/// stops at the grid end. Returns `None` when `eta(0) < threshold`.
pub fn plateau_bandwidth(curve: &EfficiencyCurve, threshold: f64) -> Result<Option<Interval>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!("threshold: must lie in (0, 1), got {threshold}")));
    }
    let grid = &curve.grid;
    check_increasing(grid)?;
    if curve.eta.len() != grid.len() {
        return Err(Error::invalid("efficiency curve: length mismatch"));
    }
    let (first, last) = (grid[0], grid[grid.len() - 1]);
    if !(first <= 0.0 && 0.0 <= last) {
        return Err(Error::invalid(format!("grid [{first}, {last}] does not contain nu = 0")));
    }

    // Samples with the origin inserted when it is not a grid point.
    let mut pts: Vec<(f64, f64)> = grid.iter().copied().zip(curve.eta.iter().copied()).collect();
    let origin = match grid.iter().position(|&nu| nu >= 0.0) {
        Some(k) if grid[k] == 0.0 => k,
        Some(k) => {
            let (x0, y0) = pts[k - 1];
            let (x1, y1) = pts[k];
            let y = y0 + (y1 - y0) * (0.0 - x0) / (x1 - x0);
            pts.insert(k, (0.0, y));
            k
        }
        None => unreachable!("grid contains 0"),
    };
    if pts[origin].1 < threshold {
        return Ok(None);
    }

    let edge = |pass: (f64, f64), fail: (f64, f64)| {
        let (x0, y0) = pass;
        let (x1, y1) = fail;
        x0 + (threshold - y0) * (x1 - x0) / (y1 - y0)
    };

    let mut lo_k = origin;
    while lo_k > 0 && pts[lo_k - 1].1 >= threshold {
        lo_k -= 1;
    }
    let lo = if lo_k == 0 { pts[0].0 } else { edge(pts[lo_k], pts[lo_k - 1]) };

    let mut hi_k = origin;
    while hi_k + 1 < pts.len() && pts[hi_k + 1].1 >= threshold {
        hi_k += 1;
    }
    let hi = if hi_k + 1 == pts.len() { pts[hi_k].0 } else { edge(pts[hi_k], pts[hi_k + 1]) };

    Ok(Some(Interval { lo, hi }))
}

fn trapezoid(grid: &[f64], values: impl Fn(usize) -> f64) -> f64 {
    grid.windows(2)
        .enumerate()
        .map(|(k, w)| 0.5 * (w[1] - w[0]) * (values(k) + values(k + 1)))
        .sum()
}

/// Tolerance on `∫|phi|^2 dnu = 1` accepted by [`pulse_recording_efficiency`].
pub const PULSE_NORM_TOL: f64 = 1e-6;

/// Fraction of a pulse's energy that is not reflected,
/// `1 - ∫ |S(nu)|^2 |phi(nu)|^2 dnu`, by trapezoidal quadrature on `grid`.
pub fn pulse_recording_efficiency(config: &DeviceConfig, grid: &[f64], density: &[f64]) -> Result<f64> {
    check_increasing(grid)?;
    if density.len() != grid.len() {
        return Err(Error::invalid(format!(
            "pulse spectrum: {} samples for a {}-point grid",
            density.len(),
            grid.len()
        )));
    }
    if density.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
        return Err(Error::invalid("pulse spectrum: densities must be finite and >= 0"));
    }
    let norm = trapezoid(grid, |k| density[k]);
    if (norm - 1.0).abs() > PULSE_NORM_TOL {
        return Err(Error::UnnormalizedPulse { norm });
    }
    let refl = grid.iter().map(|&nu| eval_s(config, nu).map(|s| s.norm_sqr())).collect::<Result<Vec<_>>>()?;
    Ok(1.0 - trapezoid(grid, |k| refl[k] * density[k]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBudgetReport {
    pub gamma_r_tilde: f64,
    pub gamma_mini: f64,
    pub delta_unit: f64,
    /// Shortest signal supported by the `[-0.8, 0.8]` plateau, `1/(1.6 delta_unit)`.
    pub signal_duration: f64,
    /// `exp(-2 gr - 2 gamma_n dt_s)`.
    pub transfer_bound: f64,
    /// `0.95 (gr + gamma_n / (1.6 delta_unit))`.
    pub condition_value: f64,
    pub target: f64,
    pub passes: bool,
}

/// Full working band `2 * 0.8 * delta_unit` of the four-channel design.
pub const PLATEAU_BAND: f64 = 1.6;

pub fn loss_budget(gamma_r_tilde: f64, gamma_mini: f64, delta_unit: f64, target: f64) -> Result<LossBudgetReport> {
    if !(gamma_r_tilde >= 0.0 && gamma_mini >= 0.0) {
        return Err(Error::invalid("loss_budget: losses must be >= 0"));
    }
    if !(delta_unit > 0.0) {
        return Err(Error::invalid("loss_budget: delta_unit must be > 0"));
    }
    let signal_duration = 1.0 / (PLATEAU_BAND * delta_unit);
    let transfer_bound = (-2.0 * gamma_r_tilde - 2.0 * gamma_mini * signal_duration).exp();
    let condition_value = 0.95 * (gamma_r_tilde + gamma_mini / (PLATEAU_BAND * delta_unit));
    Ok(LossBudgetReport {
        gamma_r_tilde,
        gamma_mini,
        delta_unit,
        signal_duration,
        transfer_bound,
        condition_value,
        target,
        passes: condition_value <= target,
    })
}

/// Parameters of a design that is symmetric under `n -> -n`.
///
/// Entry `k` of each list belongs to channels `±(k+1)`. Couplings are given
/// as `f_n` (not squared).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricHalf {
    pub gamma2_inv: f64,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub delta_c: Vec<f64>,
}

/// Full lossless, broadband-limit config from a symmetric half-set:
/// `f_{-n} = f_n`, `g_{-n} = g_n`, `Delta_{-n} = -Delta_n`.
pub fn expand_symmetric(half: &SymmetricHalf, n_channels: usize, delta_unit: f64) -> Result<DeviceConfig> {
    let centers = spin_line_centers(n_channels, delta_unit)?;
    let m = n_channels / 2;
    for (name, len) in [("f", half.f.len()), ("g", half.g.len()), ("delta_c", half.delta_c.len())] {
        if len != m {
            return Err(Error::invalid(format!("{name}: expected {m} entries for N = {n_channels}, found {len}")));
        }
    }
    let channels = centers
        .keys()
        .map(|&n| {
            let k = n.unsigned_abs() as usize - 1;
            let sgn = f64::from(n.signum());
            ChannelParams::new(n, half.f[k] * half.f[k], half.gamma2_inv, half.g[k], sgn * half.delta_c[k], 0.0)
        })
        .collect();
    DeviceConfig::new(n_channels, delta_unit, Kappa::Infinite, 0.0, channels)
}

/// Spin absorption coefficient `f_n^2 T2*` of every channel.
pub fn absorption_coefficients(config: &DeviceConfig) -> Vec<(i32, f64)> {
    config.channels.iter().map(|c| (c.index, c.f_sq / c.gamma2_inv)).collect()
}
