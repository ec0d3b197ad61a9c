//! Time-domain integration of the coupled-mode equations.
//!
//! Each spin ensemble is replaced by `N_s` equal-weight atoms placed at the
//! quantiles of its Lorentzian line. With the common-resonator mode `a`,
//! miniresonator modes `b_n` and spin coherences `s_{n,j}`:
//!
//! ```text
//! ds_{n,j}/dt = -i (spin_n + delta_{n,j}) s_{n,j} + f0_n b_n
//! db_n/dt     = -(gamma_n + i Delta_n) b_n - f0_n sum_j s_{n,j} - g0_n a
//! da/dt       = -(gamma_r + kappa/2) a + sum_n g0_n b_n + sqrt(kappa) a_in
//! a_out       = sqrt(kappa) a - a_in
//! ```
//!
//! with `g0_n = sqrt(g_n kappa / 2)` and `gamma_r = gamma_r_tilde kappa / 2`.
//! The total excitation `E = |a|^2 + sum|b|^2 + sum|s|^2` obeys
//! `dE/dt = |a_in|^2 - |a_out|^2 - 2 gamma_r |a|^2 - 2 sum gamma_n |b_n|^2`;
//! the three integrals on the right are carried along as extra state of the
//! fixed-step RK4 scheme, so the ledger closes to integrator accuracy.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{eval_s, ChannelParams, DeviceConfig, Kappa};

/// Largest `dt * rate` allowed for the fastest rate in the system.
pub const STEP_FACTOR: f64 = 0.1;

/// Relative ledger imbalance treated as numerical instability.
pub const LEDGER_GUARD: f64 = 1e-3;

/// Cavity energy left at the end of the window, relative to the input,
/// above which the frequency-domain comparison is refused.
pub const RING_DOWN_TOL: f64 = 1e-4;

/// Pulse tails must fall below this fraction of the peak amplitude at the
/// edges of the time grid.
pub const TAIL_TOL: f64 = 1e-6;

/// Equal-weight atoms standing in for one Lorentzian spin line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteEnsemble {
    pub channel: i32,
    /// Line centre (the channel's spin-line centre).
    pub center: f64,
    /// Atom detunings relative to `center`.
    pub detunings: Vec<f64>,
    /// Per-atom coupling `f0 = f_n / sqrt(N_s)`.
    pub coupling: f64,
}

impl DiscreteEnsemble {
    pub fn n_spins(&self) -> usize {
        self.detunings.len()
    }

    /// `sum_j f0^2`, equal to the channel's `f_sq`.
    pub fn total_coupling_sq(&self) -> f64 {
        self.coupling * self.coupling * self.n_spins() as f64
    }

    /// `sum_j f0^2 / (damping + i(center + delta_j - nu))`; with
    /// `damping -> 0+` and `N_s -> inf` this tends to the Lorentzian
    /// `f^2 / (1/T2* + i(center - nu))`.
    pub fn susceptibility(&self, nu: f64, damping: f64) -> Complex64 {
        let w = self.coupling * self.coupling;
        self.detunings
            .iter()
            .map(|d| w / Complex64::new(damping, self.center + d - nu))
            .sum()
    }
}

/// Places `n_spins` atoms at the equal-probability quantiles
/// `(1/T2*) tan(pi (u_j - 1/2))`, `u_j = (j - 1/2)/N_s`, of the channel's line.
pub fn discretize_ensemble(channel: &ChannelParams, n_spins: usize) -> Result<DiscreteEnsemble> {
    if n_spins < 1 {
        return Err(Error::invalid("n_spins: must be >= 1"));
    }
    let n = n_spins as f64;
    let mut detunings = vec![0.0; n_spins];
    // Fill the lower half and mirror it so the set is exactly symmetric.
    for j in 0..n_spins / 2 {
        let u = (j as f64 + 0.5) / n;
        let d = channel.gamma2_inv * (PI * (u - 0.5)).tan();
        detunings[j] = d;
        detunings[n_spins - 1 - j] = -d;
    }
    Ok(DiscreteEnsemble {
        channel: channel.index,
        center: channel.delta_spin,
        detunings,
        coupling: (channel.f_sq / n).sqrt(),
    })
}

/// One ensemble per channel, in channel order.
pub fn discretize_all(config: &DeviceConfig, n_spins: usize) -> Result<Vec<DiscreteEnsemble>> {
    config.channels.iter().map(|c| discretize_ensemble(c, n_spins)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    /// `|a_in|^2` is a Gaussian with rms duration `duration`.
    Gaussian,
    /// `a_in ∝ sech((t - t0)/duration)`.
    Sech,
    /// Constant over `[t0 - duration/2, t0 + duration/2]`.
    Square,
}

/// Unit-energy input pulse `a_in(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub shape: PulseShape,
    pub center_time: f64,
    pub duration: f64,
    /// Carrier detuning `nu0`; the pulse carries `exp(-i nu0 t)`.
    #[serde(default)]
    pub carrier: f64,
}

impl PulseSpec {
    /// Gaussian of rms duration `1/(1.6 delta_unit)`, centred `8` durations
    /// in so that the leading tail is below [`TAIL_TOL`].
    pub fn plateau_gaussian(delta_unit: f64) -> Self {
        let duration = 1.0 / (1.6 * delta_unit);
        Self {
            shape: PulseShape::Gaussian,
            center_time: 8.0 * duration,
            duration,
            carrier: 0.0,
        }
    }

    /// Continuous-time amplitude at `t`.
    pub fn amplitude(&self, t: f64) -> Complex64 {
        let tau = self.duration;
        let x = t - self.center_time;
        let envelope = match self.shape {
            PulseShape::Gaussian => {
                (2.0 * PI).powf(-0.25) / tau.sqrt() * (-x * x / (4.0 * tau * tau)).exp()
            }
            PulseShape::Sech => 1.0 / ((2.0 * tau).sqrt() * (x / tau).cosh()),
            PulseShape::Square => {
                let amp = 1.0 / tau.sqrt();
                let half = 0.5 * tau;
                if x.abs() < half {
                    amp
                } else if x.abs() == half {
                    0.5 * amp
                } else {
                    0.0
                }
            }
        };
        envelope * Complex64::from_polar(1.0, -self.carrier * t)
    }

    fn peak(&self) -> f64 {
        match self.shape {
            PulseShape::Gaussian => (2.0 * PI).powf(-0.25) / self.duration.sqrt(),
            PulseShape::Sech => 1.0 / (2.0 * self.duration).sqrt(),
            PulseShape::Square => 1.0 / self.duration.sqrt(),
        }
    }

    /// Default window `t0 + 10 duration + 20/kappa`.
    pub fn default_span(&self, kappa: f64) -> f64 {
        self.center_time + 10.0 * self.duration + 20.0 / kappa
    }
}

/// Uniform time grid `0, dt, ..., n_steps * dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    /// Smallest grid with step `dt` reaching `t_end`.
    pub fn covering(t_end: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0 && t_end.is_finite() && t_end > 0.0) {
            return Err(Error::invalid(format!("time grid: bad t_end = {t_end}, dt = {dt}")));
        }
        Ok(Self { dt, n_steps: (t_end / dt - 1e-9).ceil() as usize })
    }

    pub fn t_end(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }
}

/// Uniformly sampled complex signal starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub dt: f64,
    pub values: Vec<Complex64>,
}

impl TimeSeries {
    pub fn zeros(dt: f64, len: usize) -> Self {
        Self { dt, values: vec![Complex64::new(0.0, 0.0); len] }
    }

    /// `∫|x|^2 dt` by composite Simpson (trapezoid for a trailing odd interval).
    pub fn energy(&self) -> f64 {
        let p: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        let pairs = (p.len().saturating_sub(1)) / 2;
        let mut e = (0..pairs).map(|k| p[2 * k] + 4.0 * p[2 * k + 1] + p[2 * k + 2]).sum::<f64>() * self.dt / 3.0;
        if p.len() >= 2 && (p.len() - 1) % 2 == 1 {
            e += 0.5 * self.dt * (p[p.len() - 2] + p[p.len() - 1]);
        }
        e
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self { dt: self.dt, values: self.values.iter().map(|v| v * factor).collect() }
    }
}

/// Samples the pulse at half steps of `grid` (the RK4 stage times), which
/// is the form [`simulate`] consumes.
pub fn make_pulse(spec: &PulseSpec, grid: &TimeGrid) -> Result<TimeSeries> {
    if !(spec.duration.is_finite() && spec.duration > 0.0) {
        return Err(Error::invalid("pulse duration: must be positive"));
    }
    let half = 0.5 * grid.dt;
    let t_end = grid.t_end();
    let values: Vec<Complex64> = (0..=2 * grid.n_steps).map(|k| spec.amplitude(k as f64 * half)).collect();
    let boundary = match spec.shape {
        PulseShape::Square => {
            let inside = spec.center_time - 0.5 * spec.duration >= 0.0 && spec.center_time + 0.5 * spec.duration <= t_end;
            if inside { 0.0 } else { 1.0 }
        }
        _ => values[0].norm().max(values[values.len() - 1].norm()) / spec.peak(),
    };
    if boundary > TAIL_TOL {
        return Err(Error::TruncatedPulse { boundary });
    }
    Ok(TimeSeries { dt: half, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub t: f64,
    pub e_spins: f64,
    pub e_minis: f64,
    pub e_common: f64,
    /// `∫|a_in|^2 dt` so far.
    pub input: f64,
    /// `∫|a_out|^2 dt` so far.
    pub output: f64,
    /// Energy lost to `gamma_r` and `gamma_n` so far.
    pub dissipated: f64,
}

impl LedgerEntry {
    pub fn stored(&self) -> f64 {
        self.e_spins + self.e_minis + self.e_common
    }

    /// `input - (stored + output + dissipated)`.
    pub fn imbalance(&self) -> f64 {
        self.input - (self.stored() + self.output + self.dissipated)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct SimOptions {
    /// Record every spin coherence each `spin_stride` steps; `None` keeps
    /// only the final spin state.
    pub spin_stride: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub dt: f64,
    pub kappa: f64,
    pub channels: Vec<i32>,
    pub a_in: Vec<Complex64>,
    pub a_out: Vec<Complex64>,
    pub a: Vec<Complex64>,
    /// `b[n][k]`: miniresonator `n` at step `k`.
    pub b: Vec<Vec<Complex64>>,
    /// `(step, s[n][j])` snapshots at the requested stride.
    pub spin_snapshots: Vec<(usize, Vec<Vec<Complex64>>)>,
    pub final_spins: Vec<Vec<Complex64>>,
    pub ledger: Vec<LedgerEntry>,
}

impl SimRecord {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn last(&self) -> &LedgerEntry {
        self.ledger.last().expect("record has at least one step")
    }

    /// `|imbalance| / input` at the end of the window.
    pub fn balance_error(&self) -> f64 {
        let last = self.last();
        if last.input == 0.0 {
            last.imbalance().abs()
        } else {
            last.imbalance().abs() / last.input
        }
    }

    /// Energy still in `a` and the `b_n`, relative to the input.
    pub fn cavity_residual(&self) -> f64 {
        let last = self.last();
        let e = last.e_minis + last.e_common;
        if last.input == 0.0 {
            e
        } else {
            e / last.input
        }
    }
}

struct ChannelDyn {
    decay: Complex64,
    g0: f64,
    f0: f64,
    omega: Vec<f64>,
    offset: usize,
}

struct System {
    sqrt_kappa: f64,
    common_decay: f64,
    gamma_r: f64,
    gamma_minis: Vec<f64>,
    channels: Vec<ChannelDyn>,
    len: usize,
}

impl System {
    fn new(config: &DeviceConfig, ensembles: &[DiscreteEnsemble], kappa: f64) -> Self {
        let n = config.channels.len();
        let mut offset = 1 + n;
        let channels = config
            .channels
            .iter()
            .zip(ensembles)
            .map(|(ch, ens)| {
                let c = ChannelDyn {
                    decay: Complex64::new(ch.gamma_mini, ch.delta_c),
                    g0: (ch.g * kappa / 2.0).sqrt(),
                    f0: ens.coupling,
                    omega: ens.detunings.iter().map(|d| ens.center + d).collect(),
                    offset,
                };
                offset += ens.n_spins();
                c
            })
            .collect();
        let gamma_r = config.gamma_r_tilde * kappa / 2.0;
        Self {
            sqrt_kappa: kappa.sqrt(),
            common_decay: gamma_r + kappa / 2.0,
            gamma_r,
            gamma_minis: config.channels.iter().map(|c| c.gamma_mini).collect(),
            channels,
            len: offset,
        }
    }

    fn fastest_rate(&self) -> f64 {
        let mut r = self.common_decay;
        for c in &self.channels {
            r = r.max(c.decay.norm()).max(c.g0);
            r = r.max(c.f0 * (c.omega.len() as f64).sqrt());
            r = c.omega.iter().fold(r, |acc, w| acc.max(w.abs()));
        }
        r
    }

    /// Writes `dy/dt` and returns the ledger rates `[in, out, dissipated]`.
    fn deriv(&self, y: &[Complex64], a_in: Complex64, dy: &mut [Complex64]) -> [f64; 3] {
        let a = y[0];
        let mut da = -self.common_decay * a + self.sqrt_kappa * a_in;
        let mut diss = 2.0 * self.gamma_r * a.norm_sqr();
        for (n, c) in self.channels.iter().enumerate() {
            let b = y[1 + n];
            let spins = &y[c.offset..c.offset + c.omega.len()];
            let out = &mut dy[c.offset..c.offset + c.omega.len()];
            let mut sum = Complex64::new(0.0, 0.0);
            for ((s, w), d) in spins.iter().zip(&c.omega).zip(out.iter_mut()) {
                sum += s;
                *d = Complex64::new(s.im * w, -s.re * w) + c.f0 * b;
            }
            dy[1 + n] = -c.decay * b - c.f0 * sum - c.g0 * a;
            da += c.g0 * b;
            diss += 2.0 * self.gamma_minis[n] * b.norm_sqr();
        }
        dy[0] = da;
        let a_out = self.sqrt_kappa * a - a_in;
        [a_in.norm_sqr(), a_out.norm_sqr(), diss]
    }
}

/// Largest step allowed for a device and its ensembles:
/// `STEP_FACTOR / fastest rate`.
pub fn max_stable_dt(config: &DeviceConfig, ensembles: &[DiscreteEnsemble]) -> Result<f64> {
    let Kappa::Finite(kappa) = config.kappa else {
        return Err(Error::invalid("kappa: time-domain simulation needs a finite kappa"));
    };
    Ok(STEP_FACTOR / System::new(config, ensembles, kappa).fastest_rate())
}

fn ledger_entry(t: f64, y: &[Complex64], n_channels: usize, acc: [f64; 3]) -> LedgerEntry {
    LedgerEntry {
        t,
        e_common: y[0].norm_sqr(),
        e_minis: y[1..=n_channels].iter().map(|v| v.norm_sqr()).sum(),
        e_spins: y[1 + n_channels..].iter().map(|v| v.norm_sqr()).sum(),
        input: acc[0],
        output: acc[1],
        dissipated: acc[2],
    }
}

fn spins_of(y: &[Complex64], system: &System) -> Vec<Vec<Complex64>> {
    system.channels.iter().map(|c| y[c.offset..c.offset + c.omega.len()].to_vec()).collect()
}

/// Integrates the recording stage from the vacuum state.
///
/// `pulse` must be sampled at `dt / 2` (see [`make_pulse`]); the record has
/// one entry per full step. Fails with [`Error::StepSize`] when `dt` exceeds
/// [`max_stable_dt`] or the energy ledger drifts by more than
/// [`LEDGER_GUARD`] of the input.
pub fn simulate(
    config: &DeviceConfig,
    ensembles: &[DiscreteEnsemble],
    pulse: &TimeSeries,
    dt: f64,
    opts: &SimOptions,
) -> Result<SimRecord> {
    let Kappa::Finite(kappa) = config.kappa else {
        return Err(Error::invalid("kappa: time-domain simulation needs a finite kappa"));
    };
    if ensembles.len() != config.channels.len()
        || ensembles.iter().zip(&config.channels).any(|(e, c)| e.channel != c.index)
    {
        return Err(Error::invalid("ensembles: need one per channel, in channel order"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("dt: must be positive, got {dt}")));
    }
    if ((pulse.dt - 0.5 * dt) / dt).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "pulse: sampled every {} but the stepper needs dt/2 = {}",
            pulse.dt,
            0.5 * dt
        )));
    }
    if pulse.values.len() < 3 || pulse.values.len() % 2 == 0 {
        return Err(Error::invalid("pulse: need an odd number (>= 3) of half-step samples"));
    }

    let system = System::new(config, ensembles, kappa);
    let dt_max = STEP_FACTOR / system.fastest_rate();
    if dt > dt_max * (1.0 + 1e-12) {
        return Err(Error::StepSize {
            dt,
            suggested: dt_max,
            reason: "step does not resolve the fastest rate".into(),
        });
    }

    let n_steps = (pulse.values.len() - 1) / 2;
    let n_ch = config.channels.len();
    let scale = pulse.energy();
    let len = system.len;
    let zero = Complex64::new(0.0, 0.0);

    let mut y = vec![zero; len];
    let mut acc = [0.0f64; 3];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![zero; len], vec![zero; len], vec![zero; len], vec![zero; len]);
    let mut tmp = vec![zero; len];

    let mut rec = SimRecord {
        dt,
        kappa,
        channels: config.channels.iter().map(|c| c.index).collect(),
        a_in: Vec::with_capacity(n_steps + 1),
        a_out: Vec::with_capacity(n_steps + 1),
        a: Vec::with_capacity(n_steps + 1),
        b: vec![Vec::with_capacity(n_steps + 1); n_ch],
        spin_snapshots: Vec::new(),
        final_spins: Vec::new(),
        ledger: Vec::with_capacity(n_steps + 1),
    };
    let record = |rec: &mut SimRecord, k: usize, y: &[Complex64], acc: [f64; 3]| {
        let a_in = pulse.values[2 * k];
        rec.a_in.push(a_in);
        rec.a.push(y[0]);
        rec.a_out.push(system.sqrt_kappa * y[0] - a_in);
        for (n, b) in rec.b.iter_mut().enumerate() {
            b.push(y[1 + n]);
        }
        if opts.spin_stride.is_some_and(|s| s > 0 && k % s == 0) {
            rec.spin_snapshots.push((k, spins_of(y, &system)));
        }
        rec.ledger.push(ledger_entry(k as f64 * dt, y, n_ch, acc));
    };
    record(&mut rec, 0, &y, acc);

    let h = dt;
    for k in 0..n_steps {
        let (u0, u1, u2) = (pulse.values[2 * k], pulse.values[2 * k + 1], pulse.values[2 * k + 2]);
        let r1 = system.deriv(&y, u0, &mut k1);
        for i in 0..len {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        let r2 = system.deriv(&tmp, u1, &mut k2);
        for i in 0..len {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        let r3 = system.deriv(&tmp, u1, &mut k3);
        for i in 0..len {
            tmp[i] = y[i] + h * k3[i];
        }
        let r4 = system.deriv(&tmp, u2, &mut k4);
        for i in 0..len {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        for q in 0..3 {
            acc[q] += h / 6.0 * (r1[q] + 2.0 * r2[q] + 2.0 * r3[q] + r4[q]);
        }
        record(&mut rec, k + 1, &y, acc);

        let entry = rec.ledger.last().expect("just pushed");
        let drift = entry.imbalance().abs();
        if !drift.is_finite() || (scale > 0.0 && drift > LEDGER_GUARD * scale) {
            return Err(Error::StepSize {
                dt,
                suggested: 0.5 * dt,
                reason: format!("energy ledger violated at t = {:.4} (imbalance {drift:.3e})", entry.t),
            });
        }
    }
    rec.final_spins = spins_of(&y, &system);
    Ok(rec)
}

/// `∝ ∫ x(t) exp(i nu t) dt` on the FFT frequency grid, zero-padded to at
/// least four times the record length. Returns `(nu, spectrum)` pairs in
/// FFT order.
fn fourier(values: &[Complex64], dt: f64) -> Vec<(f64, Complex64)> {
    let m = (4 * values.len()).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    buf[..values.len()].copy_from_slice(values);
    // The inverse transform carries the exp(+i ...) kernel of our convention.
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    let dnu = 2.0 * PI / (m as f64 * dt);
    buf.into_iter()
        .enumerate()
        .map(|(j, v)| {
            let j = if j <= m / 2 { j as f64 } else { j as f64 - m as f64 };
            (j * dnu, v * dt)
        })
        .collect()
}

/// Relative L2 distance between the simulated output spectrum and
/// `S(nu) a_in(nu)`, over frequencies where `|a_in(nu)|^2` is at least
/// `1e-3` of its peak. `S` is evaluated with the config's finite `kappa`.
pub fn compare_fd_td(record: &SimRecord, config: &DeviceConfig) -> Result<f64> {
    if record.is_empty() {
        return Err(Error::invalid("record: empty"));
    }
    let residual = record.cavity_residual();
    if residual >= RING_DOWN_TOL {
        return Err(Error::WindowTooShort { residual, suggested_span: 2.0 * record.t_end() });
    }
    let spec_in = fourier(&record.a_in, record.dt);
    let spec_out = fourier(&record.a_out, record.dt);
    let peak = spec_in.iter().map(|(_, v)| v.norm_sqr()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(0.0);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for ((nu, a_in), (_, a_out)) in spec_in.iter().zip(&spec_out) {
        if a_in.norm_sqr() < 1e-3 * peak {
            continue;
        }
        let predicted = eval_s(config, *nu)? * a_in;
        num += (a_out - predicted).norm_sqr();
        den += predicted.norm_sqr();
    }
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{expand_symmetric, SymmetricHalf};
    use crate::reference;

    fn channel(f_sq: f64, gamma2_inv: f64) -> ChannelParams {
        let mut c = ChannelParams::new(1, f_sq, gamma2_inv, 0.4, 0.5, 0.0);
        c.delta_spin = 0.5;
        c
    }

    #[test]
    fn single_atom_sits_at_line_centre() {
        let e = discretize_ensemble(&channel(1.3, 1.8), 1).unwrap();
        assert_eq!(e.detunings, vec![0.0]);
        assert!((e.total_coupling_sq() - 1.3).abs() < 1e-15);
    }

    #[test]
    fn two_atoms_at_quartiles() {
        let e = discretize_ensemble(&channel(1.0, 1.8), 2).unwrap();
        assert!((e.detunings[0] + 1.8).abs() < 1e-12);
        assert!((e.detunings[1] - 1.8).abs() < 1e-12);
    }

    #[test]
    fn ensemble_invariants() {
        for ns in [3, 10, 200, 401] {
            let e = discretize_ensemble(&channel(1.0201, 1.8), ns).unwrap();
            assert!((e.total_coupling_sq() - 1.0201).abs() < 1e-12);
            for j in 0..ns {
                assert_eq!(e.detunings[j], -e.detunings[ns - 1 - j]);
            }
            assert!(e.detunings.windows(2).all(|w| w[0] < w[1]));
        }
        assert!(discretize_ensemble(&channel(1.0, 1.0), 0).is_err());
    }

    #[test]
    fn discrete_susceptibility_tracks_lorentzian() {
        let ch = channel(1.01 * 1.01, 1.8);
        let e = discretize_ensemble(&ch, 200).unwrap();
        let eps = 0.05;
        for k in 0..=200 {
            let nu = -1.0 + 0.01 * k as f64;
            let closed = ch.f_sq / Complex64::new(ch.gamma2_inv + eps, ch.delta_spin - nu);
            let disc = e.susceptibility(nu, eps);
            assert!((disc - closed).norm() / closed.norm() <= 0.02, "nu = {nu}");
        }
    }

    #[test]
    fn gaussian_pulse_energy_and_width() {
        let spec = PulseSpec::plateau_gaussian(1.0);
        let grid = TimeGrid::covering(spec.center_time * 2.0 + 1.0, 1e-3).unwrap();
        let p = make_pulse(&spec, &grid).unwrap();
        assert!((p.energy() - 1.0).abs() < 1e-8);
        // Spectral rms width of |a_in|^2 is 1 / (2 duration) = 0.8.
        assert!((1.0 / (2.0 * spec.duration) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn square_pulse_amplitude() {
        let spec = PulseSpec { shape: PulseShape::Square, center_time: 2.0, duration: 1.5, carrier: 0.0 };
        let grid = TimeGrid::covering(4.0, 0.01).unwrap();
        let p = make_pulse(&spec, &grid).unwrap();
        let peak = p.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!((peak - 1.0 / 1.5f64.sqrt()).abs() < 1e-15);
        assert!((p.energy() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn truncated_pulses_are_rejected() {
        let spec = PulseSpec { shape: PulseShape::Gaussian, center_time: 1.0, duration: 0.6, carrier: 0.0 };
        let grid = TimeGrid::covering(10.0, 0.01).unwrap();
        assert!(matches!(make_pulse(&spec, &grid), Err(Error::TruncatedPulse { .. })));
        let spec = PulseSpec { shape: PulseShape::Square, center_time: 9.5, duration: 2.0, carrier: 0.0 };
        assert!(matches!(make_pulse(&spec, &grid), Err(Error::TruncatedPulse { .. })));
    }

    #[test]
    fn sech_pulse_energy() {
        let spec = PulseSpec { shape: PulseShape::Sech, center_time: 12.0, duration: 0.5, carrier: 0.3 };
        let grid = TimeGrid::covering(24.0, 2e-3).unwrap();
        assert!((make_pulse(&spec, &grid).unwrap().energy() - 1.0).abs() < 1e-8);
    }

    fn empty_finite(kappa: f64) -> DeviceConfig {
        let half = SymmetricHalf { gamma2_inv: 1.0, f: vec![0.0; 2], g: vec![0.0; 2], delta_c: vec![0.5, 1.5] };
        expand_symmetric(&half, 4, 1.0).unwrap().with_kappa(Kappa::Finite(kappa)).unwrap()
    }

    #[test]
    fn zero_input_gives_zero_trajectories() {
        let cfg = reference::hmr4_config().with_kappa(Kappa::Finite(100.0)).unwrap();
        let ens = discretize_all(&cfg, 4).unwrap();
        let dt = max_stable_dt(&cfg, &ens).unwrap();
        let pulse = TimeSeries::zeros(dt / 2.0, 201);
        let rec = simulate(&cfg, &ens, &pulse, dt, &SimOptions::default()).unwrap();
        assert!(rec.a.iter().chain(rec.a_out.iter()).all(|v| *v == Complex64::new(0.0, 0.0)));
        assert!(rec.final_spins.iter().flatten().all(|v| *v == Complex64::new(0.0, 0.0)));
        assert_eq!(rec.last().input, 0.0);
    }

    #[test]
    fn simulate_argument_checks() {
        let cfg = reference::hmr4_config();
        let ens = discretize_all(&cfg, 2).unwrap();
        let pulse = TimeSeries::zeros(0.005, 21);
        assert!(matches!(simulate(&cfg, &ens, &pulse, 0.01, &SimOptions::default()), Err(Error::InvalidArgument(_))));

        let cfg = cfg.with_kappa(Kappa::Finite(100.0)).unwrap();
        let dt_max = max_stable_dt(&cfg, &ens).unwrap();
        let pulse = TimeSeries::zeros(dt_max, 21);
        match simulate(&cfg, &ens, &pulse, 2.0 * dt_max, &SimOptions::default()) {
            Err(Error::StepSize { suggested, .. }) => assert!((suggested - dt_max).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
        let pulse = TimeSeries::zeros(dt_max / 2.0, 20);
        assert!(simulate(&cfg, &ens, &pulse, dt_max, &SimOptions::default()).is_err());
        assert!(simulate(&cfg, &ens[..3], &TimeSeries::zeros(dt_max / 2.0, 21), dt_max, &SimOptions::default()).is_err());
    }

    #[test]
    fn empty_cavity_is_all_pass() {
        let cfg = empty_finite(20.0);
        let ens = discretize_all(&cfg, 1).unwrap();
        let dt = max_stable_dt(&cfg, &ens).unwrap();
        let spec = PulseSpec::plateau_gaussian(1.0);
        let grid = TimeGrid::covering(spec.default_span(20.0) + 2.0, dt).unwrap();
        let pulse = make_pulse(&spec, &grid).unwrap();
        let rec = simulate(&cfg, &ens, &pulse, dt, &SimOptions::default()).unwrap();
        let last = rec.last();
        assert!((last.output - last.input).abs() <= 1e-6 * last.input);
        assert!(rec.balance_error() < 1e-8, "{}", rec.balance_error());
        assert!(compare_fd_td(&rec, &cfg).unwrap() <= 1e-4);
    }

    #[test]
    fn short_window_is_reported() {
        let cfg = reference::hmr4_config().with_kappa(Kappa::Finite(100.0)).unwrap();
        let ens = discretize_all(&cfg, 20).unwrap();
        let dt = max_stable_dt(&cfg, &ens).unwrap();
        let spec = PulseSpec::plateau_gaussian(1.0);
        let grid = TimeGrid::covering(spec.center_time + 8.0 * spec.duration, dt).unwrap();
        let rec = simulate(&cfg, &ens, &make_pulse(&spec, &grid).unwrap(), dt, &SimOptions::default()).unwrap();
        match compare_fd_td(&rec, &cfg) {
            Err(Error::WindowTooShort { suggested_span, .. }) => assert!(suggested_span > rec.t_end()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn spin_snapshots_follow_stride() {
        let cfg = reference::hmr4_config().with_kappa(Kappa::Finite(100.0)).unwrap();
        let ens = discretize_all(&cfg, 3).unwrap();
        let dt = max_stable_dt(&cfg, &ens).unwrap();
        let pulse = TimeSeries::zeros(dt / 2.0, 2 * 25 + 1);
        let rec = simulate(&cfg, &ens, &pulse, dt, &SimOptions { spin_stride: Some(10) }).unwrap();
        let steps: Vec<usize> = rec.spin_snapshots.iter().map(|s| s.0).collect();
        assert_eq!(steps, vec![0, 10, 20]);
        assert_eq!(rec.spin_snapshots[0].1.len(), 4);
        assert_eq!(rec.spin_snapshots[0].1[0].len(), 3);
        assert_eq!(rec.len(), 26);
    }
}
