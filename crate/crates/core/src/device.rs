//! Stochastic behavioral model of one hafnium-oxide memristor.
//!
//! The device state is a filament strength `w` in `[0, 1]` (1 is the low
//! resistance state, 0 the high resistance state). Conductance is linear in
//! `w` between the HRS and LRS medians, scaled by a fixed device-to-device
//! factor and a two-level random telegraph multiplier.
//!
//! Switching:
//! - Form: one-time, sets the filament close to full strength.
//! - Set: redraws `w` near 1 with cycle-to-cycle spread.
//! - Reset: multiplicative decay `w <- w (1 - eta)`. Strong pulses give
//!   `eta = 1`; pulses barely above threshold give a tiny `eta`, so long
//!   trains raise the resistance progressively.
//!
//! Endurance: each device draws a cycle budget at birth. Past that budget the
//! memory window collapses along a logistic ramp spanning one decade of
//! cycles: both states drift to a common stuck conductance.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Endurance budgets are clamped to this range, in decades of cycles.
pub const ENDURANCE_DECADES: (f64, f64) = (3.0, 9.0);
/// Steepness of the logistic degradation ramp over its decade.
pub const DEGRADATION_STEEPNESS: f64 = 10.0;
/// Reference pulse width of the RESET overdrive factor.
pub const RESET_TIME_REF: f64 = 1e-6;
/// An unformed device reads this fraction of the HRS conductance.
pub const UNFORMED_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnduranceModel {
    /// Mean log10 of the cycle budget when programming at `vref`.
    pub log10_endurance_at_vref: f64,
    /// Decades of endurance gained per volt of programming voltage (negative:
    /// harder programming wears devices faster).
    pub endurance_voltage_slope: f64,
    pub vref: f64,
    /// Standard deviation of log10 endurance across devices.
    pub spread_decades: f64,
}

impl Default for EnduranceModel {
    fn default() -> Self {
        Self {
            log10_endurance_at_vref: 9.0,
            endurance_voltage_slope: -5.5,
            vref: 2.0,
            spread_decades: 0.25,
        }
    }
}

impl EnduranceModel {
    /// Mean log10 endurance, before clamping, when programming at `v_prog`.
    pub fn mean_log10(&self, v_prog: f64) -> f64 {
        self.log10_endurance_at_vref + self.endurance_voltage_slope * (v_prog - self.vref)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// LRS median conductance (S).
    pub g_on_median: f64,
    /// HRS median conductance (S).
    pub g_off_median: f64,
    /// Lognormal sigma of the per-device conductance factor.
    pub sigma_d2d: f64,
    /// Lognormal sigma of per-cycle switching outcomes.
    pub sigma_c2c: f64,
    /// Relative RTN conductance step: the factor is `1 +/- rtn_amplitude`.
    pub rtn_amplitude: f64,
    /// Probability that the RTN trap changes state on a read.
    pub rtn_toggle_prob: f64,
    /// Relative Gaussian current noise per read.
    pub read_noise_sigma: f64,
    pub v_form_min: f64,
    pub v_set_min: f64,
    pub v_reset_min: f64,
    /// Pulses shorter than this never switch (s).
    pub t_min: f64,
    pub reset_step_gain: f64,
    /// Voltage scale of the RESET overdrive factor (V).
    pub reset_overdrive_scale: f64,
    /// Filament strength of a fully worn device.
    pub stuck_w: f64,
    /// Probability of a SET-direction drift per read.
    pub disturb_rate: f64,
    /// Filament strength gained on one disturb event.
    pub disturb_step: f64,
    pub endurance: EnduranceModel,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            g_on_median: 1.0 / 10e3,
            g_off_median: 1.0 / 200e3,
            sigma_d2d: 0.1,
            sigma_c2c: 0.05,
            rtn_amplitude: 0.02,
            rtn_toggle_prob: 0.1,
            read_noise_sigma: 0.02,
            v_form_min: 3.0,
            v_set_min: 1.8,
            v_reset_min: 0.9,
            t_min: 10e-9,
            reset_step_gain: 2e-4,
            reset_overdrive_scale: 0.1,
            stuck_w: 0.5,
            disturb_rate: 1e-6,
            disturb_step: 0.01,
            endurance: EnduranceModel::default(),
        }
    }
}

impl DeviceParams {
    /// Defaults with every noise source switched off.
    pub fn noiseless() -> Self {
        Self::default().without_noise()
    }

    pub fn without_noise(mut self) -> Self {
        self.sigma_d2d = 0.0;
        self.sigma_c2c = 0.0;
        self.rtn_amplitude = 0.0;
        self.read_noise_sigma = 0.0;
        self.disturb_rate = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Param(what.to_string()));
        let all = [
            self.g_on_median,
            self.g_off_median,
            self.sigma_d2d,
            self.sigma_c2c,
            self.rtn_amplitude,
            self.rtn_toggle_prob,
            self.read_noise_sigma,
            self.v_form_min,
            self.v_set_min,
            self.v_reset_min,
            self.t_min,
            self.reset_step_gain,
            self.reset_overdrive_scale,
            self.stuck_w,
            self.disturb_rate,
            self.disturb_step,
            self.endurance.log10_endurance_at_vref,
            self.endurance.endurance_voltage_slope,
            self.endurance.vref,
            self.endurance.spread_decades,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("device parameters must be finite");
        }
        if !(self.g_on_median > self.g_off_median && self.g_off_median > 0.0) {
            return bad("need g_on_median > g_off_median > 0");
        }
        if [
            self.sigma_d2d,
            self.sigma_c2c,
            self.read_noise_sigma,
            self.t_min,
            self.reset_step_gain,
            self.disturb_step,
            self.endurance.spread_decades,
        ]
        .iter()
        .any(|v| *v < 0.0)
        {
            return bad("sigmas, gains, steps and widths must be >= 0");
        }
        if !(0.0..1.0).contains(&self.rtn_amplitude) {
            return bad("rtn_amplitude must lie in [0, 1)");
        }
        for p in [self.rtn_toggle_prob, self.disturb_rate, self.stuck_w] {
            if !(0.0..=1.0).contains(&p) {
                return bad("probabilities and stuck_w must lie in [0, 1]");
            }
        }
        if !(self.v_set_min > 0.0 && self.v_reset_min > 0.0) {
            return bad("switching thresholds must be positive");
        }
        if self.v_form_min < self.v_set_min {
            return bad("need v_form_min >= v_set_min");
        }
        if self.reset_overdrive_scale <= 0.0 {
            return bad("reset_overdrive_scale must be positive");
        }
        Ok(())
    }

    /// True when `v` is a legal read bias: below SET threshold and below
    /// RESET threshold in magnitude.
    pub fn is_read_voltage(&self, v: f64) -> bool {
        v.is_finite() && v < self.v_set_min && v.abs() < self.v_reset_min
    }

    /// Magnitude below which no pulse of any polarity switches.
    pub fn sub_threshold_limit(&self) -> f64 {
        self.v_set_min.min(self.v_reset_min)
    }

    /// Conductance of a device with filament strength `w` and unit factors.
    fn window_conductance(&self, w: f64) -> f64 {
        self.g_off_median + w * (self.g_on_median - self.g_off_median)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RtnPhase {
    Low,
    High,
}

impl RtnPhase {
    fn toggled(self) -> Self {
        match self {
            RtnPhase::Low => RtnPhase::High,
            RtnPhase::High => RtnPhase::Low,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemristorState {
    pub formed: bool,
    /// Filament strength, 1 = LRS, 0 = HRS.
    pub w: f64,
    pub d2d_factor: f64,
    pub cycle_count: u64,
    pub endurance_limit: u64,
    /// 0 = fresh, 1 = window fully collapsed.
    pub degradation: f64,
    pub rtn_phase: RtnPhase,
}

impl MemristorState {
    /// A formed device with unit factors and filament strength `w`; test and
    /// fixture helper.
    pub fn formed_ideal(w: f64) -> Self {
        Self {
            formed: true,
            w,
            d2d_factor: 1.0,
            cycle_count: 0,
            endurance_limit: u64::MAX,
            degradation: 0.0,
            rtn_phase: RtnPhase::Low,
        }
    }

    /// Adds `n` program cycles without simulating them one by one. Only the
    /// counter and the wear it implies change.
    pub fn advance_cycles(&mut self, n: u64) {
        self.cycle_count = self.cycle_count.saturating_add(n);
        self.refresh_degradation();
    }

    fn consume_cycle(&mut self) {
        self.advance_cycles(1);
    }

    fn refresh_degradation(&mut self) {
        let d = degradation_curve(self.cycle_count, self.endurance_limit);
        // Forced degradation (fixtures, imports) never heals.
        self.degradation = self.degradation.max(d);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PulseKind {
    Form,
    Set,
    Reset,
    Read,
}

/// One stimulus. `amplitude` is the voltage across the device, top electrode
/// (bit line) minus bottom electrode (source line): positive for Form/Set,
/// negative for Reset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub amplitude: f64,
    pub width: f64,
    pub kind: PulseKind,
}

impl PulseSpec {
    pub fn form(volts: f64, width: f64) -> Self {
        Self { amplitude: volts.abs(), width, kind: PulseKind::Form }
    }

    pub fn set(volts: f64, width: f64) -> Self {
        Self { amplitude: volts.abs(), width, kind: PulseKind::Set }
    }

    pub fn reset(volts: f64, width: f64) -> Self {
        Self { amplitude: -volts.abs(), width, kind: PulseKind::Reset }
    }

    pub fn read(volts: f64, width: f64) -> Self {
        Self { amplitude: volts, width, kind: PulseKind::Read }
    }

    pub fn validate(&self, params: &DeviceParams) -> Result<()> {
        if !(self.amplitude.is_finite() && self.width.is_finite() && self.width > 0.0) {
            return Err(Error::Range(format!(
                "pulse needs a finite amplitude and a positive width, got {self:?}"
            )));
        }
        if self.kind == PulseKind::Read && !params.is_read_voltage(self.amplitude) {
            return Err(Error::Range(format!(
                "read amplitude {} V is in the switching range",
                self.amplitude
            )));
        }
        Ok(())
    }

    /// Classifies a raw voltage seen by a device during `width` seconds, as
    /// produced by analog routing. Returns `None` when the stimulus cannot
    /// act on the device (negative bias on an unformed device).
    pub fn from_stimulus(volts: f64, width: f64, formed: bool, params: &DeviceParams) -> Option<Self> {
        if params.is_read_voltage(volts) {
            return Some(Self::read(volts, width));
        }
        match (volts > 0.0, formed) {
            (true, false) => Some(Self::form(volts, width)),
            (true, true) => Some(Self::set(volts, width)),
            (false, true) => Some(Self::reset(volts, width)),
            (false, false) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ApplyReport {
    pub switched: bool,
    pub cycle_consumed: bool,
    /// Only set by read-class pulses.
    pub disturbed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadReport {
    /// Device current (A), signed like the bias.
    pub current: f64,
    pub disturbed: bool,
}

/// Wear of a device after `cycles` program cycles given its budget `limit`.
///
/// Zero up to the budget, then a logistic ramp in log10(cycles / limit),
/// normalized to reach exactly 1 one decade past the budget. It crosses 0.5
/// at `limit * sqrt(10)`.
pub fn degradation_curve(cycles: u64, limit: u64) -> f64 {
    if cycles <= limit {
        return 0.0;
    }
    let x = (cycles as f64 / limit.max(1) as f64).log10();
    if x >= 1.0 {
        return 1.0;
    }
    let s = |t: f64| 1.0 / (1.0 + (-DEGRADATION_STEEPNESS * (t - 0.5)).exp());
    let (lo, hi) = (s(0.0), s(1.0));
    ((s(x) - lo) / (hi - lo)).clamp(0.0, 1.0)
}

/// Samples a device's endurance budget when programmed at `v_prog`.
pub fn sample_endurance_limit<R: Rng + ?Sized>(model: &EnduranceModel, v_prog: f64, rng: &mut R) -> u64 {
    let mut x = model.mean_log10(v_prog);
    if model.spread_decades > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        x += model.spread_decades * z;
    }
    let x = x.clamp(ENDURANCE_DECADES.0, ENDURANCE_DECADES.1);
    10f64.powf(x).round() as u64
}

/// A fresh, unformed device whose endurance is sampled at the endurance
/// model's reference programming voltage.
pub fn sample_fresh_device<R: Rng + ?Sized>(params: &DeviceParams, rng: &mut R) -> Result<MemristorState> {
    sample_fresh_device_at(params, params.endurance.vref, rng)
}

pub fn sample_fresh_device_at<R: Rng + ?Sized>(
    params: &DeviceParams,
    v_prog: f64,
    rng: &mut R,
) -> Result<MemristorState> {
    params.validate()?;
    if !v_prog.is_finite() {
        return Err(Error::Param("programming voltage must be finite".into()));
    }
    let d2d_factor = lognormal(params.sigma_d2d, rng);
    let endurance_limit = sample_endurance_limit(&params.endurance, v_prog, rng);
    let rtn_phase = if params.rtn_amplitude > 0.0 && rng.random_bool(0.5) {
        RtnPhase::High
    } else {
        RtnPhase::Low
    };
    Ok(MemristorState {
        formed: false,
        w: 0.0,
        d2d_factor,
        cycle_count: 0,
        endurance_limit,
        degradation: 0.0,
        rtn_phase,
    })
}

/// Instantaneous conductance (S), including the current RTN level.
pub fn conductance(state: &MemristorState, params: &DeviceParams) -> f64 {
    if !state.formed {
        return params.g_off_median * state.d2d_factor * UNFORMED_FRACTION;
    }
    let w = state.w.clamp(0.0, 1.0);
    let d = state.degradation.clamp(0.0, 1.0);
    let healthy = state.d2d_factor * params.window_conductance(w);
    let stuck = params.window_conductance(params.stuck_w);
    let rtn = match state.rtn_phase {
        RtnPhase::Low => 1.0 - params.rtn_amplitude,
        RtnPhase::High => 1.0 + params.rtn_amplitude,
    };
    ((1.0 - d) * healthy + d * stuck) * rtn
}

/// RESET strength per pulse for an overdrive `od` (V) above threshold.
///
/// Quadratic onset near threshold, exponential far above it, linear in
/// width.
pub fn reset_overdrive_factor(params: &DeviceParams, overdrive: f64, width: f64) -> f64 {
    if overdrive <= 0.0 {
        return 0.0;
    }
    let u = overdrive / params.reset_overdrive_scale;
    (width / RESET_TIME_REF) * (u.exp() - 1.0 - u)
}

/// Applies one pulse. Sub-threshold pulses leave the device untouched; a
/// read-class pulse only gives the device one disturb opportunity.
pub fn apply_pulse<R: Rng + ?Sized>(
    state: &mut MemristorState,
    params: &DeviceParams,
    pulse: &PulseSpec,
    rng: &mut R,
) -> Result<ApplyReport> {
    pulse.validate(params)?;
    match pulse.kind {
        PulseKind::Form if state.formed => {
            return Err(Error::State("device is already formed".into()));
        }
        PulseKind::Set | PulseKind::Reset if !state.formed => {
            return Err(Error::State("device is not formed".into()));
        }
        _ => {}
    }

    let long_enough = pulse.width >= params.t_min;
    let mut report = ApplyReport::default();
    match pulse.kind {
        PulseKind::Read => {
            report.disturbed = read_stress(state, params, pulse.amplitude, rng);
        }
        PulseKind::Form => {
            if long_enough && pulse.amplitude >= params.v_form_min {
                state.formed = true;
                state.w = lognormal(params.sigma_c2c, rng).min(1.0);
                report.switched = true;
            }
        }
        PulseKind::Set => {
            if long_enough && pulse.amplitude >= params.v_set_min {
                state.w = lognormal(params.sigma_c2c, rng).min(1.0);
                state.consume_cycle();
                report.switched = true;
                report.cycle_consumed = true;
            }
        }
        PulseKind::Reset => {
            let magnitude = pulse.amplitude.abs();
            if long_enough && magnitude >= params.v_reset_min {
                let od = magnitude - params.v_reset_min;
                let eta = params.reset_step_gain
                    * reset_overdrive_factor(params, od, pulse.width)
                    * lognormal(params.sigma_c2c, rng);
                state.w *= 1.0 - eta.min(1.0);
                state.consume_cycle();
                report.switched = true;
                report.cycle_consumed = true;
            }
        }
    }
    Ok(report)
}

/// Reads the device at bias `v_read`.
pub fn read<R: Rng + ?Sized>(
    state: &mut MemristorState,
    params: &DeviceParams,
    v_read: f64,
    rng: &mut R,
) -> Result<ReadReport> {
    if !params.is_read_voltage(v_read) {
        return Err(Error::Range(format!("read bias {v_read} V is in the switching range")));
    }
    let current = conductance(state, params) * v_read * (1.0 + gaussian(params.read_noise_sigma, rng));
    let disturbed = read_stress(state, params, v_read, rng);
    Ok(ReadReport { current, disturbed })
}

/// Current a sampler would see at bias `volts` without the read side effects
/// (RTN step, disturb). Used for samples taken during switching pulses.
pub fn sample_current<R: Rng + ?Sized>(
    state: &MemristorState,
    params: &DeviceParams,
    volts: f64,
    rng: &mut R,
) -> f64 {
    conductance(state, params) * volts * (1.0 + gaussian(params.read_noise_sigma, rng))
}

fn read_stress<R: Rng + ?Sized>(state: &mut MemristorState, params: &DeviceParams, volts: f64, rng: &mut R) -> bool {
    if params.rtn_amplitude > 0.0 && rng.random_bool(params.rtn_toggle_prob) {
        state.rtn_phase = state.rtn_phase.toggled();
    }
    if state.formed && volts != 0.0 && params.disturb_rate > 0.0 && rng.random_bool(params.disturb_rate) {
        state.w = (state.w + params.disturb_step).min(1.0);
        return true;
    }
    false
}

fn lognormal<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    if sigma > 0.0 {
        (sigma * rng.sample::<f64, _>(StandardNormal)).exp()
    } else {
        1.0
    }
}

fn gaussian<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    if sigma > 0.0 {
        sigma * rng.sample::<f64, _>(StandardNormal)
    } else {
        0.0
    }
}
