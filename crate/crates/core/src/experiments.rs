//! Characterization recipes. Each one is a pure function of
//! `(config, seed, recipe parameters)` to CSV bytes.
//!
//! | recipe              | columns                                     |
//! |---------------------|---------------------------------------------|
//! | `progressive-reset` | `pulse_index,resistance`                    |
//! | `endurance`         | `cycle,r_lrs,r_hrs,ber_window`              |
//! | `endurance-sweep`   | `v_prog,t_prog,median_endurance`            |
//! | `ber`               | `addr,errors,trials,errors_1t1r`            |

use std::fmt::Write as _;

use rand::Rng;

use crate::analog::{AnalogRouting, Pad, Polarity, Waveform};
use crate::array::{CellAddress, DeviceAddress, Side};
use crate::config::SimConfig;
use crate::device::{self, PulseKind, PulseSpec};
use crate::die::{Die, Mode};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// First rng stream used by the endurance sweep; profile `i` uses
/// `SWEEP_STREAM + i`.
pub const SWEEP_STREAM: u64 = 1000;

/// A recipe runnable by name from the CLI and the bench protocol.
pub trait Recipe {
    fn name(&self) -> &'static str;
    /// Overrides one recipe parameter from its text form.
    fn set(&mut self, key: &str, value: &str) -> Result<()>;
    /// `key = value` lines describing the recipe parameters.
    fn describe(&self) -> String;
    fn run_csv(&self, config: &SimConfig, seed: u64) -> Result<String>;
}

pub const RECIPES: &[&str] = &["progressive-reset", "endurance", "endurance-sweep", "ber"];

pub fn recipe(name: &str) -> Result<Box<dyn Recipe>> {
    match name.to_ascii_lowercase().replace('_', "-").as_str() {
        "progressive-reset" => Ok(Box::new(ProgressiveReset::default())),
        "endurance" => Ok(Box::new(Endurance::default())),
        "endurance-sweep" => Ok(Box::new(EnduranceSweep::default())),
        "ber" => Ok(Box::new(BerExperiment::default())),
        other => Err(Error::Parse(format!("unknown experiment {other:?}, expected one of {RECIPES:?}"))),
    }
}

/// Looks up a recipe and applies `key=value` overrides.
pub fn configured_recipe<'a, I>(name: &str, overrides: I) -> Result<Box<dyn Recipe>>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut r = recipe(name)?;
    for kv in overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got {kv:?}")))?;
        r.set(k, v)?;
    }
    Ok(r)
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse(format!("bad value {v:?} for {key}")))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = parse_num(key, v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Range(format!("{key} must be finite")))
    }
}

fn unknown(recipe: &str, key: &str) -> Error {
    Error::Parse(format!("{recipe} has no parameter {key:?}"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResistancePoint {
    pub pulse_index: usize,
    pub resistance: f64,
}

/// Pulse train on one analog-routed device, resistance read every
/// `read_every` pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgressiveReset {
    pub n_pulses: usize,
    pub pulse: PulseSpec,
    pub read_every: usize,
    pub target: DeviceAddress,
    pub v_meas: f64,
    pub n_avg: usize,
}

impl Default for ProgressiveReset {
    fn default() -> Self {
        Self {
            n_pulses: 15_000,
            pulse: PulseSpec::reset(1.0, 1.5e-6),
            read_every: 100,
            target: DeviceAddress::new(0, 0, Side::Bl),
            v_meas: 0.2,
            n_avg: 16,
        }
    }
}

impl ProgressiveReset {
    /// Routing used for the whole run: gate on pad A, the pulse polarity
    /// decides which terminal faces pad B.
    pub fn routing(&self, die: &Die) -> Result<AnalogRouting> {
        let polarity = match self.pulse.kind {
            PulseKind::Reset => Polarity::ResetDirection,
            PulseKind::Set => Polarity::SetDirection,
            other => return Err(Error::Range(format!("pulse train needs Set or Reset pulses, got {other:?}"))),
        };
        die.config().geometry.check(self.target.cell)?;
        Ok(AnalogRouting::for_device(&die.config().geometry, self.target, Pad::A, Pad::B, polarity))
    }

    pub fn run(&self, die: &mut Die) -> Result<Vec<ResistancePoint>> {
        if self.read_every == 0 || self.n_avg == 0 {
            return Err(Error::Range("read_every and n_avg must be >= 1".into()));
        }
        let routing = self.routing(die)?;
        let level = self.pulse.amplitude.abs();
        // Start from a formed device in LRS.
        die.set_mode(Mode::Digital);
        if !die.array().cell(self.target.cell)?.dev_bl.formed {
            die.form_cell(self.target.cell)?;
        }
        die.write_bit(self.target.cell, self.target.side == Side::Bl)?;
        die.set_mode(Mode::Analog);
        die.load_routing(routing)?;

        let mut rows = Vec::with_capacity(self.n_pulses / self.read_every + 1);
        rows.push(ResistancePoint { pulse_index: 0, resistance: die.measure_resistance(Pad::B, self.v_meas, self.n_avg)? });
        let mut done = 0;
        while done < self.n_pulses {
            let k = self.read_every.min(self.n_pulses - done);
            let mut wf = Waveform::train(level, self.pulse.width, k, 1.0)?;
            wf.sample_interval = wf.total_duration();
            die.apply_waveform(Pad::B, &wf)?;
            done += k;
            let r = die.measure_resistance(Pad::B, self.v_meas, self.n_avg)?;
            rows.push(ResistancePoint { pulse_index: done, resistance: r });
        }
        Ok(rows)
    }

    pub fn to_csv(rows: &[ResistancePoint]) -> String {
        let mut out = String::from("pulse_index,resistance\n");
        for r in rows {
            let _ = writeln!(out, "{},{:e}", r.pulse_index, r.resistance);
        }
        out
    }
}

impl Recipe for ProgressiveReset {
    fn name(&self) -> &'static str {
        "progressive-reset"
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "n_pulses" => self.n_pulses = parse_num(key, v)?,
            "amplitude" => {
                let a = parse_f64(key, v)?;
                self.pulse.amplitude = if self.pulse.kind == PulseKind::Reset { -a.abs() } else { a.abs() };
            }
            "width" => self.pulse.width = parse_f64(key, v)?,
            "kind" => {
                let a = self.pulse.amplitude.abs();
                self.pulse = match v.to_ascii_lowercase().as_str() {
                    "reset" => PulseSpec::reset(a, self.pulse.width),
                    "set" => PulseSpec::set(a, self.pulse.width),
                    _ => return Err(Error::Parse(format!("kind must be set or reset, got {v:?}"))),
                };
            }
            "read_every" => self.read_every = parse_num(key, v)?,
            "row" => self.target.cell.row = parse_num(key, v)?,
            "col" => self.target.cell.col = parse_num(key, v)?,
            "side" => self.target.side = Side::parse(v)?,
            "v_meas" => self.v_meas = parse_f64(key, v)?,
            "n_avg" => self.n_avg = parse_num(key, v)?,
            _ => return Err(unknown(self.name(), key)),
        }
        if self.n_pulses > 10_000_000 || self.n_avg > 1_000_000 {
            return Err(Error::Range("n_pulses <= 1e7 and n_avg <= 1e6".into()));
        }
        Ok(())
    }

    fn describe(&self) -> String {
        let kind = if self.pulse.kind == PulseKind::Reset { "reset" } else { "set" };
        format!(
            "n_pulses = {}\namplitude = {:e}\nwidth = {:e}\nkind = {kind}\nread_every = {}\nrow = {}\ncol = {}\nside = {}\nv_meas = {:e}\nn_avg = {}\n",
            self.n_pulses,
            self.pulse.amplitude.abs(),
            self.pulse.width,
            self.read_every,
            self.target.cell.row,
            self.target.cell.col,
            self.target.side.as_str(),
            self.v_meas,
            self.n_avg
        )
    }

    fn run_csv(&self, config: &SimConfig, seed: u64) -> Result<String> {
        let mut die = Die::new(*config, seed)?;
        Ok(Self::to_csv(&self.run(&mut die)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnduranceRow {
    pub cycle: u64,
    pub r_lrs: f64,
    pub r_hrs: f64,
    pub ber_window: f64,
}

/// Repeated complementary programming of one cell, with analog resistance
/// checks and a sense bit-error probe at log-spaced checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Endurance {
    pub max_cycles: u64,
    pub checkpoints_per_decade: u32,
    pub target: CellAddress,
    pub v_meas: f64,
    pub n_avg: usize,
    pub probe_reads: usize,
}

impl Default for Endurance {
    fn default() -> Self {
        Self {
            max_cycles: 10_000_000_000,
            checkpoints_per_decade: 10,
            target: CellAddress::new(0, 0),
            v_meas: 0.2,
            n_avg: 16,
            probe_reads: 100,
        }
    }
}

/// Distinct cycle counts `round(10^(k / per_decade))` up to `max`, plus
/// `max` itself.
pub fn log_checkpoints(max: u64, per_decade: u32) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    if max == 0 || per_decade == 0 {
        return out;
    }
    for k in 0.. {
        let c = 10f64.powf(k as f64 / per_decade as f64).round();
        if c > max as f64 {
            break;
        }
        let c = c as u64;
        if out.last() != Some(&c) {
            out.push(c);
        }
    }
    if out.last() != Some(&max) {
        out.push(max);
    }
    out
}

impl Endurance {
    pub fn run(&self, die: &mut Die) -> Result<Vec<EnduranceRow>> {
        if self.max_cycles < 1 {
            return Err(Error::Range("max_cycles must be >= 1".into()));
        }
        if self.checkpoints_per_decade == 0 || self.n_avg == 0 || self.probe_reads == 0 {
            return Err(Error::Range("checkpoints_per_decade, n_avg and probe_reads must be >= 1".into()));
        }
        let addr = self.target;
        die.set_mode(Mode::Digital);
        let cell = die.array().cell(addr)?;
        if !cell.dev_bl.formed && !cell.dev_blb.formed {
            die.form_cell(addr)?;
        }
        let geometry = die.config().geometry;
        let mut done = 0u64;
        let mut next_bit = true;
        let mut rows = Vec::new();
        for c in log_checkpoints(self.max_cycles, self.checkpoints_per_decade) {
            let n = c - done;
            die.cycle_cell(addr, n, next_bit)?;
            let stored = next_bit ^ ((n - 1) % 2 == 1);
            next_bit = !stored;
            done = c;

            die.set_mode(Mode::Analog);
            let lrs = Side::lrs_for(stored);
            let mut r = [0.0; 2];
            for (slot, side) in [lrs, lrs.other()].into_iter().enumerate() {
                let dev = DeviceAddress { cell: addr, side };
                die.load_routing(AnalogRouting::for_device(&geometry, dev, Pad::A, Pad::B, Polarity::SetDirection))?;
                r[slot] = die.measure_resistance(Pad::B, self.v_meas, self.n_avg)?;
            }
            die.set_mode(Mode::Digital);

            let mut errors = 0;
            for _ in 0..self.probe_reads {
                if die.read_bit(addr)? != stored {
                    errors += 1;
                }
            }
            rows.push(EnduranceRow {
                cycle: c,
                r_lrs: r[0],
                r_hrs: r[1],
                ber_window: errors as f64 / self.probe_reads as f64,
            });
        }
        Ok(rows)
    }

    pub fn to_csv(rows: &[EnduranceRow]) -> String {
        let mut out = String::from("cycle,r_lrs,r_hrs,ber_window\n");
        for r in rows {
            let _ = writeln!(out, "{},{:e},{:e},{}", r.cycle, r.r_lrs, r.r_hrs, r.ber_window);
        }
        out
    }
}

impl Recipe for Endurance {
    fn name(&self) -> &'static str {
        "endurance"
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "max_cycles" => {
                // Accept 1e9 style as well as plain integers.
                let x = parse_f64(key, v)?;
                if !(1.0..=1e15).contains(&x) || x.fract() != 0.0 {
                    return Err(Error::Range("max_cycles must be an integer in [1, 1e15]".into()));
                }
                self.max_cycles = x as u64;
            }
            "checkpoints_per_decade" => self.checkpoints_per_decade = parse_num(key, v)?,
            "row" => self.target.row = parse_num(key, v)?,
            "col" => self.target.col = parse_num(key, v)?,
            "v_meas" => self.v_meas = parse_f64(key, v)?,
            "n_avg" => self.n_avg = parse_num(key, v)?,
            "probe_reads" => self.probe_reads = parse_num(key, v)?,
            _ => return Err(unknown(self.name(), key)),
        }
        if self.checkpoints_per_decade > 1000 || self.n_avg > 1_000_000 || self.probe_reads > 1_000_000 {
            return Err(Error::Range("checkpoints_per_decade <= 1000, n_avg and probe_reads <= 1e6".into()));
        }
        Ok(())
    }

    fn describe(&self) -> String {
        format!(
            "max_cycles = {}\ncheckpoints_per_decade = {}\nrow = {}\ncol = {}\nv_meas = {:e}\nn_avg = {}\nprobe_reads = {}\n",
            self.max_cycles,
            self.checkpoints_per_decade,
            self.target.row,
            self.target.col,
            self.v_meas,
            self.n_avg,
            self.probe_reads
        )
    }

    fn run_csv(&self, config: &SimConfig, seed: u64) -> Result<String> {
        let mut die = Die::new(*config, seed)?;
        Ok(Self::to_csv(&self.run(&mut die)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgrammingCondition {
    pub v_prog: f64,
    pub t_prog: f64,
}

/// Endurance budgets sampled under several programming conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct EnduranceSweep {
    pub profiles: Vec<ProgrammingCondition>,
    pub devices_per_profile: usize,
}

impl Default for EnduranceSweep {
    fn default() -> Self {
        Self {
            profiles: [2.0, 2.25, 2.5, 2.75, 3.0]
                .into_iter()
                .map(|v_prog| ProgrammingCondition { v_prog, t_prog: 1e-6 })
                .collect(),
            devices_per_profile: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub condition: ProgrammingCondition,
    pub median_endurance: f64,
    /// Every sampled budget, in sampling order.
    pub limits: Vec<u64>,
}

pub fn median(values: &[u64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2] as f64,
        _ => (v[n / 2 - 1] as f64 + v[n / 2] as f64) / 2.0,
    }
}

impl EnduranceSweep {
    pub fn run(&self, config: &SimConfig, seed: u64) -> Result<Vec<SweepRow>> {
        if self.profiles.len() < 2 {
            return Err(Error::Range("endurance sweep needs at least two profiles".into()));
        }
        if self.devices_per_profile < 20 {
            return Err(Error::Range("endurance sweep needs at least 20 devices per profile".into()));
        }
        config.device.validate()?;
        let root = SimRng::new(seed);
        let mut rows = Vec::with_capacity(self.profiles.len());
        for (i, cond) in self.profiles.iter().enumerate() {
            if !(cond.v_prog.is_finite() && cond.t_prog.is_finite() && cond.t_prog > 0.0) {
                return Err(Error::Range(format!("bad programming condition {cond:?}")));
            }
            let mut rng = root.split(SWEEP_STREAM + i as u64);
            let limits: Vec<u64> = (0..self.devices_per_profile)
                .map(|_| device::sample_endurance_limit(&config.device.endurance, cond.v_prog, &mut rng))
                .collect();
            rows.push(SweepRow { condition: *cond, median_endurance: median(&limits), limits });
        }
        Ok(rows)
    }

    pub fn to_csv(rows: &[SweepRow]) -> String {
        let mut out = String::from("v_prog,t_prog,median_endurance\n");
        for r in rows {
            let _ = writeln!(out, "{:e},{:e},{:e}", r.condition.v_prog, r.condition.t_prog, r.median_endurance);
        }
        out
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|x| parse_f64(key, x.trim())).collect()
}

impl Recipe for EnduranceSweep {
    fn name(&self) -> &'static str {
        "endurance-sweep"
    }

    /// `v_prog=2.0,2.5,3.0` replaces the voltage grid (keeping the first
    /// width); `t_prog=1e-6` sets every width; `devices=N`.
    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "v_prog" => {
                let t = self.profiles.first().map_or(1e-6, |p| p.t_prog);
                self.profiles = parse_list(key, v)?
                    .into_iter()
                    .map(|v_prog| ProgrammingCondition { v_prog, t_prog: t })
                    .collect();
            }
            "t_prog" => {
                let t = parse_f64(key, v)?;
                self.profiles.iter_mut().for_each(|p| p.t_prog = t);
            }
            "devices" => self.devices_per_profile = parse_num(key, v)?,
            _ => return Err(unknown(self.name(), key)),
        }
        if self.devices_per_profile > 10_000_000 || self.profiles.len() > 1000 {
            return Err(Error::Range("at most 1e7 devices and 1000 profiles".into()));
        }
        Ok(())
    }

    fn describe(&self) -> String {
        let vs: Vec<String> = self.profiles.iter().map(|p| format!("{:e}", p.v_prog)).collect();
        let ts: Vec<String> = self.profiles.iter().map(|p| format!("{:e}", p.t_prog)).collect();
        format!("v_prog = {}\nt_prog = {}\ndevices = {}\n", vs.join(","), ts.join(","), self.devices_per_profile)
    }

    fn run_csv(&self, config: &SimConfig, seed: u64) -> Result<String> {
        Ok(Self::to_csv(&self.run(config, seed)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    Checkerboard,
    AllOnes,
    AllZeros,
    /// Uniform random bits drawn from the die's operation stream.
    Random,
}

impl Pattern {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "checkerboard" => Ok(Pattern::Checkerboard),
            "ones" => Ok(Pattern::AllOnes),
            "zeros" => Ok(Pattern::AllZeros),
            "random" => Ok(Pattern::Random),
            other => Err(Error::Parse(format!("unknown pattern {other:?}"))),
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Pattern::Checkerboard => "checkerboard",
            Pattern::AllOnes => "ones",
            Pattern::AllZeros => "zeros",
            Pattern::Random => "random",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BerRow {
    pub addr: CellAddress,
    pub linear: usize,
    pub errors: u64,
    pub trials: u64,
    pub errors_1t1r: u64,
}

/// Full-array bit-error measurement, complementary sensing against
/// single-device sensing of the same devices with the same random stream.
#[derive(Debug, Clone, PartialEq)]
pub struct BerExperiment {
    pub pattern: Pattern,
    pub n_reads: usize,
}

impl Default for BerExperiment {
    fn default() -> Self {
        Self { pattern: Pattern::Checkerboard, n_reads: 20 }
    }
}

impl BerExperiment {
    /// Forms every cell and writes the pattern. Returns the stored bits in
    /// row-major order.
    pub fn prepare(&self, die: &mut Die) -> Result<Vec<bool>> {
        die.set_mode(Mode::Digital);
        die.form_all()?;
        let geometry = die.config().geometry;
        let mut bits = Vec::with_capacity(geometry.cells());
        for addr in geometry.addresses() {
            let bit = match self.pattern {
                Pattern::Checkerboard => (addr.row + addr.col) % 2 == 0,
                Pattern::AllOnes => true,
                Pattern::AllZeros => false,
                Pattern::Random => die.rng_mut().random_bool(0.5),
            };
            die.write_bit(addr, bit)?;
            bits.push(bit);
        }
        Ok(bits)
    }

    /// Reads back an already prepared die. Both passes start from the same
    /// die state and random stream.
    pub fn measure(&self, die: &mut Die, bits: &[bool]) -> Result<Vec<BerRow>> {
        let geometry = die.config().geometry;
        if bits.len() != geometry.cells() {
            return Err(Error::Range(format!("expected {} stored bits", geometry.cells())));
        }
        let mut reference = die.clone();
        let mut rows: Vec<BerRow> = geometry
            .addresses()
            .enumerate()
            .map(|(linear, addr)| BerRow { addr, linear, errors: 0, trials: self.n_reads as u64, errors_1t1r: 0 })
            .collect();
        for _ in 0..self.n_reads {
            for (row, bit) in rows.iter_mut().zip(bits) {
                if die.read_bit(row.addr)? != *bit {
                    row.errors += 1;
                }
            }
        }
        for _ in 0..self.n_reads {
            for (row, bit) in rows.iter_mut().zip(bits) {
                if reference.read_bit_reference(row.addr)? != *bit {
                    row.errors_1t1r += 1;
                }
            }
        }
        Ok(rows)
    }

    pub fn run(&self, die: &mut Die) -> Result<Vec<BerRow>> {
        let bits = self.prepare(die)?;
        self.measure(die, &bits)
    }

    pub fn to_csv(rows: &[BerRow]) -> String {
        let mut out = String::from("addr,errors,trials,errors_1t1r\n");
        for r in rows {
            let _ = writeln!(out, "{},{},{},{}", r.linear, r.errors, r.trials, r.errors_1t1r);
        }
        out
    }
}

impl Recipe for BerExperiment {
    fn name(&self) -> &'static str {
        "ber"
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "pattern" => self.pattern = Pattern::parse(v)?,
            "n_reads" => {
                self.n_reads = parse_num(key, v)?;
                if self.n_reads > 100_000 {
                    return Err(Error::Range("n_reads must be <= 1e5".into()));
                }
            }
            _ => return Err(unknown(self.name(), key)),
        }
        Ok(())
    }

    fn describe(&self) -> String {
        format!("pattern = {}\nn_reads = {}\n", self.pattern.as_str(), self.n_reads)
    }

    fn run_csv(&self, config: &SimConfig, seed: u64) -> Result<String> {
        let mut die = Die::new(*config, seed)?;
        Ok(Self::to_csv(&self.run(&mut die)?))
    }
}
