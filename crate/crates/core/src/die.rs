//! The simulated chip: array, both peripheries and the mode switch.
//!
//! A [`Die`] is a single state machine. Digital operations fail with
//! [`Error::Mode`] while the analog mode is active and the other way round.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analog::{self, AnalogRouting, Pad, Sample, Waveform};
use crate::array::{self, CellAddress, CellArray, ComplementaryCell, DeviceAddress, HalfSelectReport};
use crate::config::SimConfig;
use crate::device::{self, ApplyReport, MemristorState, PulseSpec};
use crate::digital::{self, Phase};
use crate::error::{Error, Result};
use crate::rng::{RngState, SimRng, DEVICE_STREAM, OPERATION_STREAM};

const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Digital,
    Analog,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "DIGITAL" => Ok(Mode::Digital),
            "ANALOG" => Ok(Mode::Analog),
            other => Err(Error::Parse(format!("unknown mode {other:?}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Digital => "DIGITAL",
            Mode::Analog => "ANALOG",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FormReport {
    pub bl_formed: bool,
    pub blb_formed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WriteReport {
    pub set: ApplyReport,
    pub reset: ApplyReport,
}

#[derive(Debug, Clone)]
pub struct Die {
    config: SimConfig,
    seed: u64,
    mode: Mode,
    array: CellArray,
    routing: AnalogRouting,
    rng: SimRng,
}

#[derive(Serialize, Deserialize)]
struct DieSnapshot {
    version: u32,
    seed: u64,
    config: SimConfig,
    mode: Mode,
    routing: String,
    cells: Vec<ComplementaryCell>,
    rng: RngState,
}

impl Die {
    /// Builds a fresh die: every device unformed, digital mode active.
    pub fn new(config: SimConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let root = SimRng::new(seed);
        let mut device_rng = root.split(DEVICE_STREAM);
        let array = CellArray::sample(config.geometry, &config.device, config.domains.v_prog, &mut device_rng)?;
        Ok(Self {
            routing: AnalogRouting::floating(&config.geometry),
            config,
            seed,
            mode: Mode::Digital,
            array,
            rng: root.split(OPERATION_STREAM),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Replaces the non-geometry parameters; takes effect on the next
    /// operation.
    pub fn set_config(&mut self, config: SimConfig) -> Result<()> {
        config.validate()?;
        if config.geometry != self.config.geometry {
            return Err(Error::State("array geometry is fixed for the lifetime of a die".into()));
        }
        self.config = config;
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn array(&self) -> &CellArray {
        &self.array
    }

    /// Direct access for fixtures (forcing wear, importing state).
    pub fn array_mut(&mut self) -> &mut CellArray {
        &mut self.array
    }

    pub fn routing(&self) -> &AnalogRouting {
        &self.routing
    }

    pub fn rng_mut(&mut self) -> &mut SimRng {
        &mut self.rng
    }

    /// Switches mode. Entering either mode disconnects every analog line.
    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
        self.routing = AnalogRouting::floating(&self.config.geometry);
    }

    fn require(&self, mode: Mode) -> Result<()> {
        if self.mode == mode {
            Ok(())
        } else {
            Err(Error::Mode(format!(
                "operation needs {} mode, {} mode is active",
                mode.as_str(),
                self.mode.as_str()
            )))
        }
    }

    fn run_phase(&mut self, phase: &Phase) -> Result<ApplyReport> {
        phase.check_domains(&self.config.domains)?;
        let check = array::half_select_check(&phase.lines, phase.target, &self.config.geometry, &self.config.device);
        if let Some(v) = check.violations.first() {
            return Err(Error::Invariant(format!(
                "{} violations, first on {:?} at {} V",
                check.violations.len(),
                v.device,
                v.volts
            )));
        }
        let pulse = phase.pulse();
        let dev = self.array.device_mut(phase.target)?;
        device::apply_pulse(dev, &self.config.device, &pulse, &mut self.rng)
    }

    /// Forms both devices of a cell, BL first.
    pub fn form_cell(&mut self, addr: CellAddress) -> Result<FormReport> {
        self.require(Mode::Digital)?;
        array::decode(addr, &self.config.geometry)?;
        let cell = self.array.cell(addr)?;
        if cell.dev_bl.formed || cell.dev_blb.formed {
            return Err(Error::State(format!("cell {addr} is already formed")));
        }
        let phases = digital::forming_phases(addr, &self.config.geometry, &self.config.domains, &self.config.forming);
        for ph in &phases {
            self.run_phase(ph)?;
        }
        let cell = self.array.cell(addr)?;
        Ok(FormReport { bl_formed: cell.dev_bl.formed, blb_formed: cell.dev_blb.formed })
    }

    /// Forms every cell not formed yet. Returns the number of formed devices
    /// in the array afterwards.
    pub fn form_all(&mut self) -> Result<usize> {
        self.require(Mode::Digital)?;
        let geometry = self.config.geometry;
        for addr in geometry.addresses() {
            let cell = self.array.cell(addr)?;
            if !cell.dev_bl.formed && !cell.dev_blb.formed {
                self.form_cell(addr)?;
            }
        }
        Ok(self.array.formed_devices())
    }

    fn require_formed(&self, addr: CellAddress) -> Result<()> {
        if self.array.cell(addr)?.is_formed() {
            Ok(())
        } else {
            Err(Error::State(format!("cell {addr} is not formed")))
        }
    }

    /// Complementary two-phase write.
    pub fn write_bit(&mut self, addr: CellAddress, bit: bool) -> Result<WriteReport> {
        self.require(Mode::Digital)?;
        array::decode(addr, &self.config.geometry)?;
        self.require_formed(addr)?;
        let [set, reset] =
            digital::write_phases(addr, bit, &self.config.geometry, &self.config.domains, &self.config.program);
        let set = self.run_phase(&set)?;
        let reset = self.run_phase(&reset)?;
        Ok(WriteReport { set, reset })
    }

    /// `n` alternating writes starting with `first_bit`, using event-count
    /// compression: every write before the last two only advances the cycle
    /// counters. A device's final state depends only on its last SET and the
    /// RESET after it, and wear is a function of the cycle count, so the
    /// resulting distribution matches `n` sequential writes.
    pub fn cycle_cell(&mut self, addr: CellAddress, n: u64, first_bit: bool) -> Result<()> {
        self.require(Mode::Digital)?;
        array::decode(addr, &self.config.geometry)?;
        self.require_formed(addr)?;
        if n == 0 {
            return Ok(());
        }
        let skipped = n.saturating_sub(2);
        if skipped > 0 {
            let cell = self.array.cell_mut(addr)?;
            cell.dev_bl.advance_cycles(skipped);
            cell.dev_blb.advance_cycles(skipped);
        }
        for k in skipped..n {
            let bit = first_bit ^ (k % 2 == 1);
            self.write_bit(addr, bit)?;
        }
        Ok(())
    }

    /// Bias report for every phase a form and a write of `bit` at `addr`
    /// would apply. No state changes.
    pub fn half_select_check(&self, addr: CellAddress, bit: bool) -> Result<HalfSelectReport> {
        array::decode(addr, &self.config.geometry)?;
        let g = &self.config.geometry;
        let d = &self.config.domains;
        let mut report = HalfSelectReport::default();
        let phases = digital::forming_phases(addr, g, d, &self.config.forming)
            .into_iter()
            .chain(digital::write_phases(addr, bit, g, d, &self.config.program));
        for ph in phases {
            report.merge(array::half_select_check(&ph.lines, ph.target, g, &self.config.device));
        }
        Ok(report)
    }

    fn sense_cell(&mut self, addr: CellAddress, input: Option<bool>) -> Result<bool> {
        self.require(Mode::Digital)?;
        array::decode(addr, &self.config.geometry)?;
        let cfg = self.config;
        let cell = self.array.cell_mut(addr)?;
        digital::sense(cell, &cfg.device, &cfg.sense, input, &mut self.rng)
    }

    pub fn read_bit(&mut self, addr: CellAddress) -> Result<bool> {
        self.sense_cell(addr, None)
    }

    /// Sense with the logic-in-memory input: returns `XNOR(stored, input)`.
    pub fn xnor(&mut self, addr: CellAddress, input: bool) -> Result<bool> {
        self.sense_cell(addr, Some(input))
    }

    /// Single-device read of the cell's BL device against the fixed
    /// reference, as a 1T1R memory would do.
    pub fn read_bit_reference(&mut self, addr: CellAddress) -> Result<bool> {
        self.require(Mode::Digital)?;
        array::decode(addr, &self.config.geometry)?;
        let cfg = self.config;
        let dev = &mut self.array.cell_mut(addr)?.dev_bl;
        digital::sense_against_reference(dev, &cfg.device, &cfg.sense, &mut self.rng)
    }

    pub fn load_shift_register(&mut self, bits: &[bool]) -> Result<&AnalogRouting> {
        self.require(Mode::Analog)?;
        self.routing = AnalogRouting::decode(bits, &self.config.geometry)?;
        Ok(&self.routing)
    }

    pub fn load_routing(&mut self, routing: AnalogRouting) -> Result<&AnalogRouting> {
        let bits = routing.encode();
        self.load_shift_register(&bits)
    }

    /// Drives `pad` with `wf`.
    ///
    /// Per segment and per bridged device, the segment voltage (signed by the
    /// routing polarity) acts as one [`PulseSpec`]. Switching-range segments
    /// are applied once; the samples inside them see the post-pulse state.
    /// Read-range segments act through the samples: every sample instant is
    /// one device read. Pad current is the sum over bridged devices.
    pub fn apply_waveform(&mut self, pad: Pad, wf: &Waveform) -> Result<Vec<Sample>> {
        self.require(Mode::Analog)?;
        wf.validate()?;
        if !self.routing.uses_pad(pad) {
            return Err(Error::State(format!("no line routed to {pad}")));
        }
        let devices = self.routing.bridged_devices(pad);
        let params = self.config.device;
        let schedule = wf.sample_schedule();
        let mut samples = Vec::with_capacity(schedule.iter().map(Vec::len).sum());
        for (seg, times) in wf.segments.iter().zip(&schedule) {
            let read_range = params.is_read_voltage(seg.level) && params.is_read_voltage(-seg.level);
            if read_range {
                for &t in times {
                    let mut current = 0.0;
                    for (dev, pol) in &devices {
                        let d = self.array.device_mut(*dev)?;
                        current += pol.sign() * device::read(d, &params, pol.sign() * seg.level, &mut self.rng)?.current;
                    }
                    samples.push(Sample { t, current });
                }
                continue;
            }
            for (dev, pol) in &devices {
                let d = self.array.device_mut(*dev)?;
                let v = pol.sign() * seg.level;
                if let Some(pulse) = PulseSpec::from_stimulus(v, seg.duration, d.formed, &params) {
                    device::apply_pulse(d, &params, &pulse, &mut self.rng)?;
                }
            }
            for &t in times {
                let mut current = 0.0;
                for (dev, pol) in &devices {
                    let d = self.array.device(*dev)?;
                    current += pol.sign() * device::sample_current(d, &params, pol.sign() * seg.level, &mut self.rng);
                }
                samples.push(Sample { t, current });
            }
        }
        Ok(samples)
    }

    /// Resistance of the single device bridged to `pad`, from `n_avg` reads
    /// at `v_meas`.
    pub fn measure_resistance(&mut self, pad: Pad, v_meas: f64, n_avg: usize) -> Result<f64> {
        self.require(Mode::Analog)?;
        let devices = self.routing.bridged_devices(pad);
        let [(dev, pol)] = devices[..] else {
            return Err(Error::State(format!(
                "resistance measurement needs exactly one device on {pad}, found {}",
                devices.len()
            )));
        };
        if n_avg == 0 || n_avg > analog::MAX_SAMPLES {
            return Err(Error::Range(format!("n_avg must lie in [1, {}]", analog::MAX_SAMPLES)));
        }
        let params = self.config.device;
        let v = pol.sign() * v_meas;
        if v_meas == 0.0 || !params.is_read_voltage(v) {
            return Err(Error::Range(format!("measurement bias {v_meas} V must be non-zero and sub-threshold")));
        }
        let d = self.array.device_mut(dev)?;
        let mut sum = 0.0;
        for _ in 0..n_avg {
            sum += pol.sign() * device::read(d, &params, v, &mut self.rng)?.current;
        }
        let mean = sum / n_avg as f64;
        Ok(v_meas / mean)
    }

    pub fn device(&self, dev: DeviceAddress) -> Result<&MemristorState> {
        self.array.device(dev)
    }

    pub fn save_snapshot<W: Write>(&self, out: W) -> Result<()> {
        let snap = DieSnapshot {
            version: SNAPSHOT_VERSION,
            seed: self.seed,
            config: self.config,
            mode: self.mode,
            routing: analog::bits_to_hex(&self.routing.encode()),
            cells: self.array.cells().to_vec(),
            rng: self.rng.state(),
        };
        serde_json::to_writer(out, &snap).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn load_snapshot<R: Read>(input: R) -> Result<Self> {
        let snap: DieSnapshot = serde_json::from_reader(input).map_err(|e| Error::Parse(e.to_string()))?;
        if snap.version != SNAPSHOT_VERSION {
            return Err(Error::Parse(format!("unsupported snapshot version {}", snap.version)));
        }
        snap.config.validate()?;
        let array = CellArray::from_cells(snap.config.geometry, snap.cells)?;
        let routing = AnalogRouting::decode(&analog::hex_to_bits(&snap.routing)?, &snap.config.geometry)?;
        Ok(Self {
            config: snap.config,
            seed: snap.seed,
            mode: snap.mode,
            array,
            routing,
            rng: SimRng::from_state(&snap.rng)?,
        })
    }

    pub fn save_snapshot_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut w = std::io::BufWriter::new(f);
        self.save_snapshot(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load_snapshot_file(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::load_snapshot(std::io::BufReader::new(f))
    }
}
