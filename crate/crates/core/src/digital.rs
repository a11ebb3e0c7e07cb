//! Digital-mode periphery: level shifters, programming phase biasing and the
//! precharge sense amplifier with its XNOR logic-in-memory read.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::array::{ArrayGeometry, CellAddress, ComplementaryCell, DeviceAddress, LineVoltages, Side};
use crate::device::{self, DeviceParams, MemristorState, PulseKind, PulseSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoltageDomains {
    /// Nominal supply of the thin-oxide logic (V).
    pub v_dd_logic: f64,
    /// Programming domain (V).
    pub v_prog: f64,
    /// Forming domain (V).
    pub v_form: f64,
}

impl Default for VoltageDomains {
    fn default() -> Self {
        Self { v_dd_logic: 1.2, v_prog: 2.0, v_form: 3.3 }
    }
}

impl VoltageDomains {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.v_dd_logic, self.v_prog, self.v_form].iter().all(|v| v.is_finite())
            && self.v_form >= self.v_prog
            && self.v_prog > self.v_dd_logic
            && self.v_dd_logic > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Param("need v_form >= v_prog > v_dd_logic > 0".into()))
        }
    }

    pub fn level(&self, domain: Domain) -> f64 {
        match domain {
            Domain::Logic => self.v_dd_logic,
            Domain::Program => self.v_prog,
            Domain::Form => self.v_form,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Logic,
    Program,
    Form,
}

/// Level shifter: logic 1 becomes the domain voltage, logic 0 becomes ground.
pub fn shift_level(bit: bool, domain: Domain, domains: &VoltageDomains) -> f64 {
    if bit {
        domains.level(domain)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SenseConfig {
    /// Input-referred comparator offset, as a conductance (S).
    pub offset_sigma: f64,
    /// Below this conductance difference the latch resolves at random (S).
    pub sense_margin_min: f64,
    /// Bit-line read bias (V).
    pub v_read: f64,
}

impl Default for SenseConfig {
    fn default() -> Self {
        Self { offset_sigma: 1e-6, sense_margin_min: 1e-7, v_read: 0.2 }
    }
}

impl SenseConfig {
    pub fn noiseless() -> Self {
        Self { offset_sigma: 0.0, sense_margin_min: 0.0, ..Self::default() }
    }

    pub fn validate(&self, params: &DeviceParams) -> Result<()> {
        if !(self.offset_sigma >= 0.0 && self.sense_margin_min >= 0.0)
            || !self.offset_sigma.is_finite()
            || !self.sense_margin_min.is_finite()
        {
            return Err(Error::Param("sense offset and margin must be finite and >= 0".into()));
        }
        if !(params.is_read_voltage(self.v_read) && self.v_read > 0.0) {
            return Err(Error::Param(format!("read bias {} V must be positive and sub-threshold", self.v_read)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProgrammingProfile {
    pub set_width: f64,
    pub reset_width: f64,
    /// Bias on unselected bit lines during a RESET phase, as a fraction of
    /// the programming voltage. 1 fully inhibits the shared source line.
    pub inhibit_fraction: f64,
}

impl Default for ProgrammingProfile {
    fn default() -> Self {
        Self { set_width: 1e-6, reset_width: 1e-6, inhibit_fraction: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormingProfile {
    pub width: f64,
}

impl Default for FormingProfile {
    fn default() -> Self {
        Self { width: 1e-6 }
    }
}

/// One programming phase: the line biases and the pulse they deliver to the
/// selected device.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub target: DeviceAddress,
    pub kind: PulseKind,
    pub width: f64,
    pub lines: LineVoltages,
}

impl Phase {
    pub fn pulse(&self) -> PulseSpec {
        let v = self.lines.across(self.target.row(), self.target.device_col());
        PulseSpec { amplitude: v, width: self.width, kind: self.kind }
    }

    /// Thick-oxide legality: no line may leave `[0, v_form]`.
    pub fn check_domains(&self, domains: &VoltageDomains) -> Result<()> {
        let all = self.lines.wl.iter().chain(&self.lines.bl).chain(&self.lines.sl);
        for v in all {
            if !(0.0..=domains.v_form).contains(v) {
                return Err(Error::Invariant(format!("line bias {v} V outside [0, {}] V", domains.v_form)));
            }
        }
        Ok(())
    }
}

/// Forming: gate and bit line in the forming domain, source line grounded.
pub fn form_phase(
    target: DeviceAddress,
    geometry: &ArrayGeometry,
    domains: &VoltageDomains,
    forming: &FormingProfile,
) -> Phase {
    let mut lines = LineVoltages::grounded(geometry);
    lines.wl[target.row()] = shift_level(true, Domain::Form, domains);
    lines.bl[target.device_col()] = shift_level(true, Domain::Form, domains);
    Phase { target, kind: PulseKind::Form, width: forming.width, lines }
}

/// SET: positive bias from bit line to grounded source line.
pub fn set_phase(
    target: DeviceAddress,
    geometry: &ArrayGeometry,
    domains: &VoltageDomains,
    profile: &ProgrammingProfile,
) -> Phase {
    let mut lines = LineVoltages::grounded(geometry);
    lines.wl[target.row()] = shift_level(true, Domain::Program, domains);
    lines.bl[target.device_col()] = shift_level(true, Domain::Program, domains);
    Phase { target, kind: PulseKind::Set, width: profile.set_width, lines }
}

/// RESET: the shared source line of the row is raised, the target bit line
/// grounded, and every other bit line held at the inhibit level.
pub fn reset_phase(
    target: DeviceAddress,
    geometry: &ArrayGeometry,
    domains: &VoltageDomains,
    profile: &ProgrammingProfile,
) -> Phase {
    let mut lines = LineVoltages::grounded(geometry);
    let v_prog = shift_level(true, Domain::Program, domains);
    lines.wl[target.row()] = v_prog;
    lines.sl[target.row()] = v_prog;
    lines.bl.fill(v_prog * profile.inhibit_fraction);
    lines.bl[target.device_col()] = 0.0;
    Phase { target, kind: PulseKind::Reset, width: profile.reset_width, lines }
}

/// Two-phase complementary write: SET the device that must hold LRS, then
/// RESET its partner.
pub fn write_phases(
    addr: CellAddress,
    bit: bool,
    geometry: &ArrayGeometry,
    domains: &VoltageDomains,
    profile: &ProgrammingProfile,
) -> [Phase; 2] {
    let lrs = Side::lrs_for(bit);
    [
        set_phase(DeviceAddress { cell: addr, side: lrs }, geometry, domains, profile),
        reset_phase(DeviceAddress { cell: addr, side: lrs.other() }, geometry, domains, profile),
    ]
}

/// Forming is sequential: BL device first, then BLB.
pub fn forming_phases(
    addr: CellAddress,
    geometry: &ArrayGeometry,
    domains: &VoltageDomains,
    forming: &FormingProfile,
) -> [Phase; 2] {
    [
        form_phase(DeviceAddress { cell: addr, side: Side::Bl }, geometry, domains, forming),
        form_phase(DeviceAddress { cell: addr, side: Side::Blb }, geometry, domains, forming),
    ]
}

/// Latch decision for branch currents `a` (positive input) and `b`.
fn resolve<R: Rng + ?Sized>(a: f64, b: f64, cfg: &SenseConfig, rng: &mut R) -> bool {
    let offset = if cfg.offset_sigma > 0.0 {
        cfg.offset_sigma * cfg.v_read * rng.sample::<f64, _>(StandardNormal)
    } else {
        0.0
    };
    let diff = a + offset - b;
    if cfg.sense_margin_min > 0.0 && diff.abs() < cfg.sense_margin_min * cfg.v_read {
        return rng.random_bool(0.5);
    }
    diff > 0.0
}

/// One precharge sense event on a complementary cell.
///
/// Without a logic input this reads the stored bit. With input `B`, the
/// branches are swapped when `B = 0`, so the latch outputs `XNOR(stored, B)`.
/// Both devices see one read (noise, RTN step, disturb opportunity).
pub fn sense<R: Rng + ?Sized>(
    cell: &mut ComplementaryCell,
    params: &DeviceParams,
    cfg: &SenseConfig,
    logic_input: Option<bool>,
    rng: &mut R,
) -> Result<bool> {
    if !cell.is_formed() {
        return Err(Error::State("cell is not formed".into()));
    }
    let i_bl = device::read(&mut cell.dev_bl, params, cfg.v_read, rng)?.current;
    let i_blb = device::read(&mut cell.dev_blb, params, cfg.v_read, rng)?.current;
    let (a, b) = match logic_input {
        Some(false) => (i_blb, i_bl),
        _ => (i_bl, i_blb),
    };
    Ok(resolve(a, b, cfg, rng))
}

/// Conductance of the fixed reference used by single-device sensing: the
/// geometric mean of the nominal states.
pub fn reference_conductance(params: &DeviceParams) -> f64 {
    (params.g_on_median * params.g_off_median).sqrt()
}

/// Single device (1T1R) read against a fixed reference branch: 1 when the
/// device conducts more than the reference.
pub fn sense_against_reference<R: Rng + ?Sized>(
    dev: &mut MemristorState,
    params: &DeviceParams,
    cfg: &SenseConfig,
    rng: &mut R,
) -> Result<bool> {
    if !dev.formed {
        return Err(Error::State("device is not formed".into()));
    }
    let i_dev = device::read(dev, params, cfg.v_read, rng)?.current;
    let i_ref = reference_conductance(params) * cfg.v_read;
    Ok(resolve(i_dev, i_ref, cfg, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::half_select_check;
    use crate::device::MemristorState;
    use crate::rng::SimRng;

    fn cell_storing(bit: bool) -> ComplementaryCell {
        let (a, b) = if bit { (1.0, 0.0) } else { (0.0, 1.0) };
        ComplementaryCell { dev_bl: MemristorState::formed_ideal(a), dev_blb: MemristorState::formed_ideal(b) }
    }

    #[test]
    fn level_shifter() {
        let d = VoltageDomains { v_prog: 2.4, ..Default::default() };
        assert_eq!(shift_level(true, Domain::Program, &d), 2.4);
        assert_eq!(shift_level(false, Domain::Program, &d), 0.0);
        assert_eq!(shift_level(false, Domain::Form, &d), 0.0);
        assert_eq!(shift_level(true, Domain::Form, &d), 3.3);
        assert_eq!(shift_level(true, Domain::Logic, &d), 1.2);
    }

    #[test]
    fn domain_ordering_enforced() {
        assert!(VoltageDomains::default().validate().is_ok());
        assert!(VoltageDomains { v_prog: 1.0, ..Default::default() }.validate().is_err());
        assert!(VoltageDomains { v_form: 1.9, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn xnor_truth_table_noise_off() {
        let p = DeviceParams::noiseless();
        let cfg = SenseConfig::noiseless();
        let mut rng = SimRng::new(0);
        for stored in [false, true] {
            let mut c = cell_storing(stored);
            assert_eq!(sense(&mut c, &p, &cfg, None, &mut rng).unwrap(), stored);
            for input in [false, true] {
                let out = sense(&mut c, &p, &cfg, Some(input), &mut rng).unwrap();
                assert_eq!(out, stored == input, "stored={stored} input={input}");
            }
        }
    }

    #[test]
    fn relabeling_symmetry() {
        let p = DeviceParams::noiseless();
        let cfg = SenseConfig::noiseless();
        let mut rng = SimRng::new(0);
        for stored in [false, true] {
            let mut c = cell_storing(stored);
            let mut swapped = ComplementaryCell { dev_bl: c.dev_blb.clone(), dev_blb: c.dev_bl.clone() };
            // Plain read: the swapped cell decodes with the flipped convention.
            let a = sense(&mut c, &p, &cfg, None, &mut rng).unwrap();
            assert_eq!(a, !sense(&mut swapped, &p, &cfg, None, &mut rng).unwrap());
            // XNOR: flipping both the stored convention and the input cancels.
            for input in [false, true] {
                let a = sense(&mut c, &p, &cfg, Some(input), &mut rng).unwrap();
                assert_eq!(a, sense(&mut swapped, &p, &cfg, Some(!input), &mut rng).unwrap());
            }
        }
    }

    #[test]
    fn unformed_cell_refused() {
        let p = DeviceParams::default();
        let mut c = cell_storing(true);
        c.dev_blb.formed = false;
        let err = sense(&mut c, &p, &SenseConfig::default(), None, &mut SimRng::new(1));
        assert!(matches!(err, Err(Error::State(_))));
    }

    #[test]
    fn write_phases_polarity_and_isolation() {
        let g = ArrayGeometry::default();
        let d = VoltageDomains::default();
        let p = DeviceParams::default();
        let [set, reset] = write_phases(CellAddress::new(3, 7), true, &g, &d, &ProgrammingProfile::default());
        assert_eq!(set.pulse().amplitude, 2.0);
        assert_eq!(set.target.side, Side::Bl);
        assert_eq!(reset.pulse().amplitude, -2.0);
        assert_eq!(reset.target.side, Side::Blb);
        for ph in [&set, &reset] {
            assert_eq!(ph.lines.asserted_word_lines(), 1);
            assert!(ph.check_domains(&d).is_ok());
            assert!(half_select_check(&ph.lines, ph.target, &g, &p).is_clean());
        }
    }

    #[test]
    fn missing_inhibit_is_caught() {
        let g = ArrayGeometry::default();
        let profile = ProgrammingProfile { inhibit_fraction: 0.0, ..Default::default() };
        let ph = reset_phase(DeviceAddress::new(0, 0, Side::Bl), &g, &VoltageDomains::default(), &profile);
        let report = half_select_check(&ph.lines, ph.target, &g, &DeviceParams::default());
        // Every other device of row 0 sees the full source-line bias.
        assert_eq!(report.violations.len(), 127);
        assert_eq!(report.max_unselected, 2.0);
    }
}
