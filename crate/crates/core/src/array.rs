//! The memristor array: 2T2R complementary cells, decoding and line biasing.
//!
//! Device columns interleave the two bit lines of each cell column:
//! device column `2c` hangs on `BLc`, device column `2c + 1` on `BLBc`.
//! Source lines are shared per row.

use std::fmt;
use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::device::{self, DeviceParams, MemristorState};
use crate::error::{Error, Result};

pub const DEVICES_PER_CELL: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub rows: usize,
    pub cell_cols: usize,
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        Self { rows: 64, cell_cols: 64 }
    }
}

impl ArrayGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cell_cols == 0 {
            return Err(Error::Param("array needs at least one row and one column".into()));
        }
        if self.rows > 4096 || self.cell_cols > 4096 {
            return Err(Error::Param("array dimensions above 4096 are not supported".into()));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.rows * self.cell_cols
    }

    pub fn devices(&self) -> usize {
        self.cells() * DEVICES_PER_CELL
    }

    pub fn device_cols(&self) -> usize {
        self.cell_cols * DEVICES_PER_CELL
    }

    pub fn contains(&self, addr: CellAddress) -> bool {
        addr.row < self.rows && addr.col < self.cell_cols
    }

    pub fn check(&self, addr: CellAddress) -> Result<()> {
        if self.contains(addr) {
            Ok(())
        } else {
            Err(Error::Address(format!(
                "{addr} outside {}x{} array",
                self.rows, self.cell_cols
            )))
        }
    }

    /// Row-major iteration over every cell address.
    pub fn addresses(&self) -> impl Iterator<Item = CellAddress> + '_ {
        (0..self.rows).flat_map(move |row| (0..self.cell_cols).map(move |col| CellAddress { row, col }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellAddress {
    pub row: usize,
    pub col: usize,
}

impl CellAddress {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for CellAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Which device of a complementary cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// Device on the true bit line; LRS when the cell stores 1.
    Bl,
    /// Device on the complement bit line; LRS when the cell stores 0.
    Blb,
}

impl Side {
    pub fn other(self) -> Self {
        match self {
            Side::Bl => Side::Blb,
            Side::Blb => Side::Bl,
        }
    }

    /// Side that must be in LRS to store `bit`.
    pub fn lrs_for(bit: bool) -> Self {
        if bit {
            Side::Bl
        } else {
            Side::Blb
        }
    }

    fn offset(self) -> usize {
        match self {
            Side::Bl => 0,
            Side::Blb => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Bl => "bl",
            Side::Blb => "blb",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bl" => Ok(Side::Bl),
            "blb" => Ok(Side::Blb),
            other => Err(Error::Parse(format!("unknown cell side {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeviceAddress {
    pub cell: CellAddress,
    pub side: Side,
}

impl DeviceAddress {
    pub fn new(row: usize, col: usize, side: Side) -> Self {
        Self { cell: CellAddress { row, col }, side }
    }

    pub fn row(&self) -> usize {
        self.cell.row
    }

    /// Index of the device column (bit line) this device hangs on.
    pub fn device_col(&self) -> usize {
        self.cell.col * DEVICES_PER_CELL + self.side.offset()
    }

    pub fn from_device_col(row: usize, device_col: usize) -> Self {
        let side = if device_col.is_multiple_of(2) { Side::Bl } else { Side::Blb };
        Self::new(row, device_col / DEVICES_PER_CELL, side)
    }
}

/// Lines asserted by the decoders for one cell access.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LineSelection {
    pub word_line: usize,
    /// Index of the BL/BLB pair.
    pub bit_line_pair: usize,
    pub source_line: usize,
}

impl fmt::Display for LineSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "WL{} BL{}/BLB{} SL{}",
            self.word_line, self.bit_line_pair, self.bit_line_pair, self.source_line
        )
    }
}

/// Row and column decoding.
pub fn decode(addr: CellAddress, geometry: &ArrayGeometry) -> Result<LineSelection> {
    geometry.check(addr)?;
    Ok(LineSelection { word_line: addr.row, bit_line_pair: addr.col, source_line: addr.row })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplementaryCell {
    pub dev_bl: MemristorState,
    pub dev_blb: MemristorState,
}

impl ComplementaryCell {
    pub fn device(&self, side: Side) -> &MemristorState {
        match side {
            Side::Bl => &self.dev_bl,
            Side::Blb => &self.dev_blb,
        }
    }

    pub fn device_mut(&mut self, side: Side) -> &mut MemristorState {
        match side {
            Side::Bl => &mut self.dev_bl,
            Side::Blb => &mut self.dev_blb,
        }
    }

    pub fn is_formed(&self) -> bool {
        self.dev_bl.formed && self.dev_blb.formed
    }

    /// Bit implied by the filament strengths, `None` until both devices are
    /// formed.
    pub fn nominal_bit(&self) -> Option<bool> {
        self.is_formed().then_some(self.dev_bl.w > self.dev_blb.w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellArray {
    geometry: ArrayGeometry,
    cells: Vec<ComplementaryCell>,
}

impl CellArray {
    /// Samples every device fresh. Devices are drawn row-major, BL before BLB.
    pub fn sample<R: Rng + ?Sized>(
        geometry: ArrayGeometry,
        params: &DeviceParams,
        v_prog: f64,
        rng: &mut R,
    ) -> Result<Self> {
        geometry.validate()?;
        let mut cells = Vec::with_capacity(geometry.cells());
        for _ in 0..geometry.cells() {
            let dev_bl = device::sample_fresh_device_at(params, v_prog, rng)?;
            let dev_blb = device::sample_fresh_device_at(params, v_prog, rng)?;
            cells.push(ComplementaryCell { dev_bl, dev_blb });
        }
        Ok(Self { geometry, cells })
    }

    pub fn from_cells(geometry: ArrayGeometry, cells: Vec<ComplementaryCell>) -> Result<Self> {
        geometry.validate()?;
        if cells.len() != geometry.cells() {
            return Err(Error::Param(format!(
                "expected {} cells, got {}",
                geometry.cells(),
                cells.len()
            )));
        }
        Ok(Self { geometry, cells })
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn cells(&self) -> &[ComplementaryCell] {
        &self.cells
    }

    fn index(&self, addr: CellAddress) -> Result<usize> {
        self.geometry.check(addr)?;
        Ok(addr.row * self.geometry.cell_cols + addr.col)
    }

    pub fn cell(&self, addr: CellAddress) -> Result<&ComplementaryCell> {
        let i = self.index(addr)?;
        Ok(&self.cells[i])
    }

    pub fn cell_mut(&mut self, addr: CellAddress) -> Result<&mut ComplementaryCell> {
        let i = self.index(addr)?;
        Ok(&mut self.cells[i])
    }

    pub fn device(&self, dev: DeviceAddress) -> Result<&MemristorState> {
        Ok(self.cell(dev.cell)?.device(dev.side))
    }

    pub fn device_mut(&mut self, dev: DeviceAddress) -> Result<&mut MemristorState> {
        Ok(self.cell_mut(dev.cell)?.device_mut(dev.side))
    }

    pub fn formed_devices(&self) -> usize {
        self.cells
            .iter()
            .map(|c| c.dev_bl.formed as usize + c.dev_blb.formed as usize)
            .sum()
    }

    /// Writes `row,col,side,w,formed,cycles,degradation`, one line per device.
    pub fn export_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["row", "col", "side", "w", "formed", "cycles", "degradation"])?;
        for addr in self.geometry.addresses() {
            let cell = &self.cells[addr.row * self.geometry.cell_cols + addr.col];
            for side in [Side::Bl, Side::Blb] {
                let d = cell.device(side);
                wtr.write_record([
                    addr.row.to_string(),
                    addr.col.to_string(),
                    side.as_str().to_string(),
                    format!("{:e}", d.w),
                    (d.formed as u8).to_string(),
                    d.cycle_count.to_string(),
                    format!("{:e}", d.degradation),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// Overwrites the state columns of every listed device. Per-device
    /// factors not carried by the CSV (variability, endurance budget, RTN)
    /// are kept. Returns the number of devices updated.
    pub fn import_csv<R: Read>(&mut self, input: R) -> Result<usize> {
        #[derive(Deserialize)]
        struct Row {
            row: usize,
            col: usize,
            side: String,
            w: f64,
            formed: u8,
            cycles: u64,
            degradation: f64,
        }
        let mut rdr = csv::Reader::from_reader(input);
        let mut updates = Vec::new();
        for rec in rdr.deserialize() {
            let r: Row = rec?;
            let dev = DeviceAddress::new(r.row, r.col, Side::parse(&r.side)?);
            self.geometry.check(dev.cell)?;
            if !(0.0..=1.0).contains(&r.w) || !(0.0..=1.0).contains(&r.degradation) || r.formed > 1 {
                return Err(Error::Range(format!("device row out of range at {}", dev.cell)));
            }
            updates.push((dev, r));
        }
        // Validate everything before touching the array.
        let n = updates.len();
        for (dev, r) in updates {
            let d = self.device_mut(dev)?;
            d.w = r.w;
            d.formed = r.formed == 1;
            d.cycle_count = r.cycles;
            d.degradation = r.degradation;
        }
        Ok(n)
    }
}

/// Bias of every array line during one phase (V).
#[derive(Debug, Clone, PartialEq)]
pub struct LineVoltages {
    pub wl: Vec<f64>,
    /// Indexed by device column.
    pub bl: Vec<f64>,
    pub sl: Vec<f64>,
}

impl LineVoltages {
    pub fn grounded(geometry: &ArrayGeometry) -> Self {
        Self {
            wl: vec![0.0; geometry.rows],
            bl: vec![0.0; geometry.device_cols()],
            sl: vec![0.0; geometry.rows],
        }
    }

    /// Voltage across a device, BL minus SL when its access transistor
    /// conducts, else zero.
    pub fn across(&self, row: usize, device_col: usize) -> f64 {
        if self.wl[row] > 0.0 {
            self.bl[device_col] - self.sl[row]
        } else {
            0.0
        }
    }

    pub fn asserted_word_lines(&self) -> usize {
        self.wl.iter().filter(|v| **v > 0.0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub device: DeviceAddress,
    pub volts: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HalfSelectReport {
    /// Largest bias magnitude on any unselected device.
    pub max_unselected: f64,
    pub violations: Vec<Violation>,
}

impl HalfSelectReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: HalfSelectReport) {
        self.max_unselected = self.max_unselected.max(other.max_unselected);
        self.violations.extend(other.violations);
    }
}

/// Checks that only `target` sees a bias able to switch a device.
pub fn half_select_check(
    lines: &LineVoltages,
    target: DeviceAddress,
    geometry: &ArrayGeometry,
    params: &DeviceParams,
) -> HalfSelectReport {
    let limit = params.sub_threshold_limit();
    let mut report = HalfSelectReport::default();
    for row in 0..geometry.rows {
        for dcol in 0..geometry.device_cols() {
            let dev = DeviceAddress::from_device_col(row, dcol);
            if dev == target {
                continue;
            }
            let v = lines.across(row, dcol).abs();
            report.max_unselected = report.max_unselected.max(v);
            if v >= limit {
                report.violations.push(Violation { device: dev, volts: v });
            }
        }
    }
    report
}
