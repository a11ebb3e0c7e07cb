//! Analog-mode periphery.
//!
//! A shift-register chain sets one multiplexer per array line. Each line
//! takes two bits, most significant first:
//!
//! | code | line is connected to |
//! |------|----------------------|
//! | `00` | nothing (floating)   |
//! | `01` | ground               |
//! | `10` | pad A                |
//! | `11` | pad B                |
//!
//! The chain holds the word lines `WL0..WL{rows-1}`, then the bit lines in
//! device-column order (`BL0, BLB0, BL1, BLB1, ...`), then the source lines
//! `SL0..SL{rows-1}`. Bit 0 of the vector is the first bit of `WL0`'s code.
//!
//! A device conducts when its word line is tied to a pad (gate driven).
//! It is bridged to pad `P` when one of its terminals sits on `P` and the
//! other on ground. BL on the pad biases it in the SET direction, SL on the
//! pad in the RESET direction.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::array::{ArrayGeometry, DeviceAddress};
use crate::error::{Error, Result};

/// Upper bound on current samples produced by one waveform.
pub const MAX_SAMPLES: usize = 1_000_000;
/// Upper bound on segments in one waveform.
pub const MAX_SEGMENTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pad {
    A,
    B,
}

impl Pad {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" | "PADA" => Ok(Pad::A),
            "B" | "PADB" => Ok(Pad::B),
            other => Err(Error::Parse(format!("unknown pad {other:?}"))),
        }
    }
}

impl fmt::Display for Pad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pad::A => write!(f, "PADA"),
            Pad::B => write!(f, "PADB"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LineAssignment {
    Floating,
    Ground,
    PadA,
    PadB,
}

impl LineAssignment {
    fn code(self) -> u8 {
        match self {
            LineAssignment::Floating => 0b00,
            LineAssignment::Ground => 0b01,
            LineAssignment::PadA => 0b10,
            LineAssignment::PadB => 0b11,
        }
    }

    fn from_code(code: u8) -> Self {
        match code & 0b11 {
            0b00 => LineAssignment::Floating,
            0b01 => LineAssignment::Ground,
            0b10 => LineAssignment::PadA,
            _ => LineAssignment::PadB,
        }
    }

    pub fn on_pad(self, pad: Pad) -> bool {
        matches!((self, pad), (LineAssignment::PadA, Pad::A) | (LineAssignment::PadB, Pad::B))
    }

    pub fn is_pad(self) -> bool {
        matches!(self, LineAssignment::PadA | LineAssignment::PadB)
    }
}

impl From<Pad> for LineAssignment {
    fn from(p: Pad) -> Self {
        match p {
            Pad::A => LineAssignment::PadA,
            Pad::B => LineAssignment::PadB,
        }
    }
}

/// Which terminal of a routed device faces the drive pad.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// Bit line on the pad, source line grounded.
    SetDirection,
    /// Source line on the pad, bit line grounded.
    ResetDirection,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::SetDirection => 1.0,
            Polarity::ResetDirection => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalogRouting {
    pub wl: Vec<LineAssignment>,
    /// Indexed by device column.
    pub bl: Vec<LineAssignment>,
    pub sl: Vec<LineAssignment>,
}

/// Number of bits in the shift-register chain.
pub fn chain_length(geometry: &ArrayGeometry) -> usize {
    2 * (geometry.rows + geometry.device_cols() + geometry.rows)
}

impl AnalogRouting {
    pub fn floating(geometry: &ArrayGeometry) -> Self {
        Self {
            wl: vec![LineAssignment::Floating; geometry.rows],
            bl: vec![LineAssignment::Floating; geometry.device_cols()],
            sl: vec![LineAssignment::Floating; geometry.rows],
        }
    }

    /// Connects one device for two-terminal access: gate on `gate`, drive
    /// terminal on `drive`, the other terminal grounded.
    pub fn connect_device(&mut self, dev: DeviceAddress, gate: Pad, drive: Pad, polarity: Polarity) -> &mut Self {
        let (row, dcol) = (dev.row(), dev.device_col());
        self.wl[row] = gate.into();
        match polarity {
            Polarity::SetDirection => {
                self.bl[dcol] = drive.into();
                self.sl[row] = LineAssignment::Ground;
            }
            Polarity::ResetDirection => {
                self.sl[row] = drive.into();
                self.bl[dcol] = LineAssignment::Ground;
            }
        }
        self
    }

    pub fn for_device(geometry: &ArrayGeometry, dev: DeviceAddress, gate: Pad, drive: Pad, polarity: Polarity) -> Self {
        let mut r = Self::floating(geometry);
        r.connect_device(dev, gate, drive, polarity);
        r
    }

    fn lines(&self) -> impl Iterator<Item = &LineAssignment> {
        self.wl.iter().chain(&self.bl).chain(&self.sl)
    }

    pub fn non_floating_lines(&self) -> usize {
        self.lines().filter(|l| **l != LineAssignment::Floating).count()
    }

    pub fn uses_pad(&self, pad: Pad) -> bool {
        self.lines().any(|l| l.on_pad(pad))
    }

    /// Pure decode of a shift-register image.
    pub fn decode(bits: &[bool], geometry: &ArrayGeometry) -> Result<Self> {
        let n = chain_length(geometry);
        if bits.len() != n {
            return Err(Error::Range(format!("shift register needs {n} bits, got {}", bits.len())));
        }
        let mut codes = bits
            .chunks_exact(2)
            .map(|pair| LineAssignment::from_code(((pair[0] as u8) << 1) | pair[1] as u8));
        let mut take = |k: usize| codes.by_ref().take(k).collect::<Vec<_>>();
        let wl = take(geometry.rows);
        let bl = take(geometry.device_cols());
        let sl = take(geometry.rows);
        Ok(Self { wl, bl, sl })
    }

    pub fn encode(&self) -> Vec<bool> {
        self.lines()
            .flat_map(|l| {
                let c = l.code();
                [c & 0b10 != 0, c & 0b01 != 0]
            })
            .collect()
    }

    /// Devices bridged to `pad`, with the polarity they see.
    pub fn bridged_devices(&self, pad: Pad) -> Vec<(DeviceAddress, Polarity)> {
        let mut out = Vec::new();
        for (row, gate) in self.wl.iter().enumerate() {
            if !gate.is_pad() {
                continue;
            }
            let sl = self.sl[row];
            for (dcol, bl) in self.bl.iter().enumerate() {
                let polarity = if bl.on_pad(pad) && sl == LineAssignment::Ground {
                    Polarity::SetDirection
                } else if sl.on_pad(pad) && *bl == LineAssignment::Ground {
                    Polarity::ResetDirection
                } else {
                    continue;
                };
                out.push((DeviceAddress::from_device_col(row, dcol), polarity));
            }
        }
        out
    }
}

/// Bits as hex digits, four bits per digit, first bit most significant.
pub fn bits_to_hex(bits: &[bool]) -> String {
    bits.chunks(4)
        .map(|nib| {
            let v = nib.iter().fold(0u32, |acc, b| (acc << 1) | *b as u32) << (4 - nib.len());
            char::from_digit(v, 16).unwrap().to_ascii_uppercase()
        })
        .collect()
}

pub fn hex_to_bits(hex: &str) -> Result<Vec<bool>> {
    let mut bits = Vec::with_capacity(hex.len() * 4);
    for ch in hex.chars() {
        let v = ch
            .to_digit(16)
            .ok_or_else(|| Error::Parse(format!("invalid hex digit {ch:?}")))?;
        bits.extend((0..4).rev().map(|k| (v >> k) & 1 == 1));
    }
    Ok(bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Pad voltage (V).
    pub level: f64,
    /// Seconds.
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub segments: Vec<Segment>,
    /// Time between current samples (s). Samples sit at `k * sample_interval`
    /// for every `k` with `k * sample_interval < total_duration`.
    pub sample_interval: f64,
}

impl Waveform {
    pub fn new(segments: Vec<Segment>, sample_interval: f64) -> Result<Self> {
        let wf = Self { segments, sample_interval };
        wf.validate()?;
        Ok(wf)
    }

    /// `count` identical pulses back to back.
    pub fn train(level: f64, duration: f64, count: usize, sample_interval: f64) -> Result<Self> {
        Self::new(vec![Segment { level, duration }; count], sample_interval)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Range("waveform has no segments".into()));
        }
        if self.segments.len() > MAX_SEGMENTS {
            return Err(Error::Range(format!("waveform exceeds {MAX_SEGMENTS} segments")));
        }
        for s in &self.segments {
            if !(s.level.is_finite() && s.duration.is_finite() && s.duration > 0.0) {
                return Err(Error::Range(format!("bad segment {s:?}")));
            }
        }
        if !(self.sample_interval.is_finite() && self.sample_interval > 0.0) {
            return Err(Error::Range("sample interval must be positive".into()));
        }
        let n = (self.total_duration() / self.sample_interval).ceil();
        if n > MAX_SAMPLES as f64 {
            return Err(Error::Range(format!("waveform would produce more than {MAX_SAMPLES} samples")));
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Sample instants grouped by segment: entry `i` lists the sample times
    /// falling in `[start_i, end_i)`.
    pub fn sample_schedule(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.segments.len());
        let mut start = 0.0;
        let mut k: u64 = 0;
        for s in &self.segments {
            let end = start + s.duration;
            let mut here = Vec::new();
            loop {
                let t = k as f64 * self.sample_interval;
                // Tolerate rounding so that duration / interval samples fit exactly.
                if t >= end - 1e-9 * self.sample_interval {
                    break;
                }
                here.push(t);
                k += 1;
            }
            out.push(here);
            start = end;
        }
        out
    }

    /// Reads `level_V,duration_s` rows (header required).
    pub fn from_csv<R: Read>(input: R, sample_interval: f64) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            #[serde(rename = "level_V")]
            level: f64,
            #[serde(rename = "duration_s")]
            duration: f64,
        }
        let mut rdr = csv::Reader::from_reader(input);
        let mut segments = Vec::new();
        for rec in rdr.deserialize() {
            let r: Row = rec?;
            segments.push(Segment { level: r.level, duration: r.duration });
        }
        Self::new(segments, sample_interval)
    }

    pub fn to_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["level_V", "duration_s"])?;
        for s in &self.segments {
            wtr.write_record([format!("{:e}", s.level), format!("{:e}", s.duration)])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub current: f64,
}

/// Writes `t_s,i_A` rows.
pub fn samples_to_csv<W: Write>(samples: &[Sample], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["t_s", "i_A"])?;
    for s in samples {
        wtr.write_record([format!("{:e}", s.t), format!("{:e}", s.current)])?;
    }
    wtr.flush()?;
    Ok(())
}
