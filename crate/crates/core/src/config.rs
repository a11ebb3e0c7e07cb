//! Simulator configuration and its `dotted.key = number` file format.
//!
//! Files are parsed as TOML, so `device.g_on_median = 1e-4` and a
//! `[device]` table with `g_on_median = 1e-4` are equivalent. Every leaf
//! must be a number and every key must be known. [`SimConfig::dump`] writes
//! the effective configuration back in the flat dotted form.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::array::ArrayGeometry;
use crate::device::DeviceParams;
use crate::digital::{FormingProfile, ProgrammingProfile, SenseConfig, VoltageDomains};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimConfig {
    pub device: DeviceParams,
    pub geometry: ArrayGeometry,
    pub domains: VoltageDomains,
    pub sense: SenseConfig,
    pub program: ProgrammingProfile,
    pub forming: FormingProfile,
}

macro_rules! float_keys {
    ($($key:literal => $($field:ident).+;)*) => {
        const FLOAT_KEYS: &[&str] = &[$($key),*];

        fn get_float(cfg: &SimConfig, key: &str) -> Option<f64> {
            match key {
                $($key => Some(cfg.$($field).+),)*
                _ => None,
            }
        }

        fn set_float(cfg: &mut SimConfig, key: &str, value: f64) -> bool {
            match key {
                $($key => { cfg.$($field).+ = value; true })*
                _ => false,
            }
        }
    };
}

float_keys! {
    "device.g_on_median" => device.g_on_median;
    "device.g_off_median" => device.g_off_median;
    "device.sigma_d2d" => device.sigma_d2d;
    "device.sigma_c2c" => device.sigma_c2c;
    "device.rtn_amplitude" => device.rtn_amplitude;
    "device.rtn_toggle_prob" => device.rtn_toggle_prob;
    "device.read_noise_sigma" => device.read_noise_sigma;
    "device.v_form_min" => device.v_form_min;
    "device.v_set_min" => device.v_set_min;
    "device.v_reset_min" => device.v_reset_min;
    "device.t_min" => device.t_min;
    "device.reset_step_gain" => device.reset_step_gain;
    "device.reset_overdrive_scale" => device.reset_overdrive_scale;
    "device.stuck_w" => device.stuck_w;
    "device.disturb_rate" => device.disturb_rate;
    "device.disturb_step" => device.disturb_step;
    "device.endurance.log10_endurance_at_vref" => device.endurance.log10_endurance_at_vref;
    "device.endurance.endurance_voltage_slope" => device.endurance.endurance_voltage_slope;
    "device.endurance.vref" => device.endurance.vref;
    "device.endurance.spread_decades" => device.endurance.spread_decades;
    "domains.v_dd_logic" => domains.v_dd_logic;
    "domains.v_prog" => domains.v_prog;
    "domains.v_form" => domains.v_form;
    "sense.offset_sigma" => sense.offset_sigma;
    "sense.sense_margin_min" => sense.sense_margin_min;
    "sense.v_read" => sense.v_read;
    "program.set_width" => program.set_width;
    "program.reset_width" => program.reset_width;
    "program.inhibit_fraction" => program.inhibit_fraction;
    "forming.width" => forming.width;
}

const INT_KEYS: &[&str] = &["geometry.rows", "geometry.cell_cols"];

impl SimConfig {
    /// Defaults with device and sense-amplifier noise disabled.
    pub fn noiseless() -> Self {
        Self { device: DeviceParams::noiseless(), sense: SenseConfig::noiseless(), ..Self::default() }
    }

    /// Endurance centered at 1e5 cycles with a tight spread, for fast
    /// endurance runs.
    pub fn desk_endurance() -> Self {
        let mut cfg = Self::default();
        cfg.device.endurance.log10_endurance_at_vref = 5.0;
        cfg.device.endurance.spread_decades = 0.05;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.device.validate()?;
        self.geometry.validate()?;
        self.domains.validate()?;
        self.sense.validate(&self.device)?;
        for (name, w) in [
            ("program.set_width", self.program.set_width),
            ("program.reset_width", self.program.reset_width),
            ("forming.width", self.forming.width),
        ] {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Param(format!("{name} must be positive")));
            }
        }
        if !(0.0..=1.0).contains(&self.program.inhibit_fraction) {
            return Err(Error::Param("program.inhibit_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn keys() -> impl Iterator<Item = &'static str> {
        FLOAT_KEYS.iter().chain(INT_KEYS).copied()
    }

    pub fn is_geometry_key(key: &str) -> bool {
        INT_KEYS.contains(&key)
    }

    pub fn get(&self, key: &str) -> Result<f64> {
        match key {
            "geometry.rows" => Ok(self.geometry.rows as f64),
            "geometry.cell_cols" => Ok(self.geometry.cell_cols as f64),
            _ => get_float(self, key).ok_or_else(|| Error::Parse(format!("unknown parameter {key:?}"))),
        }
    }

    /// Sets one parameter. Does not validate the result; call
    /// [`SimConfig::validate`] once all edits are in.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Range(format!("{key} must be finite")));
        }
        if Self::is_geometry_key(key) {
            if value.fract() != 0.0 || !(1.0..=4096.0).contains(&value) {
                return Err(Error::Range(format!("{key} must be an integer in [1, 4096]")));
            }
            let n = value as usize;
            match key {
                "geometry.rows" => self.geometry.rows = n,
                _ => self.geometry.cell_cols = n,
            }
            return Ok(());
        }
        if set_float(self, key, value) {
            Ok(())
        } else {
            Err(Error::Parse(format!("unknown parameter {key:?}")))
        }
    }

    /// Applies every `key = value` of a config text on top of `self`.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        let mut flat = Vec::new();
        flatten("", &toml::Value::Table(table), &mut flat)?;
        for (key, value) in flat {
            self.set(&key, value)?;
        }
        self.validate()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        text.parse()
    }

    /// `key = value` lines for every parameter, in a stable order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for key in Self::keys() {
            let _ = writeln!(out, "{key} = {}", format_value(key, self.get(key).unwrap()));
        }
        out
    }
}

impl std::str::FromStr for SimConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_str(text)?;
        Ok(cfg)
    }
}

/// Number formatting shared by the dump and the protocol: integers for
/// geometry, shortest round-trip exponent form otherwise.
pub fn format_value(key: &str, v: f64) -> String {
    if SimConfig::is_geometry_key(key) {
        format!("{}", v as u64)
    } else {
        format!("{v:e}")
    }
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut Vec<(String, f64)>) -> Result<()> {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out)?;
            }
            Ok(())
        }
        toml::Value::Integer(i) => {
            out.push((prefix.to_string(), *i as f64));
            Ok(())
        }
        toml::Value::Float(f) => {
            out.push((prefix.to_string(), *f));
            Ok(())
        }
        other => Err(Error::Parse(format!("{prefix}: expected a number, got {}", other.type_str()))),
    }
}
