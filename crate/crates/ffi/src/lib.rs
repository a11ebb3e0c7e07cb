//! C ABI over the `memdie` simulator.
//!
//! Every function returns a [`MemdieStatus`]; on failure the message is
//! available from [`memdie_last_error`] until the next call on the same
//! handle. Handles are not thread safe: use one handle per thread or
//! serialize calls. The generated header is `include/memdie.h`.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use memdie::analog::{Pad, Segment, Waveform};
use memdie::array::CellAddress;
use memdie::protocol::Session;
use memdie::{Error, Mode, SimConfig};

pub const MEMDIE_MODE_DIGITAL: u32 = 0;
pub const MEMDIE_MODE_ANALOG: u32 = 1;
pub const MEMDIE_PAD_A: u32 = 0;
pub const MEMDIE_PAD_B: u32 = 1;

/// Result code of every call. Values match the protocol `ERR` codes where
/// one exists.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemdieStatus {
    Ok = 0,
    Parse = 1,
    Mode = 2,
    Addr = 3,
    State = 4,
    Range = 5,
    Invariant = 6,
    Io = 7,
    NullPointer = 8,
    InvalidUtf8 = 9,
    Panic = 10,
}

impl From<&Error> for MemdieStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse(_) => MemdieStatus::Parse,
            Error::Mode(_) => MemdieStatus::Mode,
            Error::Address(_) => MemdieStatus::Addr,
            Error::State(_) => MemdieStatus::State,
            Error::Range(_) | Error::Param(_) => MemdieStatus::Range,
            Error::Invariant(_) => MemdieStatus::Invariant,
            Error::Io(_) => MemdieStatus::Io,
        }
    }
}

/// Opaque simulator handle.
pub struct MemdieSim {
    session: Session,
    last_error: CString,
}

enum Failure {
    Sim(Error),
    Null(&'static str),
    Utf8,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Sim(e)
    }
}

type CallResult = Result<(), Failure>;

fn message(text: String) -> CString {
    CString::new(text.replace('\0', " ")).unwrap_or_default()
}

/// Runs `f` on the handle, recording the error message and catching panics.
unsafe fn with_sim(sim: *mut MemdieSim, f: impl FnOnce(&mut Session) -> CallResult) -> MemdieStatus {
    let Some(sim) = sim.as_mut() else {
        return MemdieStatus::NullPointer;
    };
    let outcome = catch_unwind(AssertUnwindSafe(|| f(&mut sim.session)));
    let (status, text) = match outcome {
        Ok(Ok(())) => (MemdieStatus::Ok, String::new()),
        Ok(Err(Failure::Sim(e))) => (MemdieStatus::from(&e), e.to_string()),
        Ok(Err(Failure::Null(what))) => (MemdieStatus::NullPointer, format!("{what} is null")),
        Ok(Err(Failure::Utf8)) => (MemdieStatus::InvalidUtf8, "string is not valid UTF-8".into()),
        Err(_) => (MemdieStatus::Panic, "internal panic".into()),
    };
    sim.last_error = message(text);
    status
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Utf8)
}

fn pad(code: u32) -> Result<Pad, Failure> {
    match code {
        MEMDIE_PAD_A => Ok(Pad::A),
        MEMDIE_PAD_B => Ok(Pad::B),
        _ => Err(Error::Range(format!("unknown pad code {code}")).into()),
    }
}

/// Creates a simulator. `config_toml` may be null for defaults; otherwise
/// it holds `dotted.key = value` lines. On success `*out` owns the handle.
///
/// # Safety
/// `config_toml` must be null or a NUL-terminated string; `out` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn memdie_sim_new(seed: u64, config_toml: *const c_char, out: *mut *mut MemdieSim) -> MemdieStatus {
    if out.is_null() {
        return MemdieStatus::NullPointer;
    }
    *out = ptr::null_mut();
    let built = catch_unwind(|| -> Result<Session, Failure> {
        let config = if config_toml.is_null() {
            SimConfig::default()
        } else {
            str_arg(config_toml, "config_toml")?.parse()?
        };
        Ok(Session::new(config, seed)?)
    });
    match built {
        Ok(Ok(session)) => {
            *out = Box::into_raw(Box::new(MemdieSim { session, last_error: CString::default() }));
            MemdieStatus::Ok
        }
        Ok(Err(Failure::Sim(e))) => MemdieStatus::from(&e),
        Ok(Err(Failure::Null(_))) => MemdieStatus::NullPointer,
        Ok(Err(Failure::Utf8)) => MemdieStatus::InvalidUtf8,
        Err(_) => MemdieStatus::Panic,
    }
}

/// # Safety
/// `sim` must be null or a handle from [`memdie_sim_new`] not freed yet.
#[no_mangle]
pub unsafe extern "C" fn memdie_sim_free(sim: *mut MemdieSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Message of the last failed call, empty after a successful one. Valid
/// until the next call on `sim`.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn memdie_last_error(sim: *const MemdieSim) -> *const c_char {
    match sim.as_ref() {
        Some(s) => s.last_error.as_ptr(),
        None => c"null simulator handle".as_ptr(),
    }
}

/// `mode` is `MEMDIE_MODE_DIGITAL` or `MEMDIE_MODE_ANALOG`.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn memdie_set_mode(sim: *mut MemdieSim, mode: u32) -> MemdieStatus {
    with_sim(sim, |s| {
        let m = match mode {
            MEMDIE_MODE_DIGITAL => Mode::Digital,
            MEMDIE_MODE_ANALOG => Mode::Analog,
            _ => return Err(Error::Range(format!("unknown mode code {mode}")).into()),
        };
        s.die_mut().set_mode(m);
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn memdie_form_cell(sim: *mut MemdieSim, row: usize, col: usize) -> MemdieStatus {
    with_sim(sim, |s| {
        s.die_mut().form_cell(CellAddress::new(row, col))?;
        Ok(())
    })
}

/// Forms every unformed cell; `*formed` receives the number of formed
/// devices afterwards.
///
/// # Safety
/// `sim` must be a live handle, `formed` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn memdie_form_all(sim: *mut MemdieSim, formed: *mut usize) -> MemdieStatus {
    with_sim(sim, |s| {
        let out = out_ref(formed, "formed")?;
        *out = s.die_mut().form_all()?;
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn memdie_write_bit(sim: *mut MemdieSim, row: usize, col: usize, bit: bool) -> MemdieStatus {
    with_sim(sim, |s| {
        s.die_mut().write_bit(CellAddress::new(row, col), bit)?;
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle, `bit` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn memdie_read_bit(sim: *mut MemdieSim, row: usize, col: usize, bit: *mut bool) -> MemdieStatus {
    with_sim(sim, |s| {
        let out = out_ref(bit, "bit")?;
        *out = s.die_mut().read_bit(CellAddress::new(row, col))?;
        Ok(())
    })
}

/// Sense with logic input `input`; `*result` is XNOR(stored, input).
///
/// # Safety
/// `sim` must be a live handle, `result` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn memdie_xnor(
    sim: *mut MemdieSim,
    row: usize,
    col: usize,
    input: bool,
    result: *mut bool,
) -> MemdieStatus {
    with_sim(sim, |s| {
        let out = out_ref(result, "result")?;
        *out = s.die_mut().xnor(CellAddress::new(row, col), input)?;
        Ok(())
    })
}

/// Loads the routing shift register from hex digits, first bit most
/// significant.
///
/// # Safety
/// `sim` must be a live handle, `hex` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn memdie_load_shift_register(sim: *mut MemdieSim, hex: *const c_char) -> MemdieStatus {
    with_sim(sim, |s| {
        let text = str_arg(hex, "hex")?;
        let bits = memdie::analog::hex_to_bits(text)?;
        s.die_mut().load_shift_register(&bits)?;
        Ok(())
    })
}

/// Drives `pad` with `n_segments` segments (`levels[i]` volts for
/// `durations[i]` seconds), sampling the pad current every
/// `sample_interval` seconds into `times` / `currents`.
///
/// `*n_samples` always receives the number of samples the waveform
/// produces. If it exceeds `capacity` the call fails with
/// `MEMDIE_STATUS_RANGE` before touching the die.
///
/// # Safety
/// `sim` must be a live handle; `levels` and `durations` must hold
/// `n_segments` values; `times` and `currents` must have room for
/// `capacity` values; `n_samples` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn memdie_apply_waveform(
    sim: *mut MemdieSim,
    pad_code: u32,
    levels: *const f64,
    durations: *const f64,
    n_segments: usize,
    sample_interval: f64,
    times: *mut f64,
    currents: *mut f64,
    capacity: usize,
    n_samples: *mut usize,
) -> MemdieStatus {
    with_sim(sim, |s| {
        let count = out_ref(n_samples, "n_samples")?;
        *count = 0;
        let pad = pad(pad_code)?;
        if n_segments > memdie::analog::MAX_SEGMENTS {
            return Err(Error::Range("too many segments".into()).into());
        }
        if n_segments > 0 && (levels.is_null() || durations.is_null()) {
            return Err(Failure::Null("levels/durations"));
        }
        let segments: Vec<Segment> = (0..n_segments)
            .map(|i| Segment { level: *levels.add(i), duration: *durations.add(i) })
            .collect();
        let wf = Waveform::new(segments, sample_interval)?;
        let needed: usize = wf.sample_schedule().iter().map(Vec::len).sum();
        *count = needed;
        if needed > capacity {
            return Err(Error::Range(format!("{needed} samples needed, buffer holds {capacity}")).into());
        }
        if needed > 0 && (times.is_null() || currents.is_null()) {
            return Err(Failure::Null("times/currents"));
        }
        let samples = s.die_mut().apply_waveform(pad, &wf)?;
        for (i, smp) in samples.iter().enumerate() {
            *times.add(i) = smp.t;
            *currents.add(i) = smp.current;
        }
        Ok(())
    })
}

/// Resistance of the single device bridged to the pad, averaged over
/// `n_avg` reads at `v_meas` volts.
///
/// # Safety
/// `sim` must be a live handle, `ohms` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn memdie_measure_resistance(
    sim: *mut MemdieSim,
    pad_code: u32,
    v_meas: f64,
    n_avg: usize,
    ohms: *mut f64,
) -> MemdieStatus {
    with_sim(sim, |s| {
        let out = out_ref(ohms, "ohms")?;
        *out = s.die_mut().measure_resistance(pad(pad_code)?, v_meas, n_avg)?;
        Ok(())
    })
}

/// Executes one bench-protocol line and returns the full reply text (which
/// may itself be `ERR ...`). The status reflects only transport problems.
/// Free `*reply` with [`memdie_string_free`].
///
/// # Safety
/// `sim` must be a live handle, `line` a NUL-terminated string and `reply`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn memdie_command(sim: *mut MemdieSim, line: *const c_char, reply: *mut *mut c_char) -> MemdieStatus {
    with_sim(sim, |s| {
        let out = out_ref(reply, "reply")?;
        *out = ptr::null_mut();
        if line.is_null() {
            return Err(Failure::Null("line"));
        }
        let text = s.handle_line(CStr::from_ptr(line).to_bytes());
        *out = message(text).into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn memdie_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
