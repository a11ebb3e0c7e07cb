//! Line-oriented bench protocol.
//!
//! One command per `\n`-terminated UTF-8 line, one reply per command. A reply
//! is either a single `OK ...` / `ERR <CODE> <message>` line or a CSV block:
//!
//! ```text
//! OK CSV <rows>
//! <header>
//! <rows lines>
//! END
//! ```
//!
//! The full grammar lives in `docs/protocol.md`.

use std::io::{BufRead, Write};
use std::net::{TcpListener, ToSocketAddrs};
use std::path::Path;

use crate::analog::{self, Pad, Segment, Waveform};
use crate::array::CellAddress;
use crate::config::{format_value, SimConfig};
use crate::die::{Die, Mode};
use crate::error::{Error, Result};
use crate::experiments;

/// Longest accepted command line in bytes, terminator excluded.
pub const MAX_LINE: usize = 64 * 1024;

/// Environment variable holding the default TCP port for `serve`.
pub const PORT_ENV: &str = "MEMDIE_PORT";
pub const DEFAULT_PORT: u16 = 7878;

/// One client's view of the simulator: the die plus the configuration and
/// seed that `SEED` and `RUN` start from.
#[derive(Debug, Clone)]
pub struct Session {
    config: SimConfig,
    seed: u64,
    die: Die,
}

impl Session {
    pub fn new(config: SimConfig, seed: u64) -> Result<Self> {
        Ok(Self { die: Die::new(config, seed)?, config, seed })
    }

    pub fn die(&self) -> &Die {
        &self.die
    }

    pub fn die_mut(&mut self) -> &mut Die {
        &mut self.die
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Executes one raw line (terminator already stripped) and returns the
    /// reply without its final newline.
    pub fn handle_line(&mut self, line: &[u8]) -> String {
        let Ok(text) = std::str::from_utf8(line) else {
            return err_reply(&Error::Parse("line is not valid UTF-8".into()));
        };
        if line.len() > MAX_LINE {
            return err_reply(&Error::Parse(format!("line exceeds {MAX_LINE} bytes")));
        }
        match self.execute(text.trim_end_matches('\r')) {
            Ok(reply) => reply,
            Err(e) => err_reply(&e),
        }
    }

    fn execute(&mut self, line: &str) -> Result<String> {
        let mut words = line.split_ascii_whitespace();
        let Some(verb) = words.next() else {
            return Err(Error::Parse("empty command".into()));
        };
        let args: Vec<&str> = words.collect();
        match verb.to_ascii_uppercase().as_str() {
            "PING" => {
                arity(&args, 0, 0)?;
                Ok("OK pong".into())
            }
            "MODE" => self.mode(&args),
            "FORM" => self.form(&args),
            "WRITE" => {
                arity(&args, 3, 3)?;
                let addr = cell(&args[0..2])?;
                let b = bit(args[2])?;
                self.die.write_bit(addr, b)?;
                Ok("OK".into())
            }
            "READBIT" => {
                arity(&args, 2, 2)?;
                let b = self.die.read_bit(cell(&args[0..2])?)?;
                Ok(format!("OK {}", b as u8))
            }
            "XNOR" => {
                arity(&args, 3, 3)?;
                let addr = cell(&args[0..2])?;
                let input = bit(args[2])?;
                let b = self.die.xnor(addr, input)?;
                Ok(format!("OK {}", b as u8))
            }
            "SRLOAD" => {
                arity(&args, 1, 1)?;
                let bits = parse_chain(args[0])?;
                let routing = self.die.load_shift_register(&bits)?;
                Ok(format!("OK {}", routing.non_floating_lines()))
            }
            "WAVE" => {
                arity(&args, 3, 3)?;
                let pad = Pad::parse(args[0])?;
                let dt = number(args[1])?;
                let wf = parse_waveform(args[2], dt)?;
                let samples = self.die.apply_waveform(pad, &wf)?;
                let mut body = Vec::new();
                analog::samples_to_csv(&samples, &mut body)?;
                Ok(csv_block(&String::from_utf8_lossy(&body)))
            }
            "MEASR" => {
                arity(&args, 3, 3)?;
                let pad = Pad::parse(args[0])?;
                let v = number(args[1])?;
                let n: usize = integer(args[2])?;
                let r = self.die.measure_resistance(pad, v, n)?;
                Ok(format!("OK {r:e}"))
            }
            "PARAMS" => self.params(&args),
            "SNAPSHOT" => {
                arity(&args, 1, 1)?;
                self.die.save_snapshot_file(Path::new(args[0]))?;
                Ok("OK".into())
            }
            "RESTORE" => {
                arity(&args, 1, 1)?;
                let die = Die::load_snapshot_file(Path::new(args[0]))?;
                self.config = *die.config();
                self.seed = die.seed();
                self.die = die;
                Ok("OK".into())
            }
            "SEED" => {
                arity(&args, 1, 1)?;
                let seed: u64 = integer(args[0])?;
                self.die = Die::new(self.config, seed)?;
                self.seed = seed;
                Ok(format!("OK {seed}"))
            }
            "RUN" => {
                if args.is_empty() {
                    return Err(Error::Parse("RUN needs an experiment name".into()));
                }
                let recipe = experiments::configured_recipe(args[0], args[1..].iter().copied())?;
                let csv = recipe.run_csv(&self.config, self.seed)?;
                Ok(csv_block(&csv))
            }
            other => Err(Error::Parse(format!("unknown verb {other:?}"))),
        }
    }

    fn mode(&mut self, args: &[&str]) -> Result<String> {
        arity(args, 0, 1)?;
        if let Some(m) = args.first() {
            self.die.set_mode(Mode::parse(m)?);
        }
        Ok(format!("OK {}", self.die.mode().as_str()))
    }

    fn form(&mut self, args: &[&str]) -> Result<String> {
        if args.len() == 1 && args[0].eq_ignore_ascii_case("ALL") {
            let n = self.die.form_all()?;
            return Ok(format!("OK {n}"));
        }
        arity(args, 2, 2)?;
        let report = self.die.form_cell(cell(args)?)?;
        Ok(format!("OK {} {}", report.bl_formed as u8, report.blb_formed as u8))
    }

    fn params(&mut self, args: &[&str]) -> Result<String> {
        match args {
            [] => {
                let mut body = String::from("key,value\n");
                for key in SimConfig::keys() {
                    body.push_str(&format!("{key},{}\n", format_value(key, self.config.get(key)?)));
                }
                Ok(csv_block(&body))
            }
            [get, key] if get.eq_ignore_ascii_case("GET") => {
                Ok(format!("OK {}", format_value(key, self.config.get(key)?)))
            }
            [set, key, value] if set.eq_ignore_ascii_case("SET") => {
                let v = number(value)?;
                // Unknown keys stay PARSE errors, geometry is fixed per die.
                self.config.get(key)?;
                if SimConfig::is_geometry_key(key) {
                    return Err(Error::State(format!("{key} is fixed for the lifetime of a die")));
                }
                let mut cfg = self.config;
                cfg.set(key, v)?;
                self.die.set_config(cfg)?;
                self.config = cfg;
                Ok(format!("OK {}", format_value(key, v)))
            }
            _ => Err(Error::Parse("expected PARAMS, PARAMS GET <key> or PARAMS SET <key> <value>".into())),
        }
    }
}

/// `ERR <CODE> <message>` on one line.
pub fn err_reply(e: &Error) -> String {
    let msg: String = e.to_string().chars().map(|c| if c.is_control() { ' ' } else { c }).collect();
    format!("ERR {} {msg}", e.code())
}

/// Wraps CSV text (header plus rows, `\n` separated) in an `OK CSV` block.
pub fn csv_block(csv: &str) -> String {
    let body = csv.trim_end_matches('\n');
    let rows = body.lines().count().saturating_sub(1);
    format!("OK CSV {rows}\n{body}\nEND")
}

fn arity(args: &[&str], min: usize, max: usize) -> Result<()> {
    if args.len() < min || args.len() > max {
        let want = if min == max { format!("{min}") } else { format!("{min} to {max}") };
        return Err(Error::Parse(format!("expected {want} arguments, got {}", args.len())));
    }
    Ok(())
}

fn integer<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse(format!("expected a non-negative integer, got {s:?}")))
}

fn number(s: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::Parse(format!("expected a number, got {s:?}")))?;
    if !v.is_finite() {
        return Err(Error::Range(format!("{s} is not finite")));
    }
    Ok(v)
}

fn bit(s: &str) -> Result<bool> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(Error::Parse(format!("expected 0 or 1, got {s:?}"))),
    }
}

fn cell(args: &[&str]) -> Result<CellAddress> {
    Ok(CellAddress::new(integer(args[0])?, integer(args[1])?))
}

/// Shift-register contents: hex digits, or `b:` followed by `0`/`1`.
pub fn parse_chain(s: &str) -> Result<Vec<bool>> {
    if let Some(bits) = s.strip_prefix("b:") {
        return bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Parse(format!("invalid bit {c:?}"))),
            })
            .collect();
    }
    analog::hex_to_bits(s.strip_prefix("0x").unwrap_or(s))
}

/// `level:duration[xN]` items separated by commas, for example
/// `1.0:1.5e-6x100,0.2:1e-6`.
pub fn parse_waveform(spec: &str, sample_interval: f64) -> Result<Waveform> {
    let mut segments = Vec::new();
    for item in spec.split(',') {
        let (seg, count) = match item.split_once('x') {
            Some((seg, n)) => (seg, integer::<usize>(n)?),
            None => (item, 1),
        };
        let (level, duration) = seg
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected level:duration, got {item:?}")))?;
        let s = Segment { level: number(level)?, duration: number(duration)? };
        if count > analog::MAX_SEGMENTS.saturating_sub(segments.len()) {
            return Err(Error::Range(format!("waveform exceeds {} segments", analog::MAX_SEGMENTS)));
        }
        segments.extend(std::iter::repeat_n(s, count));
    }
    Waveform::new(segments, sample_interval)
}

/// Reads one line of at most [`MAX_LINE`] bytes. Longer lines are consumed
/// and returned truncated to `MAX_LINE + 1` bytes so the caller rejects
/// them. `None` at end of input.
pub fn read_line<R: BufRead>(reader: &mut R) -> std::io::Result<Option<Vec<u8>>> {
    let mut buf = Vec::new();
    let n = std::io::Read::take(&mut *reader, MAX_LINE as u64 + 1).read_until(b'\n', &mut buf)?;
    if n == 0 {
        return Ok(None);
    }
    if buf.last() == Some(&b'\n') {
        buf.pop();
        return Ok(Some(buf));
    }
    if buf.len() > MAX_LINE {
        // Drain the rest of the oversized line.
        let mut sink = Vec::new();
        loop {
            sink.clear();
            let k = std::io::Read::take(&mut *reader, MAX_LINE as u64).read_until(b'\n', &mut sink)?;
            if k == 0 || sink.last() == Some(&b'\n') {
                break;
            }
        }
    }
    Ok(Some(buf))
}

/// Runs the command loop until the reader is exhausted.
pub fn serve_stream<R: BufRead, W: Write>(session: &mut Session, mut reader: R, mut writer: W) -> std::io::Result<()> {
    while let Some(line) = read_line(&mut reader)? {
        let reply = session.handle_line(&line);
        writer.write_all(reply.as_bytes())?;
        writer.write_all(b"\n")?;
        writer.flush()?;
    }
    Ok(())
}

/// Binds a TCP listener on the loopback interface.
pub fn bind(port: u16) -> std::io::Result<TcpListener> {
    let addr = ("127.0.0.1", port).to_socket_addrs()?.next().expect("loopback address");
    TcpListener::bind(addr)
}

/// Accepts connections one at a time. Each connection gets a fresh session
/// from `config` and `seed`; later clients wait in the accept backlog.
/// Returns after `max_clients` connections if given.
pub fn serve_tcp(listener: &TcpListener, config: SimConfig, seed: u64, max_clients: Option<usize>) -> Result<()> {
    let mut served = 0;
    while max_clients.is_none_or(|m| served < m) {
        let (stream, _) = listener.accept()?;
        let mut session = Session::new(config, seed)?;
        let reader = std::io::BufReader::new(stream.try_clone()?);
        // A client hanging up mid-session ends that session only.
        let _ = serve_stream(&mut session, reader, stream);
        served += 1;
    }
    Ok(())
}
