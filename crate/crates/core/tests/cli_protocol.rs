//! End-to-end checks of the `memdie` binary and the bench protocol.

mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};

use memdie::protocol::Session;
use memdie::SimConfig;

use common::small;

fn memdie() -> Command {
    Command::new(env!("CARGO_BIN_EXE_memdie"))
}

fn run_dir(out: &Path, args: &[&str]) -> PathBuf {
    let o = memdie().arg("run").args(args).arg("--out").arg(out).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    PathBuf::from(String::from_utf8(o.stdout).unwrap().trim())
}

const TRANSCRIPT: &[&str] = &[
    "SEED 42",
    "PING",
    "FORM ALL",
    "WRITE 3 7 1",
    "READBIT 3 7",
    "XNOR 3 7 0",
    "WRITE 3 7 0",
    "READBIT 3 7",
    "MODE ANALOG",
    "WRITE 3 7 1",
    "SRLOAD b:100000001100000000000000000000000000000001000000",
    "MEASR B 0.2 16",
    "WAVE B 1e-6 0.1:2e-6,1.0:1.5e-6x10,0.1:2e-6",
    "MEASR B 0.2 16",
    "MODE DIGITAL",
    "PARAMS GET device.sigma_d2d",
    "RUN endurance max_cycles=1e4",
];

fn transcript(cfg: SimConfig) -> Vec<String> {
    let mut s = Session::new(cfg, 0).unwrap();
    TRANSCRIPT.iter().map(|l| s.handle_line(l.as_bytes())).collect()
}

#[test]
fn scripted_session_replays_byte_identically() {
    let cfg = small(SimConfig::default(), 4, 8);
    let a = transcript(cfg);
    assert_eq!(a, transcript(cfg));
    assert_eq!(a[1], "OK pong");
    assert!(a[9].starts_with("ERR MODE "));
    assert!(a.iter().all(|r| !r.starts_with("ERR PARSE")), "{a:#?}");
}

#[test]
fn stdio_server_matches_in_process_session() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("small.toml");
    std::fs::write(&cfg_path, "geometry.rows = 4\ngeometry.cell_cols = 8\n").unwrap();
    let mut child = memdie()
        .args(["serve", "--stdio", "--config"])
        .arg(&cfg_path)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    {
        let mut stdin = child.stdin.take().unwrap();
        for line in TRANSCRIPT {
            writeln!(stdin, "{line}").unwrap();
        }
    }
    let mut out = String::new();
    child.stdout.take().unwrap().read_to_string(&mut out).unwrap();
    assert!(child.wait().unwrap().success());
    let expected: String = transcript(small(SimConfig::default(), 4, 8)).iter().map(|r| format!("{r}\n")).collect();
    assert_eq!(out, expected);
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn spawn_server(extra_env: Option<(&str, &str)>, args: &[&str]) -> (Server, String) {
    let mut cmd = memdie();
    cmd.arg("serve").args(args).stdout(Stdio::piped());
    if let Some((k, v)) = extra_env {
        cmd.env(k, v);
    }
    let mut child = cmd.spawn().unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").expect("listening banner").to_string();
    (Server(child), addr)
}

fn converse(addr: &str, lines: &[&str]) -> Vec<String> {
    let stream = TcpStream::connect(addr).unwrap();
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = stream;
    let mut replies = Vec::new();
    for l in lines {
        writeln!(writer, "{l}").unwrap();
        let mut reply = String::new();
        reader.read_line(&mut reply).unwrap();
        if let Some(n) = reply.strip_prefix("OK CSV ") {
            let n: usize = n.trim().parse().unwrap();
            for _ in 0..n + 2 {
                reader.read_line(&mut reply).unwrap();
            }
        }
        replies.push(reply.trim_end().to_string());
    }
    replies
}

#[test]
fn tcp_loopback_ping() {
    let (_server, addr) = spawn_server(None, &["--port", "0"]);
    assert_eq!(converse(&addr, &["PING", "MODE"]), vec!["OK pong", "OK DIGITAL"]);
    // Sessions are sequential and each starts from a fresh die.
    let r = converse(&addr, &["FORM 0 0", "FORM 0 0"]);
    assert_eq!(r[0], "OK 1 1");
    assert!(r[1].starts_with("ERR STATE "));
    assert_eq!(converse(&addr, &["FORM 0 0"]), vec!["OK 1 1"]);
}

#[test]
fn port_comes_from_environment() {
    let (_server, addr) = spawn_server(Some(("MEMDIE_PORT", "0")), &[]);
    assert_eq!(converse(&addr, &["PING"]), vec!["OK pong"]);
}

#[test]
fn run_is_deterministic_and_matches_protocol_run() {
    let out = tempfile::tempdir().unwrap();
    let a = run_dir(out.path(), &["progressive-reset", "--seed", "1"]);
    let b = run_dir(out.path(), &["progressive-reset", "--seed", "1"]);
    assert_ne!(a, b, "each run gets its own directory");
    assert!(a.starts_with(out.path().join("progressive-reset")));
    let csv = std::fs::read_to_string(a.join("results.csv")).unwrap();
    assert_eq!(csv, std::fs::read_to_string(b.join("results.csv")).unwrap());

    let mut s = Session::new(SimConfig::default(), 1).unwrap();
    let block = s.handle_line(b"RUN progressive-reset");
    let body = block.split_once('\n').unwrap().1.strip_suffix("END").unwrap();
    assert_eq!(body, csv);

    let e1 = run_dir(out.path(), &["endurance", "--seed", "1", "--set", "max_cycles=1e6"]);
    let e2 = run_dir(out.path(), &["endurance", "--seed", "1", "--set", "max_cycles=1e6"]);
    assert_eq!(std::fs::read(e1.join("results.csv")).unwrap(), std::fs::read(e2.join("results.csv")).unwrap());
}

#[test]
fn config_snapshot_reproduces_the_run() {
    let out = tempfile::tempdir().unwrap();
    let cfg = out.path().join("desk.toml");
    std::fs::write(&cfg, "device.endurance.log10_endurance_at_vref = 5.0\ngeometry.rows = 2\n").unwrap();
    let args = ["endurance", "--seed", "4", "--set", "max_cycles=1e6", "--config", cfg.to_str().unwrap()];
    let first = run_dir(out.path(), &args);
    let snapshot = first.join("config.snapshot");
    let text = std::fs::read_to_string(&snapshot).unwrap();
    assert!(text.contains("# seed = 4\n") && text.contains("# max_cycles = 1000000\n"));
    let parsed: SimConfig = text.parse().unwrap();
    assert_eq!(parsed.geometry.rows, 2);
    assert_eq!(parsed.device.endurance.log10_endurance_at_vref, 5.0);

    let again = run_dir(
        out.path(),
        &["endurance", "--seed", "4", "--set", "max_cycles=1e6", "--config", snapshot.to_str().unwrap()],
    );
    assert_eq!(std::fs::read(first.join("results.csv")).unwrap(), std::fs::read(again.join("results.csv")).unwrap());
}

#[test]
fn usage_errors_exit_nonzero() {
    let out = tempfile::tempdir().unwrap();
    let out = out.path().to_str().unwrap();
    for args in [
        vec!["run", "nosuch", "--out", out],
        vec!["run", "endurance", "--bogus", "--out", out],
        vec!["run", "endurance", "--set", "nokey=1", "--out", out],
        vec!["run", "endurance", "--set", "max_cycles", "--out", out],
        vec!["frobnicate"],
        vec!["params", "dump", "--config", "/nonexistent/x.toml"],
    ] {
        let o = memdie().args(&args).output().unwrap();
        assert!(!o.status.success(), "{args:?} succeeded");
        assert!(!o.stderr.is_empty(), "{args:?} printed no diagnostic");
    }
    let o = memdie().args(["run", "nosuch", "--out", out]).output().unwrap();
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown experiment"));
}

#[test]
fn params_dump_round_trips() {
    let o = memdie().args(["params", "dump"]).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), SimConfig::keys().count());
    assert_eq!(text.parse::<SimConfig>().unwrap(), SimConfig::default());
}
