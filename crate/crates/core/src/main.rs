use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use memdie::experiments;
use memdie::protocol::{self, Session};
use memdie::SimConfig;

#[derive(Parser)]
#[command(name = "memdie", version, about = "Memristor/CMOS die simulator and virtual test bench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the bench protocol over TCP (loopback) or stdio.
    Serve {
        /// TCP port; 0 picks a free port and prints it.
        #[arg(long, env = protocol::PORT_ENV, default_value_t = protocol::DEFAULT_PORT)]
        port: u16,
        /// Speak the protocol on stdin/stdout instead of TCP.
        #[arg(long)]
        stdio: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run one experiment headlessly and write its CSV.
    Run {
        /// progressive-reset, endurance, endurance-sweep or ber.
        experiment: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Recipe parameter override, `key=value`; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Inspect the effective configuration.
    Params {
        #[command(subcommand)]
        action: ParamsAction,
    },
}

#[derive(Subcommand)]
enum ParamsAction {
    /// Print every parameter as `key = value`.
    Dump {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> anyhow::Result<SimConfig> {
    match path {
        Some(p) => SimConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(SimConfig::default()),
    }
}

/// `<out>/<experiment>/<timestamp>`, suffixed `-1`, `-2`, ... when taken.
fn fresh_run_dir(out: &Path, experiment: &str) -> anyhow::Result<PathBuf> {
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S").to_string();
    let base = out.join(experiment);
    std::fs::create_dir_all(&base).with_context(|| format!("creating {}", base.display()))?;
    for k in 0.. {
        let name = if k == 0 { stamp.clone() } else { format!("{stamp}-{k}") };
        let dir = base.join(name);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e).with_context(|| format!("creating {}", dir.display())),
        }
    }
    unreachable!()
}

fn run(
    experiment: &str,
    config: Option<&Path>,
    seed: u64,
    out: &Path,
    overrides: &[String],
) -> anyhow::Result<PathBuf> {
    let cfg = load_config(config)?;
    let recipe = experiments::configured_recipe(experiment, overrides.iter().map(String::as_str))?;
    let csv = recipe.run_csv(&cfg, seed)?;
    let dir = fresh_run_dir(out, recipe.name())?;
    std::fs::write(dir.join("results.csv"), csv)?;
    let mut snapshot = format!("# experiment = {}\n# seed = {seed}\n", recipe.name());
    for line in recipe.describe().lines() {
        snapshot.push_str(&format!("# {line}\n"));
    }
    snapshot.push_str(&cfg.dump());
    std::fs::write(dir.join("config.snapshot"), snapshot)?;
    Ok(dir)
}

fn serve(port: u16, stdio: bool, config: Option<&Path>, seed: u64) -> anyhow::Result<()> {
    let cfg = load_config(config)?;
    if stdio {
        let mut session = Session::new(cfg, seed)?;
        let stdin = std::io::stdin().lock();
        protocol::serve_stream(&mut session, stdin, std::io::stdout().lock())?;
        return Ok(());
    }
    let listener = protocol::bind(port).with_context(|| format!("binding port {port}"))?;
    println!("listening on {}", listener.local_addr()?);
    protocol::serve_tcp(&listener, cfg, seed, None)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Serve { port, stdio, config, seed } => serve(port, stdio, config.as_deref(), seed),
        Command::Run { experiment, config, seed, out, overrides } => {
            run(&experiment, config.as_deref(), seed, &out, &overrides).map(|dir| println!("{}", dir.display()))
        }
        Command::Params { action: ParamsAction::Dump { config } } => {
            load_config(config.as_deref()).map(|cfg| print!("{}", cfg.dump()))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
