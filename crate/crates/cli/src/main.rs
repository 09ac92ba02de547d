//! `dgec` command-line tool.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 file or I/O
//! error, 4 solver failure, 5 denoiser protocol failure, 6 verification
//! failure, 7 invalid input data. Errors are printed to stderr as
//! `error[<category>]: <message>`.

use std::io::{self, BufReader, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use dgec::denoisers::protocol::{serve_stream, spawn_tcp_server, EchoMode};
use dgec::denoisers::DenoiserEndpoint;
use dgec::experiment::{self, ExperimentConfig};
use dgec::oracle::Suite;
use dgec::{Error, Result};

#[derive(Parser)]
#[command(name = "dgec", version, about = "Denoising GEC for undersampled Fourier imaging")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (flat key = value file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config's.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; overrides the config's `out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Independent trials (seeds seed, seed+1, ...), run concurrently.
    #[arg(long, global = true, default_value_t = 1)]
    trials: usize,

    /// Denoiser endpoint, HOST:PORT or stdio:COMMAND.
    #[arg(long, global = true)]
    endpoint: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Appendix,
    Transforms,
    Solver,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Write the sampling mask.
    MaskGen,
    /// Write mask, coil maps, measurements and ground truth.
    Simulate,
    /// Run the configured algorithm; writes the image and a per-iteration CSV.
    Recover,
    /// Run a verification suite.
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
    },
    /// Check a denoiser endpoint against the protocol.
    DenoiseTest {
        #[arg(long, default_value_t = 10_000)]
        timeout_ms: u64,
    },
    /// Serve the loopback echo denoiser on stdio, or on TCP with --listen.
    ServeEcho {
        #[arg(long)]
        listen: Option<String>,
        /// Answer with zeros instead of echoing.
        #[arg(long)]
        zeros: bool,
        #[arg(long, default_value_t = 1 << 24)]
        max_pixels: usize,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        "config" => 2,
        "io" => 3,
        "solver" => 4,
        "protocol" => 5,
        "verification" => 6,
        _ => 7,
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(ep) = &cli.endpoint {
        cfg.endpoint = Some(ep.clone());
        cfg.denoiser = "external".into();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: &ExperimentConfig) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| cfg.out_dir.clone())
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::MaskGen => {
            let cfg = load_config(cli)?;
            print_paths(&[experiment::cmd_mask_gen(&cfg, cfg.master_seed()?, &out_dir(cli, &cfg))?]);
        }
        Command::Simulate => {
            let cfg = load_config(cli)?;
            print_paths(&experiment::cmd_simulate(&cfg, cfg.master_seed()?, &out_dir(cli, &cfg))?);
        }
        Command::Recover => {
            let cfg = load_config(cli)?;
            let out = out_dir(cli, &cfg);
            for r in experiment::cmd_recover(&cfg, cfg.master_seed()?, cli.trials, &out)? {
                match r.final_psnr {
                    Some(p) => println!("seed {}: psnr {p:.4} dB", r.seed),
                    None => println!("seed {}: done (no ground truth)", r.seed),
                }
            }
            println!("wrote {}", out.join(experiment::DIAGNOSTICS_FILE).display());
        }
        Command::Verify { suite } => {
            let (suite, name) = match suite {
                SuiteArg::Appendix => (Suite::Appendix, "appendix"),
                SuiteArg::Transforms => (Suite::Transforms, "transforms"),
                SuiteArg::Solver => (Suite::Solver, "solver"),
                SuiteArg::All => (Suite::All, "all"),
            };
            let seed = cli.seed.unwrap_or(0);
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let checks = experiment::cmd_verify(suite, name, seed, &out)?;
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            if failed > 0 {
                return Err(Error::Verification(format!("{failed} of {} checks failed", checks.len())));
            }
            println!("all {} checks passed", checks.len());
        }
        Command::DenoiseTest { timeout_ms } => {
            let ep = cli.endpoint.as_deref().ok_or_else(|| Error::Config("denoise-test needs --endpoint".into()))?;
            let endpoint: DenoiserEndpoint = ep.parse()?;
            let checks = experiment::cmd_denoise_test(&endpoint, Duration::from_millis(*timeout_ms))?;
            for c in &checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().any(|c| !c.pass) {
                return Err(Error::Protocol("endpoint is not conformant".into()));
            }
        }
        Command::ServeEcho { listen, zeros, max_pixels } => {
            let mode = if *zeros { EchoMode::Zeros } else { EchoMode::Echo };
            match listen {
                Some(addr) => {
                    let (local, handle) = spawn_tcp_server(addr, mode, *max_pixels)?;
                    eprintln!("listening on {local}");
                    let _ = handle.join();
                }
                None => {
                    let mut r = BufReader::new(io::stdin().lock());
                    let mut w = BufWriter::new(io::stdout().lock());
                    serve_stream(&mut r, &mut w, mode, *max_pixels)?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(exit_code(&e))
        }
    }
}
