//! Experiment plumbing behind the command-line tool: building problems from
//! a config and a seed, running the solvers, writing results.
//!
//! Seeds: trial `k` of a run with master seed `s` uses seed `s + k`; below
//! that, the split tree labels `mask`, `coils`, `phantom`, `noise`,
//! `calibration` and `solver` give each stage its own stream.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;

pub use config::{Algorithm, DenoiserSpec, ExperimentConfig};

use crate::baselines::{run_amp_mri, run_pnp_pgd_mri, run_pr_admm_mri, BaselineRun, MriBaselineConfig};
use crate::denoisers::protocol::{decode_response, Status, MAGIC};
use crate::denoisers::{Denoiser, DenoiserEndpoint, ExternalDenoiser, RawClient, SoftThreshold};
use crate::diagnostics::psnr;
use crate::error::{Error, Result};
use crate::forward::{
    generate_coil_maps, generate_phantom, make_line_mask, make_point_mask, simulate_measurements, ForwardModel,
    MeasurementSet, SamplingMask,
};
use crate::io;
use crate::oracle::{run_suite, Check, Suite};
use crate::rng::SeedTree;
use crate::solver::{calibrate, run_dgec, Calibration, InitMode, Problem};
use crate::transforms::{ComplexImage, SubbandLayout};

pub const MASK_FILE: &str = "mask.msk";
pub const COILS_FILE: &str = "coils.csm";
pub const MEASUREMENTS_FILE: &str = "measurements.ksp";
pub const TRUTH_FILE: &str = "truth.cim";
pub const RECON_FILE: &str = "recon.cim";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";

/// Everything `recover` needs.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub fm: ForwardModel,
    pub measurements: MeasurementSet,
    pub truth: Option<ComplexImage>,
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn layout_for(cfg: &ExperimentConfig) -> Result<SubbandLayout> {
    SubbandLayout::new(cfg.height, cfg.width, cfg.depth).map_err(|e| Error::Config(e.to_string()))
}

pub fn build_mask(cfg: &ExperimentConfig, seed: u64) -> Result<SamplingMask> {
    let s = SeedTree::new(seed).child("mask").seed();
    let shape = (cfg.height, cfg.width);
    match cfg.mask.as_str() {
        "point" => make_point_mask(shape, cfg.acceleration()?, cfg.density_exponent, cfg.calib_size, s),
        "line" => make_line_mask(shape, cfg.acceleration()?, cfg.density_exponent, cfg.calib_size, s),
        other => Err(Error::Config(format!("unknown mask kind '{other}'"))),
    }
}

/// Mask, coils, phantom and noisy measurements, all from `seed`.
pub fn simulate_problem(cfg: &ExperimentConfig, seed: u64) -> Result<ProblemData> {
    let root = SeedTree::new(seed);
    let mask = build_mask(cfg, seed)?;
    let shape = (cfg.height, cfg.width);
    let coils =
        generate_coil_maps(shape, cfg.coils, cfg.coil_smoothness, cfg.coil_support()?, root.child("coils").seed())?;
    let fm = ForwardModel::new(mask, coils, layout_for(cfg)?)?;
    let mut x0 = generate_phantom(shape, cfg.phantom_kind()?, root.child("phantom").seed())?;
    fm.restrict_to_support(&mut x0);
    let measurements = simulate_measurements(&x0, &fm, cfg.snr_db, root.child("noise").seed())?;
    Ok(ProblemData { fm, measurements, truth: Some(x0) })
}

/// Reads the files written by [`cmd_simulate`]; `truth.cim` is optional.
pub fn load_problem(cfg: &ExperimentConfig, dir: &Path) -> Result<ProblemData> {
    let mask = io::read_mask(&dir.join(MASK_FILE))?;
    let coils = io::read_coils(&dir.join(COILS_FILE))?;
    let (measurements, c) = io::read_measurements(&dir.join(MEASUREMENTS_FILE))?;
    if c != coils.num_coils() {
        return Err(Error::Format(format!("measurements carry {c} coils, coil file {}", coils.num_coils())));
    }
    let (h, w) = mask.shape();
    let layout = SubbandLayout::new(h, w, cfg.depth).map_err(|e| Error::Config(e.to_string()))?;
    let fm = ForwardModel::new(mask, coils, layout)?;
    if measurements.y.len() != fm.num_measurements() {
        return Err(Error::Format(format!(
            "{} measurements for a model expecting {}",
            measurements.y.len(),
            fm.num_measurements()
        )));
    }
    let truth_path = dir.join(TRUTH_FILE);
    let truth = if truth_path.exists() { Some(io::read_image(&truth_path)?) } else { None };
    Ok(ProblemData { fm, measurements, truth })
}

pub fn cmd_mask_gen(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<PathBuf> {
    let mask = build_mask(cfg, seed)?;
    ensure_dir(out)?;
    let path = out.join(MASK_FILE);
    io::write_mask(&path, &mask)?;
    Ok(path)
}

/// Writes mask, coil maps, measurements and the (f64) ground truth.
pub fn cmd_simulate(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<Vec<PathBuf>> {
    let p = simulate_problem(cfg, seed)?;
    ensure_dir(out)?;
    let paths: Vec<PathBuf> =
        [MASK_FILE, COILS_FILE, MEASUREMENTS_FILE, TRUTH_FILE].iter().map(|f| out.join(f)).collect();
    io::write_mask(&paths[0], p.fm.mask())?;
    io::write_coils(&paths[1], p.fm.coils())?;
    io::write_measurements(&paths[2], &p.measurements, p.fm.coils().num_coils())?;
    io::write_image_f64(&paths[3], p.truth.as_ref().expect("simulated truth"))?;
    Ok(paths)
}

fn make_denoiser(cfg: &ExperimentConfig, layout: &SubbandLayout) -> Result<Box<dyn Denoiser>> {
    Ok(match cfg.denoiser_spec()? {
        DenoiserSpec::SoftThreshold(kappa) => Box::new(SoftThreshold::new(kappa)?),
        DenoiserSpec::External { endpoint, channels, timeout } => {
            Box::new(ExternalDenoiser::new(endpoint, layout.clone(), channels, timeout)?)
        }
    })
}

/// Error-variance statistics for `bhy_plus_noise`, from independently
/// seeded phantoms of the configured kind.
fn calibration_for(cfg: &ExperimentConfig, fm: &ForwardModel, snr_db: f64, seed: SeedTree) -> Result<Calibration> {
    let kind = cfg.phantom_kind()?;
    let images = (0..cfg.calibration_images)
        .map(|i| {
            let mut x = generate_phantom(fm.shape(), kind, seed.indexed("phantom", i as u64).seed())?;
            fm.restrict_to_support(&mut x);
            Ok(x)
        })
        .collect::<Result<Vec<_>>>()?;
    calibrate(fm, &images, snr_db, seed.child("noise"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub seed: u64,
    pub image: ComplexImage,
    /// Per-iteration CSV, header included.
    pub csv: String,
    pub final_psnr: Option<f64>,
}

fn baseline_csv(run: &BaselineRun, iters: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iter", "psnr"])?;
    for t in 0..iters {
        let p = run.psnr.get(t).map(|v| v.to_string()).unwrap_or_default();
        w.write_record([(t + 1).to_string(), p])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// One recovery with the configured algorithm, in memory.
pub fn recover(cfg: &ExperimentConfig, seed: u64) -> Result<Recovery> {
    let data = match &cfg.input_dir {
        Some(dir) => load_problem(cfg, dir)?,
        None => simulate_problem(cfg, seed)?,
    };
    let root = SeedTree::new(seed);
    let fm = &data.fm;
    let y = &data.measurements.y;
    let gamma_w = data.measurements.gamma_w;
    let truth = data.truth.as_ref();
    let f2 = make_denoiser(cfg, fm.layout())?;
    let solver = cfg.solver_config()?;
    let solver_seed = root.child("solver");

    let (image, csv) = match cfg.algorithm()? {
        Algorithm::Dgec | Algorithm::Ec => {
            let cal = match solver.init_mode {
                InitMode::BhyPlusNoise => {
                    Some(calibration_for(cfg, fm, data.measurements.snr_db, root.child("calibration"))?)
                }
                InitMode::BhyPlain => None,
            };
            let problem = Problem { fm, y, gamma_w, truth };
            let out = run_dgec(&problem, f2.as_ref(), &solver, cal.as_ref(), solver_seed)?;
            (out.image, out.diagnostics.to_csv()?)
        }
        alg => {
            let bcfg = MriBaselineConfig {
                iters: solver.max_iters,
                gamma: cfg.baseline_gamma.unwrap_or(gamma_w),
                cg_iters: solver.cg_iters,
            };
            let run = match alg {
                Algorithm::Amp => run_amp_mri(fm, y, f2.as_ref(), bcfg.iters, truth, solver_seed)?,
                Algorithm::PnpPgd => run_pnp_pgd_mri(fm, y, f2.as_ref(), &bcfg, truth, solver_seed)?,
                _ => run_pr_admm_mri(fm, y, gamma_w, f2.as_ref(), &bcfg, truth, solver_seed)?,
            };
            let csv = baseline_csv(&run, bcfg.iters)?;
            (run.estimate, csv)
        }
    };
    let final_psnr = truth.map(|x0| psnr(&image, x0)).transpose()?;
    Ok(Recovery { seed, image, csv, final_psnr })
}

/// Prefixes every row of each trial's CSV with its seed and concatenates
/// them in seed order under one header.
pub fn merge_trial_csvs(runs: &[Recovery]) -> Result<String> {
    let mut out = String::new();
    for (k, r) in runs.iter().enumerate() {
        let mut lines = r.csv.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty diagnostics".into()))?;
        if k == 0 {
            out.push_str("seed,");
            out.push_str(header);
            out.push('\n');
        }
        for l in lines {
            out.push_str(&format!("{},{l}\n", r.seed));
        }
    }
    Ok(out)
}

/// Runs `trials` recoveries with seeds `seed, seed + 1, ...` concurrently
/// and writes `recon.cim` (or `recon_seed<S>.cim` per trial) and
/// `diagnostics.csv`.
pub fn cmd_recover(cfg: &ExperimentConfig, seed: u64, trials: usize, out: &Path) -> Result<Vec<Recovery>> {
    if trials == 0 {
        return Err(Error::Config("--trials must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..trials as u64).map(|k| seed.wrapping_add(k)).collect();
    let runs = seeds.par_iter().map(|&s| recover(cfg, s)).collect::<Result<Vec<_>>>()?;
    ensure_dir(out)?;
    if trials == 1 {
        io::write_image(&out.join(RECON_FILE), &runs[0].image)?;
        write_text(&out.join(DIAGNOSTICS_FILE), &runs[0].csv)?;
    } else {
        for r in &runs {
            io::write_image(&out.join(format!("recon_seed{}.cim", r.seed)), &r.image)?;
        }
        write_text(&out.join(DIAGNOSTICS_FILE), &merge_trial_csvs(&runs)?)?;
    }
    Ok(runs)
}

/// Runs a verification suite and writes `verify_<name>.csv`.
pub fn cmd_verify(suite: Suite, name: &str, seed: u64, out: &Path) -> Result<Vec<Check>> {
    let checks = run_suite(suite, SeedTree::new(seed))?;
    ensure_dir(out)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["suite", "check", "value", "bound", "pass"])?;
    for c in &checks {
        w.write_record([c.suite, &c.name, &c.value.to_string(), &c.bound, if c.pass { "1" } else { "0" }])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_text(&out.join(format!("verify_{name}.csv")), &String::from_utf8(bytes).expect("utf-8"))?;
    Ok(checks)
}

pub const GOLDEN_REQUEST: &[u8] = include_bytes!("../../tests/fixtures/dnz1_request.bin");
pub const GOLDEN_ECHO_RESPONSE: &[u8] = include_bytes!("../../tests/fixtures/dnz1_response_echo.bin");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConformanceCheck {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Protocol conformance of a denoiser endpoint, on one connection: the
/// golden request must get an OK header and a finite payload of the right
/// size, malformed frames must get status 1, and the connection must still
/// answer afterwards.
pub fn cmd_denoise_test(endpoint: &DenoiserEndpoint, timeout: Duration) -> Result<Vec<ConformanceCheck>> {
    let mut client = RawClient::connect(endpoint, timeout)?;
    let mut checks = Vec::new();
    let golden_ok = |resp: &[u8]| -> (bool, String) {
        let header_ok = resp.len() == GOLDEN_ECHO_RESPONSE.len() && resp[..5] == GOLDEN_ECHO_RESPONSE[..5];
        match decode_response(resp, 6) {
            Ok(img) if header_ok && img.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => {
                let echo = resp == GOLDEN_ECHO_RESPONSE;
                (true, format!("{} bytes{}", resp.len(), if echo { ", identical to the echo" } else { "" }))
            }
            Ok(_) => (false, format!("bad header or non-finite payload ({} bytes)", resp.len())),
            Err(e) => (false, e.to_string()),
        }
    };
    let (pass, detail) = golden_ok(&client.exchange(GOLDEN_REQUEST)?);
    checks.push(ConformanceCheck { name: "golden_request", pass, detail });

    let shape_error = [&MAGIC[..], &[Status::ShapeError as u8]].concat();
    let mut bad_magic = GOLDEN_REQUEST.to_vec();
    bad_magic[0] ^= 0xff;
    let truncated = &GOLDEN_REQUEST[..GOLDEN_REQUEST.len() - 3];
    for (name, payload) in [("bad_magic", &bad_magic[..]), ("truncated_payload", truncated)] {
        let resp = client.exchange(payload)?;
        let pass = resp == shape_error;
        checks.push(ConformanceCheck { name, pass, detail: format!("{} byte reply", resp.len()) });
    }

    let (pass, detail) = golden_ok(&client.exchange(GOLDEN_REQUEST)?);
    checks.push(ConformanceCheck { name: "connection_survives", pass, detail });
    Ok(checks)
}
