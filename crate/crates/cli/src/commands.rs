use std::fmt;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use splic::io::{
    parse_config_json, read_image, read_mask, trace_to_csv, write_image, write_text, Encoding,
    Image,
};
use splic::metrics::{
    format_psnr, fraction_sweep, psnr_channels, rank_sweep, rank_sweep_csv, BaselineParams,
};
use splic::solver::{alternate_channels, complete_channels, splic_alternated_with_mask};
use splic::{synth, BinaryMask, CompletionResult, ImageMatrix, SplicConfig, SplicError};

use crate::args::{CompareArgs, CompleteArgs, DefendArgs, RankSweepArgs, SolverArgs};

/// Failure with its process exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad input, flags, config or I/O; exit status 2.
    Invalid(String),
    /// `--strict` and the solver hit `maxiter`; exit status 3.
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::NotConverged(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(msg) | CliError::NotConverged(msg) => f.write_str(msg),
        }
    }
}

impl From<SplicError> for CliError {
    fn from(e: SplicError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

/// Config file values overridden by any flags given.
fn build_config(args: &SolverArgs) -> CliResult<SplicConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
            let (cfg, _unknown) = parse_config_json(&text)
                .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
            cfg
        }
        None => SplicConfig::default(),
    };
    if let Some(v) = args.anchor_fraction {
        cfg.anchor_fraction = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.rank {
        cfg.r = Some(v);
    }
    if let Some(v) = args.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = args.rho {
        cfg.rho = v;
    }
    if let Some(v) = args.mu {
        cfg.mu = v;
    }
    if let Some(v) = args.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = args.maxiter {
        cfg.maxiter = v;
    }
    if let Some(v) = args.inner_steps {
        cfg.inner_steps = v;
    }
    if let Some(v) = args.tv_mode {
        cfg.tv_mode = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Header comment naming the seed and a digest of the full config.
fn provenance(cfg: &SplicConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    format!("splic seed={} cfg-hash={hex}", cfg.seed)
}

fn load_input(path: &Path, args: &SolverArgs, cfg: &SplicConfig) -> CliResult<Image> {
    let image = read_image(path)?;
    match args.add_uniform_noise {
        Some(amp) if amp > 0.0 => {
            let planes = image
                .into_channels()
                .iter()
                .enumerate()
                .map(|(c, p)| synth::add_uniform_noise(p, amp, cfg.seed.wrapping_add(c as u64)))
                .collect();
            Ok(Image::new(planes)?)
        }
        _ => Ok(image),
    }
}

fn load_mask(path: &Path, image: &Image) -> CliResult<BinaryMask> {
    let mask = read_mask(path)?;
    if mask.shape() != (image.rows(), image.cols()) {
        return Err(CliError::Invalid(format!(
            "{}: mask is {}x{} but the image is {}x{}",
            path.display(),
            mask.rows(),
            mask.cols(),
            image.rows(),
            image.cols()
        )));
    }
    Ok(mask)
}

fn require_gray(image: Image, path: &Path) -> CliResult<ImageMatrix> {
    if image.is_color() {
        return Err(CliError::Invalid(format!(
            "{}: this command needs a grayscale image",
            path.display()
        )));
    }
    Ok(image.into_channels().remove(0))
}

fn write_output(results: &[CompletionResult], path: &Path, cfg: &SplicConfig) -> CliResult<()> {
    // Files hold [0, 1] samples regardless of the solver's clamp setting.
    let planes = results
        .iter()
        .map(|r| r.completed.clamp(0.0, 1.0))
        .collect();
    let comment = provenance(cfg);
    write_image(
        &Image::new(planes)?,
        path,
        Encoding::Binary,
        255,
        Some(&comment),
    )?;
    Ok(())
}

/// `t.csv` for one channel; `t.0.csv`, `t.1.csv`, ... for several.
fn trace_paths(path: &Path, channels: usize) -> Vec<PathBuf> {
    if channels == 1 {
        return vec![path.to_path_buf()];
    }
    let stem = path
        .file_stem()
        .unwrap_or_default()
        .to_string_lossy()
        .into_owned();
    let ext = path.extension().map(|e| e.to_string_lossy().into_owned());
    (0..channels)
        .map(|c| {
            let name = match &ext {
                Some(ext) => format!("{stem}.{c}.{ext}"),
                None => format!("{stem}.{c}"),
            };
            path.with_file_name(name)
        })
        .collect()
}

fn write_traces(results: &[CompletionResult], path: &Path) -> CliResult<()> {
    for (res, p) in results.iter().zip(trace_paths(path, results.len())) {
        write_text(&p, &trace_to_csv(&res.trace))?;
    }
    Ok(())
}

fn check_convergence(results: &[CompletionResult], strict: bool, what: &Path) -> CliResult<()> {
    if results.iter().all(|r| r.converged) {
        return Ok(());
    }
    let msg = format!(
        "{}: stopped at maxiter without reaching epsilon",
        what.display()
    );
    if strict {
        return Err(CliError::NotConverged(msg));
    }
    warn!("{msg}");
    Ok(())
}

pub fn complete(args: &CompleteArgs) -> CliResult<()> {
    let cfg = build_config(&args.solver)?;
    let image = load_input(&args.input, &args.solver, &cfg)?;
    let mask = match &args.mask {
        Some(path) => load_mask(path, &image)?,
        None => splic::generate_mask(image.rows(), image.cols(), cfg.anchor_fraction, cfg.seed)?,
    };
    let results = complete_channels(image.channels(), &mask, &cfg)?;
    info!(
        "completed {} in {} iterations",
        args.input.display(),
        results.iter().map(|r| r.iterations).max().unwrap_or(0)
    );
    write_output(&results, &args.output, &cfg)?;
    if let Some(trace) = &args.trace {
        write_traces(&results, trace)?;
    }
    check_convergence(&results, args.solver.strict, &args.input)
}

fn defend_image(
    input: &Path,
    mask: Option<&Path>,
    solver: &SolverArgs,
    cfg: &SplicConfig,
) -> CliResult<Vec<CompletionResult>> {
    let image = load_input(input, solver, cfg)?;
    match mask {
        Some(path) => {
            let mask = load_mask(path, &image)?;
            image
                .channels()
                .iter()
                .map(|p| Ok(splic_alternated_with_mask(p, &mask, cfg)?))
                .collect()
        }
        None => Ok(alternate_channels(image.channels(), cfg)?),
    }
}

pub fn defend(args: &DefendArgs) -> CliResult<()> {
    let cfg = build_config(&args.solver)?;
    if args.batch {
        return defend_batch(args, &cfg);
    }
    let results = defend_image(&args.input, args.mask.as_deref(), &args.solver, &cfg)?;
    write_output(&results, &args.output, &cfg)?;
    if let Some(trace) = &args.trace {
        write_traces(&results, trace)?;
    }
    check_convergence(&results, args.solver.strict, &args.input)
}

fn is_image_file(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("pgm" | "ppm" | "pnm")
    )
}

struct BatchItem {
    name: String,
    psnr_input: Option<f64>,
    psnr_output: Option<f64>,
    converged: bool,
}

fn defend_batch(args: &DefendArgs, cfg: &SplicConfig) -> CliResult<()> {
    let dir = &args.input;
    let entries =
        std::fs::read_dir(dir).map_err(|e| CliError::Invalid(format!("{}: {e}", dir.display())))?;
    let mut inputs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_image_file(p))
        .collect();
    inputs.sort();
    if inputs.is_empty() {
        return Err(CliError::Invalid(format!(
            "{}: no .pgm/.ppm/.pnm files",
            dir.display()
        )));
    }
    std::fs::create_dir_all(&args.output)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", args.output.display())))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(usize::from(args.jobs))
        .build()
        .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
    let items: Vec<CliResult<BatchItem>> = pool.install(|| {
        inputs
            .par_iter()
            .map(|input| defend_one(input, args, cfg))
            .collect()
    });
    let items: Vec<BatchItem> = items.into_iter().collect::<CliResult<_>>()?;

    if args.reference_dir.is_some() {
        let mut csv = String::from("file,psnr_input_db,psnr_output_db\n");
        for item in &items {
            let show = |v: Option<f64>| v.map(format_psnr).unwrap_or_default();
            csv.push_str(&format!(
                "{},{},{}\n",
                item.name,
                show(item.psnr_input),
                show(item.psnr_output)
            ));
        }
        write_text(args.output.join("summary.csv"), &csv)?;
    }

    let stalled: Vec<&str> = items
        .iter()
        .filter(|i| !i.converged)
        .map(|i| i.name.as_str())
        .collect();
    if !stalled.is_empty() {
        let msg = format!(
            "stopped at maxiter without reaching epsilon: {}",
            stalled.join(", ")
        );
        if args.solver.strict {
            return Err(CliError::NotConverged(msg));
        }
        warn!("{msg}");
    }
    Ok(())
}

fn defend_one(input: &Path, args: &DefendArgs, cfg: &SplicConfig) -> CliResult<BatchItem> {
    let name = input
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let results = defend_image(input, args.mask.as_deref(), &args.solver, cfg)?;
    write_output(&results, &args.output.join(&name), cfg)?;
    info!("defended {name}");

    let (mut psnr_input, mut psnr_output) = (None, None);
    if let Some(refs) = &args.reference_dir {
        let reference = read_image(refs.join(&name))?;
        let corrupted = load_input(input, &args.solver, cfg)?;
        let outputs: Vec<ImageMatrix> = results
            .iter()
            .map(|r| r.completed.clamp(0.0, 1.0))
            .collect();
        psnr_input = Some(psnr_channels(
            corrupted.channels(),
            reference.channels(),
            1.0,
        )?);
        psnr_output = Some(psnr_channels(&outputs, reference.channels(), 1.0)?);
    }
    Ok(BatchItem {
        name,
        psnr_input,
        psnr_output,
        converged: results.iter().all(|r| r.converged),
    })
}

pub fn compare(args: &CompareArgs) -> CliResult<()> {
    let cfg = build_config(&args.solver)?;
    let corrupt = require_gray(load_input(&args.input, &args.solver, &cfg)?, &args.input)?;
    let clean = require_gray(read_image(&args.reference)?, &args.reference)?;
    if args.fractions.is_empty() {
        return Err(CliError::Invalid(
            "at least one fraction is required".into(),
        ));
    }
    let sweep = fraction_sweep(
        &clean,
        &corrupt,
        &args.fractions,
        cfg.seed,
        &cfg,
        &BaselineParams::default(),
    )?;
    let csv = sweep.to_csv();
    match &args.output {
        Some(path) => write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

pub fn rank_sweep_cmd(args: &RankSweepArgs) -> CliResult<()> {
    let mut cfg = build_config(&args.solver)?;
    if let Some(&bad) = args.ranks.iter().find(|&&r| r == 0) {
        return Err(CliError::Invalid(format!(
            "target rank must be >= 1, got {bad}"
        )));
    }
    let x = require_gray(load_input(&args.input, &args.solver, &cfg)?, &args.input)?;
    for &r in &args.ranks {
        SplicConfig {
            r: Some(r),
            ..cfg.clone()
        }
        .rank_for(x.rows(), x.cols())?;
    }
    let mask = splic::generate_mask(x.rows(), x.cols(), cfg.anchor_fraction, cfg.seed)?;
    let rows = rank_sweep(&x, &mask, &cfg, &args.ranks)?;

    std::fs::create_dir_all(&args.output_dir)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", args.output_dir.display())))?;
    for row in &rows {
        cfg.r = Some(row.rank);
        let path = args.output_dir.join(format!("rank_{}.pgm", row.rank));
        let comment = provenance(&cfg);
        let image = Image::gray(row.estimate.clamp(0.0, 1.0));
        write_image(&image, path, Encoding::Binary, 255, Some(&comment))?;
    }
    write_text(args.output_dir.join("ranks.csv"), &rank_sweep_csv(&rows))?;
    if args.solver.strict && rows.iter().any(|r| !r.converged) {
        return Err(CliError::NotConverged(format!(
            "{}: stopped at maxiter without reaching epsilon",
            args.input.display()
        )));
    }
    Ok(())
}
