//! The `gmvae` command line. Exit codes: 0 success, 2 when a checked
//! criterion is not met, 1 on any operational error (including bad flags).

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use config::{sha256_hex, DataSection, RunConfigFile, SEED_ENV};

use crate::autodiff::Tensor;
use crate::data::{load_checkpoint, load_checkpoint_for, write_gmimg, ImageGrid};
use crate::error::{Error, Result};
use crate::hyperbolic::GaussianPoint;
use crate::pgm::{sample, PgmNormalParams};
use crate::sampling::sample_standard_normal;
use crate::stability::{stability_sweep, summarize, write_csv, GridSpec, SweepKind, SweepSummary};
use crate::vae::{
    evaluate_elbo, iwae_log_likelihood, latent_traversal, train, traverse_beta, LatentSample,
    ModelKind, TrainOptions, TrainState, Traversal, Vae,
};
use crate::verify::{verify_isometries, IsometryReport, DEFAULT_CURVATURES, DEFAULT_PAIRS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OPERATIONAL: i32 = 1;
pub const EXIT_CRITERIA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "gmvae",
    version,
    about = "Gaussian Manifold VAE: geometry checks, training and evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distance preservation of the isometries on random point pairs.
    VerifyGeometry {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_CURVATURES.to_vec())]
        curvatures: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_PAIRS)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite/non-finite sweeps for the PGM KL, Poincaré distance and HWN density.
    BenchStability {
        #[arg(long, default_value = "stability.csv")]
        out: PathBuf,
    },
    /// Trains a model described by a run config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Continue from this checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Test-set ELBO and importance-weighted NLL of a checkpoint.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Importance samples per input; defaults to the config's `iwae_k`.
        #[arg(long)]
        iwae_k: Option<usize>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Sampling seed; defaults to the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Geodesic walk in one factor, increasing β with α fixed.
    Traverse {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        factor: usize,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// The walk ends at `β · exp(span)`.
        #[arg(long, default_value_t = 2.0)]
        ln_beta_span: f64,
        /// Run config whose test set supplies the input; without it the walk
        /// starts from the origin `(0, 1)` in every factor.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Decodes draws from the prior.
    SamplePrior {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "prior_samples.gmimg")]
        out: PathBuf,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_OPERATIONAL
            } else {
                EXIT_OK
            };
        }
    };
    match execute(&cli.command, &mut std::io::stdout()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::TrainingAborted {
                last_checkpoint: Some(p),
                ..
            } = &e
            {
                eprintln!("last good checkpoint: {}", p.display());
            }
            EXIT_OPERATIONAL
        }
    }
}

fn out_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

/// Runs one command, writing its report to `out`; returns the exit code.
pub fn execute(cmd: &Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::VerifyGeometry {
            curvatures,
            pairs,
            seed,
            out: path,
        } => cmd_verify_geometry(curvatures, *pairs, *seed, path.as_deref(), out),
        Command::BenchStability { out: path } => cmd_bench_stability(path, out),
        Command::Train { config, resume } => cmd_train(config, resume.as_deref(), out),
        Command::Eval {
            config,
            checkpoint,
            iwae_k,
            threads,
            seed,
            out: path,
        } => cmd_eval(
            config,
            checkpoint,
            *iwae_k,
            *threads,
            *seed,
            path.as_deref(),
            out,
        ),
        Command::Traverse {
            checkpoint,
            factor,
            steps,
            ln_beta_span,
            config,
            index,
            out: dir,
        } => cmd_traverse(
            checkpoint,
            *factor,
            *steps,
            *ln_beta_span,
            config.as_deref(),
            *index,
            dir,
            out,
        ),
        Command::SamplePrior {
            checkpoint,
            n,
            seed,
            out: path,
        } => cmd_sample_prior(checkpoint, *n, *seed, path, out),
    }
}

pub const GEOMETRY_CSV_HEADER: &str =
    "curvature,pairs,gaussian_lorentz,gaussian_poincare,lorentz_poincare";

fn geometry_csv(rows: &[IsometryReport]) -> String {
    let mut s = format!("{GEOMETRY_CSV_HEADER}\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{:e},{:e},{:e}\n",
            r.curvature, r.pairs, r.gaussian_lorentz, r.gaussian_poincare, r.lorentz_poincare
        ));
    }
    s
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn cmd_verify_geometry(
    curvatures: &[f64],
    pairs: usize,
    seed: u64,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    let rows = verify_isometries(curvatures, pairs, seed)?;
    writeln!(
        out,
        "{:>10} {:>16} {:>16} {:>16}",
        "curvature", "G<->L", "G<->P", "L<->P"
    )
    .map_err(out_err)?;
    for r in &rows {
        writeln!(
            out,
            "{:>10} {:>16.3e} {:>16.3e} {:>16.3e}",
            r.curvature, r.gaussian_lorentz, r.gaussian_poincare, r.lorentz_poincare
        )
        .map_err(out_err)?;
    }
    if let Some(p) = path {
        write_file(p, geometry_csv(&rows).as_bytes())?;
    }
    let ok = rows.iter().all(IsometryReport::passes);
    writeln!(
        out,
        "{}",
        if ok {
            "all routes within 1e-9"
        } else {
            "FAILED: mean |Δd| above 1e-9"
        }
    )
    .map_err(out_err)?;
    Ok(if ok { EXIT_OK } else { EXIT_CRITERIA })
}

/// Default sweeps for every kind, with per-kind summaries.
pub fn run_stability() -> Vec<(SweepKind, Vec<crate::stability::SweepRow>, SweepSummary)> {
    SweepKind::ALL
        .into_iter()
        .map(|k| {
            let rows = stability_sweep(k, &GridSpec::default_for(k));
            let s = summarize(&rows);
            (k, rows, s)
        })
        .collect()
}

pub fn cmd_bench_stability(path: &Path, out: &mut dyn Write) -> Result<i32> {
    let runs = run_stability();
    let mut csv = Vec::new();
    let all: Vec<_> = runs
        .iter()
        .flat_map(|(_, rows, _)| rows.iter().cloned())
        .collect();
    write_csv(&all, &mut csv).map_err(|e| Error::io(path, e))?;
    write_file(path, &csv)?;
    let mut ok = true;
    for (k, _, s) in &runs {
        writeln!(
            out,
            "{k}: {} points, {:.1}% finite, {} non-finite, {} guarded",
            s.total,
            100.0 * s.finite_fraction(),
            s.non_finite,
            s.guarded
        )
        .map_err(out_err)?;
        ok &= match k {
            SweepKind::PgmKl => s.finite == s.total,
            _ => s.non_finite + s.guarded >= 1,
        };
    }
    writeln!(out, "wrote {}", path.display()).map_err(out_err)?;
    Ok(if ok { EXIT_OK } else { EXIT_CRITERIA })
}

pub fn cmd_train(config: &Path, resume: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let cfg = RunConfigFile::load(config)?;
    let train_set = cfg.load_train()?;
    let test_set = cfg.load_test()?;
    let mut state = match resume {
        Some(p) => {
            let mut s = load_checkpoint_for(p, &cfg.model)?;
            // Only the epoch budget may change on resume.
            s.model.config.epochs = cfg.model.epochs;
            s
        }
        None => {
            let m = cfg.metrics_path();
            if m.exists() {
                std::fs::remove_file(&m).map_err(|e| Error::io(&m, e))?;
            }
            TrainState::new(cfg.model.clone())?
        }
    };
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let opts = TrainOptions {
        checkpoint_dir: Some(cfg.checkpoint_dir()),
        checkpoint_every: cfg.checkpoint_every,
        metrics_csv: Some(cfg.metrics_path()),
    };
    let before = state.history.len();
    train(&mut state, &train_set, Some(&test_set), &opts)?;
    for m in &state.history[before..] {
        writeln!(out, "{}", m.csv_line()).map_err(out_err)?;
    }
    writeln!(
        out,
        "trained {} epochs ({} steps); metrics in {}",
        state.epoch,
        state.step,
        cfg.metrics_path().display()
    )
    .map_err(out_err)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EvalReport {
    pub examples: usize,
    pub iwae_k: usize,
    pub nll: f64,
    pub elbo: f64,
    pub recon: f64,
    pub kl: f64,
}

pub fn evaluate(
    model: &Vae,
    test: &crate::data::BinarizedDataset,
    k: usize,
    seed: u64,
    threads: usize,
) -> Result<EvalReport> {
    let x = test.batch(&(0..test.count).collect::<Vec<_>>());
    let ll = iwae_log_likelihood(model, &x, k, seed, threads)?;
    let e = evaluate_elbo(model, test, seed)?;
    Ok(EvalReport {
        examples: test.count,
        iwae_k: k,
        nll: -ll.iter().sum::<f64>() / ll.len() as f64,
        elbo: e.elbo,
        recon: e.recon,
        kl: e.kl,
    })
}

pub fn cmd_eval(
    config: &Path,
    checkpoint: &Path,
    k: Option<usize>,
    threads: usize,
    seed: Option<u64>,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    let cfg = RunConfigFile::load(config)?;
    let state = load_checkpoint_for(checkpoint, &cfg.model)?;
    let test = cfg.load_test()?;
    let report = evaluate(
        &state.model,
        &test,
        k.unwrap_or(cfg.iwae_k),
        seed.unwrap_or(cfg.model.seed),
        threads,
    )?;
    let json = serde_json::to_string_pretty(&report)?;
    writeln!(out, "{json}").map_err(out_err)?;
    if let Some(p) = path {
        write_file(p, json.as_bytes())?;
    }
    Ok(EXIT_OK)
}

/// `(height, width)` for a flat image of `dim` pixels: square when possible.
pub fn image_shape(dim: usize) -> (usize, usize) {
    let s = (dim as f64).sqrt().round() as usize;
    if s * s == dim {
        (s, s)
    } else {
        (1, dim)
    }
}

fn probabilities(logits: &Tensor) -> Vec<f64> {
    logits
        .data()
        .iter()
        .map(|&l| 1.0 / (1.0 + (-l).exp()))
        .collect()
}

pub const TRAVERSE_CSV_HEADER: &str = "step,t,mu,sigma,mean_entropy";

pub fn traversal_csv(tr: &Traversal) -> String {
    let mut s = format!("{TRAVERSE_CSV_HEADER}\n");
    for (i, h) in tr.mean_entropy().iter().enumerate() {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            i, tr.t[i], tr.mu[i], tr.sigma[i], h
        ));
    }
    s
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_traverse(
    checkpoint: &Path,
    factor: usize,
    steps: usize,
    span: f64,
    config: Option<&Path>,
    index: usize,
    dir: &Path,
    out: &mut dyn Write,
) -> Result<i32> {
    let model = match config {
        Some(c) => {
            let cfg = RunConfigFile::load(c)?;
            load_checkpoint_for(checkpoint, &cfg.model)?.model
        }
        None => load_checkpoint(checkpoint)?.model,
    };
    if model.config.kind != ModelKind::Gm {
        return Err(Error::Config("traverse needs a gm model".into()));
    }
    let tr = match config {
        Some(c) => {
            let test = RunConfigFile::load(c)?.load_test()?;
            if index >= test.count {
                return Err(Error::domain(
                    "traverse",
                    format!("index {index} out of range 0..{}", test.count),
                ));
            }
            traverse_beta(&model, &test.batch(&[index]), factor, steps, span)?
        }
        None => {
            let base = LatentSample::origin(1, model.config.n_factors);
            latent_traversal(
                &model,
                &base,
                factor,
                GaussianPoint::new(0.0, span.exp())?,
                steps,
            )?
        }
    };
    let (h, w) = image_shape(model.config.input_dim);
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let img = dir.join("traverse.gmimg");
    write_gmimg(
        &img,
        &ImageGrid::new(steps, h, w, probabilities(&tr.logits))?,
    )?;
    let csv = dir.join("traverse.csv");
    write_file(&csv, traversal_csv(&tr).as_bytes())?;
    writeln!(
        out,
        "{} steps; wrote {} and {}",
        tr.steps(),
        img.display(),
        csv.display()
    )
    .map_err(out_err)?;
    Ok(EXIT_OK)
}

/// Decoder probabilities for `n` prior draws, `[n, input_dim]`.
pub fn sample_prior(model: &Vae, n: usize, seed: u64) -> Result<Tensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = model.config.n_factors;
    let logits = match model.config.kind {
        ModelKind::Gm => {
            let draws = sample(&PgmNormalParams::prior(f, model.curvature()), &mut rng, n);
            let mu = draws.iter().flatten().map(|p| p.mu()).collect();
            let ls = draws.iter().flatten().map(|p| p.sigma().ln()).collect();
            model.decode(&LatentSample::from_ln(n, f, mu, ls)?)?
        }
        ModelKind::Euclidean => {
            let d = model.config.latent_dim();
            let z = (0..n * d)
                .map(|_| sample_standard_normal(&mut rng))
                .collect();
            model.decode_features(&Tensor::matrix(n, d, z)?)?
        }
    };
    Tensor::matrix(n, model.config.input_dim, probabilities(&logits))
}

pub fn cmd_sample_prior(
    checkpoint: &Path,
    n: usize,
    seed: u64,
    path: &Path,
    out: &mut dyn Write,
) -> Result<i32> {
    if n == 0 {
        return Err(Error::domain("sample-prior", "n must be at least 1"));
    }
    let model = load_checkpoint(checkpoint)?.model;
    let p = sample_prior(&model, n, seed)?;
    let (h, w) = image_shape(model.config.input_dim);
    write_gmimg(path, &ImageGrid::new(n, h, w, p.into_data())?)?;
    writeln!(out, "wrote {n} samples to {}", path.display()).map_err(out_err)?;
    Ok(EXIT_OK)
}
