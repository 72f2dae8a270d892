use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::VaeConfig;
use super::elbo::{elbo, elbo_and_grads, Noise};
use super::model::Vae;
use crate::autodiff::{adam_step, AdamConfig, AdamState};
use crate::data::{save_checkpoint, Batches, BinarizedDataset};
use crate::error::{Error, Result};

pub const METRICS_HEADER: &str = "epoch,split,elbo,recon,kl,wall_seconds";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub split: String,
    pub elbo: f64,
    pub recon: f64,
    pub kl: f64,
    pub wall_seconds: f64,
}

impl EpochMetrics {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{:.3}",
            self.epoch, self.split, self.elbo, self.recon, self.kl, self.wall_seconds
        )
    }
}

/// Everything needed to resume training bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub model: Vae,
    pub adam: AdamState,
    /// Completed epochs.
    pub epoch: usize,
    /// Completed optimizer steps.
    pub step: usize,
    pub rng: ChaCha8Rng,
    pub history: Vec<EpochMetrics>,
}

impl TrainState {
    pub fn new(config: VaeConfig) -> Result<Self> {
        let (model, rng) = Vae::new(config)?;
        let adam = AdamState::new(
            AdamConfig {
                lr: model.config.lr,
                ..AdamConfig::default()
            },
            &model.params,
        );
        Ok(TrainState {
            model,
            adam,
            epoch: 0,
            step: 0,
            rng,
            history: Vec::new(),
        })
    }

    pub fn config(&self) -> &VaeConfig {
        &self.model.config
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// Where checkpoints go; none are written when unset.
    pub checkpoint_dir: Option<PathBuf>,
    /// Checkpoint period in epochs; the final epoch is always saved.
    pub checkpoint_every: usize,
    /// Metrics CSV, appended to (header written when the file is new).
    pub metrics_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElboSummary {
    pub elbo: f64,
    pub recon: f64,
    pub kl: f64,
}

/// Mean single-sample ELBO over a dataset in fixed order.
pub fn evaluate_elbo(model: &Vae, data: &BinarizedDataset, seed: u64) -> Result<ElboSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut e, mut r, mut k) = (0.0, 0.0, 0.0);
    for idx in Batches::new((0..data.count).collect(), model.config.batch_size)? {
        let t = elbo(model, &data.batch(&idx), Noise::Random(&mut rng))?;
        let n = idx.len() as f64;
        e += t.elbo * n;
        r += t.recon * n;
        k += t.kl * n;
    }
    let n = data.count as f64;
    Ok(ElboSummary {
        elbo: e / n,
        recon: r / n,
        kl: k / n,
    })
}

pub fn checkpoint_path(dir: &Path, epoch: usize) -> PathBuf {
    dir.join(format!("checkpoint-{epoch:04}.gmvae"))
}

fn append_metrics(path: &Path, rows: &[EpochMetrics]) -> Result<()> {
    let fresh = !path.exists();
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    if fresh {
        text.push_str(METRICS_HEADER);
        text.push('\n');
    }
    for r in rows {
        text.push_str(&r.csv_line());
        text.push('\n');
    }
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

fn abort(state: &TrainState, detail: String, last: &Option<PathBuf>) -> Error {
    Error::TrainingAborted {
        epoch: state.epoch + 1,
        step: state.step,
        detail,
        last_checkpoint: last.clone(),
    }
}

/// One pass over `data` in a fresh shuffled order.
pub fn train_epoch(
    state: &mut TrainState,
    data: &BinarizedDataset,
    last_ckpt: &Option<PathBuf>,
) -> Result<EpochMetrics> {
    let start = Instant::now();
    let mut order: Vec<usize> = (0..data.count).collect();
    order.shuffle(&mut state.rng);
    let (mut e, mut r, mut k) = (0.0, 0.0, 0.0);
    for idx in Batches::new(order, state.model.config.batch_size)? {
        let x = data.batch(&idx);
        let (terms, grads) = match elbo_and_grads(&state.model, &x, Noise::Random(&mut state.rng)) {
            Ok(v) => v,
            Err(err @ (Error::NonFinite { .. } | Error::Domain { .. })) => {
                return Err(abort(state, err.to_string(), last_ckpt));
            }
            Err(err) => return Err(err),
        };
        if let Some(bad) = grads.iter().position(|g| !g.all_finite()) {
            let name = &state.model.params.names()[bad];
            return Err(abort(
                state,
                format!("non-finite gradient in {name}"),
                last_ckpt,
            ));
        }
        adam_step(&mut state.adam, &mut state.model.params, &grads)?;
        state.step += 1;
        let n = idx.len() as f64;
        e += terms.elbo * n;
        r += terms.recon * n;
        k += terms.kl * n;
    }
    let n = data.count as f64;
    state.epoch += 1;
    Ok(EpochMetrics {
        epoch: state.epoch,
        split: "train".into(),
        elbo: e / n,
        recon: r / n,
        kl: k / n,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Trains until `config.epochs` epochs are complete. After each epoch a
/// `train` row (and a `test` row when `test` is given) is recorded.
pub fn train(
    state: &mut TrainState,
    data: &BinarizedDataset,
    test: Option<&BinarizedDataset>,
    opts: &TrainOptions,
) -> Result<()> {
    if data.dim != state.model.config.input_dim {
        return Err(Error::shape(
            "train",
            state.model.config.input_dim,
            data.dim,
        ));
    }
    if state.step == 0 {
        state.model.init_output_bias(&data.pixel_mean())?;
    }
    let mut last_ckpt: Option<PathBuf> = None;
    if let Some(dir) = &opts.checkpoint_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    while state.epoch < state.model.config.epochs {
        let mut rows = vec![train_epoch(state, data, &last_ckpt)?];
        if let Some(t) = test {
            let start = Instant::now();
            let s = evaluate_elbo(
                &state.model,
                t,
                state.model.config.seed ^ state.epoch as u64,
            )?;
            rows.push(EpochMetrics {
                epoch: state.epoch,
                split: "test".into(),
                elbo: s.elbo,
                recon: s.recon,
                kl: s.kl,
                wall_seconds: start.elapsed().as_secs_f64(),
            });
        }
        if let Some(path) = &opts.metrics_csv {
            append_metrics(path, &rows)?;
        }
        state.history.extend(rows);
        let last_epoch = state.epoch == state.model.config.epochs;
        let due = opts.checkpoint_every > 0 && state.epoch.is_multiple_of(opts.checkpoint_every);
        if let (Some(dir), true) = (&opts.checkpoint_dir, due || last_epoch) {
            let path = checkpoint_path(dir, state.epoch);
            save_checkpoint(state, &path)?;
            last_ckpt = Some(path);
        }
    }
    Ok(())
}
