//! Monte Carlo harness: seeded per-trial streams, channel sweeps, paired
//! comparisons and CSV/JSON output.
//!
//! Trial `t` of point `p` draws from `ChaCha8Rng::seed_from_u64(master)`
//! on stream `(p << 40) | t`: first the message bits, then the channel.
//! Results therefore do not depend on the worker count or on scheduling.

mod config;
mod emit;
mod stats;

pub use config::{
    ChannelConfig, CodeConfig, DecoderConfig, ExperimentConfig, OsdName, ReferenceName, TrialsConfig,
};
pub use emit::{emit, emit_paired, Format, CSV_HEADER};
pub use stats::{interpolate_crossing, mcnemar_exact, paired_difference, wilson_interval};

use crate::bec::{brute_force_ml_bec, ml_decode_bec_with, peel_bp, transmit_bec, ErasureWord, Variant};
use crate::bp_awgn::{cbp_decode_on, channel_llr, ebn0_to_sigma, final_stage_permutations, select_branch};
use crate::bp_awgn::{transmit_awgn, BpConfig, CbpOutput};
use crate::osd::{osd_from_branches, OsdCode};
use crate::pcm::{ArtifactError, PrunedPcm};
use crate::polar::sc_decode;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::ops::Range;
use std::path::PathBuf;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("artifact not found: {}", .0.display())]
    MissingArtifact(PathBuf),
    #[error("artifact: {0}")]
    Artifact(#[from] ArtifactError),
    #[error("configs differ in {0}; paired comparison needs the same code, channel and seed")]
    ConfigMismatch(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Trials per scheduling chunk; target-error stopping is checked between
/// chunks.
pub const CHUNK: u64 = 256;

/// The code, its pruned PCM (with CRC rows) and the dense PCM.
pub fn prepare_code(cfg: &CodeConfig) -> Result<OsdCode, SimError> {
    let spec = cfg.build_spec()?;
    let Some(path) = &cfg.artifact else {
        return Ok(OsdCode::new(spec, &cfg.prune));
    };
    if !path.exists() {
        return Err(SimError::MissingArtifact(path.clone()));
    }
    let pcm = PrunedPcm::load(path)?;
    if pcm.log_n() != spec.polar.log_n() || pcm.k() != spec.polar.k() || pcm.r_crc() != spec.crc.r() {
        return Err(SimError::InvalidConfig(format!(
            "artifact is for N = {}, K = {}, r = {}; code is N = {}, K = {}, r = {}",
            pcm.block_len(),
            pcm.k(),
            pcm.r_crc(),
            spec.block_len(),
            spec.polar.k(),
            spec.crc.r()
        )));
    }
    // the artifact must describe this frozen set
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..4 {
        let msg: Vec<u8> = (0..spec.dimension()).map(|_| rng.random_range(0..2)).collect();
        let (info, _) = spec.encode(&msg).expect("message length matches");
        let u = spec.polar.embed(&info).expect("info length matches");
        if pcm.matrix().mul_vec(&pcm.assignment_for_input(&u)).iter().any(|&b| b != 0) {
            return Err(SimError::InvalidConfig("artifact does not match the code's frozen set".into()));
        }
    }
    Ok(OsdCode::with_pcm(spec, pcm))
}

/// What one decoder did on one trial.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub frame_error: bool,
    /// Message-bit errors.
    pub bit_errors: usize,
    /// Reference variables (BEC ML), or the mean over OSD branches.
    pub n_r: f64,
    pub n_e: f64,
    /// Triangulation (BEC) or OSD ran, i.e. BP alone did not finish.
    pub stage_ran: bool,
    /// BP iterations summed over branches.
    pub iterations: usize,
    /// Bit XORs (BEC ML) or stage-4 row additions (OSD).
    pub xors: usize,
}

fn trial_rng(master: u64, point: usize, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((point as u64) << 40) | trial);
    rng
}

/// Runs every decoder on the same transmitted word and channel output.
/// CBP branches are shared between decoders with the same list and BP
/// settings.
pub fn decode_trial(
    code: &OsdCode,
    channel: &ChannelConfig,
    point: usize,
    decoders: &[DecoderConfig],
    master: u64,
    trial: u64,
) -> Vec<TrialOutcome> {
    let spec = &code.spec;
    let mut rng = trial_rng(master, point, trial);
    let msg: Vec<u8> = (0..spec.dimension()).map(|_| rng.random_range(0..2)).collect();
    let (_, c) = spec.encode(&msg).expect("message length matches");
    let x = channel.points()[point];
    let finish = |decoded: &[u8], mut out: TrialOutcome| {
        out.frame_error = decoded != c.as_slice();
        if out.frame_error {
            let got = spec.message_of(decoded);
            out.bit_errors = got.iter().zip(&msg).filter(|(a, b)| a != b).count();
        }
        out
    };
    match channel {
        ChannelConfig::Bec { .. } => {
            let w = transmit_bec(&c, x, &mut rng);
            let hard: Vec<u8> = w.values.clone();
            decoders
                .iter()
                .map(|d| {
                    let (decoded, out) = decode_bec(code, d, &w, hard.clone(), trial);
                    finish(&decoded, out)
                })
                .collect()
        }
        ChannelConfig::Awgn { .. } => {
            let sigma = ebn0_to_sigma(x, spec.rate());
            let y = transmit_awgn(&c, sigma, &mut rng);
            let mut cache: Vec<((usize, BpConfig), Vec<CbpOutput>)> = Vec::new();
            decoders
                .iter()
                .map(|d| {
                    let (decoded, out) = decode_awgn(code, d, &y, sigma, &mut cache);
                    finish(&decoded, out)
                })
                .collect()
        }
    }
}

fn decode_bec(code: &OsdCode, d: &DecoderConfig, w: &ErasureWord, hard: Vec<u8>, trial: u64) -> (Vec<u8>, TrialOutcome) {
    let mut out = TrialOutcome::default();
    match d {
        DecoderConfig::MlBec { variant, .. } => {
            let policy = d.reference_policy(trial).expect("ml decoder");
            match ml_decode_bec_with(&code.pcm, w, &policy, *variant) {
                Ok(res) => {
                    out.n_r = res.stats.n_r as f64;
                    out.n_e = res.stats.n_e as f64;
                    out.stage_ran = !res.stats.peeled;
                    out.xors = res.stats.xor_count();
                    (res.codeword.unwrap_or(hard), out)
                }
                Err(_) => (hard, out),
            }
        }
        DecoderConfig::BruteForceBec => match brute_force_ml_bec(&code.dense, w) {
            Ok(res) => (res.codeword.unwrap_or(hard), out),
            Err(_) => (hard, out),
        },
        DecoderConfig::Peel => match peel_bp(&code.pcm, w) {
            Ok((values, known, xors)) => {
                out.xors = xors;
                let cvn = code.pcm.cvn_columns();
                let decoded = cvn.iter().map(|&col| if known[col] { values[col] } else { 0 }).collect();
                (decoded, out)
            }
            Err(_) => (hard, out),
        },
        DecoderConfig::Sc => (sc_decode(&code.spec.polar, &w.llr()).codeword, out),
        _ => unreachable!("validated decoder"),
    }
}

fn decode_awgn(
    code: &OsdCode,
    d: &DecoderConfig,
    y: &[f64],
    sigma: f64,
    cache: &mut Vec<((usize, BpConfig), Vec<CbpOutput>)>,
) -> (Vec<u8>, TrialOutcome) {
    let mut out = TrialOutcome::default();
    let (list, bp) = match d {
        DecoderConfig::Sc => {
            let llr = channel_llr(y, sigma, f64::INFINITY);
            return (sc_decode(&code.spec.polar, &llr).codeword, out);
        }
        DecoderConfig::Cbpl { list, bp } | DecoderConfig::CbplOsd { list, bp, .. } => (*list, bp),
        _ => unreachable!("validated decoder"),
    };
    let key = (list, bp.clone());
    let idx = match cache.iter().position(|(k, _)| *k == key) {
        Some(i) => i,
        None => {
            let llr = channel_llr(y, sigma, bp.llr_clip);
            let branches = final_stage_permutations(code.spec.polar.log_n(), list)
                .iter()
                .map(|p| cbp_decode_on(&code.spec, &llr, p, bp))
                .collect();
            cache.push((key, branches));
            cache.len() - 1
        }
    };
    let branches = &cache[idx].1;
    out.iterations = branches.iter().map(|b| b.iterations_used).sum();
    match d.osd_mode() {
        None => (select_branch(&code.spec, branches.clone(), y).codeword, out),
        Some(mode) => {
            let res = osd_from_branches(code, branches, y, mode);
            out.stage_ran = !res.early_exit;
            if out.stage_ran {
                let nb = res.stats.branch_n_r.len().max(1) as f64;
                out.n_r = res.stats.branch_n_r.iter().sum::<usize>() as f64 / nb;
                out.n_e = out.n_r;
                out.xors = res.stats.residual_row_ops + res.stats.clearing_row_ops;
            }
            (res.codeword, out)
        }
    }
}

/// Runs `trials` of one point on a pool of `workers` threads. Output order
/// follows the trial index.
pub fn run_trials(
    code: &OsdCode,
    channel: &ChannelConfig,
    point: usize,
    decoders: &[DecoderConfig],
    master: u64,
    trials: Range<u64>,
    workers: usize,
) -> Vec<Vec<TrialOutcome>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        trials
            .into_par_iter()
            .map(|t| decode_trial(code, channel, point, decoders, master, t))
            .collect()
    })
}

/// Statistics of one channel point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub point: f64,
    pub trials: u64,
    pub errors: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub fer: f64,
    pub fer_ci_lo: f64,
    pub fer_ci_hi: f64,
    /// Mean `n_r` over all trials.
    pub avg_nr_all: f64,
    /// Mean `n_r` over trials where triangulation or OSD ran.
    pub avg_nr_cond: f64,
    pub avg_ne: f64,
    pub avg_iters: f64,
    pub avg_xors: f64,
    /// Wall time; not part of the reproducible statistics.
    pub seconds: f64,
}

impl PointRecord {
    pub fn from_outcomes(point: f64, outcomes: &[TrialOutcome], message_bits: usize, seconds: f64) -> Self {
        let n = outcomes.len() as u64;
        let nf = (n.max(1)) as f64;
        let errors = outcomes.iter().filter(|o| o.frame_error).count() as u64;
        let bit_errors: u64 = outcomes.iter().map(|o| o.bit_errors as u64).sum();
        let ran: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.stage_ran).collect();
        let nr_sum: f64 = outcomes.iter().map(|o| o.n_r).sum();
        let (lo, hi) = wilson_interval(errors, n, 1.96);
        PointRecord {
            point,
            trials: n,
            errors,
            bit_errors,
            ber: bit_errors as f64 / (nf * message_bits.max(1) as f64),
            fer: errors as f64 / nf,
            fer_ci_lo: lo,
            fer_ci_hi: hi,
            avg_nr_all: nr_sum / nf,
            avg_nr_cond: if ran.is_empty() { 0.0 } else { nr_sum / ran.len() as f64 },
            avg_ne: outcomes.iter().map(|o| o.n_e).sum::<f64>() / nf,
            avg_iters: outcomes.iter().map(|o| o.iterations as f64).sum::<f64>() / nf,
            avg_xors: outcomes.iter().map(|o| o.xors as f64).sum::<f64>() / nf,
            seconds,
        }
    }

    /// Equality ignoring wall time.
    pub fn same_statistics(&self, other: &PointRecord) -> bool {
        let mut a = self.clone();
        a.seconds = other.seconds;
        a == *other
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub decoder: String,
    pub channel: String,
    pub block_len: usize,
    pub message_len: usize,
    pub master_seed: u64,
    pub points: Vec<PointRecord>,
}

impl ExperimentResult {
    pub fn same_statistics(&self, other: &ExperimentResult) -> bool {
        self.decoder == other.decoder
            && self.channel == other.channel
            && self.block_len == other.block_len
            && self.message_len == other.message_len
            && self.master_seed == other.master_seed
            && self.points.len() == other.points.len()
            && self.points.iter().zip(&other.points).all(|(a, b)| a.same_statistics(b))
    }
}

/// Outcomes of one point under the trial budget.
fn run_point(code: &OsdCode, cfg: &ExperimentConfig, point: usize, decoders: &[DecoderConfig]) -> Vec<Vec<TrialOutcome>> {
    let mut all = Vec::new();
    let mut errors = 0u64;
    let mut done = 0u64;
    while done < cfg.trials.max {
        let end = (done + CHUNK).min(cfg.trials.max);
        let chunk = run_trials(code, &cfg.channel, point, decoders, cfg.master_seed, done..end, cfg.workers);
        errors += chunk.iter().filter(|o| o[0].frame_error).count() as u64;
        all.extend(chunk);
        done = end;
        if cfg.trials.target_errors.is_some_and(|t| errors >= t) {
            break;
        }
    }
    all
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, SimError> {
    cfg.validate()?;
    let code = prepare_code(&cfg.code)?;
    run_experiment_on(&code, cfg)
}

/// As [`run_experiment`], with the code already prepared.
pub fn run_experiment_on(code: &OsdCode, cfg: &ExperimentConfig) -> Result<ExperimentResult, SimError> {
    cfg.validate()?;
    check_list(code, &cfg.decoder)?;
    let decoders = [cfg.decoder.clone()];
    let mut points = Vec::new();
    for (i, &x) in cfg.channel.points().iter().enumerate() {
        let start = Instant::now();
        let outcomes: Vec<TrialOutcome> = run_point(code, cfg, i, &decoders).into_iter().map(|mut v| v.remove(0)).collect();
        points.push(PointRecord::from_outcomes(x, &outcomes, code.spec.dimension(), start.elapsed().as_secs_f64()));
    }
    Ok(ExperimentResult {
        decoder: cfg.decoder.name(),
        channel: channel_name(&cfg.channel),
        block_len: code.spec.block_len(),
        message_len: code.spec.dimension(),
        master_seed: cfg.master_seed,
        points,
    })
}

fn check_list(code: &OsdCode, d: &DecoderConfig) -> Result<(), SimError> {
    if let DecoderConfig::Cbpl { list, .. } | DecoderConfig::CbplOsd { list, .. } = d {
        let max = crate::bp_awgn::max_list_size(code.spec.polar.log_n());
        if *list > max {
            return Err(SimError::InvalidConfig(format!("list size {list} exceeds the {max} available graphs")));
        }
    }
    Ok(())
}

fn channel_name(c: &ChannelConfig) -> String {
    match c {
        ChannelConfig::Bec { .. } => "bec".into(),
        ChannelConfig::Awgn { .. } => "awgn".into(),
    }
}

/// Paired outcome counts of two decoders at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedPoint {
    pub point: f64,
    pub trials: u64,
    pub errors_a: u64,
    pub errors_b: u64,
    /// Trials failed by `a` only.
    pub only_a: u64,
    /// Trials failed by `b` only.
    pub only_b: u64,
    pub fer_a: f64,
    pub fer_b: f64,
    /// `FER_b − FER_a` with a 95% interval.
    pub delta: f64,
    pub delta_ci_lo: f64,
    pub delta_ci_hi: f64,
    /// Exact McNemar p-value.
    pub p_value: f64,
}

impl PairedPoint {
    pub fn from_pairs(point: f64, pairs: &[(bool, bool)]) -> Self {
        let n = pairs.len() as u64;
        let count = |f: &dyn Fn(&(bool, bool)) -> bool| pairs.iter().filter(|p| f(p)).count() as u64;
        let errors_a = count(&|p| p.0);
        let errors_b = count(&|p| p.1);
        let only_a = count(&|p| p.0 && !p.1);
        let only_b = count(&|p| !p.0 && p.1);
        let (delta, lo, hi) = paired_difference(only_a, only_b, n, 1.96);
        let nf = n.max(1) as f64;
        PairedPoint {
            point,
            trials: n,
            errors_a,
            errors_b,
            only_a,
            only_b,
            fer_a: errors_a as f64 / nf,
            fer_b: errors_b as f64 / nf,
            delta,
            delta_ci_lo: lo,
            delta_ci_hi: hi,
            p_value: mcnemar_exact(only_a, only_b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedReport {
    pub decoder_a: String,
    pub decoder_b: String,
    pub points: Vec<PairedPoint>,
}

/// Runs both decoders on identical noise. Code, channel and seed must
/// agree; the trial budget is taken from `a`, with target-error stopping
/// on `a`'s errors.
pub fn paired_compare(a: &ExperimentConfig, b: &ExperimentConfig) -> Result<PairedReport, SimError> {
    a.validate()?;
    b.validate()?;
    if a.code != b.code {
        return Err(SimError::ConfigMismatch("code"));
    }
    if a.channel != b.channel {
        return Err(SimError::ConfigMismatch("channel"));
    }
    if a.master_seed != b.master_seed {
        return Err(SimError::ConfigMismatch("master_seed"));
    }
    let code = prepare_code(&a.code)?;
    check_list(&code, &a.decoder)?;
    check_list(&code, &b.decoder)?;
    let decoders = [a.decoder.clone(), b.decoder.clone()];
    let points = a
        .channel
        .points()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let out = run_point(&code, a, i, &decoders);
            let pairs: Vec<(bool, bool)> = out.iter().map(|o| (o[0].frame_error, o[1].frame_error)).collect();
            PairedPoint::from_pairs(x, &pairs)
        })
        .collect();
    Ok(PairedReport {
        decoder_a: a.decoder.name(),
        decoder_b: b.decoder.name(),
        points,
    })
}

impl From<Variant> for DecoderConfig {
    fn from(variant: Variant) -> Self {
        DecoderConfig::MlBec {
            reference: ReferenceName::MinUnknown,
            batch: 1,
            variant,
        }
    }
}

#[cfg(test)]
mod tests;
