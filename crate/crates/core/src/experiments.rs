//! Synthetic data, Gaussian-mixture noise, error metrics and Monte-Carlo runs.
//!
//! Every random draw comes from an explicitly seeded ChaCha8 generator. Trial
//! seeds are derived from a master seed with [`derive_seed`]: the ground truth
//! is drawn once per sweep, the mask, noise and factor initialisation once per
//! trial, and all solvers in a trial share them.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::solver::{solve, ObservationMask, SolverConfig, SolverKind, Termination};
use crate::tensor::{t_product, Tensor3};
use crate::{Error, Result};

/// Two-component Gaussian mixture `(1 - c) N(0, var_a) + c N(0, var_b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Probability of drawing from the outlier component `B`.
    pub c: f64,
    pub var_a: f64,
    pub var_b: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn none() -> Self {
        NoiseModel {
            c: 0.0,
            var_a: 0.0,
            var_b: 0.0,
            seed: 0,
        }
    }

    pub fn gaussian(var: f64, seed: u64) -> Self {
        NoiseModel {
            c: 0.0,
            var_a: var,
            var_b: 0.0,
            seed,
        }
    }

    pub fn gmm(c: f64, var_a: f64, var_b: f64, seed: u64) -> Self {
        NoiseModel { c, var_a, var_b, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.c) {
            return Err(Error::param("c", format!("must lie in [0, 1], got {}", self.c)));
        }
        for (name, v) in [("var_a", self.var_a), ("var_b", self.var_b)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Purpose of a derived seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedRole {
    Truth = 1,
    Mask = 2,
    Noise = 3,
    Init = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(splitmix64(master) ^ trial) ^ role)`.
pub fn derive_seed(master: u64, trial: u64, role: SeedRole) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ trial) ^ role as u64)
}

/// `A * B` with i.i.d. standard normal `A: n1 x r x n3` and `B: r x n2 x n3`.
pub fn gen_low_tubal_rank(n1: usize, n2: usize, n3: usize, r: usize, seed: u64) -> Result<Tensor3> {
    let max = n1.min(n2);
    if r == 0 || r > max {
        return Err(Error::RankOutOfRange { rank: r, max });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |_, _, _| StandardNormal.sample(&mut rng);
    let a = Tensor3::from_fn(n1, r, n3, &mut draw);
    let b = Tensor3::from_fn(r, n2, n3, &mut draw);
    t_product(&a, &b)
}

/// Uniformly chosen set of exactly `round(p n1 n2 n3)` observed entries.
pub fn sample_mask(n1: usize, n2: usize, n3: usize, p: f64, seed: u64) -> Result<ObservationMask> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param("p", format!("must lie in (0, 1], got {p}")));
    }
    let total = Tensor3::zeros(n1, n2, n3).len();
    let count = (libm::round(p * total as f64) as usize).min(total);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = sample(&mut rng, total, count).into_vec();
    Ok(ObservationMask::from_offsets(n1, n2, n3, &picked))
}

/// Add mixture noise to the observed entries of `m`.
pub fn add_gmm_noise(m: &Tensor3, mask: &ObservationMask, noise: &NoiseModel) -> Result<Tensor3> {
    Ok(add_gmm_noise_labeled(m, mask, noise)?.0)
}

/// As [`add_gmm_noise`], also returning for every observed entry (in
/// [`ObservationMask::indices`] order) whether it was drawn from component `B`.
pub fn add_gmm_noise_labeled(
    m: &Tensor3,
    mask: &ObservationMask,
    noise: &NoiseModel,
) -> Result<(Tensor3, Vec<bool>)> {
    noise.validate()?;
    mask.check_dims("add_gmm_noise", m)?;
    let sd_a = libm::sqrt(noise.var_a);
    let sd_b = libm::sqrt(noise.var_b);
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut out = m.clone();
    let data = out.as_mut_slice();
    let mut labels = Vec::with_capacity(mask.count());
    for &o in mask.offsets() {
        let outlier = rng.random_bool(noise.c);
        let z: f64 = StandardNormal.sample(&mut rng);
        data[o] += if outlier { sd_b } else { sd_a } * z;
        labels.push(outlier);
    }
    Ok((out, labels))
}

/// `||est - truth||_F / ||truth||_F`.
pub fn rel_err(est: &Tensor3, truth: &Tensor3) -> Result<f64> {
    est.same_dims("rel_err", truth)?;
    let denom = truth.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::ZeroNormTruth);
    }
    Ok(est.sub(truth)?.frobenius_norm() / denom)
}

/// `10 log10(i_max^2 n1 n2 n3 / ||est - truth||_F^2)`, `+inf` for an exact match.
pub fn psnr(est: &Tensor3, truth: &Tensor3, i_max: f64) -> Result<f64> {
    est.same_dims("psnr", truth)?;
    if !(i_max > 0.0 && i_max.is_finite()) {
        return Err(Error::param("i_max", format!("must be positive, got {i_max}")));
    }
    let err: f64 = est
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * libm::log10(i_max * i_max * truth.len() as f64 / err))
}

/// One solver configuration inside a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverRun {
    pub kind: SolverKind,
    pub config: SolverConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub dims: (usize, usize, usize),
    pub true_rank: usize,
    /// Observation fraction `p`.
    pub fraction: f64,
    /// Noise model; its seed is replaced per trial.
    pub noise: NoiseModel,
    /// Solvers run on every trial; their seeds are replaced per trial.
    pub solvers: Vec<SolverRun>,
    pub trials: usize,
    pub master_seed: u64,
    /// Peak value for PSNR; `max |M|` when absent.
    pub i_max: Option<f64>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let (n1, n2, n3) = self.dims;
        if n1 == 0 || n2 == 0 || n3 == 0 {
            return Err(Error::InvalidDims {
                n1,
                n2,
                n3,
                reason: "all dimensions must be positive",
            });
        }
        if self.true_rank == 0 || self.true_rank > n1.min(n2) {
            return Err(Error::RankOutOfRange {
                rank: self.true_rank,
                max: n1.min(n2),
            });
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::param(
                "p",
                format!("must lie in (0, 1], got {}", self.fraction),
            ));
        }
        if self.trials == 0 {
            return Err(Error::param("trials", "must be at least 1"));
        }
        if self.solvers.is_empty() {
            return Err(Error::param("solvers", "at least one solver is required"));
        }
        self.noise.validate()
    }
}

/// Metrics of one successful solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub rel_err: f64,
    pub psnr: f64,
    pub iterations: usize,
    pub seconds: f64,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    /// Index into [`ExperimentSpec::solvers`].
    pub run: usize,
    pub solver: SolverKind,
    pub rank: usize,
    pub outcome: core::result::Result<TrialOutcome, Error>,
}

/// Aggregates over the successful trials of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub run: usize,
    pub solver: SolverKind,
    pub rank: usize,
    pub successes: usize,
    pub failures: usize,
    pub mean_rel_err: Option<f64>,
    pub median_rel_err: Option<f64>,
    /// Mean over trials with finite PSNR.
    pub mean_psnr: Option<f64>,
    pub mean_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub i_max: f64,
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<RunSummary>,
}

impl MetricsReport {
    pub fn summary(&self, run: usize) -> Option<&RunSummary> {
        self.summaries.iter().find(|s| s.run == run)
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| sorted(v.to_vec()).iter().sum::<f64>() / v.len() as f64)
}

/// Median with the midpoint rule for even counts.
pub fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let s = sorted(v.to_vec());
    let n = s.len();
    Some(if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    })
}

/// Run every solver of `spec` on `spec.trials` independent draws of mask,
/// noise and initialisation. Solver failures are recorded, not propagated.
pub fn run_monte_carlo(spec: &ExperimentSpec) -> Result<MetricsReport> {
    spec.validate()?;
    let (n1, n2, n3) = spec.dims;
    let truth = gen_low_tubal_rank(
        n1,
        n2,
        n3,
        spec.true_rank,
        derive_seed(spec.master_seed, 0, SeedRole::Truth),
    )?;
    let i_max = match spec.i_max {
        Some(v) => v,
        None => truth.max_abs(),
    };
    let mut records = Vec::with_capacity(spec.trials * spec.solvers.len());
    for trial in 0..spec.trials {
        let t = trial as u64;
        let mask = sample_mask(n1, n2, n3, spec.fraction, derive_seed(spec.master_seed, t, SeedRole::Mask))?;
        let noise = NoiseModel {
            seed: derive_seed(spec.master_seed, t, SeedRole::Noise),
            ..spec.noise
        };
        let observed = add_gmm_noise(&truth, &mask, &noise)?.hadamard(mask.indicator())?;
        let init_seed = derive_seed(spec.master_seed, t, SeedRole::Init);
        for (run, sr) in spec.solvers.iter().enumerate() {
            let config = SolverConfig {
                seed: init_seed,
                ..sr.config
            };
            let outcome = solve(sr.kind, &observed, &mask, &config).and_then(|rep| {
                Ok(TrialOutcome {
                    rel_err: rel_err(&rep.estimate, &truth)?,
                    psnr: psnr(&rep.estimate, &truth, i_max)?,
                    iterations: rep.iterations,
                    seconds: rep.wall_time,
                    termination: rep.termination,
                })
            });
            records.push(TrialRecord {
                trial,
                run,
                solver: sr.kind,
                rank: sr.config.rank,
                outcome,
            });
        }
    }
    let summaries = spec
        .solvers
        .iter()
        .enumerate()
        .map(|(run, sr)| {
            let ok: Vec<TrialOutcome> = records
                .iter()
                .filter(|r| r.run == run)
                .filter_map(|r| r.outcome.as_ref().ok().copied())
                .collect();
            let errs: Vec<f64> = ok.iter().map(|o| o.rel_err).collect();
            let psnrs: Vec<f64> = ok.iter().map(|o| o.psnr).filter(|p| p.is_finite()).collect();
            let secs: Vec<f64> = ok.iter().map(|o| o.seconds).collect();
            RunSummary {
                run,
                solver: sr.kind,
                rank: sr.config.rank,
                successes: ok.len(),
                failures: spec.trials - ok.len(),
                mean_rel_err: mean(&errs),
                median_rel_err: median(&errs),
                mean_psnr: mean(&psnrs),
                mean_seconds: mean(&secs),
            }
        })
        .collect();
    Ok(MetricsReport {
        i_max,
        records,
        summaries,
    })
}
