//! Batch driver, verification studies and result writers.
//!
//! Output files carry provenance: JSON-lines results start with a header
//! object `{"schema", "config_hash", "master_seed"}` and every CSV starts with
//! a `# config_hash=...,master_seed=...` comment line followed by the column
//! header. Floats are written in shortest round-trip form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade_sim::{Experiment, TrialObserver};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::lattice::{ball_size, Vertex};
use crate::stopping::StoppingRule;

pub const RESULTS_SCHEMA: &str = "cascade.trial_record/v1";
/// Caps the worker count, whatever the config asks for.
pub const MAX_THREADS_ENV: &str = "CASCADE_MAX_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleDiagnostic {
    pub time: u64,
    pub value: f64,
    pub std_error: f64,
    pub rollouts: usize,
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub source: Vertex,
    pub stop_time: u64,
    /// Posterior mean at the stop time.
    pub estimate: Vec<f64>,
    pub map_estimate: Vertex,
    /// `‖source − estimate‖²`
    pub squared_error: f64,
    /// `|N(stop_time)|`
    pub infection_cost: u64,
    pub total_loss: f64,
    /// Posterior variance after each absorbed frame, `t = 0..=stop_time`.
    pub variance_trajectory: Vec<f64>,
    pub log_normalizer_trajectory: Vec<f64>,
    /// The rule never fired before `t_max`.
    pub truncated: bool,
    pub rule_diagnostics: Vec<RuleDiagnostic>,
}

/// Worker pool sized by `threads` (0 = all cores), capped by
/// [`MAX_THREADS_ENV`] when set.
pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    let cap = match std::env::var(MAX_THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&c| c > 0)
                .ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "{MAX_THREADS_ENV} must be a positive integer, got {v:?}"
                    ))
                })?,
        ),
        Err(_) => None,
    };
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut n = if threads == 0 { available } else { threads };
    if let Some(cap) = cap {
        n = n.min(cap);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))
}

/// Creates an optional observer for a trial id.
pub type ObserverFactory<'a> = dyn Fn(u64) -> Result<Option<Box<dyn TrialObserver>>> + Sync + 'a;

/// Runs trials `0..trials` in parallel; records come back in trial-id order.
pub fn run_batch(exp: &Experiment, trials: u64, master_seed: u64) -> Result<Vec<TrialRecord>> {
    (0..trials)
        .into_par_iter()
        .map(|id| exp.run_trial(id, master_seed, None))
        .collect()
}

pub fn run_batch_observed(
    exp: &Experiment,
    trials: u64,
    master_seed: u64,
    observers: &ObserverFactory<'_>,
) -> Result<Vec<TrialRecord>> {
    (0..trials)
        .into_par_iter()
        .map(|id| {
            let mut obs = observers(id)?;
            let obs = obs.as_mut().map(|b| b.as_mut() as &mut dyn TrialObserver);
            exp.run_trial(id, master_seed, obs)
        })
        .collect()
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn sorted(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs
}

/// Mean and standard error of already sorted values; summing in sorted order
/// makes the result independent of record order.
fn mean_se(sorted: &[f64]) -> (f64, f64) {
    let n = sorted.len() as f64;
    if sorted.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = sorted.iter().sum::<f64>() / n;
    if sorted.len() < 2 {
        return (mean, 0.0);
    }
    let mut dev: Vec<f64> = sorted.iter().map(|x| (x - mean).powi(2)).collect();
    dev.sort_by(f64::total_cmp);
    (mean, (dev.iter().sum::<f64>() / (n - 1.0) / n).sqrt())
}

fn mean_of(xs: Vec<f64>) -> f64 {
    mean_se(&sorted(xs)).0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub trials: u64,
    pub mean_stop_time: f64,
    pub se_stop_time: f64,
    pub quantiles_stop_time: (f64, f64, f64),
    pub mean_squared_error: f64,
    pub mean_infection_cost: f64,
    pub mean_total_loss: f64,
    pub truncation_rate: f64,
    /// Fraction of trials whose MAP vertex is the source.
    pub map_accuracy: f64,
}

impl BatchSummary {
    pub fn from_records(records: &[TrialRecord]) -> Self {
        let stops = sorted(records.iter().map(|r| r.stop_time as f64).collect());
        let (mean_t, se_t) = mean_se(&stops);
        let frac = |pred: &dyn Fn(&TrialRecord) -> bool| {
            if records.is_empty() {
                f64::NAN
            } else {
                records.iter().filter(|r| pred(r)).count() as f64 / records.len() as f64
            }
        };
        BatchSummary {
            trials: records.len() as u64,
            mean_stop_time: mean_t,
            se_stop_time: se_t,
            quantiles_stop_time: (
                quantile(&stops, 0.1),
                quantile(&stops, 0.5),
                quantile(&stops, 0.9),
            ),
            mean_squared_error: mean_of(records.iter().map(|r| r.squared_error).collect()),
            mean_infection_cost: mean_of(records.iter().map(|r| r.infection_cost as f64).collect()),
            mean_total_loss: mean_of(records.iter().map(|r| r.total_loss).collect()),
            truncation_rate: frac(&|r| r.truncated),
            map_accuracy: frac(&|r| r.map_estimate == r.source),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub k: u64,
    pub n: u64,
    pub t_max: u64,
    pub trials: u64,
    pub mean_t: f64,
    pub se_t: f64,
    pub quantiles_t: (f64, f64, f64),
    pub mean_loss: f64,
    pub truncation_rate: f64,
    /// `(log n)^{1/(d+1)}`
    pub predicted_scale: f64,
    pub ratio: f64,
}

impl ScalingRow {
    fn new(d: usize, k: u64, t_max: u64, records: &[TrialRecord]) -> Self {
        let n = ball_size(d, k);
        let s = BatchSummary::from_records(records);
        let predicted_scale = (n as f64).ln().powf(1.0 / (d as f64 + 1.0));
        ScalingRow {
            k,
            n,
            t_max,
            trials: s.trials,
            mean_t: s.mean_stop_time,
            se_t: s.se_stop_time,
            quantiles_t: s.quantiles_stop_time,
            mean_loss: s.mean_total_loss,
            truncation_rate: s.truncation_rate,
            predicted_scale,
            ratio: s.mean_stop_time / predicted_scale,
        }
    }
}

/// `max(ratio) / min(ratio)` over the rows.
pub fn ratio_band(rows: &[ScalingRow]) -> f64 {
    let max = rows
        .iter()
        .map(|r| r.ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    max / min
}

/// One batch per prior radius in `k_grid`, each with its own default `t_max`
/// and lookahead horizon unless the config fixes them.
pub fn scaling_study(
    base: &ExperimentConfig,
    k_grid: &[u64],
    trials: u64,
    master_seed: u64,
) -> Result<Vec<ScalingRow>> {
    if k_grid.is_empty() {
        return Err(Error::config("scaling.k_grid", "must not be empty"));
    }
    if k_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config(
            "scaling.k_grid",
            "must be strictly increasing",
        ));
    }
    let exps = k_grid
        .iter()
        .map(|&k| base.with_prior_radius(k).experiment())
        .collect::<Result<Vec<_>>>()?;
    exps.par_iter()
        .zip(k_grid)
        .map(|(exp, &k)| {
            let records = run_batch(exp, trials, master_seed)?;
            Ok(ScalingRow::new(exp.dim(), k, exp.t_max(), &records))
        })
        .collect()
}

/// Posterior-variance aggregate at one time; `t = -1` is the prior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub t: i64,
    pub mean: f64,
    pub q10: f64,
    pub median: f64,
    pub q90: f64,
    pub prior_variance: f64,
}

/// Per-time variance distribution over full trajectories. Requires a
/// fixed-horizon rule so that no trial stops early.
pub fn variance_transition_profile(
    exp: &Experiment,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<ProfileRow>> {
    let StoppingRule::FixedHorizon(horizon) = *exp.rule() else {
        return Err(Error::InvalidInput(
            "variance profile needs a fixed-horizon rule".into(),
        ));
    };
    let prior_variance = exp.prior()?.variance();
    let records = run_batch(exp, trials, master_seed)?;
    let mut rows = vec![ProfileRow {
        t: -1,
        mean: prior_variance,
        q10: prior_variance,
        median: prior_variance,
        q90: prior_variance,
        prior_variance,
    }];
    for t in 0..=horizon as usize {
        let vs = sorted(
            records
                .iter()
                .filter_map(|r| r.variance_trajectory.get(t).copied())
                .collect(),
        );
        rows.push(ProfileRow {
            t: t as i64,
            mean: mean_se(&vs).0,
            q10: quantile(&vs, 0.1),
            median: quantile(&vs, 0.5),
            q90: quantile(&vs, 0.9),
            prior_variance,
        });
    }
    Ok(rows)
}

/// Exceedance of `|Z(t) − n| > εn` at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZCheckRow {
    pub t: u64,
    pub trials: u64,
    pub exceedances: u64,
    pub frequency: f64,
    /// `4 / (√n ε²)`
    pub bound: f64,
    /// Binomial standard error at the bound.
    pub binomial_se: f64,
    /// `frequency ≤ bound + 3·SE`
    pub within: bool,
}

/// Runs `trials` trajectories to `horizon` and tabulates normalizer
/// deviations for `t = 0..=horizon`.
pub fn normalizer_concentration_check(
    exp: &Experiment,
    eps: f64,
    horizon: u64,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<ZCheckRow>> {
    let n = exp.n() as f64;
    if !(eps.is_finite() && eps >= 1.0 / n.sqrt()) {
        return Err(Error::InvalidInput(format!(
            "eps must be at least 1/sqrt(n) = {}, got {eps}",
            1.0 / n.sqrt()
        )));
    }
    let exp = exp.with_rule(StoppingRule::FixedHorizon(horizon))?;
    if horizon > exp.t_max() {
        return Err(Error::InvalidInput(format!(
            "horizon {horizon} exceeds t_max {}",
            exp.t_max()
        )));
    }
    let records = run_batch(&exp, trials, master_seed)?;
    let bound = 4.0 / (n.sqrt() * eps * eps);
    let p = bound.min(1.0);
    let se = if trials == 0 {
        f64::NAN
    } else {
        (p * (1.0 - p) / trials as f64).sqrt()
    };
    let ln_n = n.ln();
    Ok((0..=horizon)
        .map(|t| {
            let exceedances = records
                .iter()
                .filter(|r| {
                    let z_over_n = (r.log_normalizer_trajectory[t as usize] - ln_n).exp();
                    (z_over_n - 1.0).abs() > eps
                })
                .count() as u64;
            let frequency = exceedances as f64 / trials as f64;
            ZCheckRow {
                t,
                trials,
                exceedances,
                frequency,
                bound,
                binomial_se: se,
                within: frequency <= bound + 3.0 * se,
            }
        })
        .collect())
}

/// Provenance attached to every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub master_seed: u64,
}

impl Provenance {
    pub fn of(cfg: &ExperimentConfig) -> Self {
        Provenance {
            config_hash: cfg.config_hash(),
            master_seed: cfg.master_seed,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Header line, then one [`TrialRecord`] per line.
pub fn write_results_jsonl(path: &Path, prov: &Provenance, records: &[TrialRecord]) -> Result<()> {
    let mut w = create(path)?;
    #[derive(Serialize)]
    struct Header<'a> {
        schema: &'a str,
        #[serde(flatten)]
        prov: &'a Provenance,
    }
    let header = serde_json::to_string(&Header {
        schema: RESULTS_SCHEMA,
        prov,
    })?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{header}").map_err(io)?;
    for r in records {
        writeln!(w, "{}", serde_json::to_string(r)?).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a results file back, skipping the header line.
pub fn read_results_jsonl(path: &Path) -> Result<(Provenance, Vec<TrialRecord>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput(format!("{}: empty results file", path.display())))?;
    let prov: Provenance = serde_json::from_str(header)?;
    let records = lines
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((prov, records))
}

fn write_csv(path: &Path, prov: &Provenance, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(
        w,
        "# config_hash={},master_seed={}",
        prov.config_hash, prov.master_seed
    )
    .map_err(io)?;
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for row in rows {
        writeln!(w, "{}", row.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub const SUMMARY_HEADER: &[&str] = &[
    "trials",
    "mean_T",
    "se_T",
    "q10_T",
    "q50_T",
    "q90_T",
    "mean_squared_error",
    "mean_infection_cost",
    "mean_loss",
    "truncation_rate",
    "map_accuracy",
];

pub fn write_summary_csv(path: &Path, prov: &Provenance, s: &BatchSummary) -> Result<()> {
    let (q10, q50, q90) = s.quantiles_stop_time;
    let row = vec![
        s.trials.to_string(),
        s.mean_stop_time.to_string(),
        s.se_stop_time.to_string(),
        q10.to_string(),
        q50.to_string(),
        q90.to_string(),
        s.mean_squared_error.to_string(),
        s.mean_infection_cost.to_string(),
        s.mean_total_loss.to_string(),
        s.truncation_rate.to_string(),
        s.map_accuracy.to_string(),
    ];
    write_csv(path, prov, SUMMARY_HEADER, &[row])
}

pub const SCALING_HEADER: &[&str] = &[
    "k",
    "n",
    "t_max",
    "trials",
    "mean_T",
    "se_T",
    "q10_T",
    "q50_T",
    "q90_T",
    "mean_loss",
    "truncation_rate",
    "predicted_scale",
    "ratio",
];

pub fn write_scaling_csv(path: &Path, prov: &Provenance, rows: &[ScalingRow]) -> Result<()> {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                r.n.to_string(),
                r.t_max.to_string(),
                r.trials.to_string(),
                r.mean_t.to_string(),
                r.se_t.to_string(),
                r.quantiles_t.0.to_string(),
                r.quantiles_t.1.to_string(),
                r.quantiles_t.2.to_string(),
                r.mean_loss.to_string(),
                r.truncation_rate.to_string(),
                r.predicted_scale.to_string(),
                r.ratio.to_string(),
            ]
        })
        .collect();
    write_csv(path, prov, SCALING_HEADER, &rows)
}

pub const PROFILE_HEADER: &[&str] = &[
    "t",
    "mean_var",
    "q10_var",
    "median_var",
    "q90_var",
    "prior_var",
];

pub fn write_profile_csv(path: &Path, prov: &Provenance, rows: &[ProfileRow]) -> Result<()> {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.t.to_string(),
                r.mean.to_string(),
                r.q10.to_string(),
                r.median.to_string(),
                r.q90.to_string(),
                r.prior_variance.to_string(),
            ]
        })
        .collect();
    write_csv(path, prov, PROFILE_HEADER, &rows)
}

pub const Z_CHECK_HEADER: &[&str] = &[
    "t",
    "trials",
    "exceedances",
    "frequency",
    "bound",
    "binomial_se",
    "within",
];

pub fn write_z_check_csv(path: &Path, prov: &Provenance, rows: &[ZCheckRow]) -> Result<()> {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.t.to_string(),
                r.trials.to_string(),
                r.exceedances.to_string(),
                r.frequency.to_string(),
                r.bound.to_string(),
                r.binomial_se.to_string(),
                r.within.to_string(),
            ]
        })
        .collect();
    write_csv(path, prov, Z_CHECK_HEADER, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::ChannelPair;
    use crate::posterior::SumPath;

    fn exp(k: u64, mu: f64, rule: StoppingRule, t_max: u64) -> Experiment {
        let ch = if mu == 0.0 {
            ChannelPair::uninformative()
        } else {
            ChannelPair::gaussian(mu).unwrap()
        };
        Experiment::new(1, k, ch, rule, t_max, SumPath::Direct).unwrap()
    }

    #[test]
    fn quantile_interpolates() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert!((quantile(&xs, 0.5) - 2.5).abs() < 1e-12);
        assert!(quantile(&[], 0.5).is_nan());
    }

    #[test]
    fn empty_batch() {
        let e = exp(5, 2.0, StoppingRule::TPlus, 10);
        assert!(run_batch(&e, 0, 1).unwrap().is_empty());
        let s = BatchSummary::from_records(&[]);
        assert_eq!(s.trials, 0);
        assert!(s.mean_stop_time.is_nan());
    }

    #[test]
    fn batch_invariants_and_order() {
        let e = exp(10, 2.0, StoppingRule::TPlus, 12);
        let recs = run_batch(&e, 40, 9).unwrap();
        for (i, r) in recs.iter().enumerate() {
            assert_eq!(r.trial_id, i as u64);
            assert!(r.stop_time <= e.t_max());
            assert_eq!(r.infection_cost, ball_size(1, r.stop_time));
            assert_eq!(r.total_loss, r.squared_error + r.infection_cost as f64);
            assert_eq!(r.variance_trajectory.len() as u64, r.stop_time + 1);
        }
        let mut shuffled = recs.clone();
        shuffled.reverse();
        assert_eq!(
            BatchSummary::from_records(&recs),
            BatchSummary::from_records(&shuffled)
        );
    }

    #[test]
    fn uninformative_profile_is_flat() {
        let e = exp(6, 0.0, StoppingRule::FixedHorizon(5), 8);
        let rows = variance_transition_profile(&e, 10, 3).unwrap();
        assert_eq!(rows.len(), 7);
        let prior = rows[0].prior_variance;
        for r in &rows {
            assert_eq!(
                (r.mean, r.q10, r.median, r.q90),
                (prior, prior, prior, prior)
            );
        }
    }

    #[test]
    fn point_mass_profile_is_zero() {
        let e = exp(0, 1.0, StoppingRule::FixedHorizon(3), 3);
        for r in variance_transition_profile(&e, 5, 3).unwrap() {
            assert_eq!((r.mean, r.q10, r.median, r.q90), (0.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn profile_needs_fixed_horizon() {
        let e = exp(5, 1.0, StoppingRule::TPlus, 5);
        assert!(variance_transition_profile(&e, 5, 3).is_err());
    }

    #[test]
    fn uninformative_normalizer_never_deviates() {
        let e = exp(50, 0.0, StoppingRule::TPlus, 6);
        let rows = normalizer_concentration_check(&e, 0.2, 4, 20, 5).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|r| r.exceedances == 0 && r.within));
    }

    #[test]
    fn normalizer_check_rejects_small_eps() {
        let e = exp(50, 1.0, StoppingRule::TPlus, 6);
        assert!(normalizer_concentration_check(&e, 0.01, 1, 5, 5).is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let e = exp(8, 2.0, StoppingRule::TPlus, 10);
        let recs = run_batch(&e, 5, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let prov = Provenance {
            config_hash: "abc".into(),
            master_seed: 2,
        };
        write_results_jsonl(&path, &prov, &recs).unwrap();
        let (p, back) = read_results_jsonl(&path).unwrap();
        assert_eq!(p, prov);
        assert_eq!(back, recs);
    }

    #[test]
    fn thread_pool_honours_cap() {
        // Only this test touches the variable.
        std::env::set_var(MAX_THREADS_ENV, "2");
        let pool = thread_pool(8).unwrap();
        assert_eq!(pool.current_num_threads(), 2);
        std::env::set_var(MAX_THREADS_ENV, "zero");
        assert!(thread_pool(1).is_err());
        std::env::remove_var(MAX_THREADS_ENV);
        assert_eq!(thread_pool(3).unwrap().current_num_threads(), 3);
    }
}
