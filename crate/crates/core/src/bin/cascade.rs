use std::collections::{HashSet, VecDeque};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cascade_core::config::ExperimentConfig;
use cascade_core::error::{Error, Result};
use cascade_core::harness::{self, BatchSummary, Provenance};
use cascade_core::lattice::{ball_size, growth, sphere_bounds, sphere_size};
use cascade_core::stopping::StoppingRule;
use cascade_core::{ObservationFrame, PosteriorState, TrialObserver};

/// Cascade-source localization experiments.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a trial batch; writes results JSON-lines, summary CSV and the effective config.
    Simulate { config: PathBuf },
    /// Run one batch per prior radius in `scaling.k_grid`; writes the scaling CSV.
    Scaling { config: PathBuf },
    /// Posterior variance over time under a fixed horizon.
    VarianceProfile { config: PathBuf },
    /// Normalizer concentration check at small times.
    ZCheck { config: PathBuf },
    /// Compare closed-form lattice counts with breadth-first enumeration.
    VerifyLattice {
        #[arg(long, default_value_t = 3)]
        max_d: usize,
        #[arg(long, default_value_t = 12)]
        max_t: u64,
    },
    /// Print channel moments.
    ChannelInfo { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate { config } => simulate(&config),
        Command::Scaling { config } => scaling(&config),
        Command::VarianceProfile { config } => variance_profile(&config),
        Command::ZCheck { config } => z_check(&config),
        Command::VerifyLattice { max_d, max_t } => verify_lattice(max_d, max_t),
        Command::ChannelInfo { config } => channel_info(&config),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(path)?.effective()
}

fn simulate(path: &Path) -> Result<bool> {
    let cfg = load(path)?;
    let exp = cfg.experiment()?;
    let out = &cfg.output;
    let pool = harness::thread_pool(cfg.threads)?;
    let records = if out.frame_dump || out.posterior_snapshots {
        let factory = |id: u64| -> Result<Option<Box<dyn TrialObserver>>> {
            Ok(Some(Box::new(TrialDump::create(
                &out.dir,
                id,
                out.frame_dump,
                out.posterior_snapshots,
            )?)))
        };
        pool.install(|| harness::run_batch_observed(&exp, cfg.trials, cfg.master_seed, &factory))?
    } else {
        pool.install(|| harness::run_batch(&exp, cfg.trials, cfg.master_seed))?
    };
    let prov = Provenance::of(&cfg);
    harness::write_results_jsonl(&out.dir.join(&out.results), &prov, &records)?;
    let summary = BatchSummary::from_records(&records);
    harness::write_summary_csv(&out.dir.join(&out.summary), &prov, &summary)?;
    write_effective(&cfg)?;
    println!(
        "trials={} mean_T={} mean_loss={} truncation_rate={}",
        summary.trials, summary.mean_stop_time, summary.mean_total_loss, summary.truncation_rate
    );
    Ok(true)
}

fn write_effective(cfg: &ExperimentConfig) -> Result<()> {
    let path = cfg.output.dir.join("effective_config.toml");
    std::fs::create_dir_all(&cfg.output.dir).map_err(|e| io_err(&cfg.output.dir, e))?;
    std::fs::write(&path, cfg.to_toml_string()).map_err(|e| io_err(&path, e))
}

fn scaling(path: &Path) -> Result<bool> {
    let cfg = ExperimentConfig::load(path)?;
    let grid = cfg
        .scaling
        .as_ref()
        .ok_or_else(|| Error::Config {
            field: "scaling".into(),
            reason: "section required for the scaling study".into(),
        })?
        .k_grid
        .clone();
    let pool = harness::thread_pool(cfg.threads)?;
    let rows = pool.install(|| harness::scaling_study(&cfg, &grid, cfg.trials, cfg.master_seed))?;
    let out = &cfg.output;
    harness::write_scaling_csv(&out.dir.join(&out.scaling), &Provenance::of(&cfg), &rows)?;
    write_effective(&cfg)?;
    let nondecreasing = rows.windows(2).all(|w| w[0].mean_t <= w[1].mean_t);
    println!(
        "rows={} ratio_band={} mean_T_nondecreasing={}",
        rows.len(),
        harness::ratio_band(&rows),
        nondecreasing
    );
    Ok(true)
}

fn variance_profile(path: &Path) -> Result<bool> {
    let cfg = load(path)?;
    let horizon = cfg
        .profile
        .as_ref()
        .map_or(cfg.effective_t_max(), |p| p.horizon);
    let exp = cfg
        .experiment()?
        .with_rule(StoppingRule::FixedHorizon(horizon))?;
    let pool = harness::thread_pool(cfg.threads)?;
    let rows =
        pool.install(|| harness::variance_transition_profile(&exp, cfg.trials, cfg.master_seed))?;
    let out = &cfg.output;
    harness::write_profile_csv(&out.dir.join(&out.profile), &Provenance::of(&cfg), &rows)?;
    write_effective(&cfg)?;
    let prior = rows[0].prior_variance;
    let collapse = rows
        .iter()
        .find(|r| r.t >= 0 && r.median <= 0.05 * prior)
        .map(|r| r.t);
    println!(
        "prior_variance={prior} horizon={horizon} first_t_median_below_5pct={}",
        collapse.map_or("none".into(), |t| t.to_string())
    );
    Ok(true)
}

fn z_check(path: &Path) -> Result<bool> {
    let cfg = load(path)?;
    let eps = cfg
        .z_check
        .as_ref()
        .ok_or_else(|| Error::Config {
            field: "z_check".into(),
            reason: "section required for the normalizer check".into(),
        })?
        .eps;
    let horizon = cfg.z_check_horizon();
    let exp = cfg.experiment()?;
    let pool = harness::thread_pool(cfg.threads)?;
    let rows = pool.install(|| {
        harness::normalizer_concentration_check(&exp, eps, horizon, cfg.trials, cfg.master_seed)
    })?;
    let out = &cfg.output;
    harness::write_z_check_csv(&out.dir.join(&out.z_check), &Provenance::of(&cfg), &rows)?;
    write_effective(&cfg)?;
    // The bound is only claimed up to H(0.1 log n); later rows are reported, not asserted.
    let asserted =
        cascade_core::lattice::growth_inverse(cfg.dimension, 0.1 * (cfg.n() as f64).ln());
    let ok = rows.iter().filter(|r| r.t <= asserted).all(|r| r.within);
    let worst = rows.iter().map(|r| r.frequency).fold(0.0, f64::max);
    println!(
        "n={} eps={eps} bound={} max_frequency={worst} within={ok}",
        cfg.n(),
        rows.first().map_or(f64::NAN, |r| r.bound)
    );
    Ok(ok)
}

/// Sphere sizes `|∂N(t)|` for `t = 0..=max_t` by breadth-first search from the origin.
fn bfs_spheres(d: usize, max_t: u64) -> Vec<u64> {
    let origin = vec![0i64; d];
    let mut seen = HashSet::from([origin.clone()]);
    let mut queue = VecDeque::from([(origin, 0u64)]);
    let mut counts = vec![0u64; max_t as usize + 1];
    while let Some((v, t)) = queue.pop_front() {
        counts[t as usize] += 1;
        if t == max_t {
            continue;
        }
        for i in 0..d {
            for step in [-1, 1] {
                let mut w = v.clone();
                w[i] += step;
                if seen.insert(w.clone()) {
                    queue.push_back((w, t + 1));
                }
            }
        }
    }
    counts
}

fn verify_lattice(max_d: usize, max_t: u64) -> Result<bool> {
    if !(1..=4).contains(&max_d) {
        return Err(Error::InvalidInput(format!(
            "--max-d must be in 1..=4, got {max_d}"
        )));
    }
    if max_t > 15 {
        return Err(Error::InvalidInput(format!(
            "--max-t must be at most 15, got {max_t}"
        )));
    }
    println!("d,t,sphere,sphere_bfs,ball,ball_bfs,growth,growth_bfs,lower_bound,upper_bound,ok");
    let mut all_ok = true;
    for d in 1..=max_d {
        let spheres = bfs_spheres(d, max_t);
        let mut ball_bfs = 0;
        let mut growth_bfs = 0;
        for t in 0..=max_t {
            ball_bfs += spheres[t as usize];
            growth_bfs += ball_bfs;
            let (s, b, h) = (sphere_size(d, t), ball_size(d, t), growth(d, t));
            let mut ok = s == spheres[t as usize] && b == ball_bfs && h == growth_bfs;
            let (lo, hi) = match sphere_bounds(d, t) {
                Ok((lo, hi)) => {
                    ok &= lo <= s as f64 && s as f64 <= hi;
                    (lo.to_string(), hi.to_string())
                }
                Err(_) => (String::new(), String::new()),
            };
            all_ok &= ok;
            println!(
                "{d},{t},{s},{},{b},{ball_bfs},{h},{growth_bfs},{lo},{hi},{ok}",
                spheres[t as usize]
            );
        }
    }
    if !all_ok {
        eprintln!("lattice check failed");
    }
    Ok(all_ok)
}

fn channel_info(path: &Path) -> Result<bool> {
    let cfg = ExperimentConfig::load(path)?;
    let m = cfg.channel_pair()?.moments();
    println!("alpha,lambda0,lambda1,lambda,kl01,kl10,d_mean");
    println!(
        "{},{},{},{},{},{},{}",
        m.alpha,
        m.lambda0,
        m.lambda1,
        m.lambda(),
        m.kl01,
        m.kl10,
        m.d_mean
    );
    if m.is_degenerate() {
        eprintln!("warning: Q0 = Q1, signals carry no information");
    }
    Ok(true)
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source: e,
    }
}

/// Per-trial CSV exports of raw signals and posterior probabilities.
struct TrialDump {
    frames: Option<(PathBuf, BufWriter<File>)>,
    snapshots: Option<(PathBuf, BufWriter<File>)>,
}

impl TrialDump {
    fn create(dir: &Path, trial: u64, frames: bool, snapshots: bool) -> Result<Self> {
        let open = |sub: &str| -> Result<(PathBuf, BufWriter<File>)> {
            let d = dir.join(sub);
            std::fs::create_dir_all(&d).map_err(|e| io_err(&d, e))?;
            let p = d.join(format!("trial_{trial:06}.csv"));
            let f = File::create(&p).map_err(|e| io_err(&p, e))?;
            Ok((p, BufWriter::new(f)))
        };
        let mut dump = TrialDump {
            frames: frames.then(|| open("frames")).transpose()?,
            snapshots: snapshots.then(|| open("snapshots")).transpose()?,
        };
        if let Some((p, w)) = &mut dump.frames {
            writeln!(w, "t,coords,signal").map_err(|e| io_err(p, e))?;
        }
        if let Some((p, w)) = &mut dump.snapshots {
            writeln!(w, "t,coords,probability").map_err(|e| io_err(p, e))?;
        }
        Ok(dump)
    }
}

fn coords_field(c: &[i64]) -> String {
    c.iter().map(i64::to_string).collect::<Vec<_>>().join(" ")
}

impl TrialObserver for TrialDump {
    fn on_step(&mut self, frame: &ObservationFrame, posterior: &PosteriorState) -> Result<()> {
        if let Some((p, w)) = &mut self.frames {
            let window = frame.window();
            for (i, v) in frame.values().iter().enumerate() {
                writeln!(w, "{},{},{v}", frame.time(), coords_field(window.coords(i)))
                    .map_err(|e| io_err(p, e))?;
            }
            w.flush().map_err(|e| io_err(p, e))?;
        }
        if let Some((p, w)) = &mut self.snapshots {
            let support = posterior.support();
            for (i, pi) in posterior.probabilities().iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{pi}",
                    posterior.time(),
                    coords_field(support.coords(i))
                )
                .map_err(|e| io_err(p, e))?;
            }
            w.flush().map_err(|e| io_err(p, e))?;
        }
        Ok(())
    }
}
