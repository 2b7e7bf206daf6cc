//! Loads a TOML config, runs the batch on a capped worker pool and writes the
//! results and summary files into a temporary directory.

use cascade_core::harness::{self, BatchSummary, Provenance};
use cascade_core::ExperimentConfig;

const CONFIG: &str = r#"
dimension = 1
prior_radius = 40
trials = 200
master_seed = 42
threads = 2

[channel]
kind = "discrete"
q0 = [0.7, 0.2, 0.1]
q1 = [0.2, 0.3, 0.5]

[rule]
kind = "t_r"
rollouts = 100
"#;

fn main() -> cascade_core::Result<()> {
    let cfg = ExperimentConfig::from_toml_str(CONFIG)?.effective()?;
    let exp = cfg.experiment()?;
    let pool = harness::thread_pool(cfg.threads)?;
    let records = pool.install(|| harness::run_batch(&exp, cfg.trials, cfg.master_seed))?;

    let dir = std::env::temp_dir().join("cascade-example");
    let prov = Provenance::of(&cfg);
    harness::write_results_jsonl(&dir.join("results.jsonl"), &prov, &records)?;
    let summary = BatchSummary::from_records(&records);
    harness::write_summary_csv(&dir.join("summary.csv"), &prov, &summary)?;
    println!(
        "config hash {} written to {}",
        prov.config_hash,
        dir.display()
    );
    println!(
        "mean T={:.2} mean loss={:.3} truncation rate={}",
        summary.mean_stop_time, summary.mean_total_loss, summary.truncation_rate
    );
    Ok(())
}
