//! `report`: aggregate finished train-rl/evaluate runs into a comparison
//! table (environment-aware versus traditional, per scenario and algorithm).

use crate::error::{CliError, CliResult};
use crate::manifest::{read_json, read_manifest, write_json_pretty, MANIFEST_FILE};
use crate::profile::Profile;
use crate::runs::{tables_from_seeds, MeanStd, MetricTable, RunSummary, SeedFailure};
use hydrorl::env::Mode;
use hydrorl::rl::RlAlgo;
use serde::{Deserialize, Serialize};
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub struct ReportArgs {
    pub inputs: Vec<PathBuf>,
    pub out: PathBuf,
}

/// One input run, with statistics re-derived from its per-seed records.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    /// Input directory as given on the command line.
    pub path: String,
    pub command: String,
    pub scenario: String,
    pub algo: RlAlgo,
    pub mode: Mode,
    pub profile: Profile,
    pub config_hash: String,
    pub seeds_requested: usize,
    pub seeds_completed: usize,
    pub failures: Vec<SeedFailure>,
    pub train_table: MetricTable,
    pub eval_table: MetricTable,
    pub per_auv_success: Vec<MeanStd>,
    pub simultaneous_success: MeanStd,
}

/// Environment-aware vs traditional deltas for one (scenario, algorithm)
/// pair, computed from final-window training metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeComparison {
    pub scenario: String,
    pub algo: RlAlgo,
    pub profile: Profile,
    /// Mean CR difference (env-aware minus traditional).
    pub cr_gain: f64,
    /// Mean SDR difference.
    pub sdr_gain: f64,
    /// Mean EC ratio (env-aware over traditional).
    pub ec_ratio: f64,
    /// Greedy-evaluation success-rate difference.
    pub eval_success_gain: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub comparisons: Vec<ModeComparison>,
}

pub fn run_report(args: &ReportArgs) -> CliResult<Report> {
    if args.inputs.is_empty() {
        return Err(CliError::Usage("at least one input run is required".into()));
    }
    // Surface every absent artifact in one pass rather than failing on the
    // first.
    let mut missing = Vec::new();
    for dir in &args.inputs {
        for name in [MANIFEST_FILE, "summary.json"] {
            let p = dir.join(name);
            if !p.is_file() {
                missing.push(p);
            }
        }
    }
    if !missing.is_empty() {
        return Err(CliError::MissingArtifacts(missing));
    }

    let mut rows = Vec::with_capacity(args.inputs.len());
    for dir in &args.inputs {
        let manifest = read_manifest(dir)?;
        if manifest.command != "train-rl" && manifest.command != "evaluate" {
            return Err(CliError::Usage(format!(
                "report aggregates train-rl or evaluate runs; '{}' was produced by '{}'",
                dir.display(),
                manifest.command
            )));
        }
        let summary: RunSummary = read_json(&dir.join("summary.json"))?;
        let (train_table, eval_table, per_auv_success, simultaneous_success) =
            tables_from_seeds(&summary.per_seed);
        rows.push(ReportRow {
            path: dir.display().to_string(),
            command: summary.command,
            scenario: summary.scenario,
            algo: summary.algo,
            mode: summary.mode,
            profile: summary.profile,
            config_hash: summary.config_hash,
            seeds_requested: summary.seeds.len(),
            seeds_completed: summary.per_seed.len(),
            failures: summary.failures,
            train_table,
            eval_table,
            per_auv_success,
            simultaneous_success,
        });
    }

    let comparisons = mode_comparisons(&rows);
    let report = Report { rows, comparisons };
    write_json_pretty(&args.out.join("report.json"), &report)?;
    write_report_csv(&args.out.join("report.csv"), &report)?;
    print_report(&report);
    Ok(report)
}

/// Pair env-aware rows with traditional rows sharing scenario, algorithm
/// and profile (first occurrence of each mode wins).
fn mode_comparisons(rows: &[ReportRow]) -> Vec<ModeComparison> {
    let mut out = Vec::new();
    for row in rows {
        if row.mode != Mode::EnvAware {
            continue;
        }
        let Some(base) = rows.iter().find(|r| {
            r.mode == Mode::Traditional
                && r.scenario == row.scenario
                && r.algo == row.algo
                && r.profile == row.profile
        }) else {
            continue;
        };
        let ec_ratio = if base.train_table.ec.mean != 0.0 {
            row.train_table.ec.mean / base.train_table.ec.mean
        } else {
            f64::INFINITY
        };
        out.push(ModeComparison {
            scenario: row.scenario.clone(),
            algo: row.algo,
            profile: row.profile,
            cr_gain: row.train_table.cr.mean - base.train_table.cr.mean,
            sdr_gain: row.train_table.sdr.mean - base.train_table.sdr.mean,
            ec_ratio,
            eval_success_gain: row.eval_table.success_rate.mean
                - base.eval_table.success_rate.mean,
        });
    }
    out
}

fn write_report_csv(path: &Path, report: &Report) -> CliResult<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        f,
        "path,scenario,algo,mode,profile,seeds_completed,seeds_requested,\
         cr_mean,cr_std,sdr_mean,sdr_std,ec_mean,ec_std,success_mean,success_std,\
         eval_success_mean,eval_success_std,per_auv_success,simultaneous_mean,simultaneous_std"
    )?;
    for r in &report.rows {
        let per_auv = r
            .per_auv_success
            .iter()
            .map(|v| format!("{}", v.mean))
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.path,
            r.scenario,
            r.algo.name(),
            mode_name(r.mode),
            r.profile.name(),
            r.seeds_completed,
            r.seeds_requested,
            r.train_table.cr.mean,
            r.train_table.cr.std,
            r.train_table.sdr.mean,
            r.train_table.sdr.std,
            r.train_table.ec.mean,
            r.train_table.ec.std,
            r.train_table.success_rate.mean,
            r.train_table.success_rate.std,
            r.eval_table.success_rate.mean,
            r.eval_table.success_rate.std,
            per_auv,
            r.simultaneous_success.mean,
            r.simultaneous_success.std,
        )?;
    }
    f.flush()?;
    Ok(())
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::EnvAware => "env-aware",
        Mode::Traditional => "traditional",
    }
}

fn print_report(report: &Report) {
    for r in &report.rows {
        println!(
            "{} {} {}: cr {:.1}+/-{:.1}, sdr {:.1}+/-{:.1}, ec {:.1}+/-{:.1}, eval success {:.3} ({} of {} seeds)",
            r.scenario,
            r.algo.name(),
            mode_name(r.mode),
            r.train_table.cr.mean,
            r.train_table.cr.std,
            r.train_table.sdr.mean,
            r.train_table.sdr.std,
            r.train_table.ec.mean,
            r.train_table.ec.std,
            r.eval_table.success_rate.mean,
            r.seeds_completed,
            r.seeds_requested,
        );
    }
    for c in &report.comparisons {
        println!(
            "{} {}: env-aware vs traditional -> cr {:+.1}, sdr {:+.1}, ec ratio {:.3}, eval success {:+.3}",
            c.scenario,
            c.algo.name(),
            c.cr_gain,
            c.sdr_gain,
            c.ec_ratio,
            c.eval_success_gain,
        );
    }
}
