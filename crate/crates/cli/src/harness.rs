//! Seeded Monte Carlo experiments over `(n, c)` cells.
//!
//! Trial `t` at the `i`-th vertex count uses the seed
//! `derive_seed(seed, [i, t])` for every `c` on the grid, so neighbouring
//! grid points see the same host, tree and uniform draws for the phases.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use perturbed_embed_core::graph::{union_all, PHASES};
use perturbed_embed_core::pipeline::{embed_spanning_tree, PipelineConfig, TrialReport};
use perturbed_embed_core::regularity::{build_partition, CertifyMode, RegularityParams};
use perturbed_embed_core::rng::{self, tag};
use perturbed_embed_core::tree::generate_bounded_tree;
use perturbed_embed_core::{verify_embedding, PerturbationPlan, TreeShape};
use rayon::prelude::*;
use serde::Serialize;

use crate::host::{HostError, HostSpec};

pub const CSV_HEADER: [&str; 12] = [
    "n",
    "alpha",
    "delta_max",
    "tree_shape",
    "k",
    "c",
    "trials",
    "successes",
    "rate",
    "wilson_lo",
    "wilson_hi",
    "mean_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Embed,
    Calibrate,
    Certify,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "embed" => Ok(Mode::Embed),
            "calibrate" => Ok(Mode::Calibrate),
            "certify" => Ok(Mode::Certify),
            _ => Err(format!("unknown mode {s:?}: expected embed, calibrate or certify")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    #[serde(serialize_with = "display")]
    pub host: HostSpec,
    pub n: Vec<usize>,
    pub alpha: f64,
    pub delta_max: usize,
    #[serde(serialize_with = "shape_name")]
    pub tree: TreeShape,
    pub k: usize,
    pub c: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub mode: Mode,
    pub lambda: f64,
    pub leaf_removal: f64,
    pub split: [f64; PHASES],
    /// Success rate a calibration must reach.
    pub target: f64,
    pub cluster_size: Option<usize>,
    /// Fill `mean_ms`; wall time makes the CSV machine dependent.
    pub timing: bool,
}

fn display<S: serde::Serializer>(h: &HostSpec, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(h)
}

fn shape_name<S: serde::Serializer>(t: &TreeShape, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(t.name())
}

impl ExperimentConfig {
    pub fn new(host: HostSpec, n: Vec<usize>, alpha: f64, delta_max: usize, tree: TreeShape, c: Vec<f64>) -> Self {
        let defaults = PipelineConfig::new(alpha, delta_max);
        ExperimentConfig {
            host,
            n,
            alpha,
            delta_max,
            tree,
            k: defaults.k,
            c,
            trials: 50,
            seed: 0,
            out: None,
            mode: Mode::Embed,
            lambda: defaults.lambda,
            leaf_removal: defaults.leaf_removal,
            split: [1.0; PHASES],
            target: 0.9,
            cluster_size: None,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.n.is_empty() || self.n.iter().any(|&n| n < 4) {
            return bad(format!("vertex counts {:?} must be non-empty and at least 4", self.n));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha = {} must lie in (0, 1]", self.alpha));
        }
        if self.delta_max < 2 {
            return bad(format!("dmax = {} must be at least 2", self.delta_max));
        }
        if self.k < 7 || self.k.is_multiple_of(2) {
            return bad(format!("k = {} must be odd and at least 7", self.k));
        }
        if self.c.is_empty() || self.c.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return bad(format!("c grid {:?} must be non-empty, finite and non-negative", self.c));
        }
        if self.c.windows(2).any(|w| w[0] > w[1]) {
            return bad(format!("c grid {:?} must be sorted ascending", self.c));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return bad(format!("lambda = {} must lie in (0, 1)", self.lambda));
        }
        if !(0.0..=1.0).contains(&self.leaf_removal) {
            return bad(format!("leaf removal = {} must lie in [0, 1]", self.leaf_removal));
        }
        if self.split.iter().any(|s| !(*s >= 0.0)) || !(self.split.iter().sum::<f64>() > 0.0) {
            return bad(format!("phase split {:?} must be non-negative with a positive sum", self.split));
        }
        if !(self.target > 0.0 && self.target < 1.0) {
            return bad(format!("target = {} must lie in (0, 1)", self.target));
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            k: self.k,
            lambda: self.lambda,
            leaf_removal: self.leaf_removal,
            target_cluster_size: self.cluster_size,
            ..PipelineConfig::new(self.alpha, self.delta_max)
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Host(#[from] HostError),
    #[error("trial precondition failed: {0}")]
    Precondition(#[from] perturbed_embed_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One trial's report plus the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub n: usize,
    pub c: f64,
    pub trial: usize,
    pub trial_seed: u64,
    pub host: String,
    pub tree_shape: &'static str,
    pub phase_split: [f64; PHASES],
    /// The harness's own re-run of the embedding validator.
    pub validator_confirmed: bool,
    pub report: TrialReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub n: usize,
    pub alpha: f64,
    pub delta_max: usize,
    pub tree_shape: &'static str,
    pub k: usize,
    pub c: f64,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub mean_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationRecord {
    pub n: usize,
    pub target: f64,
    /// Smallest grid value reaching the target, if any.
    pub threshold: Option<f64>,
    /// `(c, successes, trials)` for every probed grid point.
    pub probes: Vec<(f64, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyRow {
    pub n: usize,
    pub trial: usize,
    pub q: Option<usize>,
    pub pair: Option<usize>,
    pub sizes: Option<[usize; 2]>,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ExperimentOutput {
    pub cells: Vec<CellSummary>,
    pub trials: Vec<TrialRecord>,
    pub calibration: Vec<CalibrationRecord>,
    pub certify: Vec<CertifyRow>,
}

/// Wilson score interval at 95% confidence.
pub fn wilson(successes: usize, trials: usize) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    if trials == 0 {
        return (0.0, 1.0);
    }
    let (s, n) = (successes as f64, trials as f64);
    let p = s / n;
    let z2 = Z * Z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Smallest grid index whose rate reaches `target`, found by binary search
/// under the assumption that the rate is non-decreasing along the grid.
/// Returns the index (if the top of the grid reaches the target) and the
/// probed indices in probing order.
pub fn calibrate_grid<F: FnMut(usize) -> f64>(len: usize, target: f64, mut rate_at: F) -> (Option<usize>, Vec<usize>) {
    let mut probed = Vec::new();
    let mut memo = vec![None; len];
    let mut rate = |i: usize, probed: &mut Vec<usize>| {
        *memo[i].get_or_insert_with(|| {
            probed.push(i);
            rate_at(i)
        })
    };
    if len == 0 {
        return (None, probed);
    }
    let (mut lo, mut hi) = (0, len - 1);
    if rate(hi, &mut probed) < target {
        return (None, probed);
    }
    while lo < hi {
        let mid = (lo + hi) / 2;
        if rate(mid, &mut probed) >= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    (Some(lo), probed)
}

fn trial_seed(cfg: &ExperimentConfig, n_index: usize, trial: usize) -> u64 {
    rng::derive_seed(cfg.seed, &[n_index as u64, trial as u64])
}

pub fn run_trial(
    cfg: &ExperimentConfig,
    n: usize,
    c: f64,
    trial: usize,
    seed: u64,
) -> Result<TrialRecord, HarnessError> {
    let start = Instant::now();
    let host = cfg.host.build(n, cfg.alpha, &mut rng::stream(seed, &[tag::HOST]))?;
    let tree = generate_bounded_tree(n, cfg.delta_max, cfg.tree, &mut rng::stream(seed, &[tag::TREE]))?;
    let plan = PerturbationPlan::from_budget(n, c, cfg.split, rng::derive_seed(seed, &[tag::PHASES]))?;
    let outcome = embed_spanning_tree(&tree, &host, &plan, &cfg.pipeline(), seed)?;
    let validator_confirmed = match &outcome.embedding {
        Some(e) if outcome.report.success => {
            let full = union_all(n, std::iter::once(&host).chain(plan.sample(n).iter()))?;
            verify_embedding(&tree, &full, e).is_ok()
        }
        _ => false,
    };
    let mut report = outcome.report;
    report.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    Ok(TrialRecord {
        n,
        c,
        trial,
        trial_seed: seed,
        host: cfg.host.to_string(),
        tree_shape: cfg.tree.name(),
        phase_split: cfg.split,
        validator_confirmed,
        report,
    })
}

/// Runs every trial of one `(n, c)` cell in parallel.
pub fn run_cell(
    cfg: &ExperimentConfig,
    n_index: usize,
    c: f64,
) -> Result<(CellSummary, Vec<TrialRecord>), HarnessError> {
    let n = cfg.n[n_index];
    let records = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, n, c, t, trial_seed(cfg, n_index, t)))
        .collect::<Result<Vec<_>, _>>()?;
    let successes = records.iter().filter(|r| r.report.success && r.validator_confirmed).count();
    let (wilson_lo, wilson_hi) = wilson(successes, cfg.trials);
    let mean_ms = (cfg.timing && !records.is_empty())
        .then(|| records.iter().map(|r| r.report.wall_ms.unwrap_or(0.0)).sum::<f64>() / records.len() as f64);
    let summary = CellSummary {
        n,
        alpha: cfg.alpha,
        delta_max: cfg.delta_max,
        tree_shape: cfg.tree.name(),
        k: cfg.k,
        c,
        trials: cfg.trials,
        successes,
        rate: if cfg.trials == 0 { 0.0 } else { successes as f64 / cfg.trials as f64 },
        wilson_lo,
        wilson_hi,
        mean_ms,
    };
    Ok((summary, records))
}

fn certify(cfg: &ExperimentConfig) -> Result<Vec<CertifyRow>, HarnessError> {
    let mut rows = Vec::new();
    for (i, &n) in cfg.n.iter().enumerate() {
        let per_trial = (0..cfg.trials)
            .into_par_iter()
            .map(|t| -> Result<Vec<CertifyRow>, HarnessError> {
                let seed = trial_seed(cfg, i, t);
                let host = cfg.host.build(n, cfg.alpha, &mut rng::stream(seed, &[tag::HOST]))?;
                let p = cfg.pipeline();
                let target = p.target_cluster_size.unwrap_or(n / 2).max(1);
                let params: RegularityParams = p.regularity;
                let mut r = rng::stream(seed, &[tag::PARTITION]);
                Ok(match build_partition(&host, cfg.alpha, target, params, &mut r)? {
                    Err(f) => vec![CertifyRow {
                        n,
                        trial: t,
                        q: None,
                        pair: None,
                        sizes: None,
                        passed: false,
                        detail: format!("{f:?}"),
                    }],
                    Ok(part) => {
                        let mode = CertifyMode::Sampled { budget: params.witness_budget };
                        let verdicts = part.recertify(&host, mode, &mut r)?;
                        verdicts
                            .into_iter()
                            .enumerate()
                            .map(|(j, v)| CertifyRow {
                                n,
                                trial: t,
                                q: Some(part.q),
                                pair: Some(j),
                                sizes: Some([part.pairs[j][0].len(), part.pairs[j][1].len()]),
                                passed: v.passed(),
                                detail: format!("{v:?}"),
                            })
                            .collect()
                    }
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.extend(per_trial.into_iter().flatten());
    }
    Ok(rows)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    cfg.validate()?;
    let mut out = ExperimentOutput::default();
    if cfg.trials == 0 {
        return Ok(out);
    }
    match cfg.mode {
        Mode::Embed => {
            for i in 0..cfg.n.len() {
                for &c in &cfg.c {
                    let (cell, records) = run_cell(cfg, i, c)?;
                    out.cells.push(cell);
                    out.trials.extend(records);
                }
            }
        }
        Mode::Calibrate => {
            for i in 0..cfg.n.len() {
                let mut cells: Vec<Option<(CellSummary, Vec<TrialRecord>)>> = vec![None; cfg.c.len()];
                let mut failure = None;
                let (found, probed) = calibrate_grid(cfg.c.len(), cfg.target, |j| match run_cell(cfg, i, cfg.c[j]) {
                    Ok(cell) => {
                        let rate = cell.0.rate;
                        cells[j] = Some(cell);
                        rate
                    }
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                });
                if let Some(e) = failure {
                    return Err(e);
                }
                let mut probes = Vec::new();
                for j in probed {
                    let (cell, records) = cells[j].take().expect("probed cells were run");
                    probes.push((cell.c, cell.successes, cell.trials));
                    out.cells.push(cell);
                    out.trials.extend(records);
                }
                out.calibration.push(CalibrationRecord {
                    n: cfg.n[i],
                    target: cfg.target,
                    threshold: found.map(|j| cfg.c[j]),
                    probes,
                });
            }
            // Probing order is search order; report cells along the grid.
            out.cells.sort_by(|a, b| (a.n, a.c).partial_cmp(&(b.n, b.c)).unwrap());
        }
        Mode::Certify => out.certify = certify(cfg)?,
    }
    Ok(out)
}

pub fn cells_csv(cells: &[CellSummary]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if cells.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for c in cells {
        w.serialize(c)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is UTF-8"))
}

pub fn certify_csv(rows: &[CertifyRow]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "trial", "q", "pair", "size_a", "size_b", "passed"])?;
    for r in rows {
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([
            r.n.to_string(),
            r.trial.to_string(),
            opt(r.q),
            opt(r.pair),
            opt(r.sizes.map(|s| s[0])),
            opt(r.sizes.map(|s| s[1])),
            r.passed.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is UTF-8"))
}

#[derive(Serialize)]
struct Summary<'a> {
    generated_unix_s: u64,
    config: &'a ExperimentConfig,
    cells: &'a [CellSummary],
    calibration: &'a [CalibrationRecord],
    certify: &'a [CertifyRow],
}

/// Writes `results.csv` (or `certify.csv`), `summary.json` and `trials.json`
/// into `dir`. Timestamps only appear in `summary.json`.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, out: &ExperimentOutput) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    match cfg.mode {
        Mode::Certify => fs::write(dir.join("certify.csv"), certify_csv(&out.certify)?)?,
        _ => fs::write(dir.join("results.csv"), cells_csv(&out.cells)?)?,
    }
    let generated_unix_s = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let summary = Summary {
        generated_unix_s,
        config: cfg,
        cells: &out.cells,
        calibration: &out.calibration,
        certify: &out.certify,
    };
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    fs::write(dir.join("trials.json"), serde_json::to_string(&out.trials)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_closed_form_values() {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        let (lo, hi) = wilson(0, 10);
        assert!(lo == 0.0 && close(hi, 0.277_532_799_862_889_3), "{hi}");
        let (lo, hi) = wilson(5, 10);
        assert!(close(lo, 0.236_593_090_512_564) && close(hi, 0.763_406_909_487_436_1), "{lo} {hi}");
        let (lo, hi) = wilson(45, 50);
        assert!(close(lo, 0.786_397_685_625_203_4) && close(hi, 0.956_524_235_068_109_6), "{lo} {hi}");
        assert_eq!(wilson(50, 50).1, 1.0);
        assert_eq!(wilson(0, 0), (0.0, 1.0));
    }

    #[test]
    fn calibration_finds_analytic_threshold() {
        // Linear success curve reaching 0.9 exactly at c = 7.
        let grid: Vec<f64> = (0..20).map(f64::from).collect();
        let rate = |c: f64| (0.9 * c / 7.0).min(1.0);
        let (found, probed) = calibrate_grid(grid.len(), 0.9, |i| rate(grid[i]));
        assert_eq!(found.map(|i| grid[i]), Some(7.0));
        assert!(probed.len() <= 6);
        let (none, _) = calibrate_grid(grid.len(), 0.9, |_| 0.5);
        assert_eq!(none, None);
        let (first, _) = calibrate_grid(grid.len(), 0.9, |_| 1.0);
        assert_eq!(first, Some(0));
    }

    #[test]
    fn mode_and_config_validation() {
        assert_eq!("certify".parse::<Mode>(), Ok(Mode::Certify));
        assert!("plot".parse::<Mode>().is_err());
        let ok = ExperimentConfig::new(HostSpec::Gnp(0.5), vec![60], 0.3, 3, TreeShape::Path, vec![1.0, 2.0]);
        assert!(ok.validate().is_ok());
        for bad in [
            ExperimentConfig { c: vec![2.0, 1.0], ..ok.clone() },
            ExperimentConfig { n: vec![], ..ok.clone() },
            ExperimentConfig { k: 8, ..ok.clone() },
            ExperimentConfig { alpha: 0.0, ..ok.clone() },
            ExperimentConfig { target: 1.0, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
