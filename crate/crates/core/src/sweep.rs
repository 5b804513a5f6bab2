//! Experiment sweeps: run a grid of (cell count, paradigm, reward) points
//! over several seeds, aggregate the metrics, and emit plot-ready figure
//! CSVs plus a machine-readable manifest.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::RewardSpec;
use crate::error::{Error, Result};
use crate::metrics::ConvergenceReport;
use crate::sim::{run_episode, trace_csv_string, Paradigm, SimConfig};

/// Axes of one sweep. The cross product of `n_femto x rewards x paradigms`
/// runs once per seed; the same seed list is reused at every point so
/// comparisons across reward functions are seed-matched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub n_femto: Vec<usize>,
    pub paradigms: Vec<Paradigm>,
    pub rewards: Vec<RewardSpec>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Template config; the sweep overrides cell count, paradigm, reward
    /// and seed per episode.
    pub base: SimConfig,
    /// Row stride applied to iteration-series figure data.
    pub figure_stride: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            n_femto: (4..=11).collect(),
            paradigms: vec![Paradigm::Il, Paradigm::Cl],
            rewards: vec![
                RewardSpec::rf1(6.0),
                RewardSpec::rf2(6.0, 80.0),
                RewardSpec::rf2(6.0, 1000.0),
                RewardSpec::rf2(6.0, 10000.0),
                RewardSpec::rf3(6.0),
            ],
            seeds: (0..10).collect(),
            output_dir: PathBuf::from("femtoq-out"),
            base: SimConfig::default(),
            figure_stride: 10,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_femto.is_empty() || self.paradigms.is_empty() || self.rewards.is_empty() {
            return Err(Error::Config("sweep axes must be nonempty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed per point".into()));
        }
        if self.figure_stride == 0 {
            return Err(Error::Config("figure_stride must be at least 1".into()));
        }
        for reward in &self.rewards {
            reward.validate()?;
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: SweepSpec =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad sweep config: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn points(&self) -> Vec<SweepPoint> {
        let mut points = Vec::new();
        for &n in &self.n_femto {
            for reward in &self.rewards {
                for &paradigm in &self.paradigms {
                    points.push(SweepPoint {
                        n_femto: n,
                        paradigm,
                        reward: *reward,
                    });
                }
            }
        }
        points
    }

    pub fn episode_config(&self, point: &SweepPoint, seed: u64) -> SimConfig {
        SimConfig {
            n_femto: point.n_femto,
            paradigm: point.paradigm,
            reward: point.reward,
            rng_seed: seed,
            ..self.base.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n_femto: usize,
    pub paradigm: Paradigm,
    pub reward: RewardSpec,
}

impl SweepPoint {
    pub fn combo_label(&self) -> String {
        format!("{}-{}", self.reward.label(), self.paradigm.label())
    }
}

/// Metrics extracted from one episode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    /// SHA-256 of the trace CSV bytes.
    pub trace_digest: String,
    pub aggregate_femto_capacity: f64,
    pub jain_index: f64,
    pub convergence: ConvergenceReport,
    pub shared_entries: u64,
    /// Macro capacity on subcarrier 0 per iteration (for series figures).
    #[serde(skip)]
    pub macro_c0_series: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointResult {
    pub point: SweepPoint,
    pub seeds: Vec<SeedResult>,
    /// Seeds whose episode failed, with the error text; the sweep keeps
    /// going past them.
    pub failures: Vec<(u64, String)>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

fn std_dev(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.len() < 2 {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

impl PointResult {
    pub fn mean_capacity(&self) -> f64 {
        mean(self.seeds.iter().map(|s| s.aggregate_femto_capacity))
    }

    pub fn std_capacity(&self) -> f64 {
        std_dev(self.seeds.iter().map(|s| s.aggregate_femto_capacity))
    }

    pub fn mean_jain(&self) -> f64 {
        mean(self.seeds.iter().map(|s| s.jain_index))
    }

    pub fn std_jain(&self) -> f64 {
        std_dev(self.seeds.iter().map(|s| s.jain_index))
    }

    pub fn mean_terminal_deviation(&self) -> f64 {
        mean(self.seeds.iter().map(|s| s.convergence.terminal_deviation))
    }

    /// Median of the convergence iterations; non-converged runs count as
    /// the full episode length.
    pub fn median_convergence_iteration(&self) -> f64 {
        let mut iters: Vec<f64> = self
            .seeds
            .iter()
            .map(|s| s.convergence.iteration as f64)
            .collect();
        if iters.is_empty() {
            return f64::NAN;
        }
        iters.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mid = iters.len() / 2;
        if iters.len() % 2 == 1 {
            iters[mid]
        } else {
            0.5 * (iters[mid - 1] + iters[mid])
        }
    }
}

/// Runs every (point, seed) episode of the sweep. Episodes execute in
/// parallel; results come back in deterministic point order.
pub fn run_sweep_points(spec: &SweepSpec) -> Result<Vec<PointResult>> {
    spec.validate()?;
    let points = spec.points();
    let jobs: Vec<(usize, u64)> = points
        .iter()
        .enumerate()
        .flat_map(|(pi, _)| spec.seeds.iter().map(move |&s| (pi, s)))
        .collect();

    let outcomes: Vec<(usize, u64, std::result::Result<SeedResult, String>)> = jobs
        .par_iter()
        .map(|&(pi, seed)| {
            let cfg = spec.episode_config(&points[pi], seed);
            let outcome = run_seed(&cfg).map_err(|e| e.to_string());
            (pi, seed, outcome)
        })
        .collect();

    let mut results: Vec<PointResult> = points
        .into_iter()
        .map(|point| PointResult {
            point,
            seeds: Vec::new(),
            failures: Vec::new(),
        })
        .collect();
    for (pi, seed, outcome) in outcomes {
        match outcome {
            Ok(res) => results[pi].seeds.push(res),
            Err(msg) => results[pi].failures.push((seed, msg)),
        }
    }
    for point in &mut results {
        point.seeds.sort_by_key(|s| s.seed);
        point.failures.sort_by_key(|f| f.0);
    }
    Ok(results)
}

fn run_seed(cfg: &SimConfig) -> Result<SeedResult> {
    let trace = run_episode(cfg)?;
    let csv = trace_csv_string(&trace)?;
    let digest = hex::encode(Sha256::digest(csv.as_bytes()));
    Ok(SeedResult {
        seed: cfg.rng_seed,
        trace_digest: digest,
        aggregate_femto_capacity: trace.summary.aggregate_femto_capacity,
        jain_index: trace.summary.jain_index,
        convergence: trace.summary.convergence,
        shared_entries: trace.summary.shared_entries,
        macro_c0_series: trace.records.iter().map(|r| r.macro_capacity[0]).collect(),
    })
}

/// One plottable dataset: `(x, mean y, std y)` triples per series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FigureDataset {
    pub figure_id: u32,
    /// What x and y mean for this figure.
    pub x_axis: String,
    pub y_axis: String,
    pub series: Vec<FigureSeries>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FigureSeries {
    pub label: String,
    pub points: Vec<(f64, f64, f64)>,
}

struct FigureDef {
    id: u32,
    kind: FigureKind,
    combos: &'static [(&'static str, &'static str)],
}

enum FigureKind {
    /// Macro capacity on subcarrier 0 vs iteration, at the 4-cell point.
    MacroSeries,
    /// Aggregate femto capacity vs cell count.
    CapacityVsN,
    /// Jain index vs cell count.
    JainVsN,
}

const FIGURES: &[FigureDef] = &[
    FigureDef {
        id: 2,
        kind: FigureKind::MacroSeries,
        combos: &[
            ("rf1", "il"),
            ("rf2-k80", "il"),
            ("rf2-k1000", "il"),
            ("rf2-k10000", "il"),
        ],
    },
    FigureDef {
        id: 3,
        kind: FigureKind::CapacityVsN,
        combos: &[("rf1", "il"), ("rf2-k80", "il"), ("rf3", "il")],
    },
    FigureDef {
        id: 5,
        kind: FigureKind::JainVsN,
        combos: &[("rf1", "il"), ("rf2-k80", "il"), ("rf3", "il")],
    },
    FigureDef {
        id: 7,
        kind: FigureKind::CapacityVsN,
        combos: &[("rf1", "il"), ("rf3", "il"), ("rf3", "cl")],
    },
    FigureDef {
        id: 9,
        kind: FigureKind::JainVsN,
        combos: &[("rf1", "il"), ("rf3", "il"), ("rf3", "cl")],
    },
    FigureDef {
        id: 11,
        kind: FigureKind::MacroSeries,
        combos: &[("rf1", "il"), ("rf1", "cl"), ("rf3", "il")],
    },
];

/// Cell count used by the iteration-series figures.
const SERIES_N_FEMTO: usize = 4;

fn find_point<'a>(
    results: &'a [PointResult],
    n: usize,
    reward_label: &str,
    paradigm_label: &str,
) -> Option<&'a PointResult> {
    results.iter().find(|p| {
        p.point.n_femto == n
            && p.point.reward.label() == reward_label
            && p.point.paradigm.label() == paradigm_label
    })
}

/// Builds every figure dataset whose required series are fully covered by
/// the sweep results.
pub fn build_figures(spec: &SweepSpec, results: &[PointResult]) -> Vec<FigureDataset> {
    let mut out = Vec::new();
    for def in FIGURES {
        let dataset = match def.kind {
            FigureKind::MacroSeries => build_macro_series(spec, results, def),
            FigureKind::CapacityVsN => {
                build_per_n(spec, results, def, "aggregate_femto_capacity", |p| {
                    (p.mean_capacity(), p.std_capacity())
                })
            }
            FigureKind::JainVsN => build_per_n(spec, results, def, "jain_index", |p| {
                (p.mean_jain(), p.std_jain())
            }),
        };
        if let Some(ds) = dataset {
            out.push(ds);
        }
    }
    out
}

fn build_per_n(
    spec: &SweepSpec,
    results: &[PointResult],
    def: &FigureDef,
    y_axis: &str,
    extract: impl Fn(&PointResult) -> (f64, f64),
) -> Option<FigureDataset> {
    let mut series = Vec::new();
    for (reward_label, paradigm_label) in def.combos {
        let mut points = Vec::new();
        for &n in &spec.n_femto {
            let point = find_point(results, n, reward_label, paradigm_label)?;
            if point.seeds.is_empty() {
                return None;
            }
            let (m, s) = extract(point);
            points.push((n as f64, m, s));
        }
        series.push(FigureSeries {
            label: format!("{reward_label}-{paradigm_label}"),
            points,
        });
    }
    Some(FigureDataset {
        figure_id: def.id,
        x_axis: "n_femto".into(),
        y_axis: y_axis.into(),
        series,
    })
}

fn build_macro_series(
    spec: &SweepSpec,
    results: &[PointResult],
    def: &FigureDef,
) -> Option<FigureDataset> {
    if !spec.n_femto.contains(&SERIES_N_FEMTO) {
        return None;
    }
    let stride = spec.figure_stride.max(1);
    let mut series = Vec::new();
    for (reward_label, paradigm_label) in def.combos {
        let point = find_point(results, SERIES_N_FEMTO, reward_label, paradigm_label)?;
        if point.seeds.is_empty() {
            return None;
        }
        let len = point.seeds.iter().map(|s| s.macro_c0_series.len()).min()?;
        let mut points = Vec::new();
        for t in (0..len).step_by(stride) {
            let m = mean(point.seeds.iter().map(|s| s.macro_c0_series[t]));
            let s = std_dev(point.seeds.iter().map(|s| s.macro_c0_series[t]));
            points.push((t as f64, m, s));
        }
        series.push(FigureSeries {
            label: format!("{reward_label}-{paradigm_label}"),
            points,
        });
    }
    Some(FigureDataset {
        figure_id: def.id,
        x_axis: "iteration".into(),
        y_axis: "macro_capacity_sub0".into(),
        series,
    })
}

pub const FIGURE_SCHEMA: &str = "femtoq.figure.v1";
pub const MANIFEST_SCHEMA: &str = "femtoq.manifest.v1";

/// Point entry in the sweep manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestPoint {
    pub n_femto: usize,
    pub paradigm: String,
    pub reward: String,
    pub seeds: Vec<u64>,
    pub trace_digests: Vec<String>,
    pub mean_capacity: f64,
    pub std_capacity: f64,
    pub mean_jain: f64,
    pub std_jain: f64,
    pub mean_terminal_deviation: f64,
    pub median_convergence_iteration: f64,
    pub shared_entries: u64,
    pub failures: Vec<(u64, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub config_digest: String,
    pub seeds: Vec<u64>,
    pub points: Vec<ManifestPoint>,
}

pub fn build_manifest(spec: &SweepSpec, results: &[PointResult]) -> Manifest {
    let points = results
        .iter()
        .map(|p| ManifestPoint {
            n_femto: p.point.n_femto,
            paradigm: p.point.paradigm.label().to_string(),
            reward: p.point.reward.label(),
            seeds: p.seeds.iter().map(|s| s.seed).collect(),
            trace_digests: p.seeds.iter().map(|s| s.trace_digest.clone()).collect(),
            mean_capacity: p.mean_capacity(),
            std_capacity: p.std_capacity(),
            mean_jain: p.mean_jain(),
            std_jain: p.std_jain(),
            mean_terminal_deviation: p.mean_terminal_deviation(),
            median_convergence_iteration: p.median_convergence_iteration(),
            shared_entries: p.seeds.first().map_or(0, |s| s.shared_entries),
            failures: p.failures.clone(),
        })
        .collect();
    Manifest {
        schema: MANIFEST_SCHEMA.to_string(),
        config_digest: spec.digest(),
        seeds: spec.seeds.clone(),
        points,
    }
}

pub fn figure_csv_string(dataset: &FigureDataset) -> Result<String> {
    let mut buf = Vec::new();
    {
        use std::io::Write;
        writeln!(buf, "# schema: {FIGURE_SCHEMA}")?;
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["figure_id", "series", "x", "y_mean", "y_std"])?;
        for series in &dataset.series {
            for (x, m, s) in &series.points {
                w.write_record([
                    dataset.figure_id.to_string(),
                    series.label.clone(),
                    format!("{x}"),
                    format!("{m}"),
                    format!("{s}"),
                ])?;
            }
        }
        w.flush()?;
    }
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

/// Everything a finished sweep produced.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub results: Vec<PointResult>,
    pub datasets: Vec<FigureDataset>,
    pub manifest: Manifest,
}

/// Runs the sweep and writes `figure_<id>.csv` files plus `manifest.json`
/// into the output directory. Identical specs produce byte-identical
/// outputs.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutcome> {
    let results = run_sweep_points(spec)?;
    let datasets = build_figures(spec, &results);
    let manifest = build_manifest(spec, &results);
    write_outputs(&spec.output_dir, &datasets, &manifest)?;
    Ok(SweepOutcome {
        results,
        datasets,
        manifest,
    })
}

pub fn write_outputs(dir: &Path, datasets: &[FigureDataset], manifest: &Manifest) -> Result<()> {
    fs::create_dir_all(dir)?;
    for dataset in datasets {
        let path = dir.join(format!("figure_{}.csv", dataset.figure_id));
        fs::write(path, figure_csv_string(dataset)?)?;
    }
    let mut json = serde_json::to_string_pretty(manifest)?;
    json.push('\n');
    fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

/// One directional comparison backed by sweep data.
#[derive(Debug, Clone, Serialize)]
pub struct DirectionalCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[allow(clippy::too_many_arguments)]
fn check_pairs(
    checks: &mut Vec<DirectionalCheck>,
    results: &[PointResult],
    ns: impl Iterator<Item = usize>,
    better: (&str, &str),
    worse: (&str, &str),
    what: &str,
    extract: impl Fn(&PointResult) -> f64,
    strictly_greater: bool,
) {
    for n in ns {
        let (Some(a), Some(b)) = (
            find_point(results, n, better.0, better.1),
            find_point(results, n, worse.0, worse.1),
        ) else {
            continue;
        };
        if a.seeds.is_empty() || b.seeds.is_empty() {
            continue;
        }
        let (va, vb) = (extract(a), extract(b));
        let pass = if strictly_greater { va > vb } else { va >= vb };
        checks.push(DirectionalCheck {
            name: format!(
                "{what}: {}-{} vs {}-{} at n_femto={n}",
                better.0, better.1, worse.0, worse.1
            ),
            pass,
            detail: format!("{va:.4} vs {vb:.4}"),
        });
    }
}

/// Evaluates every seed-averaged ordering the sweep data can support:
/// capacity gains of the own-capacity reward and of cooperation, fairness
/// orderings, the reward-constant deviation ordering, and convergence
/// speed-up under cooperation.
pub fn directional_checks(spec: &SweepSpec, results: &[PointResult]) -> Vec<DirectionalCheck> {
    let mut checks = Vec::new();
    let ns = || spec.n_femto.iter().copied();

    check_pairs(
        &mut checks,
        results,
        ns(),
        ("rf3", "il"),
        ("rf1", "il"),
        "aggregate capacity",
        |p| p.mean_capacity(),
        true,
    );
    check_pairs(
        &mut checks,
        results,
        ns(),
        ("rf3", "cl"),
        ("rf3", "il"),
        "aggregate capacity",
        |p| p.mean_capacity(),
        true,
    );
    check_pairs(
        &mut checks,
        results,
        ns(),
        ("rf1", "il"),
        ("rf3", "il"),
        "jain index",
        |p| p.mean_jain(),
        false,
    );
    check_pairs(
        &mut checks,
        results,
        ns(),
        ("rf3", "cl"),
        ("rf3", "il"),
        "jain index",
        |p| p.mean_jain(),
        false,
    );
    // Lower terminal deviation is better; phrase as worse >= better.
    check_pairs(
        &mut checks,
        results,
        ns(),
        ("rf2-k80", "il"),
        ("rf1", "il"),
        "terminal deviation (should not be lower)",
        |p| p.mean_terminal_deviation(),
        false,
    );
    check_pairs(
        &mut checks,
        results,
        ns(),
        ("rf2-k10000", "il"),
        ("rf2-k80", "il"),
        "terminal deviation (should not be lower)",
        |p| p.mean_terminal_deviation(),
        false,
    );
    // Cooperation converges no later than independent learning.
    check_pairs(
        &mut checks,
        results,
        ns(),
        ("rf1", "il"),
        ("rf1", "cl"),
        "median convergence iteration (cl should be earlier)",
        |p| p.median_convergence_iteration(),
        true,
    );
    checks
}
