//! Config-driven experiment runner behind the `latticefibers` binary.
//!
//! A run evaluates one mode over a set of quasi-momenta. Every `k` is an
//! isolated task: a numerical failure is recorded in the report and the
//! remaining tasks continue. Results are merged in task order, so a report
//! depends only on the config (timings are left out with `stable_output`).

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::birman_schwinger::{bs_count, bs_matrix, direct_count};
use crate::dispersion::{band_params, MassPair, QuasiMomentum};
use crate::error::{Error, Result};
use crate::fiber::{
    classify_dichotomy, decompose, predicted_counts, predicted_counts_in_box, predicted_eigenvalues,
    verify_block_structure, Dichotomy, Regime,
};
use crate::lattice::LatticeBox;
use crate::plot::{line_chart, Series};
use crate::potential::{classify_quasimomentum, hypothesis_certificate, Potential, PotentialFile};
use crate::spectral::{convergence_sweep, count_discrete_sweep, Verdict};

pub const THREADS_ENV: &str = "LATTICEFIBERS_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Band,
    Spectrum,
    Scan,
    Dichotomy,
    BsCount,
    Convergence,
    Decompose,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Band => "band",
            Mode::Spectrum => "spectrum",
            Mode::Scan => "scan",
            Mode::Dichotomy => "dichotomy",
            Mode::BsCount => "bs-count",
            Mode::Convergence => "convergence",
            Mode::Decompose => "decompose",
        }
    }
}

/// A torus coordinate: a number or one of the strings `"pi"`, `"-pi"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Angle {
    Number(f64),
    Symbol(String),
}

impl Angle {
    fn value(&self) -> std::result::Result<f64, String> {
        match self {
            Angle::Number(x) => Ok(*x),
            Angle::Symbol(s) => match s.trim() {
                "pi" | "π" => Ok(PI),
                "-pi" | "-π" => Ok(-PI),
                other => Err(format!("unknown angle {other:?}; use a number, \"pi\" or \"-pi\"")),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum KSpec {
    Point(Vec<Angle>),
    List(Vec<Vec<Angle>>),
    /// Tensor grid with `k_m = -π + 2π(m+1)/N`, `m = 0..N`; always contains `π`.
    Grid { points_per_axis: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignChoice {
    Negative,
    Positive,
}

/// Seeded random finite-support potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomPotential {
    pub sites: usize,
    /// Sites are drawn from `[-radius, radius]^d`.
    pub radius: i64,
    pub sign: SignChoice,
    pub min_strength: f64,
    pub max_strength: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialSpec {
    /// Path to a potential file, relative to the config file.
    File(PathBuf),
    Random { random: RandomPotential },
    Inline(PotentialFile),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub masses: MassPair,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSpec>,
    pub k: KSpec,
    #[serde(default)]
    pub radii: Vec<usize>,
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub z: Vec<f64>,
    /// Fiber window; defaults to the largest radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

/// A validated config with every input resolved.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub masses: MassPair,
    pub dimension: usize,
    pub potential: Option<Potential>,
    pub ks: Vec<QuasiMomentum>,
    pub grid: bool,
}

fn line_of(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.find(&needle).map(|pos| text[..pos].matches('\n').count() + 1).unwrap_or(1)
}

fn config_error(text: &str, key: &str, message: impl Into<String>) -> Error {
    Error::Config { line: line_of(text, key), message: message.into() }
}

/// `k_m = -π + 2π(m+1)/N` for `m = 0..N`; the last point is exactly `π`.
pub fn k_grid_axis(points: usize) -> Vec<f64> {
    (0..points)
        .map(|m| if m + 1 == points { PI } else { -PI + 2.0 * PI * (m + 1) as f64 / points as f64 })
        .collect()
}

fn tensor_grid(dim: usize, axis: &[f64]) -> Vec<Vec<f64>> {
    let n = axis.len();
    (0..n.pow(dim as u32))
        .map(|mut i| {
            let mut k = vec![0.0; dim];
            for c in k.iter_mut().rev() {
                *c = axis[i % n];
                i /= n;
            }
            k
        })
        .collect()
}

pub fn random_potential(dim: usize, spec: &RandomPotential, seed: u64) -> Result<Potential> {
    if spec.radius < 0 || !(spec.min_strength > 0.0 && spec.min_strength <= spec.max_strength) {
        return Err(Error::InvalidArgument("random potential needs radius >= 0 and 0 < min <= max".into()));
    }
    let side = (2 * spec.radius + 1) as usize;
    let capacity = side.checked_pow(dim as u32).unwrap_or(usize::MAX);
    if spec.sites == 0 || spec.sites > capacity {
        return Err(Error::InvalidArgument(format!("cannot place {} distinct sites", spec.sites)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sign = match spec.sign {
        SignChoice::Negative => -1.0,
        SignChoice::Positive => 1.0,
    };
    let mut table = std::collections::BTreeMap::new();
    while table.len() < spec.sites {
        let x: Vec<i64> = (0..dim).map(|_| rng.random_range(-spec.radius..=spec.radius)).collect();
        let strength = if spec.min_strength == spec.max_strength {
            spec.min_strength
        } else {
            rng.random_range(spec.min_strength..spec.max_strength)
        };
        table.entry(x).or_insert(sign * strength);
    }
    Potential::finite(dim, table)
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Parses and validates config text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config { line: e.line().max(1), message: e.to_string() })?;
        let d = config.dimension;
        if d == 0 {
            return Err(config_error(text, "dimension", "dimension must be at least 1"));
        }
        let ks: Vec<Vec<f64>> = match &config.k {
            KSpec::Point(p) => vec![angles(text, p)?],
            KSpec::List(list) => list.iter().map(|p| angles(text, p)).collect::<Result<_>>()?,
            KSpec::Grid { points_per_axis } => {
                if *points_per_axis == 0 {
                    return Err(config_error(text, "points_per_axis", "points_per_axis must be at least 1"));
                }
                tensor_grid(d, &k_grid_axis(*points_per_axis))
            }
        };
        if ks.is_empty() {
            return Err(config_error(text, "k", "no quasi-momenta given"));
        }
        let ks = ks
            .into_iter()
            .map(|k| {
                if k.len() != d {
                    return Err(config_error(text, "k", format!("quasi-momentum {k:?} does not have {d} components")));
                }
                QuasiMomentum::new(k).map_err(|e| config_error(text, "k", e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        if config.radii.iter().any(|r| *r == 0) || config.radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_error(text, "radii", "radii must be positive and strictly increasing"));
        }
        if config.deltas.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(config_error(text, "deltas", "deltas must be positive"));
        }
        if config.z.iter().any(|x| !x.is_finite()) {
            return Err(config_error(text, "z", "z values must be finite"));
        }
        let potential = match &config.potential {
            None => None,
            Some(PotentialSpec::File(p)) => {
                let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                Some(Potential::read(&path).map_err(|e| config_error(text, "potential", format!("{}: {e}", path.display())))?)
            }
            Some(PotentialSpec::Random { random }) => {
                Some(random_potential(d, random, config.seed).map_err(|e| config_error(text, "random", e.to_string()))?)
            }
            Some(PotentialSpec::Inline(file)) => {
                Some(Potential::try_from(file.clone()).map_err(|e| config_error(text, "potential", e.to_string()))?)
            }
        };
        if let Some(v) = &potential {
            if v.dim() != d {
                return Err(config_error(text, "potential", format!("potential has dimension {}, expected {d}", v.dim())));
            }
        }
        Ok(Self {
            masses: config.masses,
            dimension: d,
            potential,
            ks,
            grid: matches!(config.k, KSpec::Grid { .. }),
            config,
        })
    }

    /// Checks that the inputs `mode` needs are present.
    pub fn check_mode(&self, mode: Mode, text: &str) -> Result<()> {
        let c = &self.config;
        if let Some(m) = c.mode {
            if m != mode {
                return Err(config_error(text, "mode", format!("config is for mode {}, not {}", m.name(), mode.name())));
            }
        }
        let need_potential = !matches!(mode, Mode::Band);
        if need_potential && self.potential.is_none() {
            return Err(config_error(text, "potential", format!("mode {} needs a potential", mode.name())));
        }
        let need = |ok: bool, key: &str, msg: &str| if ok { Ok(()) } else { Err(config_error(text, key, msg)) };
        match mode {
            Mode::Band | Mode::Decompose => Ok(()),
            Mode::Spectrum | Mode::Scan => {
                need(!c.radii.is_empty(), "radii", "at least one radius is required")?;
                need(!c.deltas.is_empty(), "deltas", "at least one delta is required")
            }
            Mode::Convergence | Mode::Dichotomy => {
                need(c.radii.len() >= 3, "radii", "at least three radii are required")?;
                need(!c.deltas.is_empty(), "deltas", "at least one delta is required")
            }
            Mode::BsCount => {
                need(!c.radii.is_empty(), "radii", "at least one periodic box radius is required")?;
                need(!c.z.is_empty(), "z", "at least one z value is required")
            }
        }
    }
}

fn angles(text: &str, p: &[Angle]) -> Result<Vec<f64>> {
    p.iter().map(|a| a.value().map_err(|m| config_error(text, "k", m))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaskResult {
    pub index: usize,
    pub k: QuasiMomentum,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timings {
    pub total_ms: f64,
    pub tasks_ms: Vec<f64>,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub tool: ToolInfo,
    pub mode: Mode,
    pub config: Value,
    pub results: Vec<TaskResult>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub jobs: Option<usize>,
    pub stable_output: bool,
}

/// Worker count from `--jobs`, capped by `LATTICEFIBERS_THREADS` when set.
pub fn worker_count(jobs: Option<usize>) -> usize {
    let default = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let mut n = jobs.unwrap_or(default).max(1);
    if let Some(cap) = std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        if cap > 0 {
            n = n.min(cap);
        }
    }
    n
}

struct Outcome {
    value: Result<Value>,
    warnings: Vec<String>,
}

pub fn run(exp: &Experiment, mode: Mode, opts: &RunOptions) -> Result<RunReport> {
    let start = Instant::now();
    let workers = worker_count(opts.jobs);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<(Outcome, f64)> = pool.install(|| {
        exp.ks
            .par_iter()
            .map(|k| {
                let t = Instant::now();
                let outcome = run_task(exp, mode, k);
                (outcome, t.elapsed().as_secs_f64() * 1e3)
            })
            .collect()
    });

    let mut warnings = Vec::new();
    if let Some(v) = &exp.potential {
        let cert = hypothesis_certificate(v);
        if !(cert.holds_a && cert.holds_b) {
            warnings.push(format!("hypothesis uncertified: {}", cert.reason));
        }
    }
    let mut results = Vec::with_capacity(outcomes.len());
    let mut tasks_ms = Vec::with_capacity(outcomes.len());
    for (index, ((outcome, ms), k)) in outcomes.into_iter().zip(&exp.ks).enumerate() {
        warnings.extend(outcome.warnings.into_iter().map(|w| format!("task {index}: {w}")));
        tasks_ms.push(ms);
        results.push(match outcome.value {
            Ok(value) => TaskResult { index, k: k.clone(), status: "ok", error: None, result: Some(value) },
            Err(e) => TaskResult { index, k: k.clone(), status: "error", error: Some(e.to_string()), result: None },
        });
    }
    Ok(RunReport {
        tool: ToolInfo { name: env!("CARGO_PKG_NAME"), version: env!("CARGO_PKG_VERSION") },
        mode,
        config: serde_json::to_value(&exp.config)?,
        results,
        warnings,
        timings: (!opts.stable_output).then(|| Timings {
            total_ms: start.elapsed().as_secs_f64() * 1e3,
            tasks_ms,
            workers,
        }),
    })
}

fn run_task(exp: &Experiment, mode: Mode, k: &QuasiMomentum) -> Outcome {
    let mut warnings = Vec::new();
    let value = match mode {
        Mode::Band => band_task(exp, k),
        Mode::Spectrum => spectrum_task(exp, k),
        Mode::Scan => scan_task(exp, k),
        Mode::Convergence => convergence_task(exp, k, &mut warnings),
        Mode::Dichotomy => dichotomy_task(exp, k, &mut warnings),
        Mode::BsCount => bs_task(exp, k),
        Mode::Decompose => decompose_task(exp, k),
    };
    Outcome { value, warnings }
}

fn potential(exp: &Experiment) -> Result<&Potential> {
    exp.potential.as_ref().ok_or_else(|| Error::InvalidArgument("no potential configured".into()))
}

fn band_task(exp: &Experiment, k: &QuasiMomentum) -> Result<Value> {
    let band = band_params(&exp.masses, k);
    Ok(json!({
        "band": band,
        "degenerate": band.is_degenerate(),
        "boundary": classify_quasimomentum(k),
    }))
}

fn spectrum_json(s: &crate::spectral::SpectrumResult, radius: usize) -> Value {
    json!({
        "radius": radius,
        "margin": s.margin,
        "complete": s.complete,
        "n_below": s.n_below,
        "n_above": s.n_above,
        "below": s.below,
        "above": s.above,
    })
}

fn spectrum_task(exp: &Experiment, k: &QuasiMomentum) -> Result<Value> {
    let v = potential(exp)?;
    let c = &exp.config;
    let mut rows = Vec::new();
    for &r in &c.radii {
        for s in count_discrete_sweep(&exp.masses, k, v, r, &c.deltas)? {
            rows.push(spectrum_json(&s, r));
        }
    }
    Ok(json!({ "band": band_params(&exp.masses, k), "spectra": rows }))
}

fn scan_task(exp: &Experiment, k: &QuasiMomentum) -> Result<Value> {
    let v = potential(exp)?;
    let c = &exp.config;
    let radius = *c.radii.last().expect("validated");
    let margin = c.deltas.iter().cloned().fold(f64::INFINITY, f64::min);
    let band = band_params(&exp.masses, k);
    let s = count_discrete_sweep(&exp.masses, k, v, radius, &[margin])?.remove(0);
    Ok(json!({
        "ratio": band.ratio,
        "boundary": band.is_degenerate(),
        "radius": radius,
        "margin": margin,
        "n_below": s.n_below,
        "n_above": s.n_above,
    }))
}

fn convergence_task(exp: &Experiment, k: &QuasiMomentum, warnings: &mut Vec<String>) -> Result<Value> {
    let v = potential(exp)?;
    let c = &exp.config;
    let verdicts = convergence_sweep(&exp.masses, k, v, &c.radii, &c.deltas)?;
    for cv in &verdicts {
        if cv.verdict == Verdict::Inconclusive {
            warnings.push(format!("inconclusive convergence at margin {:e}", cv.margin));
        }
    }
    Ok(json!({ "band": band_params(&exp.masses, k), "convergence": verdicts }))
}

fn dichotomy_task(exp: &Experiment, k: &QuasiMomentum, warnings: &mut Vec<String>) -> Result<Value> {
    let v = potential(exp)?;
    let c = &exp.config;
    let verdict = classify_dichotomy(&exp.masses, k, v)?;
    let study = convergence_sweep(&exp.masses, k, v, &c.radii, &c.deltas)?;
    let consistent = study.iter().all(|cv| match (verdict.verdict, cv.verdict) {
        (Dichotomy::Infinite, Verdict::Growing) => true,
        (Dichotomy::Finite, Verdict::Stable(_)) => true,
        _ => false,
    });
    if !consistent {
        warnings.push("finite-volume study disagrees with the classifier".into());
    }
    let predicted = if verdict.regime == Regime::NondegenerateBand {
        Value::Null
    } else {
        let window = c.window.unwrap_or(0).max(*c.radii.last().expect("validated") as u64);
        let family = decompose(&exp.masses, k, v, window)?;
        let mut rows = Vec::new();
        let mut solvable = true;
        'outer: for &margin in &c.deltas {
            for &r in &c.radii {
                let in_box = predicted_counts_in_box(&family, margin, r);
                let infinite = predicted_counts(&family, margin, r as u64);
                match (in_box, infinite) {
                    (Ok(b), Ok(i)) => rows.push(json!({ "margin": margin, "radius": r, "box": b, "infinite_volume": i })),
                    (Err(Error::NoClosedForm(_)), _) | (_, Err(Error::NoClosedForm(_))) => {
                        solvable = false;
                        break 'outer;
                    }
                    (Err(e), _) | (_, Err(e)) => return Err(e),
                }
            }
        }
        if solvable {
            let eigen: Vec<Value> = predicted_eigenvalues(&family, window)?
                .into_iter()
                .map(|(x, e)| json!({ "fiber": x, "eigenvalue": e }))
                .collect();
            json!({ "window": window, "counts": rows, "eigenvalues": eigen })
        } else {
            Value::Null
        }
    };
    Ok(json!({
        "band": band_params(&exp.masses, k),
        "dichotomy": verdict,
        "convergence": study,
        "consistent": consistent,
        "predicted": predicted,
    }))
}

fn bs_task(exp: &Experiment, k: &QuasiMomentum) -> Result<Value> {
    let v = potential(exp)?;
    let c = &exp.config;
    let mut rows = Vec::new();
    for &r in &c.radii {
        let lattice = LatticeBox::periodic(exp.dimension, r)?;
        for &z in &c.z {
            let row = bs_matrix(&exp.masses, k, v, z, &lattice).and_then(|bs| {
                let count = bs_count(&bs)?;
                let direct = direct_count(&exp.masses, k, v, &lattice, z, bs.side)?;
                Ok(json!({
                    "radius": r,
                    "z": z,
                    "side": bs.side,
                    "bs_count": count,
                    "direct_count": direct,
                    "norm": bs.norm(),
                }))
            });
            rows.push(row.unwrap_or_else(|e| json!({ "radius": r, "z": z, "error": e.to_string() })));
        }
    }
    Ok(json!({ "band": band_params(&exp.masses, k), "counts": rows }))
}

fn decompose_task(exp: &Experiment, k: &QuasiMomentum) -> Result<Value> {
    let v = potential(exp)?;
    let c = &exp.config;
    let window = c.window.or_else(|| c.radii.last().map(|r| *r as u64)).unwrap_or(10);
    let family = decompose(&exp.masses, k, v, window)?;
    let check_radius = c.radii.first().copied().unwrap_or(4);
    let residual = verify_block_structure(&exp.masses, k, v, check_radius)?;
    let eigen = predicted_eigenvalues(&family, window).ok();
    let fibers: Vec<Value> = family
        .fibers
        .iter()
        .filter(|(_, f)| !f.is_zero())
        .map(|(x, f)| {
            let e = eigen
                .as_ref()
                .and_then(|list| list.iter().find(|(y, _)| y == x).map(|(_, e)| *e));
            json!({ "fiber": x, "potential": f.label(), "eigenvalue": e })
        })
        .collect();
    Ok(json!({
        "axes": family.directions.axes(),
        "offset": family.offset,
        "reduced_k": family.reduced_k,
        "window": window,
        "fiber_count": family.fibers.len(),
        "nonzero_fibers": fibers,
        "block_check_radius": check_radius,
        "max_offblock": residual,
    }))
}

/// A CSV table: file stem, header and rows.
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

fn k_label(k: &QuasiMomentum) -> String {
    k.components().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
}

fn s(v: &Value) -> String {
    match v {
        Value::String(x) => x.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn verdict_label(v: &Value) -> String {
    match v.get("stable") {
        Some(n) => format!("stable({n})"),
        None => s(v),
    }
}

fn convergence_rows(index: usize, k: &QuasiMomentum, list: &Value, rows: &mut Vec<Vec<String>>) {
    for cv in list.as_array().into_iter().flatten() {
        let radii = cv["radii"].as_array().cloned().unwrap_or_default();
        for (i, r) in radii.iter().enumerate() {
            rows.push(vec![
                index.to_string(),
                k_label(k),
                s(&cv["margin"]),
                s(r),
                s(&cv["n_below"][i]),
                s(&cv["n_above"][i]),
                s(&cv["totals"][i]),
                verdict_label(&cv["verdict"]),
            ]);
        }
    }
}

const CONVERGENCE_HEADER: [&str; 8] = ["index", "k", "margin", "radius", "n_below", "n_above", "total", "verdict"];

pub fn tables(report: &RunReport) -> Vec<Table> {
    let mut out = Vec::new();
    let ok = || report.results.iter().filter_map(|t| t.result.as_ref().map(|r| (t.index, &t.k, r)));
    match report.mode {
        Mode::Band => out.push(Table {
            name: "band",
            header: vec!["index", "k", "ratio", "band_min", "band_max", "center", "degenerate"],
            rows: ok()
                .map(|(i, k, r)| {
                    let b = &r["band"];
                    vec![i.to_string(), k_label(k), s(&b["ratio"]), s(&b["band_min"]), s(&b["band_max"]), s(&b["center"]), s(&r["degenerate"])]
                })
                .collect(),
        }),
        Mode::Spectrum => out.push(Table {
            name: "spectrum",
            header: vec!["index", "k", "radius", "margin", "n_below", "n_above", "complete"],
            rows: ok()
                .flat_map(|(i, k, r)| {
                    r["spectra"].as_array().cloned().unwrap_or_default().into_iter().map(move |e| {
                        vec![i.to_string(), k_label(k), s(&e["radius"]), s(&e["margin"]), s(&e["n_below"]), s(&e["n_above"]), s(&e["complete"])]
                    })
                })
                .collect(),
        }),
        Mode::Scan => out.push(Table {
            name: "scan",
            header: vec!["index", "k", "ratio", "boundary", "n_below", "n_above"],
            rows: ok()
                .map(|(i, k, r)| vec![i.to_string(), k_label(k), s(&r["ratio"]), s(&r["boundary"]), s(&r["n_below"]), s(&r["n_above"])])
                .collect(),
        }),
        Mode::Convergence => {
            let mut rows = Vec::new();
            for (i, k, r) in ok() {
                convergence_rows(i, k, &r["convergence"], &mut rows);
            }
            out.push(Table { name: "convergence", header: CONVERGENCE_HEADER.to_vec(), rows });
        }
        Mode::Dichotomy => {
            let mut rows = Vec::new();
            let mut conv = Vec::new();
            let mut pred = Vec::new();
            for (i, k, r) in ok() {
                let d = &r["dichotomy"];
                rows.push(vec![i.to_string(), k_label(k), s(&d["verdict"]), s(&d["regime"]), s(&d["witness"]), s(&r["consistent"])]);
                convergence_rows(i, k, &r["convergence"], &mut conv);
                for p in r["predicted"]["counts"].as_array().into_iter().flatten() {
                    pred.push(vec![i.to_string(), k_label(k), s(&p["margin"]), s(&p["radius"]), s(&p["box"]), s(&p["infinite_volume"])]);
                }
            }
            out.push(Table {
                name: "dichotomy",
                header: vec!["index", "k", "verdict", "regime", "witness", "consistent"],
                rows,
            });
            out.push(Table { name: "convergence", header: CONVERGENCE_HEADER.to_vec(), rows: conv });
            out.push(Table {
                name: "predicted",
                header: vec!["index", "k", "margin", "radius", "box", "infinite_volume"],
                rows: pred,
            });
        }
        Mode::BsCount => out.push(Table {
            name: "bs_count",
            header: vec!["index", "k", "radius", "z", "bs_count", "direct_count", "norm", "error"],
            rows: ok()
                .flat_map(|(i, k, r)| {
                    r["counts"].as_array().cloned().unwrap_or_default().into_iter().map(move |e| {
                        vec![
                            i.to_string(),
                            k_label(k),
                            s(&e["radius"]),
                            s(&e["z"]),
                            s(&e["bs_count"]),
                            s(&e["direct_count"]),
                            s(&e["norm"]),
                            s(&e["error"]),
                        ]
                    })
                })
                .collect(),
        }),
        Mode::Decompose => out.push(Table {
            name: "fibers",
            header: vec!["index", "k", "fiber", "potential", "eigenvalue"],
            rows: ok()
                .flat_map(|(i, k, r)| {
                    r["nonzero_fibers"].as_array().cloned().unwrap_or_default().into_iter().map(move |f| {
                        vec![i.to_string(), k_label(k), s(&f["fiber"]), s(&f["potential"]), s(&f["eigenvalue"])]
                    })
                })
                .collect(),
        }),
    }
    let errors: Vec<Vec<String>> = report
        .results
        .iter()
        .filter_map(|t| t.error.as_ref().map(|e| vec![t.index.to_string(), k_label(&t.k), e.clone()]))
        .collect();
    if !errors.is_empty() {
        out.push(Table { name: "errors", header: vec!["index", "k", "error"], rows: errors });
    }
    out
}

fn counts_vs_radius(report: &RunReport) -> Vec<Series> {
    let mut series = Vec::new();
    for t in &report.results {
        let Some(r) = &t.result else { continue };
        for cv in r["convergence"].as_array().into_iter().flatten() {
            let radii = cv["radii"].as_array().cloned().unwrap_or_default();
            let points = radii
                .iter()
                .zip(cv["totals"].as_array().cloned().unwrap_or_default())
                .map(|(a, b)| (a.as_f64().unwrap_or(f64::NAN), b.as_f64().unwrap_or(f64::NAN)))
                .collect();
            series.push(Series { label: format!("k#{} δ={}", t.index, s(&cv["margin"])), points });
        }
    }
    series
}

/// SVG figures for the report, as `(file stem, markup)`.
pub fn plots(report: &RunReport) -> Vec<(&'static str, String)> {
    let ok = || report.results.iter().filter_map(|t| t.result.as_ref().map(|r| (t.index as f64, r)));
    match report.mode {
        Mode::Band => {
            let edge = |key: &str| ok().map(|(i, r)| (i, r["band"][key].as_f64().unwrap_or(f64::NAN))).collect();
            vec![(
                "band",
                line_chart(
                    "Band edges along the k-path",
                    "k index",
                    "energy",
                    &[Series { label: "E_min".into(), points: edge("band_min") }, Series { label: "E_max".into(), points: edge("band_max") }],
                ),
            )]
        }
        Mode::Scan => {
            let col = |key: &str| ok().map(|(i, r)| (i, r[key].as_f64().unwrap_or(f64::NAN))).collect();
            vec![(
                "scan",
                line_chart(
                    "Discrete eigenvalues across the k-grid",
                    "k index",
                    "count",
                    &[Series { label: "below".into(), points: col("n_below") }, Series { label: "above".into(), points: col("n_above") }],
                ),
            )]
        }
        Mode::Spectrum => {
            let mut series: Vec<Series> = Vec::new();
            for t in &report.results {
                let Some(r) = &t.result else { continue };
                let mut by_margin: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
                for e in r["spectra"].as_array().into_iter().flatten() {
                    let key = s(&e["margin"]);
                    let total = e["n_below"].as_f64().unwrap_or(0.0) + e["n_above"].as_f64().unwrap_or(0.0);
                    let point = (e["radius"].as_f64().unwrap_or(f64::NAN), total);
                    match by_margin.iter_mut().find(|(m, _)| *m == key) {
                        Some((_, pts)) => pts.push(point),
                        None => by_margin.push((key, vec![point])),
                    }
                }
                series.extend(by_margin.into_iter().map(|(m, points)| Series { label: format!("k#{} δ={m}", t.index), points }));
            }
            vec![("counts_vs_radius", line_chart("Discrete eigenvalue counts", "box radius R", "count", &series))]
        }
        Mode::Convergence | Mode::Dichotomy => vec![(
            "counts_vs_radius",
            line_chart("Discrete eigenvalue counts", "box radius R", "count", &counts_vs_radius(report)),
        )],
        Mode::BsCount => {
            let series: Vec<Series> = report
                .results
                .iter()
                .filter_map(|t| t.result.as_ref().map(|r| (t.index, r)))
                .map(|(i, r)| Series {
                    label: format!("k#{i}"),
                    points: r["counts"]
                        .as_array()
                        .into_iter()
                        .flatten()
                        .filter(|e| e.get("norm").is_some())
                        .map(|e| (e["z"].as_f64().unwrap_or(f64::NAN), e["norm"].as_f64().unwrap_or(f64::NAN)))
                        .collect(),
                })
                .collect();
            vec![("bs_norm", line_chart("Birman–Schwinger norm", "z", "norm", &series))]
        }
        Mode::Decompose => {
            let series: Vec<Series> = report
                .results
                .iter()
                .filter_map(|t| t.result.as_ref().map(|r| (t.index, r)))
                .map(|(i, r)| Series {
                    label: format!("k#{i}"),
                    points: r["nonzero_fibers"]
                        .as_array()
                        .into_iter()
                        .flatten()
                        .filter_map(|f| Some((f["fiber"].get(0)?.as_f64()?, f["eigenvalue"].as_f64()?)))
                        .collect(),
                })
                .collect();
            vec![("fiber_eigenvalues", line_chart("Fiber bound states", "fiber index", "eigenvalue", &series))]
        }
    }
}

/// Writes `report.json`, `tables/*.csv`, `plots/*.svg` and, when the
/// potential is serializable, `potential.json`.
pub fn write_outputs(report: &RunReport, exp: &Experiment, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out.join("tables"))?;
    std::fs::create_dir_all(out.join("plots"))?;
    std::fs::write(out.join("report.json"), serde_json::to_string_pretty(report)? + "\n")?;
    for table in tables(report) {
        let mut w = csv::Writer::from_path(out.join("tables").join(format!("{}.csv", table.name)))?;
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    for (name, svg) in plots(report) {
        std::fs::write(out.join("plots").join(format!("{name}.svg")), svg)?;
    }
    if let Some(v) = &exp.potential {
        if v.to_json().is_ok() {
            v.write(&out.join("potential.json"))?;
        }
    }
    Ok(())
}

/// Output directory: the explicit override, then the config, then `./out`.
pub fn output_dir(exp: &Experiment, cli: Option<PathBuf>, config_dir: &Path) -> PathBuf {
    cli.or_else(|| exp.config.out.as_ref().map(|p| if p.is_absolute() { p.clone() } else { config_dir.join(p) }))
        .unwrap_or_else(|| PathBuf::from("out"))
}
