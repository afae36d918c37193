//! Scenario runner behind the `fracheat` binary: scenario files, the
//! content-addressed run store, verification suites and CSV/JSON output.

pub mod csv;
pub mod error;
pub mod scenario;
pub mod store;
pub mod suite;

use std::path::{Path, PathBuf};

use fracheat_core::evolution::{heat_kernel, minimal_solution, EvolveOptions, Scheme};
use fracheat_core::{
    assemble_operator_with, build_grid, Domain, ExponentMap, FractionalParams, HardyConstants,
    PotentialSampling,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

pub use error::{HarnessError, Result};
pub use scenario::{load_scenario, parse_scenario, InitialData, KSchedule, Scenario};
pub use store::RunStore;
pub use suite::{run_suite, validate_for_suite, Report, RunOptions, RunOutcome, Suite};

use crate::csv::{num, CsvWriter};
use crate::error::Context;
use crate::scenario::{hex_digest, parse_c};
use crate::store::write_atomic;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "FRACHEAT_OUT";
pub const DEFAULT_OUT: &str = "fracheat-out";

/// Where a command writes: a store root, or one explicit file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Root(PathBuf),
    File(PathBuf),
}

impl Target {
    /// A path with an extension names a file; anything else is a store root.
    /// Without `--out` the root comes from [`OUT_ENV`] or [`DEFAULT_OUT`].
    pub fn resolve(out: Option<&Path>) -> Target {
        match out {
            Some(p) if p.extension().is_some() => Target::File(p.to_path_buf()),
            Some(p) => Target::Root(p.to_path_buf()),
            None => Target::Root(
                std::env::var_os(OUT_ENV)
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            ),
        }
    }

    pub fn root(&self) -> Result<&Path> {
        match self {
            Target::Root(p) => Ok(p),
            Target::File(p) => Err(HarnessError::Usage(format!(
                "{} names a file; this command writes a directory tree",
                p.display()
            ))),
        }
    }
}

/// What a command did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Written {
    Fresh(Vec<PathBuf>),
    Cached(Vec<PathBuf>),
}

impl Written {
    pub fn paths(&self) -> &[PathBuf] {
        match self {
            Written::Fresh(p) | Written::Cached(p) => p,
        }
    }
}

/// `A(d,α)`, `c*`, `β*` and optionally `β(c)`.
pub fn constants_json(d: usize, alpha: f64, c: Option<&str>) -> Result<Value> {
    let params = FractionalParams::new(d, alpha).context(|| format!("(d, α) = ({d}, {alpha})"))?;
    let hc = HardyConstants::new(params).context(|| "constants".into())?;
    let map = ExponentMap::new(params).context(|| "constants".into())?;
    let mut out = json!({
        "d": d,
        "alpha": alpha,
        "intensity": hc.intensity,
        "c_star": hc.c_star,
        "beta_star": params.beta_star(),
    });
    if let Some(spec) = c {
        let c = parse_c(&Value::String(spec.into()), hc.c_star).map_err(HarnessError::Usage)?;
        let beta = if c == 0.0 {
            0.0
        } else {
            map.beta_of_c(c).context(|| format!("β(c) for c = {c}"))?
        };
        out["c"] = json!(c);
        out["beta"] = json!(beta);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct AssembleSpec {
    pub d: usize,
    pub alpha: f64,
    pub c: String,
    /// `None` means no truncation.
    pub k: Option<f64>,
    pub domain: Vec<f64>,
    pub h: f64,
}

fn domain_from(d: usize, v: &[f64]) -> Result<Domain> {
    match (d, v.len()) {
        (1, 2) => Ok(Domain::interval(v[0], v[1])),
        (2, 2) => Ok(Domain::Box {
            lo: [v[0]; 2],
            hi: [v[1]; 2],
        }),
        (2, 4) => Ok(Domain::Box {
            lo: [v[0], v[2]],
            hi: [v[1], v[3]],
        }),
        _ => Err(HarnessError::Usage(format!(
            "domain {v:?} does not fit d = {d}"
        ))),
    }
}

/// Operator `H = L0 − diag(min(V, k))` as `(i, j, value)` triples over the
/// nonzero entries, plus a JSON header.
pub fn assemble_files(spec: &AssembleSpec, target: &Target, force: bool) -> Result<Written> {
    let params = FractionalParams::new(spec.d, spec.alpha).context(|| "parameters".into())?;
    let map = ExponentMap::new(params).context(|| "parameters".into())?;
    let c = parse_c(&Value::String(spec.c.clone()), map.c_star()).map_err(HarnessError::Usage)?;
    let domain = domain_from(spec.d, &spec.domain)?;
    let hash = hex_digest(
        serde_json::to_string(spec)
            .expect("spec serializes")
            .as_bytes(),
    );
    let (csv_path, header_path) = match target {
        Target::File(p) => (p.clone(), p.with_extension("json")),
        Target::Root(r) => {
            let dir = RunStore::open(r)?.operator_dir(&hash);
            (dir.join("operator.csv"), dir.join("operator.json"))
        }
    };
    let paths = vec![csv_path.clone(), header_path.clone()];
    if !force && csv_path.exists() && header_path.exists() {
        return Ok(Written::Cached(paths));
    }
    let grid = build_grid(domain, spec.h).context(|| "grid".into())?;
    let sampling = if spec.d == 1 {
        PotentialSampling::HarmonicConsistent
    } else {
        PotentialSampling::Point
    };
    let k = spec.k.unwrap_or(f64::INFINITY);
    let op = assemble_operator_with(&grid, params, c, k, sampling).context(|| "assembly".into())?;
    let h = op.hamiltonian();
    let mut w = CsvWriter::new(&["i", "j", "value"]);
    let mut entries = 0usize;
    for j in 0..h.ncols() {
        for i in 0..h.nrows() {
            let v = h[(i, j)];
            if v != 0.0 {
                w.row(&[i.to_string(), j.to_string(), num(v)]);
                entries += 1;
            }
        }
    }
    let body = w.finish();
    let header = json!({
        "grid": {
            "d": spec.d,
            "domain": spec.domain,
            "h": spec.h,
            "shape": &grid.shape[..spec.d],
            "nodes": grid.len(),
            "ordering": "x-fastest, cell centres",
        },
        "constants": {
            "alpha": spec.alpha,
            "intensity": map.intensity(),
            "c_star": map.c_star(),
            "c": c,
            "c_spec": spec.c,
            "k": spec.k,
            "potential_sampling": match sampling {
                PotentialSampling::HarmonicConsistent => "harmonic_consistent",
                PotentialSampling::Point => "point",
            },
        },
        "entries": entries,
        "checksum": format!("sha256:{}", hex_digest(body.as_bytes())),
    });
    write_atomic(&csv_path, body.as_bytes())?;
    write_atomic(
        &header_path,
        serde_json::to_string_pretty(&header)
            .expect("json")
            .as_bytes(),
    )?;
    Ok(Written::Fresh(paths))
}

/// Per-level convergence record of the monotone scheme.
#[derive(Debug, Clone, Serialize)]
struct LevelConvergence {
    h: f64,
    ks: Vec<f64>,
    min_increment: f64,
    monotone: bool,
    last_increment: f64,
    converged: bool,
    supercritical: bool,
    files: Vec<String>,
}

/// Runs the monotone scheme on every level; writes one CSV per level and
/// time plus `convergence.json`.
pub fn evolve_files(scenario: &Scenario, root: &Path, force: bool) -> Result<Written> {
    let store = RunStore::open(root)?;
    let hash = store.record_scenario(scenario)?;
    let lock = store.lock(&hash);
    let _guard = lock.lock().expect("store lock poisoned");
    let dir = store.trajectory_dir(&hash);
    let report = dir.join("convergence.json");
    if !force && report.exists() {
        return Ok(Written::Cached(vec![report]));
    }
    let levels: Vec<LevelConvergence> = scenario
        .grids()
        .iter()
        .enumerate()
        .map(|(li, g)| {
            let op =
                fracheat_core::assemble_operator(g, scenario.params(), scenario.c, f64::INFINITY)
                    .context(|| format!("assembly at h = {}", g.h))?;
            let u0 = scenario.u0.sample(g);
            let ks = scenario.ks(&op.potential)?;
            let sol = minimal_solution(
                &op,
                &u0,
                &scenario.times,
                &ks,
                scenario.c_star,
                EvolveOptions::with_scheme(scenario.scheme),
            )
            .context(|| format!("minimal solution at h = {}", g.h))?;
            let mut files = Vec::new();
            for (ti, u) in sol.solution().states.iter().enumerate() {
                let name = format!("level{li}_t{ti}.csv");
                write_atomic(&dir.join(&name), suite::state_csv(g, u).as_bytes())?;
                files.push(name);
            }
            Ok(LevelConvergence {
                h: g.h,
                ks: sol.ks.clone(),
                min_increment: sol.certificate.min_increment,
                monotone: sol.certificate.holds,
                last_increment: sol.last_increment,
                converged: sol.converged,
                supercritical: sol.supercritical,
                files,
            })
        })
        .collect::<Result<_>>()?;
    let out = json!({
        "scenario": scenario,
        "scenario_hash": hash,
        "times": scenario.times,
        "levels": levels,
    });
    write_atomic(
        &report,
        serde_json::to_string_pretty(&out).expect("json").as_bytes(),
    )?;
    let mut paths = vec![report];
    for l in &levels {
        paths.extend(l.files.iter().map(|f| dir.join(f)));
    }
    Ok(Written::Fresh(paths))
}

/// Heat kernel `p_t(x_i, x_j)` on the finest level (or `level`) as triples.
pub fn kernel_files(
    scenario: &Scenario,
    t: f64,
    level: Option<usize>,
    target: &Target,
    force: bool,
) -> Result<Written> {
    let li = level.unwrap_or(scenario.h.len() - 1);
    let h = *scenario.h.get(li).ok_or_else(|| {
        HarnessError::Usage(format!(
            "level {li} out of range (scenario has {})",
            scenario.h.len()
        ))
    })?;
    let (csv_path, header_path) = match target {
        Target::File(p) => (p.clone(), p.with_extension("json")),
        Target::Root(r) => {
            let store = RunStore::open(r)?;
            let hash = store.record_scenario(scenario)?;
            let dir = store.kernel_dir(&hash);
            let stem = format!("kernel_level{li}_t{}", num(t));
            (
                dir.join(format!("{stem}.csv")),
                dir.join(format!("{stem}.json")),
            )
        }
    };
    let paths = vec![csv_path.clone(), header_path.clone()];
    if !force && csv_path.exists() && header_path.exists() {
        return Ok(Written::Cached(paths));
    }
    let grid = build_grid(scenario.domain, h).context(|| "grid".into())?;
    let op = fracheat_core::assemble_operator(&grid, scenario.params(), scenario.c, f64::INFINITY)
        .context(|| "assembly".into())?;
    let k = heat_kernel(&op, t).context(|| format!("kernel at t = {t}"))?;
    let mut w = CsvWriter::new(&["i", "j", "value"]);
    for j in 0..k.len() {
        for i in 0..k.len() {
            w.row(&[i.to_string(), j.to_string(), num(k.entries[(i, j)])]);
        }
    }
    let body = w.finish();
    let header = json!({
        "scenario": scenario,
        "scenario_hash": scenario.hash(),
        "level": li,
        "h": h,
        "t": t,
        "nodes": grid.len(),
        "ordering": "x-fastest, cell centres",
        "asymmetry": k.asymmetry(),
        "checksum": format!("sha256:{}", hex_digest(body.as_bytes())),
    });
    write_atomic(&csv_path, body.as_bytes())?;
    write_atomic(
        &header_path,
        serde_json::to_string_pretty(&header)
            .expect("json")
            .as_bytes(),
    )?;
    Ok(Written::Fresh(paths))
}

/// One row of a sweep summary.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub c_spec: String,
    pub c: f64,
    pub scenario_hash: String,
    pub suite: String,
    pub pass: bool,
    pub cached: bool,
    pub report: PathBuf,
}

/// Runs `suite` on the scenario once per coupling in parallel. Completed
/// points are reused, so an interrupted sweep resumes where it stopped.
pub fn sweep(
    base: &Scenario,
    couplings: &[String],
    suite: Suite,
    root: &Path,
    opts: RunOptions,
) -> Result<(Vec<SweepRow>, PathBuf)> {
    let store = RunStore::open(root)?;
    let scenarios: Vec<Scenario> = couplings
        .iter()
        .map(|c| base.with_c(c))
        .collect::<Result<_>>()?;
    for s in &scenarios {
        validate_for_suite(s, suite)?;
    }
    let rows: Vec<SweepRow> = scenarios
        .par_iter()
        .map(|s| {
            let o = run_suite(&store, s, suite, opts)?;
            Ok(SweepRow {
                c_spec: s.c_spec.clone(),
                c: s.c,
                scenario_hash: s.hash(),
                suite: suite.name().into(),
                pass: o.pass,
                cached: o.cached,
                report: o.report_path,
            })
        })
        .collect::<Result<_>>()?;
    let mut w = CsvWriter::new(&["c_spec", "c", "scenario_hash", "suite", "pass", "report"]);
    for r in &rows {
        w.row(&[
            r.c_spec.clone(),
            num(r.c),
            r.scenario_hash.clone(),
            r.suite.clone(),
            r.pass.to_string(),
            r.report.display().to_string(),
        ]);
    }
    let body = w.finish();
    let path = root
        .join("reports")
        .join(format!("sweep-{}.csv", &hex_digest(body.as_bytes())[..16]));
    write_atomic(&path, body.as_bytes())?;
    Ok((rows, path))
}

/// Applies command-line overrides; the result hashes differently from the file.
pub fn with_overrides(
    mut s: Scenario,
    seed: Option<u64>,
    times: Option<Vec<f64>>,
    scheme: Option<Scheme>,
) -> Result<Scenario> {
    if let Some(seed) = seed {
        s.seed = seed;
    }
    if let Some(t) = times {
        if t.is_empty() || t[0] <= 0.0 || t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HarnessError::Usage(
                "--times must be positive and strictly increasing".into(),
            ));
        }
        s.times = t;
    }
    if let Some(scheme) = scheme {
        s.scheme = scheme;
    }
    Ok(s)
}
