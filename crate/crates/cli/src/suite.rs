//! Verification suites: assemble, evolve and estimate per grid level, then
//! reduce everything to a list of checks.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use fracheat_core::estimators::{
    blowup_diagnostic, hardy_ratio_min, kernel_sandwich, lp_scan, singularity_exponent,
    ultracontractive_envelope, Check, CompactSet, LpClassification,
};
use fracheat_core::evolution::{duhamel_residual, heat_kernels, minimal_solution, EvolveOptions};
use fracheat_core::linalg::smallest_eigenvalue;
use fracheat_core::operator::interior_probes;
use fracheat_core::{
    assemble_operator, hardy_constant, harmonicity_defect, multiplier, DiscreteOperator,
    FormEvaluator, Grid,
};
use serde::{Deserialize, Serialize};

use crate::csv::{num, CsvWriter};
use crate::error::{Context, HarnessError, Result};
use crate::scenario::{coords, Scenario};
use crate::store::{write_atomic, RunStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Constants,
    Operator,
    Kernel,
    Sharp,
    Lp,
    Blowup,
    All,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Constants,
        Suite::Operator,
        Suite::Kernel,
        Suite::Sharp,
        Suite::Lp,
        Suite::Blowup,
        Suite::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Constants => "constants",
            Suite::Operator => "operator",
            Suite::Kernel => "kernel",
            Suite::Sharp => "sharp",
            Suite::Lp => "lp",
            Suite::Blowup => "blowup",
            Suite::All => "all",
        }
    }

    /// Members run by this suite for the given scenario.
    fn expand(self, s: &Scenario) -> Vec<Suite> {
        match self {
            Suite::All if s.subcritical() => {
                let mut v = vec![
                    Suite::Constants,
                    Suite::Operator,
                    Suite::Kernel,
                    Suite::Sharp,
                ];
                if s.c > 0.0 && lp_levels_ok(s) {
                    v.push(Suite::Lp);
                }
                v
            }
            Suite::All => vec![Suite::Constants, Suite::Operator, Suite::Blowup],
            other => vec![other],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| HarnessError::Usage(format!(
                "unknown suite '{s}' (expected constants, operator, kernel, sharp, lp, blowup or all)"
            )))
    }
}

fn lp_levels_ok(s: &Scenario) -> bool {
    s.h.len() >= 3 && s.h.windows(2).all(|w| (w[0] / w[1] - 2.0).abs() < 1e-9)
}

/// Cross-checks a scenario against the requirements of a suite.
pub fn validate_for_suite(s: &Scenario, suite: Suite) -> Result<()> {
    let fail = |m: String| {
        Err(match &s.name {
            Some(n) => HarnessError::scenario(n.clone(), m),
            None => HarnessError::Usage(m),
        })
    };
    match suite {
        Suite::Sharp | Suite::Kernel | Suite::Lp if !s.subcritical() => fail(format!(
            "suite '{suite}' requires c ≤ c* = {}, got c = {}",
            s.c_star, s.c
        )),
        Suite::Lp if s.c == 0.0 => fail("suite 'lp' requires c > 0".into()),
        Suite::Lp if !lp_levels_ok(s) => {
            fail("suite 'lp' needs at least three levels, each halving h".into())
        }
        Suite::Blowup if s.subcritical() => fail(format!(
            "suite 'blowup' requires c > c* = {}, got c = {}",
            s.c_star, s.c
        )),
        Suite::Blowup if s.h.len() < 3 => {
            fail("suite 'blowup' needs at least three grid levels".into())
        }
        _ => Ok(()),
    }
}

/// Verification report; key order and content are deterministic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub scenario: Scenario,
    pub scenario_hash: String,
    pub checks: Vec<Check>,
    pub seed: u64,
    #[serde(rename = "grid-levels")]
    pub grid_levels: Vec<f64>,
    pub threads: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub force: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report_path: PathBuf,
    pub pass: bool,
    pub cached: bool,
}

/// Runs `suite` on `scenario`, writing the report and its CSV artifacts into
/// the store. A report already present for the same hash is reused unless
/// `force` is set.
pub fn run_suite(
    store: &RunStore,
    scenario: &Scenario,
    suite: Suite,
    opts: RunOptions,
) -> Result<RunOutcome> {
    validate_for_suite(scenario, suite)?;
    let hash = store.record_scenario(scenario)?;
    let lock = store.lock(&hash);
    let _guard = lock.lock().expect("store lock poisoned");
    let report_path = store.report_path(&hash, suite.name());
    if !opts.force {
        if let Some(pass) = cached_pass(&report_path) {
            return Ok(RunOutcome {
                report_path,
                pass,
                cached: true,
            });
        }
    }
    let mut checks = Vec::new();
    for member in suite.expand(scenario) {
        let found = match member {
            Suite::Constants => constants_checks(scenario)?,
            Suite::Operator => operator_checks(scenario)?,
            Suite::Kernel => kernel_checks(store, &hash, scenario)?,
            Suite::Sharp => sharp_checks(store, &hash, scenario)?,
            Suite::Lp => lp_checks(scenario)?,
            Suite::Blowup => blowup_checks(scenario)?,
            Suite::All => unreachable!("expanded"),
        };
        checks.extend(found.into_iter().map(|mut c| {
            c.name = format!("{member}/{}", c.name);
            c
        }));
    }
    let pass = checks.iter().all(|c| c.pass);
    let report = Report {
        suite: suite.name().into(),
        scenario: scenario.clone(),
        scenario_hash: hash.clone(),
        checks,
        seed: scenario.seed,
        grid_levels: scenario.h.clone(),
        threads: rayon::current_num_threads(),
        pass,
    };
    write_report(&report, &report_path)?;
    Ok(RunOutcome {
        report_path,
        pass,
        cached: false,
    })
}

/// `pass` of a readable report at `path`, if any.
pub fn cached_pass(path: &std::path::Path) -> Option<bool> {
    let text = std::fs::read_to_string(path).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    v.get("pass")?.as_bool()
}

/// Report JSON plus a sibling CSV of the checks.
pub fn write_report(report: &Report, path: &std::path::Path) -> Result<()> {
    let text = serde_json::to_string_pretty(report).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    write_atomic(path, text.as_bytes())?;
    let mut w = CsvWriter::new(&["name", "measured", "expected", "tolerance", "pass"]);
    for c in &report.checks {
        w.row(&[
            c.name.clone(),
            num(c.measured),
            num(c.expected),
            num(c.tolerance),
            c.pass.to_string(),
        ]);
    }
    write_atomic(&path.with_extension("csv"), w.finish().as_bytes())
}

fn level_tag(h: f64) -> String {
    format!("h={}", num(h))
}

fn assemble(s: &Scenario, grid: &Grid) -> Result<DiscreteOperator> {
    assemble_operator(grid, s.params(), s.c, f64::INFINITY)
        .context(|| format!("assembly at {}", level_tag(grid.h)))
}

fn constants_checks(s: &Scenario) -> Result<Vec<Check>> {
    let p = s.params();
    let cs = hardy_constant(p).context(|| "c*".into())?;
    let lam = multiplier(p.beta_star(), p).context(|| "λ(β*)".into())?;
    let mut out = vec![Check::close("multiplier_at_beta_star", lam, cs, 1e-10 * cs)];
    if s.c > 0.0 && s.subcritical() {
        let beta = s.beta()?;
        let back = multiplier(beta, p).context(|| "λ(β(c))".into())?;
        out.push(Check::close("beta_round_trip", back, s.c, 1e-10 * cs));
        out.push(Check::at_most(
            "beta_below_beta_star",
            beta,
            p.beta_star(),
            1e-12,
        ));
    }
    Ok(out)
}

fn operator_checks(s: &Scenario) -> Result<Vec<Check>> {
    let grids = s.grids();
    let mut out = Vec::new();
    let mut defects = Vec::new();
    let beta = if s.subcritical() && s.c > 0.0 {
        Some(s.beta()?)
    } else {
        None
    };
    for g in &grids {
        let tag = level_tag(g.h);
        let op = assemble(s, g)?;
        let asym = (&op.l0 - op.l0.transpose()).amax();
        out.push(Check::at_most(format!("symmetry[{tag}]"), asym, 0.0, 0.0));
        let rows = op.row_sums();
        let dev = rows
            .iter()
            .zip(&op.killing)
            .map(|(r, k)| (r - k).abs() / k)
            .fold(0.0, f64::max);
        out.push(Check::at_most(
            format!("row_sums_equal_killing[{tag}]"),
            dev,
            0.0,
            1e-10,
        ));
        let n = op.len();
        let offdiag_ok = (0..n).all(|i| (0..n).all(|j| i == j || op.l0[(i, j)] <= 0.0));
        out.push(Check::flag(
            format!("offdiagonal_nonpositive[{tag}]"),
            offdiag_ok,
        ));
        if s.c < s.c_star {
            let lam = smallest_eigenvalue(&op.hamiltonian());
            out.push(Check::at_least(
                format!("lambda_min_positive[{tag}]"),
                lam,
                0.0,
                0.0,
            ));
        }
        if s.c > 0.0 && s.subcritical() {
            let ev = FormEvaluator::plain(&op);
            let ratio =
                hardy_ratio_min(&ev, 16, s.seed).context(|| format!("Hardy ratio at {tag}"))?;
            out.push(Check::at_least(
                format!("hardy_form_ratio[{tag}]"),
                ratio,
                1.0 - s.c / s.c_star,
                1e-3,
            ));
        }
        if let Some(beta) = beta {
            let r = 0.25 * g.domain.inradius();
            let probes = interior_probes(g, r, r);
            if !probes.is_empty() {
                let zero = assemble_operator(g, s.params(), 0.0, f64::INFINITY)
                    .context(|| format!("assembly at {tag}"))?;
                let hd = harmonicity_defect(&zero, beta, &probes)
                    .context(|| format!("harmonicity at {tag}"))?;
                defects.push((g.h, hd.max_abs));
            }
        }
    }
    for w in defects.windows(2) {
        let ((h0, d0), (h1, d1)) = (w[0], w[1]);
        // at least 1.5 per halving of h
        let expected = 1.5f64.powf((h0 / h1).log2());
        out.push(Check::at_least(
            format!("harmonicity_rate[{}→{}]", level_tag(h0), level_tag(h1)),
            d0 / d1,
            expected,
            0.0,
        ));
    }
    Ok(out)
}

fn kernel_checks(store: &RunStore, hash: &str, s: &Scenario) -> Result<Vec<Check>> {
    let beta = s.beta()?;
    let mut out = Vec::new();
    let mut consts = Vec::new();
    let mut table = CsvWriter::new(&["h", "t", "kappa", "max_ratio", "spread"]);
    for g in s.grids() {
        let tag = level_tag(g.h);
        let op = assemble(s, &g)?;
        let ks = heat_kernels(&op, &s.times).context(|| format!("kernels at {tag}"))?;
        let w: Vec<f64> = g.radii().iter().map(|r| r.powf(-beta)).collect();
        for k in &ks {
            out.push(Check::at_most(
                format!("kernel_symmetry[{tag},t={}]", num(k.t)),
                k.asymmetry(),
                0.0,
                1e-10,
            ));
            let min = k.entries.min();
            out.push(Check::flag(
                format!("kernel_positive[{tag},t={}]", num(k.t)),
                min > 0.0,
            ));
            let excess = k
                .weighted_row_mass(&w)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max)
                - 1.0;
            out.push(Check::at_most(
                format!("weighted_sub_markov[{tag},t={}]", num(k.t)),
                excess.max(0.0),
                0.0,
                0.05,
            ));
        }
        let compact = CompactSet::central(&g);
        let fit = kernel_sandwich(&ks, &w, &g, compact, s.d, s.alpha)
            .context(|| format!("sandwich at {tag}"))?;
        for p in &fit.points {
            table.numbers(&[g.h, p.t, p.kappa, p.max_ratio, p.spread]);
            out.push(Check::flag(
                format!("sandwich_kappa_positive[{tag},t={}]", num(p.t)),
                p.kappa > 0.0,
            ));
            out.push(Check::at_most(
                format!("sandwich_spread[{tag},t={}]", num(p.t)),
                p.spread,
                50.0,
                0.0,
            ));
        }
        let env = ultracontractive_envelope(&ks, &w, s.d, s.alpha)
            .context(|| format!("envelope at {tag}"))?;
        out.push(Check::flag(
            format!("envelope_finite[{tag}]"),
            env.constant.is_finite(),
        ));
        consts.push((g.h, env.constant));
    }
    for w in consts.windows(2) {
        out.push(Check::at_most(
            format!(
                "envelope_change[{}→{}]",
                level_tag(w[0].0),
                level_tag(w[1].0)
            ),
            (w[1].1 / w[0].1 - 1.0).abs(),
            0.0,
            0.25,
        ));
    }
    write_atomic(
        &store.kernel_dir(hash).join("sandwich.csv"),
        table.finish().as_bytes(),
    )?;
    Ok(out)
}

fn evolve_options(s: &Scenario) -> EvolveOptions {
    EvolveOptions::with_scheme(s.scheme)
}

/// Per-time CSV of the state on one level.
pub fn state_csv(grid: &Grid, u: &[f64]) -> String {
    let d = grid.dim();
    let header: &[&str] = if d == 1 {
        &["x", "u"]
    } else {
        &["x", "y", "u"]
    };
    let mut w = CsvWriter::new(header);
    for (x, v) in grid.nodes.iter().zip(u) {
        let mut row = coords(x, d);
        row.push(*v);
        w.numbers(&row);
    }
    w.finish()
}

/// Relative residual treated as exact when checking the halving rate.
const DUHAMEL_FLOOR: f64 = 1e-12;

fn sharp_checks(store: &RunStore, hash: &str, s: &Scenario) -> Result<Vec<Check>> {
    let beta = s.beta()?;
    let grids = s.grids();
    let mut out = Vec::new();
    let dir = store.trajectory_dir(hash);
    for (li, g) in grids.iter().enumerate() {
        let tag = level_tag(g.h);
        let op = assemble(s, g)?;
        let u0 = s.u0.sample(g);
        let ks = s.ks(&op.potential)?;
        let sol = minimal_solution(&op, &u0, &s.times, &ks, s.c_star, evolve_options(s))
            .context(|| format!("minimal solution at {tag}"))?;
        out.push(Check::at_least(
            format!("monotone_in_k[{tag}]"),
            sol.certificate.min_increment,
            0.0,
            1e-12,
        ));
        out.push(Check::at_most(
            format!("converged_in_k[{tag}]"),
            sol.last_increment,
            0.0,
            fracheat_core::evolution::CONVERGENCE_TOL,
        ));
        let last = sol.solution();
        for ti in 0..s.times.len() {
            write_atomic(
                &dir.join(format!("level{li}_t{ti}.csv")),
                state_csv(g, &last.states[ti]).as_bytes(),
            )?;
        }
        if li + 1 == grids.len() {
            for (ti, &t) in s.times.iter().enumerate() {
                let r65 = duhamel_residual(&op, last.k, &u0, t, &last.states[ti], 65)
                    .context(|| format!("Duhamel residual at {tag}"))?;
                let r129 = duhamel_residual(&op, last.k, &u0, t, &last.states[ti], 129)
                    .context(|| format!("Duhamel residual at {tag}"))?;
                out.push(Check::at_most(
                    format!("duhamel_65[{tag},t={}]", num(t)),
                    r65,
                    0.0,
                    1e-3,
                ));
                // below DUHAMEL_FLOOR both residuals are rounding noise
                out.push(Check::at_most(
                    format!("duhamel_halving[{tag},t={}]", num(t)),
                    r129,
                    0.5 * r65,
                    DUHAMEL_FLOOR,
                ));
            }
            let t_last = *s.times.last().expect("non-empty");
            let fit = singularity_exponent(last.states.last().expect("non-empty"), g, -beta)
                .context(|| format!("singularity fit at {tag}"))?;
            let mut c = Check::close(
                format!("singularity_slope[{tag},t={}]", num(t_last)),
                fit.slope,
                -beta,
                fracheat_core::estimators::EXPONENT_TOL.max(2.0 * fit.stderr),
            );
            c.pass = fit.pass;
            out.push(c);
        }
    }
    Ok(out)
}

fn lp_checks(s: &Scenario) -> Result<Vec<Check>> {
    let beta = s.beta()?;
    let t = *s.times.last().expect("non-empty");
    let mut states = Vec::new();
    for g in s.grids() {
        let op = assemble(s, &g)?;
        let u0 = s.u0.sample(&g);
        let tr = fracheat_core::evolution::evolve(&op.hamiltonian(), &u0, &[t], evolve_options(s))
            .context(|| format!("evolution at {}", level_tag(g.h)))?;
        states.push((g, tr.states.into_iter().next().expect("one time")));
    }
    let d = s.d as f64;
    let p_list: Vec<f64> = vec![1.0, 0.9 * d / beta, 1.1 * d / beta, 1.5 * d / beta];
    let levels: Vec<(&Grid, &[f64])> = states.iter().map(|(g, u)| (g, u.as_slice())).collect();
    let classes = lp_scan(&levels, beta, &p_list).context(|| "L^p scan".into())?;
    Ok(classes
        .iter()
        .map(|c| {
            let kind = match c.classification {
                LpClassification::Convergent => "convergent",
                LpClassification::Divergent => "divergent",
            };
            // divergent classes must match d − pβ; convergent ones only need γ̂ > 0
            let (expected, tolerance) = match c.expected {
                LpClassification::Divergent => (
                    c.expected_exponent,
                    fracheat_core::estimators::LP_EXPONENT_TOL,
                ),
                LpClassification::Convergent => (0.0, 0.0),
            };
            Check {
                name: format!("lp_class[p={},{kind}]", num(c.p)),
                measured: c.growth_exponent,
                expected,
                tolerance,
                pass: c.pass,
            }
        })
        .collect())
}

fn blowup_checks(s: &Scenario) -> Result<Vec<Check>> {
    let factor = match &s.k_schedule {
        crate::scenario::KSchedule::Auto { factor } => *factor,
        crate::scenario::KSchedule::Explicit { .. } => 4.0,
    };
    let r0 = 0.5 * s.domain.inradius();
    let u0 = s.u0.clone();
    let rep = blowup_diagnostic(
        s.params(),
        s.c,
        s.domain,
        &s.h,
        |g| u0.sample(g),
        &s.times,
        factor,
        r0,
    )
    .context(|| "blow-up diagnostic".into())?;
    let mut out = vec![
        Check::flag(
            "lambda_strictly_decreasing",
            rep.spectral.strictly_decreasing,
        ),
        Check::flag("lambda_gaps_growing", rep.spectral.growing_gaps),
        Check::flag("probes_increasing_in_k", rep.probes_increasing),
    ];
    for (t, g) in rep.t0s.iter().zip(&rep.growth) {
        out.push(Check::at_least(
            format!("probe_growth[t={}]", num(*t)),
            *g,
            fracheat_core::estimators::PROBE_GROWTH,
            0.0,
        ));
    }
    let m = &rep.mechanism;
    let mut mc = Check::close(
        "mechanism_slope",
        m.slope,
        m.expected_slope,
        fracheat_core::estimators::MECHANISM_REL_TOL * m.expected_slope,
    );
    mc.pass = m.pass;
    out.push(mc);
    out.push(Check::flag("blowup_verdict", rep.blowup));
    Ok(out)
}
