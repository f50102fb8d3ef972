//! Runs a scenario through selection, λ-search, stability profile and spectrum stages and
//! renders the results bundle (CSV tables plus `summary.json`).
//!
//! Every CSV starts with `# currents <version> <table> v1`, then a column header.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::complex::SimplicialComplex;
use crate::error::{CurrentsError, Result};
use crate::family::{ClassFamily, SearchBounds};
use crate::flatnorm::{flat_norm, flat_norm_bruteforce};
use crate::integrand::Integrand;
use crate::scenario::{Scenario, SelectionStage};
use crate::selection::{
    almost_min_constant, ball_perturbations, check_with_perturbations, find_lambda0, minimize_in_family,
    minimize_penalized, perturbation_margin, AlmostMinReport, FlatCache, MinimizerSet, PenalizedProblem, Penalty,
    Perturbation, TIE_TOL,
};
use crate::stability::{
    hessian_consistency, quadratic_growth_fit, second_variation_form, stability_profile, strict_minimality, GraphFamily,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exhaustive oracle searches stay below (2K+1)^q = 3^12 states.
const ORACLE_STATES: f64 = 531_441.0;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads for the (η, λ) grid; the global pool when `None`.
    pub jobs: Option<usize>,
    pub verbose: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub version: String,
    pub seed: u64,
    pub stages: Vec<String>,
    pub f_sigma: f64,
    /// Exact selection threshold of the λ-search Σ.
    pub lambda0: Option<f64>,
    /// Smallest grid λ from which on Σ is the only minimizer.
    pub lambda0_grid: Option<f64>,
    pub uniquely_minimizing: Option<bool>,
    pub g: Vec<(f64, Option<f64>)>,
    pub c_fit: Option<f64>,
    pub min_eigenvalue: Option<f64>,
    pub index: Option<usize>,
    pub nullity: Option<usize>,
    pub strictly_stable: Option<bool>,
    pub assertions: Vec<Assertion>,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct Bundle {
    /// (file name, contents) in write order.
    pub files: Vec<(String, String)>,
    pub summary: Summary,
    /// Diagnostics for verbose mode.
    pub log: Vec<String>,
}

impl Bundle {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, contents) in &self.files {
            std::fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }
}

fn table(kind: &str, columns: &str) -> String {
    format!("# currents {VERSION} {kind} v1\n{columns}\n")
}

fn chain_cell(c: &Chain) -> String {
    c.iter().map(|(i, v)| format!("{i}:{v}")).collect::<Vec<_>>().join(" ")
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

struct Run<'a> {
    scenario: &'a Scenario,
    complex: SimplicialComplex,
    sigma: Chain,
    integrand: Integrand,
    summary: Summary,
    files: Vec<(String, String)>,
    log: Vec<String>,
}

impl Run<'_> {
    fn assert(&mut self, name: &str, pass: bool, detail: String) {
        self.summary.assertions.push(Assertion {
            name: name.to_string(),
            pass,
            detail,
        });
    }
}

/// Loads and runs a scenario file. Nothing is written unless the whole run succeeds.
pub fn run_scenario_file(path: &Path, out_dir: &Path, options: &RunOptions) -> Result<Bundle> {
    let scenario = Scenario::load(path)?;
    let bundle = run_scenario(&scenario, options)?;
    bundle.write(out_dir)?;
    Ok(bundle)
}

pub fn run_scenario(scenario: &Scenario, options: &RunOptions) -> Result<Bundle> {
    match options.jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CurrentsError::Config(format!("thread pool: {e}")))?;
            pool.install(|| run_inner(scenario))
        }
        None => run_inner(scenario),
    }
}

fn run_inner(scenario: &Scenario) -> Result<Bundle> {
    let complex = scenario.complex()?;
    let sigma = scenario.sigma.build(&complex, scenario.grid.spacing)?;
    let integrand = scenario.integrand.build(&complex, sigma.degree())?;
    let f_sigma = integrand.evaluate(&sigma)?;
    let mut run = Run {
        scenario,
        summary: Summary {
            name: scenario.name.clone(),
            version: VERSION.to_string(),
            seed: scenario.seed,
            stages: Vec::new(),
            f_sigma,
            lambda0: None,
            lambda0_grid: None,
            uniquely_minimizing: None,
            g: Vec::new(),
            c_fit: None,
            min_eigenvalue: None,
            index: None,
            nullity: None,
            strictly_stable: None,
            assertions: Vec::new(),
            pass: true,
        },
        complex,
        sigma,
        integrand,
        files: Vec::new(),
        log: Vec::new(),
    };
    let mut selection = None;
    if let Some(stage) = &scenario.selection {
        selection = Some(selection_stage(&mut run, stage)?);
    }
    if scenario.lambda_search.is_some() {
        lambda_stage(&mut run)?;
    }
    if scenario.stability.is_some() {
        stability_stage(&mut run)?;
    }
    if scenario.spectrum.is_some() {
        spectrum_stage(&mut run)?;
    }
    expectations(&mut run, selection.as_deref())?;
    run.summary.pass = run.summary.assertions.iter().all(|a| a.pass);
    let mut json = serde_json::to_string_pretty(&run.summary).map_err(|e| CurrentsError::Io(e.to_string()))?;
    json.push('\n');
    run.files.push(("summary.json".into(), json));
    Ok(Bundle {
        files: run.files,
        summary: run.summary,
        log: run.log,
    })
}

struct PointResult {
    eta: f64,
    lambda: f64,
    set: MinimizerSet,
    checks: Vec<MinimizerCheck>,
}

#[derive(Default)]
struct MinimizerCheck {
    constants: Option<(f64, f64)>,
    almost: Option<AlmostMinReport>,
    /// (worst margin, perturbations tested, perturbations leaving the searched family)
    perturbation: Option<(f64, usize, usize)>,
}

fn selection_stage(run: &mut Run, stage: &SelectionStage) -> Result<Vec<PointResult>> {
    run.summary.stages.push("selection".into());
    let complex = &run.complex;
    let n = run.sigma.degree();
    let big_lambda = run.integrand.lambda();
    let almost = run
        .scenario
        .almost_min
        .as_ref()
        .filter(|_| stage.penalty == Penalty::Absolute);
    // perturbations depend on λ only through r₀
    let mut balls: BTreeMap<u64, (Vec<Perturbation>, bool)> = BTreeMap::new();
    if let Some(a) = almost {
        let built: Vec<(u64, (Vec<Perturbation>, bool))> = stage
            .lambda
            .par_iter()
            .map(|&lambda| {
                let (_, r0) = almost_min_constant(lambda, big_lambda, n)?;
                Ok((lambda.to_bits(), ball_perturbations(complex, n, r0, a.coeff_bound)?))
            })
            .collect::<Result<_>>()?;
        balls.extend(built);
    }
    // the perturbation inequality holds for closed X of any size
    let closed: Vec<Perturbation> = match almost {
        Some(a) => {
            let (all, _) = ball_perturbations(complex, n, f64::INFINITY, a.coeff_bound)?;
            let mut seen = std::collections::HashSet::new();
            all.into_iter().filter(|p| seen.insert(p.x.clone())).collect()
        }
        None => Vec::new(),
    };
    let points: Vec<(f64, f64)> = stage
        .eta
        .iter()
        .flat_map(|&eta| stage.lambda.iter().map(move |&lambda| (eta, lambda)))
        .collect();
    let sigma = &run.sigma;
    let integrand = &run.integrand;
    let results: Vec<PointResult> = points
        .par_iter()
        .map(|&(eta, lambda)| {
            let problem = PenalizedProblem::new(
                sigma.clone(),
                integrand.clone(),
                eta,
                lambda,
                stage.penalty,
                SearchBounds::new(stage.coeff_bound),
            )?;
            let set = minimize_penalized(complex, &problem)?;
            let mut checks = Vec::with_capacity(set.minimizers.len());
            let mut flats = FlatCache::new(complex);
            for m in &set.minimizers {
                let mut check = MinimizerCheck::default();
                if let Some((perturbations, partial)) = balls.get(&lambda.to_bits()) {
                    let (c, r0) = almost_min_constant(lambda, big_lambda, n)?;
                    check.constants = Some((c, r0));
                    check.almost = Some(check_with_perturbations(
                        complex,
                        &m.chain,
                        integrand,
                        c,
                        perturbations,
                        *partial,
                        &mut flats,
                    )?);
                    let (inside, outside): (Vec<Perturbation>, Vec<Perturbation>) = closed
                        .iter()
                        .cloned()
                        .partition(|p| (&m.filling + &p.y).max_abs_coefficient() <= stage.coeff_bound);
                    let (worst, _) = perturbation_margin(&m.chain, integrand, lambda, &inside, &mut flats)?;
                    check.perturbation = Some((worst, inside.len(), outside.len()));
                }
                checks.push(check);
            }
            Ok(PointResult {
                eta,
                lambda,
                set,
                checks,
            })
        })
        .collect::<Result<_>>()?;

    let mut csv = table(
        "selection",
        "eta,lambda,rank,value,f_value,flat_distance,support_distance,c,r0,almost_min,am_tests,am_worst_margin,pert_tests,pert_worst_margin,chain",
    );
    let mut am_ok = true;
    let mut am_detail = Vec::new();
    let mut pert_ok = true;
    let mut pert_worst = f64::INFINITY;
    let mut am_tests = 0;
    for p in &results {
        run.log.push(format!(
            "η={} λ={}: {} minimizer(s), value {}",
            p.eta,
            p.lambda,
            p.set.minimizers.len(),
            p.set.value
        ));
        for (rank, (m, check)) in p.set.minimizers.iter().zip(&p.checks).enumerate() {
            let (c, r0) = check.constants.map_or((None, None), |(c, r)| (Some(c), Some(r)));
            let am = check.almost.as_ref();
            if let Some(a) = am {
                am_tests += a.tests;
                if !a.pass {
                    am_ok = false;
                    am_detail.push(format!("η={} λ={} margin {}", p.eta, p.lambda, a.worst_margin));
                }
                run.log.push(format!(
                    "  #{rank}: almost-min tests {} skipped {} worst margin {}{}",
                    a.tests,
                    a.skipped,
                    a.worst_margin,
                    if a.partial { " (sampled balls)" } else { "" }
                ));
            }
            if let Some((worst, _, outside)) = check.perturbation {
                pert_worst = pert_worst.min(worst);
                pert_ok &= worst >= -TIE_TOL;
                if outside > 0 {
                    run.log.push(format!(
                        "  #{rank}: {outside} perturbations leave the coefficient bound"
                    ));
                }
            }
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                p.eta,
                p.lambda,
                rank,
                m.value,
                m.f_value,
                m.flat_distance,
                m.support_distance,
                opt(c),
                opt(r0),
                am.map_or(String::new(), |a| a.pass.to_string()),
                am.map_or(String::new(), |a| a.tests.to_string()),
                am.map_or(String::new(), |a| if a.vacuous {
                    String::new()
                } else {
                    a.worst_margin.to_string()
                }),
                check.perturbation.map_or(String::new(), |p| p.1.to_string()),
                check.perturbation.map_or(String::new(), |p| if p.1 == 0 {
                    String::new()
                } else {
                    p.0.to_string()
                }),
                chain_cell(&m.chain),
            );
        }
    }
    run.files.push(("selection.csv".into(), csv));
    if run.scenario.almost_min.is_some() {
        if stage.penalty == Penalty::Absolute {
            let detail = if am_ok {
                format!("{am_tests} perturbation tests, C = 4Λ²λ/(n+1), r < (n+1)/(4λΛ)")
            } else {
                am_detail.join("; ")
            };
            run.assert("almost-minimizing", am_ok, detail);
            run.assert(
                "perturbation inequality",
                pert_ok,
                format!("F(R) ≤ F(R+X) + λ𝔽(X), worst margin {pert_worst}"),
            );
        } else {
            run.log
                .push("almost-minimality applies to the absolute penalty only; skipped".into());
        }
    }
    Ok(results)
}

fn lambda_stage(run: &mut Run) -> Result<()> {
    let stage = run.scenario.lambda_search.as_ref().expect("stage present");
    run.summary.stages.push("lambda-search".into());
    let sigma = match &stage.sigma {
        Some(spec) => spec.build(&run.complex, run.scenario.grid.spacing)?,
        None => run.sigma.clone(),
    };
    let integrand = run.scenario.integrand.build(&run.complex, sigma.degree())?;
    let sweep = find_lambda0(
        &run.complex,
        &sigma,
        &integrand,
        &SearchBounds::new(stage.coeff_bound),
        &stage.lambda,
    )?;
    let mut csv = table("lambda_sweep", "lambda,minimizers,sigma_unique,value");
    for r in &sweep.rows {
        let _ = writeln!(csv, "{},{},{},{}", r.lambda, r.minimizers, r.sigma_unique, r.value);
    }
    run.files.push(("lambda_sweep.csv".into(), csv));
    run.summary.lambda0 = Some(sweep.threshold);
    run.summary.lambda0_grid = sweep.lambda0.is_finite().then_some(sweep.lambda0);
    let consistent = sweep.rows.iter().all(|r| {
        if r.lambda > sweep.threshold + TIE_TOL {
            r.sigma_unique
        } else {
            !r.sigma_unique
        }
    });
    run.assert(
        "selection threshold",
        consistent,
        format!("Σ is the unique minimizer exactly for λ > {}", sweep.threshold),
    );
    Ok(())
}

fn stability_stage(run: &mut Run) -> Result<()> {
    let stage = run.scenario.stability.as_ref().expect("stage present");
    run.summary.stages.push("stability".into());
    let search = SearchBounds::new(stage.coeff_bound);
    let unique = strict_minimality(&run.complex, &run.sigma, &run.integrand, f64::INFINITY, &search)?;
    run.summary.uniquely_minimizing = Some(unique.holds);
    let profile = stability_profile(
        &run.complex,
        &run.sigma,
        &run.integrand,
        &stage.eta,
        &search,
        stage.bin_tol,
    )?;
    let mut rows: Vec<_> = profile.rows.iter().collect();
    rows.sort_by(|a, b| a.eta.total_cmp(&b.eta));
    let mut csv = table("profile", "eta,g,flat,count,certified");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.eta,
            opt(r.g),
            opt(r.flat),
            r.count,
            r.certified
        );
    }
    run.files.push(("profile.csv".into(), csv));
    run.summary.g = rows.iter().map(|r| (r.eta, r.g)).collect();
    if rows.iter().any(|r| !r.certified) {
        run.log
            .push(format!("profile: some bins are not certified at cap {}", profile.cap));
    }
    let fit = quadratic_growth_fit(&profile, profile.f_sigma, stage.epsilon);
    if let Ok(f) = &fit {
        run.summary.c_fit = Some(f.c_fit);
    }
    if unique.holds {
        match fit {
            Ok(f) => run.assert(
                "quadratic growth",
                f.pass,
                format!("C_fit = {} over {} bins with η ≤ {}", f.c_fit, f.bins, stage.epsilon),
            ),
            Err(e) => run.assert("quadratic growth", false, e.to_string()),
        }
        let local = strict_minimality(&run.complex, &run.sigma, &run.integrand, stage.epsilon, &search)?;
        run.assert(
            "strict minimality",
            local.holds,
            format!(
                "{} competitors with F ≤ F(Σ) and 𝔽 ≤ {}",
                local.competitors, stage.epsilon
            ),
        );
    } else {
        run.log.push(format!(
            "Σ is not the unique minimizer of its bounded class ({} competitors); growth not asserted",
            unique.competitors
        ));
    }
    Ok(())
}

fn spectrum_stage(run: &mut Run) -> Result<()> {
    let stage = run.scenario.spectrum.as_ref().expect("stage present");
    run.summary.stages.push("spectrum".into());
    let family = GraphFamily::from_path(&run.complex, &run.sigma)?;
    let spectrum = second_variation_form(&family, &run.integrand, stage.floor)?;
    let mut csv = table("spectrum", "k,eigenvalue");
    for (k, e) in spectrum.eigenvalues.iter().enumerate() {
        let _ = writeln!(csv, "{k},{e}");
    }
    run.files.push(("spectrum.csv".into(), csv));
    run.summary.min_eigenvalue = spectrum.eigenvalues.first().copied();
    run.summary.index = Some(spectrum.index);
    run.summary.nullity = Some(spectrum.nullity);
    run.summary.strictly_stable = Some(spectrum.strictly_stable);
    let fd = hessian_consistency(&family, &run.integrand, &spectrum, stage.directions, run.scenario.seed);
    run.assert(
        "hessian consistency",
        fd < 1e-5,
        format!("largest relative gap {fd} over {} directions", stage.directions),
    );
    if run.summary.uniquely_minimizing == Some(true) {
        run.assert(
            "minimizer index",
            spectrum.index == 0,
            format!("index {} nullity {}", spectrum.index, spectrum.nullity),
        );
    }
    Ok(())
}

fn expectations(run: &mut Run, selection: Option<&[PointResult]>) -> Result<()> {
    let expect = run.scenario.expect.clone();
    if let Some(target) = expect.lambda0 {
        let got = run.summary.lambda0;
        let pass = got.is_some_and(|v| (v - target).abs() <= 1e-9);
        run.assert("expected λ₀", pass, format!("λ₀ = {} (expected {target})", opt(got)));
    }
    for (eta, target) in &expect.g {
        let got = run
            .summary
            .g
            .iter()
            .find(|(e, _)| (e - eta).abs() <= 1e-12)
            .and_then(|(_, g)| *g);
        let pass = got.is_some_and(|v| (v - target).abs() <= 1e-9);
        run.assert(
            "expected g",
            pass,
            format!("g({eta}) = {} (expected {target})", opt(got)),
        );
    }
    if let Some(target) = expect.c_fit {
        let got = run.summary.c_fit;
        let pass = got.is_some_and(|v| (v - target).abs() <= 1e-9);
        run.assert(
            "expected C_fit",
            pass,
            format!("C_fit = {} (expected {target})", opt(got)),
        );
    }
    if let Some(target) = expect.min_eigenvalue {
        let got = run.summary.min_eigenvalue;
        let pass = got.is_some_and(|v| (v - target).abs() <= expect.eigenvalue_rel_tol * target.abs());
        run.assert(
            "expected minimal eigenvalue",
            pass,
            format!("{} (expected {target} ± {})", opt(got), expect.eigenvalue_rel_tol),
        );
    }
    if expect.localization {
        let Some(points) = selection else {
            run.assert("support localization", false, "no selection stage".into());
            return Ok(());
        };
        let diameter = cell_diameter(&run.complex);
        let mut pass = true;
        let mut trail = Vec::new();
        let lambdas: Vec<f64> = run
            .scenario
            .selection
            .as_ref()
            .map(|s| s.lambda.clone())
            .unwrap_or_default();
        for lambda in lambdas {
            let mut seq: Vec<(f64, f64)> = points
                .iter()
                .filter(|p| p.lambda == lambda)
                .map(|p| (p.eta, p.set.max_support_distance()))
                .collect();
            seq.sort_by(|a, b| b.0.total_cmp(&a.0));
            pass &= seq.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
            pass &= seq.last().is_some_and(|l| l.1 <= diameter + 1e-12);
            trail.push(format!(
                "λ={lambda}: {}",
                seq.iter()
                    .map(|(e, d)| format!("{e}→{d}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
        }
        run.assert(
            "support localization",
            pass,
            format!("{} (cell diameter {diameter})", trail.join("; ")),
        );
    }
    Ok(())
}

fn cell_diameter(complex: &SimplicialComplex) -> f64 {
    let top = complex.max_degree();
    let verts = complex.vertices();
    complex
        .cells(top)
        .iter()
        .flat_map(|cell| {
            cell.iter().flat_map(move |&a| {
                cell.iter()
                    .map(move |&b| SimplicialComplex::point_distance(&verts[a], &verts[b]))
            })
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    Profile,
    Spectrum,
    LambdaSweep,
}

impl FromStr for PlotKind {
    type Err = CurrentsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "profile" => Ok(PlotKind::Profile),
            "spectrum" => Ok(PlotKind::Spectrum),
            "lambda-sweep" => Ok(PlotKind::LambdaSweep),
            other => Err(CurrentsError::InvalidArgument(format!("unknown plot `{other}`"))),
        }
    }
}

impl PlotKind {
    fn file(self) -> &'static str {
        match self {
            PlotKind::Profile => "profile.csv",
            PlotKind::Spectrum => "spectrum.csv",
            PlotKind::LambdaSweep => "lambda_sweep.csv",
        }
    }

    fn stage(self) -> &'static str {
        match self {
            PlotKind::Profile => "profile",
            PlotKind::Spectrum => "spectrum",
            PlotKind::LambdaSweep => "lambda-sweep",
        }
    }
}

/// Whitespace-separated plot table from a results bundle directory.
pub fn emit_plotdata(bundle: &Path, what: PlotKind) -> Result<String> {
    let path = bundle.join(what.file());
    if !path.is_file() {
        return Err(CurrentsError::AbsentStage(what.stage().into()));
    }
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let column = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| CurrentsError::Io(format!("{} lacks column `{name}`", what.file())))
    };
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let (names, keep): (&[&str], Box<dyn Fn(&[&str]) -> bool>) = match what {
        PlotKind::Profile => {
            let g = column("g")?;
            (&["eta", "g"], Box::new(move |r: &[&str]| !r[g].is_empty()))
        }
        PlotKind::Spectrum => (&["k", "eigenvalue"], Box::new(|_: &[&str]| true)),
        PlotKind::LambdaSweep => (&["lambda", "minimizers", "sigma_unique"], Box::new(|_: &[&str]| true)),
    };
    let idx: Vec<usize> = names.iter().map(|n| column(n)).collect::<Result<_>>()?;
    let mut out: Vec<Vec<String>> = rows
        .iter()
        .filter(|r| keep(r))
        .map(|r| {
            idx.iter()
                .map(|&i| r.get(i).copied().unwrap_or("").to_string())
                .collect()
        })
        .collect();
    let key = |r: &Vec<String>| r[0].parse::<f64>().unwrap_or(f64::NAN);
    out.sort_by(|a, b| key(a).total_cmp(&key(b)));
    let mut text = format!("# {}\n", names.join(" "));
    for r in out {
        text.push_str(&r.join(" "));
        text.push('\n');
    }
    Ok(text)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OracleReport {
    pub checks: usize,
    pub mismatches: Vec<String>,
    pub skipped: Vec<String>,
}

impl OracleReport {
    pub fn pass(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Cross-checks the scenario's selection stage against brute force: flat distances against
/// the exhaustive flat norm and penalized minima against an unpruned class enumeration.
pub fn oracle_scenario(scenario: &Scenario) -> Result<OracleReport> {
    let complex = scenario.complex()?;
    let sigma = scenario.sigma.build(&complex, scenario.grid.spacing)?;
    let integrand = scenario.integrand.build(&complex, sigma.degree())?;
    let mut report = OracleReport::default();
    let Some(stage) = &scenario.selection else {
        report.skipped.push("no selection stage".into());
        return Ok(report);
    };
    let q = complex.num_cells(sigma.degree() + 1) as i32;
    let states = ((2 * stage.coeff_bound + 1) as f64).powi(q);
    if states > ORACLE_STATES {
        report.skipped.push(format!(
            "class search over {}^{q} fillings exceeds the oracle limit",
            2 * stage.coeff_bound + 1
        ));
        return Ok(report);
    }
    let search = SearchBounds::new(stage.coeff_bound);
    let full = ClassFamily::enumerate(&complex, &sigma, &integrand, &search, f64::INFINITY)?;
    for cand in full.candidates() {
        let t = &cand.chain - &sigma;
        let bound = t.max_abs_coefficient().max(1);
        if ((2 * bound + 1) as f64).powi(q) > ORACLE_STATES {
            continue;
        }
        let brute = flat_norm_bruteforce(&complex, &t, bound)?.value;
        let lp = flat_norm(&complex, &t)?.value;
        report.checks += 1;
        if (brute - lp).abs() > 1e-9 {
            report.mismatches.push(format!(
                "flat norm of T − Σ = {}: LP {lp}, brute force {brute}",
                chain_cell(&t)
            ));
        }
    }
    for &eta in &stage.eta {
        for &lambda in &stage.lambda {
            let problem = PenalizedProblem::new(
                sigma.clone(),
                integrand.clone(),
                eta,
                lambda,
                stage.penalty,
                search.clone(),
            )?;
            let pruned = minimize_penalized(&complex, &problem)?;
            let exhaustive = minimize_in_family(&complex, &problem, &full)?;
            report.checks += 1;
            let same_set = pruned.minimizers.len() == exhaustive.minimizers.len()
                && pruned
                    .minimizers
                    .iter()
                    .all(|m| exhaustive.minimizers.iter().any(|e| e.chain == m.chain));
            if (pruned.value - exhaustive.value).abs() > 1e-9 || !same_set {
                report.mismatches.push(format!(
                    "η={eta} λ={lambda}: pruned value {} ({} minimizers), exhaustive {} ({})",
                    pruned.value,
                    pruned.minimizers.len(),
                    exhaustive.value,
                    exhaustive.minimizers.len()
                ));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT: &str = r#"
name = "unit-cell"
seed = 3

[complex]
extent = [1, 1]

[sigma]
kind = "row"
row = 0

[integrand]
kind = "area"

[selection]
eta = [0.0, 1.0]
lambda = [1.0]

[almost_min]
coeff_bound = 1

[lambda_search]
lambda = [0.5, 1.0, 2.0, 2.5, 4.0]

[lambda_search.sigma]
kind = "path"
points = [[0, 0], [0, 1], [1, 1], [1, 0]]

[stability]
eta = [1.0, 0.0]
epsilon = 1.0

[expect]
lambda0 = 2.0
g = [[1.0, 3.0]]
c_fit = 2.0
"#;

    #[test]
    fn unit_cell_bundle() {
        let s = Scenario::parse(UNIT).unwrap();
        let b = run_scenario(&s, &RunOptions::default()).unwrap();
        assert!(b.summary.pass, "{:#?}", b.summary.assertions);
        assert_eq!(b.summary.lambda0, Some(2.0));
        assert_eq!(b.summary.lambda0_grid, Some(2.5));
        assert_eq!(b.summary.c_fit, Some(2.0));
        let profile = b.file("profile.csv").unwrap();
        assert!(profile.starts_with(&format!("# currents {VERSION} profile v1\neta,g,")));
        assert!(profile.contains("\n1,3,1,"));
        let sel = b.file("selection.csv").unwrap();
        assert!(sel.lines().count() >= 4);
    }

    #[test]
    fn plot_tables() {
        let s = Scenario::parse(UNIT).unwrap();
        let b = run_scenario(
            &s,
            &RunOptions {
                jobs: Some(2),
                verbose: false,
            },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        b.write(dir.path()).unwrap();
        let p = emit_plotdata(dir.path(), PlotKind::Profile).unwrap();
        assert_eq!(p, "# eta g\n0 1\n1 3\n");
        let l = emit_plotdata(dir.path(), PlotKind::LambdaSweep).unwrap();
        assert!(l.starts_with("# lambda minimizers sigma_unique\n0.5 "));
        assert!(l.ends_with("4 1 true\n"));
        assert!(matches!(
            emit_plotdata(dir.path(), PlotKind::Spectrum),
            Err(CurrentsError::AbsentStage(_))
        ));
    }

    #[test]
    fn oracle_agrees_on_unit_cell() {
        let s = Scenario::parse(UNIT).unwrap();
        let r = oracle_scenario(&s).unwrap();
        assert!(r.pass(), "{:?}", r.mismatches);
        assert!(r.checks > 2);
    }
}
