//! Command-line front end.
//!
//! Instances are JSON documents
//!
//! ```json
//! { "q": [1, 1], "p": [3, 1], "cost": [[0, 1], [1, 0]], "reference": [1, 1] }
//! ```
//!
//! with unnormalized non-negative weights; `p` is needed by every command
//! except `ocp`, and `reference` (default uniform) only by `identities`.
//! `--input` takes a file path or, when the argument starts with `{`, the
//! document itself.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 on bad input.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp1, Uniform};
use rayon::prelude::*;
use serde::Deserialize;

use crate::channel::{solve_ocp, value_of_information};
use crate::error::{Error, Result};
use crate::geometry::{
    check_theorem2, cumulant_identities, kl_minus_decomposition, kl_upper_bound, law_of_cosines, PotentialPair,
};
use crate::info_otp::{check_theorem1, solve_constrained_otp};
use crate::measures::{
    cross_information, entropy, kl_divergence, mutual_information, CostMatrix, Distribution, InfoBudget,
    JointDistribution,
};
use crate::oracles::{generate, lp_bruteforce, monotone_1d, CostKind, InstanceSpec, MarginalKind};
use crate::transport_lp::{dual_value, solve_otp};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INPUT_ERROR: i32 = 2;

pub const SWEEP_HEADER: &str = "lambda,r_c,k_c_lambda,j_c,v_lambda,beta,info_achieved,active";
pub const VERIFY_HEADER: &str = "seed,check,value,tolerance,pass";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Exact transport value, plan and dual potentials.
    Otp,
    /// Optimal channel under `--lambda`.
    Ocp,
    /// Information-constrained transport under `--lambda`.
    Cotp,
    /// Dual value and duality gap.
    Dual,
    /// KL identity residuals for the input triple.
    Identities,
    /// CSV over a budget grid.
    Sweep,
    /// Seeded random instances through every oracle and inequality check.
    Verify,
}

/// Parsed command line.
#[derive(Debug, Clone, Parser)]
#[command(name = "kwkl", version, about = "Optimal transport, optimal channels and KL geometry on finite spaces")]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,

    /// Instance file, or an inline JSON document.
    #[arg(short, long)]
    pub input: Option<String>,

    /// Information budget in nats (bits with `--bits`).
    #[arg(short, long, conflicts_with = "grid")]
    pub lambda: Option<f64>,

    /// Budget grid `start,stop,steps`, endpoints included.
    #[arg(short, long, value_parser = parse_grid)]
    pub grid: Option<LambdaGrid>,

    /// Write CSV here instead of stdout.
    #[arg(short, long)]
    pub out: Option<PathBuf>,

    #[arg(short, long)]
    pub seed: Option<u64>,

    /// Number of instances for `verify`.
    #[arg(short = 'n', long, default_value_t = 100)]
    pub count: usize,

    /// Read and print information quantities in bits.
    #[arg(long)]
    pub bits: bool,

    /// Tolerance override `key=value`; repeatable. Keys: lp, duality,
    /// sandwich, theorem1, identity, theorem2.
    #[arg(long = "tol", value_parser = parse_tolerance)]
    pub tolerances: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaGrid {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl LambdaGrid {
    pub fn points(&self) -> Vec<f64> {
        match self.steps {
            0 => Vec::new(),
            1 => vec![self.start],
            k => (0..k)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (k - 1) as f64)
                .collect(),
        }
    }
}

fn parse_grid(s: &str) -> std::result::Result<LambdaGrid, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [start, stop, steps] = parts[..] else {
        return Err(format!("expected start,stop,steps, got {s:?}"));
    };
    let number = |t: &str| t.parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    let grid = LambdaGrid {
        start: number(start)?,
        stop: number(stop)?,
        steps: steps.parse().map_err(|e| format!("{steps:?}: {e}"))?,
    };
    if !(grid.start >= 0.0 && grid.stop >= grid.start && grid.stop.is_finite()) {
        return Err(format!("grid needs 0 <= start <= stop, got {s:?}"));
    }
    Ok(grid)
}

fn parse_tolerance(s: &str) -> std::result::Result<(String, f64), String> {
    let (key, value) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let key = key.trim();
    if !Tolerances::KEYS.contains(&key) {
        return Err(format!("unknown tolerance {key:?}; known: {}", Tolerances::KEYS.join(", ")));
    }
    let value: f64 = value.trim().parse().map_err(|e| format!("{value:?}: {e}"))?;
    if !(value > 0.0) || !value.is_finite() {
        return Err(format!("tolerance must be positive, got {value}"));
    }
    Ok((key.to_string(), value))
}

/// Thresholds applied by `verify` and `identities`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub lp: f64,
    pub duality: f64,
    pub sandwich: f64,
    pub theorem1: f64,
    pub identity: f64,
    pub theorem2: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            lp: 1e-10,
            duality: 1e-9,
            sandwich: 1e-8,
            theorem1: 1e-6,
            identity: 1e-10,
            theorem2: 1e-8,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 6] = ["lp", "duality", "sandwich", "theorem1", "identity", "theorem2"];

    fn with_overrides(overrides: &[(String, f64)]) -> Self {
        let mut t = Self::default();
        for (key, value) in overrides {
            let slot = match key.as_str() {
                "lp" => &mut t.lp,
                "duality" => &mut t.duality,
                "sandwich" => &mut t.sandwich,
                "theorem1" => &mut t.theorem1,
                "identity" => &mut t.identity,
                "theorem2" => &mut t.theorem2,
                _ => unreachable!("keys are validated while parsing"),
            };
            *slot = *value;
        }
        t
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    q: Vec<f64>,
    p: Option<Vec<f64>>,
    cost: Vec<Vec<f64>>,
    reference: Option<Vec<f64>>,
}

/// A validated instance document.
#[derive(Debug, Clone)]
pub struct InputInstance {
    pub q: Distribution,
    pub p: Option<Distribution>,
    pub cost: CostMatrix,
    pub reference: Option<Distribution>,
}

impl InputInstance {
    fn output_marginal(&self) -> std::result::Result<&Distribution, String> {
        self.p.as_ref().ok_or_else(|| "this command needs an output marginal \"p\"".to_string())
    }
}

/// Parses and validates an instance document. Syntax errors carry the
/// line and column reported by the JSON parser.
pub fn parse_instance(text: &str, origin: &str) -> std::result::Result<InputInstance, String> {
    let raw: RawInstance = serde_json::from_str(text)
        .map_err(|e| format!("{origin}:{}:{}: {e}", e.line(), e.column()))?;
    let field = |name: &str, e: Error| format!("{origin}: field \"{name}\": {e}");
    let q = Distribution::new(raw.q).map_err(|e| field("q", e))?;
    let p = raw.p.map(Distribution::new).transpose().map_err(|e| field("p", e))?;
    let cost = CostMatrix::from_rows(&raw.cost).map_err(|e| field("cost", e))?;
    let reference = raw.reference.map(Distribution::new).transpose().map_err(|e| field("reference", e))?;
    if cost.rows() != q.len() {
        return Err(format!("{origin}: cost has {} rows but q has {} atoms", cost.rows(), q.len()));
    }
    if let Some(p) = &p {
        if cost.cols() != p.len() {
            return Err(format!("{origin}: cost has {} columns but p has {} atoms", cost.cols(), p.len()));
        }
    }
    Ok(InputInstance { q, p, cost, reference })
}

fn load_instance(config: &RunConfig) -> std::result::Result<InputInstance, String> {
    let source = config.input.as_deref().ok_or("this command needs --input")?;
    if source.trim_start().starts_with('{') {
        return parse_instance(source, "<inline>");
    }
    let text = std::fs::read_to_string(source).map_err(|e| format!("{source}: {e}"))?;
    parse_instance(&text, source)
}

/// Twelve significant digits, scientific notation.
pub fn format_number(v: f64) -> String {
    format!("{v:.11e}")
}

fn format_vec(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(", "))
}

/// Unit conversion applied at input and print time only.
#[derive(Debug, Clone, Copy)]
struct Units {
    per_nat: f64,
    name: &'static str,
}

impl Units {
    fn new(bits: bool) -> Self {
        if bits {
            Self { per_nat: 1.0 / LN_2, name: "bits" }
        } else {
            Self { per_nat: 1.0, name: "nats" }
        }
    }

    fn info(self, nats: f64) -> f64 {
        nats * self.per_nat
    }

    fn to_nats(self, value: f64) -> f64 {
        value / self.per_nat
    }

    /// `β` is a cost per unit of information inverted, so it scales the
    /// same way as information.
    fn beta(self, per_nat: f64) -> f64 {
        per_nat * self.per_nat
    }
}

enum Failure {
    Input(String),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<String> for Failure {
    fn from(e: String) -> Self {
        Failure::Input(e)
    }
}

impl From<&str> for Failure {
    fn from(e: &str) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(format!("i/o error: {e}"))
    }
}

/// Runs one command, writing reports to `out` and diagnostics to `err`,
/// and returns the process exit code.
pub fn run(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match config.command {
        Command::Otp => cmd_otp(config, out),
        Command::Ocp => cmd_ocp(config, out),
        Command::Cotp => cmd_cotp(config, out),
        Command::Dual => cmd_dual(config, out),
        Command::Identities => cmd_identities(config, out),
        Command::Sweep => cmd_sweep(config, out),
        Command::Verify => cmd_verify(config, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Verification) => EXIT_VERIFY_FAILED,
        Err(Failure::Input(message)) => {
            let _ = writeln!(err, "error: {message}");
            EXIT_INPUT_ERROR
        }
    }
}

fn budget_from(config: &RunConfig, units: Units) -> std::result::Result<InfoBudget, Failure> {
    let lambda = config.lambda.ok_or("this command needs --lambda")?;
    Ok(InfoBudget::new(units.to_nats(lambda))?)
}

fn cmd_otp(config: &RunConfig, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let inst = load_instance(config)?;
    let p = inst.output_marginal()?;
    let sol = solve_otp(&inst.q, p, &inst.cost)?;
    writeln!(out, "K_c = {}", sol.value)?;
    writeln!(out, "status = {:?}", sol.status)?;
    writeln!(out, "plan =")?;
    for x in 0..sol.plan.rows() {
        writeln!(out, "  {}", format_vec(sol.plan.row(x)))?;
    }
    writeln!(out, "f = {}", format_vec(&sol.potentials.f))?;
    writeln!(out, "g = {}", format_vec(&sol.potentials.g))?;
    Ok(())
}

fn cmd_ocp(config: &RunConfig, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let units = Units::new(config.bits);
    let inst = load_instance(config)?;
    let budget = budget_from(config, units)?;
    let sol = solve_ocp(&inst.q, &inst.cost, budget)?;
    writeln!(out, "R_c = {}", sol.value)?;
    writeln!(out, "beta = {}", units.beta(sol.beta))?;
    writeln!(out, "I = {} {}", units.info(sol.info), units.name)?;
    writeln!(out, "active = {}", sol.is_active())?;
    writeln!(out, "output marginal = {}", format_vec(sol.output_marginal.mass()))?;
    Ok(())
}

fn cmd_cotp(config: &RunConfig, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let units = Units::new(config.bits);
    let inst = load_instance(config)?;
    let p = inst.output_marginal()?;
    let budget = budget_from(config, units)?;
    let sol = solve_constrained_otp(&inst.q, p, &inst.cost, budget)?;
    writeln!(out, "K_c(lambda) = {}", sol.value)?;
    writeln!(out, "active = {}", sol.active)?;
    writeln!(out, "beta = {}", units.beta(sol.beta))?;
    writeln!(out, "I = {} {}", units.info(sol.info), units.name)?;
    Ok(())
}

fn cmd_dual(config: &RunConfig, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let inst = load_instance(config)?;
    let p = inst.output_marginal()?;
    let sol = solve_otp(&inst.q, p, &inst.cost)?;
    let j = dual_value(&sol, &inst.q, p)?;
    writeln!(out, "J_c = {j}")?;
    writeln!(out, "K_c = {}", sol.value)?;
    writeln!(out, "gap = {}", sol.value - j)?;
    writeln!(out, "dual infeasibility = {}", sol.dual_infeasibility(&inst.cost))?;
    writeln!(out, "slackness residual = {}", sol.slackness_residual(&inst.cost))?;
    Ok(())
}

fn cmd_identities(config: &RunConfig, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let tol = Tolerances::with_overrides(&config.tolerances);
    let inst = load_instance(config)?;
    let p = inst.output_marginal()?;
    if p.len() != inst.q.len() {
        return Err(Failure::Input("identities need p and q on the same space".into()));
    }
    let r = inst.reference.clone().unwrap_or_else(|| Distribution::uniform(p.len()));
    let mut residuals = vec![
        ("law_of_cosines", law_of_cosines(p, &inst.q, &r)?.residual),
    ];
    let minus = kl_minus_decomposition(p, &inst.q, &r)?;
    residuals.push(("kl_minus", minus.decomposition.residual));
    residuals.push(("symmetrized", minus.symmetrized.residual));
    if inst.cost.is_square() {
        let plan = solve_otp(&inst.q, p, &inst.cost)?.plan;
        let pythagoras = cross_information(&plan, &inst.q)? - mutual_information(&plan) - kl_divergence(p, &inst.q)?;
        residuals.push(("pythagoras", pythagoras.abs()));
    }
    let mut failed = false;
    for (name, residual) in residuals {
        let pass = residual <= tol.identity;
        failed |= !pass;
        writeln!(out, "{name}: residual = {residual:e} ({})", if pass { "pass" } else { "FAIL" })?;
    }
    if failed {
        Err(Failure::Verification)
    } else {
        Ok(())
    }
}

fn open_output(config: &RunConfig) -> std::result::Result<Option<std::fs::File>, Failure> {
    match &config.out {
        Some(path) => std::fs::File::create(path)
            .map(Some)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => Ok(None),
    }
}

fn cmd_sweep(config: &RunConfig, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let units = Units::new(config.bits);
    let inst = load_instance(config)?;
    let p = inst.output_marginal()?;
    let grid = config.grid.ok_or("sweep needs --grid start,stop,steps")?;
    let lambdas: Vec<f64> = grid.points().into_iter().map(|l| units.to_nats(l)).collect();
    let curve = value_of_information(&inst.q, &inst.cost, &lambdas)?;
    let lp = solve_otp(&inst.q, p, &inst.cost)?;
    let j_c = dual_value(&lp, &inst.q, p)?;
    let constrained = lambdas
        .par_iter()
        .map(|&l| solve_constrained_otp(&inst.q, p, &inst.cost, InfoBudget::new(l)?).map(|s| s.value))
        .collect::<Result<Vec<f64>>>()?;

    let mut csv = String::new();
    writeln!(csv, "{SWEEP_HEADER}").expect("writing to a string");
    for (point, k_lambda) in curve.iter().zip(&constrained) {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            format_number(units.info(point.lambda)),
            format_number(point.rate_value),
            format_number(*k_lambda),
            format_number(j_c),
            format_number(point.value_of_information),
            format_number(units.beta(point.beta)),
            format_number(units.info(point.info)),
            point.beta.is_finite(),
        )
        .expect("writing to a string");
    }
    match open_output(config)? {
        Some(mut file) => file.write_all(csv.as_bytes())?,
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(())
}

/// One row of the `verify` report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub seed: u64,
    pub check: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn record(seed: u64, check: &'static str, value: f64, tolerance: f64) -> CheckRecord {
    CheckRecord {
        seed,
        check,
        value,
        tolerance,
        pass: value <= tolerance,
    }
}

fn random_distribution(n: usize, rng: &mut ChaCha8Rng) -> Distribution {
    Distribution::new((0..n).map(|_| Exp1.sample(rng)).collect()).expect("positive draws")
}

/// Every oracle comparison and inequality check for the instance drawn
/// from `seed`. Solver errors are reported as failed checks.
pub fn verify_seed(seed: u64, tol: &Tolerances) -> Vec<CheckRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nx = rng.random_range(1..=3);
    let mut ny = rng.random_range(1..=3);
    let cost_kind = [
        CostKind::Hamming,
        CostKind::GridAbs,
        CostKind::RandomUniform,
        CostKind::TranslationInvariantCyclic,
    ][rng.random_range(0..4)];
    if cost_kind == CostKind::TranslationInvariantCyclic {
        ny = nx;
    }
    let marginal_kind = match rng.random_range(0..10) {
        0 => MarginalKind::PointMass,
        1 => MarginalKind::Uniform,
        _ => MarginalKind::RandomDirichlet,
    };
    let spec = InstanceSpec {
        nx,
        ny,
        seed: rng.random(),
        cost_kind,
        marginal_kind,
    };
    let outcome = (|| -> Result<Vec<CheckRecord>> {
        let mut rec = Vec::new();
        let inst = generate(spec)?;
        let (q, p, c) = (&inst.q, &inst.p, &inst.c);

        let lp = solve_otp(q, p, c)?;
        let brute = lp_bruteforce(q, p, c)?;
        rec.push(record(seed, "lp_vs_bruteforce", (lp.value - brute.value).abs(), tol.lp));
        if cost_kind == CostKind::GridAbs && nx == ny {
            rec.push(record(seed, "lp_vs_monotone_1d", (lp.value - monotone_1d(q, p, 1.0)?).abs(), tol.lp));
        }
        let j = dual_value(&lp, q, p)?;
        rec.push(record(seed, "duality_gap", (lp.value - j).abs(), tol.duality));
        rec.push(record(seed, "complementary_slackness", lp.slackness_residual(c), tol.duality));
        rec.push(record(seed, "dual_feasibility", lp.dual_infeasibility(c), tol.duality));

        let h = entropy(q).min(entropy(p));
        for fraction in [0.0, 0.5, 1.0] {
            let budget = InfoBudget::new(fraction * h)?;
            let r = solve_ocp(q, c, budget)?.value;
            let k = solve_constrained_otp(q, p, c, budget)?.value;
            rec.push(record(seed, "sandwich", (r - k).max(0.0), tol.sandwich));
            if fraction == 1.0 {
                rec.push(record(seed, "endpoint_recovery", (k - lp.value).abs(), tol.theorem1));
            }
        }

        if nx == ny && q.is_strictly_positive() && nx > 1 {
            let budget = InfoBudget::new(0.5 * entropy(q))?;
            let report = check_theorem1(q, c, budget)?;
            rec.push(record(seed, "theorem1_gap", report.gap.abs(), tol.theorem1));
        }

        let n = nx.max(2);
        let (a, b, r) = (
            random_distribution(n, &mut rng),
            random_distribution(n, &mut rng),
            random_distribution(n, &mut rng),
        );
        rec.push(record(seed, "law_of_cosines", law_of_cosines(&a, &b, &r)?.residual, tol.identity));
        let minus = kl_minus_decomposition(&a, &b, &r)?;
        rec.push(record(seed, "kl_minus", minus.decomposition.residual, tol.identity));
        rec.push(record(seed, "symmetrized", minus.symmetrized.residual, tol.identity));
        let w = JointDistribution::new(n, n, (0..n * n).map(|_| Exp1.sample(&mut rng)).collect())?;
        let wq = w.row_marginal();
        let pythagoras = cross_information(&w, &wq)? - mutual_information(&w) - kl_divergence(&w.col_marginal(), &wq)?;
        rec.push(record(seed, "pythagoras", pythagoras.abs(), tol.identity));

        let spread = Uniform::new(-1.0, 1.0).expect("valid range");
        let f: Vec<f64> = (0..n).map(|_| spread.sample(&mut rng)).collect();
        let cumulant = cumulant_identities(&f, 2.0 * rng.random::<f64>(), &r)?;
        rec.push(record(seed, "legendre", cumulant.legendre.residual, tol.identity));

        let t2 = check_theorem2(n, seed)?;
        rec.push(record(seed, "theorem2", t2.identity.residual, tol.theorem2));
        let g: Vec<f64> = (0..n).map(|_| spread.sample(&mut rng)).collect();
        let pair = PotentialPair::new(f, g, rng.random::<f64>() * 2.0, rng.random::<f64>() * 2.0, r)?;
        let cost = CostMatrix::from_fn(n, n, |x, y| if x == y { 0.0 } else { 0.5 + rng.random::<f64>() });
        match kl_upper_bound(&pair, &cost) {
            Ok(bound) => rec.push(record(seed, "kl_upper_bound", (-bound.slack).max(0.0), tol.theorem2)),
            Err(Error::InfiniteEpsilon) => {}
            Err(e) => return Err(e),
        }
        Ok(rec)
    })();
    outcome.unwrap_or_else(|_| vec![records_error(seed, "solver_error")])
}

fn records_error(seed: u64, check: &'static str) -> CheckRecord {
    CheckRecord {
        seed,
        check,
        value: f64::INFINITY,
        tolerance: 0.0,
        pass: false,
    }
}

fn cmd_verify(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> std::result::Result<(), Failure> {
    let tol = Tolerances::with_overrides(&config.tolerances);
    let first = config.seed.unwrap_or(0);
    let seeds: Vec<u64> = (0..config.count as u64).map(|k| first.wrapping_add(k)).collect();
    let mut records: Vec<CheckRecord> = seeds.par_iter().flat_map_iter(|&s| verify_seed(s, &tol)).collect();
    records.sort_by(|a, b| a.seed.cmp(&b.seed).then(a.check.cmp(b.check)));

    let mut csv = String::new();
    writeln!(csv, "{VERIFY_HEADER}").expect("writing to a string");
    for r in &records {
        writeln!(
            csv,
            "{},{},{},{},{}",
            r.seed,
            r.check,
            format_number(r.value),
            format_number(r.tolerance),
            r.pass
        )
        .expect("writing to a string");
    }
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in &records {
        let entry = counts.entry(r.check).or_default();
        entry.0 += usize::from(r.pass);
        entry.1 += 1;
    }
    let mut summary = String::new();
    for (check, (passed, total)) in &counts {
        writeln!(summary, "{check}: {passed}/{total} passed").expect("writing to a string");
    }
    let failures: Vec<&CheckRecord> = records.iter().filter(|r| !r.pass).collect();
    for r in &failures {
        writeln!(
            summary,
            "FAILED {} on seed {}: {:e} > {:e}",
            r.check, r.seed, r.value, r.tolerance
        )
        .expect("writing to a string");
    }
    writeln!(
        summary,
        "{} of {} checks passed over {} instances",
        records.len() - failures.len(),
        records.len(),
        seeds.len()
    )
    .expect("writing to a string");

    match open_output(config)? {
        Some(mut file) => {
            file.write_all(csv.as_bytes())?;
            out.write_all(summary.as_bytes())?;
        }
        None => {
            out.write_all(csv.as_bytes())?;
            err.write_all(summary.as_bytes())?;
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = r#"{"q": [1, 1], "p": [3, 1], "cost": [[0, 1], [1, 0]]}"#;

    fn config(args: &[&str]) -> RunConfig {
        RunConfig::try_parse_from(std::iter::once("kwkl").chain(args.iter().copied())).unwrap()
    }

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(&config(args), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn otp_on_fixture() {
        let (code, out, _) = run_capture(&["otp", "--input", FIXTURE]);
        assert_eq!(code, 0);
        assert!(out.contains("K_c = 0.25"), "{out}");
    }

    #[test]
    fn malformed_input_reports_line() {
        let (code, _, err) = run_capture(&["otp", "--input", "{\"q\": [1,\n 2,,]}"]);
        assert_eq!(code, EXIT_INPUT_ERROR);
        assert!(err.contains("<inline>:2:"), "{err}");
    }

    #[test]
    fn missing_marginal_is_an_input_error() {
        let doc = r#"{"q": [1, 1], "cost": [[0, 1], [1, 0]]}"#;
        assert_eq!(run_capture(&["otp", "--input", doc]).0, EXIT_INPUT_ERROR);
        assert_eq!(run_capture(&["ocp", "--input", doc, "--lambda", "0.1"]).0, EXIT_OK);
    }

    #[test]
    fn lambda_and_grid_conflict() {
        let parsed = RunConfig::try_parse_from(["kwkl", "sweep", "--lambda", "0.1", "--grid", "0,1,3"]);
        assert!(parsed.is_err());
        assert!(RunConfig::try_parse_from(["kwkl", "verify", "--tol", "bogus=1"]).is_err());
    }

    #[test]
    fn sweep_rows_and_monotonicity() {
        let grid = format!("0,{},8", LN_2);
        let (code, out, _) = run_capture(&["sweep", "--input", FIXTURE, "--grid", &grid]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], SWEEP_HEADER);
        assert_eq!(lines.len(), 9);
        let r_c: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
        assert!(r_c.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{r_c:?}");
    }

    #[test]
    fn grid_points_include_endpoints() {
        let g = parse_grid("0, 1, 5").unwrap();
        assert_eq!(g.points(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(parse_grid("1,0,3").is_err());
    }

    #[test]
    fn number_format_has_twelve_digits() {
        assert_eq!(format_number(0.25), "2.50000000000e-1");
        assert_eq!(format_number(f64::INFINITY), "inf");
    }
}
