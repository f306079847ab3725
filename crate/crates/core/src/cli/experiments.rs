use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;

use super::config::{ExperimentConfig, GameKind, Population, TrafficSection};
use super::output::write_csv_atomic;
use crate::algorithms::{
    operator_constants, solve_traced, Algorithm, EquilibriumResult, SolverConfig, TraceRow,
};
use crate::analysis::{
    distance_bounds, dual_uniqueness_ev, epsilon_nash, estimate_constants, fmt_num, epsilon_bound, verify,
    VerificationReport, REPORT_COLUMNS,
};
use crate::applications::ev::{bundled_demand, build_ev_game, build_ev_quadratic_game, load_demand, EvParams};
use crate::applications::traffic::{build_route_choice_game, load_network, RoadNetwork, RouteChoice, RouteChoiceSpec};
use crate::error::{Error, Result};
use crate::game::{AggregativeGame, ConstraintSet, CostModel, Coupling, StrategyProfile};
use crate::linalg::dist2;
use crate::operators::Flavor;

/// Where a failure happened, which decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or input data (exit code 2).
    Setup(Error),
    /// The solver or the analysis failed (exit code 1).
    Solver(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Setup(_) => 2,
            Failure::Solver(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Setup(e) => write!(f, "configuration error: {e}"),
            Failure::Solver(e) => write!(f, "solver failure: {e}"),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn setup<T>(r: Result<T>) -> Outcome<T> {
    r.map_err(Failure::Setup)
}

fn solver<T>(r: Result<T>) -> Outcome<T> {
    r.map_err(Failure::Solver)
}

/// A game plus the application data the analysis needs.
#[derive(Debug, Clone)]
pub struct Instance {
    pub game: AggregativeGame,
    pub ev: Option<EvParams>,
    pub routes: Option<RouteChoice>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomGame {
    m: usize,
    n: usize,
    q: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    offsets: Vec<Vec<f64>>,
    lo: Vec<Vec<f64>>,
    hi: Vec<Vec<f64>>,
    theta: Option<Vec<f64>>,
    a: Option<Vec<Vec<f64>>>,
    b: Option<Vec<f64>>,
    cap: Option<Vec<f64>>,
}

fn dense(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, |v| v.len());
    if rows.iter().any(|v| v.len() != c) {
        return Err(Error::Config(format!("{name} is ragged")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// Quadratic game from the JSON format documented in the README.
pub fn load_custom_game(path: &Path) -> Result<AggregativeGame> {
    let text = std::fs::read_to_string(path)?;
    let g: CustomGame = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if g.lo.len() != g.m || g.hi.len() != g.m {
        return Err(Error::Config("lo and hi need one row per agent".into()));
    }
    let sets = (0..g.m)
        .map(|i| match &g.theta {
            Some(th) => {
                let t = *th
                    .get(i)
                    .ok_or_else(|| Error::Config("theta needs one entry per agent".into()))?;
                ConstraintSet::box_budget(g.lo[i].clone(), g.hi[i].clone(), t)
            }
            None => ConstraintSet::boxed(g.lo[i].clone(), g.hi[i].clone()),
        })
        .collect::<Result<Vec<_>>>()?;
    let coupling = match (&g.a, &g.b, &g.cap) {
        (Some(a), Some(b), None) => Coupling::Dense {
            a: dense(a, "a")?,
            b: b.clone(),
        },
        (None, None, Some(cap)) => Coupling::PerComponentCap { cap: cap.clone(), m: g.m },
        (None, None, None) => Coupling::none(g.m, g.n),
        _ => return Err(Error::Config("give either a and b, or cap".into())),
    };
    let cost = CostModel::Quadratic {
        q: dense(&g.q, "q")?,
        c: dense(&g.c, "c")?,
        offsets: g.offsets,
    };
    AggregativeGame::new(g.m, g.n, cost, sets, coupling)
}

fn ev_params(kind: &GameKind, m: usize, seed: u64) -> Result<EvParams> {
    let (GameKind::Ev(ev) | GameKind::Quadratic(_, ev)) = kind else {
        unreachable!("EV parameters requested for a non-EV kind")
    };
    let demand = match &ev.demand_file {
        Some(p) => load_demand(p)?,
        None => bundled_demand()?,
    };
    Ok(EvParams::random(m, demand, seed)?
        .with_sqrt_price(ev.price_scale, ev.kappa)
        .with_cap(ev.cap))
}

pub fn load_traffic_network(t: &TrafficSection) -> Result<RoadNetwork> {
    let net = load_network(&t.nodes, &t.edges, t.bbox()?)?.with_capacity(t.f, t.h)?;
    let mut caps = vec![t.cap; net.directed_edges()];
    for &e in &t.capped_edges {
        let slot = caps
            .get_mut(e)
            .ok_or_else(|| Error::Config(format!("capped edge {e} does not exist")))?;
        *slot = t.capped_value.unwrap_or(t.cap);
    }
    net.with_caps(caps)
}

fn route_spec(t: &TrafficSection, m: usize, seed: u64) -> RouteChoiceSpec {
    RouteChoiceSpec {
        m,
        od_pairs: t.od_pairs.as_ref().map(|v| v.iter().map(|p| (p[0], p[1])).collect()),
        gamma_range: (t.gamma_min, t.gamma_max),
        gammas: None,
        seed,
    }
}

/// Builds the game of population `m` drawn from `seed`.
pub fn build_instance(cfg: &ExperimentConfig, m: Option<usize>, seed: u64) -> Result<Instance> {
    let need_m = || m.ok_or_else(|| Error::Config("experiment.m is required".into()));
    match &cfg.kind {
        GameKind::Ev(_) => {
            let p = ev_params(&cfg.kind, need_m()?, seed)?;
            Ok(Instance {
                game: build_ev_game(&p)?,
                ev: Some(p),
                routes: None,
            })
        }
        GameKind::Quadratic(q, _) => {
            let p = ev_params(&cfg.kind, need_m()?, seed)?;
            Ok(Instance {
                game: build_ev_quadratic_game(&p, q.q, q.c)?,
                ev: None,
                routes: None,
            })
        }
        GameKind::Traffic(t) => {
            let net = load_traffic_network(t)?;
            let (game, routes) = build_route_choice_game(&net, &route_spec(t, need_m()?, seed))?;
            Ok(Instance {
                game,
                ev: None,
                routes: Some(routes),
            })
        }
        GameKind::Custom(path) => {
            let game = load_custom_game(path)?;
            if let Some(m) = m {
                if m != game.m() {
                    return Err(Error::Config(format!(
                        "experiment.m = {m} but the game file has {} agents",
                        game.m()
                    )));
                }
            }
            Ok(Instance {
                game,
                ev: None,
                routes: None,
            })
        }
    }
}

/// Instances for every M of a sweep, sharing one population draw when replicated.
pub fn sweep_instances(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Result<Instance>>> {
    let ms = &cfg.m;
    if cfg.population == Population::Independent || ms.len() < 2 {
        return Ok(ms.iter().map(|&m| build_instance(cfg, Some(m), seed)).collect());
    }
    let m0 = ms[0];
    if let Some(m) = ms.iter().find(|&&m| m % m0 != 0) {
        return Err(Error::Config(format!(
            "replicated populations need every M to be a multiple of {m0}; {m} is not"
        )));
    }
    let copies = |m: usize| m / m0;
    match &cfg.kind {
        GameKind::Ev(_) | GameKind::Quadratic(..) => {
            let base = ev_params(&cfg.kind, m0, seed)?;
            Ok(ms
                .iter()
                .map(|&m| {
                    let p = base.replicate(copies(m));
                    match &cfg.kind {
                        GameKind::Quadratic(q, _) => Ok(Instance {
                            game: build_ev_quadratic_game(&p, q.q, q.c)?,
                            ev: None,
                            routes: None,
                        }),
                        _ => Ok(Instance {
                            game: build_ev_game(&p)?,
                            ev: Some(p),
                            routes: None,
                        }),
                    }
                })
                .collect())
        }
        GameKind::Traffic(t) => {
            let net = load_traffic_network(t)?;
            let (_, base) = build_route_choice_game(&net, &route_spec(t, m0, seed))?;
            Ok(ms
                .iter()
                .map(|&m| {
                    let k = copies(m);
                    let spec = RouteChoiceSpec {
                        m,
                        od_pairs: Some(base.od_pairs.repeat(k)),
                        gamma_range: (t.gamma_min, t.gamma_max),
                        gammas: Some(base.gamma.repeat(k)),
                        seed,
                    };
                    let (game, routes) = build_route_choice_game(&net, &spec)?;
                    Ok(Instance {
                        game,
                        ev: None,
                        routes: Some(routes),
                    })
                })
                .collect())
        }
        GameKind::Custom(_) => Err(Error::Config("custom-file games cannot be swept".into())),
    }
}

pub const EQUILIBRIUM_COLUMNS: [&str; 3] = ["agent", "component", "value"];
pub const DUAL_COLUMNS: [&str; 2] = ["constraint", "lambda"];
pub const TRACE_COLUMNS: [&str; 5] = ["k", "residual", "max_violation", "primal_updates", "dual_updates"];
pub const RUN_COLUMNS: [&str; 6] = [
    "algorithm",
    "M",
    "converged",
    "iterations",
    "primal_updates",
    "dual_updates",
];

fn equilibrium_rows(x: &StrategyProfile) -> Vec<Vec<String>> {
    let mut rows = Vec::with_capacity(x.m() * x.n());
    for i in 0..x.m() {
        for (t, v) in x.agent(i).iter().enumerate() {
            rows.push(vec![i.to_string(), t.to_string(), fmt_num(*v)]);
        }
    }
    rows
}

fn dual_rows(lambda: &[f64]) -> Vec<Vec<String>> {
    lambda
        .iter()
        .enumerate()
        .map(|(r, v)| vec![r.to_string(), fmt_num(*v)])
        .collect()
}

fn trace_rows(trace: &[TraceRow]) -> Vec<Vec<String>> {
    trace
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                fmt_num(r.residual),
                fmt_num(r.max_violation),
                r.primal_updates.to_string(),
                r.dual_updates.to_string(),
            ]
        })
        .collect()
}

fn report_header() -> Vec<&'static str> {
    let mut h: Vec<&str> = RUN_COLUMNS.to_vec();
    h.extend(REPORT_COLUMNS);
    h.push("dual_unique");
    h
}

fn report_row(head: Vec<String>, rep: &VerificationReport, unique: Option<bool>) -> Vec<String> {
    let mut row = head;
    row.extend(rep.csv_row());
    row.push(unique.map(|u| u.to_string()).unwrap_or_default());
    row
}

fn ev_uniqueness(inst: &Instance, x: &StrategyProfile, lambda: &[f64]) -> Option<bool> {
    let p = inst.ev.as_ref()?;
    dual_uniqueness_ev(x, p, lambda, 1e-4).ok().map(|u| u.unique)
}

/// Feasibility is judged at the solver tolerance.
fn feas_tol(cfg: &ExperimentConfig) -> f64 {
    cfg.solver.tol.max(crate::game::DEFAULT_FEAS_TOL)
}

fn ensure_dir(dir: &Path) -> Outcome<()> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Setup(e.into()))
}

/// Summary of a `run`.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: EquilibriumResult,
    pub report: VerificationReport,
}

/// Solves one game and writes equilibrium, duals, trace and report CSVs.
pub fn run(cfg: &ExperimentConfig) -> Outcome<RunOutcome> {
    let m = setup(cfg.single_m())?;
    let inst = setup(build_instance(cfg, m, cfg.seed))?;
    ensure_dir(&cfg.output_dir)?;
    let dir = &cfg.output_dir;
    let mut trace = Vec::new();
    let solved = solve_traced(&inst.game, cfg.algorithm, cfg.flavor, &cfg.solver, &mut trace);
    let result = match solved {
        Ok(r) => r,
        Err(e) => {
            solver(write_csv_atomic(&dir.join("trace.csv"), &TRACE_COLUMNS, &trace_rows(&trace)))?;
            return Err(Failure::Solver(e));
        }
    };
    let write = |name: &str, header: &[&str], rows: &[Vec<String>]| {
        solver(write_csv_atomic(&dir.join(name), header, rows))
    };
    write("equilibrium.csv", &EQUILIBRIUM_COLUMNS, &equilibrium_rows(&result.x))?;
    write("duals.csv", &DUAL_COLUMNS, &dual_rows(&result.lambda))?;
    write("trace.csv", &TRACE_COLUMNS, &trace_rows(&result.trace))?;
    let report = solver(verify(
        &inst.game,
        cfg.flavor,
        &result.x,
        &result.lambda,
        cfg.verify_samples,
        cfg.seed,
        feas_tol(cfg),
    ))?;
    let head = vec![
        cfg.algorithm.name().to_string(),
        inst.game.m().to_string(),
        result.converged.to_string(),
        result.iterations.to_string(),
        result.primal_updates.to_string(),
        result.dual_updates.to_string(),
    ];
    let unique = ev_uniqueness(&inst, &result.x, &result.lambda);
    write("report.csv", &report_header(), &[report_row(head, &report, unique)])?;
    if !result.converged {
        return Err(Failure::Solver(Error::NoConvergence(format!(
            "{} stopped after {} iterations without meeting tol = {}",
            cfg.algorithm.name(),
            result.iterations,
            cfg.solver.tol
        ))));
    }
    Ok(RunOutcome { result, report })
}

/// Reads an `agent,component,value` file.
pub fn read_equilibrium(path: &Path, m: usize, n: usize) -> Result<StrategyProfile> {
    let name = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut x = vec![f64::NAN; m * n];
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let err = |msg: String| Error::Parse {
            file: name.clone(),
            line: k + 2,
            msg,
        };
        if rec.len() != 3 {
            return Err(err("expected agent,component,value".into()));
        }
        let i: usize = rec[0].parse().map_err(|_| err(format!("bad agent '{}'", &rec[0])))?;
        let t: usize = rec[1].parse().map_err(|_| err(format!("bad component '{}'", &rec[1])))?;
        let v: f64 = rec[2].parse().map_err(|_| err(format!("bad value '{}'", &rec[2])))?;
        if i >= m || t >= n {
            return Err(err(format!("entry ({i}, {t}) outside {m} x {n}")));
        }
        x[i * n + t] = v;
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::Parse {
            file: name,
            line: 1,
            msg: format!("missing entries for a {m} x {n} profile"),
        });
    }
    StrategyProfile::new(x, m, n)
}

/// Reads a `constraint,lambda` file.
pub fn read_duals(path: &Path, rows: usize) -> Result<Vec<f64>> {
    let name = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut lambda = vec![0.0; rows];
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let err = |msg: String| Error::Parse {
            file: name.clone(),
            line: k + 2,
            msg,
        };
        let r: usize = rec
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("bad constraint index".into()))?;
        let v: f64 = rec
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("bad multiplier".into()))?;
        if r >= rows {
            return Err(err(format!("constraint {r} outside {rows}")));
        }
        lambda[r] = v;
    }
    Ok(lambda)
}

/// Verifies a stored equilibrium of the configured game and writes report.csv.
pub fn verify_file(cfg: &ExperimentConfig, equilibrium: &Path, duals: Option<&Path>) -> Outcome<VerificationReport> {
    let m = setup(cfg.single_m())?;
    let inst = setup(build_instance(cfg, m, cfg.seed))?;
    let (gm, gn) = (inst.game.m(), inst.game.n());
    let x = setup(read_equilibrium(equilibrium, gm, gn))?;
    let rows = inst.game.coupling().rows();
    let sibling = equilibrium.with_file_name("duals.csv");
    let lambda = match duals {
        Some(p) => setup(read_duals(p, rows))?,
        None if sibling.exists() => setup(read_duals(&sibling, rows))?,
        None => vec![0.0; rows],
    };
    let report = solver(verify(
        &inst.game,
        cfg.flavor,
        &x,
        &lambda,
        cfg.verify_samples,
        cfg.seed,
        feas_tol(cfg),
    ))?;
    ensure_dir(&cfg.output_dir)?;
    let head = vec![
        "verify".to_string(),
        gm.to_string(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
    ];
    let unique = ev_uniqueness(&inst, &x, &lambda);
    solver(write_csv_atomic(
        &cfg.output_dir.join("report.csv"),
        &report_header(),
        &[report_row(head, &report, unique)],
    ))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub m: usize,
    pub converged: bool,
    pub nash_iterations: usize,
    pub wardrop_iterations: usize,
    pub wardrop_algorithm: Option<Algorithm>,
    pub dist_x: Option<f64>,
    pub dist_sigma: Option<f64>,
    pub strategy_bound: Option<f64>,
    pub sigma_bound: Option<f64>,
    pub strategy_bound_specialized: Option<f64>,
    pub sigma_bound_specialized: Option<f64>,
    pub epsilon_wardrop: Option<f64>,
    pub eps_bound: Option<f64>,
    pub eps_bound_specialized: Option<f64>,
    pub error: Option<String>,
}

pub const SWEEP_COLUMNS: [&str; 16] = [
    "M",
    "converged",
    "nash_iterations",
    "wardrop_iterations",
    "wardrop_algorithm",
    "dist_x",
    "dist_sigma",
    "strategy_bound",
    "sigma_bound",
    "strategy_bound_specialized",
    "sigma_bound_specialized",
    "epsilon_wardrop",
    "eps_bound",
    "eps_bound_specialized",
    "inv_sqrt_m",
    "error",
];

impl SweepRow {
    fn failed(m: usize, e: &Error) -> Self {
        Self {
            m,
            converged: false,
            nash_iterations: 0,
            wardrop_iterations: 0,
            wardrop_algorithm: None,
            dist_x: None,
            dist_sigma: None,
            strategy_bound: None,
            sigma_bound: None,
            strategy_bound_specialized: None,
            sigma_bound_specialized: None,
            epsilon_wardrop: None,
            eps_bound: None,
            eps_bound_specialized: None,
            error: Some(e.to_string()),
        }
    }

    pub fn csv_row(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        vec![
            self.m.to_string(),
            self.converged.to_string(),
            self.nash_iterations.to_string(),
            self.wardrop_iterations.to_string(),
            self.wardrop_algorithm.map(|a| a.name().to_string()).unwrap_or_default(),
            opt(self.dist_x),
            opt(self.dist_sigma),
            opt(self.strategy_bound),
            opt(self.sigma_bound),
            opt(self.strategy_bound_specialized),
            opt(self.sigma_bound_specialized),
            opt(self.epsilon_wardrop),
            opt(self.eps_bound),
            opt(self.eps_bound_specialized),
            fmt_num(1.0 / (self.m as f64).sqrt()),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

/// Wardrop solver for a game: the projection algorithm when the Wardrop
/// operator is strongly monotone, extragradient otherwise.
pub fn wardrop_algorithm(game: &AggregativeGame, cfg: &SolverConfig) -> Result<Algorithm> {
    let (c, _) = operator_constants(game, Flavor::Wardrop, cfg)?;
    Ok(if c.alpha > 0.0 {
        Algorithm::ApaWardrop
    } else {
        Algorithm::Extragradient
    })
}

fn sweep_one(inst: &Instance, cfg: &SolverConfig) -> Result<SweepRow> {
    let game = &inst.game;
    let m = game.m();
    let nash = solve_traced(game, Algorithm::ApaNash, Flavor::Nash, cfg, &mut Vec::new())?;
    let walg = wardrop_algorithm(game, cfg)?;
    let ward = solve_traced(game, walg, Flavor::Wardrop, cfg, &mut Vec::new())?;
    let c = estimate_constants(game)?;
    let db = distance_bounds(&c, m).ok();
    let eb = epsilon_bound(&c, m);
    let eps = epsilon_nash(game, &ward.x)?;
    Ok(SweepRow {
        m,
        converged: nash.converged && ward.converged,
        nash_iterations: nash.iterations,
        wardrop_iterations: ward.iterations,
        wardrop_algorithm: Some(walg),
        dist_x: Some(dist2(nash.x.entries(), ward.x.entries())),
        dist_sigma: Some(dist2(&nash.aggregate(), &ward.aggregate())),
        strategy_bound: db.map(|d| d.strategy_bound),
        sigma_bound: db.map(|d| d.sigma_bound),
        strategy_bound_specialized: db.and_then(|d| d.strategy_specialized),
        sigma_bound_specialized: db.and_then(|d| d.sigma_specialized),
        epsilon_wardrop: Some(eps.epsilon),
        eps_bound: Some(eb.generic),
        eps_bound_specialized: eb.specialized,
        error: None,
    })
}

/// Nash/Wardrop distances and bounds for every M; failures become rows.
pub fn sweep_m_rows(cfg: &ExperimentConfig) -> Outcome<Vec<SweepRow>> {
    let instances = setup(sweep_instances(cfg, cfg.seed))?;
    Ok(cfg
        .m
        .iter()
        .zip(instances)
        .map(|(&m, inst)| match inst.and_then(|i| sweep_one(&i, &cfg.solver)) {
            Ok(row) => row,
            Err(e) => SweepRow::failed(m, &e),
        })
        .collect())
}

pub fn sweep_m(cfg: &ExperimentConfig) -> Outcome<Vec<SweepRow>> {
    if cfg.m.is_empty() {
        return Err(Failure::Setup(Error::Config("sweep-m needs experiment.m".into())));
    }
    let rows = sweep_m_rows(cfg)?;
    ensure_dir(&cfg.output_dir)?;
    let table: Vec<Vec<String>> = rows.iter().map(|r| r.csv_row()).collect();
    solver(write_csv_atomic(&cfg.output_dir.join("distances.csv"), &SWEEP_COLUMNS, &table))?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub m: usize,
    pub algorithm: Algorithm,
    pub repetitions: usize,
    pub primal_mean: f64,
    pub primal_std: f64,
    pub dual_mean: f64,
    pub dual_std: f64,
    pub converged: usize,
}

pub const COMPARE_COLUMNS: [&str; 8] = [
    "M",
    "algorithm",
    "repetitions",
    "primal_updates_mean",
    "primal_updates_std",
    "dual_updates_mean",
    "dual_updates_std",
    "converged",
];

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Update counts of each compared algorithm over `repetitions` seeds.
pub fn compare_rows(cfg: &ExperimentConfig) -> Outcome<Vec<CompareRow>> {
    let ms: Vec<Option<usize>> = if cfg.m.is_empty() {
        vec![None]
    } else {
        cfg.m.iter().map(|&m| Some(m)).collect()
    };
    let mut rows = Vec::new();
    for m in ms {
        let instances = (0..cfg.repetitions as u64)
            .map(|r| build_instance(cfg, m, cfg.seed + r))
            .collect::<Result<Vec<_>>>();
        let instances = setup(instances)?;
        for &alg in &cfg.compare {
            let mut primal = Vec::new();
            let mut dual = Vec::new();
            let mut converged = 0;
            for inst in &instances {
                let r = solver(solve_traced(&inst.game, alg, alg.flavor(), &cfg.solver, &mut Vec::new()))?;
                primal.push(r.primal_updates as f64);
                dual.push(r.dual_updates as f64);
                converged += r.converged as usize;
            }
            let (pm, ps) = mean_std(&primal);
            let (dm, ds) = mean_std(&dual);
            rows.push(CompareRow {
                m: instances[0].game.m(),
                algorithm: alg,
                repetitions: instances.len(),
                primal_mean: pm,
                primal_std: ps,
                dual_mean: dm,
                dual_std: ds,
                converged,
            });
        }
    }
    Ok(rows)
}

pub fn compare(cfg: &ExperimentConfig) -> Outcome<Vec<CompareRow>> {
    let rows = compare_rows(cfg)?;
    ensure_dir(&cfg.output_dir)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.m.to_string(),
                r.algorithm.name().to_string(),
                r.repetitions.to_string(),
                fmt_num(r.primal_mean),
                fmt_num(r.primal_std),
                fmt_num(r.dual_mean),
                fmt_num(r.dual_std),
                r.converged.to_string(),
            ]
        })
        .collect();
    solver(write_csv_atomic(&cfg.output_dir.join("iterations.csv"), &COMPARE_COLUMNS, &table))?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_of_single_value_is_exact() {
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }

    #[test]
    fn equilibrium_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let x = StrategyProfile::new(vec![0.25, 1.0, -2.5, 3.0e-7], 2, 2).unwrap();
        let p = dir.path().join("equilibrium.csv");
        write_csv_atomic(&p, &EQUILIBRIUM_COLUMNS, &equilibrium_rows(&x)).unwrap();
        let back = read_equilibrium(&p, 2, 2).unwrap();
        assert_eq!(back, x);
        assert!(read_equilibrium(&p, 3, 2).is_err());
    }

    #[test]
    fn custom_game_json() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.json");
        std::fs::write(
            &p,
            r#"{"m": 2, "n": 1, "q": [[1.0]], "c": [[0.5]], "offsets": [[-2.0], [-2.0]],
                "lo": [[0.0], [0.0]], "hi": [[2.0], [2.0]], "cap": [0.5]}"#,
        )
        .unwrap();
        let g = load_custom_game(&p).unwrap();
        assert_eq!((g.m(), g.n(), g.coupling().rows()), (2, 1, 1));
        std::fs::write(&p, r#"{"m": 2}"#).unwrap();
        assert!(matches!(load_custom_game(&p), Err(Error::Config(_))));
    }
}
