//! Experiment configuration: flat TOML sections.
//!
//! ```toml
//! [experiment]
//! kind = "ev"              # ev | traffic | quadratic | custom-file
//! m = [50, 100, 200]       # one value for `run`, a list for `sweep-m`
//! algorithm = "apa-nash"
//! tau = "auto"             # or a number
//! tol = 1e-4
//! max_iter = 200000
//! seed = 7
//! output_dir = "out"
//!
//! [ev]
//! cap = 0.55
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::algorithms::{Algorithm, SolverConfig, StepSize};
use crate::applications::ev::{DEFAULT_CAP, DEFAULT_KAPPA, DEFAULT_PRICE_SCALE};
use crate::applications::traffic::{BBox, DEFAULT_F, DEFAULT_H, OLDENBURG_BBOX};
use crate::error::{Error, Result};
use crate::operators::Flavor;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: RawExperiment,
    ev: Option<EvSection>,
    quadratic: Option<QuadraticSection>,
    traffic: Option<TrafficSection>,
    custom: Option<CustomSection>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawTau {
    Number(f64),
    Word(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    kind: String,
    m: Option<OneOrMany>,
    algorithm: Option<String>,
    flavor: Option<String>,
    tau: Option<RawTau>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    inner_tol: Option<f64>,
    inner_max_iter: Option<usize>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    repetitions: Option<usize>,
    population: Option<String>,
    verify_samples: Option<usize>,
    compare: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvSection {
    pub demand_file: Option<PathBuf>,
    #[serde(default = "default_cap")]
    pub cap: f64,
    #[serde(default = "default_price_scale")]
    pub price_scale: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}

fn default_cap() -> f64 {
    DEFAULT_CAP
}
fn default_price_scale() -> f64 {
    DEFAULT_PRICE_SCALE
}
fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

impl Default for EvSection {
    fn default() -> Self {
        Self {
            demand_file: None,
            cap: DEFAULT_CAP,
            price_scale: DEFAULT_PRICE_SCALE,
            kappa: DEFAULT_KAPPA,
        }
    }
}

/// Q = q I and C = c I on the EV constraint sets.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSection {
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_c")]
    pub c: f64,
}

fn default_q() -> f64 {
    0.1
}
fn default_c() -> f64 {
    1.0
}

impl Default for QuadraticSection {
    fn default() -> Self {
        Self { q: 0.1, c: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSection {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    /// [x0, x1, y0, y1], or "oldenburg".
    #[serde(default)]
    pub bbox: Option<toml::Value>,
    #[serde(default = "default_f")]
    pub f: f64,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_gamma_min")]
    pub gamma_min: f64,
    #[serde(default = "default_gamma_max")]
    pub gamma_max: f64,
    /// Cap on every sigma_e.
    #[serde(default = "default_edge_cap")]
    pub cap: f64,
    /// Directed edges with a tighter cap `capped_value`.
    #[serde(default)]
    pub capped_edges: Vec<usize>,
    pub capped_value: Option<f64>,
    /// Origin-destination vertex indices, one pair per agent.
    pub od_pairs: Option<Vec<[usize; 2]>>,
}

fn default_f() -> f64 {
    DEFAULT_F
}
fn default_h() -> f64 {
    DEFAULT_H
}
fn default_gamma_min() -> f64 {
    0.5
}
fn default_gamma_max() -> f64 {
    3.5
}
fn default_edge_cap() -> f64 {
    1.0
}

impl TrafficSection {
    pub fn bbox(&self) -> Result<Option<BBox>> {
        match &self.bbox {
            None => Ok(None),
            Some(toml::Value::String(s)) if s == "oldenburg" => Ok(Some(OLDENBURG_BBOX)),
            Some(toml::Value::Array(v)) if v.len() == 4 => {
                let f: Vec<f64> = v
                    .iter()
                    .map(|x| x.as_float().or_else(|| x.as_integer().map(|i| i as f64)))
                    .collect::<Option<_>>()
                    .ok_or_else(|| Error::Config("bbox entries must be numbers".into()))?;
                Ok(Some(BBox {
                    x0: f[0],
                    x1: f[1],
                    y0: f[2],
                    y1: f[3],
                }))
            }
            Some(_) => Err(Error::Config("bbox must be [x0, x1, y0, y1] or \"oldenburg\"".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSection {
    pub file: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GameKind {
    Ev(EvSection),
    Quadratic(QuadraticSection, EvSection),
    Traffic(TrafficSection),
    Custom(PathBuf),
}

impl GameKind {
    pub fn name(&self) -> &'static str {
        match self {
            GameKind::Ev(_) => "ev",
            GameKind::Quadratic(..) => "quadratic",
            GameKind::Traffic(_) => "traffic",
            GameKind::Custom(_) => "custom-file",
        }
    }
}

/// How populations of different sizes relate in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Population {
    /// The population of the first M, copied to reach every larger M.
    Replicated,
    /// A fresh draw for every M.
    Independent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: GameKind,
    pub m: Vec<usize>,
    pub algorithm: Algorithm,
    pub flavor: Flavor,
    pub solver: SolverConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub repetitions: usize,
    pub population: Population,
    pub verify_samples: usize,
    pub compare: Vec<Algorithm>,
}

fn parse_algorithm(s: &str) -> Result<Algorithm> {
    Algorithm::parse(s).ok_or_else(|| Error::Config(format!("unknown algorithm '{s}'")))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses a config; relative file paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let ex = raw.experiment;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        let ev = raw.ev.clone().unwrap_or_default();
        let ev = EvSection {
            demand_file: ev.demand_file.map(resolve),
            ..ev
        };
        let kind = match ex.kind.as_str() {
            "ev" => GameKind::Ev(ev),
            "quadratic" => GameKind::Quadratic(raw.quadratic.unwrap_or_default(), ev),
            "traffic" => {
                let t = raw
                    .traffic
                    .ok_or_else(|| Error::Config("kind = traffic needs a [traffic] section".into()))?;
                GameKind::Traffic(TrafficSection {
                    nodes: resolve(t.nodes.clone()),
                    edges: resolve(t.edges.clone()),
                    ..t
                })
            }
            "custom-file" => {
                let c = raw
                    .custom
                    .ok_or_else(|| Error::Config("kind = custom-file needs a [custom] section".into()))?;
                GameKind::Custom(resolve(c.file))
            }
            other => return Err(Error::Config(format!("unknown kind '{other}'"))),
        };
        let m = match ex.m {
            Some(OneOrMany::One(v)) => vec![v],
            Some(OneOrMany::Many(v)) => v,
            None if matches!(kind, GameKind::Custom(_)) => Vec::new(),
            None => return Err(Error::Config("experiment.m is required".into())),
        };
        let algorithm = parse_algorithm(ex.algorithm.as_deref().unwrap_or("apa-nash"))?;
        let flavor = match ex.flavor.as_deref() {
            None => algorithm.flavor(),
            Some("nash") => Flavor::Nash,
            Some("wardrop") => Flavor::Wardrop,
            Some(other) => return Err(Error::Config(format!("unknown flavor '{other}'"))),
        };
        let tau = match ex.tau {
            None => StepSize::Auto,
            Some(RawTau::Word(w)) if w == "auto" => StepSize::Auto,
            Some(RawTau::Word(w)) => return Err(Error::Config(format!("tau must be a number or \"auto\", got '{w}'"))),
            Some(RawTau::Number(t)) => StepSize::Fixed(t),
        };
        let defaults = SolverConfig::default();
        let seed = ex
            .seed
            .ok_or_else(|| Error::Config("experiment.seed is required".into()))?;
        let solver = SolverConfig {
            tau,
            tol: ex.tol.unwrap_or(defaults.tol),
            max_iter: ex.max_iter.unwrap_or(defaults.max_iter),
            inner_tol: ex.inner_tol.unwrap_or(defaults.inner_tol),
            inner_max_iter: ex.inner_max_iter.unwrap_or(defaults.inner_max_iter),
            seed,
            ..defaults
        };
        let population = match ex.population.as_deref().unwrap_or("replicated") {
            "replicated" => Population::Replicated,
            "independent" => Population::Independent,
            other => return Err(Error::Config(format!("unknown population '{other}'"))),
        };
        let compare = match ex.compare {
            Some(v) => v.iter().map(|s| parse_algorithm(s)).collect::<Result<Vec<_>>>()?,
            None => vec![Algorithm::TwoLevel, Algorithm::ApaWardrop],
        };
        let cfg = Self {
            kind,
            m,
            algorithm,
            flavor,
            solver,
            seed,
            output_dir: resolve(ex.output_dir.unwrap_or_else(|| PathBuf::from("out"))),
            repetitions: ex.repetitions.unwrap_or(1),
            population,
            verify_samples: ex.verify_samples.unwrap_or(200),
            compare,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.solver
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.m.iter().any(|&m| m == 0) {
            return Err(Error::Config("population sizes must be positive".into()));
        }
        if self.m.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("the M list must be strictly increasing".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be positive".into()));
        }
        if self.algorithm == Algorithm::ApaNash && self.flavor != Flavor::Nash
            || matches!(self.algorithm, Algorithm::ApaWardrop | Algorithm::TwoLevel)
                && self.flavor != Flavor::Wardrop
        {
            return Err(Error::Config(format!(
                "algorithm {} does not compute {} equilibria",
                self.algorithm.name(),
                self.flavor
            )));
        }
        match &self.kind {
            GameKind::Ev(ev) | GameKind::Quadratic(_, ev) => {
                if !(ev.cap >= 0.0) || !(ev.price_scale > 0.0) || !(ev.kappa > 0.0) {
                    return Err(Error::Config("ev: cap >= 0, price_scale > 0 and kappa > 0 required".into()));
                }
            }
            GameKind::Traffic(t) => {
                if !(t.f > 0.0) || !(t.h > 0.0) {
                    return Err(Error::Config("traffic: f and h must be positive".into()));
                }
                if !(t.gamma_min > 0.0) || t.gamma_max < t.gamma_min {
                    return Err(Error::Config("traffic: need 0 < gamma_min <= gamma_max".into()));
                }
                if !(0.0..=1.0).contains(&t.cap) || t.capped_value.is_some_and(|v| !(0.0..=1.0).contains(&v)) {
                    return Err(Error::Config("traffic: caps must lie in [0, 1]".into()));
                }
                if !t.capped_edges.is_empty() && t.capped_value.is_none() {
                    return Err(Error::Config("traffic: capped_edges needs capped_value".into()));
                }
                t.bbox()?;
            }
            GameKind::Custom(_) => {
                if self.m.len() > 1 {
                    return Err(Error::Config("custom-file games have a fixed population".into()));
                }
            }
        }
        Ok(())
    }

    /// The single population size of a `run`.
    pub fn single_m(&self) -> Result<Option<usize>> {
        match self.m.as_slice() {
            [] => Ok(None),
            [m] => Ok(Some(*m)),
            _ => Err(Error::Config("run takes a single M; use sweep-m for lists".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(text, Path::new("/cfg"))
    }

    #[test]
    fn minimal_ev_config() {
        let c = parse("[experiment]\nkind = \"ev\"\nm = 100\nseed = 3\n").unwrap();
        assert_eq!(c.m, vec![100]);
        assert_eq!(c.algorithm, Algorithm::ApaNash);
        assert_eq!(c.solver.tau, StepSize::Auto);
        assert_eq!(c.output_dir, PathBuf::from("/cfg/out"));
        assert_eq!(c.kind, GameKind::Ev(EvSection::default()));
    }

    #[test]
    fn sweep_list_and_numeric_tau() {
        let c = parse("[experiment]\nkind = \"quadratic\"\nm = [50, 100]\nseed = 1\ntau = 0.05\n").unwrap();
        assert_eq!(c.m, vec![50, 100]);
        assert_eq!(c.solver.tau, StepSize::Fixed(0.05));
        assert!(c.single_m().is_err());
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "[experiment]\nkind = \"ev\"\nm = 10\nseed = 1\ntol = -1.0\n",
            "[experiment]\nkind = \"ev\"\nm = [100, 50]\nseed = 1\n",
            "[experiment]\nkind = \"ev\"\nm = 10\n",
            "[experiment]\nkind = \"boats\"\nm = 10\nseed = 1\n",
            "[experiment]\nkind = \"ev\"\nm = 10\nseed = 1\nalgorithm = \"two-level\"\nflavor = \"nash\"\n",
            "[experiment]\nkind = \"ev\"\nm = 10\nseed = 1\nbogus = 2\n",
            "[experiment]\nkind = \"traffic\"\nm = 10\nseed = 1\n",
        ] {
            assert!(matches!(parse(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn traffic_bbox_forms() {
        let c = parse(
            "[experiment]\nkind = \"traffic\"\nm = 10\nseed = 1\n[traffic]\nnodes = \"n.csv\"\nedges = \"e.csv\"\nbbox = \"oldenburg\"\n",
        )
        .unwrap();
        let GameKind::Traffic(t) = c.kind else { panic!() };
        assert_eq!(t.bbox().unwrap(), Some(OLDENBURG_BBOX));
        assert_eq!(t.nodes, PathBuf::from("/cfg/n.csv"));
    }
}
