//! Flat key=value experiment configuration with section prefixes.
//!
//! Lines are `section.key = value`; `#` starts a comment. Unknown keys are
//! rejected so typos fail fast instead of silently using defaults.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use crate::criticality::{SearchConfig, SearchMethod};
use crate::error::{Error, Result};
use crate::loss::LossWeights;
use crate::network::NetworkConfig;
use crate::optimize::{LbfgsConfig, TrainConfig};
use crate::physics::InitialConditionId;
use crate::sampling::RarConfig;

/// Parsed key=value pairs with consumption tracking.
#[derive(Debug, Clone, Default)]
pub struct KvConfig {
    entries: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<KvConfig> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                what: "config".into(),
                detail: format!("line {}: expected key = value, got '{line}'", lineno + 1),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if entries.insert(key.clone(), value).is_some() {
                return Err(Error::Parse {
                    what: "config".into(),
                    detail: format!("duplicate key '{key}'"),
                });
            }
        }
        Ok(KvConfig { entries, used: RefCell::new(BTreeSet::new()) })
    }

    pub fn from_file(path: &Path) -> Result<KvConfig> {
        let text = std::fs::read_to_string(path)?;
        KvConfig::parse(&text)
    }

    /// Insert or replace a key (used for CLI overrides and sweeps).
    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.entries.get(key).map(|s| s.as_str())
    }

    fn parse_with<T, F: FnOnce(&str) -> Option<T>>(
        &self,
        key: &str,
        default: T,
        f: F,
    ) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => f(s).ok_or_else(|| Error::Parse {
                what: "config".into(),
                detail: format!("invalid value '{s}' for key '{key}'"),
            }),
        }
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64> {
        self.parse_with(key, default, |s| s.parse().ok())
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        self.parse_with(key, default, |s| s.parse().ok())
    }

    pub fn get_u64(&self, key: &str, default: u64) -> Result<u64> {
        self.parse_with(key, default, |s| s.parse().ok())
    }

    pub fn get_bool(&self, key: &str, default: bool) -> Result<bool> {
        self.parse_with(key, default, |s| match s {
            "true" | "on" | "1" => Some(true),
            "false" | "off" | "0" => Some(false),
            _ => None,
        })
    }

    /// Error if any key was never read by a getter.
    pub fn reject_unknown(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<&String> =
            self.entries.keys().filter(|k| !used.contains(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "unknown config key(s): {}",
                unknown.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
            )))
        }
    }
}

/// Benchmark problem selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemId {
    /// 1D slab, time-dependent one-group.
    P1,
    /// 2D square, time-dependent one-group.
    P2,
    /// Two-region two-group steady state at fixed k_eff.
    P3,
    /// Quarter-core two-group eigenvalue problem.
    P4,
}

impl ProblemId {
    pub fn tag(&self) -> &'static str {
        match self {
            ProblemId::P1 => "p1",
            ProblemId::P2 => "p2",
            ProblemId::P3 => "p3",
            ProblemId::P4 => "p4",
        }
    }

    pub fn from_tag(s: &str) -> Option<ProblemId> {
        match s {
            "p1" => Some(ProblemId::P1),
            "p2" => Some(ProblemId::P2),
            "p3" => Some(ProblemId::P3),
            "p4" => Some(ProblemId::P4),
            _ => None,
        }
    }

    pub fn is_dual(&self) -> bool {
        matches!(self, ProblemId::P3 | ProblemId::P4)
    }
}

/// Everything a run needs, resolved from config text plus CLI overrides.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: ProblemId,
    pub seed: u64,
    pub out: PathBuf,
    pub k_inf: f64,
    pub k_eff: f64,
    pub ic: InitialConditionId,
    /// Path to a material map file; `None` uses the built-in map.
    pub map_path: Option<PathBuf>,
    pub net: NetworkConfig,
    pub n_pde: usize,
    pub n_initial: usize,
    pub n_boundary: usize,
    pub n_anchors: usize,
    pub weights: LossWeights,
    pub train: TrainConfig,
    /// Save a checkpoint every this many epochs (0: only at the end).
    pub checkpoint_every: usize,
    pub search: SearchConfig,
    pub search_early_stop: bool,
    /// Oracle grid resolution: spatial points per axis.
    pub oracle_nx: usize,
    /// Oracle snapshot count over the time window.
    pub oracle_times: usize,
    /// Eigensolver mesh refinement (cells per map cell per axis).
    pub oracle_refine: usize,
    /// Evaluation grid (metrics) resolution per axis / snapshots.
    pub eval_nx: usize,
    pub eval_times: usize,
    pub sweep_param: Option<String>,
    pub sweep_values: Vec<String>,
}

impl ExperimentConfig {
    /// Resolve a full experiment description from parsed key=value pairs.
    /// Every recognized key is listed here; anything else is an error.
    pub fn from_kv(kv: &KvConfig) -> Result<ExperimentConfig> {
        let problem = match kv.get("problem") {
            None => ProblemId::P1,
            Some(tag) => ProblemId::from_tag(tag).ok_or_else(|| {
                Error::InvalidConfig(format!("unknown problem '{tag}'"))
            })?,
        };
        let seed = kv.get_u64("seed", 7)?;
        let out = PathBuf::from(kv.get("out").unwrap_or("runs/out"));

        let default_k_inf = match problem {
            ProblemId::P1 => 1.0041,
            _ => 1.2,
        };
        let k_inf = kv.get_f64("problem.k_inf", default_k_inf)?;
        let k_eff = kv.get_f64("problem.k_eff", 0.9693)?;
        let ic = match kv.get("problem.ic") {
            None => {
                if problem == ProblemId::P2 {
                    InitialConditionId::GaussianP2
                } else {
                    InitialConditionId::Phi1
                }
            }
            Some("phi1") => InitialConditionId::Phi1,
            Some("phi2") => InitialConditionId::Phi2,
            Some("gaussian") => InitialConditionId::GaussianP2,
            Some(other) => {
                return Err(Error::InvalidConfig(format!(
                    "unknown initial condition '{other}'"
                )))
            }
        };
        let map_path = kv.get("problem.map").map(PathBuf::from);

        let input_dim = match problem {
            ProblemId::P1 => 2,
            ProblemId::P2 => 3,
            ProblemId::P3 | ProblemId::P4 => 2,
        };
        let net = NetworkConfig {
            input_dim,
            hidden_width: kv.get_usize("net.width", 26)?,
            depth: kv.get_usize("net.depth", 10)?,
            skip_distance: kv.get_usize("net.skip", 2)?,
            init_std: kv.get_f64("net.init_std", 0.2)?,
            seed: kv.get_u64("net.seed", seed)?,
        };
        net.validate()?;

        let n_pde = kv.get_usize("sample.pde", 3000)?;
        let n_initial = kv.get_usize("sample.initial", 1000)?;
        let n_boundary = kv.get_usize("sample.boundary", 1000)?;
        let n_anchors = kv.get_usize("sample.anchors", 200)?;
        let weights = LossWeights { w: kv.get_f64("loss.w", 100.0)? };

        let rar_enabled = kv.get_bool("rar.enabled", !problem.is_dual())?;
        let rar = RarConfig {
            alpha: kv.get_usize("rar.alpha", 2)?,
            m: kv.get_usize("rar.m", 500)?,
            cap: kv.get_usize("rar.cap", 5000)?,
        };
        let train = TrainConfig {
            max_epochs: kv.get_usize("train.epochs", 3000)?,
            lbfgs: LbfgsConfig::default(),
            rar: rar_enabled.then_some(rar),
            rar_every: kv.get_usize("rar.every", 1000)?,
            check_every: kv.get_usize("train.check_every", 200)?,
            loss_tol: kv.get_f64("train.loss_tol", 0.0)?,
            lambda_every: kv.get_usize("train.lambda_every", 50)?,
            lambda_warmup: kv.get_usize("train.lambda_warmup", 0)?,
        };
        let checkpoint_every = kv.get_usize("train.checkpoint_every", 0)?;

        let method_tag = kv.get("search.method").unwrap_or("binary").to_string();
        let method = SearchMethod::from_tag(&method_tag).ok_or_else(|| {
            Error::InvalidConfig(format!("unknown search method '{method_tag}'"))
        })?;
        let search = SearchConfig {
            k_lo: kv.get_f64("search.k_lo", 1.0001)?,
            k_hi: kv.get_f64("search.k_hi", 1.0041)?,
            partitions: kv.get_usize("search.partitions", 2)?,
            tol: kv.get_f64("search.tol", 1e-4)?,
            method,
            lambda: kv.get_f64("search.lambda", 0.01)?,
            check_period: kv.get_usize("search.check_every", 200)?,
        };
        let search_early_stop = kv.get_bool("search.early_stop", false)?;

        let oracle_nx = kv.get_usize("oracle.nx", 100)?;
        let oracle_times = kv.get_usize("oracle.times", 100)?;
        let oracle_refine = kv.get_usize("oracle.refine", 2)?;
        let eval_nx = kv.get_usize("eval.nx", 100)?;
        let eval_times = kv.get_usize("eval.times", 100)?;

        let sweep_param = kv.get("sweep.param").map(str::to_string);
        let sweep_values: Vec<String> = match kv.get("sweep.values") {
            None => Vec::new(),
            Some(list) => list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect(),
        };

        kv.reject_unknown()?;

        let cfg = ExperimentConfig {
            problem,
            seed,
            out,
            k_inf,
            k_eff,
            ic,
            map_path,
            net,
            n_pde,
            n_initial,
            n_boundary,
            n_anchors,
            weights,
            train,
            checkpoint_every,
            search,
            search_early_stop,
            oracle_nx,
            oracle_times,
            oracle_refine,
            eval_nx,
            eval_times,
            sweep_param,
            sweep_values,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.net.validate()?;
        self.search.validate()?;
        if self.train.max_epochs == 0 {
            return Err(Error::InvalidConfig("train.epochs must be positive".into()));
        }
        if self.oracle_nx < 2 || self.eval_nx < 2 {
            return Err(Error::InvalidConfig("grid resolutions must be >= 2".into()));
        }
        Ok(())
    }

    /// Fully resolved flat key=value echo, written into every run directory
    /// so any result can be reproduced from the directory alone.
    pub fn echo(&self) -> String {
        let rar = self.train.rar.as_ref();
        let mut s = String::new();
        let mut line = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        line("problem", self.problem.tag().into());
        line("seed", self.seed.to_string());
        line("out", self.out.display().to_string());
        line("problem.k_inf", self.k_inf.to_string());
        line("problem.k_eff", self.k_eff.to_string());
        line(
            "problem.ic",
            match self.ic {
                InitialConditionId::Phi1 => "phi1",
                InitialConditionId::Phi2 => "phi2",
                InitialConditionId::GaussianP2 => "gaussian",
            }
            .into(),
        );
        if let Some(p) = &self.map_path {
            line("problem.map", p.display().to_string());
        }
        line("net.width", self.net.hidden_width.to_string());
        line("net.depth", self.net.depth.to_string());
        line("net.skip", self.net.skip_distance.to_string());
        line("net.init_std", self.net.init_std.to_string());
        line("net.seed", self.net.seed.to_string());
        line("sample.pde", self.n_pde.to_string());
        line("sample.initial", self.n_initial.to_string());
        line("sample.boundary", self.n_boundary.to_string());
        line("sample.anchors", self.n_anchors.to_string());
        line("loss.w", self.weights.w.to_string());
        line("rar.enabled", rar.is_some().to_string());
        if let Some(r) = rar {
            line("rar.alpha", r.alpha.to_string());
            line("rar.m", r.m.to_string());
            line("rar.cap", r.cap.to_string());
            line("rar.every", self.train.rar_every.to_string());
        }
        line("train.epochs", self.train.max_epochs.to_string());
        line("train.check_every", self.train.check_every.to_string());
        line("train.loss_tol", self.train.loss_tol.to_string());
        line("train.checkpoint_every", self.checkpoint_every.to_string());
        line("search.k_lo", self.search.k_lo.to_string());
        line("search.k_hi", self.search.k_hi.to_string());
        line("search.partitions", self.search.partitions.to_string());
        line("search.tol", self.search.tol.to_string());
        line("search.method", self.search.method.tag().into());
        line("search.lambda", self.search.lambda.to_string());
        line("search.check_every", self.search.check_period.to_string());
        line("search.early_stop", self.search_early_stop.to_string());
        line("oracle.nx", self.oracle_nx.to_string());
        line("oracle.times", self.oracle_times.to_string());
        line("oracle.refine", self.oracle_refine.to_string());
        line("eval.nx", self.eval_nx.to_string());
        line("eval.times", self.eval_times.to_string());
        if let Some(p) = &self.sweep_param {
            line("sweep.param", p.clone());
            line("sweep.values", self.sweep_values.join(","));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_for_every_problem() {
        for tag in ["p1", "p2", "p3", "p4"] {
            let kv = KvConfig::parse(&format!("problem = {tag}")).unwrap();
            let cfg = ExperimentConfig::from_kv(&kv).unwrap();
            assert_eq!(cfg.problem.tag(), tag);
            assert_eq!(cfg.seed, 7);
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let kv = KvConfig::parse("problem = p1\nnet.depht = 10").unwrap();
        match ExperimentConfig::from_kv(&kv) {
            Err(Error::InvalidConfig(msg)) => assert!(msg.contains("net.depht"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_overrides_work() {
        let mut kv = KvConfig::parse(
            "# experiment\nproblem = p1  # slab\nnet.depth = 12\nseed = 3\n",
        )
        .unwrap();
        kv.set("seed", "9");
        let cfg = ExperimentConfig::from_kv(&kv).unwrap();
        assert_eq!(cfg.net.depth, 12);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn echo_round_trips_through_the_parser() {
        let kv = KvConfig::parse(
            "problem = p2\nnet.depth = 8\nrar.m = 200\nsearch.method = quadfit\n",
        )
        .unwrap();
        let cfg = ExperimentConfig::from_kv(&kv).unwrap();
        let echoed = ExperimentConfig::from_kv(&KvConfig::parse(&cfg.echo()).unwrap()).unwrap();
        assert_eq!(echoed.net.depth, 8);
        assert_eq!(echoed.search.method.tag(), "quadfit");
        assert_eq!(echoed.echo(), cfg.echo());
    }

    #[test]
    fn malformed_lines_are_parse_errors() {
        assert!(KvConfig::parse("no equals sign").is_err());
        assert!(KvConfig::parse("a = 1\na = 2").is_err());
        let kv = KvConfig::parse("problem = p9").unwrap();
        assert!(ExperimentConfig::from_kv(&kv).is_err());
    }
}
