//! Criticality search over the multiplication factor: steady-state detection
//! from a trained predictor and three root-finding strategies (grid, binary,
//! quadratic fit) with an early-stopping rule for candidate training runs.

use std::ops::ControlFlow;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::autodiff::{eval_with_input_derivs, EvalPoint};
use crate::error::{Error, Result};
use crate::loss::{LossWeights, ResidualCoeffs};
use crate::network::{Network, NetworkConfig};
use crate::optimize::{train_single, TrainConfig, TrainResult};
use crate::physics::{InitialConditionId, ProblemP1Spec, SeriesSolution};
use crate::sampling::sample_p1;

/// Root-finding strategy for the criticality search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMethod {
    /// Partition the interval into `partitions` parts and recurse on the
    /// sign-change subinterval.
    Grid,
    /// Grid search with two partitions.
    Binary,
    /// Least-squares quadratic through the sampled (k, phi_t) pairs.
    Quadfit,
}

impl SearchMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            SearchMethod::Grid => "grid",
            SearchMethod::Binary => "binary",
            SearchMethod::Quadfit => "quadfit",
        }
    }

    pub fn from_tag(tag: &str) -> Option<SearchMethod> {
        match tag {
            "grid" => Some(SearchMethod::Grid),
            "binary" => Some(SearchMethod::Binary),
            "quadfit" => Some(SearchMethod::Quadfit),
            _ => None,
        }
    }
}

/// Settings for a criticality search.
#[derive(Debug, Clone, Serialize)]
pub struct SearchConfig {
    pub k_lo: f64,
    pub k_hi: f64,
    /// Subintervals per grid round (also: quadfit trains `partitions + 1`
    /// networks). Two partitions make the grid a binary search.
    pub partitions: usize,
    /// Stop once the bracket is narrower than this.
    pub tol: f64,
    pub method: SearchMethod,
    /// Early-stop ratio threshold for candidate training runs.
    pub lambda: f64,
    /// Epochs between steady-state checks during candidate training.
    pub check_period: usize,
}

impl Default for SearchConfig {
    fn default() -> SearchConfig {
        SearchConfig {
            k_lo: 1.0001,
            k_hi: 1.0041,
            partitions: 2,
            tol: 1e-4,
            method: SearchMethod::Binary,
            lambda: 0.01,
            check_period: 200,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_lo < self.k_hi) {
            return Err(Error::InvalidConfig(format!(
                "search interval empty: [{}, {}]",
                self.k_lo, self.k_hi
            )));
        }
        if self.partitions < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 partitions, got {}",
                self.partitions
            )));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "early-stop lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Time behaviour of a trained flux predictor at the domain center.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SteadyStateMetric {
    /// Mean of the time derivative at the center over the last five time
    /// samples (positive means the flux is still growing: supercritical).
    pub phi_t: f64,
    /// Flux change at the center over the final time spacing.
    pub delta_phi: f64,
}

/// Anything that predicts a flux value and its time derivative at a spatial
/// point and time. Implemented by trained networks (last input axis is time)
/// and by the analytical series solution.
pub trait TimePredictor {
    fn value(&self, x: &[f64], t: f64) -> Result<f64>;
    fn time_derivative(&self, x: &[f64], t: f64) -> Result<f64>;
}

impl TimePredictor for Network {
    fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        let mut p = x.to_vec();
        p.push(t);
        self.forward(&p)
    }

    fn time_derivative(&self, x: &[f64], t: f64) -> Result<f64> {
        let mut p = x.to_vec();
        p.push(t);
        let bundle = eval_with_input_derivs(self, &EvalPoint::new(p))?;
        Ok(bundle.grad_input[x.len()])
    }
}

impl TimePredictor for SeriesSolution {
    fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(self.eval(x[0], t))
    }

    fn time_derivative(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(self.eval_with_derivs(x[0], t).grad_input[1])
    }
}

/// Evaluate the steady-state metric of a predictor at the spatial point
/// `center`: the mean time derivative over five samples spaced `t_end / 100`
/// backwards from `t_end`, and the flux change over the final spacing.
pub fn steady_state_metric(
    pred: &dyn TimePredictor,
    center: &[f64],
    t_end: f64,
) -> Result<SteadyStateMetric> {
    let delta = t_end / 100.0;
    let mut sum = 0.0;
    for i in 0..5 {
        sum += pred.time_derivative(center, t_end - i as f64 * delta)?;
    }
    let phi_t = sum / 5.0;
    let delta_phi = pred.value(center, t_end)? - pred.value(center, t_end - delta)?;
    if !phi_t.is_finite() || !delta_phi.is_finite() {
        return Err(Error::Divergence { context: "steady-state metric".into() });
    }
    Ok(SteadyStateMetric { phi_t, delta_phi })
}

/// One evaluated search candidate.
#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub k: f64,
    pub phi_t: f64,
    pub delta_phi: f64,
    /// Training epochs spent on this candidate.
    pub epochs: usize,
    /// Wall time spent on this candidate, in seconds.
    pub wall_time: f64,
}

/// Outcome of a criticality search.
#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub k_star: f64,
    pub method: SearchMethod,
    /// Bracket-refinement rounds (quadfit counts its fit as one round plus
    /// any fallback refinement rounds).
    pub iterations: usize,
    /// All evaluated candidates, ordered by k.
    pub candidates: Vec<Candidate>,
}

impl SearchResult {
    /// JSON report: the candidate table plus the located k.
    pub fn report_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("search result serializes")
    }

    /// CSV of the per-candidate table.
    pub fn candidates_csv(&self) -> String {
        let mut out = String::from("k,phi_t,delta_phi,epochs,wall_time\n");
        for c in &self.candidates {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                c.k, c.phi_t, c.delta_phi, c.epochs, c.wall_time
            ));
        }
        out
    }
}

/// A candidate evaluator: trains (or analytically evaluates) a predictor at
/// the given multiplication factor and reports its steady-state behaviour.
pub type Trainer<'a> = dyn FnMut(f64) -> Result<Candidate> + 'a;

/// Memoizing wrapper so repeated k values (shared bracket endpoints across
/// rounds) train only once.
struct Cache<'a, 'b> {
    trainer: &'a mut Trainer<'b>,
    seen: Vec<Candidate>,
}

impl<'a, 'b> Cache<'a, 'b> {
    fn new(trainer: &'a mut Trainer<'b>) -> Cache<'a, 'b> {
        Cache { trainer, seen: Vec::new() }
    }

    fn eval(&mut self, k: f64) -> Result<Candidate> {
        if let Some(c) = self.seen.iter().find(|c| c.k == k) {
            return Ok(c.clone());
        }
        let c = (self.trainer)(k)?;
        self.seen.push(c.clone());
        Ok(c)
    }

    fn into_sorted(mut self) -> Vec<Candidate> {
        self.seen.sort_by(|a, b| a.k.total_cmp(&b.k));
        self.seen
    }
}

/// Run the configured search method.
pub fn search(cfg: &SearchConfig, trainer: &mut Trainer) -> Result<SearchResult> {
    match cfg.method {
        SearchMethod::Grid => grid_search(cfg, trainer),
        SearchMethod::Binary => {
            let cfg = SearchConfig { partitions: 2, ..cfg.clone() };
            let mut result = grid_search(&cfg, trainer)?;
            result.method = SearchMethod::Binary;
            Ok(result)
        }
        SearchMethod::Quadfit => quadfit_search(cfg, trainer),
    }
}

/// Shrink a verified sign-change bracket by repeated `n`-way partitioning
/// until it is narrower than `tol`. Returns the bracket midpoint and the
/// number of refinement rounds.
fn grid_refine(
    cache: &mut Cache,
    mut lo: f64,
    mut hi: f64,
    mut f_lo: f64,
    mut f_hi: f64,
    n: usize,
    tol: f64,
) -> Result<(f64, usize)> {
    let mut iterations = 0usize;
    while hi - lo > tol {
        iterations += 1;
        if f_lo == 0.0 {
            return Ok((lo, iterations));
        }
        let step = (hi - lo) / n as f64;
        let mut prev_k = lo;
        let mut prev_f = f_lo;
        let mut found = None;
        for i in 1..=n {
            let (k, f) = if i == n {
                (hi, f_hi)
            } else {
                let k = lo + step * i as f64;
                (k, cache.eval(k)?.phi_t)
            };
            if f == 0.0 {
                return Ok((k, iterations));
            }
            if prev_f * f < 0.0 {
                found = Some((prev_k, k, prev_f, f));
                break;
            }
            prev_k = k;
            prev_f = f;
        }
        match found {
            Some((a, b, fa, fb)) => {
                lo = a;
                hi = b;
                f_lo = fa;
                f_hi = fb;
            }
            // The endpoint signs differ, so a sign change always exists
            // among the subintervals; reaching here means non-finite data.
            None => return Err(Error::NoBracket { lo, hi }),
        }
    }
    Ok((0.5 * (lo + hi), iterations))
}

/// Grid search: verify a phi_t sign change over the interval, then refine the
/// bracket by `partitions`-way subdivision. With two partitions this is a
/// binary search.
pub fn grid_search(cfg: &SearchConfig, trainer: &mut Trainer) -> Result<SearchResult> {
    cfg.validate()?;
    let mut cache = Cache::new(trainer);
    let c_lo = cache.eval(cfg.k_lo)?;
    let c_hi = cache.eval(cfg.k_hi)?;
    if c_lo.phi_t * c_hi.phi_t > 0.0 {
        return Err(Error::NoBracket { lo: cfg.k_lo, hi: cfg.k_hi });
    }
    let (k_star, iterations) = grid_refine(
        &mut cache,
        cfg.k_lo,
        cfg.k_hi,
        c_lo.phi_t,
        c_hi.phi_t,
        cfg.partitions,
        cfg.tol,
    )?;
    Ok(SearchResult {
        k_star,
        method: SearchMethod::Grid,
        iterations,
        candidates: cache.into_sorted(),
    })
}

/// Least-squares quadratic a·u² + b·u + c over normalized abscissae
/// u ∈ [-1, 1]; returns (a, b, c).
fn fit_quadratic(us: &[f64], fs: &[f64]) -> (f64, f64, f64) {
    let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
    let (mut t0, mut t1, mut t2) = (0.0, 0.0, 0.0);
    let m = us.len() as f64;
    for (&u, &f) in us.iter().zip(fs) {
        let u2 = u * u;
        s1 += u;
        s2 += u2;
        s3 += u2 * u;
        s4 += u2 * u2;
        t0 += f;
        t1 += u * f;
        t2 += u2 * f;
    }
    // Solve the 3x3 normal equations by Gaussian elimination.
    let mut mat = [[s4, s3, s2, t2], [s3, s2, s1, t1], [s2, s1, m, t0]];
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| mat[i][col].abs().total_cmp(&mat[j][col].abs()))
            .unwrap();
        mat.swap(col, pivot);
        for row in col + 1..3 {
            let factor = mat[row][col] / mat[col][col];
            for j in col..4 {
                mat[row][j] -= factor * mat[col][j];
            }
        }
    }
    let c = mat[2][3] / mat[2][2];
    let b = (mat[1][3] - mat[1][2] * c) / mat[1][1];
    let a = (mat[0][3] - mat[0][2] * c - mat[0][1] * b) / mat[0][0];
    (a, b, c)
}

/// Quadratic-fit search: evaluate `partitions + 1` equally spaced candidates,
/// fit a quadratic to the (k, phi_t) pairs and return the in-interval root
/// nearest the observed sign change. Falls back to grid refinement of the
/// sign-change subinterval when the fit has no real in-interval root.
pub fn quadfit_search(cfg: &SearchConfig, trainer: &mut Trainer) -> Result<SearchResult> {
    cfg.validate()?;
    let mut cache = Cache::new(trainer);
    let n = cfg.partitions;
    let mid = 0.5 * (cfg.k_lo + cfg.k_hi);
    let half = 0.5 * (cfg.k_hi - cfg.k_lo);
    let mut ks = Vec::with_capacity(n + 1);
    let mut fs = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let k = if i == n {
            cfg.k_hi
        } else {
            cfg.k_lo + (cfg.k_hi - cfg.k_lo) * i as f64 / n as f64
        };
        ks.push(k);
        fs.push(cache.eval(k)?.phi_t);
    }
    let us: Vec<f64> = ks.iter().map(|k| (k - mid) / half).collect();
    let (a, b, c) = fit_quadratic(&us, &fs);

    let scale = fs.iter().fold(0.0f64, |m, f| m.max(f.abs()));
    if a.abs() <= 1e-14 * scale.max(1e-300) || scale == 0.0 {
        return Err(Error::DegenerateFit);
    }

    // Anchor: midpoint of the first observed sign-change subinterval.
    let change = (0..n).find(|&i| fs[i] * fs[i + 1] <= 0.0 && (fs[i] != 0.0 || fs[i + 1] != 0.0));
    let anchor = change.map(|i| 0.5 * (ks[i] + ks[i + 1])).unwrap_or(mid);

    let disc = b * b - 4.0 * a * c;
    let mut root = None;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        let mut candidates = vec![q / a];
        if q != 0.0 {
            candidates.push(c / q);
        }
        root = candidates
            .into_iter()
            .map(|u| mid + half * u)
            .filter(|k| (cfg.k_lo..=cfg.k_hi).contains(k))
            .min_by(|x, y| (x - anchor).abs().total_cmp(&(y - anchor).abs()));
    }

    if let Some(k_star) = root {
        return Ok(SearchResult {
            k_star,
            method: SearchMethod::Quadfit,
            iterations: 1,
            candidates: cache.into_sorted(),
        });
    }

    // No usable root: refine the sign-change subinterval by grid search.
    let i = change.ok_or(Error::NoBracket { lo: cfg.k_lo, hi: cfg.k_hi })?;
    let (k_star, rounds) =
        grid_refine(&mut cache, ks[i], ks[i + 1], fs[i], fs[i + 1], n.max(2), cfg.tol)?;
    Ok(SearchResult {
        k_star,
        method: SearchMethod::Quadfit,
        iterations: 1 + rounds,
        candidates: cache.into_sorted(),
    })
}

/// True when the latest three recorded phi_t values indicate convergence:
/// the last change is smaller than `lambda` times the previous change (a
/// vanishing previous change also counts as converged).
pub fn early_stop_check(history: &[f64], lambda: f64) -> bool {
    let n = history.len();
    if n < 3 {
        return false;
    }
    let d_prev = history[n - 2] - history[n - 3];
    let d_last = history[n - 1] - history[n - 2];
    if d_prev.abs() < 1e-14 {
        return true;
    }
    (d_last / d_prev).abs() < lambda
}

/// Accumulates phi_t observations during training and signals when the
/// early-stop ratio criterion fires.
#[derive(Debug, Clone)]
pub struct EarlyStopMonitor {
    lambda: f64,
    history: Vec<f64>,
}

impl EarlyStopMonitor {
    pub fn new(lambda: f64) -> EarlyStopMonitor {
        EarlyStopMonitor { lambda, history: Vec::new() }
    }

    /// Record an observation; returns true when training should stop.
    pub fn push(&mut self, phi_t: f64) -> bool {
        self.history.push(phi_t);
        early_stop_check(&self.history, self.lambda)
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }
}

/// Recipe for training one slab-problem candidate network at a given k.
#[derive(Debug, Clone)]
pub struct P1TrainerConfig {
    pub net: NetworkConfig,
    pub train: TrainConfig,
    pub weights: LossWeights,
    pub n_pde: usize,
    pub n_initial: usize,
    pub n_boundary: usize,
    pub ic: InitialConditionId,
    /// Seed for collocation sampling and refinement.
    pub seed: u64,
    /// Early-stop ratio threshold; `None` trains to the epoch budget.
    pub early_stop: Option<f64>,
}

impl Default for P1TrainerConfig {
    fn default() -> P1TrainerConfig {
        P1TrainerConfig {
            net: NetworkConfig {
                input_dim: 2,
                hidden_width: 26,
                depth: 10,
                skip_distance: 2,
                init_std: 0.2,
                seed: 7,
            },
            train: TrainConfig::default(),
            weights: LossWeights::default(),
            n_pde: 3000,
            n_initial: 1000,
            n_boundary: 1000,
            ic: InitialConditionId::Phi1,
            seed: 7,
            early_stop: None,
        }
    }
}

/// Train one candidate network for the slab problem at multiplication factor
/// `k_inf` and measure its steady-state behaviour at the slab center.
pub fn train_p1_candidate(
    cfg: &P1TrainerConfig,
    k_inf: f64,
) -> Result<(Network, Candidate, TrainResult)> {
    let start = Instant::now();
    let spec = ProblemP1Spec::benchmark(cfg.ic, k_inf);
    let (lo, hi) = spec.domain();
    let mut net = Network::init_gaussian(&cfg.net)?;
    net.set_input_box(&lo, &hi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut samples = sample_p1(&spec, cfg.n_pde, cfg.n_initial, cfg.n_boundary, &mut rng);
    let residual = ResidualCoeffs::p1(&spec);
    let mut monitor = cfg.early_stop.map(EarlyStopMonitor::new);
    let t_end = spec.t_end;
    let result = train_single(
        &mut net,
        &mut samples,
        &residual,
        cfg.weights,
        &cfg.train,
        &mut rng,
        |event| {
            if let Some(mon) = monitor.as_mut() {
                if let Ok(m) = steady_state_metric(event.net, &[0.0], t_end) {
                    if mon.push(m.phi_t) {
                        return ControlFlow::Break(());
                    }
                }
            }
            ControlFlow::Continue(())
        },
    )?;
    let metric = steady_state_metric(&net, &[0.0], t_end)?;
    let candidate = Candidate {
        k: k_inf,
        phi_t: metric.phi_t,
        delta_phi: metric.delta_phi,
        epochs: result.epochs_run,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((net, candidate, result))
}

/// Convenience trainer closure over [`train_p1_candidate`], dropping the
/// trained network.
pub fn p1_trainer(cfg: P1TrainerConfig) -> impl FnMut(f64) -> Result<Candidate> {
    move |k| train_p1_candidate(&cfg, k).map(|(_, c, _)| c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mock_trainer<F: Fn(f64) -> f64>(f: F) -> impl FnMut(f64) -> Result<Candidate> {
        move |k| {
            Ok(Candidate { k, phi_t: f(k), delta_phi: f(k) * 0.01, epochs: 0, wall_time: 0.0 })
        }
    }

    #[test]
    fn time_independent_network_has_exactly_zero_metric() {
        let cfg = NetworkConfig {
            input_dim: 2,
            hidden_width: 8,
            depth: 4,
            skip_distance: 2,
            init_std: 0.1,
            seed: 1,
        };
        // All-zero weights give a constant-in-time output.
        let net = Network::zeros(&cfg).unwrap();
        let m = steady_state_metric(&net, &[0.0], 0.015).unwrap();
        assert_eq!(m.phi_t, 0.0);
        assert_eq!(m.delta_phi, 0.0);
    }

    #[test]
    fn analytic_predictor_signs_bracket_the_critical_point() {
        let sub = SeriesSolution::project(&ProblemP1Spec::benchmark(
            InitialConditionId::Phi1,
            1.0001,
        ));
        let sup = SeriesSolution::project(&ProblemP1Spec::benchmark(
            InitialConditionId::Phi1,
            1.0041,
        ));
        let m_sub = steady_state_metric(&sub, &[0.0], 0.015).unwrap();
        let m_sup = steady_state_metric(&sup, &[0.0], 0.015).unwrap();
        assert!(m_sub.phi_t < 0.0, "subcritical phi_t = {}", m_sub.phi_t);
        assert!(m_sup.phi_t > 0.0, "supercritical phi_t = {}", m_sup.phi_t);
        assert!(m_sub.delta_phi < 0.0);
        assert!(m_sup.delta_phi > 0.0);
    }

    #[test]
    fn grid_search_recovers_a_synthetic_root() {
        let k_star = 1.00208;
        for n in [2usize, 5] {
            let mut trainer = mock_trainer(move |k| (300.0 * (k - k_star)).exp() - 1.0);
            let cfg = SearchConfig {
                partitions: n,
                tol: 1e-6,
                method: SearchMethod::Grid,
                ..SearchConfig::default()
            };
            let result = grid_search(&cfg, &mut trainer).unwrap();
            assert!(
                (result.k_star - k_star).abs() <= 1e-6,
                "n = {n}: {} vs {k_star}",
                result.k_star
            );
            assert!(result.iterations >= 1);
            // Candidates are sorted by k.
            for w in result.candidates.windows(2) {
                assert!(w[0].k < w[1].k);
            }
        }
    }

    #[test]
    fn grid_search_without_sign_change_is_a_bracket_error() {
        let mut trainer = mock_trainer(|k| k * 0.0 + 1.0);
        let cfg = SearchConfig::default();
        match grid_search(&cfg, &mut trainer) {
            Err(Error::NoBracket { .. }) => {}
            other => panic!("expected bracket error, got {other:?}"),
        }
    }

    #[test]
    fn binary_is_grid_with_two_partitions() {
        let k_star = 1.0025;
        let run = |method, partitions| {
            let mut trainer = mock_trainer(move |k| k - k_star);
            let cfg = SearchConfig {
                partitions,
                tol: 1e-7,
                method,
                ..SearchConfig::default()
            };
            search(&cfg, &mut trainer).unwrap()
        };
        let binary = run(SearchMethod::Binary, 6);
        let grid2 = run(SearchMethod::Grid, 2);
        assert_eq!(binary.k_star, grid2.k_star);
        assert_eq!(binary.iterations, grid2.iterations);
        assert_eq!(binary.method, SearchMethod::Binary);
    }

    #[test]
    fn quadfit_recovers_an_exact_quadratic_root() {
        let mut trainer = mock_trainer(|k| (k - 1.002) * (k - 0.9));
        let cfg = SearchConfig {
            partitions: 2,
            method: SearchMethod::Quadfit,
            ..SearchConfig::default()
        };
        let result = quadfit_search(&cfg, &mut trainer).unwrap();
        assert!(
            (result.k_star - 1.002).abs() <= 1e-12,
            "k_star = {}",
            result.k_star
        );
        assert_eq!(result.candidates.len(), 3);
        assert_eq!(result.iterations, 1);
    }

    #[test]
    fn quadfit_rejects_collinear_data() {
        let mut trainer = mock_trainer(|k| 3.0 * (k - 1.5));
        let cfg = SearchConfig {
            k_lo: 1.0,
            k_hi: 2.0,
            partitions: 4,
            method: SearchMethod::Quadfit,
            ..SearchConfig::default()
        };
        match quadfit_search(&cfg, &mut trainer) {
            Err(Error::DegenerateFit) => {}
            other => panic!("expected degenerate fit, got {other:?}"),
        }
    }

    #[test]
    fn quadfit_falls_back_to_grid_refinement_without_a_real_root() {
        // Node values on a 4-partition grid whose least-squares quadratic
        // stays positive (no real root) while the data itself dips negative
        // between the second and third nodes.
        let cfg = SearchConfig {
            k_lo: 1.0,
            k_hi: 2.0,
            partitions: 4,
            tol: 1e-6,
            method: SearchMethod::Quadfit,
            ..SearchConfig::default()
        };
        let nodes = [1.0, 1.25, 1.5, 1.75, 2.0];
        let values = [1.1, 0.35, -0.0005, 0.35, 1.1];
        let f = move |k: f64| -> f64 {
            // Piecewise-linear interpolation of the table.
            let i = nodes.iter().rposition(|&n| n <= k).unwrap().min(3);
            let t = (k - nodes[i]) / (nodes[i + 1] - nodes[i]);
            values[i] + t * (values[i + 1] - values[i])
        };
        let mut trainer = mock_trainer(f);
        let result = quadfit_search(&cfg, &mut trainer).unwrap();
        assert!(result.iterations > 1, "fallback should refine");
        // The located root changes sign within tolerance.
        assert!(
            f(result.k_star - cfg.tol) * f(result.k_star + cfg.tol) <= 0.0,
            "k_star = {} does not bracket the root",
            result.k_star
        );
    }

    #[test]
    fn quadfit_beats_binary_on_an_equal_network_budget() {
        let k_star = 1.0020763;
        let f = move |k: f64| (600.0 * (k - k_star)).exp() - 1.0;
        // Three evaluations each: binary stops after one bisection round,
        // quadfit fits its three nodes.
        let mut trainer_b = mock_trainer(f);
        let width = 1.0041 - 1.0001;
        let cfg_b = SearchConfig {
            partitions: 2,
            tol: width / 2.0 + 1e-12,
            method: SearchMethod::Binary,
            ..SearchConfig::default()
        };
        let binary = search(&cfg_b, &mut trainer_b).unwrap();
        assert_eq!(binary.candidates.len(), 3);

        let mut trainer_q = mock_trainer(f);
        let cfg_q = SearchConfig {
            partitions: 2,
            method: SearchMethod::Quadfit,
            ..SearchConfig::default()
        };
        let quad = quadfit_search(&cfg_q, &mut trainer_q).unwrap();
        assert_eq!(quad.candidates.len(), 3);

        let err_b = (binary.k_star - k_star).abs();
        let err_q = (quad.k_star - k_star).abs();
        assert!(err_q < err_b, "quadfit {err_q} vs binary {err_b}");
    }

    #[test]
    fn early_stop_examples() {
        assert!(early_stop_check(&[1.0, 0.5, 0.5005], 0.01));
        assert!(!early_stop_check(&[1.0, 0.5, 0.4], 0.01));
        assert!(!early_stop_check(&[1.0, 0.5], 0.01));
        // Vanishing previous change counts as converged.
        assert!(early_stop_check(&[1.0, 1.0, 1.4], 0.01));
        let mut mon = EarlyStopMonitor::new(0.01);
        assert!(!mon.push(1.0));
        assert!(!mon.push(0.5));
        assert!(mon.push(0.5005));
        assert_eq!(mon.history().len(), 3);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            SearchConfig { k_lo: 1.01, k_hi: 1.0, ..SearchConfig::default() },
            SearchConfig { partitions: 1, ..SearchConfig::default() },
            SearchConfig { lambda: 0.0, ..SearchConfig::default() },
            SearchConfig { tol: 0.0, ..SearchConfig::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?} should be invalid");
        }
        assert!(SearchConfig::default().validate().is_ok());
    }

    #[test]
    fn search_is_deterministic_and_reports_serialize() {
        let run = || {
            let mut trainer = mock_trainer(|k| (400.0 * (k - 1.002)).exp() - 1.0);
            let cfg = SearchConfig {
                partitions: 3,
                tol: 1e-5,
                method: SearchMethod::Grid,
                ..SearchConfig::default()
            };
            grid_search(&cfg, &mut trainer).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.report_json(), b.report_json());
        assert_eq!(a.candidates_csv(), b.candidates_csv());
        let json: serde_json::Value = serde_json::from_str(&a.report_json()).unwrap();
        assert_eq!(json["method"], "grid");
        assert!(json["candidates"].as_array().unwrap().len() >= 3);
        assert!(a.candidates_csv().starts_with("k,phi_t,delta_phi,epochs,wall_time\n"));
    }

    #[test]
    fn analytic_trainer_locates_the_critical_point() {
        // Use the series solution as an exact "trainer" over k.
        let mut trainer = |k: f64| -> Result<Candidate> {
            let spec = ProblemP1Spec::benchmark(InitialConditionId::Phi1, k);
            let series = SeriesSolution::project(&spec);
            let m = steady_state_metric(&series, &[0.0], spec.t_end)?;
            Ok(Candidate { k, phi_t: m.phi_t, delta_phi: m.delta_phi, epochs: 0, wall_time: 0.0 })
        };
        let cfg = SearchConfig { tol: 1e-6, ..SearchConfig::default() };
        let result = search(&cfg, &mut trainer).unwrap();
        // The sign change sits slightly below the asymptotic critical k
        // because decaying higher modes still contribute to the time
        // derivative at the end of the window.
        let k_star = ProblemP1Spec::benchmark(InitialConditionId::Phi1, 1.0).critical_k_inf();
        assert!(
            (result.k_star - k_star).abs() < 1e-4,
            "k_star = {} vs {k_star}",
            result.k_star
        );
    }
}
