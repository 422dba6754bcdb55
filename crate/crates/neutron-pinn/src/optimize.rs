//! Full-batch L-BFGS with a strong Wolfe line search, plus the training
//! loop that interleaves optimization with residual-adaptive refinement.

use crate::error::{Error, Result};
use crate::loss::{
    DualBreakdown, DualSampleSet, DualTwoGroupObjective, LambdaMode, LossBreakdown, LossWeights,
    PinnObjective, ResidualCoeffs,
};
use crate::network::Network;
use crate::physics::MaterialMap;
use crate::sampling::{rar_step, rar_step_filtered, RarConfig, SampleSet};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;
use std::ops::ControlFlow;

/// Gradient-based objective over a flat parameter vector.
pub type GradFn<'a> = dyn FnMut(&[f64]) -> Result<(f64, Vec<f64>)> + 'a;

/// L-BFGS settings.
#[derive(Debug, Clone, Copy)]
pub struct LbfgsConfig {
    /// Stored curvature pairs.
    pub history: usize,
    /// Gradient norm below which the run counts as converged.
    pub grad_tol: f64,
    /// Armijo constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Function evaluations allowed per line search.
    pub max_ls_evals: usize,
}

impl Default for LbfgsConfig {
    fn default() -> LbfgsConfig {
        LbfgsConfig { history: 20, grad_tol: 1e-9, c1: 1e-4, c2: 0.9, max_ls_evals: 40 }
    }
}

/// Outcome of a single L-BFGS iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    /// Moved to a new point with the given loss and gradient norm.
    Stepped { f: f64, grad_norm: f64 },
    /// Gradient norm is below tolerance; no move was made.
    Converged,
    /// No acceptable step exists along the current direction.
    LineSearchFailed,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// L-BFGS state that survives objective changes (the curvature memory is
/// dropped whenever the objective does change, since old pairs describe a
/// different function).
pub struct Lbfgs {
    cfg: LbfgsConfig,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    s_hist: VecDeque<Vec<f64>>,
    y_hist: VecDeque<Vec<f64>>,
    rho: VecDeque<f64>,
    evaluated: bool,
}

impl Lbfgs {
    pub fn new(cfg: LbfgsConfig, x0: Vec<f64>) -> Lbfgs {
        Lbfgs {
            cfg,
            x: x0,
            f: f64::INFINITY,
            g: Vec::new(),
            s_hist: VecDeque::new(),
            y_hist: VecDeque::new(),
            rho: VecDeque::new(),
            evaluated: false,
        }
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn f(&self) -> f64 {
        self.f
    }

    pub fn grad_norm(&self) -> f64 {
        dot(&self.g, &self.g).sqrt()
    }

    /// Re-evaluate at the current point and drop the curvature memory.
    /// Must be called once before stepping and again after every objective
    /// change (e.g. a collocation set refinement).
    pub fn begin_phase(&mut self, obj: &mut GradFn) -> Result<()> {
        let (f, g) = obj(&self.x)?;
        if !f.is_finite() {
            return Err(Error::Divergence { context: "objective at phase start".into() });
        }
        self.f = f;
        self.g = g;
        self.s_hist.clear();
        self.y_hist.clear();
        self.rho.clear();
        self.evaluated = true;
        Ok(())
    }

    /// Two-loop recursion over the stored pairs.
    fn direction(&self) -> Vec<f64> {
        let mut q: Vec<f64> = self.g.iter().map(|v| -v).collect();
        let k = self.s_hist.len();
        let mut alpha = vec![0.0; k];
        for i in (0..k).rev() {
            alpha[i] = self.rho[i] * dot(&self.s_hist[i], &q);
            for (qj, yj) in q.iter_mut().zip(&self.y_hist[i]) {
                *qj -= alpha[i] * yj;
            }
        }
        if k > 0 {
            let y = &self.y_hist[k - 1];
            let gamma = dot(&self.s_hist[k - 1], y) / dot(y, y);
            for qj in q.iter_mut() {
                *qj *= gamma;
            }
        }
        for i in 0..k {
            let beta = self.rho[i] * dot(&self.y_hist[i], &q);
            for (qj, sj) in q.iter_mut().zip(&self.s_hist[i]) {
                *qj += (alpha[i] - beta) * sj;
            }
        }
        q
    }

    pub fn step(&mut self, obj: &mut GradFn) -> Result<StepOutcome> {
        assert!(self.evaluated, "call begin_phase before step");
        if self.grad_norm() <= self.cfg.grad_tol {
            return Ok(StepOutcome::Converged);
        }
        let mut d = self.direction();
        let mut dphi0 = dot(&self.g, &d);
        if dphi0 >= 0.0 {
            // The quasi-Newton direction lost descent; restart from
            // steepest descent.
            d = self.g.iter().map(|v| -v).collect();
            dphi0 = dot(&self.g, &d);
            self.s_hist.clear();
            self.y_hist.clear();
            self.rho.clear();
        }
        let found = strong_wolfe(
            obj,
            &self.x,
            self.f,
            dphi0,
            &d,
            self.cfg.c1,
            self.cfg.c2,
            self.cfg.max_ls_evals,
        )?;
        let (alpha, f_new, g_new) = match found {
            Some(hit) => hit,
            None => {
                // Try once more along steepest descent before giving up.
                let sd: Vec<f64> = self.g.iter().map(|v| -v).collect();
                let dphi_sd = dot(&self.g, &sd);
                match strong_wolfe(
                    obj,
                    &self.x,
                    self.f,
                    dphi_sd,
                    &sd,
                    self.cfg.c1,
                    self.cfg.c2,
                    self.cfg.max_ls_evals,
                )? {
                    Some((a, f, g)) => {
                        self.s_hist.clear();
                        self.y_hist.clear();
                        self.rho.clear();
                        d = sd;
                        (a, f, g)
                    }
                    None => return Ok(StepOutcome::LineSearchFailed),
                }
            }
        };

        let s: Vec<f64> = d.iter().map(|v| alpha * v).collect();
        let y: Vec<f64> = g_new.iter().zip(&self.g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        // Only keep pairs with positive curvature; Armijo-only exits can
        // produce flat or negative ones.
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if self.s_hist.len() == self.cfg.history {
                self.s_hist.pop_front();
                self.y_hist.pop_front();
                self.rho.pop_front();
            }
            self.rho.push_back(1.0 / sy);
            self.s_hist.push_back(s.clone());
            self.y_hist.push_back(y);
        }
        for (xi, si) in self.x.iter_mut().zip(&s) {
            *xi += si;
        }
        self.f = f_new;
        self.g = g_new;
        Ok(StepOutcome::Stepped { f: self.f, grad_norm: self.grad_norm() })
    }
}

/// Strong Wolfe line search (bracket then zoom). Returns the accepted step
/// with its value and gradient, or `None` when no decreasing step exists.
/// A step meeting only the Armijo condition is accepted as a fallback once
/// the zoom interval collapses, which keeps training moving on stiff
/// objectives; the caller guards the curvature pair update separately.
#[allow(clippy::too_many_arguments)]
fn strong_wolfe(
    obj: &mut GradFn,
    x: &[f64],
    phi0: f64,
    dphi0: f64,
    d: &[f64],
    c1: f64,
    c2: f64,
    max_evals: usize,
) -> Result<Option<(f64, f64, Vec<f64>)>> {
    if dphi0 >= 0.0 {
        return Ok(None);
    }
    let mut evals = 0;
    let mut trial = |alpha: f64, evals: &mut usize| -> Result<(f64, f64, Vec<f64>)> {
        *evals += 1;
        let xt: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
        let (f, g) = obj(&xt)?;
        let dphi = dot(&g, d);
        Ok((f, dphi, g))
    };

    let armijo = |alpha: f64, phi: f64| phi <= phi0 + c1 * alpha * dphi0;
    let curvature = |dphi: f64| dphi.abs() <= -c2 * dphi0;

    // Bracketing stage.
    let mut alpha_prev = 0.0;
    let mut phi_prev = phi0;
    let mut alpha = 1.0;
    let mut bracket: Option<(f64, f64, f64, f64, f64)> = None; // lo, phi_lo, dphi_lo, hi, phi_hi
    let mut dphi_lo_at_zero = dphi0;
    while evals < max_evals {
        let (phi, dphi, g) = trial(alpha, &mut evals)?;
        if !phi.is_finite() {
            // Shrink toward zero on overflow.
            alpha *= 0.25;
            if alpha < 1e-20 {
                return Ok(None);
            }
            continue;
        }
        if !armijo(alpha, phi) || phi >= phi_prev {
            bracket = Some((alpha_prev, phi_prev, dphi_lo_at_zero, alpha, phi));
            break;
        }
        if curvature(dphi) {
            return Ok(Some((alpha, phi, g)));
        }
        if dphi >= 0.0 {
            bracket = Some((alpha, phi, dphi, alpha_prev, phi_prev));
            break;
        }
        alpha_prev = alpha;
        phi_prev = phi;
        dphi_lo_at_zero = dphi;
        alpha *= 2.0;
        if alpha > 1e6 {
            return Ok(Some((alpha_prev, phi_prev, g)));
        }
    }
    let (mut lo, mut phi_lo, mut dphi_lo, mut hi, mut phi_hi) = match bracket {
        Some(b) => b,
        None => return Ok(None),
    };

    // Zoom stage with safeguarded quadratic interpolation.
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    while evals < max_evals {
        let width = (hi - lo).abs();
        if width < 1e-16 * (1.0 + lo.abs()) {
            break;
        }
        // Quadratic model through (lo, phi_lo, dphi_lo) and (hi, phi_hi).
        let mut a = {
            let denom = phi_hi - phi_lo - dphi_lo * (hi - lo);
            if denom.abs() > 1e-300 {
                lo - 0.5 * dphi_lo * (hi - lo) * (hi - lo) / denom
            } else {
                0.5 * (lo + hi)
            }
        };
        let (lo_w, hi_w) = if lo < hi { (lo, hi) } else { (hi, lo) };
        if !a.is_finite() || a <= lo_w + 0.1 * width || a >= hi_w - 0.1 * width {
            a = 0.5 * (lo + hi);
        }
        let (phi, dphi, g) = trial(a, &mut evals)?;
        if armijo(a, phi) && phi < phi_lo {
            best = Some((a, phi, g.clone()));
        }
        if !armijo(a, phi) || phi >= phi_lo {
            hi = a;
            phi_hi = phi;
        } else {
            if curvature(dphi) {
                return Ok(Some((a, phi, g)));
            }
            if dphi * (hi - lo) >= 0.0 {
                hi = lo;
                phi_hi = phi_lo;
            }
            lo = a;
            phi_lo = phi;
            dphi_lo = dphi;
        }
    }
    // Armijo-only fallback.
    if let Some(hit) = best {
        return Ok(Some(hit));
    }
    if phi_lo < phi0 && lo > 0.0 {
        let (phi, _, g) = trial(lo, &mut evals)?;
        if phi < phi0 {
            return Ok(Some((lo, phi, g)));
        }
    }
    Ok(None)
}

/// Training loop settings.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub lbfgs: LbfgsConfig,
    /// Residual-adaptive refinement; `None` disables it.
    pub rar: Option<RarConfig>,
    /// Epoch interval between refinement steps.
    pub rar_every: usize,
    /// Epoch interval between callback invocations.
    pub check_every: usize,
    /// Stop once the total loss falls below this value.
    pub loss_tol: f64,
    /// Epoch interval between closed-form eigenvalue-multiplier updates when
    /// the multiplier is trainable.
    pub lambda_every: usize,
    /// Epochs to hold a trainable multiplier at its initial value so the
    /// fluxes can settle onto the anchor data before the first update.
    pub lambda_warmup: usize,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            max_epochs: 3000,
            lbfgs: LbfgsConfig::default(),
            rar: Some(RarConfig::default()),
            rar_every: 1000,
            check_every: 200,
            loss_tol: 0.0,
            lambda_every: 50,
            lambda_warmup: 0,
        }
    }
}

/// Why training stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    GradientTolerance,
    LossTolerance,
    /// Two consecutive failed line searches.
    LineSearchStalled,
    /// The periodic callback requested a stop.
    Callback,
}

/// One row of the training history.
#[derive(Debug, Clone)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: LossBreakdown,
    pub grad_norm: f64,
    pub n_pde: usize,
}

/// Snapshot handed to the periodic callback.
pub struct CheckEvent<'a> {
    pub epoch: usize,
    pub net: &'a Network,
    pub loss: LossBreakdown,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub stop: StopReason,
    pub epochs_run: usize,
    pub final_loss: LossBreakdown,
    pub history: Vec<EpochRecord>,
}

/// Train a single network against a composite PINN loss, refining the
/// collocation set every `rar_every` epochs. The callback fires every
/// `check_every` epochs and may stop the run early.
pub fn train_single(
    net: &mut Network,
    samples: &mut SampleSet,
    residual: &ResidualCoeffs,
    weights: LossWeights,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
    mut callback: impl FnMut(&CheckEvent) -> ControlFlow<()>,
) -> Result<TrainResult> {
    let mut lbfgs = Lbfgs::new(cfg.lbfgs, net.params_flat());
    let mut history = Vec::new();
    let mut last_bd = LossBreakdown::default();
    let mut epoch = 0usize;
    let mut stop = StopReason::MaxEpochs;
    let mut consecutive_failures = 0usize;
    let mut scratch = net.clone();

    'outer: while epoch < cfg.max_epochs {
        // One phase: the collocation set is fixed, so the objective closure
        // can borrow it immutably until the next refinement.
        {
            let objective = PinnObjective {
                samples,
                residual: residual.clone(),
                weights,
                chunk: crate::loss::DEFAULT_CHUNK,
            };
            let bd_cell = std::cell::Cell::new(LossBreakdown::default());
            let mut work = net.clone();
            let mut obj_fn = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
                work.set_params_flat(x)?;
                let (bd, g) = objective.breakdown_and_gradient(&work)?;
                bd_cell.set(bd);
                Ok((bd.total, g.0))
            };
            lbfgs.begin_phase(&mut obj_fn)?;
            let phase_end = if cfg.rar.is_some() {
                cfg.max_epochs.min(epoch + cfg.rar_every - epoch % cfg.rar_every)
            } else {
                cfg.max_epochs
            };
            while epoch < phase_end {
                let outcome = lbfgs.step(&mut obj_fn)?;
                epoch += 1;
                match outcome {
                    StepOutcome::Stepped { f: _, grad_norm } => {
                        consecutive_failures = 0;
                        last_bd = bd_cell.get();
                        history.push(EpochRecord {
                            epoch,
                            loss: last_bd,
                            grad_norm,
                            n_pde: samples.pde.len(),
                        });
                    }
                    StepOutcome::Converged => {
                        stop = StopReason::GradientTolerance;
                        break 'outer;
                    }
                    StepOutcome::LineSearchFailed => {
                        consecutive_failures += 1;
                        if consecutive_failures >= 2 {
                            stop = StopReason::LineSearchStalled;
                            break 'outer;
                        }
                    }
                }
                if last_bd.total <= cfg.loss_tol && cfg.loss_tol > 0.0 {
                    stop = StopReason::LossTolerance;
                    break 'outer;
                }
                if epoch % cfg.check_every == 0 {
                    scratch.set_params_flat(lbfgs.x())?;
                    let event = CheckEvent { epoch, net: &scratch, loss: last_bd };
                    if callback(&event).is_break() {
                        stop = StopReason::Callback;
                        break 'outer;
                    }
                }
            }
        }
        if epoch >= cfg.max_epochs {
            break;
        }
        // Refinement between phases; the curvature memory is rebuilt at the
        // next begin_phase because the loss surface changed.
        if let Some(rar_cfg) = &cfg.rar {
            if samples.pde.len() < rar_cfg.cap {
                net.set_params_flat(lbfgs.x())?;
                let objective = PinnObjective {
                    samples,
                    residual: residual.clone(),
                    weights,
                    chunk: crate::loss::DEFAULT_CHUNK,
                };
                let residuals = objective.residuals(net)?;
                let (lo, hi) = (samples.lo.clone(), samples.hi.clone());
                rar_step(rng, &lo, &hi, &mut samples.pde, &residuals, rar_cfg)?;
            }
        }
    }

    net.set_params_flat(lbfgs.x())?;
    Ok(TrainResult { stop, epochs_run: epoch, final_loss: last_bd, history })
}

/// Format the training history as CSV.
pub fn history_to_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,loss_total,loss_pde,loss_initial,loss_boundary,loss_data,grad_norm,n_pde\n");
    for r in history {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.epoch,
            r.loss.total,
            r.loss.pde,
            r.loss.initial,
            r.loss.boundary,
            r.loss.data,
            r.grad_norm,
            r.n_pde
        ));
    }
    out
}

/// One row of a dual-network training history.
#[derive(Debug, Clone)]
pub struct DualEpochRecord {
    pub epoch: usize,
    pub loss: DualBreakdown,
    pub grad_norm: f64,
    pub n_pde: usize,
    pub lambda: f64,
}

/// Snapshot handed to the periodic callback of a dual training run.
pub struct DualCheckEvent<'a> {
    pub epoch: usize,
    pub net1: &'a Network,
    pub net2: &'a Network,
    pub lambda: f64,
    pub loss: DualBreakdown,
}

#[derive(Debug, Clone)]
pub struct DualTrainResult {
    pub stop: StopReason,
    pub epochs_run: usize,
    pub final_loss: DualBreakdown,
    /// Final eigenvalue multiplier (1/k_eff); equals the fixed value unless
    /// trained.
    pub lambda: f64,
    pub history: Vec<DualEpochRecord>,
}

/// Train two coupled group networks against a shared two-group loss: one
/// optimizer step per epoch over the concatenated parameter vectors. In
/// trainable mode the eigenvalue multiplier is held fixed within an optimizer
/// phase and re-solved exactly every `lambda_every` epochs after an optional
/// warm-up (the residuals are affine in the multiplier, so coordinate descent
/// on it has a closed form that can never increase the PDE term). Refinement
/// adds collocation points only inside the active map region.
#[allow(clippy::too_many_arguments)]
pub fn train_dual(
    net1: &mut Network,
    net2: &mut Network,
    map: &MaterialMap,
    samples: &mut DualSampleSet,
    weights: LossWeights,
    lambda_mode: LambdaMode,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
    mut callback: impl FnMut(&DualCheckEvent) -> ControlFlow<()>,
) -> Result<DualTrainResult> {
    let n1 = net1.param_count();
    let n2 = net2.param_count();
    let trainable = matches!(lambda_mode, LambdaMode::Trainable);
    let mut x0 = net1.params_flat();
    x0.extend(net2.params_flat());
    let mut lambda = match lambda_mode {
        LambdaMode::Fixed(v) => v,
        LambdaMode::Trainable => 1.0,
    };
    let mut lbfgs = Lbfgs::new(cfg.lbfgs, x0);
    let mut history = Vec::new();
    let mut last_bd = DualBreakdown::default();
    let mut epoch = 0usize;
    let mut stop = StopReason::MaxEpochs;
    let mut consecutive_failures = 0usize;
    let mut scratch1 = net1.clone();
    let mut scratch2 = net2.clone();

    'outer: while epoch < cfg.max_epochs {
        {
            let objective = DualTwoGroupObjective {
                map,
                pde: &samples.pde,
                dirichlet: &samples.dirichlet,
                neumann: &samples.neumann,
                data1: &samples.data1,
                data2: &samples.data2,
                weights,
                lambda: LambdaMode::Fixed(lambda),
                chunk: crate::loss::DEFAULT_CHUNK,
            };
            let bd_cell = std::cell::Cell::new(DualBreakdown::default());
            let mut work1 = net1.clone();
            let mut work2 = net2.clone();
            let mut obj_fn = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
                work1.set_params_flat(&x[..n1])?;
                work2.set_params_flat(&x[n1..n1 + n2])?;
                let (bd, dg) = objective.value_and_gradient(&work1, &work2, lambda)?;
                bd_cell.set(bd);
                let mut g = dg.g1;
                g.extend(dg.g2);
                Ok((bd.total, g))
            };
            lbfgs.begin_phase(&mut obj_fn)?;
            let mut phase_end = cfg.max_epochs;
            if cfg.rar.is_some() {
                phase_end = phase_end.min(epoch + cfg.rar_every - epoch % cfg.rar_every);
            }
            if trainable {
                let every = cfg.lambda_every.max(1);
                let next = if epoch < cfg.lambda_warmup {
                    cfg.lambda_warmup
                } else {
                    epoch + every - epoch % every
                };
                phase_end = phase_end.min(next);
            }
            while epoch < phase_end {
                let outcome = lbfgs.step(&mut obj_fn)?;
                epoch += 1;
                match outcome {
                    StepOutcome::Stepped { f: _, grad_norm } => {
                        consecutive_failures = 0;
                        last_bd = bd_cell.get();
                        history.push(DualEpochRecord {
                            epoch,
                            loss: last_bd,
                            grad_norm,
                            n_pde: samples.pde.len(),
                            lambda,
                        });
                    }
                    StepOutcome::Converged => {
                        stop = StopReason::GradientTolerance;
                        break 'outer;
                    }
                    StepOutcome::LineSearchFailed => {
                        consecutive_failures += 1;
                        if consecutive_failures >= 2 {
                            stop = StopReason::LineSearchStalled;
                            break 'outer;
                        }
                    }
                }
                if last_bd.total <= cfg.loss_tol && cfg.loss_tol > 0.0 {
                    stop = StopReason::LossTolerance;
                    break 'outer;
                }
                if epoch % cfg.check_every == 0 {
                    scratch1.set_params_flat(&lbfgs.x()[..n1])?;
                    scratch2.set_params_flat(&lbfgs.x()[n1..n1 + n2])?;
                    let event = DualCheckEvent {
                        epoch,
                        net1: &scratch1,
                        net2: &scratch2,
                        lambda,
                        loss: last_bd,
                    };
                    if callback(&event).is_break() {
                        stop = StopReason::Callback;
                        break 'outer;
                    }
                }
            }
        }
        if epoch >= cfg.max_epochs {
            break;
        }
        net1.set_params_flat(&lbfgs.x()[..n1])?;
        net2.set_params_flat(&lbfgs.x()[n1..n1 + n2])?;
        let objective = DualTwoGroupObjective {
            map,
            pde: &samples.pde,
            dirichlet: &samples.dirichlet,
            neumann: &samples.neumann,
            data1: &samples.data1,
            data2: &samples.data2,
            weights,
            lambda: LambdaMode::Fixed(lambda),
            chunk: crate::loss::DEFAULT_CHUNK,
        };
        if trainable && epoch >= cfg.lambda_warmup {
            if let Some(best) = objective.optimal_lambda(net1, net2)? {
                lambda = best;
            }
        }
        if let Some(rar_cfg) = &cfg.rar {
            if samples.pde.len() < rar_cfg.cap {
                let residuals = objective.residuals(net1, net2, lambda)?;
                let (lo, hi) = (samples.lo.clone(), samples.hi.clone());
                rar_step_filtered(rng, &lo, &hi, &mut samples.pde, &residuals, rar_cfg, |p| {
                    map.id_at(p[0], p[1]).is_some()
                })?;
            }
        }
    }

    net1.set_params_flat(&lbfgs.x()[..n1])?;
    net2.set_params_flat(&lbfgs.x()[n1..n1 + n2])?;
    Ok(DualTrainResult {
        stop,
        epochs_run: epoch,
        final_loss: last_bd,
        lambda,
        history,
    })
}

/// Format a dual training history as CSV.
pub fn dual_history_to_csv(history: &[DualEpochRecord]) -> String {
    let mut out = String::from(
        "epoch,loss_total,loss_pde,loss_boundary,loss_neumann,loss_data,grad_norm,n_pde,lambda\n",
    );
    for r in history {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.epoch,
            r.loss.total,
            r.loss.pde,
            r.loss.boundary,
            r.loss.neumann,
            r.loss.data,
            r.grad_norm,
            r.n_pde,
            r.lambda
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkConfig;
    use crate::physics::{InitialConditionId, ProblemP1Spec};
    use crate::sampling::lhs_sample;
    use rand::SeedableRng;

    fn run_lbfgs(
        obj: &mut GradFn,
        x0: Vec<f64>,
        max_iters: usize,
        grad_tol: f64,
    ) -> (Vec<f64>, f64, usize) {
        let cfg = LbfgsConfig { grad_tol, ..LbfgsConfig::default() };
        let mut opt = Lbfgs::new(cfg, x0);
        opt.begin_phase(obj).unwrap();
        for i in 0..max_iters {
            match opt.step(obj).unwrap() {
                StepOutcome::Converged => return (opt.x().to_vec(), opt.f(), i),
                StepOutcome::LineSearchFailed => panic!("line search failed at iter {i}"),
                StepOutcome::Stepped { .. } => {}
            }
        }
        (opt.x().to_vec(), opt.f(), max_iters)
    }

    #[test]
    fn isotropic_quadratic_converges_within_five_iterations() {
        // f = ||x - c||^2.
        let c = [0.7, -1.3, 2.1, 0.05];
        let mut obj = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let f = x.iter().zip(&c).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum();
            let g = x.iter().zip(&c).map(|(xi, ci)| 2.0 * (xi - ci)).collect();
            Ok((f, g))
        };
        let (x, f, iters) = run_lbfgs(&mut obj, vec![1.0, -2.0, 3.0, -4.0], 20, 1e-10);
        assert!(f < 1e-20, "f = {f}");
        assert!(iters <= 5, "took {iters} iterations");
        for (xi, ci) in x.iter().zip(&c) {
            assert!((xi - ci).abs() < 1e-10);
        }
    }

    #[test]
    fn anisotropic_quadratic_converges() {
        // f = sum_i c_i x_i^2 with spread eigenvalues.
        let c = [1.0, 4.0, 9.0, 0.5];
        let mut obj = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let f = x.iter().zip(&c).map(|(xi, ci)| ci * xi * xi).sum();
            let g = x.iter().zip(&c).map(|(xi, ci)| 2.0 * ci * xi).collect();
            Ok((f, g))
        };
        let (x, f, iters) = run_lbfgs(&mut obj, vec![1.0, -2.0, 3.0, -4.0], 25, 1e-10);
        assert!(f < 1e-18, "f = {f}");
        assert!(iters <= 20, "took {iters} iterations");
        assert!(x.iter().all(|xi| xi.abs() < 1e-9));
    }

    #[test]
    fn rosenbrock_reaches_the_minimum() {
        let mut obj = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            Ok((f, g))
        };
        let (x, f, _) = run_lbfgs(&mut obj, vec![-1.2, 1.0], 200, 1e-10);
        assert!(f < 1e-8, "f = {f}");
        assert!((x[0] - 1.0).abs() < 1e-4 && (x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn zero_gradient_converges_immediately() {
        let mut obj = |x: &[f64]| -> Result<(f64, Vec<f64>)> { Ok((1.0, vec![0.0; x.len()])) };
        let mut opt = Lbfgs::new(LbfgsConfig::default(), vec![0.3, 0.4]);
        opt.begin_phase(&mut obj).unwrap();
        assert_eq!(opt.step(&mut obj).unwrap(), StepOutcome::Converged);
    }

    #[test]
    fn runs_are_deterministic() {
        let make = || {
            let mut obj = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
                let f = (x[0] - 2.0).powi(4) + (x[0] - 2.0 * x[1]).powi(2);
                let g = vec![
                    4.0 * (x[0] - 2.0).powi(3) + 2.0 * (x[0] - 2.0 * x[1]),
                    -4.0 * (x[0] - 2.0 * x[1]),
                ];
                Ok((f, g))
            };
            run_lbfgs(&mut obj, vec![0.0, 3.0], 50, 1e-12)
        };
        let (xa, fa, ia) = make();
        let (xb, fb, ib) = make();
        assert_eq!(xa, xb);
        assert_eq!(fa, fb);
        assert_eq!(ia, ib);
    }

    fn tiny_problem(seed: u64) -> (Network, SampleSet, ResidualCoeffs) {
        let spec = ProblemP1Spec::benchmark(InitialConditionId::Phi1, 1.0041);
        let cfg = NetworkConfig {
            input_dim: 2,
            hidden_width: 10,
            depth: 4,
            skip_distance: 2,
            init_std: 0.3,
            seed,
        };
        let mut net = Network::init_gaussian(&cfg).unwrap();
        let (lo, hi) = spec.domain();
        net.set_input_box(&lo, &hi).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut samples = SampleSet::new(lo.clone(), hi.clone());
        samples.pde = lhs_sample(&mut rng, &lo, &hi, 120);
        for p in lhs_sample(&mut rng, &[lo[0]], &[hi[0]], 40).iter() {
            samples.initial.push(&[p[0], 0.0], spec.initial_flux(p[0]));
        }
        for p in lhs_sample(&mut rng, &[lo[1]], &[hi[1]], 20).iter() {
            samples.boundary.push(&[-0.5, p[0]], 0.0);
            samples.boundary.push(&[0.5, p[0]], 0.0);
        }
        (net, samples, ResidualCoeffs::p1(&spec))
    }

    #[test]
    fn training_decreases_the_loss() {
        let (mut net, mut samples, residual) = tiny_problem(2);
        let obj = PinnObjective::new(&samples, residual.clone());
        let before = obj.breakdown(&net).unwrap().total;
        let cfg = TrainConfig { max_epochs: 150, rar: None, ..TrainConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let result = train_single(
            &mut net,
            &mut samples,
            &residual,
            LossWeights::default(),
            &cfg,
            &mut rng,
            |_| ControlFlow::Continue(()),
        )
        .unwrap();
        assert!(result.final_loss.total < before / 50.0, "{before} -> {}", result.final_loss.total);
        assert!(!result.history.is_empty());
    }

    #[test]
    fn rar_grows_the_collocation_set_on_schedule() {
        let (mut net, mut samples, residual) = tiny_problem(4);
        let cfg = TrainConfig {
            max_epochs: 25,
            rar: Some(RarConfig { alpha: 2, m: 30, cap: 200 }),
            rar_every: 10,
            ..TrainConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let result = train_single(
            &mut net,
            &mut samples,
            &residual,
            LossWeights::default(),
            &cfg,
            &mut rng,
            |_| ControlFlow::Continue(()),
        )
        .unwrap();
        // 120 initial + two refinements of 30, third not reached (caps at
        // epoch 25); epochs 10 and 20 trigger.
        assert_eq!(samples.pde.len(), 180);
        assert_eq!(result.epochs_run, 25);
        let last = result.history.last().unwrap();
        assert_eq!(last.n_pde, 180);
    }

    #[test]
    fn callback_can_stop_training() {
        let (mut net, mut samples, residual) = tiny_problem(6);
        let cfg = TrainConfig { max_epochs: 500, rar: None, check_every: 5, ..TrainConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let result = train_single(
            &mut net,
            &mut samples,
            &residual,
            LossWeights::default(),
            &cfg,
            &mut rng,
            |event| {
                if event.epoch >= 10 {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            },
        )
        .unwrap();
        assert_eq!(result.stop, StopReason::Callback);
        assert_eq!(result.epochs_run, 10);
    }

    #[test]
    fn dual_training_decreases_the_shared_loss() {
        use crate::loss::{sample_two_group, LambdaMode};
        use crate::physics::{MaterialMap, TwoGroupMaterial};
        let mats = [(1u8, TwoGroupMaterial::two_region_core())].into_iter().collect();
        let map = MaterialMap::new(
            4,
            4,
            5.0,
            vec![1; 16],
            [crate::physics::EdgeBc::ZeroFlux; 4],
            mats,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut samples = sample_two_group(&map, 80, 40, &mut rng).unwrap();
        let make_net = |seed| {
            let cfg = NetworkConfig {
                input_dim: 2,
                hidden_width: 8,
                depth: 4,
                skip_distance: 2,
                init_std: 0.3,
                seed,
            };
            let mut n = Network::init_gaussian(&cfg).unwrap();
            n.set_input_box(&[0.0, 0.0], &[20.0, 20.0]).unwrap();
            n
        };
        let mut net1 = make_net(1);
        let mut net2 = make_net(2);
        let cfg = TrainConfig { max_epochs: 60, rar: None, ..TrainConfig::default() };
        let result = train_dual(
            &mut net1,
            &mut net2,
            &map,
            &mut samples,
            LossWeights::default(),
            LambdaMode::Trainable,
            &cfg,
            &mut rng,
            |_| ControlFlow::Continue(()),
        )
        .unwrap();
        let first = result.history.first().unwrap().loss.total;
        assert!(
            result.final_loss.total < first / 10.0,
            "{first} -> {}",
            result.final_loss.total
        );
        // The eigenvalue slot actually moves in trainable mode.
        assert!((result.lambda - 1.0).abs() > 1e-6, "lambda stayed at its init");
        assert!(!result.history.is_empty());
        let csv = dual_history_to_csv(&result.history);
        assert!(csv.starts_with("epoch,loss_total"));
    }

    #[test]
    fn training_is_deterministic() {
        let run = || {
            let (mut net, mut samples, residual) = tiny_problem(8);
            let cfg = TrainConfig {
                max_epochs: 30,
                rar: Some(RarConfig { alpha: 2, m: 20, cap: 500 }),
                rar_every: 15,
                ..TrainConfig::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            train_single(
                &mut net,
                &mut samples,
                &residual,
                LossWeights::default(),
                &cfg,
                &mut rng,
                |_| ControlFlow::Continue(()),
            )
            .unwrap();
            net.params_flat()
        };
        assert_eq!(run(), run());
    }
}
