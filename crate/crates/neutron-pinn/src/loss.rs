//! Composite training losses and their exact parameter gradients.
//!
//! The total loss is `pde + w * (initial + boundary + data)` where every
//! term is a mean of squares and `w` balances the supervised terms against
//! the residual term.

use crate::autodiff::{
    backprop_chunk, forward_chunk, DerivOrder, OutputAdjoints, ParamGradient, ParamLoss, Points,
};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::physics::{MaterialMap, ProblemP1Spec, ProblemP2Spec};
use crate::physics::EdgeBc;
use crate::sampling::{lhs_sample, SampleSet, SupervisedSet};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Weight of the supervised loss terms relative to the PDE term.
#[derive(Debug, Clone, Copy)]
pub struct LossWeights {
    pub w: f64,
}

impl Default for LossWeights {
    fn default() -> LossWeights {
        LossWeights { w: 100.0 }
    }
}

/// Individual loss terms; `total = pde + w * (initial + boundary + data)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LossBreakdown {
    pub pde: f64,
    pub initial: f64,
    pub boundary: f64,
    pub data: f64,
    pub total: f64,
}

/// Coefficients of a residual that is linear in the output jet:
/// `r = c_value * u + sum_i c_grad[i] * du/dx_i + sum_i c_hess[i] * d2u/dx_i^2`.
#[derive(Debug, Clone)]
pub struct ResidualCoeffs {
    pub c_value: f64,
    pub c_grad: Vec<f64>,
    pub c_hess: Vec<f64>,
}

impl ResidualCoeffs {
    /// 1D transient slab residual over inputs (x, t).
    pub fn p1(spec: &ProblemP1Spec) -> ResidualCoeffs {
        ResidualCoeffs {
            c_value: -(spec.k_inf - 1.0) / spec.l2,
            c_grad: vec![0.0, 1.0 / (spec.d * spec.v)],
            c_hess: vec![-1.0, 0.0],
        }
    }

    /// 2D transient residual over inputs (x, y, t).
    pub fn p2(spec: &ProblemP2Spec) -> ResidualCoeffs {
        ResidualCoeffs {
            c_value: -(spec.k_inf - 1.0) / spec.l2,
            c_grad: vec![0.0, 0.0, 1.0 / (spec.d * spec.v)],
            c_hess: vec![-1.0, -1.0, 0.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.c_grad.len()
    }
}

/// Default number of points processed per forward/backward chunk.
pub const DEFAULT_CHUNK: usize = 1024;

/// Single-network PINN objective for the one-group transient problems.
pub struct PinnObjective<'a> {
    pub samples: &'a SampleSet,
    pub residual: ResidualCoeffs,
    pub weights: LossWeights,
    pub chunk: usize,
}

impl<'a> PinnObjective<'a> {
    pub fn new(samples: &'a SampleSet, residual: ResidualCoeffs) -> PinnObjective<'a> {
        PinnObjective { samples, residual, weights: LossWeights::default(), chunk: DEFAULT_CHUNK }
    }

    /// PDE residual at every collocation point (used by RAR).
    pub fn residuals(&self, net: &Network) -> Result<Vec<f64>> {
        let pts = &self.samples.pde;
        let mut out = Vec::with_capacity(pts.len());
        let mut start = 0;
        while start < pts.len() {
            let end = (start + self.chunk).min(pts.len());
            let cache = forward_chunk(net, pts, start..end, DerivOrder::Second)?;
            let jets = cache.outputs();
            for p in 0..end - start {
                out.push(residual_from_jets(&self.residual, &jets.value, &jets.grad, &jets.hess, p));
            }
            start = end;
        }
        Ok(out)
    }

    pub fn breakdown(&self, net: &Network) -> Result<LossBreakdown> {
        self.eval(net, None)
    }

    /// Breakdown and exact gradient in one pass.
    pub fn breakdown_and_gradient(&self, net: &Network) -> Result<(LossBreakdown, ParamGradient)> {
        let mut grad = vec![0.0; net.config().param_count()];
        let bd = self.eval(net, Some(&mut grad))?;
        Ok((bd, ParamGradient(grad)))
    }

    fn eval(&self, net: &Network, mut grad: Option<&mut [f64]>) -> Result<LossBreakdown> {
        let mut bd = LossBreakdown::default();
        let w = self.weights.w;

        // PDE term.
        let pts = &self.samples.pde;
        if !pts.is_empty() {
            let n = pts.len() as f64;
            let mut start = 0;
            while start < pts.len() {
                let end = (start + self.chunk).min(pts.len());
                let m = end - start;
                let cache = forward_chunk(net, pts, start..end, DerivOrder::Second)?;
                let jets = cache.outputs();
                let mut seeds = OutputAdjoints {
                    value: vec![0.0; m],
                    grad: vec![vec![0.0; m]; self.residual.dim()],
                    hess: vec![vec![0.0; m]; self.residual.dim()],
                };
                for p in 0..m {
                    let r = residual_from_jets(
                        &self.residual,
                        &jets.value,
                        &jets.grad,
                        &jets.hess,
                        p,
                    );
                    bd.pde += r * r / n;
                    let s = 2.0 * r / n;
                    seeds.value[p] = s * self.residual.c_value;
                    for d in 0..self.residual.dim() {
                        seeds.grad[d][p] = s * self.residual.c_grad[d];
                        seeds.hess[d][p] = s * self.residual.c_hess[d];
                    }
                }
                if let Some(g) = grad.as_deref_mut() {
                    backprop_chunk(net, &cache, &seeds, g)?;
                }
                start = end;
            }
        }

        bd.initial = self.supervised_term(net, &self.samples.initial, w, grad.as_deref_mut())?;
        bd.boundary = self.supervised_term(net, &self.samples.boundary, w, grad.as_deref_mut())?;
        bd.data = self.supervised_term(net, &self.samples.data, w, grad.as_deref_mut())?;
        bd.total = bd.pde + w * (bd.initial + bd.boundary + bd.data);
        if !bd.total.is_finite() {
            return Err(Error::Divergence { context: "loss evaluation".into() });
        }
        Ok(bd)
    }

    /// Mean squared mismatch of one supervised set; when `grad` is present
    /// the seeds carry the outer weight `w` so the gradient matches the
    /// total loss.
    fn supervised_term(
        &self,
        net: &Network,
        set: &SupervisedSet,
        w: f64,
        mut grad: Option<&mut [f64]>,
    ) -> Result<f64> {
        if set.is_empty() {
            return Ok(0.0);
        }
        let n = set.len() as f64;
        let mut term = 0.0;
        let mut start = 0;
        while start < set.len() {
            let end = (start + self.chunk).min(set.len());
            let m = end - start;
            let cache = forward_chunk(net, &set.points, start..end, DerivOrder::Value)?;
            let jets = cache.outputs();
            let mut seeds = vec![0.0; m];
            for p in 0..m {
                let diff = jets.value[p] - set.targets[start + p];
                term += diff * diff / n;
                seeds[p] = 2.0 * w * diff / n;
            }
            if let Some(g) = grad.as_deref_mut() {
                backprop_chunk(net, &cache, &OutputAdjoints::value_only(seeds), g)?;
            }
            start = end;
        }
        Ok(term)
    }
}

fn residual_from_jets(
    rc: &ResidualCoeffs,
    value: &[f64],
    grad: &[Vec<f64>],
    hess: &[Vec<f64>],
    p: usize,
) -> f64 {
    let mut r = rc.c_value * value[p];
    for d in 0..rc.dim() {
        r += rc.c_grad[d] * grad[d][p] + rc.c_hess[d] * hess[d][p];
    }
    r
}

impl ParamLoss for PinnObjective<'_> {
    fn value(&self, net: &Network) -> Result<f64> {
        Ok(self.eval(net, None)?.total)
    }

    fn value_and_gradient(&self, net: &Network) -> Result<(f64, ParamGradient)> {
        let mut grad = vec![0.0; net.config().param_count()];
        let bd = self.eval(net, Some(&mut grad))?;
        Ok((bd.total, ParamGradient(grad)))
    }
}

/// Zero-normal-derivative (symmetry) conditions: for each point, the listed
/// input axis derivative is driven to zero.
#[derive(Debug, Clone)]
pub struct NeumannSet {
    pub points: Points,
    pub axes: Vec<usize>,
}

impl NeumannSet {
    pub fn empty(dim: usize) -> NeumannSet {
        NeumannSet { points: Points::new(dim), axes: Vec::new() }
    }

    pub fn push(&mut self, p: &[f64], axis: usize) {
        self.points.push(p);
        self.axes.push(axis);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// How the eigenvalue enters the two-group residuals.
#[derive(Debug, Clone, Copy)]
pub enum LambdaMode {
    /// lambda = 1/k_eff held constant (fixed-k problems).
    Fixed(f64),
    /// lambda is learned alongside the networks; the trainer re-solves it in
    /// closed form between optimizer phases.
    Trainable,
}

/// Loss terms for a dual-network two-group objective.
#[derive(Debug, Clone, Copy, Default)]
pub struct DualBreakdown {
    pub pde: f64,
    pub boundary: f64,
    pub neumann: f64,
    pub data: f64,
    pub total: f64,
}

/// Gradient of the dual objective, split by network plus the eigenvalue
/// slot.
pub struct DualGradient {
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub d_lambda: f64,
}

/// Two coupled networks (fast and thermal group) sharing one loss.
///
/// The PDE term sums both group residuals; Dirichlet points drive both
/// fluxes to zero; Neumann points drive both normal derivatives to zero;
/// anchor data is supplied per group.
pub struct DualTwoGroupObjective<'a> {
    pub map: &'a MaterialMap,
    pub pde: &'a Points,
    pub dirichlet: &'a Points,
    pub neumann: &'a NeumannSet,
    pub data1: &'a SupervisedSet,
    pub data2: &'a SupervisedSet,
    pub weights: LossWeights,
    pub lambda: LambdaMode,
    pub chunk: usize,
}

impl DualTwoGroupObjective<'_> {
    /// Combined residual magnitude `sqrt(r1^2 + r2^2)` per collocation
    /// point (used by RAR).
    pub fn residuals(&self, net1: &Network, net2: &Network, lambda: f64) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.pde.len());
        let mut start = 0;
        while start < self.pde.len() {
            let end = (start + self.chunk).min(self.pde.len());
            let c1 = forward_chunk(net1, self.pde, start..end, DerivOrder::Second)?;
            let c2 = forward_chunk(net2, self.pde, start..end, DerivOrder::Second)?;
            let (j1, j2) = (c1.outputs(), c2.outputs());
            for p in 0..end - start {
                let (r1, r2) = self.point_residuals(start + p, &j1, &j2, p, lambda)?;
                out.push((r1 * r1 + r2 * r2).sqrt());
            }
            start = end;
        }
        Ok(out)
    }

    fn point_residuals(
        &self,
        point_index: usize,
        j1: &crate::autodiff::OutputJets,
        j2: &crate::autodiff::OutputJets,
        p: usize,
        lambda: f64,
    ) -> Result<(f64, f64)> {
        let xy = self.pde.get(point_index);
        let m = self.map.material_at(xy[0], xy[1])?;
        let b2ax = self.map.axial_buckling();
        let lap1 = j1.hess[0][p] + j1.hess[1][p];
        let lap2 = j2.hess[0][p] + j2.hess[1][p];
        let fission = m.nu_f1 * j1.value[p] + m.nu_f2 * j2.value[p];
        let r1 = -m.d1 * lap1 + m.removal_1(b2ax) * j1.value[p] - lambda * m.chi1 * fission;
        let r2 = -m.d2 * lap2 + m.removal_2(b2ax) * j2.value[p]
            - m.sigma_12 * j1.value[p]
            - lambda * m.chi2 * fission;
        Ok((r1, r2))
    }

    pub fn breakdown(&self, net1: &Network, net2: &Network, lambda: f64) -> Result<DualBreakdown> {
        self.eval(net1, net2, lambda, None).map(|(bd, _)| bd)
    }

    /// Exact minimizer of the PDE term over the eigenvalue multiplier.
    ///
    /// Both group residuals are affine in lambda (`r = a - lambda * b` with
    /// `b` the fission source term), so the least-squares optimum is a ratio
    /// of two accumulated products. Returns `None` when the fission term
    /// vanishes at every collocation point.
    pub fn optimal_lambda(&self, net1: &Network, net2: &Network) -> Result<Option<f64>> {
        let mut num = 0.0;
        let mut den = 0.0;
        let mut start = 0;
        while start < self.pde.len() {
            let end = (start + self.chunk).min(self.pde.len());
            let c1 = forward_chunk(net1, self.pde, start..end, DerivOrder::Second)?;
            let c2 = forward_chunk(net2, self.pde, start..end, DerivOrder::Second)?;
            let (j1, j2) = (c1.outputs(), c2.outputs());
            for p in 0..end - start {
                let (a1, a2) = self.point_residuals(start + p, &j1, &j2, p, 0.0)?;
                let (r1, r2) = self.point_residuals(start + p, &j1, &j2, p, 1.0)?;
                let (b1, b2) = (a1 - r1, a2 - r2);
                num += a1 * b1 + a2 * b2;
                den += b1 * b1 + b2 * b2;
            }
            start = end;
        }
        Ok((den > 0.0).then_some(num / den))
    }

    /// Loss and exact gradient for both networks and, in trainable mode,
    /// the eigenvalue.
    pub fn value_and_gradient(
        &self,
        net1: &Network,
        net2: &Network,
        lambda: f64,
    ) -> Result<(DualBreakdown, DualGradient)> {
        let n1 = net1.config().param_count();
        let n2 = net2.config().param_count();
        let (bd, grads) = self.eval(net1, net2, lambda, Some((n1, n2)))?;
        Ok((bd, grads.expect("gradient requested")))
    }

    fn eval(
        &self,
        net1: &Network,
        net2: &Network,
        lambda: f64,
        grad_dims: Option<(usize, usize)>,
    ) -> Result<(DualBreakdown, Option<DualGradient>)> {
        let mut bd = DualBreakdown::default();
        let w = self.weights.w;
        let mut grads = grad_dims
            .map(|(n1, n2)| DualGradient { g1: vec![0.0; n1], g2: vec![0.0; n2], d_lambda: 0.0 });

        // PDE term over both group residuals.
        if !self.pde.is_empty() {
            let n = self.pde.len() as f64;
            let mut start = 0;
            while start < self.pde.len() {
                let end = (start + self.chunk).min(self.pde.len());
                let m_pts = end - start;
                let c1 = forward_chunk(net1, self.pde, start..end, DerivOrder::Second)?;
                let c2 = forward_chunk(net2, self.pde, start..end, DerivOrder::Second)?;
                let (j1, j2) = (c1.outputs(), c2.outputs());
                let mut s1 = OutputAdjoints {
                    value: vec![0.0; m_pts],
                    grad: vec![vec![0.0; m_pts]; 2],
                    hess: vec![vec![0.0; m_pts]; 2],
                };
                let mut s2 = OutputAdjoints {
                    value: vec![0.0; m_pts],
                    grad: vec![vec![0.0; m_pts]; 2],
                    hess: vec![vec![0.0; m_pts]; 2],
                };
                for p in 0..m_pts {
                    let xy = self.pde.get(start + p);
                    let mat = self.map.material_at(xy[0], xy[1])?;
                    let (r1, r2) = self.point_residuals(start + p, &j1, &j2, p, lambda)?;
                    bd.pde += (r1 * r1 + r2 * r2) / n;
                    let (a1, a2) = (2.0 * r1 / n, 2.0 * r2 / n);
                    let b2ax = self.map.axial_buckling();
                    // dr1/du1, dr2/du1
                    s1.value[p] = a1 * (mat.removal_1(b2ax) - lambda * mat.chi1 * mat.nu_f1)
                        + a2 * (-mat.sigma_12 - lambda * mat.chi2 * mat.nu_f1);
                    // dr1/du2, dr2/du2
                    s2.value[p] = a1 * (-lambda * mat.chi1 * mat.nu_f2)
                        + a2 * (mat.removal_2(b2ax) - lambda * mat.chi2 * mat.nu_f2);
                    for d in 0..2 {
                        s1.hess[d][p] = a1 * (-mat.d1);
                        s2.hess[d][p] = a2 * (-mat.d2);
                    }
                    if let Some(g) = grads.as_mut() {
                        let fission = mat.nu_f1 * j1.value[p] + mat.nu_f2 * j2.value[p];
                        g.d_lambda -= (a1 * mat.chi1 + a2 * mat.chi2) * fission;
                    }
                }
                if let Some(g) = grads.as_mut() {
                    backprop_chunk(net1, &c1, &s1, &mut g.g1)?;
                    backprop_chunk(net2, &c2, &s2, &mut g.g2)?;
                }
                start = end;
            }
        }

        // Zero-flux Dirichlet points, both groups.
        if !self.dirichlet.is_empty() {
            let n = self.dirichlet.len() as f64;
            for (net, which) in [(net1, 0), (net2, 1)] {
                let mut start = 0;
                while start < self.dirichlet.len() {
                    let end = (start + self.chunk).min(self.dirichlet.len());
                    let m_pts = end - start;
                    let cache = forward_chunk(net, self.dirichlet, start..end, DerivOrder::Value)?;
                    let jets = cache.outputs();
                    let mut seeds = vec![0.0; m_pts];
                    for p in 0..m_pts {
                        let u = jets.value[p];
                        bd.boundary += u * u / n;
                        seeds[p] = 2.0 * w * u / n;
                    }
                    if let Some(g) = grads.as_mut() {
                        let gslice = if which == 0 { &mut g.g1 } else { &mut g.g2 };
                        backprop_chunk(net, &cache, &OutputAdjoints::value_only(seeds), gslice)?;
                    }
                    start = end;
                }
            }
        }

        // Symmetry (zero normal derivative) points, both groups.
        if !self.neumann.is_empty() {
            let n = self.neumann.len() as f64;
            for (net, which) in [(net1, 0), (net2, 1)] {
                let mut start = 0;
                while start < self.neumann.len() {
                    let end = (start + self.chunk).min(self.neumann.len());
                    let m_pts = end - start;
                    let cache =
                        forward_chunk(net, &self.neumann.points, start..end, DerivOrder::First)?;
                    let jets = cache.outputs();
                    let mut seeds = OutputAdjoints {
                        value: vec![0.0; m_pts],
                        grad: vec![vec![0.0; m_pts]; 2],
                        hess: Vec::new(),
                    };
                    for p in 0..m_pts {
                        let axis = self.neumann.axes[start + p];
                        let d = jets.grad[axis][p];
                        bd.neumann += d * d / n;
                        seeds.grad[axis][p] = 2.0 * w * d / n;
                    }
                    if let Some(g) = grads.as_mut() {
                        let gslice = if which == 0 { &mut g.g1 } else { &mut g.g2 };
                        backprop_chunk(net, &cache, &seeds, gslice)?;
                    }
                    start = end;
                }
            }
        }

        // Anchor data per group.
        for (net, set, which) in [(net1, self.data1, 0), (net2, self.data2, 1)] {
            if set.is_empty() {
                continue;
            }
            let n = set.len() as f64;
            let mut start = 0;
            while start < set.len() {
                let end = (start + self.chunk).min(set.len());
                let m_pts = end - start;
                let cache = forward_chunk(net, &set.points, start..end, DerivOrder::Value)?;
                let jets = cache.outputs();
                let mut seeds = vec![0.0; m_pts];
                for p in 0..m_pts {
                    let diff = jets.value[p] - set.targets[start + p];
                    bd.data += diff * diff / n;
                    seeds[p] = 2.0 * w * diff / n;
                }
                if let Some(g) = grads.as_mut() {
                    let gslice = if which == 0 { &mut g.g1 } else { &mut g.g2 };
                    backprop_chunk(net, &cache, &OutputAdjoints::value_only(seeds), gslice)?;
                }
                start = end;
            }
        }

        bd.total = bd.pde + w * (bd.boundary + bd.neumann + bd.data);
        if !bd.total.is_finite() {
            return Err(Error::Divergence { context: "dual loss evaluation".into() });
        }
        Ok((bd, grads))
    }
}

/// Sample sets for dual-network two-group training: interior collocation
/// points, zero-flux boundary points, symmetry (zero normal derivative)
/// points and per-group anchor data.
#[derive(Debug, Clone)]
pub struct DualSampleSet {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub pde: Points,
    pub dirichlet: Points,
    pub neumann: NeumannSet,
    pub data1: SupervisedSet,
    pub data2: SupervisedSet,
}

/// Boundary face of the active region: a cell edge together with its
/// boundary type and normal axis.
struct BoundaryFace {
    /// 0 for vertical faces (normal along x), 1 for horizontal faces.
    axis: usize,
    /// Coordinate along the normal axis.
    fixed: f64,
    /// Extent along the face.
    span: (f64, f64),
    bc: EdgeBc,
}

/// Enumerate the boundary faces of the active region, ordered by cell then
/// side (left, right, bottom, top). Faces on the bounding box take the map's
/// edge tags; stepped internal boundaries against inactive cells are
/// zero-flux.
fn boundary_faces(map: &MaterialMap) -> Vec<BoundaryFace> {
    let [left, right, bottom, top] = map.edge_bc();
    let h = map.cell();
    let mut faces = Vec::new();
    for j in 0..map.ny() {
        for i in 0..map.nx() {
            if !map.is_active_cell(i, j) {
                continue;
            }
            let (x0, x1) = (i as f64 * h, (i + 1) as f64 * h);
            let (y0, y1) = (j as f64 * h, (j + 1) as f64 * h);
            let mut side = |exposed: bool, bc, axis, fixed, span| {
                if exposed {
                    faces.push(BoundaryFace { axis, fixed, span, bc });
                }
            };
            side(i == 0, left, 0, x0, (y0, y1));
            side(i > 0 && !map.is_active_cell(i - 1, j), EdgeBc::ZeroFlux, 0, x0, (y0, y1));
            side(i + 1 == map.nx(), right, 0, x1, (y0, y1));
            side(i + 1 < map.nx() && !map.is_active_cell(i + 1, j), EdgeBc::ZeroFlux, 0, x1, (y0, y1));
            side(j == 0, bottom, 1, y0, (x0, x1));
            side(j > 0 && !map.is_active_cell(i, j - 1), EdgeBc::ZeroFlux, 1, y0, (x0, x1));
            side(j + 1 == map.ny(), top, 1, y1, (x0, x1));
            side(j + 1 < map.ny() && !map.is_active_cell(i, j + 1), EdgeBc::ZeroFlux, 1, y1, (x0, x1));
        }
    }
    faces
}

/// Build collocation and boundary samples for a two-group map problem:
/// `n_pde` Latin hypercube points inside the active region (rejection over
/// the bounding box) and `n_boundary` points cycled over the boundary faces,
/// split into zero-flux and symmetry sets by face type. Anchor data starts
/// empty.
pub fn sample_two_group(
    map: &MaterialMap,
    n_pde: usize,
    n_boundary: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DualSampleSet> {
    let lo = vec![0.0, 0.0];
    let hi = vec![map.width(), map.height()];
    let mut pde = Points::new(2);
    for _ in 0..1000 {
        if pde.len() == n_pde {
            break;
        }
        let batch = lhs_sample(rng, &lo, &hi, n_pde - pde.len());
        for p in batch.iter() {
            if pde.len() < n_pde && map.id_at(p[0], p[1]).is_some() {
                pde.push(p);
            }
        }
    }
    if pde.len() < n_pde {
        return Err(Error::InvalidConfig(
            "could not place collocation points inside the active region".into(),
        ));
    }

    let faces = boundary_faces(map);
    if faces.is_empty() && n_boundary > 0 {
        return Err(Error::InvalidConfig("map has no boundary faces".into()));
    }
    let mut dirichlet = Points::new(2);
    let mut neumann = NeumannSet::empty(2);
    for idx in 0..n_boundary {
        let face = &faces[idx % faces.len()];
        let u = rng.gen_range(face.span.0..face.span.1);
        let p = match face.axis {
            0 => [face.fixed, u],
            _ => [u, face.fixed],
        };
        match face.bc {
            EdgeBc::ZeroFlux => dirichlet.push(&p),
            EdgeBc::Symmetry => neumann.push(&p, face.axis),
        }
    }
    Ok(DualSampleSet {
        lo,
        hi,
        pde,
        dirichlet,
        neumann,
        data1: SupervisedSet::empty(2),
        data2: SupervisedSet::empty(2),
    })
}
