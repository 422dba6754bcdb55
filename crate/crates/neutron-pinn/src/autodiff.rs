//! Exact differentiation of network outputs and losses.
//!
//! Two related capabilities live here:
//!
//! 1. **Input derivatives.** For a point batch, second-order jets
//!    `(z, dz/dx_i, d^2z/dx_i^2)` are propagated through every layer, giving
//!    the exact value, gradient and diagonal Hessian of the network output
//!    with respect to its input coordinates. Mixed second derivatives are not
//!    computed (the diffusion residuals never need them).
//!
//! 2. **Parameter gradients.** The jet-propagating forward pass is itself a
//!    differentiable computation, and [`backprop_chunk`] implements its exact
//!    adjoint. Seeding the adjoint with the partial derivatives of a loss
//!    with respect to `(value, grad_input, hess_diag)` at each point yields
//!    the exact gradient of that loss with respect to every weight and bias,
//!    including losses built from PDE residuals.
//!
//! All arithmetic is in f64. Evaluation is pure given an immutable network
//! and the accumulation order is fixed, so repeated evaluation is
//! bit-identical.

use crate::error::{Error, Result};
use crate::network::{GradientReport, Network};
use ndarray::{Array2, ArrayView2, ArrayViewMut2};

/// A single evaluation point in problem coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoint {
    pub coords: Vec<f64>,
}

impl EvalPoint {
    pub fn new(coords: Vec<f64>) -> EvalPoint {
        EvalPoint { coords }
    }
}

/// Value, input gradient and diagonal input Hessian of the network output at
/// one point.
#[derive(Debug, Clone)]
pub struct DerivativeBundle {
    pub value: f64,
    /// d(phi)/d(coord_i)
    pub grad_input: Vec<f64>,
    /// d^2(phi)/d(coord_i)^2
    pub hess_diag: Vec<f64>,
}

/// Flat gradient of a scalar loss over all weights and biases, in the
/// deterministic order of [`Network::params_flat`].
#[derive(Debug, Clone)]
pub struct ParamGradient(pub Vec<f64>);

impl ParamGradient {
    pub fn zeros(n: usize) -> ParamGradient {
        ParamGradient(vec![0.0; n])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// A flat, row-major batch of points sharing one dimensionality.
#[derive(Debug, Clone, Default)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize) -> Points {
        Points { dim, data: Vec::new() }
    }

    pub fn with_capacity(dim: usize, n: usize) -> Points {
        Points { dim, data: Vec::with_capacity(dim * n) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 { 0 } else { self.data.len() / self.dim }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn push(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.dim);
        self.data.extend_from_slice(p);
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn extend(&mut self, other: &Points) {
        assert_eq!(self.dim, other.dim);
        self.data.extend_from_slice(&other.data);
    }

    pub fn truncate(&mut self, n: usize) {
        self.data.truncate(n * self.dim);
    }
}

/// How far to carry the input jets in a forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DerivOrder {
    /// Values only.
    Value,
    /// Values and first input derivatives.
    First,
    /// Values, first and diagonal second input derivatives.
    Second,
}

/// Output jets for a batch: one value per point, plus per-axis first/second
/// derivative rows when requested.
#[derive(Debug, Clone)]
pub struct OutputJets {
    pub value: Vec<f64>,
    /// `grad[axis][point]`
    pub grad: Vec<Vec<f64>>,
    /// `hess[axis][point]`
    pub hess: Vec<Vec<f64>>,
}

/// Adjoint seeds for a batch: dLoss/d(value), dLoss/d(grad_i),
/// dLoss/d(hess_i) per point. Empty axis vectors mean zero seeds.
#[derive(Debug, Clone)]
pub struct OutputAdjoints {
    pub value: Vec<f64>,
    pub grad: Vec<Vec<f64>>,
    pub hess: Vec<Vec<f64>>,
}

impl OutputAdjoints {
    pub fn value_only(value: Vec<f64>) -> OutputAdjoints {
        OutputAdjoints { value, grad: Vec::new(), hess: Vec::new() }
    }
}

/// Cached forward intermediates for one chunk of points.
pub struct ChunkCache {
    order: DerivOrder,
    n: usize,
    dim: usize,
    /// Post-activation values z_l, index 0..=L-1 (z_0 is the normalized input).
    z: Vec<Array2<f64>>,
    /// Pre-activation first tangents per layer (index l-1), per axis.
    da: Vec<Vec<Array2<f64>>>,
    /// Pre-activation second tangents.
    dda: Vec<Vec<Array2<f64>>>,
    /// Post-activation first tangents dz_l (index 0..=L-1), per axis.
    dz: Vec<Vec<Array2<f64>>>,
    /// Post-activation second tangents.
    ddz: Vec<Vec<Array2<f64>>>,
    /// Output layer row a_L and its tangents.
    out: Vec<f64>,
    out_d: Vec<Vec<f64>>,
    out_dd: Vec<Vec<f64>>,
}

impl ChunkCache {
    pub fn outputs(&self) -> OutputJets {
        OutputJets {
            value: self.out.clone(),
            grad: self.out_d.clone(),
            hess: self.out_dd.clone(),
        }
    }
}

fn first_order(order: DerivOrder) -> bool {
    order >= DerivOrder::First
}

fn second_order(order: DerivOrder) -> bool {
    order >= DerivOrder::Second
}

/// Forward pass with input jets over `points[range]`.
pub fn forward_chunk(
    net: &Network,
    points: &Points,
    range: std::ops::Range<usize>,
    order: DerivOrder,
) -> Result<ChunkCache> {
    let dim = net.input_dim();
    if points.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: points.dim() });
    }
    let n = range.len();
    let depth = net.depth();
    let naxes = if first_order(order) { dim } else { 0 };

    // z_0: normalized input, shape (dim, n).
    let scale = net.input_scale();
    let offset = net.input_offset();
    let mut z0 = Array2::zeros((dim, n));
    for (j, idx) in range.clone().enumerate() {
        let p = points.get(idx);
        for i in 0..dim {
            z0[(i, j)] = (p[i] - offset[i]) * scale[i];
        }
    }
    let mut dz0 = Vec::new();
    let mut ddz0 = Vec::new();
    for axis in 0..naxes {
        let mut t = Array2::zeros((dim, n));
        t.row_mut(axis).fill(scale[axis]);
        dz0.push(t);
        if second_order(order) {
            ddz0.push(Array2::zeros((dim, n)));
        }
    }
    if !second_order(order) {
        ddz0 = (0..naxes).map(|_| Array2::zeros((0, 0))).collect();
    }

    let mut cache = ChunkCache {
        order,
        n,
        dim,
        z: vec![z0],
        da: Vec::new(),
        dda: Vec::new(),
        dz: vec![dz0],
        ddz: vec![ddz0],
        out: Vec::new(),
        out_d: Vec::new(),
        out_dd: Vec::new(),
    };

    for l in 1..=depth {
        let layer = &net.layers()[l - 1];
        let prev_z = &cache.z[l - 1];
        let mut a = layer.w.dot(prev_z);
        a += &layer.b.view().insert_axis(ndarray::Axis(1));
        let mut da: Vec<Array2<f64>> = (0..naxes)
            .map(|axis| layer.w.dot(&cache.dz[l - 1][axis]))
            .collect();
        let mut dda: Vec<Array2<f64>> = if second_order(order) {
            (0..naxes).map(|axis| layer.w.dot(&cache.ddz[l - 1][axis])).collect()
        } else {
            Vec::new()
        };
        if let Some(src) = net.skip_source(l) {
            a += &cache.z[src];
            for axis in 0..naxes {
                da[axis] += &cache.dz[src][axis];
                if second_order(order) {
                    dda[axis] += &cache.ddz[src][axis];
                }
            }
        }

        if l == depth {
            // Linear output layer: a is (1, n).
            cache.out = a.row(0).to_vec();
            cache.out_d = da.iter().map(|m| m.row(0).to_vec()).collect();
            cache.out_dd = dda.iter().map(|m| m.row(0).to_vec()).collect();
            // Keep pre-activation tangents for symmetry; not needed further.
            cache.da.push(da);
            cache.dda.push(dda);
        } else {
            let z = a.mapv(f64::tanh);
            let mut dz_l = Vec::with_capacity(naxes);
            let mut ddz_l = Vec::with_capacity(naxes);
            for axis in 0..naxes {
                let mut dz = Array2::zeros(z.raw_dim());
                elementwise3(&z, &da[axis], &mut dz, |s, p| (1.0 - s * s) * p);
                if second_order(order) {
                    let mut ddz = Array2::zeros(z.raw_dim());
                    elementwise4(&z, &da[axis], &dda[axis], &mut ddz, |s, p, q| {
                        let sp = 1.0 - s * s;
                        let spp = -2.0 * s * sp;
                        spp * p * p + sp * q
                    });
                    ddz_l.push(ddz);
                }
                dz_l.push(dz);
            }
            cache.z.push(z);
            cache.dz.push(dz_l);
            cache.ddz.push(ddz_l);
            cache.da.push(da);
            cache.dda.push(dda);
        }
    }
    Ok(cache)
}

/// Exact adjoint of [`forward_chunk`]: accumulates dLoss/d(theta) into
/// `grad` (layout of [`Network::params_flat`]) given per-point seeds.
pub fn backprop_chunk(
    net: &Network,
    cache: &ChunkCache,
    seeds: &OutputAdjoints,
    grad: &mut [f64],
) -> Result<()> {
    let depth = net.depth();
    let n = cache.n;
    let naxes = if seeds.grad.is_empty() && seeds.hess.is_empty() {
        0
    } else {
        cache.dim
    };
    if naxes > 0 && !first_order(cache.order) {
        return Err(Error::InvalidConfig(
            "derivative seeds require a cache built with first/second order".into(),
        ));
    }
    let seeds_hess = !seeds.hess.is_empty();
    if seeds_hess && !second_order(cache.order) {
        return Err(Error::InvalidConfig(
            "hess seeds require a cache built with DerivOrder::Second".into(),
        ));
    }
    if grad.len() != net.param_count() {
        return Err(Error::DimensionMismatch { expected: net.param_count(), got: grad.len() });
    }

    // Post-activation adjoint buffers for z_0..z_{L-1}.
    let mut zbar: Vec<Option<Array2<f64>>> = vec![None; depth];
    let mut dzbar: Vec<Vec<Option<Array2<f64>>>> = vec![vec![None; naxes]; depth];
    let mut ddzbar: Vec<Vec<Option<Array2<f64>>>> = vec![vec![None; naxes]; depth];

    let ranges = net.layer_param_ranges();

    for l in (1..=depth).rev() {
        let layer = &net.layers()[l - 1];
        let width = layer.w.nrows();

        // Pre-activation adjoints for layer l.
        let (abar, dabar, ddabar) = if l == depth {
            let mut abar = Array2::zeros((1, n));
            abar.row_mut(0).iter_mut().zip(seeds.value.iter()).for_each(|(a, s)| *a = *s);
            let dabar: Vec<Array2<f64>> = (0..naxes)
                .map(|axis| {
                    let mut m = Array2::zeros((1, n));
                    if let Some(row) = seeds.grad.get(axis) {
                        m.row_mut(0).iter_mut().zip(row.iter()).for_each(|(a, s)| *a = *s);
                    }
                    m
                })
                .collect();
            let ddabar: Vec<Array2<f64>> = if seeds_hess {
                (0..naxes)
                    .map(|axis| {
                        let mut m = Array2::zeros((1, n));
                        if let Some(row) = seeds.hess.get(axis) {
                            m.row_mut(0).iter_mut().zip(row.iter()).for_each(|(a, s)| *a = *s);
                        }
                        m
                    })
                    .collect()
            } else {
                Vec::new()
            };
            (abar, dabar, ddabar)
        } else {
            // Activation backprop: convert post-activation adjoints of z_l into
            // pre-activation adjoints using s = tanh(a) and the cached tangents.
            let s = &cache.z[l];
            let zb = zbar[l].take().unwrap_or_else(|| Array2::zeros((width, n)));
            let mut abar = Array2::zeros((width, n));
            elementwise3(s, &zb, &mut abar, |s, zb| (1.0 - s * s) * zb);
            let mut dabar = Vec::with_capacity(naxes);
            let mut ddabar = Vec::with_capacity(naxes);
            for axis in 0..naxes {
                let p = &cache.da[l - 1][axis];
                let dzb = dzbar[l][axis]
                    .take()
                    .unwrap_or_else(|| Array2::zeros((width, n)));
                // abar += s'' * p * dzbar
                elementwise_acc3(s, p, &dzb, &mut abar, |s, p, dzb| {
                    let sp = 1.0 - s * s;
                    -2.0 * s * sp * p * dzb
                });
                let mut dab = Array2::zeros((width, n));
                elementwise3(s, &dzb, &mut dab, |s, dzb| (1.0 - s * s) * dzb);
                if seeds_hess {
                    let q = &cache.dda[l - 1][axis];
                    let ddzb = ddzbar[l][axis]
                        .take()
                        .unwrap_or_else(|| Array2::zeros((width, n)));
                    // abar += (s''' p^2 + s'' q) * ddzbar
                    elementwise_acc4(s, p, q, &ddzb, &mut abar, |s, p, q, ddzb| {
                        let sp = 1.0 - s * s;
                        let spp = -2.0 * s * sp;
                        let sppp = -2.0 * sp * sp - 2.0 * s * spp;
                        (sppp * p * p + spp * q) * ddzb
                    });
                    // dabar += 2 s'' p * ddzbar
                    elementwise_acc3(s, p, &ddzb, &mut dab, |s, p, ddzb| {
                        -4.0 * s * (1.0 - s * s) * p * ddzb
                    });
                    // ddabar = s' * ddzbar
                    let mut ddab = Array2::zeros((width, n));
                    elementwise3(s, &ddzb, &mut ddab, |s, ddzb| (1.0 - s * s) * ddzb);
                    ddabar.push(ddab);
                }
                dabar.push(dab);
            }
            (abar, dabar, ddabar)
        };

        // Affine backprop: parameter gradient slices.
        {
            let r = ranges[l - 1].clone();
            let (wlen, blen) = (layer.w.len(), layer.b.len());
            let gslice = &mut grad[r];
            let (gw, gb) = gslice.split_at_mut(wlen);
            debug_assert_eq!(gb.len(), blen);
            let mut gw = ArrayViewMut2::from_shape(layer.w.raw_dim(), gw).expect("shape");
            gw += &abar.dot(&cache.z[l - 1].t());
            for axis in 0..naxes {
                gw += &dabar[axis].dot(&dz_view(cache, l - 1, axis));
                if seeds_hess {
                    gw += &ddabar[axis].dot(&ddz_view(cache, l - 1, axis));
                }
            }
            for (gbi, row) in gb.iter_mut().zip(abar.rows()) {
                *gbi += row.sum();
            }
        }

        // Propagate adjoints to the previous post-activation (and skip source).
        if l > 1 {
            let wt = layer.w.t();
            acc_opt(&mut zbar[l - 1], wt.dot(&abar));
            for axis in 0..naxes {
                acc_opt(&mut dzbar[l - 1][axis], wt.dot(&dabar[axis]));
                if seeds_hess {
                    acc_opt(&mut ddzbar[l - 1][axis], wt.dot(&ddabar[axis]));
                }
            }
            if let Some(src) = net.skip_source(l) {
                if src >= 1 {
                    acc_opt(&mut zbar[src], abar.clone());
                    for axis in 0..naxes {
                        acc_opt(&mut dzbar[src][axis], dabar[axis].clone());
                        if seeds_hess {
                            acc_opt(&mut ddzbar[src][axis], ddabar[axis].clone());
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn dz_view<'a>(cache: &'a ChunkCache, l: usize, axis: usize) -> ArrayView2<'a, f64> {
    cache.dz[l][axis].t()
}

fn ddz_view<'a>(cache: &'a ChunkCache, l: usize, axis: usize) -> ArrayView2<'a, f64> {
    cache.ddz[l][axis].t()
}

fn acc_opt(slot: &mut Option<Array2<f64>>, contrib: Array2<f64>) {
    match slot {
        Some(buf) => *buf += &contrib,
        None => *slot = Some(contrib),
    }
}

fn elementwise3(a: &Array2<f64>, b: &Array2<f64>, out: &mut Array2<f64>, f: impl Fn(f64, f64) -> f64) {
    let (a, b, out) = (
        a.as_slice().expect("layout"),
        b.as_slice().expect("layout"),
        out.as_slice_mut().expect("layout"),
    );
    for i in 0..out.len() {
        out[i] = f(a[i], b[i]);
    }
}

fn elementwise4(
    a: &Array2<f64>,
    b: &Array2<f64>,
    c: &Array2<f64>,
    out: &mut Array2<f64>,
    f: impl Fn(f64, f64, f64) -> f64,
) {
    let (a, b, c, out) = (
        a.as_slice().expect("layout"),
        b.as_slice().expect("layout"),
        c.as_slice().expect("layout"),
        out.as_slice_mut().expect("layout"),
    );
    for i in 0..out.len() {
        out[i] = f(a[i], b[i], c[i]);
    }
}

fn elementwise_acc3(
    a: &Array2<f64>,
    b: &Array2<f64>,
    c: &Array2<f64>,
    out: &mut Array2<f64>,
    f: impl Fn(f64, f64, f64) -> f64,
) {
    let (a, b, c, out) = (
        a.as_slice().expect("layout"),
        b.as_slice().expect("layout"),
        c.as_slice().expect("layout"),
        out.as_slice_mut().expect("layout"),
    );
    for i in 0..out.len() {
        out[i] += f(a[i], b[i], c[i]);
    }
}

fn elementwise_acc4(
    a: &Array2<f64>,
    b: &Array2<f64>,
    c: &Array2<f64>,
    d: &Array2<f64>,
    out: &mut Array2<f64>,
    f: impl Fn(f64, f64, f64, f64) -> f64,
) {
    let (a, b, c, d, out) = (
        a.as_slice().expect("layout"),
        b.as_slice().expect("layout"),
        c.as_slice().expect("layout"),
        d.as_slice().expect("layout"),
        out.as_slice_mut().expect("layout"),
    );
    for i in 0..out.len() {
        out[i] += f(a[i], b[i], c[i], d[i]);
    }
}

/// Value, input gradient and diagonal input Hessian at a single point.
pub fn eval_with_input_derivs(net: &Network, p: &EvalPoint) -> Result<DerivativeBundle> {
    let mut pts = Points::new(net.input_dim());
    if p.coords.len() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            got: p.coords.len(),
        });
    }
    pts.push(&p.coords);
    let cache = forward_chunk(net, &pts, 0..1, DerivOrder::Second)?;
    let bundle = DerivativeBundle {
        value: cache.out[0],
        grad_input: cache.out_d.iter().map(|row| row[0]).collect(),
        hess_diag: cache.out_dd.iter().map(|row| row[0]).collect(),
    };
    if !bundle.value.is_finite()
        || bundle.grad_input.iter().any(|v| !v.is_finite())
        || bundle.hess_diag.iter().any(|v| !v.is_finite())
    {
        return Err(Error::Divergence { context: "eval_with_input_derivs".into() });
    }
    Ok(bundle)
}

/// A scalar loss whose exact parameter gradient the engine can produce.
pub trait ParamLoss {
    fn value(&self, net: &Network) -> Result<f64>;
    /// Loss value together with the exact gradient over all parameters.
    fn value_and_gradient(&self, net: &Network) -> Result<(f64, ParamGradient)>;
}

/// Exact gradient of `loss` over all weights and biases.
pub fn loss_param_gradient(net: &Network, loss: &dyn ParamLoss) -> Result<ParamGradient> {
    let (value, grad) = loss.value_and_gradient(net)?;
    if !value.is_finite() {
        return Err(Error::Divergence { context: "loss_param_gradient".into() });
    }
    Ok(grad)
}

/// Per-layer gradient norms of `loss` at the current parameters.
pub fn gradient_norm_report(net: &Network, loss: &dyn ParamLoss) -> Result<GradientReport> {
    let grad = loss_param_gradient(net, loss)?;
    GradientReport::from_flat(net, &grad.0)
}

/// Finite-difference oracles, kept independent of the jet/adjoint path so
/// they can cross-check it.
pub mod fd {
    use super::*;

    /// Central finite differences for the input gradient and diagonal Hessian.
    ///
    /// The step is `h` in the network's normalized input units, i.e. the raw
    /// step on axis `i` is `h / input_scale[i]`. This keeps the truncation
    /// error comparable across axes with very different physical ranges
    /// (e.g. x in meters vs t in milliseconds).
    pub fn input_derivs(net: &Network, p: &[f64], h: f64) -> Result<DerivativeBundle> {
        let value = net.forward(p)?;
        let dim = p.len();
        let mut grad_input = Vec::with_capacity(dim);
        let mut hess_diag = Vec::with_capacity(dim);
        for i in 0..dim {
            let h = h / net.input_scale()[i];
            let mut hi = p.to_vec();
            let mut lo = p.to_vec();
            hi[i] += h;
            lo[i] -= h;
            let f_hi = net.forward(&hi)?;
            let f_lo = net.forward(&lo)?;
            grad_input.push((f_hi - f_lo) / (2.0 * h));
            hess_diag.push((f_hi - 2.0 * value + f_lo) / (h * h));
        }
        Ok(DerivativeBundle { value, grad_input, hess_diag })
    }

    /// Central finite differences of `loss` with respect to every parameter.
    pub fn param_gradient(net: &Network, loss: &dyn ParamLoss, h: f64) -> Result<Vec<f64>> {
        let theta = net.params_flat();
        let mut work = net.clone();
        let mut grad = Vec::with_capacity(theta.len());
        for k in 0..theta.len() {
            let mut t = theta.clone();
            t[k] += h;
            work.set_params_flat(&t)?;
            let f_hi = loss.value(&work)?;
            t[k] = theta[k] - h;
            work.set_params_flat(&t)?;
            let f_lo = loss.value(&work)?;
            grad.push((f_hi - f_lo) / (2.0 * h));
        }
        Ok(grad)
    }
}
