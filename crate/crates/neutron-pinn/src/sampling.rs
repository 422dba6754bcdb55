//! Collocation point generation: Latin hypercube sampling and
//! residual-adaptive refinement (RAR).

use crate::autodiff::Points;
use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Latin hypercube sample of `n` points in the box `[lo, hi]`.
///
/// Each axis is split into `n` equal strata and every stratum holds exactly
/// one point; the strata are paired across axes by independent random
/// permutations.
pub fn lhs_sample(rng: &mut ChaCha8Rng, lo: &[f64], hi: &[f64], n: usize) -> Points {
    assert_eq!(lo.len(), hi.len());
    let dim = lo.len();
    let mut pts = Points::with_capacity(dim, n);
    if n == 0 {
        return pts;
    }
    // Per-axis stratum permutations plus a uniform offset inside the stratum.
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for d in 0..dim {
        let mut perm: Vec<usize> = (0..n).collect();
        // Fisher-Yates with the shared stream keeps the draw deterministic.
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        let width = (hi[d] - lo[d]) / n as f64;
        let column = perm
            .into_iter()
            .map(|s| lo[d] + (s as f64 + rng.gen::<f64>()) * width)
            .collect();
        columns.push(column);
    }
    let mut coords = vec![0.0; dim];
    for i in 0..n {
        for d in 0..dim {
            coords[d] = columns[d][i];
        }
        pts.push(&coords);
    }
    pts
}

/// Residual-adaptive refinement settings.
#[derive(Debug, Clone, Copy)]
pub struct RarConfig {
    /// Cells per axis; the domain is split into alpha^dim cells.
    pub alpha: usize,
    /// Points added into the worst cell per refinement step.
    pub m: usize,
    /// Hard cap on the total collocation count.
    pub cap: usize,
}

impl Default for RarConfig {
    fn default() -> RarConfig {
        RarConfig { alpha: 2, m: 500, cap: 5000 }
    }
}

/// Result of one refinement step.
#[derive(Debug, Clone)]
pub struct RarOutcome {
    /// Flat index of the refined cell (axis 0 most significant).
    pub cell: usize,
    /// Points actually appended (0 once the cap is reached).
    pub added: usize,
    /// Mean absolute residual per cell, indexed like `cell`.
    pub cell_means: Vec<f64>,
}

/// Flat cell index of a point on the alpha-per-axis grid over `[lo, hi]`,
/// with axis 0 most significant.
pub fn cell_index(lo: &[f64], hi: &[f64], alpha: usize, p: &[f64]) -> usize {
    let mut idx = 0;
    for d in 0..lo.len() {
        let frac = ((p[d] - lo[d]) / (hi[d] - lo[d])).clamp(0.0, 1.0);
        let c = ((frac * alpha as f64) as usize).min(alpha - 1);
        idx = idx * alpha + c;
    }
    idx
}

/// One RAR step: split `[lo, hi]` into `alpha^dim` cells, find the cell with
/// the largest mean absolute residual (ties resolve to the lowest index) and
/// append `m` fresh Latin hypercube points inside it, never growing the set
/// past `cap`.
///
/// `residuals[i]` must be the PDE residual at `points.get(i)`.
pub fn rar_step(
    rng: &mut ChaCha8Rng,
    lo: &[f64],
    hi: &[f64],
    points: &mut Points,
    residuals: &[f64],
    cfg: &RarConfig,
) -> Result<RarOutcome> {
    rar_step_filtered(rng, lo, hi, points, residuals, cfg, |_| true)
}

/// [`rar_step`] with an acceptance predicate: only points satisfying
/// `accept` are appended (used when the bounding box of a non-rectangular
/// domain contains inactive space).
pub fn rar_step_filtered(
    rng: &mut ChaCha8Rng,
    lo: &[f64],
    hi: &[f64],
    points: &mut Points,
    residuals: &[f64],
    cfg: &RarConfig,
    accept: impl Fn(&[f64]) -> bool,
) -> Result<RarOutcome> {
    if residuals.len() != points.len() {
        return Err(Error::DimensionMismatch { expected: points.len(), got: residuals.len() });
    }
    if cfg.alpha == 0 || cfg.m == 0 {
        return Err(Error::InvalidConfig("RAR needs alpha >= 1 and m >= 1".into()));
    }
    let dim = lo.len();
    let n_cells = cfg.alpha.pow(dim as u32);
    let mut sums = vec![0.0f64; n_cells];
    let mut counts = vec![0usize; n_cells];
    for (p, r) in points.iter().zip(residuals.iter()) {
        if !r.is_finite() {
            return Err(Error::Divergence { context: "RAR residual".into() });
        }
        let c = cell_index(lo, hi, cfg.alpha, p);
        sums[c] += r.abs();
        counts[c] += 1;
    }
    let cell_means: Vec<f64> = sums
        .iter()
        .zip(counts.iter())
        .map(|(s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
        .collect();
    let mut worst = 0;
    for (i, &m) in cell_means.iter().enumerate() {
        if m > cell_means[worst] {
            worst = i;
        }
    }

    // Bounding box of the worst cell.
    let mut cell_lo = vec![0.0; dim];
    let mut cell_hi = vec![0.0; dim];
    let mut rest = worst;
    for d in (0..dim).rev() {
        let c = rest % cfg.alpha;
        rest /= cfg.alpha;
        let width = (hi[d] - lo[d]) / cfg.alpha as f64;
        cell_lo[d] = lo[d] + c as f64 * width;
        cell_hi[d] = cell_lo[d] + width;
    }

    let room = cfg.cap.saturating_sub(points.len());
    let target = cfg.m.min(room);
    let mut added = 0;
    for _ in 0..50 {
        if added == target {
            break;
        }
        let fresh = lhs_sample(rng, &cell_lo, &cell_hi, target - added);
        for p in fresh.iter() {
            if added < target && accept(p) {
                points.push(p);
                added += 1;
            }
        }
    }
    Ok(RarOutcome { cell: worst, added, cell_means })
}

/// Centered L2 discrepancy of a point set mapped to the unit cube; lower
/// means more uniform coverage.
pub fn centered_l2_discrepancy(points: &Points, lo: &[f64], hi: &[f64]) -> f64 {
    let n = points.len();
    let dim = points.dim();
    if n == 0 {
        return 0.0;
    }
    let unit = |p: &[f64], d: usize| (p[d] - lo[d]) / (hi[d] - lo[d]);
    let mut sum1 = 0.0;
    for p in points.iter() {
        let mut prod = 1.0;
        for d in 0..dim {
            let u = unit(p, d) - 0.5;
            prod *= 1.0 + 0.5 * u.abs() - 0.5 * u * u;
        }
        sum1 += prod;
    }
    let mut sum2 = 0.0;
    for p in points.iter() {
        for q in points.iter() {
            let mut prod = 1.0;
            for d in 0..dim {
                let u = unit(p, d) - 0.5;
                let v = unit(q, d) - 0.5;
                prod *= 1.0 + 0.5 * (u.abs() + v.abs() - (u - v).abs());
            }
            sum2 += prod;
        }
    }
    let nf = n as f64;
    let sq = (13.0f64 / 12.0).powi(dim as i32) - 2.0 / nf * sum1 + sum2 / (nf * nf);
    sq.max(0.0).sqrt()
}

/// Points with known target values (initial, boundary or anchor data).
#[derive(Debug, Clone)]
pub struct SupervisedSet {
    pub points: Points,
    pub targets: Vec<f64>,
}

impl SupervisedSet {
    pub fn empty(dim: usize) -> SupervisedSet {
        SupervisedSet { points: Points::new(dim), targets: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, p: &[f64], target: f64) {
        self.points.push(p);
        self.targets.push(target);
    }
}

/// Full training set for one problem.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub pde: Points,
    pub initial: SupervisedSet,
    pub boundary: SupervisedSet,
    pub data: SupervisedSet,
}

impl SampleSet {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> SampleSet {
        let dim = lo.len();
        SampleSet {
            lo,
            hi,
            pde: Points::new(dim),
            initial: SupervisedSet::empty(dim),
            boundary: SupervisedSet::empty(dim),
            data: SupervisedSet::empty(dim),
        }
    }

    pub fn total_points(&self) -> usize {
        self.pde.len() + self.initial.len() + self.boundary.len() + self.data.len()
    }

    /// CSV dump of all points with a role tag, one row per point:
    /// `role,x0,...,xd,target` (empty target for PDE points).
    pub fn to_csv(&self) -> String {
        let dim = self.pde.dim();
        let mut out = String::from("role");
        for d in 0..dim {
            out.push_str(&format!(",x{d}"));
        }
        out.push_str(",target\n");
        let mut row = |role: &str, p: &[f64], target: Option<f64>| {
            out.push_str(role);
            for v in p {
                out.push_str(&format!(",{v}"));
            }
            match target {
                Some(t) => out.push_str(&format!(",{t}\n")),
                None => out.push_str(",\n"),
            }
        };
        for p in self.pde.iter() {
            row("pde", p, None);
        }
        for (p, &t) in self.initial.points.iter().zip(&self.initial.targets) {
            row("initial", p, Some(t));
        }
        for (p, &t) in self.boundary.points.iter().zip(&self.boundary.targets) {
            row("boundary", p, Some(t));
        }
        for (p, &t) in self.data.points.iter().zip(&self.data.targets) {
            row("data", p, Some(t));
        }
        out
    }
}

/// Build the standard training sample set for the 1D slab problem: LHS
/// collocation points over (x, t), supervised initial points at t = 0 and
/// zero-flux boundary points at x = ±a/2 spread over time.
pub fn sample_p1(
    spec: &crate::physics::ProblemP1Spec,
    n_pde: usize,
    n_initial: usize,
    n_boundary: usize,
    rng: &mut ChaCha8Rng,
) -> SampleSet {
    let (lo, hi) = spec.domain();
    let mut s = SampleSet::new(lo.clone(), hi.clone());
    s.pde = lhs_sample(rng, &lo, &hi, n_pde);
    for p in lhs_sample(rng, &[lo[0]], &[hi[0]], n_initial).iter() {
        s.initial.push(&[p[0], 0.0], spec.initial_flux(p[0]));
    }
    let half = spec.a / 2.0;
    let n_times = n_boundary.div_ceil(2);
    for p in lhs_sample(rng, &[lo[1]], &[hi[1]], n_times).iter() {
        if s.boundary.len() < n_boundary {
            s.boundary.push(&[-half, p[0]], 0.0);
        }
        if s.boundary.len() < n_boundary {
            s.boundary.push(&[half, p[0]], 0.0);
        }
    }
    s
}

/// Build the standard training sample set for the 2D square problem: LHS
/// collocation points over (x, y, t), supervised initial points at t = 0 and
/// zero-flux boundary points cycled over the four edges.
pub fn sample_p2(
    spec: &crate::physics::ProblemP2Spec,
    n_pde: usize,
    n_initial: usize,
    n_boundary: usize,
    rng: &mut ChaCha8Rng,
) -> SampleSet {
    let (lo, hi) = spec.domain();
    let w = spec.half_width;
    let mut s = SampleSet::new(lo.clone(), hi.clone());
    s.pde = lhs_sample(rng, &lo, &hi, n_pde);
    for p in lhs_sample(rng, &lo[..2], &hi[..2], n_initial).iter() {
        s.initial.push(&[p[0], p[1], 0.0], spec.initial_flux(p[0], p[1]));
    }
    // (edge coordinate, time) pairs; edges rotate left/right/bottom/top.
    for (i, p) in lhs_sample(rng, &[-w, lo[2]], &[w, hi[2]], n_boundary)
        .iter()
        .enumerate()
    {
        let (u, t) = (p[0], p[1]);
        let point = match i % 4 {
            0 => [-w, u, t],
            1 => [w, u, t],
            2 => [u, -w, t],
            _ => [u, w, t],
        };
        s.boundary.push(&point, 0.0);
    }
    s
}
