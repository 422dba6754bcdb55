//! Modal series solution of the 1D transient slab problem.
//!
//! On the slab [-a/2, a/2] with zero-flux ends, the flux separates into
//! cosine modes `cos(B_n x)` with `B_n = (2n-1) pi / a`. Each mode evolves
//! as `exp(r_n t)` with `r_n = D v (k_inf - 1 - B_n^2 L^2) / L^2`, so the
//! full solution is a cosine series with exponential time factors. The
//! coefficients come from projecting the initial distribution onto the
//! modes with panel-based Gauss-Legendre quadrature.

use super::ProblemP1Spec;
use crate::autodiff::DerivativeBundle;

/// 5-point Gauss-Legendre nodes and weights on [-1, 1].
const GL_NODES: [f64; 5] = [
    -0.906179845938664,
    -0.5384693101056831,
    0.0,
    0.5384693101056831,
    0.906179845938664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.23692688505618908,
    0.47862867049936647,
    0.5688888888888889,
    0.47862867049936647,
    0.23692688505618908,
];

/// Truncated modal expansion of the P1 flux.
#[derive(Debug, Clone)]
pub struct SeriesSolution {
    a: f64,
    dv: f64,
    l2: f64,
    k_inf: f64,
    coeffs: Vec<f64>,
}

impl SeriesSolution {
    /// Default mode count; the coefficients of both benchmark initial
    /// shapes decay like 1/n^3, so 960 modes put the truncation tail
    /// below 1e-9 of the leading coefficient.
    pub const DEFAULT_MODES: usize = 960;

    /// Project the initial distribution of `spec` onto the first
    /// `DEFAULT_MODES` cosine modes.
    pub fn project(spec: &ProblemP1Spec) -> SeriesSolution {
        SeriesSolution::project_with_modes(spec, SeriesSolution::DEFAULT_MODES)
    }

    pub fn project_with_modes(spec: &ProblemP1Spec, n_modes: usize) -> SeriesSolution {
        SeriesSolution::project_fn(spec, n_modes, |x| spec.initial_flux(x))
    }

    /// Project an arbitrary initial shape. The quadrature uses 5-point
    /// Gauss-Legendre panels, with the panel count growing with the mode
    /// frequency so every oscillation is resolved.
    pub fn project_fn(
        spec: &ProblemP1Spec,
        n_modes: usize,
        ic: impl Fn(f64) -> f64,
    ) -> SeriesSolution {
        assert!(n_modes >= 1, "series needs at least one mode");
        let a = spec.a;
        let (lo, hi) = (-0.5 * a, 0.5 * a);
        let mut coeffs = Vec::with_capacity(n_modes);
        for n in 1..=n_modes {
            let b = (2 * n - 1) as f64 * std::f64::consts::PI / a;
            let panels = 32.max(6 * (2 * n - 1));
            let h = (hi - lo) / panels as f64;
            let mut integral = 0.0;
            for p in 0..panels {
                let c = lo + (p as f64 + 0.5) * h;
                let mut acc = 0.0;
                for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
                    let x = c + 0.5 * h * node;
                    acc += weight * ic(x) * (b * x).cos();
                }
                integral += 0.5 * h * acc;
            }
            coeffs.push(2.0 / a * integral);
        }
        SeriesSolution { a, dv: spec.d * spec.v, l2: spec.l2, k_inf: spec.k_inf, coeffs }
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient of mode n (1-based).
    pub fn coefficient(&self, n: usize) -> f64 {
        self.coeffs[n - 1]
    }

    /// Transverse wavenumber of mode n (1-based): (2n-1) pi / a.
    pub fn buckling(&self, n: usize) -> f64 {
        (2 * n - 1) as f64 * std::f64::consts::PI / self.a
    }

    /// Exponential growth rate of mode n (1-based):
    /// `D v (k_inf - 1 - B_n^2 L^2) / L^2`.
    pub fn modal_rate(&self, n: usize) -> f64 {
        let b = self.buckling(n);
        self.dv * (self.k_inf - 1.0 - b * b * self.l2) / self.l2
    }

    /// Heuristic truncation bound: the largest coefficient magnitude among
    /// the last three modes. The modes alternate in sign and decay
    /// monotonically in magnitude, so the first omitted term bounds the
    /// truncation error at t = 0; later in time the tail only shrinks.
    pub fn tail_bound(&self) -> f64 {
        let n = self.coeffs.len();
        self.coeffs[n.saturating_sub(3)..]
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()))
    }

    /// True when the truncation tail exceeds 1e-9 of the leading
    /// coefficient; callers should then re-project with more modes.
    pub fn has_truncation_warning(&self) -> bool {
        let lead = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        self.tail_bound() > 1e-9 * lead
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        let mut phi = 0.0;
        for n in 1..=self.coeffs.len() {
            let b = self.buckling(n);
            let amp = self.coeffs[n - 1] * (self.modal_rate(n) * t).exp();
            phi += amp * (b * x).cos();
        }
        phi
    }

    /// Value plus first and pure second derivatives in (x, t), packaged
    /// the same way the differentiation engine reports them.
    pub fn eval_with_derivs(&self, x: f64, t: f64) -> DerivativeBundle {
        let mut v = 0.0;
        let (mut dx, mut dt, mut dxx, mut dtt) = (0.0, 0.0, 0.0, 0.0);
        for n in 1..=self.coeffs.len() {
            let b = self.buckling(n);
            let r = self.modal_rate(n);
            let amp = self.coeffs[n - 1] * (r * t).exp();
            let (s, c) = (b * x).sin_cos();
            v += amp * c;
            dx -= amp * b * s;
            dt += amp * r * c;
            dxx -= amp * b * b * c;
            dtt += amp * r * r * c;
        }
        DerivativeBundle { value: v, grad_input: vec![dx, dt], hess_diag: vec![dxx, dtt] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{residual_p1, InitialConditionId, ProblemP1Spec};
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// Closed-form projection coefficients for the first benchmark initial
    /// shape on a unit slab, worked out term by term from the product
    /// formulas for cosine integrals.
    fn phi1_coefficient(n: usize) -> f64 {
        let nf = n as f64;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let first = if n == 1 { 0.5 } else { 0.0 };
        let second = sign * (1.0 / ((2.0 * nf - 3.0) * PI) + 1.0 / ((2.0 * nf + 1.0) * PI));
        let third = -sign * 2.0 / ((2.0 * nf - 1.0) * PI);
        2.0 * (first - 0.4 * second - 0.4 * third)
    }

    fn phi2_coefficient(n: usize) -> f64 {
        let nf = n as f64;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let second = sign * (1.0 / ((2.0 * nf - 3.0) * PI) + 1.0 / ((2.0 * nf + 1.0) * PI));
        let third = -sign * 2.0 / ((2.0 * nf - 1.0) * PI);
        2.0 * (0.5 * second + 0.5 * third)
    }

    #[test]
    fn quadrature_matches_closed_form_coefficients() {
        let spec = ProblemP1Spec::benchmark(InitialConditionId::Phi1, 1.0041);
        let series = SeriesSolution::project_with_modes(&spec, 60);
        for n in 1..=60 {
            assert_abs_diff_eq!(series.coefficient(n), phi1_coefficient(n), epsilon = 1e-12);
        }
        let spec2 = ProblemP1Spec::benchmark(InitialConditionId::Phi2, 1.0041);
        let series2 = SeriesSolution::project_with_modes(&spec2, 60);
        for n in 1..=60 {
            assert_abs_diff_eq!(series2.coefficient(n), phi2_coefficient(n), epsilon = 1e-12);
        }
    }

    #[test]
    fn series_reproduces_the_initial_condition() {
        for ic in [InitialConditionId::Phi1, InitialConditionId::Phi2] {
            let spec = ProblemP1Spec::benchmark(ic, 1.0041);
            let series = SeriesSolution::project(&spec);
            assert!(!series.has_truncation_warning());
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            for _ in 0..200 {
                let x = rng.gen_range(-0.5..0.5);
                assert_abs_diff_eq!(series.eval(x, 0.0), spec.initial_flux(x), epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn series_satisfies_the_pde_pointwise() {
        let spec = ProblemP1Spec::benchmark(InitialConditionId::Phi1, 1.0041);
        let series = SeriesSolution::project(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x = rng.gen_range(-0.5..0.5);
            let t = rng.gen_range(0.0..spec.t_end);
            let bundle = series.eval_with_derivs(x, t);
            assert!(residual_p1(&spec, &bundle).abs() < 1e-7, "residual at ({x}, {t})");
        }
    }

    #[test]
    fn single_mode_projection_is_exact() {
        let spec = ProblemP1Spec::benchmark(InitialConditionId::Phi1, 1.002);
        let series = SeriesSolution::project_fn(&spec, 10, |x| (PI * x).cos());
        assert_abs_diff_eq!(series.coefficient(1), 1.0, epsilon = 1e-13);
        for n in 2..=10 {
            assert_abs_diff_eq!(series.coefficient(n), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn fundamental_mode_decays_at_the_analytical_rate() {
        // Slightly subcritical slab: the amplitude at the end of the window
        // should drop to about 52 percent of its initial value.
        let spec = ProblemP1Spec::benchmark(InitialConditionId::Phi1, 1.0001);
        let series = SeriesSolution::project(&spec);
        let ratio = (series.modal_rate(1) * spec.t_end).exp();
        assert_abs_diff_eq!(ratio, 0.5199, epsilon = 1e-4);
    }

    #[test]
    fn critical_slab_fundamental_mode_is_stationary() {
        let mut spec = ProblemP1Spec::benchmark(InitialConditionId::Phi1, 1.0);
        spec.k_inf = spec.critical_k_inf();
        let series = SeriesSolution::project(&spec);
        assert_abs_diff_eq!(series.modal_rate(1), 0.0, epsilon = 1e-9);
        // Higher modes still die out.
        assert!(series.modal_rate(2) < 0.0);
    }

    #[test]
    fn series_vanishes_on_the_slab_boundary() {
        let spec = ProblemP1Spec::benchmark(InitialConditionId::Phi2, 1.0041);
        let series = SeriesSolution::project(&spec);
        for t in [0.0, 0.005, 0.015] {
            assert_abs_diff_eq!(series.eval(0.5, t), 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(series.eval(-0.5, t), 0.0, epsilon = 1e-9);
        }
    }
}
