//! Classical reference solvers used as ground truth: explicit
//! finite-difference time stepping for the transient problems and a
//! two-group power-iteration eigensolver for the steady problems.

use crate::error::{Error, Result};
use crate::physics::{EdgeBc, MaterialMap, ProblemP1Spec, ProblemP2Spec};
use crate::sampling::SupervisedSet;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Settings for an explicit finite-difference run.
#[derive(Debug, Clone)]
pub struct FdmConfig {
    /// Intervals per spatial axis (nodes = nx + 1 including both ends).
    pub nx: usize,
    pub dt: f64,
    /// Times at which the field is recorded (snapped to the nearest step).
    pub record_times: Vec<f64>,
}

/// One recorded time level.
#[derive(Debug, Clone)]
pub struct FieldSnapshot {
    pub t: f64,
    /// Node values; row-major `[j][i]` for 2D.
    pub values: Vec<f64>,
}

/// Node coordinates plus recorded time levels of an FDM run.
#[derive(Debug, Clone)]
pub struct FieldGrid {
    pub xs: Vec<f64>,
    /// Empty for 1D runs.
    pub ys: Vec<f64>,
    pub snapshots: Vec<FieldSnapshot>,
}

impl FieldGrid {
    pub fn is_2d(&self) -> bool {
        !self.ys.is_empty()
    }

    /// Value at node i (1D) of snapshot s.
    pub fn value_1d(&self, s: usize, i: usize) -> f64 {
        self.snapshots[s].values[i]
    }

    /// Value at node (i, j) of snapshot s.
    pub fn value_2d(&self, s: usize, i: usize, j: usize) -> f64 {
        self.snapshots[s].values[j * self.xs.len() + i]
    }

    /// CSV dump: `t,x[,y],phi` with one row per node per snapshot.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.is_2d() {
            out.push_str("t,x,y,phi\n");
            for s in &self.snapshots {
                for (j, y) in self.ys.iter().enumerate() {
                    for (i, x) in self.xs.iter().enumerate() {
                        out.push_str(&format!("{},{},{},{}\n", s.t, x, y, s.values[j * self.xs.len() + i]));
                    }
                }
            }
        } else {
            out.push_str("t,x,phi\n");
            for s in &self.snapshots {
                for (i, x) in self.xs.iter().enumerate() {
                    out.push_str(&format!("{},{},{}\n", s.t, x, s.values[i]));
                }
            }
        }
        out
    }
}

fn snap_steps(record_times: &[f64], dt: f64, n_steps: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = record_times
        .iter()
        .map(|t| ((t / dt).round() as usize).min(n_steps))
        .collect();
    steps.sort_unstable();
    steps.dedup();
    steps
}

/// Explicit time stepping of the 1D slab problem with zero-flux ends.
///
/// Stability requires `D v dt * 2 / dx^2 <= 1`; a violating step size is
/// rejected before any work is done.
pub fn fdm_evolve_p1(spec: &ProblemP1Spec, cfg: &FdmConfig) -> Result<FieldGrid> {
    fdm_evolve_p1_with_ic(spec, cfg, |x| spec.initial_flux(x))
}

/// Same stepper with an explicit initial shape (used for mode studies).
pub fn fdm_evolve_p1_with_ic(
    spec: &ProblemP1Spec,
    cfg: &FdmConfig,
    ic: impl Fn(f64) -> f64,
) -> Result<FieldGrid> {
    let nx = cfg.nx;
    if nx < 2 {
        return Err(Error::InvalidConfig("fdm needs nx >= 2".into()));
    }
    let dx = spec.a / nx as f64;
    let dv = spec.d * spec.v;
    let factor = dv * cfg.dt * 2.0 / (dx * dx);
    if factor > 1.0 {
        return Err(Error::UnstableStep { factor });
    }
    let xs: Vec<f64> = (0..=nx).map(|i| -0.5 * spec.a + i as f64 * dx).collect();
    let mut phi: Vec<f64> = xs.iter().map(|&x| ic(x)).collect();
    phi[0] = 0.0;
    phi[nx] = 0.0;

    let n_steps = (spec.t_end / cfg.dt).round() as usize;
    let record = snap_steps(&cfg.record_times, cfg.dt, n_steps);
    let mut snapshots = Vec::new();
    let mut next_record = 0;
    let growth = (spec.k_inf - 1.0) / spec.l2;
    let mut scratch = phi.clone();
    for step in 0..=n_steps {
        if next_record < record.len() && record[next_record] == step {
            snapshots.push(FieldSnapshot { t: step as f64 * cfg.dt, values: phi.clone() });
            next_record += 1;
        }
        if step == n_steps {
            break;
        }
        for i in 1..nx {
            let lap = (phi[i - 1] - 2.0 * phi[i] + phi[i + 1]) / (dx * dx);
            scratch[i] = phi[i] + cfg.dt * dv * (lap + growth * phi[i]);
        }
        scratch[0] = 0.0;
        scratch[nx] = 0.0;
        std::mem::swap(&mut phi, &mut scratch);
        if !phi[nx / 2].is_finite() {
            return Err(Error::Divergence { context: format!("fdm step {step}") });
        }
    }
    Ok(FieldGrid { xs, ys: Vec::new(), snapshots })
}

/// Explicit time stepping of the 2D square problem with zero-flux edges.
pub fn fdm_evolve_p2(spec: &ProblemP2Spec, cfg: &FdmConfig) -> Result<FieldGrid> {
    let nx = cfg.nx;
    if nx < 2 {
        return Err(Error::InvalidConfig("fdm needs nx >= 2".into()));
    }
    let side = 2.0 * spec.half_width;
    let dx = side / nx as f64;
    let dv = spec.d * spec.v;
    let factor = dv * cfg.dt * 2.0 * 2.0 / (dx * dx);
    if factor > 1.0 {
        return Err(Error::UnstableStep { factor });
    }
    let xs: Vec<f64> = (0..=nx).map(|i| -spec.half_width + i as f64 * dx).collect();
    let ys = xs.clone();
    let w = nx + 1;
    let mut phi = vec![0.0; w * w];
    for (j, &y) in ys.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            if i > 0 && i < nx && j > 0 && j < nx {
                phi[j * w + i] = spec.initial_flux(x, y);
            }
        }
    }

    let n_steps = (spec.t_end / cfg.dt).round() as usize;
    let record = snap_steps(&cfg.record_times, cfg.dt, n_steps);
    let mut snapshots = Vec::new();
    let mut next_record = 0;
    let growth = (spec.k_inf - 1.0) / spec.l2;
    let inv_dx2 = 1.0 / (dx * dx);
    let mut scratch = phi.clone();
    for step in 0..=n_steps {
        if next_record < record.len() && record[next_record] == step {
            snapshots.push(FieldSnapshot { t: step as f64 * cfg.dt, values: phi.clone() });
            next_record += 1;
        }
        if step == n_steps {
            break;
        }
        for j in 1..nx {
            for i in 1..nx {
                let c = phi[j * w + i];
                let lap = (phi[j * w + i - 1] + phi[j * w + i + 1] + phi[(j - 1) * w + i]
                    + phi[(j + 1) * w + i]
                    - 4.0 * c)
                    * inv_dx2;
                scratch[j * w + i] = c + cfg.dt * dv * (lap + growth * c);
            }
        }
        std::mem::swap(&mut phi, &mut scratch);
        if !phi[(nx / 2) * w + nx / 2].is_finite() {
            return Err(Error::Divergence { context: format!("fdm step {step}") });
        }
    }
    Ok(FieldGrid { xs, ys, snapshots })
}

/// Converged two-group eigenpair on a refined cell grid.
#[derive(Debug, Clone)]
pub struct EigenSolveResult {
    pub k_eff: f64,
    /// Fine cells per axis.
    pub nx: usize,
    pub ny: usize,
    /// Fine cell edge length (cm).
    pub h: f64,
    /// Fast flux per fine cell, row-major, 0 outside the domain.
    pub flux1: Vec<f64>,
    /// Thermal flux per fine cell.
    pub flux2: Vec<f64>,
    /// Cell activity mask.
    pub active: Vec<bool>,
    pub iterations: usize,
    /// Estimated ratio of successive k increments (dominance ratio).
    pub dominance_ratio: f64,
}

impl EigenSolveResult {
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Center coordinates of fine cell (i, j).
    pub fn position(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h)
    }

    /// CSV dump `x,y,flux1,flux2` over active cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,flux1,flux2\n");
        for j in 0..self.ny {
            for i in 0..self.nx {
                let c = self.idx(i, j);
                if self.active[c] {
                    let (x, y) = self.position(i, j);
                    out.push_str(&format!("{},{},{},{}\n", x, y, self.flux1[c], self.flux2[c]));
                }
            }
        }
        out
    }
}

struct GroupSystem {
    /// Diagonal (removal + coupling sum) per cell.
    diag: Vec<f64>,
    /// Face couplings to the four neighbors (left, right, down, up).
    coup: Vec<[f64; 4]>,
}

/// Assemble the finite-volume diffusion operator of one group: harmonic
/// face diffusion, zero-flux Dirichlet on external/stepped faces, zero
/// current on symmetry faces.
fn assemble_group(
    map: &MaterialMap,
    refine: usize,
    active: &[bool],
    nx: usize,
    ny: usize,
    h: f64,
    d_of: impl Fn(usize, usize) -> f64,
    removal_of: impl Fn(usize, usize) -> f64,
) -> GroupSystem {
    let [bc_l, bc_r, bc_b, bc_t] = map.edge_bc();
    let mut diag = vec![0.0; nx * ny];
    let mut coup = vec![[0.0; 4]; nx * ny];
    let _ = refine;
    for j in 0..ny {
        for i in 0..nx {
            let c = j * nx + i;
            if !active[c] {
                continue;
            }
            let dc = d_of(i, j);
            let mut total = removal_of(i, j);
            let neighbors: [(isize, isize, usize, EdgeBc); 4] = [
                (-1, 0, 0, bc_l),
                (1, 0, 1, bc_r),
                (0, -1, 2, bc_b),
                (0, 1, 3, bc_t),
            ];
            for (di, dj, slot, edge) in neighbors {
                let (ni, nj) = (i as isize + di, j as isize + dj);
                let inside = ni >= 0 && nj >= 0 && (ni as usize) < nx && (nj as usize) < ny;
                if inside && active[nj as usize * nx + ni as usize] {
                    let dn = d_of(ni as usize, nj as usize);
                    let face = 2.0 * dc * dn / (dc + dn) / (h * h);
                    coup[c][slot] = face;
                    total += face;
                } else if inside || edge == EdgeBc::ZeroFlux {
                    // Stepped internal boundary or a zero-flux box edge:
                    // flux pinned to zero at the face, half a cell away.
                    total += 2.0 * dc / (h * h);
                }
                // Symmetry edges contribute nothing.
            }
            diag[c] = total;
        }
    }
    GroupSystem { diag, coup }
}

/// Red-black Gauss-Seidel solve of `A phi = q` to a relative L-inf
/// tolerance of 1e-10.
fn gauss_seidel(
    sys: &GroupSystem,
    active: &[bool],
    nx: usize,
    ny: usize,
    q: &[f64],
    phi: &mut [f64],
) -> Result<()> {
    let tol = 1e-10;
    for sweep in 0..20_000 {
        let mut max_change = 0.0f64;
        let mut max_val = 0.0f64;
        for color in 0..2 {
            for j in 0..ny {
                for i in 0..nx {
                    if (i + j) % 2 != color {
                        continue;
                    }
                    let c = j * nx + i;
                    if !active[c] {
                        continue;
                    }
                    let mut rhs = q[c];
                    if i > 0 {
                        rhs += sys.coup[c][0] * phi[c - 1];
                    }
                    if i + 1 < nx {
                        rhs += sys.coup[c][1] * phi[c + 1];
                    }
                    if j > 0 {
                        rhs += sys.coup[c][2] * phi[c - nx];
                    }
                    if j + 1 < ny {
                        rhs += sys.coup[c][3] * phi[c + nx];
                    }
                    let new = rhs / sys.diag[c];
                    max_change = max_change.max((new - phi[c]).abs());
                    max_val = max_val.max(new.abs());
                    phi[c] = new;
                }
            }
        }
        if max_change <= tol * max_val.max(1e-300) {
            return Ok(());
        }
        if sweep == 19_999 {
            break;
        }
    }
    Err(Error::NoConvergence { solver: "gauss-seidel".into(), iterations: 20_000 })
}

/// Power iteration on the fission source for the two-group eigenproblem on
/// `map`, discretized with `refine` fine cells per map cell.
pub fn eigensolve_two_group(map: &MaterialMap, refine: usize) -> Result<EigenSolveResult> {
    if refine == 0 {
        return Err(Error::InvalidConfig("refine must be >= 1".into()));
    }
    let nx = map.nx() * refine;
    let ny = map.ny() * refine;
    let h = map.cell() / refine as f64;
    let mat_id = |i: usize, j: usize| map.cell_id(i / refine, j / refine);
    let active: Vec<bool> = (0..nx * ny)
        .map(|c| mat_id(c % nx, c / nx) != 0)
        .collect();
    let mat = |i: usize, j: usize| map.material(mat_id(i, j)).expect("active cell material");

    let b2ax = map.axial_buckling();
    let sys1 = assemble_group(map, refine, &active, nx, ny, h, |i, j| mat(i, j).d1, |i, j| {
        mat(i, j).removal_1(b2ax)
    });
    let sys2 = assemble_group(map, refine, &active, nx, ny, h, |i, j| mat(i, j).d2, |i, j| {
        mat(i, j).removal_2(b2ax)
    });

    let n = nx * ny;
    let mut phi1 = vec![0.0; n];
    let mut phi2 = vec![0.0; n];
    let mut fissile = false;
    for j in 0..ny {
        for i in 0..nx {
            let c = j * nx + i;
            if active[c] {
                phi1[c] = 1.0;
                phi2[c] = 1.0;
                let m = mat(i, j);
                fissile |= m.nu_f1 > 0.0 || m.nu_f2 > 0.0;
            }
        }
    }
    if !fissile {
        return Err(Error::InvalidConfig("map has no fissile cells".into()));
    }

    let fission = |phi1: &[f64], phi2: &[f64], out: &mut [f64]| {
        for j in 0..ny {
            for i in 0..nx {
                let c = j * nx + i;
                out[c] = if active[c] {
                    let m = mat(i, j);
                    m.nu_f1 * phi1[c] + m.nu_f2 * phi2[c]
                } else {
                    0.0
                };
            }
        }
    };

    let mut source = vec![0.0; n];
    fission(&phi1, &phi2, &mut source);
    let mut k = 1.0;
    let mut q = vec![0.0; n];
    let mut new_source = vec![0.0; n];
    let mut prev_dk = f64::NAN;
    let mut dominance = f64::NAN;
    let max_outer = 10_000;
    for outer in 1..=max_outer {
        // chi = (1, 0): all fission neutrons are born fast.
        for c in 0..n {
            q[c] = source[c] / k;
        }
        gauss_seidel(&sys1, &active, nx, ny, &q, &mut phi1)?;
        for j in 0..ny {
            for i in 0..nx {
                let c = j * nx + i;
                q[c] = if active[c] { mat(i, j).sigma_12 * phi1[c] } else { 0.0 };
            }
        }
        gauss_seidel(&sys2, &active, nx, ny, &q, &mut phi2)?;
        fission(&phi1, &phi2, &mut new_source);
        let sum_old: f64 = source.iter().sum();
        let sum_new: f64 = new_source.iter().sum();
        let k_new = k * sum_new / sum_old;

        // L-inf change of the max-normalized source.
        let max_new = new_source.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
        let max_old = source.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
        let src_change = source
            .iter()
            .zip(&new_source)
            .map(|(o, nv)| (nv / max_new - o / max_old).abs())
            .fold(0.0f64, f64::max);

        let dk = (k_new - k).abs();
        if prev_dk.is_finite() && prev_dk > 0.0 {
            dominance = dk / prev_dk;
        }
        prev_dk = dk;
        std::mem::swap(&mut source, &mut new_source);
        k = k_new;
        if dk < 1e-8 && src_change < 1e-7 {
            // Normalize by the global flux maximum over both groups.
            let peak = phi1
                .iter()
                .chain(phi2.iter())
                .cloned()
                .fold(0.0f64, f64::max)
                .max(1e-300);
            for v in phi1.iter_mut().chain(phi2.iter_mut()) {
                *v /= peak;
            }
            return Ok(EigenSolveResult {
                k_eff: k,
                nx,
                ny,
                h,
                flux1: phi1,
                flux2: phi2,
                active,
                iterations: outer,
                dominance_ratio: dominance,
            });
        }
    }
    Err(Error::NoConvergence { solver: "power iteration".into(), iterations: max_outer })
}

/// Power iteration for the adjoint (importance) eigenpair of the two-group
/// problem on `map`: the group-to-group couplings are transposed, so the
/// fast importance is driven by both fission yields and the downscatter
/// source now feeds group 1 from group 2. The eigenvalue equals the forward
/// `k_eff` up to iteration tolerance.
pub fn adjoint_eigensolve_two_group(map: &MaterialMap, refine: usize) -> Result<EigenSolveResult> {
    if refine == 0 {
        return Err(Error::InvalidConfig("refine must be >= 1".into()));
    }
    let nx = map.nx() * refine;
    let ny = map.ny() * refine;
    let h = map.cell() / refine as f64;
    let mat_id = |i: usize, j: usize| map.cell_id(i / refine, j / refine);
    let active: Vec<bool> = (0..nx * ny)
        .map(|c| mat_id(c % nx, c / nx) != 0)
        .collect();
    let mat = |i: usize, j: usize| map.material(mat_id(i, j)).expect("active cell material");

    let b2ax = map.axial_buckling();
    let sys1 = assemble_group(map, refine, &active, nx, ny, h, |i, j| mat(i, j).d1, |i, j| {
        mat(i, j).removal_1(b2ax)
    });
    let sys2 = assemble_group(map, refine, &active, nx, ny, h, |i, j| mat(i, j).d2, |i, j| {
        mat(i, j).removal_2(b2ax)
    });

    let n = nx * ny;
    let mut psi1 = vec![0.0; n];
    let mut psi2 = vec![0.0; n];
    let mut fissile = false;
    for j in 0..ny {
        for i in 0..nx {
            let c = j * nx + i;
            if active[c] {
                psi1[c] = 1.0;
                psi2[c] = 1.0;
                let m = mat(i, j);
                fissile |= m.nu_f1 > 0.0 || m.nu_f2 > 0.0;
            }
        }
    }
    if !fissile {
        return Err(Error::InvalidConfig("map has no fissile cells".into()));
    }

    // The transposed fission operator maps (psi1, psi2) to
    // (nu_f1 * psi1, nu_f2 * psi1); only the fast importance enters.
    let mut k = 1.0;
    let mut q = vec![0.0; n];
    let mut measure_old = {
        let mut s = 0.0;
        for j in 0..ny {
            for i in 0..nx {
                let c = j * nx + i;
                if active[c] {
                    let m = mat(i, j);
                    s += (m.nu_f1 + m.nu_f2) * psi1[c];
                }
            }
        }
        s
    };
    let mut prev_dk = f64::NAN;
    let mut dominance = f64::NAN;
    let max_outer = 10_000;
    for outer in 1..=max_outer {
        for j in 0..ny {
            for i in 0..nx {
                let c = j * nx + i;
                q[c] = if active[c] { mat(i, j).nu_f2 * psi1[c] / k } else { 0.0 };
            }
        }
        gauss_seidel(&sys2, &active, nx, ny, &q, &mut psi2)?;
        for j in 0..ny {
            for i in 0..nx {
                let c = j * nx + i;
                q[c] = if active[c] {
                    let m = mat(i, j);
                    m.nu_f1 * psi1[c] / k + m.sigma_12 * psi2[c]
                } else {
                    0.0
                };
            }
        }
        let old_psi1 = psi1.clone();
        gauss_seidel(&sys1, &active, nx, ny, &q, &mut psi1)?;

        let mut measure_new = 0.0;
        let mut change = 0.0f64;
        let max_new = psi1.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
        let max_old = old_psi1.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
        for j in 0..ny {
            for i in 0..nx {
                let c = j * nx + i;
                if active[c] {
                    let m = mat(i, j);
                    measure_new += (m.nu_f1 + m.nu_f2) * psi1[c];
                    change = change.max((psi1[c] / max_new - old_psi1[c] / max_old).abs());
                }
            }
        }
        let k_new = k * measure_new / measure_old;
        measure_old = measure_new;
        let dk = (k_new - k).abs();
        if prev_dk.is_finite() && prev_dk > 0.0 {
            dominance = dk / prev_dk;
        }
        prev_dk = dk;
        k = k_new;
        if dk < 1e-8 && change < 1e-7 {
            let peak = psi1
                .iter()
                .chain(psi2.iter())
                .cloned()
                .fold(0.0f64, f64::max)
                .max(1e-300);
            for v in psi1.iter_mut().chain(psi2.iter_mut()) {
                *v /= peak;
            }
            return Ok(EigenSolveResult {
                k_eff: k,
                nx,
                ny,
                h,
                flux1: psi1,
                flux2: psi2,
                active,
                iterations: outer,
                dominance_ratio: dominance,
            });
        }
    }
    Err(Error::NoConvergence { solver: "adjoint power iteration".into(), iterations: max_outer })
}

/// Adjoint-weighted eigenvalue functional: samples `flux` (fast, thermal) at
/// the cell centers of the adjoint grid and returns
/// `<psi, F phi> / <psi, M phi>`, the first-order perturbation estimate of
/// `k_eff`. The error is second order in the flux error, so the estimate is
/// far less sensitive to shape imperfections than a residual fit.
pub fn keff_from_flux(
    map: &MaterialMap,
    adjoint: &EigenSolveResult,
    mut flux: impl FnMut(f64, f64) -> (f64, f64),
) -> Result<f64> {
    let (nx, ny, h) = (adjoint.nx, adjoint.ny, adjoint.h);
    let refine = nx / map.nx();
    if refine == 0 || refine * map.nx() != nx || refine * map.ny() != ny {
        return Err(Error::InvalidConfig(
            "adjoint grid does not refine the material map".into(),
        ));
    }
    let mat_id = |i: usize, j: usize| map.cell_id(i / refine, j / refine);
    let mat = |i: usize, j: usize| map.material(mat_id(i, j)).expect("active cell material");
    let active = &adjoint.active;

    let b2ax = map.axial_buckling();
    let sys1 = assemble_group(map, refine, active, nx, ny, h, |i, j| mat(i, j).d1, |i, j| {
        mat(i, j).removal_1(b2ax)
    });
    let sys2 = assemble_group(map, refine, active, nx, ny, h, |i, j| mat(i, j).d2, |i, j| {
        mat(i, j).removal_2(b2ax)
    });

    let n = nx * ny;
    let mut phi1 = vec![0.0; n];
    let mut phi2 = vec![0.0; n];
    for j in 0..ny {
        for i in 0..nx {
            let c = j * nx + i;
            if active[c] {
                let (x, y) = adjoint.position(i, j);
                let (f1, f2) = flux(x, y);
                phi1[c] = f1;
                phi2[c] = f2;
            }
        }
    }

    let apply = |sys: &GroupSystem, phi: &[f64], c: usize, i: usize, j: usize| -> f64 {
        let mut v = sys.diag[c] * phi[c];
        if i > 0 {
            v -= sys.coup[c][0] * phi[c - 1];
        }
        if i + 1 < nx {
            v -= sys.coup[c][1] * phi[c + 1];
        }
        if j > 0 {
            v -= sys.coup[c][2] * phi[c - nx];
        }
        if j + 1 < ny {
            v -= sys.coup[c][3] * phi[c + nx];
        }
        v
    };

    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let c = j * nx + i;
            if !active[c] {
                continue;
            }
            let m = mat(i, j);
            num += adjoint.flux1[c] * (m.nu_f1 * phi1[c] + m.nu_f2 * phi2[c]);
            den += adjoint.flux1[c] * apply(&sys1, &phi1, c, i, j)
                + adjoint.flux2[c] * (apply(&sys2, &phi2, c, i, j) - m.sigma_12 * phi1[c]);
        }
    }
    if den.abs() < 1e-300 {
        return Err(Error::InvalidConfig("degenerate adjoint weighting".into()));
    }
    Ok(num / den)
}

/// Draw `n` distinct active grid cells by Latin hypercube over the index
/// space and pair their positions with both group fluxes.
pub fn anchors_from_oracle(
    result: &EigenSolveResult,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(SupervisedSet, SupervisedSet)> {
    let n_active = result.active.iter().filter(|a| **a).count();
    if n > n_active {
        return Err(Error::InvalidConfig(format!(
            "requested {n} anchors but the grid has {n_active} active cells"
        )));
    }
    let mut set1 = SupervisedSet::empty(2);
    let mut set2 = SupervisedSet::empty(2);
    let mut taken = vec![false; result.nx * result.ny];
    let mut placed = 0;
    // Stratified first pass over the index box, then rejection fill.
    let strat = crate::sampling::lhs_sample(
        rng,
        &[0.0, 0.0],
        &[result.nx as f64, result.ny as f64],
        n,
    );
    let mut push = |i: usize, j: usize, taken: &mut Vec<bool>, placed: &mut usize| {
        let c = j * result.nx + i;
        if result.active[c] && !taken[c] {
            taken[c] = true;
            let (x, y) = result.position(i, j);
            set1.push(&[x, y], result.flux1[c]);
            set2.push(&[x, y], result.flux2[c]);
            *placed += 1;
            true
        } else {
            false
        }
    };
    for p in strat.iter() {
        if placed == n {
            break;
        }
        let i = (p[0] as usize).min(result.nx - 1);
        let j = (p[1] as usize).min(result.ny - 1);
        push(i, j, &mut taken, &mut placed);
    }
    let mut guard = 0;
    while placed < n {
        let i = rng.gen_range(0..result.nx);
        let j = rng.gen_range(0..result.ny);
        push(i, j, &mut taken, &mut placed);
        guard += 1;
        if guard > 1_000_000 {
            return Err(Error::NoConvergence {
                solver: "anchor placement".into(),
                iterations: guard,
            });
        }
    }
    Ok((set1, set2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{InitialConditionId, SeriesSolution, TwoGroupMaterial};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use std::collections::BTreeMap;

    #[test]
    fn zero_initial_condition_stays_zero() {
        let spec = ProblemP1Spec::benchmark(InitialConditionId::Phi1, 1.0041);
        let cfg = FdmConfig { nx: 50, dt: 1e-5, record_times: vec![0.0, 0.0075, 0.015] };
        let grid = fdm_evolve_p1_with_ic(&spec, &cfg, |_| 0.0).unwrap();
        for s in &grid.snapshots {
            assert!(s.values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn unstable_step_is_rejected() {
        let spec = ProblemP1Spec::benchmark(InitialConditionId::Phi1, 1.0041);
        let cfg = FdmConfig { nx: 100, dt: 1e-3, record_times: vec![] };
        match fdm_evolve_p1(&spec, &cfg) {
            Err(Error::UnstableStep { factor }) => assert!(factor > 1.0),
            other => panic!("expected stability rejection, got {other:?}"),
        }
    }

    #[test]
    fn p1_matches_the_series_solution() {
        let spec = ProblemP1Spec::benchmark(InitialConditionId::Phi1, 1.0041);
        let cfg = FdmConfig { nx: 100, dt: 1e-5, record_times: vec![0.0075, 0.015] };
        let grid = fdm_evolve_p1(&spec, &cfg).unwrap();
        let series = SeriesSolution::project(&spec);
        let mut max_err = 0.0f64;
        let mut sq = 0.0;
        let mut count = 0;
        for s in &grid.snapshots {
            for (i, &x) in grid.xs.iter().enumerate() {
                let err = s.values[i] - series.eval(x, s.t);
                max_err = max_err.max(err.abs());
                sq += err * err;
                count += 1;
            }
        }
        assert!(max_err < 5e-4, "max err {max_err}");
        let mse = sq / count as f64;
        assert!(mse < 1e-7, "mse {mse}");
    }

    #[test]
    fn single_mode_decay_rate_matches_the_closed_form() {
        let spec = ProblemP1Spec::benchmark(InitialConditionId::Phi1, 1.0021);
        let nx = 400;
        let cfg = FdmConfig { nx, dt: 5e-7, record_times: vec![0.0, 0.015] };
        let grid =
            fdm_evolve_p1_with_ic(&spec, &cfg, |x| (std::f64::consts::PI * x / spec.a).cos())
                .unwrap();
        let center = nx / 2;
        let phi0 = grid.snapshots[0].values[center];
        let phi_end = grid.snapshots[1].values[center];
        let measured_rate = (phi_end / phi0).ln() / 0.015;
        let series = SeriesSolution::project(&spec);
        let exact_rate = series.modal_rate(1);
        assert!(
            (measured_rate - exact_rate).abs() < 0.01 * exact_rate.abs(),
            "measured {measured_rate}, exact {exact_rate}"
        );
    }

    #[test]
    fn fdm_is_second_order_in_space() {
        let spec = ProblemP1Spec::benchmark(InitialConditionId::Phi1, 1.0041);
        let series = SeriesSolution::project(&spec);
        let error_at = |nx: usize| {
            // dt scales with dx^2 so the first-order temporal error also
            // drops fourfold per halving.
            let dt = 0.015 / ((0.6 * nx as f64 * nx as f64).ceil() * 4.0);
            let cfg = FdmConfig { nx, dt, record_times: vec![0.015] };
            let grid = fdm_evolve_p1(&spec, &cfg).unwrap();
            let s = grid.snapshots.last().unwrap();
            grid.xs
                .iter()
                .enumerate()
                .map(|(i, &x)| (s.values[i] - series.eval(x, s.t)).abs())
                .fold(0.0f64, f64::max)
        };
        let coarse = error_at(50);
        let fine = error_at(100);
        let ratio = coarse / fine;
        assert!((3.2..=4.8).contains(&ratio), "convergence ratio {ratio}");
    }

    #[test]
    fn p2_zero_ic_stays_zero_and_rejects_unstable() {
        let spec = ProblemP2Spec::benchmark(1.10);
        assert!(matches!(
            fdm_evolve_p2(&spec, &FdmConfig { nx: 100, dt: 0.1, record_times: vec![] }),
            Err(Error::UnstableStep { .. })
        ));
        let cfg = FdmConfig { nx: 50, dt: 5e-3, record_times: vec![1.0] };
        let grid = fdm_evolve_p2(&spec, &cfg).unwrap();
        // Edges stay pinned at zero and the center carries flux.
        for i in 0..=50 {
            assert_eq!(grid.value_2d(0, i, 0), 0.0);
            assert_eq!(grid.value_2d(0, i, 50), 0.0);
            assert_eq!(grid.value_2d(0, 0, i), 0.0);
            assert_eq!(grid.value_2d(0, 50, i), 0.0);
        }
        assert!(grid.value_2d(0, 25, 25) > 0.0);
    }

    fn homogeneous_map(mat: TwoGroupMaterial, bc: EdgeBc) -> MaterialMap {
        let mut table = BTreeMap::new();
        table.insert(1u8, mat);
        MaterialMap::new(4, 4, 10.0, vec![1; 16], [bc; 4], table).unwrap()
    }

    #[test]
    fn reflective_homogeneous_core_reaches_the_infinite_medium_k() {
        let mat = TwoGroupMaterial::two_region_core();
        let map = homogeneous_map(mat, EdgeBc::Symmetry);
        let result = eigensolve_two_group(&map, 2).unwrap();
        assert_abs_diff_eq!(result.k_eff, mat.k_infinity(), epsilon = 1e-6);
        assert_abs_diff_eq!(result.k_eff, 1.1096, epsilon = 1e-4);
        // Flat fluxes: fast flux is the larger one, normalized to 1.
        for (c, &a) in result.active.iter().enumerate() {
            assert!(a);
            assert_abs_diff_eq!(result.flux1[c], 1.0, epsilon = 1e-8);
            assert_abs_diff_eq!(
                result.flux2[c],
                mat.sigma_12 / mat.sigma_a2,
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn symmetric_map_gives_symmetric_flux() {
        // Square two-region layout with a diagonal symmetry.
        let n = 40;
        let ring = 8;
        let mut table = BTreeMap::new();
        table.insert(1u8, TwoGroupMaterial::two_region_core());
        table.insert(2u8, TwoGroupMaterial::two_region_blanket());
        let ids: Vec<u8> = (0..n * n)
            .map(|c| {
                let (i, j) = (c % n, c / n);
                if i >= ring && i < n - ring && j >= ring && j < n - ring {
                    1
                } else {
                    2
                }
            })
            .collect();
        let map =
            MaterialMap::new(n, n, 2.0, ids, [EdgeBc::ZeroFlux; 4], table).unwrap();
        let result = eigensolve_two_group(&map, 1).unwrap();
        assert!(map.is_diagonally_symmetric());
        for j in 0..result.ny {
            for i in 0..result.nx {
                let a = result.flux1[result.idx(i, j)];
                let b = result.flux1[result.idx(j, i)];
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn fluxes_are_nonnegative_and_normalized() {
        let map = MaterialMap::iaea_quarter_core();
        let result = eigensolve_two_group(&map, 2).unwrap();
        let peak = result
            .flux1
            .iter()
            .chain(result.flux2.iter())
            .cloned()
            .fold(0.0f64, f64::max);
        assert_abs_diff_eq!(peak, 1.0, epsilon = 1e-12);
        assert!(result.flux1.iter().all(|&v| v >= 0.0));
        assert!(result.flux2.iter().all(|&v| v >= 0.0));
        assert!(result.dominance_ratio < 1.0);
    }

    #[test]
    fn iaea_k_is_in_the_benchmark_band() {
        let map = MaterialMap::iaea_quarter_core();
        let result = eigensolve_two_group(&map, 5).unwrap();
        assert_abs_diff_eq!(result.k_eff, 1.0296, epsilon = 3e-3);
    }

    #[test]
    fn anchors_are_distinct_and_match_the_grid() {
        let map = MaterialMap::iaea_quarter_core();
        let result = eigensolve_two_group(&map, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (a1, a2) = anchors_from_oracle(&result, 76, &mut rng).unwrap();
        assert_eq!(a1.len(), 76);
        assert_eq!(a2.len(), 76);
        let mut seen = std::collections::BTreeSet::new();
        for (p, &v) in a1.points.iter().zip(&a1.targets) {
            let i = (p[0] / result.h) as usize;
            let j = (p[1] / result.h) as usize;
            assert!(seen.insert((i, j)), "duplicate anchor cell ({i}, {j})");
            assert_eq!(v, result.flux1[result.idx(i, j)]);
        }
        let mut rng0 = ChaCha8Rng::seed_from_u64(7);
        let (e1, _) = anchors_from_oracle(&result, 0, &mut rng0).unwrap();
        assert!(e1.is_empty());
    }
}
