//! Experiment runners behind the CLI subcommands: `solve`, `oracle`,
//! `search`, `sweep` and `report`.

use std::fs;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::criticality::{p1_trainer, search, steady_state_metric, P1TrainerConfig};
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, KvConfig, ProblemId};
use crate::harness::metrics::{metrics_against_eigen, metrics_against_grid, MetricsReport};
use crate::loss::{sample_two_group, LambdaMode, ResidualCoeffs};
use crate::network::Network;
use crate::optimize::{dual_history_to_csv, history_to_csv, train_dual, train_single};
use crate::oracles::{
    anchors_from_oracle, eigensolve_two_group, fdm_evolve_p1, fdm_evolve_p2, EigenSolveResult,
    FdmConfig, FieldGrid, FieldSnapshot,
};
use crate::physics::{MaterialMap, ProblemP1Spec, ProblemP2Spec, SeriesSolution};
use crate::sampling::{sample_p1, sample_p2};

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Create the run directory and write the resolved config echo.
fn prepare_out(cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("config.txt"), cfg.echo())?;
    Ok(())
}

fn write(cfg: &ExperimentConfig, name: &str, contents: &str) -> Result<()> {
    fs::write(cfg.out.join(name), contents)?;
    Ok(())
}

/// Load the configured material map, or the built-in one for the problem.
pub fn load_map(cfg: &ExperimentConfig) -> Result<MaterialMap> {
    match &cfg.map_path {
        Some(p) => MaterialMap::from_file(p),
        None => Ok(match cfg.problem {
            ProblemId::P4 => MaterialMap::iaea_quarter_core(),
            _ => MaterialMap::two_region_benchmark(),
        }),
    }
}

/// Reference space-time grid for the slab problem from the analytical
/// series solution.
pub fn series_grid(spec: &ProblemP1Spec, nx: usize, nt: usize) -> FieldGrid {
    let series = SeriesSolution::project(spec);
    let half = spec.a / 2.0;
    let xs = linspace(-half, half, nx);
    let ts = linspace(0.0, spec.t_end, nt);
    let snapshots = ts
        .iter()
        .map(|&t| FieldSnapshot { t, values: xs.iter().map(|&x| series.eval(x, t)).collect() })
        .collect();
    FieldGrid { xs, ys: Vec::new(), snapshots }
}

/// Stable explicit time step for the 1D slab stepper at `nx` points.
pub fn stable_dt_p1(spec: &ProblemP1Spec, nx: usize) -> f64 {
    let dx = spec.a / (nx - 1) as f64;
    0.5 * dx * dx / (2.0 * spec.d * spec.v)
}

/// Stable explicit time step for the 2D square stepper at `nx` points per
/// axis.
pub fn stable_dt_p2(spec: &ProblemP2Spec, nx: usize) -> f64 {
    let dx = 2.0 * spec.half_width / (nx - 1) as f64;
    0.5 * dx * dx / (4.0 * spec.d * spec.v)
}

/// `solve`: train the configured PINN and emit metrics, history, field data
/// and checkpoints into the run directory.
pub fn run_solve(cfg: &ExperimentConfig) -> Result<()> {
    prepare_out(cfg)?;
    match cfg.problem {
        ProblemId::P1 => solve_p1(cfg),
        ProblemId::P2 => solve_p2(cfg),
        ProblemId::P3 | ProblemId::P4 => solve_dual(cfg),
    }
}

fn checkpoint_callback<'a>(
    cfg: &'a ExperimentConfig,
) -> impl FnMut(usize, &Network) -> Result<()> + 'a {
    move |epoch, net| {
        if cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 {
            net.save_checkpoint_file(cfg.out.join(format!("net_epoch{epoch}.ck")))?;
        }
        Ok(())
    }
}

fn solve_p1(cfg: &ExperimentConfig) -> Result<()> {
    let spec = ProblemP1Spec::benchmark(cfg.ic, cfg.k_inf);
    let (lo, hi) = spec.domain();
    let mut net = Network::init_gaussian(&cfg.net)?;
    net.set_input_box(&lo, &hi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut samples = sample_p1(&spec, cfg.n_pde, cfg.n_initial, cfg.n_boundary, &mut rng);
    let residual = ResidualCoeffs::p1(&spec);
    let mut ck = checkpoint_callback(cfg);
    let mut ck_err = None;
    let result = train_single(
        &mut net,
        &mut samples,
        &residual,
        cfg.weights,
        &cfg.train,
        &mut rng,
        |event| {
            if let Err(e) = ck(event.epoch, event.net) {
                ck_err = Some(e);
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        },
    )?;
    if let Some(e) = ck_err {
        return Err(e);
    }

    net.save_checkpoint_file(cfg.out.join("net.ck"))?;
    write(cfg, "history.csv", &history_to_csv(&result.history))?;
    write(cfg, "samples.csv", &samples.to_csv())?;

    let truth = series_grid(&spec, cfg.eval_nx, cfg.eval_times);
    let mut pred = |x: &[f64], t: f64| net.forward(&[x[0], t]);
    let metrics = metrics_against_grid(&mut pred, &truth)?;
    write(cfg, "metrics.csv", &group_metrics_csv(&[metrics]))?;

    let field = predicted_grid_1d(&net, &truth)?;
    write(cfg, "field.csv", &field.to_csv())?;

    let steady = steady_state_metric(&net, &[0.0], spec.t_end)?;
    write(
        cfg,
        "steady_state.csv",
        &format!("phi_t,delta_phi\n{},{}\n", steady.phi_t, steady.delta_phi),
    )?;
    Ok(())
}

fn predicted_grid_1d(net: &Network, template: &FieldGrid) -> Result<FieldGrid> {
    let mut out = template.clone();
    for snap in &mut out.snapshots {
        for (i, &x) in out.xs.iter().enumerate() {
            snap.values[i] = net.forward(&[x, snap.t])?;
        }
    }
    Ok(out)
}

fn solve_p2(cfg: &ExperimentConfig) -> Result<()> {
    let spec = ProblemP2Spec::benchmark(cfg.k_inf);
    let (lo, hi) = spec.domain();
    let mut net = Network::init_gaussian(&cfg.net)?;
    net.set_input_box(&lo, &hi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut samples = sample_p2(&spec, cfg.n_pde, cfg.n_initial, cfg.n_boundary, &mut rng);
    let residual = ResidualCoeffs::p2(&spec);
    let mut ck = checkpoint_callback(cfg);
    let mut ck_err = None;
    let result = train_single(
        &mut net,
        &mut samples,
        &residual,
        cfg.weights,
        &cfg.train,
        &mut rng,
        |event| {
            if let Err(e) = ck(event.epoch, event.net) {
                ck_err = Some(e);
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        },
    )?;
    if let Some(e) = ck_err {
        return Err(e);
    }

    net.save_checkpoint_file(cfg.out.join("net.ck"))?;
    write(cfg, "history.csv", &history_to_csv(&result.history))?;

    let fdm = fdm_evolve_p2(
        &spec,
        &FdmConfig {
            // Interval count; the grid then has `eval_nx` points per axis.
            nx: cfg.eval_nx - 1,
            dt: stable_dt_p2(&spec, cfg.eval_nx),
            record_times: linspace(0.0, spec.t_end, cfg.eval_times),
        },
    )?;
    let mut pred = |xy: &[f64], t: f64| net.forward(&[xy[0], xy[1], t]);
    let metrics = metrics_against_grid(&mut pred, &fdm)?;
    write(cfg, "metrics.csv", &group_metrics_csv(&[metrics]))?;
    Ok(())
}

fn solve_dual(cfg: &ExperimentConfig) -> Result<()> {
    let map = load_map(cfg)?;
    let oracle = eigensolve_two_group(&map, cfg.oracle_refine)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut samples = sample_two_group(&map, cfg.n_pde, cfg.n_boundary, &mut rng)?;
    let (d1, d2) = anchors_from_oracle(&oracle, cfg.n_anchors, &mut rng)?;
    samples.data1 = d1;
    samples.data2 = d2;

    let mut net1 = Network::init_gaussian(&cfg.net)?;
    let mut net2 =
        Network::init_gaussian(&crate::network::NetworkConfig { seed: cfg.net.seed + 1, ..cfg.net.clone() })?;
    let (lo, hi) = (samples.lo.clone(), samples.hi.clone());
    net1.set_input_box(&lo, &hi)?;
    net2.set_input_box(&lo, &hi)?;

    let lambda_mode = match cfg.problem {
        ProblemId::P3 => LambdaMode::Fixed(1.0 / cfg.k_eff),
        _ => LambdaMode::Trainable,
    };
    let result = train_dual(
        &mut net1,
        &mut net2,
        &map,
        &mut samples,
        cfg.weights,
        lambda_mode,
        &cfg.train,
        &mut rng,
        |_| ControlFlow::Continue(()),
    )?;

    net1.save_checkpoint_file(cfg.out.join("net1.ck"))?;
    net2.save_checkpoint_file(cfg.out.join("net2.ck"))?;
    write(cfg, "history.csv", &dual_history_to_csv(&result.history))?;

    let mut p1 = |x: f64, y: f64| net1.forward(&[x, y]);
    let m1 = metrics_against_eigen(&mut p1, &oracle, &oracle.flux1)?;
    let mut p2 = |x: f64, y: f64| net2.forward(&[x, y]);
    let m2 = metrics_against_eigen(&mut p2, &oracle, &oracle.flux2)?;
    write(cfg, "metrics.csv", &group_metrics_csv(&[m1, m2]))?;

    let k_pinn = 1.0 / result.lambda;
    let e_r = (k_pinn - oracle.k_eff).abs() / oracle.k_eff;
    write(
        cfg,
        "k_eff.csv",
        &format!("k_pinn,k_oracle,e_r\n{},{},{}\n", k_pinn, oracle.k_eff, e_r),
    )?;
    Ok(())
}

/// Stable metrics CSV schema shared by all problems: one row per group.
pub fn group_metrics_csv(reports: &[MetricsReport]) -> String {
    let mut out = format!("group,{}\n", MetricsReport::csv_header());
    for (g, r) in reports.iter().enumerate() {
        out.push_str(&format!("{},{}\n", g + 1, r.csv_row()));
    }
    out
}

/// `oracle`: run the classical reference solver for the configured problem
/// and emit its field data.
pub fn run_oracle(cfg: &ExperimentConfig) -> Result<()> {
    prepare_out(cfg)?;
    match cfg.problem {
        ProblemId::P1 => {
            let spec = ProblemP1Spec::benchmark(cfg.ic, cfg.k_inf);
            let grid = fdm_evolve_p1(
                &spec,
                &FdmConfig {
                    nx: cfg.oracle_nx - 1,
                    dt: stable_dt_p1(&spec, cfg.oracle_nx),
                    record_times: linspace(0.0, spec.t_end, cfg.oracle_times),
                },
            )?;
            write(cfg, "field.csv", &grid.to_csv())?;
        }
        ProblemId::P2 => {
            let spec = ProblemP2Spec::benchmark(cfg.k_inf);
            let grid = fdm_evolve_p2(
                &spec,
                &FdmConfig {
                    nx: cfg.oracle_nx - 1,
                    dt: stable_dt_p2(&spec, cfg.oracle_nx),
                    record_times: linspace(0.0, spec.t_end, cfg.oracle_times),
                },
            )?;
            write(cfg, "field.csv", &grid.to_csv())?;
        }
        ProblemId::P3 | ProblemId::P4 => {
            let map = load_map(cfg)?;
            let result = eigensolve_two_group(&map, cfg.oracle_refine)?;
            write(cfg, "flux.csv", &result.to_csv())?;
            write(cfg, "oracle.json", &eigen_report_json(&result))?;
        }
    }
    Ok(())
}

fn eigen_report_json(r: &EigenSolveResult) -> String {
    serde_json::json!({
        "k_eff": r.k_eff,
        "nx": r.nx,
        "ny": r.ny,
        "h": r.h,
        "iterations": r.iterations,
        "dominance_ratio": r.dominance_ratio,
    })
    .to_string()
}

/// `search`: run the configured criticality search with fully trained slab
/// candidates and emit the report and candidate table.
pub fn run_search(cfg: &ExperimentConfig) -> Result<()> {
    prepare_out(cfg)?;
    let trainer_cfg = P1TrainerConfig {
        net: cfg.net.clone(),
        train: crate::optimize::TrainConfig {
            check_every: cfg.search.check_period,
            ..cfg.train.clone()
        },
        weights: cfg.weights,
        n_pde: cfg.n_pde,
        n_initial: cfg.n_initial,
        n_boundary: cfg.n_boundary,
        ic: cfg.ic,
        seed: cfg.seed,
        early_stop: cfg.search_early_stop.then_some(cfg.search.lambda),
    };
    let mut trainer = p1_trainer(trainer_cfg);
    let result = search(&cfg.search, &mut trainer)?;
    write(cfg, "search.json", &result.report_json())?;
    write(cfg, "candidates.csv", &result.candidates_csv())?;
    Ok(())
}

/// `sweep`: run `solve` once per value of the swept key, each in its own
/// subdirectory, and merge the per-run metrics into one table.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<()> {
    prepare_out(cfg)?;
    let param = cfg
        .sweep_param
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("sweep needs sweep.param".into()))?;
    if cfg.sweep_values.is_empty() {
        eprintln!("warning: empty sweep.values, nothing to do");
        return Ok(());
    }
    let mut table = format!("{param},group,{}\n", MetricsReport::csv_header());
    for value in &cfg.sweep_values {
        let mut kv = KvConfig::parse(&cfg.echo())?;
        kv.set(param, value);
        let sub = cfg.out.join(format!("{param}={value}"));
        kv.set("out", sub.to_str().ok_or_else(|| {
            Error::InvalidConfig("non-UTF-8 output path".into())
        })?);
        let child = ExperimentConfig::from_kv(&kv)?;
        run_solve(&child)?;
        let metrics = fs::read_to_string(sub.join("metrics.csv"))?;
        for line in metrics.lines().skip(1) {
            table.push_str(&format!("{value},{line}\n"));
        }
    }
    write(cfg, "sweep.csv", &table)?;
    Ok(())
}

/// `report`: merge every `metrics.csv` under the output directory into one
/// table and emit a gnuplot script for it. Pure function of its inputs.
pub fn run_report(cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out)?;
    let mut files = Vec::new();
    collect_metrics_files(&cfg.out, &mut files)?;
    files.sort();
    let mut table = format!("run,group,{}\n", MetricsReport::csv_header());
    for f in &files {
        let run = f
            .parent()
            .and_then(|p| p.strip_prefix(&cfg.out).ok())
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        if run.is_empty() {
            continue;
        }
        let text = fs::read_to_string(f)?;
        for line in text.lines().skip(1) {
            table.push_str(&format!("{run},{line}\n"));
        }
    }
    fs::write(cfg.out.join("report.csv"), &table)?;
    let plot = "set datafile separator ','\n\
                set logscale y\n\
                set ylabel 'MSE'\n\
                set style data histogram\n\
                set style fill solid\n\
                plot 'report.csv' using 3:xtic(1) every ::1 title 'mse'\n";
    fs::write(cfg.out.join("plot.gp"), plot)?;
    Ok(())
}

fn collect_metrics_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() {
            collect_metrics_files(&path, out)?;
        } else if path.file_name().is_some_and(|n| n == "metrics.csv") {
            out.push(path);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg(dir: &Path, epochs: usize, extra: &str) -> ExperimentConfig {
        let text = format!(
            "problem = p1\nseed = 5\nout = {}\nnet.width = 8\nnet.depth = 4\n\
             sample.pde = 80\nsample.initial = 30\nsample.boundary = 20\n\
             train.epochs = {epochs}\nrar.enabled = false\neval.nx = 20\neval.times = 10\n{extra}",
            dir.display()
        );
        ExperimentConfig::from_kv(&KvConfig::parse(&text).unwrap()).unwrap()
    }

    #[test]
    fn solve_p1_writes_the_standard_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(&dir.path().join("run"), 15, "");
        run_solve(&cfg).unwrap();
        for name in ["config.txt", "metrics.csv", "history.csv", "net.ck", "field.csv"] {
            assert!(cfg.out.join(name).exists(), "missing {name}");
        }
        let metrics = fs::read_to_string(cfg.out.join("metrics.csv")).unwrap();
        assert!(metrics.starts_with("group,mse,omega1_mse,e_r,e_inf,masked\n"));
        // Checkpoint round-trips to the same forward evaluation.
        let net = Network::load_checkpoint_file(cfg.out.join("net.ck")).unwrap();
        let v = net.forward(&[0.1, 0.01]).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn solve_reruns_bit_identically() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_a = tiny_cfg(&dir.path().join("a"), 15, "");
        let cfg_b = tiny_cfg(&dir.path().join("b"), 15, "");
        run_solve(&cfg_a).unwrap();
        run_solve(&cfg_b).unwrap();
        let ma = fs::read_to_string(cfg_a.out.join("metrics.csv")).unwrap();
        let mb = fs::read_to_string(cfg_b.out.join("metrics.csv")).unwrap();
        assert_eq!(ma, mb);
    }

    #[test]
    fn oracle_p1_emits_the_full_grid() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(&dir.path().join("o"), 15, "oracle.nx = 100\noracle.times = 100\n");
        run_oracle(&cfg).unwrap();
        let text = fs::read_to_string(cfg.out.join("field.csv")).unwrap();
        // Header plus 100 x 100 grid rows.
        assert_eq!(text.lines().count(), 1 + 100 * 100);
    }

    #[test]
    fn sweep_merges_per_value_metrics() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(
            &dir.path().join("s"),
            5,
            "sweep.param = net.depth\nsweep.values = 4,5\n",
        );
        run_sweep(&cfg).unwrap();
        let table = fs::read_to_string(cfg.out.join("sweep.csv")).unwrap();
        assert!(table.starts_with("net.depth,group,mse"));
        assert_eq!(table.lines().count(), 3, "{table}");
        assert!(cfg.out.join("net.depth=4/metrics.csv").exists());
        assert!(cfg.out.join("net.depth=5/metrics.csv").exists());
    }

    #[test]
    fn empty_sweep_is_a_warning_no_op() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(&dir.path().join("e"), 15, "sweep.param = net.depth\n");
        run_sweep(&cfg).unwrap();
        assert!(!cfg.out.join("sweep.csv").exists());
    }

    #[test]
    fn report_merges_metrics_tables() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("r");
        let cfg = tiny_cfg(&root.join("run1"), 5, "");
        run_solve(&cfg).unwrap();
        let report_cfg = tiny_cfg(&root, 15, "");
        run_report(&report_cfg).unwrap();
        let a = fs::read_to_string(root.join("report.csv")).unwrap();
        assert!(a.contains("run1,1,"), "{a}");
        // Re-running changes nothing.
        run_report(&report_cfg).unwrap();
        let b = fs::read_to_string(root.join("report.csv")).unwrap();
        assert_eq!(a, b);
        assert!(root.join("plot.gp").exists());
    }
}
