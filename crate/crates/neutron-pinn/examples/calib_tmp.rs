//! Temporary calibration runs for picking test budgets. Not part of the
//! public example set.

use std::ops::ControlFlow;

use neutron_pinn::criticality::{
    steady_state_metric, train_p1_candidate, P1TrainerConfig,
};
use neutron_pinn::harness::metrics::{metrics_against_eigen, metrics_against_grid};
use neutron_pinn::harness::runners::series_grid;
use neutron_pinn::loss::{sample_two_group, LambdaMode, LossWeights};
use neutron_pinn::network::{Network, NetworkConfig};
use neutron_pinn::optimize::{train_dual, TrainConfig};
use neutron_pinn::oracles::{anchors_from_oracle, eigensolve_two_group};
use neutron_pinn::physics::{InitialConditionId, MaterialMap, ProblemP1Spec, SeriesSolution};
use neutron_pinn::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn light_cfg(epochs: usize, early: Option<f64>) -> P1TrainerConfig {
    let mut cfg = P1TrainerConfig::default();
    cfg.net.hidden_width = 20;
    cfg.net.depth = 8;
    cfg.n_pde = 1500;
    cfg.n_initial = 500;
    cfg.n_boundary = 500;
    cfg.train.max_epochs = epochs;
    cfg.train.check_every = 100;
    cfg.early_stop = early;
    cfg
}

fn p1_probe(tag: &str, k: f64, epochs: usize, early: Option<f64>) -> Result<()> {
    let cfg = light_cfg(epochs, early);
    let t = std::time::Instant::now();
    let (net, cand, result) = train_p1_candidate(&cfg, k)?;
    let spec = ProblemP1Spec::benchmark(InitialConditionId::Phi1, k);
    let series = SeriesSolution::project(&spec);
    let truth = series_grid(&spec, 100, 100);
    let mut pred = |x: &[f64], tt: f64| net.forward(&[x[0], tt]);
    let m = metrics_against_grid(&mut pred, &truth)?;
    let exact = steady_state_metric(&series, &[0.0], spec.t_end)?;
    println!(
        "{tag} k={k} epochs_run={} time={:.0}s mse={:.2e} omega1={:.2e} \
         phi_t={:+.3e} exact_phi_t={:+.3e}",
        result.epochs_run,
        t.elapsed().as_secs_f64(),
        m.mse,
        m.omega1_mse,
        cand.phi_t,
        exact.phi_t
    );
    Ok(())
}

fn dual_probe(tag: &str, map: &MaterialMap, trainable: bool, epochs: usize, n_anchor: usize, width: usize, depth: usize, w: f64, warmup: usize, every: usize, refine: usize) -> Result<()> {
    let oracle = eigensolve_two_group(map, refine)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut samples = sample_two_group(map, 2000, 400, &mut rng)?;
    let (d1, d2) = anchors_from_oracle(&oracle, n_anchor, &mut rng)?;
    samples.data1 = d1;
    samples.data2 = d2;
    let lo = samples.lo.clone();
    let hi = samples.hi.clone();
    let make = |seed| -> Result<Network> {
        let mut n = Network::init_gaussian(&NetworkConfig {
            input_dim: 2,
            hidden_width: width,
            depth,
            skip_distance: 2,
            init_std: 0.2,
            seed,
        })?;
        n.set_input_box(&lo, &hi)?;
        Ok(n)
    };
    let mut net1 = make(3)?;
    let mut net2 = make(4)?;
    let mode = if trainable { LambdaMode::Trainable } else { LambdaMode::Fixed(1.0 / oracle.k_eff) };
    let t = std::time::Instant::now();
    let result = train_dual(
        &mut net1,
        &mut net2,
        map,
        &mut samples,
        LossWeights { w },
        mode,
        &TrainConfig {
            max_epochs: epochs,
            check_every: 500,
            lambda_warmup: warmup,
            lambda_every: every,
            ..TrainConfig::default()
        },
        &mut rng,
        |_| ControlFlow::Continue(()),
    )?;
    let mut p1 = |x: f64, y: f64| net1.forward(&[x, y]);
    let m1 = metrics_against_eigen(&mut p1, &oracle, &oracle.flux1)?;
    let mut p2 = |x: f64, y: f64| net2.forward(&[x, y]);
    let m2 = metrics_against_eigen(&mut p2, &oracle, &oracle.flux2)?;
    let k_pinn = 1.0 / result.lambda;
    let objective = neutron_pinn::loss::DualTwoGroupObjective {
        map,
        pde: &samples.pde,
        dirichlet: &samples.dirichlet,
        neumann: &samples.neumann,
        data1: &samples.data1,
        data2: &samples.data2,
        weights: LossWeights { w },
        lambda: LambdaMode::Fixed(result.lambda),
        chunk: neutron_pinn::loss::DEFAULT_CHUNK,
    };
    let lamstar = objective.optimal_lambda(&net1, &net2)?.unwrap_or(f64::NAN);
    let k_star = 1.0 / lamstar;
    println!(
        "{tag} epochs={} time={:.0}s loss={:.2e} mse1={:.2e} mse2={:.2e} \
         einf1={:.2e} einf2={:.2e} k_pinn={:.5} k_oracle={:.5} e_r={:.2e} \
         k_star={:.5} e_r_star={:.2e}",
        result.epochs_run,
        t.elapsed().as_secs_f64(),
        result.final_loss.total,
        m1.mse,
        m2.mse,
        m1.e_inf,
        m2.e_inf,
        k_pinn,
        oracle.k_eff,
        (k_pinn - oracle.k_eff).abs() / oracle.k_eff,
        k_star,
        (k_star - oracle.k_eff).abs() / oracle.k_eff
    );
    Ok(())
}

fn ablation_probe(seed: u64) -> Result<()> {
    use neutron_pinn::loss::ResidualCoeffs;
    use neutron_pinn::optimize::train_single;
    use neutron_pinn::sampling::sample_p1;

    for skip in [2usize, 0] {
        let mut cfg = P1TrainerConfig::default();
        cfg.net.skip_distance = skip;
        cfg.net.seed = seed;
        cfg.seed = seed;
        let spec = ProblemP1Spec::benchmark(cfg.ic, 1.0041);
        let (lo, hi) = spec.domain();
        let mut net = Network::init_gaussian(&cfg.net)?;
        net.set_input_box(&lo, &hi)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut samples = sample_p1(&spec, cfg.n_pde, cfg.n_initial, cfg.n_boundary, &mut rng);
        let residual = ResidualCoeffs::p1(&spec);
        let mut train = cfg.train;
        train.check_every = 250;
        let truth = series_grid(&spec, 60, 60);
        let t0 = std::time::Instant::now();
        train_single(
            &mut net,
            &mut samples,
            &residual,
            cfg.weights,
            &train,
            &mut rng,
            |ev| {
                let mut pred = |x: &[f64], tt: f64| ev.net.forward(&[x[0], tt]);
                let m = metrics_against_grid(&mut pred, &truth).unwrap();
                println!(
                    "ablation seed={seed} skip={skip} epoch={} t={:.0}s mse={:.2e} omega1={:.2e}",
                    ev.epoch,
                    t0.elapsed().as_secs_f64(),
                    m.mse,
                    m.omega1_mse
                );
                ControlFlow::Continue(())
            },
        )?;
    }
    Ok(())
}

fn main() -> Result<()> {
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "p1" => {
            p1_probe("p1-800", 1.0041, 800, None)?;
            p1_probe("p1-800", 1.0001, 800, None)?;
            p1_probe("p1-800-nearcrit", 1.002076, 800, None)?;
            p1_probe("p1-800-bracket", 1.002138, 800, None)?;
            p1_probe("p1-800-bracket", 1.002013, 800, None)?;
            p1_probe("p1-800-early", 1.0041, 800, Some(0.01))?;
            p1_probe("p1-1200", 1.0021, 1200, None)?;
        }
        "p3" => {
            dual_probe("p3-1500-a300", &MaterialMap::two_region_benchmark(), false, 1500, 300, 26, 8, 100.0, 0, 50, 4)?;
        }
        "p3long" => {
            dual_probe("p3-3000-a500", &MaterialMap::two_region_benchmark(), false, 3000, 500, 26, 8, 100.0, 0, 50, 4)?;
        }
        "p4" => {
            dual_probe("p4-1500-a300", &MaterialMap::iaea_quarter_core(), true, 1500, 300, 26, 8, 100.0, 500, 100, 2)?;
        }
        "p4long" => {
            dual_probe("p4-3000-a500", &MaterialMap::iaea_quarter_core(), true, 3000, 500, 26, 8, 100.0, 1000, 100, 2)?;
        }
        "p4big" => {
            dual_probe("p4-4000-a800-w30d10", &MaterialMap::iaea_quarter_core(), true, 4000, 800, 30, 10, 300.0, 1000, 100, 2)?;
        }
        "p3big" => {
            dual_probe("p3-4000-a1000-w30d10", &MaterialMap::two_region_benchmark(), false, 4000, 1000, 30, 10, 300.0, 0, 50, 4)?;
        }
        "p3w" => {
            dual_probe("p3-3000-a500-w300", &MaterialMap::two_region_benchmark(), false, 3000, 500, 26, 8, 300.0, 0, 50, 4)?;
        }
        "p4dense" => {
            dual_probe("p4-dense", &MaterialMap::iaea_quarter_core(), true, 4000, 3000, 32, 10, 300.0, 800, 200, 4)?;
        }
        "p3dense" => {
            dual_probe("p3-dense", &MaterialMap::two_region_benchmark(), false, 4000, 3000, 30, 10, 300.0, 0, 50, 4)?;
        }
        "p4fixed" => {
            dual_probe("p4-fixed-1500-a300", &MaterialMap::iaea_quarter_core(), false, 1500, 300, 26, 8, 100.0, 0, 50, 4)?;
        }
        "ablation" => {
            let seed = std::env::args().nth(2).map(|s| s.parse().unwrap()).unwrap_or(7);
            ablation_probe(seed)?;
        }
        other => eprintln!("unknown probe {other:?}"),
    }
    Ok(())
}
