//! Train a physics-informed network on the 1D slab transient and compare it
//! against the analytical series solution.
//!
//! Usage: `cargo run --release --example train_slab [k_inf] [epochs]`
//! (defaults: k_inf = 1.0041, epochs = 600).

use neutron_pinn::criticality::{train_p1_candidate, P1TrainerConfig};
use neutron_pinn::harness::metrics::metrics_against_grid;
use neutron_pinn::harness::runners::series_grid;
use neutron_pinn::optimize::TrainConfig;
use neutron_pinn::physics::{InitialConditionId, ProblemP1Spec};
use neutron_pinn::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let k_inf: f64 = args.next().map(|s| s.parse().unwrap()).unwrap_or(1.0041);
    let epochs: usize = args.next().map(|s| s.parse().unwrap()).unwrap_or(600);

    let cfg = P1TrainerConfig {
        train: TrainConfig { max_epochs: epochs, ..TrainConfig::default() },
        ..P1TrainerConfig::default()
    };
    println!(
        "training slab PINN at k_inf = {k_inf} for up to {epochs} epochs \
         ({} collocation + {} initial + {} boundary points)...",
        cfg.n_pde, cfg.n_initial, cfg.n_boundary
    );
    let start = std::time::Instant::now();
    let (net, candidate, result) = train_p1_candidate(&cfg, k_inf)?;
    println!(
        "done in {:.1} s: {} epochs, stop = {:?}, final loss = {:.3e}",
        start.elapsed().as_secs_f64(),
        result.epochs_run,
        result.stop,
        result.final_loss.total
    );

    let spec = ProblemP1Spec::benchmark(InitialConditionId::Phi1, k_inf);
    let truth = series_grid(&spec, 100, 100);
    let mut pred = |x: &[f64], t: f64| net.forward(&[x[0], t]);
    let metrics = metrics_against_grid(&mut pred, &truth)?;
    println!(
        "vs series solution on a 100x100 space-time grid: \
         MSE = {:.3e}, final-slice MSE = {:.3e}, rel Linf = {:.3e}",
        metrics.mse, metrics.omega1_mse, metrics.e_inf
    );
    println!(
        "steady-state metric at the slab center: phi_t = {:.4e} \
         (supercritical if positive), delta_phi = {:.4e}",
        candidate.phi_t, candidate.delta_phi
    );

    let path = std::env::temp_dir().join("train_slab_net.ck");
    net.save_checkpoint_file(&path)?;
    println!("checkpoint written to {}", path.display());
    Ok(())
}
