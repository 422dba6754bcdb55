//! Train a pair of coupled networks (one per energy group) on the two-region
//! reactor at a fixed k_eff, anchored by a handful of reference flux values
//! from the finite-volume eigensolver.
//!
//! Usage: `cargo run --release --example dual_pinn_two_group [epochs]`
//! (default 400; more epochs give tighter agreement).

use std::ops::ControlFlow;

use neutron_pinn::harness::metrics::metrics_against_eigen;
use neutron_pinn::loss::{sample_two_group, LambdaMode, LossWeights};
use neutron_pinn::network::{Network, NetworkConfig};
use neutron_pinn::optimize::{train_dual, TrainConfig};
use neutron_pinn::oracles::{anchors_from_oracle, eigensolve_two_group};
use neutron_pinn::physics::MaterialMap;
use neutron_pinn::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let epochs: usize =
        std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(400);

    let map = MaterialMap::two_region_benchmark();
    println!("solving the reference eigenpair...");
    let oracle = eigensolve_two_group(&map, 4)?;
    println!("  k_eff = {:.6} on a {}x{} fine grid", oracle.k_eff, oracle.nx, oracle.ny);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut samples = sample_two_group(&map, 2000, 400, &mut rng)?;
    let (data1, data2) = anchors_from_oracle(&oracle, 200, &mut rng)?;
    samples.data1 = data1;
    samples.data2 = data2;

    let lo = samples.lo.clone();
    let hi = samples.hi.clone();
    let make_net = |seed: u64| -> Result<Network> {
        let mut net = Network::init_gaussian(&NetworkConfig {
            input_dim: 2,
            hidden_width: 26,
            depth: 8,
            skip_distance: 2,
            init_std: 0.2,
            seed,
        })?;
        net.set_input_box(&lo, &hi)?;
        Ok(net)
    };
    let mut net1 = make_net(3)?;
    let mut net2 = make_net(4)?;

    println!("training both group networks jointly for up to {epochs} epochs...");
    let start = std::time::Instant::now();
    let result = train_dual(
        &mut net1,
        &mut net2,
        &map,
        &mut samples,
        LossWeights::default(),
        LambdaMode::Fixed(1.0 / oracle.k_eff),
        &TrainConfig { max_epochs: epochs, check_every: 100, ..TrainConfig::default() },
        &mut rng,
        |ev| {
            println!("  epoch {:4}: loss = {:.3e}", ev.epoch, ev.loss.total);
            ControlFlow::Continue(())
        },
    )?;
    println!(
        "done in {:.1} s ({} epochs, stop = {:?}, final loss = {:.3e})",
        start.elapsed().as_secs_f64(),
        result.epochs_run,
        result.stop,
        result.final_loss.total
    );

    for (label, net, flux) in
        [("fast", &net1, &oracle.flux1), ("thermal", &net2, &oracle.flux2)]
    {
        let mut pred = |x: f64, y: f64| net.forward(&[x, y]);
        let m = metrics_against_eigen(&mut pred, &oracle, flux)?;
        println!(
            "{label:>8} group vs eigensolver: MSE = {:.3e}, rel Linf = {:.3e}",
            m.mse, m.e_inf
        );
    }
    Ok(())
}
