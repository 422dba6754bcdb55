//! Show residual-adaptive refinement in action: train the slab problem with
//! and without refinement under the same seed and budget, and report where
//! the added collocation points went.

use std::ops::ControlFlow;

use neutron_pinn::loss::{LossWeights, PinnObjective, ResidualCoeffs};
use neutron_pinn::network::{Network, NetworkConfig};
use neutron_pinn::optimize::{train_single, TrainConfig};
use neutron_pinn::physics::{InitialConditionId, ProblemP1Spec};
use neutron_pinn::sampling::{cell_index, sample_p1, RarConfig};
use neutron_pinn::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn run(rar: Option<RarConfig>) -> Result<(f64, usize, Vec<usize>)> {
    let spec = ProblemP1Spec::benchmark(InitialConditionId::Phi1, 1.0041);
    let (lo, hi) = spec.domain();
    let cfg = NetworkConfig {
        input_dim: 2,
        hidden_width: 20,
        depth: 6,
        skip_distance: 2,
        init_std: 0.2,
        seed: 11,
    };
    let mut net = Network::init_gaussian(&cfg)?;
    net.set_input_box(&lo, &hi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut samples = sample_p1(&spec, 1000, 400, 400, &mut rng);
    let residual = ResidualCoeffs::p1(&spec);
    let train_cfg = TrainConfig { max_epochs: 400, rar, rar_every: 100, ..TrainConfig::default() };
    let result = train_single(
        &mut net,
        &mut samples,
        &residual,
        LossWeights::default(),
        &train_cfg,
        &mut rng,
        |_| ControlFlow::Continue(()),
    )?;
    // Count collocation points per quadrant of the (x, t) box.
    let mut per_cell = vec![0usize; 4];
    for p in samples.pde.iter() {
        per_cell[cell_index(&lo, &hi, 2, p)] += 1;
    }
    let obj = PinnObjective::new(&samples, residual);
    let _ = obj.breakdown(&net)?;
    Ok((result.final_loss.total, samples.pde.len(), per_cell))
}

fn main() -> Result<()> {
    println!("training 400 epochs without refinement...");
    let (loss_off, n_off, cells_off) = run(None)?;
    println!("  final loss {loss_off:.3e}, {n_off} collocation points, per quadrant {cells_off:?}");

    println!("training 400 epochs with refinement (alpha = 2, 200 points per step)...");
    let (loss_on, n_on, cells_on) =
        run(Some(RarConfig { alpha: 2, m: 200, cap: 5000 }))?;
    println!("  final loss {loss_on:.3e}, {n_on} collocation points, per quadrant {cells_on:?}");
    println!(
        "\nRefinement concentrated {} extra points in the worst-residual quadrants.",
        n_on - n_off
    );
    Ok(())
}
