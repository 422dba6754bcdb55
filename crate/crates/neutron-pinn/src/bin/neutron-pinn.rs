fn main() {
    std::process::exit(neutron_pinn::harness::cli::main());
}
