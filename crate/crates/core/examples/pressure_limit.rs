//! Finite-sample pressure Phi_n converging uniformly to the pressure
//! P(f) = log lambda, with the deviation halving as n doubles.

use ruelle::alphabet::make_circle_alphabet;
use ruelle::potential::Potential;
use ruelle::transfer::TransferOperator;
use ruelle::thermo;

fn main() {
    let alphabet = make_circle_alphabet(64).unwrap();
    let beta = 1.0;
    let f = Potential::new(2, 0.99, 4.0, "xy-nn", move |x: &[&[f64]]| {
        beta * (x[0][0] * x[1][0] + x[0][1] * x[1][1])
    });
    let op = TransferOperator::new(&alphabet, &f).unwrap();
    let eig = op.power_iteration(1e-12, 100_000).unwrap();
    let report = thermo::pressure_report(&op, &eig, &[16, 32, 64, 128, 256, 512]).unwrap();
    println!("pressure = {:.15}", report.pressure);
    println!("entropy  = {:.15}", report.entropy);
    println!("energy   = {:.15}", report.energy);
    println!();
    println!("n      sup |Phi_n - P|   ratio to previous");
    let mut prev = f64::NAN;
    for (n, dev) in &report.finite_n_sup_dev {
        if prev.is_finite() {
            println!("{n:<6} {dev:.6e}      {:.4}", dev / prev);
        } else {
            println!("{n:<6} {dev:.6e}");
        }
        prev = *dev;
    }
}
