//! Derivative of the pressure in a direction phi: the analytic value
//! (integral of phi against the equilibrium state) versus central
//! differences and the Birkhoff-average representation.

use ruelle::alphabet::make_circle_alphabet;
use ruelle::calculus::{self, DEFAULT_FD_STEPS};
use ruelle::potential::Potential;
use ruelle::transfer::TransferOperator;

fn xy(beta: f64) -> Potential {
    Potential::new(2, 0.99, 4.0 * beta.abs(), "xy-nn", move |x: &[&[f64]]| {
        beta * (x[0][0] * x[1][0] + x[0][1] * x[1][1])
    })
}

fn main() {
    let alphabet = make_circle_alphabet(64).unwrap();
    let op = TransferOperator::new(&alphabet, &xy(1.0)).unwrap();
    let eig = op.power_iteration(1e-12, 100_000).unwrap();
    // direction phi = d/dbeta of the potential at beta = 1
    let phi = xy(1.0);
    let report = calculus::derivative_report(
        &op,
        &eig,
        &phi,
        &DEFAULT_FD_STEPS,
        &[5, 20, 80, 200],
        1e-12,
        100_000,
    )
    .unwrap();
    println!("analytic P'(f)phi   = {:.15}", report.analytic);
    println!("richardson FD       = {:.15}", report.richardson);
    println!("fitted FD order     = {:.3}", report.richardson_order);
    println!();
    println!("Birkhoff-average representation, sup deviation by n:");
    for (n, dev) in &report.birkhoff {
        println!("  n = {n:<5} {dev:.6e}");
    }
}
