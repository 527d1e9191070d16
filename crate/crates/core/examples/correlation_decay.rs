//! Correlation function of the circle XY equilibrium state decaying at the
//! spectral gap rate: C(n) = (1/2) (I1/I0)^n for phi = psi = cos(theta_1).

use ruelle::alphabet::make_circle_alphabet;
use ruelle::correlation;
use ruelle::potential::Potential;
use ruelle::transfer::TransferOperator;

fn main() {
    let alphabet = make_circle_alphabet(64).unwrap();
    let beta = 1.0;
    let f = Potential::new(2, 0.99, 4.0, "xy-nn", move |x: &[&[f64]]| {
        beta * (x[0][0] * x[1][0] + x[0][1] * x[1][1])
    });
    let op = TransferOperator::new(&alphabet, &f).unwrap();
    let eig = op.power_iteration(1e-12, 100_000).unwrap();
    let phi = Potential::new(1, 0.99, 2.0, "cos-theta1", |x: &[&[f64]]| x[0][0]);
    let series = correlation::correlation_series(&op, &eig, &phi, &phi, 20).unwrap();
    println!("gap tau    = {:.14}", series.gap_tau);
    println!("fitted tau = {:.14}", series.fitted_tau);
    println!("fitted K   = {:.6}", series.fitted_k);
    println!();
    println!("n    C(n)                 (1/2) gap^n");
    for (n, c) in series.values.iter().enumerate() {
        println!("{n:<4} {c:+.14e}  {:+.14e}", 0.5 * series.gap_tau.powi(n as i32));
    }
}
