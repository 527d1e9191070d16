//! Leading eigendata of the transfer operator for the circle XY model,
//! compared against the modified Bessel functions I0 and I1.

use ruelle::alphabet::make_circle_alphabet;
use ruelle::potential::Potential;
use ruelle::transfer::TransferOperator;

fn bessel_i(order: u32, x: f64) -> f64 {
    // power series, converges fast for desk-scale arguments
    let mut term = (x / 2.0).powi(order as i32)
        / (1..=order as u64).map(|k| k as f64).product::<f64>().max(1.0);
    let mut sum = term;
    for k in 1..60 {
        term *= (x / 2.0) * (x / 2.0) / (k as f64 * (k as f64 + order as f64));
        sum += term;
    }
    sum
}

fn main() {
    let alphabet = make_circle_alphabet(64).unwrap();
    println!("beta      lambda            I0(beta)          gap_ratio         I1/I0");
    for beta in [0.5, 1.0, 2.0] {
        let f = Potential::new(2, 0.99, 4.0 * beta, "xy-nn", move |x: &[&[f64]]| {
            beta * (x[0][0] * x[1][0] + x[0][1] * x[1][1])
        });
        let op = TransferOperator::new(&alphabet, &f).unwrap();
        let eig = op.power_iteration(1e-12, 100_000).unwrap();
        println!(
            "{beta:<8} {:.14}  {:.14}  {:.14}  {:.14}",
            eig.lambda,
            bessel_i(0, beta),
            eig.gap_ratio,
            bessel_i(1, beta) / bessel_i(0, beta),
        );
    }
}
