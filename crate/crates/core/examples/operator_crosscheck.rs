//! The windowed-chain alphabet pushed through the transfer-operator
//! pipeline. At window radius 0 the ladder model collapses to the sphere
//! nearest-neighbor chain, whose pressure and gap have closed forms.

use ruelle::alphabet::make_sphere_alphabet;
use ruelle::heisenberg::{ladder_operator_crosscheck, langevin};

fn main() {
    let base = make_sphere_alphabet(16, 32).unwrap();
    println!("beta    pressure          log(sinh b / b)   gap_ratio         L(beta)");
    for beta in [0.5, 1.0, 2.0] {
        let report =
            ladder_operator_crosscheck(&base, beta, 1.0, 0, 10_000, 1e-11, 100_000).unwrap();
        println!(
            "{beta:<6}  {:.12}    {:.12}    {:.12}    {:.12}",
            report.pressure,
            (beta.sinh() / beta).ln(),
            report.gap_ratio,
            langevin(beta),
        );
    }
}
