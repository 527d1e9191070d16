//! Exact sampling of the classical spin chain on S^2: nearest-neighbor
//! alignment equals the Langevin function and n-step correlations
//! factorize as its powers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ruelle::heisenberg::{langevin, sample_chain};

fn main() {
    let beta = 1.5;
    let w = 3;
    let chains = 200_000;
    let mut rng = ChaCha8Rng::seed_from_u64(20_260_823);
    let mut sums = vec![0.0f64; 2 * w];
    for _ in 0..chains {
        let chain = sample_chain(beta, w, &mut rng).unwrap();
        for n in 1..=2 * w {
            let a = chain.spin(-(w as i64));
            let b = chain.spin(-(w as i64) + n as i64);
            sums[n - 1] += a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        }
    }
    println!("beta = {beta}, {chains} chains, L(beta) = {:.10}", langevin(beta));
    println!();
    println!("n    <s_0 . s_n>     L(beta)^n");
    for n in 1..=2 * w {
        println!(
            "{n:<4} {:+.8}     {:+.8}",
            sums[n - 1] / chains as f64,
            langevin(beta).powi(n as i32)
        );
    }
}
