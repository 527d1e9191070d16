//! Pressure derivative: the analytic formula P'(f)phi = int phi h_f dnu_f,
//! a central-difference oracle with Richardson extrapolation, the Birkhoff
//! sum representation, and the operator identity it rests on.

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::thermo;
use crate::transfer::{EigenData, GridFunction, TransferOperator};

/// Default central-difference steps; smaller steps run into eigensolver
/// noise at the default tolerance.
pub const DEFAULT_FD_STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// Everything computed about one directional derivative.
#[derive(Clone, Debug)]
pub struct DerivativeReport {
    /// int phi h_f dnu_f.
    pub analytic: f64,
    /// (step, central difference) pairs.
    pub fd: Vec<(f64, f64)>,
    /// Richardson extrapolation of the central differences.
    pub richardson: f64,
    /// Fitted convergence order of |fd(t) - analytic| in t.
    pub richardson_order: f64,
    /// (n, sup deviation of the Birkhoff representation) pairs.
    pub birkhoff: Vec<(usize, f64)>,
}

/// P'(f)phi = int phi h_f dnu_f, with depth-(m+1) observables contracted
/// through one operator application exactly as in `thermo::expectation`.
pub fn pressure_derivative(
    op: &TransferOperator,
    eig: &EigenData,
    phi: &Potential,
) -> Result<f64> {
    thermo::expectation(op, eig, phi)
}

/// Central differences (P(f + t phi) - P(f - t phi)) / 2t for each step.
pub fn fd_derivative(
    op: &TransferOperator,
    phi: &Potential,
    steps: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<(f64, f64)>> {
    let alphabet = &op.grid.alphabet;
    let f = &op.potential;
    let mut out = Vec::with_capacity(steps.len());
    for &t in steps {
        let plus = Potential::linear_combination(1.0, f, t, phi);
        let minus = Potential::linear_combination(1.0, f, -t, phi);
        let p_plus = TransferOperator::new(alphabet, &plus)?
            .power_iteration(tol, max_iter)?
            .log_lambda;
        let p_minus = TransferOperator::new(alphabet, &minus)?
            .power_iteration(tol, max_iter)?
            .log_lambda;
        out.push((t, (p_plus - p_minus) / (2.0 * t)));
    }
    Ok(out)
}

/// One step of Richardson extrapolation assuming O(t^2) error and steps
/// halving: d(t/2) + (d(t/2) - d(t)) / 3.
pub fn richardson_extrapolate(fd: &[(f64, f64)]) -> f64 {
    match fd.len() {
        0 => f64::NAN,
        1 => fd[0].1,
        _ => {
            let (coarse, fine) = (fd[fd.len() - 2].1, fd[fd.len() - 1].1);
            fine + (fine - coarse) / 3.0
        }
    }
}

/// Least-squares slope of log|fd(t) - reference| against log t.
pub fn fitted_order(fd: &[(f64, f64)], reference: f64) -> f64 {
    let pts: Vec<(f64, f64)> = fd
        .iter()
        .filter(|(_, d)| (d - reference).abs() > 1e-15)
        .map(|(t, d)| (t.ln(), (d - reference).abs().ln()))
        .collect();
    if pts.len() < 2 {
        // errors at the roundoff floor: report the nominal order
        return 2.0;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// The Birkhoff representation (1/n) L^n(S_n phi) / L^n 1 evaluated through
/// the closed-on-the-grid expansion
///
/// lambda^{-n} L^n(S_n phi) = sum_{j=0}^{n-1} lambda^{-(n-j)} L^{n-j}(phi lambda^{-j} L^j 1),
///
/// accumulated Horner-style so only O(n) operator applications are needed.
pub fn birkhoff_derivative(
    op: &TransferOperator,
    eig: &EigenData,
    phi: &Potential,
    n: usize,
) -> Result<GridFunction> {
    if n == 0 {
        return Err(Error::InvalidArgument("birkhoff representation needs n >= 1".into()));
    }
    // g_j = lambda^{-j} L^j 1 for j = 0..n-1
    let mut powers = Vec::with_capacity(n);
    let mut g = GridFunction::constant(&op.grid, 1.0);
    powers.push(g.clone());
    for _ in 1..n {
        g = op.apply(&g)?;
        for x in &mut g.values {
            *x /= eig.lambda;
        }
        powers.push(g.clone());
    }

    // acc = lambda^{-1} L(phi g_{n-1} + lambda^{-1} L(phi g_{n-2} + ...)),
    // innermost term first so phi g_0 receives all n applications
    let mut acc = GridFunction::constant(&op.grid, 0.0);
    for j in 0..n {
        let mut inner = op.apply_times(phi, &powers[j])?;
        let step = op.apply(&acc)?;
        for (i, x) in inner.values.iter_mut().enumerate() {
            *x = (*x + step.values[i]) / eig.lambda;
        }
        acc = inner;
    }

    // divide by lambda^{-n} L^n 1 = L g_{n-1} / lambda and by n
    let mut denom = op.apply(powers.last().unwrap())?;
    for x in &mut denom.values {
        *x /= eig.lambda;
    }
    for (x, d) in acc.values.iter_mut().zip(&denom.values) {
        *x /= n as f64 * d;
    }
    Ok(acc)
}

/// Sup distance of the Birkhoff representation from the analytic value.
pub fn birkhoff_deviation(
    op: &TransferOperator,
    eig: &EigenData,
    phi: &Potential,
    n: usize,
) -> Result<f64> {
    let analytic = pressure_derivative(op, eig, phi)?;
    let grid_fn = birkhoff_derivative(op, eig, phi, n)?;
    Ok(grid_fn
        .values
        .iter()
        .fold(0.0f64, |m, v| m.max((v - analytic).abs())))
}

/// Max discrepancy between the direct evaluation of lambda^{-n} L^n(S_n phi)
/// (expanded over all n-step preimage branches) and its closed-form
/// expansion used by `birkhoff_derivative`. An algebraic identity, so the
/// discrepancy is pure roundoff.
pub fn claim1_identity_check(
    op: &TransferOperator,
    eig: &EigenData,
    phi: &Potential,
    n: usize,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("identity check needs n >= 1".into()));
    }
    let grid = &op.grid;
    let alphabet = &grid.alphabet;

    // direct: L^n(S_n phi) with S_n phi expanded over the branch sequence
    let direct = op.iterate_brute_force(n, |seq| {
        let mut total = 0.0;
        for j in 0..n {
            let coords: Vec<&[f64]> = seq[j..]
                .iter()
                .take(phi.depth)
                .map(|&i| alphabet.rule.nodes[i].as_slice())
                .collect();
            total += phi.eval(&coords);
        }
        total
    })?;

    // expansion side, same Horner accumulation as birkhoff_derivative
    let mut powers = Vec::with_capacity(n);
    let mut g = GridFunction::constant(grid, 1.0);
    powers.push(g.clone());
    for _ in 1..n {
        g = op.apply(&g)?;
        for x in &mut g.values {
            *x /= eig.lambda;
        }
        powers.push(g.clone());
    }
    let mut acc = GridFunction::constant(grid, 0.0);
    for j in 0..n {
        let mut inner = op.apply_times(phi, &powers[j])?;
        let step = op.apply(&acc)?;
        for (i, x) in inner.values.iter_mut().enumerate() {
            *x = (*x + step.values[i]) / eig.lambda;
        }
        acc = inner;
    }

    let scale = eig.lambda.powi(n as i32);
    let mut max_disc = 0.0f64;
    for (d, e) in direct.iter().zip(&acc.values) {
        max_disc = max_disc.max((d / scale - e).abs());
    }
    Ok(max_disc)
}

/// Full derivative report: analytic value, central differences with
/// Richardson extrapolation and fitted order, and the Birkhoff deviation
/// series.
pub fn derivative_report(
    op: &TransferOperator,
    eig: &EigenData,
    phi: &Potential,
    steps: &[f64],
    birkhoff_ns: &[usize],
    tol: f64,
    max_iter: usize,
) -> Result<DerivativeReport> {
    let analytic = pressure_derivative(op, eig, phi)?;
    let fd = fd_derivative(op, phi, steps, tol, max_iter)?;
    let richardson = richardson_extrapolate(&fd);
    let richardson_order = fitted_order(&fd, analytic);
    let mut birkhoff = Vec::with_capacity(birkhoff_ns.len());
    for &n in birkhoff_ns {
        birkhoff.push((n, birkhoff_deviation(op, eig, phi, n)?));
    }
    Ok(DerivativeReport {
        analytic,
        fd,
        richardson,
        richardson_order,
        birkhoff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::make_finite_alphabet;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_depth2(seed: u64, scale: f64) -> Potential {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table: Vec<f64> = (0..4).map(|_| rng.gen_range(-scale..scale)).collect();
        Potential::new(2, 0.5, 4.0 * scale, "random-table", move |x| {
            table[(x[0][0] as usize) * 2 + x[1][0] as usize]
        })
    }

    fn setup(seed: u64) -> (TransferOperator, EigenData) {
        let a = make_finite_alphabet(2).unwrap();
        let op = TransferOperator::new(&a, &random_depth2(seed, 1.0)).unwrap();
        let eig = op.power_iteration(1e-12, 100_000).unwrap();
        (op, eig)
    }

    #[test]
    fn derivative_in_constant_direction_is_one() {
        for seed in [1u64, 9, 33] {
            let (op, eig) = setup(seed);
            let one = Potential::constant(1.0);
            let d = pressure_derivative(&op, &eig, &one).unwrap();
            assert!((d - 1.0).abs() < 1e-12, "seed {seed}: got {d}");
            // finite differences are exactly 1 as well
            let fd = fd_derivative(&op, &one, &[1e-2], 1e-12, 100_000).unwrap();
            assert!((fd[0].1 - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_at_zero_is_a_priori_integral() {
        let a = make_finite_alphabet(2).unwrap();
        let zero = Potential::new(2, 0.5, 0.0, "zero", |_| 0.0);
        let op = TransferOperator::new(&a, &zero).unwrap();
        let eig = op.power_iteration(1e-12, 100_000).unwrap();
        // depth-1 observable: P'(0)phi = int phi dmu
        let phi = Potential::new(1, 0.5, 1.0, "coord", |x| x[0][0]);
        let d = pressure_derivative(&op, &eig, &phi).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn linearity_of_derivative() {
        let (op, eig) = setup(17);
        let phi = random_depth2(41, 1.0);
        let psi = random_depth2(42, 1.0);
        let combo = Potential::linear_combination(0.7, &phi, -1.3, &psi);
        let lhs = pressure_derivative(&op, &eig, &combo).unwrap();
        let rhs = 0.7 * pressure_derivative(&op, &eig, &phi).unwrap()
            - 1.3 * pressure_derivative(&op, &eig, &psi).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn positivity_of_derivative() {
        let (op, eig) = setup(23);
        let phi = Potential::new(2, 0.5, 1.0, "nonneg", |x| 0.2 + (x[0][0] - x[1][0]).abs());
        assert!(pressure_derivative(&op, &eig, &phi).unwrap() > 0.0);
    }

    #[test]
    fn fd_matches_analytic_with_second_order() {
        let (op, eig) = setup(5);
        let phi = random_depth2(77, 1.0);
        let analytic = pressure_derivative(&op, &eig, &phi).unwrap();
        let fd = fd_derivative(&op, &phi, &DEFAULT_FD_STEPS, 1e-12, 100_000).unwrap();
        let order = fitted_order(&fd, analytic);
        assert!(order >= 1.8, "fitted order {order}");
        let rich = richardson_extrapolate(&fd);
        assert!(
            (rich - analytic).abs() <= 1e-7 * analytic.abs().max(1.0),
            "richardson {rich} vs analytic {analytic}"
        );
    }

    #[test]
    fn claim1_identity_small_n() {
        let (op, eig) = setup(13);
        let phi = random_depth2(90, 1.0);
        for n in 1..=4 {
            let disc = claim1_identity_check(&op, &eig, &phi, n).unwrap();
            assert!(disc < 1e-12, "n = {n}: {disc}");
        }
        // phi = 0: both sides vanish
        let zero_phi = Potential::new(1, 0.5, 0.0, "zero", |_| 0.0);
        assert!(claim1_identity_check(&op, &eig, &zero_phi, 3).unwrap() < 1e-15);
    }

    #[test]
    fn birkhoff_constant_direction_exact() {
        let (op, eig) = setup(2);
        let one = Potential::constant(1.0);
        for n in [1usize, 5, 20] {
            let gf = birkhoff_derivative(&op, &eig, &one, n).unwrap();
            for v in &gf.values {
                assert!((v - 1.0).abs() < 1e-11, "n = {n}: {v}");
            }
        }
    }

    #[test]
    fn birkhoff_converges_to_analytic() {
        let (op, eig) = setup(8);
        let phi = random_depth2(31, 1.0);
        let d20 = birkhoff_deviation(&op, &eig, &phi, 20).unwrap();
        let d80 = birkhoff_deviation(&op, &eig, &phi, 80).unwrap();
        let d320 = birkhoff_deviation(&op, &eig, &phi, 320).unwrap();
        assert!(d80 < d20);
        assert!(d320 < d80);
        // roughly Cesaro: quadrupling n should cut the deviation by ~4
        assert!(d320 < d20 / 4.0);
    }

    #[test]
    fn birkhoff_at_zero_potential() {
        let a = make_finite_alphabet(2).unwrap();
        let zero = Potential::new(2, 0.5, 0.0, "zero", |_| 0.0);
        let op = TransferOperator::new(&a, &zero).unwrap();
        let eig = op.power_iteration(1e-12, 100_000).unwrap();
        let phi = Potential::new(1, 0.5, 1.0, "coord", |x| x[0][0]);
        let dev = birkhoff_deviation(&op, &eig, &phi, 200).unwrap();
        assert!(dev < 5e-3, "deviation {dev}");
    }
}
