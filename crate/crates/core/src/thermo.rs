//! Pressure, entropy, finite-n pressure diagnostics, and variational
//! principle checks on top of the transfer eigendata.
//!
//! Entropy here is relative to the a priori measure, so it is nonpositive
//! and vanishes exactly for constant potentials.

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::transfer::{EigenData, GridFunction, TransferOperator};

/// Summary of the pressure computation for one potential.
#[derive(Clone, Debug)]
pub struct PressureReport {
    /// P(f) = log lambda_f.
    pub pressure: f64,
    /// h(m_f) = P(f) - int f dm_f, nonpositive.
    pub entropy: f64,
    /// int f dm_f.
    pub energy: f64,
    /// (n, sup_x |Phi_n(f, x) - P(f)|) for the requested n values.
    pub finite_n_sup_dev: Vec<(usize, f64)>,
}

/// Topological pressure P(f) = log lambda_f.
pub fn pressure(eig: &EigenData) -> f64 {
    eig.log_lambda
}

/// Finite-n pressure Phi_n(f, .) = (1/n) log L^n 1, computed with running
/// renormalization so large n cannot overflow.
pub fn finite_n_pressure(op: &TransferOperator, n: usize) -> Result<GridFunction> {
    if n == 0 {
        return Err(Error::InvalidArgument("finite-n pressure needs n >= 1".into()));
    }
    let mut v = GridFunction::constant(&op.grid, 1.0);
    let mut log_scale = 0.0;
    for _ in 0..n {
        v = op.apply(&v)?;
        let norm = v.sup_norm();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(Error::NumericalBreakdown(
                "degenerate iterate in finite-n pressure".into(),
            ));
        }
        log_scale += norm.ln();
        for x in &mut v.values {
            *x /= norm;
        }
    }
    for x in &mut v.values {
        *x = (log_scale + x.ln()) / n as f64;
    }
    Ok(v)
}

/// Sup deviation of Phi_n from P(f) for each requested n.
pub fn finite_n_deviation_series(
    op: &TransferOperator,
    eig: &EigenData,
    ns: &[usize],
) -> Result<Vec<(usize, f64)>> {
    let p = pressure(eig);
    let mut out = Vec::with_capacity(ns.len());
    for &n in ns {
        let phi_n = finite_n_pressure(op, n)?;
        let dev = phi_n
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max((v - p).abs()));
        out.push((n, dev));
    }
    Ok(out)
}

/// Sup-norm distance of two potentials sampled over all depth-(m+1)
/// grid-closure tuples (one alphabet letter prepended to every grid point).
pub fn sup_distance_on_grid(
    op: &TransferOperator,
    f: &Potential,
    g: &Potential,
) -> Result<f64> {
    let grid = &op.grid;
    let n = grid.alphabet.len();
    let mut sup: f64 = 0.0;
    for x in 0..grid.size {
        let tuple = grid.index_to_tuple(x);
        let tail = grid.tuple_coords(&tuple);
        let mut coords: Vec<&[f64]> = Vec::with_capacity(grid.depth + 1);
        coords.push(&[]);
        coords.extend_from_slice(&tail);
        for a in 0..n {
            coords[0] = grid.alphabet.rule.nodes[a].as_slice();
            sup = sup.max((f.eval(&coords) - g.eval(&coords)).abs());
        }
    }
    Ok(sup)
}

/// Both sides of the pressure Lipschitz bound |P(f) - P(g)| <= ||f - g||_0,
/// plus the finite-n versions sup |Phi_n(f) - Phi_n(g)| for n in {1, 4, 16}.
#[derive(Clone, Debug)]
pub struct LipschitzCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub finite_n: Vec<(usize, f64)>,
}

pub fn pressure_lipschitz_check(
    op_f: &TransferOperator,
    eig_f: &EigenData,
    op_g: &TransferOperator,
    eig_g: &EigenData,
) -> Result<LipschitzCheck> {
    let lhs = (pressure(eig_f) - pressure(eig_g)).abs();
    let rhs = sup_distance_on_grid(op_f, &op_f.potential, &op_g.potential)?;
    let mut finite_n = Vec::new();
    for n in [1usize, 4, 16] {
        let pf = finite_n_pressure(op_f, n)?;
        let pg = finite_n_pressure(op_g, n)?;
        let sup = pf
            .values
            .iter()
            .zip(&pg.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        finite_n.push((n, sup));
    }
    Ok(LipschitzCheck { lhs, rhs, finite_n })
}

/// int f dm_f via one operator application: lambda^{-1} <nu, L(f h)>.
///
/// This evaluates the depth-(m+1) integrand against the depth-m marginal
/// exactly, without materializing a deeper measure.
pub fn energy(op: &TransferOperator, eig: &EigenData) -> Result<f64> {
    let weighted = op.apply_times(&op.potential, &eig.h)?;
    Ok(eig.integrate_nu(&weighted.values) / eig.lambda)
}

/// Same contraction for an arbitrary observable g of depth <= m + 1 against
/// the equilibrium state of `op`.
pub fn expectation(op: &TransferOperator, eig: &EigenData, g: &Potential) -> Result<f64> {
    if g.depth <= op.grid.depth {
        let gf = GridFunction::from_potential(&op.grid, g)?;
        let prod: Vec<f64> = gf
            .values
            .iter()
            .zip(&eig.h.values)
            .map(|(a, b)| a * b)
            .collect();
        return Ok(eig.integrate_nu(&prod));
    }
    let weighted = op.apply_times(g, &eig.h)?;
    Ok(eig.integrate_nu(&weighted.values) / eig.lambda)
}

/// h(m_f) = P(f) - int f dm_f. Nonpositive in this normalization.
pub fn entropy(op: &TransferOperator, eig: &EigenData) -> Result<f64> {
    Ok(pressure(eig) - energy(op, eig)?)
}

/// Variational slack P(f) - [h(m_g) + int f dm_g], nonnegative up to
/// tolerance and zero when g = f.
pub fn variational_inequality_check(
    op_f: &TransferOperator,
    eig_f: &EigenData,
    op_g: &TransferOperator,
    eig_g: &EigenData,
) -> Result<f64> {
    let h_g = entropy(op_g, eig_g)?;
    let f_against_mg = expectation(op_g, eig_g, &op_f.potential)?;
    Ok(pressure(eig_f) - (h_g + f_against_mg))
}

/// Full pressure report for one operator.
pub fn pressure_report(
    op: &TransferOperator,
    eig: &EigenData,
    deviation_ns: &[usize],
) -> Result<PressureReport> {
    let energy = energy(op, eig)?;
    Ok(PressureReport {
        pressure: pressure(eig),
        entropy: pressure(eig) - energy,
        energy,
        finite_n_sup_dev: finite_n_deviation_series(op, eig, deviation_ns)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::make_finite_alphabet;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn eig_of(op: &TransferOperator) -> EigenData {
        op.power_iteration(1e-12, 100_000).unwrap()
    }

    fn random_depth2(seed: u64, scale: f64) -> Potential {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table: Vec<f64> = (0..4).map(|_| rng.gen_range(-scale..scale)).collect();
        Potential::new(2, 0.5, 4.0 * scale, "random-table", move |x| {
            table[(x[0][0] as usize) * 2 + x[1][0] as usize]
        })
    }

    #[test]
    fn zero_and_constant_pressure() {
        let a = make_finite_alphabet(3).unwrap();
        let zero = TransferOperator::new(&a, &Potential::new(2, 0.5, 0.0, "zero", |_| 0.0)).unwrap();
        let eig = eig_of(&zero);
        assert!(pressure(&eig).abs() < 1e-12);
        assert!(entropy(&zero, &eig).unwrap().abs() < 1e-12);

        let c = 1.7;
        let cop = TransferOperator::new(&a, &Potential::constant(c)).unwrap();
        let eig_c = eig_of(&cop);
        assert!((pressure(&eig_c) - c).abs() < 1e-12);
        // h = P - c = 0
        assert!(entropy(&cop, &eig_c).unwrap().abs() < 1e-12);
    }

    #[test]
    fn finite_n_pressure_exact_for_constants() {
        let a = make_finite_alphabet(2).unwrap();
        let c = -0.4;
        let op = TransferOperator::new(&a, &Potential::constant(c)).unwrap();
        for n in [1usize, 7, 50] {
            let phi = finite_n_pressure(&op, n).unwrap();
            for v in &phi.values {
                assert!((v - c).abs() < 1e-13, "n = {n}");
            }
        }
        let zero = TransferOperator::new(&a, &Potential::new(1, 0.5, 0.0, "zero", |_| 0.0)).unwrap();
        let phi = finite_n_pressure(&zero, 5).unwrap();
        for v in &phi.values {
            assert!(v.abs() < 1e-14);
        }
        assert!(finite_n_pressure(&op, 0).is_err());
    }

    #[test]
    fn pressure_shift_and_monotonicity() {
        let a = make_finite_alphabet(2).unwrap();
        let f = random_depth2(3, 1.0);
        let op = TransferOperator::new(&a, &f).unwrap();
        let p = pressure(&eig_of(&op));
        for c in [-1.0, 0.5, 3.0] {
            let shifted = TransferOperator::new(&a, &f.shifted(c)).unwrap();
            assert!((pressure(&eig_of(&shifted)) - (p + c)).abs() < 1e-12, "c = {c}");
        }
        // monotone: f <= f + 0.3 pointwise
        let bigger = TransferOperator::new(&a, &f.shifted(0.3)).unwrap();
        assert!(pressure(&eig_of(&bigger)) >= p);
    }

    #[test]
    fn lipschitz_bound_random_pairs() {
        let a = make_finite_alphabet(2).unwrap();
        for seed in 0..10 {
            let f = random_depth2(seed, 1.0);
            let g = random_depth2(seed + 100, 1.0);
            let op_f = TransferOperator::new(&a, &f).unwrap();
            let op_g = TransferOperator::new(&a, &g).unwrap();
            let check =
                pressure_lipschitz_check(&op_f, &eig_of(&op_f), &op_g, &eig_of(&op_g)).unwrap();
            assert!(check.lhs <= check.rhs + 1e-10, "seed {seed}");
            for (n, sup) in &check.finite_n {
                assert!(*sup <= check.rhs + 1e-10, "seed {seed}, n = {n}");
            }
        }
        // g = f + c gives equality
        let f = random_depth2(55, 1.0);
        let g = f.shifted(0.9);
        let op_f = TransferOperator::new(&a, &f).unwrap();
        let op_g = TransferOperator::new(&a, &g).unwrap();
        let check = pressure_lipschitz_check(&op_f, &eig_of(&op_f), &op_g, &eig_of(&op_g)).unwrap();
        assert!((check.lhs - 0.9).abs() < 1e-11);
        assert!((check.rhs - 0.9).abs() < 1e-12);
    }

    #[test]
    fn entropy_nonpositive() {
        let a = make_finite_alphabet(2).unwrap();
        for seed in 0..8 {
            let f = random_depth2(seed, 1.5);
            let op = TransferOperator::new(&a, &f).unwrap();
            let h = entropy(&op, &eig_of(&op)).unwrap();
            assert!(h <= 1e-10, "seed {seed}: entropy {h}");
        }
    }

    #[test]
    fn pressure_identity_entropy_plus_energy() {
        let a = make_finite_alphabet(2).unwrap();
        let f = random_depth2(7, 1.2);
        let op = TransferOperator::new(&a, &f).unwrap();
        let eig = eig_of(&op);
        let report = pressure_report(&op, &eig, &[8, 16]).unwrap();
        assert!((report.pressure - (report.entropy + report.energy)).abs() < 1e-10);
        // deviations shrink with n
        assert!(report.finite_n_sup_dev[1].1 <= report.finite_n_sup_dev[0].1 + 1e-12);
    }

    #[test]
    fn variational_slack() {
        let a = make_finite_alphabet(2).unwrap();
        let f = random_depth2(21, 1.0);
        let g = random_depth2(22, 1.0);
        let op_f = TransferOperator::new(&a, &f).unwrap();
        let op_g = TransferOperator::new(&a, &g).unwrap();
        let (eig_f, eig_g) = (eig_of(&op_f), eig_of(&op_g));
        // g = f: slack 0
        let self_slack = variational_inequality_check(&op_f, &eig_f, &op_f, &eig_f).unwrap();
        assert!(self_slack.abs() < 1e-9);
        // generic g: slack >= 0
        let slack = variational_inequality_check(&op_f, &eig_f, &op_g, &eig_g).unwrap();
        assert!(slack >= -1e-9);
        // f = 0: slack = -entropy(m_g) >= 0
        let zero = TransferOperator::new(&a, &Potential::new(2, 0.5, 0.0, "zero", |_| 0.0)).unwrap();
        let eig_zero = eig_of(&zero);
        let slack0 = variational_inequality_check(&zero, &eig_zero, &op_g, &eig_g).unwrap();
        let ent_g = entropy(&op_g, &eig_g).unwrap();
        assert!((slack0 + ent_g).abs() < 1e-9);
        assert!(slack0 >= -1e-9);
    }
}
