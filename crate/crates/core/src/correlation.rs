//! Correlation functions of the equilibrium state and exponential decay
//! fits against the spectral gap.
//!
//! Correlations are computed spectrally through the pull-out identity
//! L^n((phi o sigma^n) psi h) = phi L^n(psi h), so one accumulating pass
//! over n produces a machine-precision series. Monte Carlo estimates live
//! in the `heisenberg` module.

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::transfer::{EigenData, GridFunction, TransferOperator};

/// C(n) series with a fitted exponential envelope.
#[derive(Clone, Debug)]
pub struct CorrelationSeries {
    /// C(n) for n = 0..=n_max.
    pub values: Vec<f64>,
    /// Envelope constant: |C(n)| <= fitted_k * fitted_tau^n on all entries.
    pub fitted_k: f64,
    pub fitted_tau: f64,
    /// Residual of the log-linear fit.
    pub fit_residual: f64,
    /// Spectral gap ratio of the eigendata the series was computed from.
    pub gap_tau: f64,
}

/// C_{phi,psi}(n) = <nu, phi lambda^{-n} L^n(psi h)> - <phi>_m <psi>_m for
/// a single n. `phi` must restrict to the grid (depth <= m); so must `psi`.
pub fn correlation(
    op: &TransferOperator,
    eig: &EigenData,
    phi: &Potential,
    psi: &Potential,
    n: usize,
) -> Result<f64> {
    Ok(correlation_series_raw(op, eig, phi, psi, n)?[n])
}

/// The full series C(0..=n_max) in one accumulating pass over the iterated
/// vectors lambda^{-n} L^n(psi h).
pub fn correlation_series_raw(
    op: &TransferOperator,
    eig: &EigenData,
    phi: &Potential,
    psi: &Potential,
    n_max: usize,
) -> Result<Vec<f64>> {
    let phi_grid = GridFunction::from_potential(&op.grid, phi)?;
    let psi_grid = GridFunction::from_potential(&op.grid, psi)?;

    let mean_phi: f64 = eig.integrate_equilibrium(&phi_grid.values);
    let mean_psi: f64 = eig.integrate_equilibrium(&psi_grid.values);

    // v_0 = psi h, v_{n+1} = L v_n / lambda
    let mut v = GridFunction {
        grid: psi_grid.grid.clone(),
        values: psi_grid
            .values
            .iter()
            .zip(&eig.h.values)
            .map(|(p, h)| p * h)
            .collect(),
    };
    let mut series = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            v = op.apply(&v)?;
            for x in &mut v.values {
                *x /= eig.lambda;
            }
        }
        let cross: f64 = phi_grid
            .values
            .iter()
            .zip(v.values.iter().zip(&eig.nu))
            .map(|(p, (w, nu))| p * w * nu)
            .sum();
        series.push(cross - mean_phi * mean_psi);
    }
    Ok(series)
}

/// Log-linear least squares on (n, log |C(n)|) over the usable window:
/// entries with n >= 2 (transient dropped) and |C(n)| > 1e-13 (roundoff
/// floor). Returns (K, tau_hat) with K lifted to an upper envelope over
/// the whole recorded series.
pub fn decay_fit(values: &[f64]) -> Result<(f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .filter(|(n, c)| *n >= 2 && c.abs() > 1e-13)
        .map(|(n, c)| (n as f64, c.abs().ln()))
        .collect();
    if pts.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "decay fit needs at least 5 usable points, found {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let residual = pts
        .iter()
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum::<f64>()
        .sqrt()
        / n.sqrt();
    let tau = slope.exp();
    // lift K so the envelope dominates every recorded entry
    let mut k: f64 = intercept.exp();
    for (i, c) in values.iter().enumerate() {
        if c.abs() > 1e-13 {
            k = k.max(c.abs() / tau.powi(i as i32));
        }
    }
    Ok((k, tau, residual))
}

/// Compute the series and fit its decay in one call.
pub fn correlation_series(
    op: &TransferOperator,
    eig: &EigenData,
    phi: &Potential,
    psi: &Potential,
    n_max: usize,
) -> Result<CorrelationSeries> {
    let values = correlation_series_raw(op, eig, phi, psi, n_max)?;
    let (fitted_k, fitted_tau, fit_residual) = decay_fit(&values)?;
    Ok(CorrelationSeries {
        values,
        fitted_k,
        fitted_tau,
        fit_residual,
        gap_tau: eig.gap_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::make_finite_alphabet;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_depth2(seed: u64) -> Potential {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Potential::new(2, 0.5, 4.0, "random-table", move |x| {
            table[(x[0][0] as usize) * 2 + x[1][0] as usize]
        })
    }

    fn setup(seed: u64) -> (TransferOperator, EigenData) {
        let a = make_finite_alphabet(2).unwrap();
        let op = TransferOperator::new(&a, &random_depth2(seed)).unwrap();
        let eig = op.power_iteration(1e-13, 100_000).unwrap();
        (op, eig)
    }

    fn coord() -> Potential {
        Potential::new(1, 0.5, 1.0, "coord", |x| x[0][0])
    }

    #[test]
    fn psi_one_degenerates_to_zero() {
        let (op, eig) = setup(4);
        let one = Potential::constant(1.0);
        let phi = coord();
        let series = correlation_series_raw(&op, &eig, &phi, &one, 12).unwrap();
        for (n, c) in series.iter().enumerate() {
            assert!(c.abs() < 1e-11, "n = {n}: C = {c}");
        }
        // and symmetrically with phi = 1
        let series = correlation_series_raw(&op, &eig, &one, &phi, 12).unwrap();
        for c in &series {
            assert!(c.abs() < 1e-11);
        }
    }

    #[test]
    fn lag_zero_is_variance() {
        let (op, eig) = setup(9);
        let phi = coord();
        let c0 = correlation(&op, &eig, &phi, &phi, 0).unwrap();
        assert!(c0 >= 0.0);
    }

    #[test]
    fn bilinearity() {
        let (op, eig) = setup(2);
        let phi = coord();
        let psi = Potential::new(1, 0.5, 1.0, "flip", |x| 1.0 - 2.0 * x[0][0]);
        let combo = Potential::linear_combination(0.6, &phi, -0.9, &psi);
        for n in [0usize, 1, 3] {
            let lhs = correlation(&op, &eig, &combo, &phi, n).unwrap();
            let rhs = 0.6 * correlation(&op, &eig, &phi, &phi, n).unwrap()
                - 0.9 * correlation(&op, &eig, &psi, &phi, n).unwrap();
            assert!((lhs - rhs).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn decay_fit_exact_geometric() {
        let values: Vec<f64> = (0..20).map(|n| 3.0 * 0.5f64.powi(n)).collect();
        let (k, tau, residual) = decay_fit(&values).unwrap();
        assert!((tau - 0.5).abs() < 1e-10);
        assert!((k - 3.0).abs() < 1e-9);
        assert!(residual < 1e-10);
    }

    #[test]
    fn decay_fit_insufficient_data() {
        let values = vec![1.0, 0.5, 1e-16, 1e-16, 1e-16, 1e-16];
        assert!(matches!(
            decay_fit(&values),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn fitted_tau_tracks_gap() {
        let (op, eig) = setup(31);
        let phi = coord();
        let series = correlation_series(&op, &eig, &phi, &phi, 25).unwrap();
        assert!(series.fitted_tau <= series.gap_tau + 0.05);
        for (n, c) in series.values.iter().enumerate() {
            assert!(
                c.abs() <= series.fitted_k * series.fitted_tau.powi(n as i32) + 1e-13,
                "envelope violated at n = {n}"
            );
        }
    }
}
