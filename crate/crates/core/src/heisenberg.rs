//! The Heisenberg-type ladder model on a truncated N x Z lattice: exact
//! sampling of the a priori chain measure, heat-bath MCMC for the ladder
//! Gibbs measure, two-point function estimation, and cross-checks against
//! the transfer-operator pipeline at tiny window sizes.
//!
//! All single-spin conditionals have density proportional to e^{h . sigma}
//! on S^2, which admits exact inverse-CDF sampling, so the heat bath is
//! rejection-free and detailed balance holds to roundoff.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::alphabet::{make_chain_window_alphabet_with_budget, Alphabet};
use crate::error::{Error, Result};
use crate::potential::heisenberg_potential;
use crate::transfer::TransferOperator;

pub type Spin = [f64; 3];

fn dot(a: &Spin, b: &Spin) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &Spin) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: &mut Spin) {
    let n = norm(a);
    a[0] /= n;
    a[1] /= n;
    a[2] /= n;
}

/// Langevin function coth(beta) - 1/beta, the mean alignment <s.t> of the
/// kernel e^{beta s.t} and the eigenvalue ratio of the spherical chain.
pub fn langevin(beta: f64) -> f64 {
    if beta == 0.0 {
        0.0
    } else if beta.abs() < 1e-4 {
        // series: beta/3 - beta^3/45
        beta / 3.0 - beta.powi(3) / 45.0
    } else {
        1.0 / beta.tanh() - 1.0 / beta
    }
}

/// One spin-chain row: unit 3-vectors on sites -W..W.
#[derive(Clone, Debug)]
pub struct ChainConfig {
    pub spins: Vec<Spin>,
}

impl ChainConfig {
    pub fn window_radius(&self) -> usize {
        (self.spins.len() - 1) / 2
    }

    /// Spin at chain coordinate n in [-W, W].
    pub fn spin(&self, n: i64) -> &Spin {
        &self.spins[(n + self.window_radius() as i64) as usize]
    }
}

/// Truncated ladder configuration: rows 1..R of chains over sites -W..W.
#[derive(Clone, Debug)]
pub struct LadderState {
    pub rows: Vec<ChainConfig>,
    pub beta: f64,
    pub alpha_decay: f64,
    pub window_radius: usize,
}

impl LadderState {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn sites(&self) -> usize {
        2 * self.window_radius + 1
    }

    /// All spins unit norm within tolerance.
    pub fn is_normalized(&self, tol: f64) -> bool {
        self.rows
            .iter()
            .flat_map(|r| &r.spins)
            .all(|s| (norm(s) - 1.0).abs() <= tol)
    }

    /// Free-boundary energy (the exponent of the Gibbs density): vertical
    /// chain couplings beta s.s' plus cross-row couplings beta J(n) s.s'.
    pub fn energy(&self) -> f64 {
        let w = self.window_radius as i64;
        let mut total = 0.0;
        for row in &self.rows {
            for n in -w..w {
                total += self.beta * dot(row.spin(n), row.spin(n + 1));
            }
        }
        for i in 0..self.rows.len() - 1 {
            for n in -w..=w {
                let coupling = self.beta * (-self.alpha_decay * n.abs() as f64).exp();
                total += coupling * dot(self.rows[i].spin(n), self.rows[i + 1].spin(n));
            }
        }
        total
    }
}

/// Uniform point on the unit sphere.
pub fn sample_uniform(rng: &mut impl Rng) -> Spin {
    let c: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - c * c).sqrt();
    [s * phi.cos(), s * phi.sin(), c]
}

/// Exact sample of t on S^2 with density proportional to e^{beta s.t}.
///
/// cos of the angle to s is drawn by inverse CDF,
/// c = (1/beta) log(1 - u + u e^{2 beta}) - 1, azimuth uniform, then the
/// local frame of s is rotated in and the result renormalized.
pub fn sample_kernel(s: &Spin, beta: f64, rng: &mut impl Rng) -> Result<Spin> {
    if beta < 0.0 {
        return Err(Error::InvalidArgument(
            "kernel concentration must be nonnegative; negate s for antiferromagnetic coupling"
                .into(),
        ));
    }
    if beta < 1e-14 {
        return Ok(sample_uniform(rng));
    }
    let u: f64 = rng.gen_range(0.0..1.0);
    // stable at large beta: log(1 - u + u e^{2b}) = 2b + log(u + (1-u) e^{-2b})
    let c = (2.0 * beta + (u + (1.0 - u) * (-2.0 * beta).exp()).ln()) / beta - 1.0;
    let c = c.clamp(-1.0, 1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let sin_t = (1.0 - c * c).sqrt();

    // orthonormal frame (e1, e2) perpendicular to s
    let mut e1: Spin = if s[0].abs() < 0.7 {
        [0.0, -s[2], s[1]]
    } else {
        [-s[2], 0.0, s[0]]
    };
    normalize(&mut e1);
    let e2 = [
        s[1] * e1[2] - s[2] * e1[1],
        s[2] * e1[0] - s[0] * e1[2],
        s[0] * e1[1] - s[1] * e1[0],
    ];
    let mut t = [
        c * s[0] + sin_t * (phi.cos() * e1[0] + phi.sin() * e2[0]),
        c * s[1] + sin_t * (phi.cos() * e1[1] + phi.sin() * e2[1]),
        c * s[2] + sin_t * (phi.cos() * e1[2] + phi.sin() * e2[2]),
    ];
    normalize(&mut t);
    Ok(t)
}

/// Exact draw from the finite-volume free-boundary chain measure: the left
/// end is uniform and each subsequent spin follows the transition kernel,
/// which is exact because the kernel normalizer sinh(beta)/beta does not
/// depend on the conditioning spin.
pub fn sample_chain(beta: f64, window_radius: usize, rng: &mut impl Rng) -> Result<ChainConfig> {
    let sites = 2 * window_radius + 1;
    let mut spins = Vec::with_capacity(sites);
    spins.push(sample_uniform(rng));
    for i in 1..sites {
        let prev = spins[i - 1];
        spins.push(sample_kernel(&prev, beta, rng)?);
    }
    Ok(ChainConfig { spins })
}

/// Fresh ladder with iid uniform spins.
pub fn random_ladder(
    rows: usize,
    window_radius: usize,
    beta: f64,
    alpha_decay: f64,
    rng: &mut impl Rng,
) -> Result<LadderState> {
    if rows < 2 {
        return Err(Error::InvalidArgument("ladder needs at least 2 rows".into()));
    }
    let sites = 2 * window_radius + 1;
    let rows = (0..rows)
        .map(|_| ChainConfig {
            spins: (0..sites).map(|_| sample_uniform(rng)).collect(),
        })
        .collect();
    Ok(LadderState {
        rows,
        beta,
        alpha_decay,
        window_radius,
    })
}

/// Local field at site (row, n): vertical chain neighbors at coupling beta,
/// cross-row neighbors at coupling beta e^{-alpha |n|}; missing neighbors
/// at the free boundaries are omitted.
fn local_field(state: &LadderState, row: usize, n: i64) -> Spin {
    let w = state.window_radius as i64;
    let mut h = [0.0; 3];
    let mut add = |s: &Spin, c: f64| {
        h[0] += c * s[0];
        h[1] += c * s[1];
        h[2] += c * s[2];
    };
    if n > -w {
        add(state.rows[row].spin(n - 1), state.beta);
    }
    if n < w {
        add(state.rows[row].spin(n + 1), state.beta);
    }
    let cross = state.beta * (-state.alpha_decay * n.abs() as f64).exp();
    if row > 0 {
        add(state.rows[row - 1].spin(n), cross);
    }
    if row + 1 < state.rows.len() {
        add(state.rows[row + 1].spin(n), cross);
    }
    h
}

/// Sequential single-site heat-bath sweeps: every site is resampled exactly
/// from its conditional e^{h . sigma} given its neighbors. The invariant
/// measure is the finite-volume free-boundary Gibbs measure.
pub fn ladder_heat_bath(
    state: &mut LadderState,
    sweeps: usize,
    rng: &mut impl Rng,
) -> Result<()> {
    let w = state.window_radius as i64;
    for _ in 0..sweeps {
        for row in 0..state.rows.len() {
            for n in -w..=w {
                let h = local_field(state, row, n);
                let h_norm = norm(&h);
                let new_spin = if h_norm < 1e-300 {
                    sample_uniform(rng)
                } else {
                    let dir = [h[0] / h_norm, h[1] / h_norm, h[2] / h_norm];
                    sample_kernel(&dir, h_norm, rng)?
                };
                let idx = (n + w) as usize;
                state.rows[row].spins[idx] = new_spin;
            }
        }
    }
    Ok(())
}

/// Log of the heat-bath transition density at one site (relative to the
/// uniform measure): h . t - log(sinh|h| / |h|), with the convention that
/// a vanishing field gives the uniform density 0.
pub fn heat_bath_log_density(state: &LadderState, row: usize, n: i64, target: &Spin) -> f64 {
    let h = local_field(state, row, n);
    let h_norm = norm(&h);
    if h_norm < 1e-300 {
        return 0.0;
    }
    dot(&h, target) - (h_norm.sinh() / h_norm).ln()
}

/// Parameters for one MCMC run.
#[derive(Clone, Debug)]
pub struct LadderParams {
    pub rows: usize,
    pub window_radius: usize,
    pub beta: f64,
    pub alpha_decay: f64,
    pub burn_in_sweeps: usize,
    pub measure_sweeps: usize,
    pub measure_every: usize,
    /// Chain column m at which the two-point function is measured.
    pub column: i64,
    /// Largest row separation measured.
    pub n_max: usize,
    pub seed: u64,
}

impl LadderParams {
    /// Desk-scale defaults from the model study.
    pub fn desk_scale(beta: f64, alpha_decay: f64, seed: u64) -> LadderParams {
        LadderParams {
            rows: 12,
            window_radius: 8,
            beta,
            alpha_decay,
            burn_in_sweeps: 20_000,
            measure_sweeps: 200_000,
            measure_every: 5,
            column: 0,
            n_max: 6,
            seed,
        }
    }
}

/// Raw measurement record from one run.
pub struct LadderRun {
    pub params: LadderParams,
    /// Per measurement: sigma_{(1,m)} . sigma_{(n+1,m)} for n = 1..=n_max.
    pub overlap_samples: Vec<Vec<f64>>,
    /// Per measurement: the spin sigma_{(1,m)} itself.
    pub one_point_samples: Vec<Spin>,
    /// Per measurement: energy per site, for stationarity diagnostics.
    pub energy_samples: Vec<f64>,
    pub final_state: LadderState,
}

/// Run burn-in plus measurement sweeps with a ChaCha stream seeded from
/// `params.seed`.
pub fn run_ladder(params: &LadderParams) -> Result<LadderRun> {
    if params.n_max + 1 > params.rows {
        return Err(Error::InvalidArgument(format!(
            "n_max {} needs at least {} rows",
            params.n_max,
            params.n_max + 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut state = random_ladder(
        params.rows,
        params.window_radius,
        params.beta,
        params.alpha_decay,
        &mut rng,
    )?;
    ladder_heat_bath(&mut state, params.burn_in_sweeps, &mut rng)?;

    let measurements = params.measure_sweeps / params.measure_every;
    let site_count = (params.rows * state.sites()) as f64;
    let mut overlap_samples = Vec::with_capacity(measurements);
    let mut one_point_samples = Vec::with_capacity(measurements);
    let mut energy_samples = Vec::with_capacity(measurements);
    for _ in 0..measurements {
        ladder_heat_bath(&mut state, params.measure_every, &mut rng)?;
        let anchor = *state.rows[0].spin(params.column);
        let overlaps = (1..=params.n_max)
            .map(|n| dot(&anchor, state.rows[n].spin(params.column)))
            .collect();
        overlap_samples.push(overlaps);
        one_point_samples.push(anchor);
        energy_samples.push(state.energy() / site_count);
    }
    Ok(LadderRun {
        params: params.clone(),
        overlap_samples,
        one_point_samples,
        energy_samples,
        final_state: state,
    })
}

/// Integrated autocorrelation time of a series, with the standard
/// self-consistent window cutoff.
pub fn integrated_autocorrelation(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 10 {
        return 1.0;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let var: f64 = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return 1.0;
    }
    let mut tau = 1.0;
    for lag in 1..n / 2 {
        let mut acf = 0.0;
        for i in 0..n - lag {
            acf += (series[i] - mean) * (series[i + lag] - mean);
        }
        acf /= (n - lag) as f64 * var;
        if acf < 0.05 {
            break;
        }
        tau += 2.0 * acf;
        if lag as f64 > 6.0 * tau {
            break;
        }
    }
    tau
}

/// Two-point function estimates with jackknife errors and a log-linear
/// decay fit.
#[derive(Clone, Debug)]
pub struct TwoPointReport {
    pub distances: Vec<usize>,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Envelope K(beta) of the fit g(n) ~ K e^{-c n}.
    pub fitted_k: f64,
    /// Decay rate c(beta).
    pub fitted_c: f64,
    pub fitted_c_std_error: f64,
    /// Largest |component| of the one-point function <sigma_{(1,m)}>.
    pub one_point: f64,
    pub one_point_std_error: f64,
    pub effective_sample_size: f64,
}

const JACKKNIFE_BLOCKS: usize = 25;

fn jackknife_mean_err(samples: &[f64]) -> (f64, f64) {
    let b = JACKKNIFE_BLOCKS.min(samples.len());
    let block_len = samples.len() / b;
    let used = block_len * b;
    let total: f64 = samples[..used].iter().sum();
    let mean = total / used as f64;
    let mut dev = 0.0;
    for i in 0..b {
        let block_sum: f64 = samples[i * block_len..(i + 1) * block_len].iter().sum();
        let loo = (total - block_sum) / (used - block_len) as f64;
        dev += (loo - mean) * (loo - mean);
    }
    (mean, ((b - 1) as f64 / b as f64 * dev).sqrt())
}

fn fit_decay(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    Some((slope, intercept))
}

/// Estimate g(n) = <sigma_{(1,m)} . sigma_{(n+1,m)}> from one or more runs
/// (independent chains are pooled; errors are block-jackknifed per the
/// pooled series) and fit the exponential decay rate.
pub fn two_point(runs: &[LadderRun]) -> Result<TwoPointReport> {
    if runs.is_empty() {
        return Err(Error::InsufficientData("no runs provided".into()));
    }
    let n_max = runs[0].params.n_max;

    // effective sample size from the pooled g(1) series
    let mut ess = 0.0;
    for run in runs {
        let g1: Vec<f64> = run.overlap_samples.iter().map(|v| v[0]).collect();
        let tau = integrated_autocorrelation(&g1);
        ess += g1.len() as f64 / tau;
    }
    if ess < 100.0 {
        return Err(Error::InsufficientData(format!(
            "effective sample size {ess:.1} < 100"
        )));
    }

    let mut distances = Vec::with_capacity(n_max);
    let mut estimates = Vec::with_capacity(n_max);
    let mut std_errors = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let series: Vec<f64> = runs
            .iter()
            .flat_map(|r| r.overlap_samples.iter().map(move |v| v[n - 1]))
            .collect();
        let (mean, err) = jackknife_mean_err(&series);
        distances.push(n);
        estimates.push(mean);
        std_errors.push(err);
    }

    // one-point function: worst component
    let mut one_point = 0.0f64;
    let mut one_point_std_error = 0.0f64;
    for comp in 0..3 {
        let series: Vec<f64> = runs
            .iter()
            .flat_map(|r| r.one_point_samples.iter().map(move |s| s[comp]))
            .collect();
        let (mean, err) = jackknife_mean_err(&series);
        if mean.abs() > one_point {
            one_point = mean.abs();
            one_point_std_error = err;
        }
    }

    // log-linear fit over significant positive entries
    let usable: Vec<(f64, f64)> = distances
        .iter()
        .zip(estimates.iter().zip(&std_errors))
        .filter(|(_, (g, e))| **g > 2.0 * **e && **g > 0.0)
        .map(|(n, (g, _))| (*n as f64, g.ln()))
        .collect();
    let (slope, intercept) = fit_decay(&usable).ok_or_else(|| {
        Error::InsufficientData("fewer than 2 significant two-point entries".into())
    })?;

    // jackknife the slope over blocks of the pooled samples
    let all: Vec<&Vec<f64>> = runs.iter().flat_map(|r| r.overlap_samples.iter()).collect();
    let b = JACKKNIFE_BLOCKS.min(all.len());
    let block_len = all.len() / b;
    let mut slopes = Vec::with_capacity(b);
    for i in 0..b {
        let mut pts = Vec::new();
        for (k, &n) in distances.iter().enumerate() {
            let mut sum = 0.0;
            let mut count = 0usize;
            for (j, sample) in all.iter().enumerate() {
                if j / block_len != i || j >= block_len * b {
                    sum += sample[k];
                    count += 1;
                }
            }
            let g = sum / count as f64;
            if usable.iter().any(|(un, _)| *un == n as f64) && g > 0.0 {
                pts.push((n as f64, g.ln()));
            }
        }
        if let Some((s, _)) = fit_decay(&pts) {
            slopes.push(s);
        }
    }
    let slope_err = if slopes.len() > 1 {
        let mean_s = slopes.iter().sum::<f64>() / slopes.len() as f64;
        let dev: f64 = slopes.iter().map(|s| (s - mean_s) * (s - mean_s)).sum();
        ((slopes.len() - 1) as f64 / slopes.len() as f64 * dev).sqrt()
    } else {
        f64::INFINITY
    };

    Ok(TwoPointReport {
        distances,
        estimates,
        std_errors,
        fitted_k: intercept.exp(),
        fitted_c: -slope,
        fitted_c_std_error: slope_err,
        one_point,
        one_point_std_error,
        effective_sample_size: ess,
    })
}

/// Operator-side results for the windowed ladder model.
#[derive(Clone, Debug)]
pub struct CrosscheckReport {
    pub lambda: f64,
    pub pressure: f64,
    pub gap_ratio: f64,
    pub window_radius: usize,
}

/// Build the windowed chain alphabet, run the transfer pipeline on the
/// ladder potential at inverse temperature beta, and report the spectral
/// quantities to compare with MCMC decay fits.
pub fn ladder_operator_crosscheck(
    base: &Alphabet,
    beta: f64,
    alpha_decay: f64,
    window_radius: usize,
    budget: usize,
    tol: f64,
    max_iter: usize,
) -> Result<CrosscheckReport> {
    let window = make_chain_window_alphabet_with_budget(base, window_radius, beta, budget)?;
    let f = heisenberg_potential(alpha_decay, window_radius).scaled(beta);
    let op = TransferOperator::new(&window.as_alphabet(), &f)?;
    let eig = op.power_iteration(tol, max_iter)?;
    Ok(CrosscheckReport {
        lambda: eig.lambda,
        pressure: eig.log_lambda,
        gap_ratio: eig.gap_ratio,
        window_radius,
    })
}
