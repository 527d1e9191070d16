//! Discretized Ruelle operator on cylinder functions over the quadrature
//! grid, and its maximal eigendata.
//!
//! A depth-k potential closes the operator on depth-(k-1) cylinder
//! functions, so the discretization is exact up to quadrature: no Ulam-type
//! projection error enters. The implied matrix acts as
//!
//! ```text
//! (L phi)(x1..xm) = sum_a w_a e^{f(a, x1..xm)} phi(a, x1..x_{m-1})
//! ```
//!
//! and is applied matrix-free with the kernel weights precomputed.

use std::sync::Arc;

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::potential::Potential;

/// Kernel-weight budget for precomputation (entries = alphabet size x grid size).
const KERNEL_BUDGET: usize = 50_000_000;

/// Budget on branch evaluations for brute-force n-step expansions.
const BRANCH_BUDGET: usize = 1_000_000;

/// Index scheme for depth-m tuples of node indices, row-major: the first
/// coordinate is the most significant digit.
#[derive(Clone)]
pub struct CylinderGrid {
    pub alphabet: Alphabet,
    pub depth: usize,
    pub size: usize,
}

impl CylinderGrid {
    /// Grid of depth max(k - 1, 1) for a potential of depth k.
    pub fn for_potential(alphabet: &Alphabet, f: &Potential) -> Result<CylinderGrid> {
        CylinderGrid::new(alphabet, f.depth.saturating_sub(1).max(1))
    }

    pub fn new(alphabet: &Alphabet, depth: usize) -> Result<CylinderGrid> {
        if depth == 0 {
            return Err(Error::InvalidArgument("grid depth must be positive".into()));
        }
        let n = alphabet.len();
        let mut size: usize = 1;
        for _ in 0..depth {
            size = size
                .checked_mul(n)
                .filter(|&s| s <= KERNEL_BUDGET)
                .ok_or(Error::ResourceLimit {
                    what: format!("cylinder grid ({n}^{depth})"),
                    size: usize::MAX,
                    budget: KERNEL_BUDGET,
                })?;
        }
        Ok(CylinderGrid {
            alphabet: alphabet.clone(),
            depth,
            size,
        })
    }

    pub fn index_to_tuple(&self, mut index: usize) -> Vec<usize> {
        let n = self.alphabet.len();
        let mut tuple = vec![0usize; self.depth];
        for slot in (0..self.depth).rev() {
            tuple[slot] = index % n;
            index /= n;
        }
        tuple
    }

    pub fn tuple_to_index(&self, tuple: &[usize]) -> usize {
        let n = self.alphabet.len();
        tuple.iter().fold(0, |acc, &i| acc * n + i)
    }

    /// Node coordinate slices for a grid tuple.
    pub fn tuple_coords(&self, tuple: &[usize]) -> Vec<&[f64]> {
        tuple
            .iter()
            .map(|&i| self.alphabet.rule.nodes[i].as_slice())
            .collect()
    }

    /// Product quadrature weight of a grid point.
    pub fn quadrature_weight(&self, index: usize) -> f64 {
        self.index_to_tuple(index)
            .iter()
            .map(|&i| self.alphabet.rule.weights[i])
            .product()
    }
}

/// Real-valued function on a cylinder grid.
#[derive(Clone)]
pub struct GridFunction {
    pub grid: Arc<CylinderGrid>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn constant(grid: &Arc<CylinderGrid>, c: f64) -> GridFunction {
        GridFunction {
            grid: Arc::clone(grid),
            values: vec![c; grid.size],
        }
    }

    /// Evaluate a depth <= m potential-style function on every grid point.
    pub fn from_potential(grid: &Arc<CylinderGrid>, g: &Potential) -> Result<GridFunction> {
        if g.depth > grid.depth {
            return Err(Error::InvalidArgument(format!(
                "cannot restrict depth-{} function to a depth-{} grid",
                g.depth, grid.depth
            )));
        }
        let values = (0..grid.size)
            .map(|x| {
                let tuple = grid.index_to_tuple(x);
                g.eval(&grid.tuple_coords(&tuple))
            })
            .collect();
        Ok(GridFunction {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Maximal eigendata of the discretized operator.
#[derive(Clone)]
pub struct EigenData {
    pub lambda: f64,
    pub log_lambda: f64,
    /// Right eigenfunction, strictly positive, scaled so <h, nu> = 1.
    pub h: GridFunction,
    /// Left eigenmeasure as probability weights on the grid.
    pub nu: Vec<f64>,
    /// Modulus of the subleading spectrum divided by lambda.
    pub gap_ratio: f64,
    pub iterations: usize,
    pub residual_right: f64,
    pub residual_left: f64,
}

impl EigenData {
    /// Integral of a grid function against nu.
    pub fn integrate_nu(&self, phi: &[f64]) -> f64 {
        phi.iter().zip(&self.nu).map(|(p, n)| p * n).sum()
    }

    /// Integral of a grid function against the equilibrium state m_f = h nu.
    pub fn integrate_equilibrium(&self, phi: &[f64]) -> f64 {
        phi.iter()
            .zip(self.h.values.iter().zip(&self.nu))
            .map(|(p, (h, n))| p * h * n)
            .sum()
    }
}

/// The discretized Ruelle operator for one (alphabet, potential) pair, with
/// the kernel weights w_a e^{f(a, x)} precomputed.
pub struct TransferOperator {
    pub grid: Arc<CylinderGrid>,
    pub potential: Potential,
    /// weights[x * n + a] = w_a * exp(f(a, x_1..x_m)), n = alphabet size.
    kernel: Vec<f64>,
    /// N^{depth-1}, the stride of the first tuple slot.
    head_stride: usize,
}

impl TransferOperator {
    pub fn new(alphabet: &Alphabet, f: &Potential) -> Result<TransferOperator> {
        let grid = Arc::new(CylinderGrid::for_potential(alphabet, f)?);
        TransferOperator::on_grid(grid, f)
    }

    /// Build on an explicit grid; the grid depth must be at least f.depth - 1.
    pub fn on_grid(grid: Arc<CylinderGrid>, f: &Potential) -> Result<TransferOperator> {
        if f.depth > grid.depth + 1 {
            return Err(Error::InvalidArgument(format!(
                "potential depth {} does not close on a depth-{} grid",
                f.depth, grid.depth
            )));
        }
        let n = grid.alphabet.len();
        let entries = grid
            .size
            .checked_mul(n)
            .filter(|&e| e <= KERNEL_BUDGET)
            .ok_or(Error::ResourceLimit {
                what: "transfer kernel".into(),
                size: grid.size.saturating_mul(n),
                budget: KERNEL_BUDGET,
            })?;
        let mut kernel = vec![0.0; entries];
        let weights = &grid.alphabet.rule.weights;
        for x in 0..grid.size {
            let tuple = grid.index_to_tuple(x);
            let tail = grid.tuple_coords(&tuple);
            let mut coords: Vec<&[f64]> = Vec::with_capacity(grid.depth + 1);
            coords.push(&[]);
            coords.extend_from_slice(&tail);
            for a in 0..n {
                coords[0] = grid.alphabet.rule.nodes[a].as_slice();
                kernel[x * n + a] = weights[a] * f.eval(&coords).exp();
            }
        }
        let head_stride = grid.size / n;
        Ok(TransferOperator {
            grid,
            potential: f.clone(),
            kernel,
            head_stride,
        })
    }

    pub fn alphabet_len(&self) -> usize {
        self.grid.alphabet.len()
    }

    /// Grid index of the shifted-in tuple (a, x_1..x_{m-1}).
    #[inline]
    fn shift_in(&self, a: usize, x: usize) -> usize {
        a * self.head_stride + x / self.alphabet_len()
    }

    /// (L phi)(x) = sum_a kernel[x, a] phi(a, x_1..x_{m-1}).
    pub fn apply(&self, phi: &GridFunction) -> Result<GridFunction> {
        if phi.values.len() != self.grid.size {
            return Err(Error::InvalidArgument(format!(
                "grid size mismatch: phi has {} values, grid has {}",
                phi.values.len(),
                self.grid.size
            )));
        }
        let n = self.alphabet_len();
        let values = (0..self.grid.size)
            .map(|x| {
                // fixed node order keeps the reduction deterministic
                (0..n)
                    .map(|a| self.kernel[x * n + a] * phi.values[self.shift_in(a, x)])
                    .sum()
            })
            .collect();
        Ok(GridFunction {
            grid: Arc::clone(&self.grid),
            values,
        })
    }

    /// L applied to the pointwise product g * phi where g has depth up to
    /// m + 1, i.e. (L (g phi))(x) = sum_a kernel[x,a] g(a, x) phi(a, x_1..).
    pub fn apply_times(&self, g: &Potential, phi: &GridFunction) -> Result<GridFunction> {
        if g.depth > self.grid.depth + 1 {
            return Err(Error::InvalidArgument(format!(
                "factor depth {} exceeds grid closure depth {}",
                g.depth,
                self.grid.depth + 1
            )));
        }
        let n = self.alphabet_len();
        let values = (0..self.grid.size)
            .map(|x| {
                let tuple = self.grid.index_to_tuple(x);
                let tail = self.grid.tuple_coords(&tuple);
                let mut coords: Vec<&[f64]> = Vec::with_capacity(self.grid.depth + 1);
                coords.push(&[]);
                coords.extend_from_slice(&tail);
                (0..n)
                    .map(|a| {
                        coords[0] = self.grid.alphabet.rule.nodes[a].as_slice();
                        self.kernel[x * n + a]
                            * g.eval(&coords)
                            * phi.values[self.shift_in(a, x)]
                    })
                    .sum()
            })
            .collect();
        Ok(GridFunction {
            grid: Arc::clone(&self.grid),
            values,
        })
    }

    /// Adjoint action on measure weights: (L* u)(y) = sum over grid points
    /// x mapping onto y, i.e. u'(y1..ym) = sum_j kernel[(y2..ym,j), y1] u(y2..ym,j).
    pub fn apply_adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.grid.size {
            return Err(Error::InvalidArgument("grid size mismatch in adjoint".into()));
        }
        let n = self.alphabet_len();
        let out = (0..self.grid.size)
            .map(|y| {
                let head = y / self.head_stride;
                let rest = y % self.head_stride;
                (0..n)
                    .map(|j| {
                        let x = rest * n + j;
                        self.kernel[x * n + head] * u[x]
                    })
                    .sum()
            })
            .collect();
        Ok(out)
    }

    /// Dense matrix A[x][y] of the implied operator, for oracle tests.
    pub fn to_dense(&self) -> Result<Vec<Vec<f64>>> {
        if self.grid.size > 4096 {
            return Err(Error::ResourceLimit {
                what: "dense transfer matrix".into(),
                size: self.grid.size * self.grid.size,
                budget: 4096 * 4096,
            });
        }
        let n = self.alphabet_len();
        let mut dense = vec![vec![0.0; self.grid.size]; self.grid.size];
        for x in 0..self.grid.size {
            for a in 0..n {
                dense[x][self.shift_in(a, x)] += self.kernel[x * n + a];
            }
        }
        Ok(dense)
    }

    /// Power iteration for the maximal eigendata.
    ///
    /// Iterates phi <- L phi / ||L phi||_0 from phi = 1 and the adjoint from
    /// the product quadrature weights, refines lambda with one Rayleigh step
    /// <nu, L h> / <nu, h>, and estimates the spectral gap by deflated power
    /// iteration using the rank-one spectral projection pi(phi) = (int phi dnu) h.
    pub fn power_iteration(&self, tol: f64, max_iter: usize) -> Result<EigenData> {
        if tol <= 0.0 {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        let size = self.grid.size;

        // right eigenfunction
        let mut h = GridFunction::constant(&self.grid, 1.0);
        let mut lambda = 1.0;
        let mut iterations = 0;
        let mut converged = false;
        while iterations < max_iter {
            let next = self.apply(&h)?;
            if !next.is_finite() {
                return Err(Error::NumericalBreakdown(
                    "NaN or infinity in transfer iterate".into(),
                ));
            }
            if next.values.iter().any(|&v| v <= 0.0) {
                return Err(Error::NumericalBreakdown(
                    "nonpositive iterate of a positive kernel".into(),
                ));
            }
            let norm = next.sup_norm();
            let delta = (norm - lambda).abs();
            lambda = norm;
            h = GridFunction {
                grid: Arc::clone(&self.grid),
                values: next.values.iter().map(|v| v / norm).collect(),
            };
            iterations += 1;
            if delta < tol * lambda.abs().max(1.0) && iterations >= 3 {
                converged = true;
                break;
            }
        }

        // left eigenmeasure from the adjoint
        let mut nu: Vec<f64> = (0..size).map(|x| self.grid.quadrature_weight(x)).collect();
        let mut left_iters = 0;
        while left_iters < max_iter {
            let next = self.apply_adjoint(&nu)?;
            let total: f64 = next.iter().sum();
            if !total.is_finite() || total <= 0.0 {
                return Err(Error::NumericalBreakdown(
                    "degenerate adjoint iterate".into(),
                ));
            }
            let delta: f64 = next
                .iter()
                .zip(&nu)
                .map(|(a, b)| (a / total - b).abs())
                .sum();
            nu = next.iter().map(|v| v / total).collect();
            left_iters += 1;
            if delta < tol && left_iters >= 3 {
                break;
            }
        }
        iterations += left_iters;

        // Rayleigh refinement: lambda <- <nu, L h> / <nu, h>
        let lh = self.apply(&h)?;
        let num: f64 = lh.values.iter().zip(&nu).map(|(a, b)| a * b).sum();
        let den: f64 = h.values.iter().zip(&nu).map(|(a, b)| a * b).sum();
        lambda = num / den;

        // normalize <h, nu> = 1 (nu already sums to 1)
        let scale: f64 = h.values.iter().zip(&nu).map(|(a, b)| a * b).sum();
        for v in &mut h.values {
            *v /= scale;
        }

        let lh = self.apply(&h)?;
        let residual_right = lh
            .values
            .iter()
            .zip(&h.values)
            .fold(0.0f64, |m, (a, b)| m.max((a / lambda - b).abs()));
        let lnu = self.apply_adjoint(&nu)?;
        let residual_left: f64 = lnu
            .iter()
            .zip(&nu)
            .map(|(a, b)| (a / lambda - b).abs())
            .sum();

        if !converged && residual_right > tol {
            return Err(Error::NonConvergence {
                iterations,
                residual: residual_right,
            });
        }

        let gap_ratio = self.deflated_gap(lambda, &h, &nu, tol)?;

        Ok(EigenData {
            lambda,
            log_lambda: lambda.ln(),
            h,
            nu,
            gap_ratio,
            iterations,
            residual_right,
            residual_left,
        })
    }

    /// Modulus of the subleading eigenvalue divided by lambda, by power
    /// iteration on lambda^{-1} L restricted to the complement of the
    /// rank-one spectral projection.
    fn deflated_gap(&self, lambda: f64, h: &GridFunction, nu: &[f64], tol: f64) -> Result<f64> {
        let size = self.grid.size;
        let project = |v: &mut Vec<f64>| {
            let mass: f64 = v.iter().zip(nu).map(|(a, b)| a * b).sum();
            for (vi, hi) in v.iter_mut().zip(&h.values) {
                *vi -= mass * hi;
            }
        };

        // deterministic generic start vector
        let mut v: Vec<f64> = (0..size).map(|i| (0.7 * (i as f64 + 1.0)).cos()).collect();
        project(&mut v);
        let mut norm = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if norm < 1e-200 {
            return Ok(0.0);
        }
        for x in &mut v {
            *x /= norm;
        }

        let mut ratio = 0.0;
        let mut ratios = Vec::new();
        for _ in 0..5000 {
            let gf = GridFunction {
                grid: Arc::clone(&self.grid),
                values: v,
            };
            let mut next = self.apply(&gf)?.values;
            for x in &mut next {
                *x /= lambda;
            }
            project(&mut next);
            norm = next.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if norm < 1e-200 {
                return Ok(0.0);
            }
            let prev = ratio;
            ratio = norm;
            ratios.push(norm);
            for x in &mut next {
                *x /= norm;
            }
            v = next;
            if ratios.len() > 10 && (ratio - prev).abs() < tol * ratio.max(1e-30) {
                return Ok(ratio);
            }
        }
        // no pointwise stabilization (e.g. a complex pair): report the
        // geometric mean of the trailing ratios as the modulus
        let tail = &ratios[ratios.len().saturating_sub(50)..];
        let log_mean: f64 = tail.iter().map(|r| r.ln()).sum::<f64>() / tail.len() as f64;
        Ok(log_mean.exp())
    }

    /// Max discrepancy of the pull-out identity
    /// L^n((phi o sigma^n) psi h) = phi L^n(psi h), with the left side
    /// evaluated by direct expansion over all n-step preimage branches and
    /// phi o sigma^n handled symbolically (it only sees the base point).
    pub fn pull_out_check(
        &self,
        phi_on_alphabet: &[f64],
        psi_h: &GridFunction,
        n: usize,
    ) -> Result<f64> {
        let alpha_n = self.alphabet_len();
        if phi_on_alphabet.len() != alpha_n {
            return Err(Error::InvalidArgument(
                "phi must be a depth-1 table on the alphabet".into(),
            ));
        }
        // right side: phi(x1) * (L^n psi_h)(x)
        let mut rhs = psi_h.clone();
        for _ in 0..n {
            rhs = self.apply(&rhs)?;
        }
        let lhs = self.iterate_brute_force(n, |seq| {
            let base_x1 = seq[n];
            let head = self.grid.tuple_to_index(&seq[..self.grid.depth]);
            phi_on_alphabet[base_x1] * psi_h.values[head]
        })?;
        let mut max_disc = 0.0f64;
        for x in 0..self.grid.size {
            let tuple = self.grid.index_to_tuple(x);
            let rhs_val = phi_on_alphabet[tuple[0]] * rhs.values[x];
            max_disc = max_disc.max((lhs[x] - rhs_val).abs());
        }
        Ok(max_disc)
    }

    /// Direct evaluation of (L^n g)(x) = sum over branch words of
    /// prod(w) e^{S_n f} g(word..x), where `g` receives the node-index
    /// sequence (a_n, .., a_1, x_1..x_m).
    pub fn iterate_brute_force<G: Fn(&[usize]) -> f64>(
        &self,
        n: usize,
        g: G,
    ) -> Result<Vec<f64>> {
        let alpha_n = self.alphabet_len();
        let branches = alpha_n.checked_pow(n as u32).unwrap_or(usize::MAX);
        let total = branches.saturating_mul(self.grid.size);
        if total > BRANCH_BUDGET {
            return Err(Error::ResourceLimit {
                what: format!("brute-force {n}-step expansion"),
                size: total,
                budget: BRANCH_BUDGET,
            });
        }
        let m = self.grid.depth;
        let mut out = vec![0.0; self.grid.size];
        for x in 0..self.grid.size {
            let tail = self.grid.index_to_tuple(x);
            let mut word = vec![0usize; n];
            let mut acc = 0.0;
            loop {
                // seq = (a_n, .., a_1, x_1..x_m)
                let mut seq = Vec::with_capacity(n + m);
                for i in (0..n).rev() {
                    seq.push(word[i]);
                }
                seq.extend_from_slice(&tail);
                let mut log_weight = 0.0;
                for &a in &word {
                    log_weight += self.grid.alphabet.rule.weights[a].ln();
                }
                for j in 0..n {
                    let coords: Vec<&[f64]> = seq[j..j + self.potential.depth]
                        .iter()
                        .map(|&i| self.grid.alphabet.rule.nodes[i].as_slice())
                        .collect();
                    log_weight += self.potential.eval(&coords);
                }
                acc += log_weight.exp() * g(&seq);

                // odometer over the branch word
                let mut pos = 0;
                loop {
                    if pos == n {
                        break;
                    }
                    word[pos] += 1;
                    if word[pos] < alpha_n {
                        break;
                    }
                    word[pos] = 0;
                    pos += 1;
                }
                if pos == n {
                    break;
                }
            }
            out[x] = acc;
        }
        Ok(out)
    }

    /// Convergence probe for the RPF limit: the series
    /// e_n = || lambda^{-n} L^n phi - h * <phi, nu> ||_0 for n = 1..n_max.
    pub fn rpf_convergence_probe(
        &self,
        eig: &EigenData,
        phi: &GridFunction,
        n_max: usize,
    ) -> Result<Vec<f64>> {
        let target: f64 = eig.integrate_nu(&phi.values);
        let mut v = phi.clone();
        let mut series = Vec::with_capacity(n_max);
        for _ in 1..=n_max {
            v = self.apply(&v)?;
            for x in &mut v.values {
                *x /= eig.lambda;
            }
            let e = v
                .values
                .iter()
                .zip(&eig.h.values)
                .fold(0.0f64, |m, (a, b)| m.max((a - b * target).abs()));
            series.push(e);
        }
        Ok(series)
    }
}
