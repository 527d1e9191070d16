//! Potentials as depth-k cylinder functions with Holder metadata, the
//! sequence metric on Omega = M^N, truncation of general potentials, and
//! the Heisenberg ladder potential.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};

type EvalFn = dyn Fn(&[&[f64]]) -> f64 + Send + Sync;

/// A potential f on Omega depending only on its first `depth` coordinates.
#[derive(Clone)]
pub struct Potential {
    pub depth: usize,
    eval: Arc<EvalFn>,
    /// Holder exponent alpha in (0, 1).
    pub holder_alpha: f64,
    /// Declared bound on Hol_alpha(f).
    pub holder_const: f64,
    pub name: String,
}

impl Potential {
    pub fn new<F>(depth: usize, holder_alpha: f64, holder_const: f64, name: &str, eval: F) -> Self
    where
        F: Fn(&[&[f64]]) -> f64 + Send + Sync + 'static,
    {
        assert!(depth >= 1, "potential depth must be positive");
        assert!(
            holder_alpha > 0.0 && holder_alpha < 1.0,
            "holder exponent must lie in (0,1)"
        );
        Potential {
            depth,
            eval: Arc::new(eval),
            holder_alpha,
            holder_const,
            name: name.to_string(),
        }
    }

    /// Evaluate on (at least) the first `depth` coordinates.
    pub fn eval(&self, coords: &[&[f64]]) -> f64 {
        debug_assert!(coords.len() >= self.depth);
        (self.eval)(&coords[..self.depth])
    }

    pub fn constant(c: f64) -> Self {
        Potential::new(1, 0.5, 0.0, "constant", move |_| c)
    }

    /// f + c
    pub fn shifted(&self, c: f64) -> Self {
        let inner = Arc::clone(&self.eval);
        Potential {
            depth: self.depth,
            eval: Arc::new(move |x: &[&[f64]]| inner(x) + c),
            holder_alpha: self.holder_alpha,
            holder_const: self.holder_const,
            name: format!("{} + {c}", self.name),
        }
    }

    /// a*f
    pub fn scaled(&self, a: f64) -> Self {
        let inner = Arc::clone(&self.eval);
        Potential {
            depth: self.depth,
            eval: Arc::new(move |x: &[&[f64]]| a * inner(x)),
            holder_alpha: self.holder_alpha,
            holder_const: a.abs() * self.holder_const,
            name: format!("{a}*{}", self.name),
        }
    }

    /// a*f + b*g, with depth the max of the two and conservative Holder
    /// metadata (common exponent = min, constants added with the scale
    /// factors).
    pub fn linear_combination(a: f64, f: &Potential, b: f64, g: &Potential) -> Self {
        let fe = Arc::clone(&f.eval);
        let ge = Arc::clone(&g.eval);
        let (fd, gd) = (f.depth, g.depth);
        Potential {
            depth: fd.max(gd),
            eval: Arc::new(move |x: &[&[f64]]| a * fe(&x[..fd]) + b * ge(&x[..gd])),
            holder_alpha: f.holder_alpha.min(g.holder_alpha),
            holder_const: a.abs() * f.holder_const + b.abs() * g.holder_const,
            name: format!("{a}*{} + {b}*{}", f.name, g.name),
        }
    }
}

/// Truncation bookkeeping: sup-norm error of replacing f by its depth-k
/// anchored truncation.
#[derive(Clone, Debug)]
pub struct TruncationReport {
    pub depth: usize,
    pub sup_error_bound: f64,
}

/// Partial sum of the sequence metric d_Omega over the first `depth`
/// coordinates, with the tail bound diameter * 2^{-depth}.
///
/// The true d_Omega lies in [value, value + tail_bound].
pub fn seq_metric(
    alphabet: &Alphabet,
    x: &[usize],
    y: &[usize],
    depth: usize,
) -> Result<(f64, f64)> {
    if x.len() < depth || y.len() < depth {
        return Err(Error::InvalidArgument(format!(
            "seq_metric needs sequences of length >= {depth}, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let mut value = 0.0;
    for n in 0..depth {
        value += 0.5f64.powi(n as i32 + 1) * alphabet.distance(x[n], y[n]);
    }
    let tail_bound = alphabet.diameter * 0.5f64.powi(depth as i32);
    Ok((value, tail_bound))
}

/// Truncate a potential to depth k by padding with a fixed anchor node:
/// f_k(x_1..x_k) = f(x_1, .., x_k, anchor, anchor, ...).
///
/// The sup error is bounded by holder_const * (diameter * 2^{-k})^alpha.
pub fn truncate(
    f: &Potential,
    k: usize,
    alphabet: &Alphabet,
    anchor_index: usize,
) -> Result<(Potential, TruncationReport)> {
    if anchor_index >= alphabet.len() {
        return Err(Error::InvalidArgument(format!(
            "anchor index {anchor_index} out of range for alphabet of size {}",
            alphabet.len()
        )));
    }
    let bound = f.holder_const
        * (alphabet.diameter * 0.5f64.powi(k as i32)).powf(f.holder_alpha);
    let report = TruncationReport {
        depth: k,
        sup_error_bound: bound,
    };
    if f.depth <= k {
        return Ok((f.clone(), report));
    }
    let inner = Arc::clone(&f.eval);
    let anchor: Vec<f64> = alphabet.rule.nodes[anchor_index].clone();
    let pad = f.depth - k;
    let truncated = Potential {
        depth: k,
        eval: Arc::new(move |x: &[&[f64]]| {
            let mut full: Vec<&[f64]> = Vec::with_capacity(x.len() + pad);
            full.extend_from_slice(x);
            for _ in 0..pad {
                full.push(&anchor);
            }
            inner(&full)
        }),
        holder_alpha: f.holder_alpha,
        holder_const: f.holder_const,
        name: format!("{}|depth{k}", f.name),
    };
    Ok((truncated, report))
}

fn dot3(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// The Heisenberg ladder potential on the windowed chain alphabet:
///
/// f(sigma(1), sigma(2)) = sum over |n| <= W of e^{-alpha_decay |n|}
/// sigma_{(1,n)} . sigma_{(2,n)},
///
/// a depth-2 cylinder function (nearest-neighbor in the chain direction).
/// The discarded |n| > W tail of the coupling contributes sup error at most
/// 2 * sum_{n > W} e^{-alpha_decay n}, available from `heisenberg_tail_error`.
pub fn heisenberg_potential(alpha_decay: f64, window_radius: usize) -> Potential {
    assert!(alpha_decay > 0.0, "coupling decay rate must be positive");
    let sites = 2 * window_radius + 1;
    // Holder exponent must stay below 1; for alpha_decay >= 1 the potential
    // is still alpha'-Holder for any alpha' < 1 on the bounded space.
    let alpha = alpha_decay.min(0.99);
    // Certified constant: |f(s) - f(w)| <= sum_n J(n) (|s2n - w2n| + |s1n - w1n|)
    // with |s_{(i,n)} - w_{(i,n)}| <= min(2, 2^{i+|n|} d_Omega) and
    // |v| <= 2^{1-alpha} (2^{i+|n|} d)^alpha.
    let mut holder_const = 0.0;
    for n in -(window_radius as i64)..=(window_radius as i64) {
        let j = (-alpha_decay * n.abs() as f64).exp();
        let site = 2f64.powf(alpha * n.abs() as f64);
        holder_const +=
            j * 2f64.powf(1.0 - alpha) * site * (2f64.powf(alpha) + 4f64.powf(alpha));
    }
    Potential {
        depth: 2,
        eval: Arc::new(move |x: &[&[f64]]| {
            let (row1, row2) = (x[0], x[1]);
            let mut total = 0.0;
            for s in 0..sites {
                let n = s as i64 - window_radius as i64;
                let coupling = (-alpha_decay * n.abs() as f64).exp();
                total += coupling * dot3(&row1[3 * s..3 * s + 3], &row2[3 * s..3 * s + 3]);
            }
            total
        }),
        holder_alpha: alpha,
        holder_const,
        name: format!("heisenberg-ladder(alpha={alpha_decay}, W={window_radius})"),
    }
}

/// Sup-norm error from truncating the coupling J(n) = e^{-alpha |n|} at
/// |n| <= W: 2 * sum_{n > W} e^{-alpha n}.
pub fn heisenberg_tail_error(alpha_decay: f64, window_radius: usize) -> f64 {
    let q = (-alpha_decay).exp();
    2.0 * q.powi(window_radius as i32 + 1) / (1.0 - q)
}

/// Worst observed Holder ratio |f(x) - f(y)| / d_Omega(x, y)^alpha over
/// `samples` random pairs of depth-f.depth sequences (tails anchored equal,
/// so d_Omega is exact).
pub fn holder_certificate(
    f: &Potential,
    alphabet: &Alphabet,
    samples: usize,
    rng_seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "holder certificate needs at least one sample".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let n = alphabet.len();
    let depth = f.depth;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let xi: Vec<usize> = (0..depth).map(|_| rng.gen_range(0..n)).collect();
        let yi: Vec<usize> = (0..depth).map(|_| rng.gen_range(0..n)).collect();
        if xi == yi {
            continue;
        }
        let (d, _tail) = seq_metric(alphabet, &xi, &yi, depth)?;
        if d == 0.0 {
            continue;
        }
        let xc: Vec<&[f64]> = xi.iter().map(|&i| alphabet.rule.nodes[i].as_slice()).collect();
        let yc: Vec<&[f64]> = yi.iter().map(|&i| alphabet.rule.nodes[i].as_slice()).collect();
        let ratio = (f.eval(&xc) - f.eval(&yc)).abs() / d.powf(f.holder_alpha);
        worst = worst.max(ratio);
    }
    Ok(worst)
}
