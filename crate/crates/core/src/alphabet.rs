//! Compact metric alphabets (M, d) with a full-support a priori probability
//! measure, represented as finite quadrature rules.
//!
//! Supported alphabets: finite sets with normalized counting measure, the
//! circle S^1 with the periodic trapezoid rule, the sphere S^2 with a
//! Gauss-Legendre x uniform-azimuth product rule, and the windowed
//! spin-chain alphabet (S^2)^{2W+1} with Gibbs-reweighted product weights.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Default budget for the number of product nodes of a windowed chain
/// alphabet.
pub const DEFAULT_WINDOW_BUDGET: usize = 1_000_000;

/// Quadrature nodes and weights realizing the a priori measure.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    /// Node coordinates. Every node has the same dimension.
    pub nodes: Vec<Vec<f64>>,
    /// Nonnegative weights summing to 1.
    pub weights: Vec<f64>,
    /// Human-readable description of the exactness class.
    pub degree_info: String,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature sum of `g` against the rule's weights.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, g: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(node, w)| w * g(node))
            .sum()
    }
}

/// Metric on alphabet nodes.
#[derive(Clone, Debug)]
pub enum Metric {
    /// 0 if equal, 1 otherwise.
    Discrete,
    /// Chordal (Euclidean) distance between coordinate vectors.
    Euclidean,
    /// Weighted sum over 3-vector blocks for windowed chain nodes:
    /// d(s, t) = sum over sites j in [-W, W] of 2^{-|j|} |s_j - t_j|.
    WindowWeighted { window_radius: usize },
}

impl Metric {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Discrete => {
                if a == b {
                    0.0
                } else {
                    1.0
                }
            }
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::WindowWeighted { window_radius } => {
                let w = *window_radius as i64;
                let mut total = 0.0;
                for (block, j) in (-w..=w).enumerate() {
                    let base = 3 * block;
                    let dx = a[base] - b[base];
                    let dy = a[base + 1] - b[base + 1];
                    let dz = a[base + 2] - b[base + 2];
                    total += 0.5f64.powi(j.unsigned_abs() as i32)
                        * (dx * dx + dy * dy + dz * dz).sqrt();
                }
                total
            }
        }
    }
}

/// A compact metric alphabet: quadrature rule, metric, and diameter bound.
#[derive(Clone, Debug)]
pub struct Alphabet {
    pub rule: Arc<QuadratureRule>,
    pub metric: Metric,
    pub diameter: f64,
}

impl Alphabet {
    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.metric
            .distance(&self.rule.nodes[i], &self.rule.nodes[j])
    }
}

/// Finite alphabet {0, .., n-1} with the normalized counting measure and the
/// discrete metric.
pub fn make_finite_alphabet(n: usize) -> Result<Alphabet> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "finite alphabet needs at least one symbol".into(),
        ));
    }
    let rule = QuadratureRule {
        nodes: (0..n).map(|i| vec![i as f64]).collect(),
        weights: vec![1.0 / n as f64; n],
        degree_info: format!("normalized counting measure on {n} symbols"),
    };
    Ok(Alphabet {
        rule: Arc::new(rule),
        metric: Metric::Discrete,
        diameter: 1.0,
    })
}

/// S^1 with equispaced nodes (periodic trapezoid rule) and chordal metric.
///
/// Exact for trigonometric polynomials of degree < n_nodes.
pub fn make_circle_alphabet(n_nodes: usize) -> Result<Alphabet> {
    if n_nodes < 2 {
        return Err(Error::InvalidArgument(
            "circle rule needs at least 2 nodes".into(),
        ));
    }
    let nodes = (0..n_nodes)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n_nodes as f64;
            vec![theta.cos(), theta.sin()]
        })
        .collect();
    let rule = QuadratureRule {
        nodes,
        weights: vec![1.0 / n_nodes as f64; n_nodes],
        degree_info: format!(
            "periodic trapezoid, exact for trigonometric degree < {n_nodes}"
        ),
    };
    Ok(Alphabet {
        rule: Arc::new(rule),
        metric: Metric::Euclidean,
        diameter: 2.0,
    })
}

/// Gauss-Legendre nodes and weights on [-1, 1].
///
/// Newton iteration on the Legendre recurrence; exact for polynomials of
/// degree <= 2n - 1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Tricomi initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// S^2 product rule: Gauss-Legendre in cos(theta), equispaced azimuth,
/// normalized to total weight 1. Chordal metric in R^3.
pub fn make_sphere_alphabet(n_polar: usize, n_azimuth: usize) -> Result<Alphabet> {
    if n_polar < 1 || n_azimuth < 2 {
        return Err(Error::InvalidArgument(format!(
            "sphere rule needs n_polar >= 1 and n_azimuth >= 2, got {n_polar} x {n_azimuth}"
        )));
    }
    let (cos_nodes, cos_weights) = gauss_legendre(n_polar);
    let mut nodes = Vec::with_capacity(n_polar * n_azimuth);
    let mut weights = Vec::with_capacity(n_polar * n_azimuth);
    for (c, wc) in cos_nodes.iter().zip(&cos_weights) {
        let s = (1.0 - c * c).sqrt();
        for j in 0..n_azimuth {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n_azimuth as f64;
            nodes.push(vec![s * phi.cos(), s * phi.sin(), *c]);
            // GL weight spans measure 2 on cos(theta); divide by 2 and by
            // the azimuth count to normalize the total to 1.
            weights.push(wc / (2.0 * n_azimuth as f64));
        }
    }
    let rule = QuadratureRule {
        nodes,
        weights,
        degree_info: format!(
            "Gauss-Legendre({n_polar}) x uniform azimuth({n_azimuth}), \
             exact for spherical harmonics of degree <= {}",
            (2 * n_polar - 1).min(n_azimuth - 1)
        ),
    };
    Ok(Alphabet {
        rule: Arc::new(rule),
        metric: Metric::Euclidean,
        diameter: 2.0,
    })
}

/// The windowed spin-chain alphabet (S^2)^{[-W..W]} with the finite-volume
/// Gibbs measure over nearest-neighbor couplings inside the window.
#[derive(Clone, Debug)]
pub struct ChainWindowAlphabet {
    pub base: Alphabet,
    pub window_radius: usize,
    pub beta: f64,
    /// Product nodes with Gibbs-reweighted weights, normalized to sum 1.
    pub rule: Arc<QuadratureRule>,
    /// Log of the finite-volume partition function.
    pub log_partition: f64,
}

impl ChainWindowAlphabet {
    pub fn sites(&self) -> usize {
        2 * self.window_radius + 1
    }

    /// View as an `Alphabet` with the window-weighted metric.
    pub fn as_alphabet(&self) -> Alphabet {
        Alphabet {
            rule: Arc::clone(&self.rule),
            metric: Metric::WindowWeighted {
                window_radius: self.window_radius,
            },
            // sum over |j| <= W of 2^{-|j|} * 2
            diameter: 2.0 * (3.0 - 2.0 * 0.5f64.powi(self.window_radius as i32)),
        }
    }
}

fn dot3(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Build the windowed chain alphabet with the default node budget.
pub fn make_chain_window_alphabet(
    base: &Alphabet,
    window_radius: usize,
    beta: f64,
) -> Result<ChainWindowAlphabet> {
    make_chain_window_alphabet_with_budget(base, window_radius, beta, DEFAULT_WINDOW_BUDGET)
}

/// Build the windowed chain alphabet, failing if the product node count
/// exceeds `budget`.
pub fn make_chain_window_alphabet_with_budget(
    base: &Alphabet,
    window_radius: usize,
    beta: f64,
    budget: usize,
) -> Result<ChainWindowAlphabet> {
    let sites = 2 * window_radius + 1;
    let n = base.len();
    let mut size: usize = 1;
    for _ in 0..sites {
        size = size.checked_mul(n).unwrap_or(usize::MAX);
        if size > budget {
            return Err(Error::ResourceLimit {
                what: format!("chain window product nodes ({n}^{sites})"),
                size,
                budget,
            });
        }
    }

    let dim = base.rule.nodes[0].len();
    let mut nodes = Vec::with_capacity(size);
    let mut log_weights = Vec::with_capacity(size);
    let mut idx = vec![0usize; sites];
    loop {
        let mut coords = Vec::with_capacity(sites * dim);
        let mut lw = 0.0;
        for &i in &idx {
            coords.extend_from_slice(&base.rule.nodes[i]);
            lw += base.rule.weights[i].ln();
        }
        // Free-boundary nearest-neighbor chain energy inside the window.
        for s in 0..sites - 1 {
            lw += beta * dot3(&coords[3 * s..3 * s + 3], &coords[3 * (s + 1)..3 * (s + 1) + 3]);
        }
        nodes.push(coords);
        log_weights.push(lw);

        // odometer increment
        let mut pos = sites;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < n {
                break;
            }
            idx[pos] = 0;
            if pos == 0 {
                pos = usize::MAX;
                break;
            }
        }
        if pos == usize::MAX {
            break;
        }
    }

    let max_lw = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum_exp: f64 = log_weights.iter().map(|lw| (lw - max_lw).exp()).sum();
    let log_norm = max_lw + sum_exp.ln();
    let weights: Vec<f64> = log_weights.iter().map(|lw| (lw - log_norm).exp()).collect();
    // log_partition is log Z relative to the plain product measure: the
    // normalizer of the Gibbs reweighting.
    let log_partition = {
        let base_log: f64 = 0.0; // product weights already sum to 1
        log_norm - base_log
    };

    let rule = QuadratureRule {
        nodes,
        weights,
        degree_info: format!(
            "Gibbs-reweighted product of {} base nodes over {sites} sites, beta {beta}",
            n
        ),
    };
    Ok(ChainWindowAlphabet {
        base: base.clone(),
        window_radius,
        beta,
        rule: Arc::new(rule),
        log_partition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bessel_i0(x: f64) -> f64 {
        // power series, summed to machine precision
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= (x / 2.0) * (x / 2.0) / (k * k);
            sum += term;
            if term < 1e-18 * sum {
                return sum;
            }
            k += 1.0;
        }
    }

    #[test]
    fn finite_alphabet_weights() {
        let a = make_finite_alphabet(2).unwrap();
        assert_eq!(a.rule.weights, vec![0.5, 0.5]);
        let single = make_finite_alphabet(1).unwrap();
        assert_eq!(single.rule.weights, vec![1.0]);
        let three = make_finite_alphabet(3).unwrap();
        assert_eq!(three.distance(0, 1), 1.0);
        assert_eq!(three.distance(2, 2), 0.0);
        assert!(make_finite_alphabet(0).is_err());
    }

    #[test]
    fn circle_rule_integrates() {
        let a = make_circle_alphabet(32).unwrap();
        assert!((a.rule.integrate(|_| 1.0) - 1.0).abs() < 1e-14);
        // cos(theta) is the first coordinate
        assert!(a.rule.integrate(|n| n[0]).abs() < 1e-14);
        // e^{beta cos theta} at beta = 1 integrates to I0(1)
        let val = a.rule.integrate(|n| n[0].exp());
        assert!((val - bessel_i0(1.0)).abs() < 1e-13, "got {val}");
        assert!((bessel_i0(1.0) - 1.2660658777520084).abs() < 1e-15);
        assert!(make_circle_alphabet(1).is_err());
    }

    #[test]
    fn circle_trig_exactness() {
        let n = 16;
        let a = make_circle_alphabet(n).unwrap();
        for k in 1..n {
            let val = a
                .rule
                .integrate(|node| (k as f64 * node[1].atan2(node[0])).cos());
            assert!(val.abs() < 1e-13, "cos({k} theta) integrated to {val}");
        }
    }

    #[test]
    fn sphere_rule_integrates() {
        let a = make_sphere_alphabet(16, 32).unwrap();
        assert!((a.rule.integrate(|_| 1.0) - 1.0).abs() < 1e-13);
        assert!(a.rule.integrate(|n| n[2]).abs() < 1e-13);
        assert!(a.rule.integrate(|n| n[0]).abs() < 1e-13);
        assert!(a.rule.integrate(|n| n[1]).abs() < 1e-13);
        // closed form: integral of e^{beta s.z} over the unit sphere
        // (uniform probability) is sinh(beta)/beta
        let val = a.rule.integrate(|n| (2.0 * n[2]).exp());
        assert!((val - 2.0f64.sinh() / 2.0).abs() < 1e-12, "got {val}");
        assert!((2.0f64.sinh() / 2.0 - 1.8134302039235093).abs() < 1e-15);
        let val1 = a.rule.integrate(|n| n[2].exp());
        assert!((val1 - 1.0f64.sinh()).abs() < 1e-13);
        assert!(make_sphere_alphabet(0, 4).is_err());
        assert!(make_sphere_alphabet(4, 1).is_err());
    }

    #[test]
    fn gauss_legendre_degree_exactness() {
        let (x, w) = gauss_legendre(5);
        // exact for x^8 on [-1,1]: 2/9
        let val: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(8)).sum();
        assert!((val - 2.0 / 9.0).abs() < 1e-14);
    }

    fn octahedral_sphere() -> Alphabet {
        let nodes = vec![
            vec![1.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, -1.0],
        ];
        Alphabet {
            rule: Arc::new(QuadratureRule {
                nodes,
                weights: vec![1.0 / 6.0; 6],
                degree_info: "octahedral 6-point design".into(),
            }),
            metric: Metric::Euclidean,
            diameter: 2.0,
        }
    }

    #[test]
    fn window_alphabet_trivial_cases() {
        let base = octahedral_sphere();
        // W = 0: identical to the base rule, log_partition = 0
        let w0 = make_chain_window_alphabet(&base, 0, 1.3).unwrap();
        assert_eq!(w0.rule.len(), 6);
        for (w, bw) in w0.rule.weights.iter().zip(&base.rule.weights) {
            assert!((w - bw).abs() < 1e-15);
        }
        assert!(w0.log_partition.abs() < 1e-12);

        // beta = 0: plain product weights
        let b0 = make_chain_window_alphabet(&base, 1, 0.0).unwrap();
        for w in &b0.rule.weights {
            assert!((w - 1.0 / 216.0).abs() < 1e-15);
        }
        let sum: f64 = b0.rule.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-10);
    }

    #[test]
    fn window_alphabet_log_partition_matches_brute_force() {
        let base = octahedral_sphere();
        let wa = make_chain_window_alphabet(&base, 1, 1.0).unwrap();
        // brute-force sum over all 6^3 tuples
        let mut z = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                for k in 0..6 {
                    let (a, b, c) = (
                        &base.rule.nodes[i],
                        &base.rule.nodes[j],
                        &base.rule.nodes[k],
                    );
                    z += (1.0f64 / 216.0) * (dot3(a, b) + dot3(b, c)).exp();
                }
            }
        }
        assert!((wa.log_partition - z.ln()).abs() < 1e-12);
        let sum: f64 = wa.rule.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-10);
    }

    #[test]
    fn window_weights_reflection_symmetric() {
        let base = octahedral_sphere();
        let wa = make_chain_window_alphabet(&base, 1, 0.7).unwrap();
        let n = 6usize;
        // reflect the window (i -> -i): tuple (a,b,c) -> (c,b,a)
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let fwd = (i * n + j) * n + k;
                    let rev = (k * n + j) * n + i;
                    let d = (wa.rule.weights[fwd] - wa.rule.weights[rev]).abs();
                    assert!(d < 1e-15);
                }
            }
        }
    }

    #[test]
    fn window_budget_enforced() {
        let base = octahedral_sphere();
        let err = make_chain_window_alphabet_with_budget(&base, 2, 1.0, 1000).unwrap_err();
        match err {
            Error::ResourceLimit { size, budget, .. } => {
                assert!(size > budget);
            }
            other => panic!("expected resource limit, got {other}"),
        }
    }

    #[test]
    fn metric_axioms_spot_check() {
        let a = make_sphere_alphabet(4, 8).unwrap();
        let n = a.len();
        for i in (0..n).step_by(3) {
            assert_eq!(a.distance(i, i), 0.0);
            for j in (0..n).step_by(5) {
                assert!((a.distance(i, j) - a.distance(j, i)).abs() < 1e-15);
                assert!(a.distance(i, j) <= a.diameter + 1e-12);
            }
        }
    }

    #[test]
    fn integrate_finite_table() {
        let a = make_finite_alphabet(2).unwrap();
        let val = a.rule.integrate(|n| if n[0] == 0.0 { 0.0 } else { 2.0 });
        assert!((val - 1.0).abs() < 1e-15);
    }
}
