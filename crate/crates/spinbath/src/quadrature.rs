//! Gauss-Hermite quadrature (weight `exp(-x^2)` on the whole line).
//!
//! Nodes are eigenvalues of the symmetric tridiagonal Jacobi matrix
//! (off-diagonal `sqrt(k/2)`), computed with an implicit-shift QL iteration
//! and one Newton polish; weights are Christoffel numbers evaluated with an
//! exponent-scaled recurrence so rules with tens of thousands of nodes work
//! without overflow. Rule tables are cached per node count.

use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::exec;

/// One quadrature rule: paired `(node, weight)` with weights for the
/// `exp(-x^2)` weight function. Weights of far-out nodes underflow to zero;
/// such nodes contribute nothing for bounded integrands and are skipped by
/// [`GaussHermite::integrate`].
#[derive(Clone, Debug)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

static CACHE: Lazy<Mutex<HashMap<usize, Arc<GaussHermite>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

impl GaussHermite {
    /// Rule with `n` nodes, from the process-wide cache.
    pub fn cached(n: usize) -> Result<Arc<GaussHermite>> {
        if let Some(rule) = CACHE.lock().unwrap().get(&n) {
            return Ok(rule.clone());
        }
        let rule = Arc::new(Self::build(n)?);
        CACHE.lock().unwrap().insert(n, rule.clone());
        Ok(rule)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `integral of exp(-x^2) f(x) dx` over the whole line.
    pub fn integrate<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> f64 {
        let (nodes, weights) = (&self.nodes, &self.weights);
        exec::chunked_sum(nodes.len(), |range| {
            let mut acc = 0.0;
            for i in range {
                if weights[i] != 0.0 {
                    acc += weights[i] * f(nodes[i]);
                }
            }
            acc
        })
    }

    fn build(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "quadrature rule needs at least one node".into(),
            ));
        }
        // eigenvalues of the Jacobi matrix: diagonal zero, off-diagonal
        // sqrt(k/2)
        let mut d = vec![0.0f64; n];
        let mut e: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
        e.push(0.0);
        tridiagonal_eigenvalues(&mut d, &mut e)?;
        d.sort_by(f64::total_cmp);

        // one Newton polish per node (in parallel); nodes of the orthonormal
        // polynomial p_n
        let nodes: Vec<f64> = exec::map_indexed(n, |i| {
            let mut x = d[i];
            for _ in 0..3 {
                let (ratio, _) = scaled_polynomial_ratio(n, x);
                let step = ratio / (2.0 * n as f64).sqrt();
                if step.is_finite() {
                    x -= step;
                }
            }
            x
        });

        // Christoffel weights: w_i = 1 / sum_{k<n} p_k(x_i)^2, evaluated in
        // log space to survive huge n
        let weights: Vec<f64> = exec::map_indexed(n, |i| {
            let (_, log_sum) = scaled_polynomial_ratio(n, nodes[i]);
            (-log_sum).exp()
        });

        Ok(Self { nodes, weights })
    }
}

/// Evaluate the orthonormal Hermite recurrence at `x` with exponent
/// rescaling. Returns `(p_n(x)/p_{n-1}(x), ln(sum_{k<n} p_k(x)^2))`; the
/// ratio feeds Newton via `p_n' = sqrt(2n) p_{n-1}`, the log-sum feeds the
/// Christoffel weight.
fn scaled_polynomial_ratio(n: usize, x: f64) -> (f64, f64) {
    const PI_QUARTER: f64 = 0.7511255444649425; // pi^(-1/4)
    let mut pm = 0.0f64; // p_{k-1}, scaled
    let mut p = PI_QUARTER; // p_k, scaled; true value = scaled * exp(log_scale)
    let mut log_scale = 0.0f64;
    let mut sum = p * p; // sum of squares in the current scale
    for k in 1..=n {
        let kf = k as f64;
        let a = (2.0 / kf).sqrt();
        let b = ((kf - 1.0) / kf).sqrt();
        let pn = a * x * p - b * pm;
        pm = p;
        p = pn;
        if k < n {
            sum += p * p;
        }
        if p.abs() > 1e140 || pm.abs() > 1e140 {
            let s = 1e-140;
            p *= s;
            pm *= s;
            sum *= s * s;
            log_scale += 140.0 * std::f64::consts::LN_10;
        }
    }
    (p / pm, sum.ln() + 2.0 * log_scale)
}

/// Implicit-shift QL iteration for a symmetric tridiagonal matrix
/// (eigenvalues only). `d` holds the diagonal, `e` the subdiagonal in
/// `e[0..n-1]` with `e[n-1]` scratch.
fn tridiagonal_eigenvalues(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            // find a negligible subdiagonal element
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::Convergence(
                    "tridiagonal QL exceeded 50 iterations".into(),
                ));
            }
            // implicit shift from the 2x2 block at l
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut early = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT_PI: f64 = 1.7724538509055159;

    #[test]
    fn small_rules_match_analytic_nodes() {
        let g2 = GaussHermite::cached(2).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((g2.nodes()[0] + r).abs() < 1e-14);
        assert!((g2.nodes()[1] - r).abs() < 1e-14);
        assert!((g2.weights()[0] - SQRT_PI / 2.0).abs() < 1e-14);

        let g3 = GaussHermite::cached(3).unwrap();
        let s = (1.5f64).sqrt();
        assert!(g3.nodes()[1].abs() < 1e-14);
        assert!((g3.nodes()[0] + s).abs() < 1e-13);
        assert!((g3.nodes()[2] - s).abs() < 1e-13);
        assert!((g3.weights()[1] - 2.0 * SQRT_PI / 3.0).abs() < 1e-13);
        assert!((g3.weights()[0] - SQRT_PI / 6.0).abs() < 1e-13);
    }

    #[test]
    fn moments_are_exact() {
        // integral of exp(-x^2) x^(2m) = (2m-1)!! sqrt(pi) / 2^m
        for &n in &[8usize, 32, 129, 512] {
            let g = GaussHermite::cached(n).unwrap();
            let mut want = SQRT_PI;
            for m in 0..6 {
                let got = g.integrate(|x| x.powi(2 * m as i32));
                assert!(
                    (got / want - 1.0).abs() < 1e-12,
                    "moment 2m={} with n={n}: {got} vs {want}",
                    2 * m
                );
                want *= (2 * m + 1) as f64 / 2.0;
            }
            let odd = g.integrate(|x| x.powi(3));
            assert!(odd.abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_characteristic_function() {
        // integral exp(-x^2) cos(a x) = sqrt(pi) exp(-a^2/4)
        let g = GaussHermite::cached(64).unwrap();
        for &a in &[0.5f64, 2.0, 6.0] {
            let got = g.integrate(|x| (a * x).cos());
            let want = SQRT_PI * (-a * a / 4.0).exp();
            assert!((got - want).abs() < 1e-12, "a={a}");
        }
    }

    #[test]
    fn large_rule_is_finite_and_normalized() {
        let g = GaussHermite::cached(4096).unwrap();
        assert!(g.nodes().iter().all(|x| x.is_finite()));
        assert!(g.weights().iter().all(|w| w.is_finite() && *w >= 0.0));
        let total: f64 = g.integrate(|_| 1.0);
        assert!((total - SQRT_PI).abs() < 1e-10);
        // nodes strictly ascending
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
    }
}
