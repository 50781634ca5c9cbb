//! Dimensionless units and momentum-space quadrature over one momentum class.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;

use crate::{Error, Result, C64};

/// Half width of a momentum class in units of ħk.
pub const CLASS_HALF_WIDTH: f64 = 0.5;

/// Default number of Gauss-Legendre nodes.
pub const DEFAULT_NODES: usize = 200;

/// Beyond this many standard deviations the Gaussian weight is below 1e-31
/// and the quadrature window is clipped.
const SUPPORT_SIGMAS: f64 = 12.0;

/// Unit conventions: momentum in ħk, frequency in ω_k, time λ = ω_k t,
/// resonant momentum p₀ = 0 so that Δω/ω_k = 1.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UnitConvention;

impl UnitConvention {
    /// Two-photon detuning Δω/ω_k at p₀ = 0.
    pub const DELTA_OMEGA: f64 = 1.0;

    /// Doppler detuning ν_k/ω_k.
    pub fn doppler(q: f64) -> f64 {
        2.0 * q
    }

    /// Dimensionless detuning v = ν_k/Ω₀ = 2q̃/ε.
    pub fn detuning(q: f64, eps: f64) -> f64 {
        2.0 * q / eps
    }

    pub fn in_class(q: f64) -> bool {
        (-CLASS_HALF_WIDTH..=CLASS_HALF_WIDTH).contains(&q)
    }
}

/// Truncated Gaussian momentum-mode weight |φ₀(q̃)|² with its quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumDistribution {
    pub sigma_q: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub density: Vec<f64>,
    norm: f64,
}

/// Gaussian of width σ_q truncated to the class interval and renormalized.
///
/// The rule covers I ∩ [-12σ_q, 12σ_q]; outside that window the density is
/// below double precision relative to its peak.
pub fn make_gaussian_mode(sigma_q: f64, n_nodes: usize) -> Result<MomentumDistribution> {
    if !(sigma_q > 0.0 && sigma_q <= 0.25) {
        return Err(Error::Domain(format!("sigma_q = {sigma_q} outside (0, 0.25]")));
    }
    if n_nodes < 32 {
        return Err(Error::Config(format!("n_nodes = {n_nodes} < 32")));
    }
    let half = (SUPPORT_SIGMAS * sigma_q).min(CLASS_HALF_WIDTH);
    let rule = GaussLegendre::new(NonZeroUsize::new(n_nodes).expect("n_nodes >= 32"));
    let mut nodes = Vec::with_capacity(n_nodes);
    let mut weights = Vec::with_capacity(n_nodes);
    for (x, w) in rule.iter() {
        nodes.push(half * x);
        weights.push(half * w);
    }
    // symmetrize exactly so odd integrands cancel to rounding
    for i in 0..n_nodes / 2 {
        let j = n_nodes - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if n_nodes % 2 == 1 {
        nodes[n_nodes / 2] = 0.0;
    }
    let raw: Vec<f64> = nodes.iter().map(|&q| gauss(q, sigma_q)).collect();
    let norm: f64 = raw.iter().zip(&weights).map(|(d, w)| d * w).sum();
    let density = raw.into_iter().map(|d| d / norm).collect();
    Ok(MomentumDistribution { sigma_q, nodes, weights, density, norm })
}

fn gauss(q: f64, sigma: f64) -> f64 {
    (-0.5 * (q / sigma).powi(2)).exp()
}

impl MomentumDistribution {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Normalized |φ₀(q)|² at an arbitrary point of the class interval.
    pub fn density_at(&self, q: f64) -> f64 {
        if UnitConvention::in_class(q) {
            gauss(q, self.sigma_q) / self.norm
        } else {
            0.0
        }
    }

    /// Half width of the quadrature window.
    pub fn support(&self) -> f64 {
        (SUPPORT_SIGMAS * self.sigma_q).min(CLASS_HALF_WIDTH)
    }

    /// Combined quadrature weight w_i |φ₀(q_i)|².
    pub fn mass(&self, i: usize) -> f64 {
        self.weights[i] * self.density[i]
    }

    /// Σ_i w_i |φ₀(q_i)|² f(q_i).
    pub fn integrate<F>(&self, f: F) -> Result<C64>
    where
        F: Fn(f64) -> C64,
    {
        let mut acc = C64::new(0.0, 0.0);
        for (i, &q) in self.nodes.iter().enumerate() {
            let v = f(q);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite { index: i, q });
            }
            acc += v * self.mass(i);
        }
        Ok(acc)
    }

    /// Integrates K quantities at once, evaluating nodes in parallel.
    ///
    /// Summation runs in node order, so the result does not depend on the
    /// thread schedule.
    pub fn integrate_many<const K: usize, F>(&self, f: F) -> Result<[C64; K]>
    where
        F: Fn(f64) -> Result<[C64; K]> + Sync,
    {
        let values: Vec<[C64; K]> = self
            .nodes
            .par_iter()
            .map(|&q| f(q))
            .collect::<Result<Vec<_>>>()?;
        let mut acc = [C64::new(0.0, 0.0); K];
        for (i, v) in values.iter().enumerate() {
            if v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::NonFinite { index: i, q: self.nodes[i] });
            }
            let m = self.mass(i);
            for k in 0..K {
                acc[k] += v[k] * m;
            }
        }
        Ok(acc)
    }
}

/// Stand-alone form of [`MomentumDistribution::integrate`].
pub fn integrate<F>(f: F, dist: &MomentumDistribution) -> Result<C64>
where
    F: Fn(f64) -> C64,
{
    dist.integrate(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(make_gaussian_mode(0.0, 200), Err(Error::Domain(_))));
        assert!(matches!(make_gaussian_mode(0.3, 200), Err(Error::Domain(_))));
        assert!(matches!(make_gaussian_mode(0.05, 16), Err(Error::Config(_))));
    }

    #[test]
    fn nodes_are_symmetric() {
        let d = make_gaussian_mode(0.05, 201).unwrap();
        for i in 0..d.len() {
            assert_eq!(d.nodes[i], -d.nodes[d.len() - 1 - i]);
            assert_eq!(d.weights[i], d.weights[d.len() - 1 - i]);
        }
    }

    #[test]
    fn non_finite_reports_index() {
        let d = make_gaussian_mode(0.05, 64).unwrap();
        let e = d.integrate(|q| if q > 0.0 { C64::new(f64::NAN, 0.0) } else { C64::new(1.0, 0.0) });
        assert!(matches!(e, Err(Error::NonFinite { index: 32, .. })));
    }
}
