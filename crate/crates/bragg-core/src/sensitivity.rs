//! Phase uncertainty by Gaussian error propagation.

use crate::mzi_core::{signal_cropped, signal_full, ScriptQuantities, SequenceParams};
use crate::spin_states::{oat_moments, OatParams, SpinMoments};
use crate::units_grid::MomentumDistribution;
use crate::{Error, Result};

/// Which exit clusters are detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detection {
    Full,
    Cropped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyResult {
    /// Δφ² in rad².
    pub dphi2: f64,
    /// NΔφ², the ratio to the standard quantum limit.
    pub n_dphi2: f64,
    /// Signal variance ΔJ₃².
    pub variance: f64,
    /// Fringe slope ∂_φ⟨J₃⟩.
    pub slope: f64,
}

impl UncertaintyResult {
    fn new(variance: f64, slope: f64, n: f64) -> Result<Self> {
        if slope == 0.0 || !slope.is_finite() {
            return Err(Error::Singular(format!("fringe slope {slope} at the working point")));
        }
        if !variance.is_finite() {
            return Err(Error::Singular(format!("signal variance {variance}")));
        }
        let dphi2 = variance / (slope * slope);
        Ok(Self { dphi2, n_dphi2: n * dphi2, variance, slope })
    }

    pub fn below_snl(&self) -> bool {
        self.n_dphi2 < 1.0
    }
}

fn check_n(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("atom number must be positive".into()));
    }
    Ok(n as f64)
}

/// Fock input in class 0 with fringe (N/2)(O - 𝒥 cos φ) and
/// variance (N/4)[η - (O - 𝒥 cos φ)²].
pub fn uncertainty_vs_only(
    dist: &MomentumDistribution,
    seq: &SequenceParams,
    detection: Detection,
    n: u64,
    phi: f64,
) -> Result<UncertaintyResult> {
    let nf = check_n(n)?;
    if phi.sin().abs() < 1e-12 {
        return Err(Error::Singular(format!("sin(phi) vanishes at phi = {phi}")));
    }
    let s = match detection {
        Detection::Full => signal_full(dist, seq)?,
        Detection::Cropped => signal_cropped(dist, seq)?,
    };
    let mean = s.offset - s.amplitude * phi.cos();
    let variance = 0.25 * nf * (s.eta - mean * mean);
    let slope = 0.5 * nf * s.amplitude * phi.sin();
    UncertaintyResult::new(variance, slope, nf)
}

/// Δφ² from script quantities and input-state moments.
///
/// Numerator Var[ReA₁₀ S₁ - ImA₁₀ S₂ + A₀ S₃] + V_M N/4 + Re R₁₀ ⟨S₁⟩/2,
/// denominator (ReA₁₀' ⟨S₁⟩ - ImA₁₀' ⟨S₂⟩ - A₀' N/2)².
pub fn uncertainty_general(scripts: &ScriptQuantities, moments: &SpinMoments, n: u64) -> Result<UncertaintyResult> {
    let nf = check_n(n)?;
    if moments.n != nf {
        return Err(Error::Config(format!("moments describe N = {} but N = {n} requested", moments.n)));
    }
    let a = [scripts.a10.re, -scripts.a10.im, scripts.a0];
    let variance = moments.quadratic(a) + 0.25 * nf * scripts.v_m() + 0.5 * scripts.r10.re * moments.mean[0];
    let slope = scripts.a10_prime.re * moments.mean[0] - scripts.a10_prime.im * moments.mean[1]
        - 0.5 * scripts.a0_prime * nf;
    UncertaintyResult::new(variance, slope, nf)
}

/// Closed form for OAT input, where only Cov[S₂, S₃] is off-diagonal.
pub fn uncertainty_oat(scripts: &ScriptQuantities, p: &OatParams, n: u64) -> Result<UncertaintyResult> {
    let nf = check_n(n)?;
    let m = oat_moments(p, n)?;
    let (re, im) = (scripts.a10.re, scripts.a10.im);
    let variance = re * re * m.variance(0) + im * im * m.variance(1) + scripts.a0 * scripts.a0 * m.variance(2)
        - 2.0 * scripts.a0 * im * m.cov[1][2]
        + 0.25 * nf * scripts.v_m()
        + 0.5 * scripts.r10.re * m.mean[0];
    let slope = scripts.a10_prime.re * m.mean[0] - 0.5 * scripts.a0_prime * nf;
    UncertaintyResult::new(variance, slope, nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_states::css_moments;

    #[test]
    fn ideal_css_saturates_snl() {
        let s = ScriptQuantities::ideal(0.0, 0.0);
        let m = css_moments(std::f64::consts::FRAC_PI_2, 0.0, 1000).unwrap();
        let u = uncertainty_general(&s, &m, 1000).unwrap();
        assert!((u.n_dphi2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_atom_number_is_rejected() {
        let s = ScriptQuantities::ideal(0.0, 0.0);
        let m = css_moments(std::f64::consts::FRAC_PI_2, 0.0, 10).unwrap();
        assert!(matches!(uncertainty_general(&s, &m, 11), Err(Error::Config(_))));
    }
}
