//! Pseudo-angular-momentum moments of coherent and one-axis-twisted states.
//!
//! Convention: mode 1 is spin up, S₃ = (n₁ - n₀)/2 and a₁†a₀ = S₁ + iS₂.
//! The OAT state is e^{-iαS₁} e^{-iχS₃²} |π/2, 0⟩.

use argmin::core::{CostFunction, Executor};
use argmin::solver::brent::BrentOpt;

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinMoments {
    pub n: f64,
    pub mean: [f64; 3],
    /// Symmetrized covariance Cov[S_i, S_j].
    pub cov: [[f64; 3]; 3],
}

impl SpinMoments {
    pub fn variance(&self, i: usize) -> f64 {
        self.cov[i][i]
    }

    /// Var[a·S] for a real coefficient vector.
    pub fn quadratic(&self, a: [f64; 3]) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += a[i] * self.cov[i][j] * a[j];
            }
        }
        s
    }
}

/// Product state with all atoms in cos(Θ/2)|1⟩ + e^{-iΦ} sin(Θ/2)|0⟩,
/// i.e. Bloch vector (sinΘ cosΦ, -sinΘ sinΦ, cosΘ).
pub fn css_moments(big_theta: f64, big_phi: f64, n: u64) -> Result<SpinMoments> {
    if !(0.0..=std::f64::consts::PI).contains(&big_theta) {
        return Err(Error::Domain(format!("Theta = {big_theta} outside [0, pi]")));
    }
    let nf = n as f64;
    let u = [big_theta.sin() * big_phi.cos(), -big_theta.sin() * big_phi.sin(), big_theta.cos()];
    let mut cov = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let id = if i == j { 1.0 } else { 0.0 };
            cov[i][j] = 0.25 * nf * (id - u[i] * u[j]);
        }
    }
    Ok(SpinMoments { n: nf, mean: [0.5 * nf * u[0], 0.5 * nf * u[1], 0.5 * nf * u[2]], cov })
}

/// Twisting strength χ and post-twist rotation α about x₁.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OatParams {
    pub chi: f64,
    pub alpha: f64,
}

/// cos^p x evaluated through the logarithm; cos x must be positive.
fn cos_pow(x: f64, p: f64) -> f64 {
    let c = x.cos();
    if c > 0.0 {
        (p * c.ln()).exp()
    } else {
        c.powf(p)
    }
}

impl OatParams {
    /// A = 1 - cos^{N-2}(2χ).
    pub fn a(&self, n: u64) -> f64 {
        let p = n as f64 - 2.0;
        let c = (2.0 * self.chi).cos();
        if c > 0.0 {
            -(p * c.ln()).exp_m1()
        } else {
            1.0 - c.powf(p)
        }
    }

    /// B = 4 sinχ cos^{N-2}χ.
    pub fn b(&self, n: u64) -> f64 {
        4.0 * self.chi.sin() * cos_pow(self.chi, n as f64 - 2.0)
    }

    /// Initial inclination α₀ of the squeezed ellipse.
    pub fn alpha0(&self, n: u64) -> f64 {
        0.5 * self.b(n).atan2(self.a(n))
    }

    /// Inclination ϑ = α + α₀ relative to the equator.
    pub fn inclination(&self, n: u64) -> f64 {
        self.alpha + self.alpha0(n)
    }

    /// Equator-aligned state α = -α₀(χ).
    pub fn equator(chi: f64, n: u64) -> Self {
        let mut p = Self { chi, alpha: 0.0 };
        p.alpha = -p.alpha0(n);
        p
    }

    /// State at inclination ϑ for twisting χ.
    pub fn with_inclination(chi: f64, vartheta: f64, n: u64) -> Self {
        let p = Self::equator(chi, n);
        Self { chi, alpha: p.alpha + vartheta }
    }
}

/// Closed-form moments of e^{-iαS₁} e^{-iχS₃²} |π/2, 0⟩.
pub fn oat_moments(p: &OatParams, n: u64) -> Result<SpinMoments> {
    if n == 0 {
        return Err(Error::Domain("N = 0".into()));
    }
    let nf = n as f64;
    // a single spin only picks up a global phase
    let (a, b) = if n == 1 { (0.0, 0.0) } else { (p.a(n), p.b(n)) };
    let rad = a.hypot(b);
    let th = p.inclination(n);
    let (s2, c2) = (2.0 * th).sin_cos();
    let k = 0.25 * (nf - 1.0);
    // A - √(A²+B²) cos2ϑ written without cancellation near ϑ = 0
    let minus = if c2 > 0.0 && rad > 0.0 {
        (a * a - rad * rad * c2 * c2) / (a + rad * c2)
    } else {
        a - rad * c2
    };
    let v3 = 0.25 * nf * (1.0 + k * minus);
    let v2 = 0.25 * nf * (1.0 + k * (a + rad * c2));
    let c23 = nf * (nf - 1.0) / 16.0 * rad * s2;
    let s1 = 0.5 * nf * cos_pow(p.chi, nf - 1.0);
    let c = p.chi.cos();
    // 1 - cos^{2N-2}χ
    let one_minus = if c > 0.0 { -(2.0 * (nf - 1.0) * c.ln()).exp_m1() } else { 1.0 - c.powf(2.0 * (nf - 1.0)) };
    let v1 = 0.25 * nf * (nf * one_minus - 0.5 * (nf - 1.0) * a);
    Ok(SpinMoments {
        n: nf,
        mean: [s1, 0.0, 0.0],
        cov: [[v1, 0.0, 0.0], [0.0, v2, c23], [0.0, c23, v3]],
    })
}

/// ξ² = N ΔS₃²/⟨S₁⟩² of the equator-aligned OAT state.
pub fn squeezing_parameter(chi: f64, n: u64) -> Result<f64> {
    let m = oat_moments(&OatParams::equator(chi, n), n)?;
    if m.mean[0].abs() <= 1e-12 * 0.5 * m.n {
        return Err(Error::Singular(format!("<S1> vanishes at chi = {chi}")));
    }
    Ok(m.n * m.variance(2) / (m.mean[0] * m.mean[0]))
}

struct LogXi2 {
    n: u64,
}

impl CostFunction for LogXi2 {
    type Param = f64;
    type Output = f64;
    fn cost(&self, ln_chi: &f64) -> std::result::Result<f64, argmin::core::Error> {
        squeezing_parameter(ln_chi.exp(), self.n).map_err(|e| argmin::core::Error::msg(e.to_string()))
    }
}

/// Twisting strength minimizing ξ², searched in ln χ around 3^{1/6} N^{-2/3}.
pub fn optimal_twisting(n: u64) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!("N = {n} < 3")));
    }
    let est = 3f64.powf(1.0 / 6.0) * (n as f64).powf(-2.0 / 3.0);
    let (lo, hi) = ((0.2 * est).ln(), (5.0 * est).min(std::f64::consts::FRAC_PI_4).ln());
    let xi = |l: f64| squeezing_parameter(l.exp(), n);
    let mid = xi(est.ln())?;
    if !(mid < xi(lo)? && mid < xi(hi)?) {
        return Err(Error::Optimizer(format!(
            "xi^2 not bracketed on chi in [{:e}, {:e}] around {est:e}",
            lo.exp(),
            hi.exp()
        )));
    }
    let solver = BrentOpt::new(lo, hi).set_tolerance(1e-9, 1e-12);
    let res = Executor::new(LogXi2 { n }, solver)
        .configure(|s| s.max_iters(500))
        .run()
        .map_err(|e| Error::Optimizer(e.to_string()))?;
    let best = res.state().best_param.ok_or_else(|| Error::Optimizer("no iterate".into()))?;
    Ok(best.exp())
}

/// Brute-force moments in the (N+1)-dimensional Dicke basis.
pub mod dicke {
    use super::*;

    /// Basis |m⟩, m = N/2 - k for k = 0..=N.
    fn m_value(n: u64, k: usize) -> f64 {
        0.5 * n as f64 - k as f64
    }

    /// ⟨m+1|S₊|m⟩ = √(j(j+1) - m(m+1)).
    fn raise(n: u64, m: f64) -> f64 {
        let j = 0.5 * n as f64;
        (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
    }

    /// S₁ψ for S₁ = (S₊ + S₋)/2.
    fn apply_s1(n: u64, psi: &[C64]) -> Vec<C64> {
        let d = psi.len();
        let mut out = vec![C64::new(0.0, 0.0); d];
        for k in 0..d {
            let m = m_value(n, k);
            if k > 0 {
                // S₊|m⟩ lands on index k-1
                out[k - 1] += psi[k] * (0.5 * raise(n, m));
            }
            if k + 1 < d {
                out[k + 1] += psi[k] * (0.5 * raise(n, m - 1.0));
            }
        }
        out
    }

    fn apply_s2(n: u64, psi: &[C64]) -> Vec<C64> {
        let d = psi.len();
        let mut out = vec![C64::new(0.0, 0.0); d];
        let half_i = C64::new(0.0, 0.5);
        for k in 0..d {
            let m = m_value(n, k);
            // S₂ = (S₊ - S₋)/(2i)
            if k > 0 {
                out[k - 1] -= half_i * psi[k] * raise(n, m);
            }
            if k + 1 < d {
                out[k + 1] += half_i * psi[k] * raise(n, m - 1.0);
            }
        }
        out
    }

    fn apply_s3(n: u64, psi: &[C64]) -> Vec<C64> {
        psi.iter().enumerate().map(|(k, z)| z * m_value(n, k)).collect()
    }

    /// e^{-iαS₁}ψ by scaling and squaring of a Taylor series.
    fn rotate_s1(n: u64, psi: &[C64], alpha: f64) -> Vec<C64> {
        let norm = 0.5 * n as f64;
        let steps = ((alpha.abs() * norm / 0.25).ceil() as usize).max(1);
        let h = alpha / steps as f64;
        let mut cur = psi.to_vec();
        for _ in 0..steps {
            let mut term = cur.clone();
            let mut acc = cur.clone();
            for k in 1..40 {
                let s = apply_s1(n, &term);
                let c = C64::new(0.0, -h / k as f64);
                term = s.into_iter().map(|z| z * c).collect();
                for (a, t) in acc.iter_mut().zip(&term) {
                    *a += t;
                }
                if term.iter().map(|z| z.norm()).sum::<f64>() < 1e-18 {
                    break;
                }
            }
            cur = acc;
        }
        cur
    }

    fn ln_binom(n: u64, k: u64) -> f64 {
        let lg = |x: u64| (1..=x).map(|i| (i as f64).ln()).sum::<f64>();
        lg(n) - lg(k) - lg(n - k)
    }

    /// State vector of e^{-iαS₁} e^{-iχS₃²} |π/2, 0⟩.
    pub fn oat_state(chi: f64, alpha: f64, n: u64) -> Vec<C64> {
        let psi: Vec<C64> = (0..=n)
            .map(|k| {
                let amp = (0.5 * ln_binom(n, k) - 0.5 * n as f64 * 2f64.ln()).exp();
                let m = m_value(n, k as usize);
                C64::from_polar(amp, -chi * m * m)
            })
            .collect();
        rotate_s1(n, &psi, alpha)
    }

    fn expect(a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    /// Moments computed directly from the state vector.
    pub fn moments(psi: &[C64], n: u64) -> SpinMoments {
        let s = [apply_s1(n, psi), apply_s2(n, psi), apply_s3(n, psi)];
        let mut mean = [0.0; 3];
        for i in 0..3 {
            mean[i] = expect(psi, &s[i]).re;
        }
        let mut cov = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                // ⟨S_iS_j + S_jS_i⟩/2 = Re⟨S_iψ|S_jψ⟩
                cov[i][j] = expect(&s[i], &s[j]).re - mean[i] * mean[j];
            }
        }
        SpinMoments { n: n as f64, mean, cov }
    }

    pub fn oat_moments(chi: f64, alpha: f64, n: u64) -> SpinMoments {
        moments(&oat_state(chi, alpha, n), n)
    }
}
