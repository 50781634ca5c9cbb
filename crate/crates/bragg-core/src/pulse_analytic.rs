//! Closed-form box-pulse transfer matrices.
//!
//! [`vs_coefficients`] gives the lossless detuned Rabi solution between the
//! main classes n = 0, 1. [`pert_transfer`] adds second-order coupling to the
//! adjacent classes n = -1, 2: the main block is the secular-free
//! second-order Dyson result, summed in closed form over the exact
//! main-class propagator so that no ε-dependent frequency is expanded.

use crate::mat2::{self, Mat2, ONE, ZERO};
use crate::units_grid::UnitConvention;
use crate::{Error, Result, C64};

/// Above this coupling the perturbative result carries a range warning.
pub const PERT_VALID_EPS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseParams {
    /// Dimensionless Rabi frequency Ω₀/ω_k.
    pub eps: f64,
    /// Pulse area τ = ελ.
    pub tau: f64,
    /// Laser phase.
    pub theta: f64,
}

impl PulseParams {
    pub fn new(eps: f64, tau: f64, theta: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Domain(format!("eps = {eps} must be positive")));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::Domain(format!("tau = {tau} must be non-negative")));
        }
        if !theta.is_finite() {
            return Err(Error::Domain("theta must be finite".into()));
        }
        Ok(Self { eps, tau, theta })
    }

    /// Box-pulse duration λ = τ/ε.
    pub fn duration(&self) -> f64 {
        self.tau / self.eps
    }
}

/// Detuning-derived quantities shared by all closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Auxiliary {
    pub v: f64,
    pub f: f64,
    pub beta: f64,
    /// Dynamic phase φ̃ = Δω τ/(2Ω₀) = λ/2.
    pub phi_dyn: f64,
}

impl Auxiliary {
    pub fn new(q: f64, p: &PulseParams) -> Self {
        let v = UnitConvention::detuning(q, p.eps);
        let f = (1.0 + v * v).sqrt();
        let beta = (v / f).powi(2) - 0.5 / (f * f);
        Self { v, f, beta, phi_dyn: 0.5 * UnitConvention::DELTA_OMEGA * p.duration() }
    }
}

/// Moduli of the adjacent-class amplitudes and their carrier frequencies.
///
/// `g_m1_n` is the amplitude in class -1 for an atom entering class n, and
/// likewise for class 2. Phases are not reliable at this order and are not
/// exposed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjacentCouplings {
    pub g20: f64,
    pub g21: f64,
    pub g_m10: f64,
    pub g_m11: f64,
    pub omega_m1: f64,
    pub omega_2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseTransfer {
    /// G = [[T, R], [R̃, T̃]] in the Heisenberg frame.
    pub g: Mat2,
    pub t: C64,
    pub r: C64,
    /// Loss block γ with G = [[t̃, r̃], [-r̃*, t̃*]]·γ.
    pub gamma: Mat2,
    pub adjacent: AdjacentCouplings,
    pub aux: Auxiliary,
    /// Set when ε exceeds the validated perturbative range.
    pub range_warning: bool,
}

impl PulseTransfer {
    pub fn big_t(&self) -> C64 {
        self.g[0][0]
    }
    pub fn big_r(&self) -> C64 {
        self.g[0][1]
    }
    pub fn big_r_tilde(&self) -> C64 {
        self.g[1][0]
    }
    pub fn big_t_tilde(&self) -> C64 {
        self.g[1][1]
    }
    /// T T̃ - R R̃.
    pub fn det(&self) -> C64 {
        mat2::det(&self.g)
    }
}

/// sin x / x with a series branch near zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Velocity-selective coefficients (t̃, r̃) of a lossless box pulse.
pub fn vs_coefficients(q: f64, p: &PulseParams) -> (C64, C64) {
    let a = Auxiliary::new(q, p);
    let half = 0.5 * a.f * p.tau;
    let ph = C64::from_polar(1.0, a.phi_dyn);
    let t = ph * C64::new(half.cos(), 0.5 * a.v * p.tau * sinc(half));
    let r = C64::new(0.0, -1.0) * C64::from_polar(1.0, a.phi_dyn - p.theta) * (0.5 * p.tau * sinc(half));
    (t, r)
}

/// SU(2) matrix [[t̃, r̃], [-r̃*, t̃*]].
pub fn su2(t: C64, r: C64) -> Mat2 {
    [[t, r], [-r.conj(), t.conj()]]
}

pub fn vs_matrix(q: f64, p: &PulseParams) -> Mat2 {
    let (t, r) = vs_coefficients(q, p);
    su2(t, r)
}

/// (e^{ixλ} - 1)/(ix), i.e. ∫₀^λ e^{ixs} ds.
fn phi(x: f64, lam: f64) -> C64 {
    let z = x * lam;
    if z.abs() < 1e-5 {
        C64::new(lam * (1.0 - z * z / 6.0), lam * z * (0.5 - z * z / 24.0))
    } else {
        (C64::from_polar(1.0, z) - ONE) / C64::new(0.0, x)
    }
}

/// d/dx of [`phi`], used when a denominator of the double integral vanishes.
fn phi_prime(x: f64, lam: f64) -> C64 {
    let z = x * lam;
    if z.abs() < 1e-4 {
        C64::new(-lam * lam * z / 3.0, 0.5 * lam * lam * (1.0 - z * z / 4.0))
    } else {
        let e = C64::from_polar(1.0, z);
        e * (lam / x) - (e - ONE) / C64::new(0.0, x * x)
    }
}

/// ∫₀^λ ds e^{iAs} ∫₀^s ds' e^{iBs'}.
fn double_integral(a: f64, b: f64, lam: f64) -> C64 {
    if (b * lam).abs() < 1e-6 {
        // limit B → 0: ∫₀^λ s e^{iAs} ds = -i φ'(A)
        C64::new(0.0, -1.0) * phi_prime(a, lam)
    } else {
        (phi(a + b, lam) - phi(a, lam)) / C64::new(0.0, b)
    }
}

/// Spectral data of the main-class propagator in the dressed frame.
struct MainSpectrum {
    /// Projectors P₊, P₋ onto the dressed states.
    proj: [Mat2; 2],
    /// Centre energy E_c and splitting half-width κ.
    e_c: f64,
    kappa: f64,
    /// Energies of classes -1 and 2 including second-order shifts.
    e_adj: [f64; 2],
}

impl MainSpectrum {
    fn new(a: &Auxiliary, p: &PulseParams) -> Self {
        let (eps, v, f) = (p.eps, a.v, a.f);
        let big_f = f * (1.0 + a.beta * eps * eps / 8.0);
        let em = C64::from_polar(1.0, -p.theta);
        let n_hat: Mat2 = [[C64::new(-v / f, 0.0), em / f], [em.conj() / f, C64::new(v / f, 0.0)]];
        let half = C64::new(0.5, 0.0);
        let mut proj = [[[ZERO; 2]; 2]; 2];
        for (k, s) in [1.0, -1.0].into_iter().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    let id = if i == j { ONE } else { ZERO };
                    proj[k][i][j] = (id + n_hat[i][j] * s) * half;
                }
            }
        }
        let ev = eps * v;
        Self {
            proj,
            e_c: -eps * eps / 8.0,
            kappa: 0.5 * eps * big_f,
            e_adj: [-1.5 * ev + 2.0 + eps * eps * (2.0 + ev) / 16.0, 1.5 * ev + 2.0 + eps * eps * (2.0 - ev) / 16.0],
        }
    }

    fn sign(k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Second-order perturbative transfer of a box pulse including loss to the
/// adjacent classes. Accurate to O(ε³) in the main block up to a global phase.
pub fn pert_transfer(q: f64, p: &PulseParams) -> PulseTransfer {
    let aux = Auxiliary::new(q, p);
    let sp = MainSpectrum::new(&aux, p);
    let (eps, v) = (p.eps, aux.v);
    let lam = p.duration();
    let big_f = 2.0 * sp.kappa / eps;

    // Γ = 1 - (ε²/4) Σ_a I_a + iε²λ H₂
    let mut acc = [[ZERO; 2]; 2];
    for (ai, &e_a) in sp.e_adj.iter().enumerate() {
        // class -1 couples to main class 0, class 2 to main class 1
        let k = ai;
        for s in 0..2 {
            for sp_ in 0..2 {
                let a = sp.e_c + MainSpectrum::sign(sp_) * sp.kappa - e_a;
                let b = e_a - sp.e_c - MainSpectrum::sign(s) * sp.kappa;
                let val = double_integral(a, b, lam);
                for m in 0..2 {
                    for n in 0..2 {
                        acc[m][n] += sp.proj[sp_][k][m].conj() * sp.proj[s][k][n] * val;
                    }
                }
            }
        }
    }
    let em = C64::from_polar(1.0, -p.theta);
    let h2: Mat2 = [
        [C64::new((-eps * v * aux.beta - 2.0) / 16.0, 0.0), em * (eps * aux.beta / 16.0)],
        [em.conj() * (eps * aux.beta / 16.0), C64::new((eps * v * aux.beta - 2.0) / 16.0, 0.0)],
    ];
    let mut big_gamma = mat2::identity();
    for m in 0..2 {
        for n in 0..2 {
            big_gamma[m][n] += acc[m][n] * (-eps * eps / 4.0) + C64::new(0.0, eps * eps * lam) * h2[m][n];
        }
    }

    // SU(2) part with the shifted Rabi frequency F
    let half = 0.5 * big_f * p.tau;
    let ph = C64::from_polar(1.0, aux.phi_dyn);
    let t = ph * C64::new(half.cos(), v / aux.f * half.sin());
    let r = C64::new(0.0, -1.0) * C64::from_polar(1.0, aux.phi_dyn - p.theta) * (half.sin() / aux.f);
    let gamma = mat2::scale(&big_gamma, C64::from_polar(1.0, -sp.e_c * lam));
    let g = mat2::mul(&su2(t, r), &gamma);

    // first-order amplitudes in the adjacent classes
    let mut moduli = [[0.0; 2]; 2];
    for (ai, &e_a) in sp.e_adj.iter().enumerate() {
        let k = ai;
        for n in 0..2 {
            let mut z = ZERO;
            for s in 0..2 {
                z += sp.proj[s][k][n] * phi(e_a - sp.e_c - MainSpectrum::sign(s) * sp.kappa, lam);
            }
            moduli[ai][n] = 0.5 * eps * z.norm();
        }
    }
    let adjacent = AdjacentCouplings {
        g_m10: moduli[0][0],
        g_m11: moduli[0][1],
        g20: moduli[1][0],
        g21: moduli[1][1],
        omega_m1: sp.e_adj[0],
        omega_2: sp.e_adj[1],
    };

    PulseTransfer { g, t, r, gamma, adjacent, aux, range_warning: eps > PERT_VALID_EPS }
}

/// Adjacent-class coupling moduli (see [`AdjacentCouplings`]).
pub fn adjacent_couplings(q: f64, p: &PulseParams) -> AdjacentCouplings {
    pert_transfer(q, p).adjacent
}

/// Lossless transfer in the same record layout as [`pert_transfer`].
pub fn vs_transfer(q: f64, p: &PulseParams) -> PulseTransfer {
    let (t, r) = vs_coefficients(q, p);
    let aux = Auxiliary::new(q, p);
    PulseTransfer {
        g: su2(t, r),
        t,
        r,
        gamma: mat2::identity(),
        adjacent: AdjacentCouplings { g20: 0.0, g21: 0.0, g_m10: 0.0, g_m11: 0.0, omega_m1: 2.0 - 3.0 * q, omega_2: 2.0 + 3.0 * q },
        aux,
        range_warning: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn identity_pulse() {
        let p = PulseParams::new(0.1, 0.0, 0.3).unwrap();
        let (t, r) = vs_coefficients(0.01, &p);
        assert!((t - ONE).norm() < 1e-15 && r.norm() < 1e-15);
        let g = pert_transfer(0.01, &p);
        assert!(mat2::max_abs_diff(&g.g, &mat2::identity()) < 1e-14);
        assert!(g.adjacent.g20 < 1e-15 && g.adjacent.g_m11 < 1e-15);
    }

    #[test]
    fn resonant_pi_pulse() {
        let p = PulseParams::new(0.1, PI, 0.0).unwrap();
        let (t, r) = vs_coefficients(0.0, &p);
        assert!(t.norm() < 1e-15);
        assert!((r.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phi_series_branch_is_continuous() {
        let lam = 3.0;
        for x in [1e-6 / lam, 0.99e-5 / lam, 1.01e-5 / lam, 1e-3] {
            let exact = (C64::from_polar(1.0, x * lam) - ONE) / C64::new(0.0, x);
            assert!((phi(x, lam) - exact).norm() < 1e-9, "{x}");
        }
        let h = 1e-6;
        for x in [0.0, 1e-5, 0.3] {
            let fd = (phi(x + h, lam) - phi(x - h, lam)) / (2.0 * h);
            assert!((phi_prime(x, lam) - fd).norm() < 1e-6, "{x}");
        }
    }

    #[test]
    fn double_integral_limit_matches_quadrature() {
        let lam = 2.0;
        for (a, b) in [(0.7, 1.3), (0.4, 1e-9), (1e-9, 1e-9)] {
            let n = 4000;
            let mut s = ZERO;
            for i in 0..n {
                let x = (i as f64 + 0.5) * lam / n as f64;
                s += C64::from_polar(1.0, a * x) * phi(b, x) * (lam / n as f64);
            }
            assert!((double_integral(a, b, lam) - s).norm() < 1e-6, "{a} {b}");
        }
    }
}
