//! Mach-Zehnder sequence G₂ U G₁ U G₀: transfer matrix, path decomposition,
//! fringe signals, script quantities and exit wave functions.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::mat2::{self, Mat2, ZERO};
use crate::pulse_analytic::{pert_transfer, vs_matrix, PulseParams, PERT_VALID_EPS};
use crate::pulse_numeric::{main_transfer, ClassRange, EnvelopeSpec, Shape, Tolerances};
use crate::units_grid::MomentumDistribution;
use crate::{Error, Result, C64};

/// Central finite-difference step for φ-derivatives.
pub const FD_STEP: f64 = 1e-5;

/// Largest tolerated change of a derivative when the step is halved.
pub const FD_CONSISTENCY: f64 = 1e-8;

/// Clusters closer than this many position widths count as overlapping.
pub const OVERLAP_WIDTHS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    /// Lossless two-level pulses.
    AnalyticVsOnly,
    /// Second-order closed form including loss to the adjacent classes.
    Perturbative,
    /// Runge-Kutta evolution of the truncated class ladder.
    Numeric { shape: Shape, classes: ClassRange, tol: Tolerances },
}

impl Backend {
    pub fn numeric_box() -> Self {
        Backend::Numeric { shape: Shape::Box, classes: ClassRange::default(), tol: Tolerances::default() }
    }

    pub fn numeric_blackman() -> Self {
        Backend::Numeric { shape: Shape::Blackman, classes: ClassRange::default(), tol: Tolerances::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceParams {
    /// Peak coupling ε = Ω₀/ω_k shared by all pulses.
    pub eps: f64,
    /// Pulse areas (τ₀, τ₁, τ₂).
    pub taus: [f64; 3],
    pub theta0: f64,
    pub theta1: f64,
    /// Interferometer phase; zero is the ideal working point.
    pub phi: f64,
    /// Interrogation time λ_T = ω_k T.
    pub lambda_t: f64,
    pub backend: Backend,
    /// Finite-difference step for φ-derivatives.
    pub fd_step: f64,
}

impl SequenceParams {
    /// Beam splitter, mirror, beam splitter with λ_T = 10³/ε.
    pub fn new(eps: f64, backend: Backend) -> Result<Self> {
        let s = Self {
            eps,
            taus: [PI / 2.0, PI, PI / 2.0],
            theta0: 0.0,
            theta1: 0.0,
            phi: 0.0,
            lambda_t: 1e3 / eps,
            backend,
            fd_step: FD_STEP,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Domain(format!("eps = {} must be positive", self.eps)));
        }
        if !(self.lambda_t > 0.0 && self.lambda_t.is_finite()) {
            return Err(Error::Domain(format!("lambda_T = {} must be positive", self.lambda_t)));
        }
        if !(self.fd_step > 0.0 && self.fd_step < 0.1) {
            return Err(Error::Config(format!("finite-difference step {} outside (0, 0.1)", self.fd_step)));
        }
        if let Some(t) = self.taus.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return Err(Error::Domain(format!("pulse area {t} must be non-negative")));
        }
        Ok(())
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    /// True when the perturbative backend runs outside its validated range.
    pub fn range_warning(&self) -> bool {
        matches!(self.backend, Backend::Perturbative) && self.eps > PERT_VALID_EPS
    }

    /// Duration λ_j of pulse j.
    pub fn pulse_duration(&self, j: usize) -> f64 {
        match self.backend {
            Backend::Numeric { shape, .. } => EnvelopeSpec { shape, eps: self.eps, tau: self.taus[j] }.duration(),
            _ => self.taus[j] / self.eps,
        }
    }

    /// Laser phase θ₂ that realizes the interferometer phase `phi`.
    ///
    /// The pulses' dynamic phases enter as λ₀ - λ₁ and are absorbed here.
    pub fn theta2_for(&self, phi: f64) -> f64 {
        phi - self.theta0 + 2.0 * self.theta1 - (self.pulse_duration(1) - self.pulse_duration(0))
    }
}

/// Doppler displacement n = a + b of paths p1..p4, where (a, b) are the
/// classes occupied during the two free-evolution intervals.
pub const PATH_DISPLACEMENT: [u8; 4] = [0, 1, 1, 2];

const PATH_CLASSES: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MziTransfer {
    pub m: Mat2,
    /// Path amplitudes `paths[i][p]` into exit class i for input class 0.
    pub paths: [[C64; 4]; 2],
    /// Mirror transmissions set to zero.
    pub cropped: bool,
}

impl MziTransfer {
    /// Detected population of exit class i from input 0 when the three
    /// position clusters do not overlap: |p1|² + |p2 + p3|² + |p4|².
    pub fn population(&self, i: usize) -> f64 {
        let p = &self.paths[i];
        p[0].norm_sqr() + (p[1] + p[2]).norm_sqr() + p[3].norm_sqr()
    }

    /// Per-atom signal ⟨J₃⟩/N = (P₁ - P₀)/2.
    pub fn signal(&self) -> f64 {
        0.5 * (self.population(1) - self.population(0))
    }
}

/// Main-class pulse blocks at zero laser phase.
fn base_pulses(q: f64, seq: &SequenceParams) -> Result<[Mat2; 3]> {
    let one = |tau: f64| -> Result<Mat2> {
        match seq.backend {
            Backend::AnalyticVsOnly => Ok(vs_matrix(q, &PulseParams::new(seq.eps, tau, 0.0)?)),
            Backend::Perturbative => Ok(pert_transfer(q, &PulseParams::new(seq.eps, tau, 0.0)?).g),
            Backend::Numeric { shape, classes, tol } => {
                main_transfer(q, &EnvelopeSpec::new(shape, seq.eps, tau)?, 0.0, classes, tol)
            }
        }
    };
    let g0 = one(seq.taus[0])?;
    let g1 = one(seq.taus[1])?;
    let g2 = if seq.taus[2] == seq.taus[0] { g0 } else { one(seq.taus[2])? };
    Ok([g0, g1, g2])
}

fn assemble(q: f64, base: &[Mat2; 3], seq: &SequenceParams, phi: f64, crop: bool) -> MziTransfer {
    let g0 = mat2::shift_phase(&base[0], seq.theta0);
    let mut g1 = mat2::shift_phase(&base[1], seq.theta1);
    if crop {
        g1[0][0] = ZERO;
        g1[1][1] = ZERO;
    }
    let g2 = mat2::shift_phase(&base[2], seq.theta2_for(phi));
    let delta = (2.0 * q + 1.0) * seq.lambda_t;
    let u = [C64::from_polar(1.0, 0.5 * delta), C64::from_polar(1.0, -0.5 * delta)];
    let mut paths = [[ZERO; 4]; 2];
    for (i, row) in paths.iter_mut().enumerate() {
        for (p, &(a, b)) in PATH_CLASSES.iter().enumerate() {
            row[p] = g2[i][b] * u[b] * g1[b][a] * u[a] * g0[a][0];
        }
    }
    let ud = mat2::diag(u[0], u[1]);
    let m = mat2::mul(&g2, &mat2::mul(&ud, &mat2::mul(&g1, &mat2::mul(&ud, &g0))));
    MziTransfer { m, paths, cropped: crop }
}

/// Full MZI transfer at momentum q̃.
pub fn mzi_transfer(q: f64, seq: &SequenceParams, crop: bool) -> Result<MziTransfer> {
    seq.validate()?;
    let base = base_pulses(q, seq)?;
    Ok(assemble(q, &base, seq, seq.phi, crop))
}

/// Fringe ⟨J₃⟩/N = (O - 𝒥 cos φ)/2 integrated over the momentum mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSummary {
    /// ⟨J₃⟩/N at the sequence phase.
    pub signal: f64,
    pub offset: f64,
    pub amplitude: f64,
    /// Detected fraction Σ_i P_i.
    pub eta: f64,
    /// Position clusters closer than [`OVERLAP_WIDTHS`] widths.
    pub overlap_warning: bool,
}

/// Position-space width of one exit cluster, in units of the displacement ħkT/m.
pub fn cluster_width(dist: &MomentumDistribution, seq: &SequenceParams) -> f64 {
    1.0 / (4.0 * seq.lambda_t * dist.sigma_q)
}

fn overlap_warning(dist: &MomentumDistribution, seq: &SequenceParams) -> bool {
    OVERLAP_WIDTHS * cluster_width(dist, seq) > 1.0
}

fn signal(dist: &MomentumDistribution, seq: &SequenceParams, crop: bool) -> Result<SignalSummary> {
    seq.validate()?;
    let [s, s0, spi, eta] = dist.integrate_many::<4, _>(|q| {
        let base = base_pulses(q, seq)?;
        let at = |phi: f64| assemble(q, &base, seq, phi, crop);
        let here = at(seq.phi);
        let c = |x: f64| C64::new(x, 0.0);
        Ok([c(here.signal()), c(at(0.0).signal()), c(at(PI).signal()), c(here.population(0) + here.population(1))])
    })?;
    Ok(SignalSummary {
        signal: s.re,
        offset: s0.re + spi.re,
        amplitude: spi.re - s0.re,
        eta: eta.re,
        overlap_warning: overlap_warning(dist, seq),
    })
}

/// Signal of all three exit clusters.
pub fn signal_full(dist: &MomentumDistribution, seq: &SequenceParams) -> Result<SignalSummary> {
    signal(dist, seq, false)
}

/// Signal of the central cluster only.
pub fn signal_cropped(dist: &MomentumDistribution, seq: &SequenceParams) -> Result<SignalSummary> {
    signal(dist, seq, true)
}

/// Closed-form momentum averages for lossless pulses of areas (π/2, π, π/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VsClosedForms {
    pub offset_full: f64,
    pub amplitude: f64,
    pub offset_cropped: f64,
    /// Weighted mirror reflectivity ∫|φ₀ r̃₁|².
    pub eta_cropped: f64,
}

pub fn vs_closed_forms(dist: &MomentumDistribution, eps: f64) -> Result<VsClosedForms> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps = {eps} must be positive")));
    }
    let [o_h, j, o_s, eta] = dist.integrate_many::<4, _>(|q| {
        let v = 2.0 * q / eps;
        let v2 = v * v;
        let f = (1.0 + v2).sqrt();
        let f6 = f.powi(6);
        let (s4, c4) = (0.25 * PI * f).sin_cos();
        let (s2, c2) = (0.5 * PI * f).sin_cos();
        // sec²(πf/4) sin⁴(πf/2) = 16 sin⁴(πf/4) cos²(πf/4)
        let amp = (s2.powi(4) + 16.0 * v2 * s4.powi(4) * c4 * c4) / f6;
        let c = |x: f64| C64::new(x, 0.0);
        Ok([
            c(-(v2 + c2).powi(2) * (v2 + (PI * f).cos()) / f6),
            c(amp),
            c((v2 + c2).powi(2) * s2 * s2 / f6),
            c(s2 * s2 / (f * f)),
        ])
    })?;
    Ok(VsClosedForms { offset_full: o_h.re, amplitude: j.re, offset_cropped: o_s.re, eta_cropped: eta.re })
}

/// Momentum-averaged matrix-element overlaps of the cropped sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptQuantities {
    /// ∫ |M₀₀|² - |M₁₀|².
    pub a0: f64,
    /// ∫ M₁₁*M₁₀ - M₀₁*M₀₀.
    pub a10: C64,
    pub a0_prime: f64,
    pub a10_prime: C64,
    /// ∫ |M₀₀|² + |M₁₀|².
    pub r0: f64,
    /// ∫ M₁₁*M₁₀ + M₀₁*M₀₀.
    pub r10: C64,
}

impl ScriptQuantities {
    /// Delta-pulse interferometer without loss or velocity selection.
    pub fn ideal(phi: f64, theta0: f64) -> Self {
        let e = C64::from_polar(1.0, theta0);
        Self { a0: phi.cos(), a10: e * phi.sin(), a0_prime: -phi.sin(), a10_prime: e * phi.cos(), r0: 1.0, r10: ZERO }
    }

    /// Vacuum noise V_M = R₀ - A₀² - |A₁₀|².
    pub fn v_m(&self) -> f64 {
        self.r0 - self.a0 * self.a0 - self.a10.norm_sqr()
    }

    pub fn phi10(&self) -> f64 {
        self.a10.arg()
    }

    pub fn phi10_prime(&self) -> f64 {
        self.a10_prime.arg()
    }

    /// Detected fraction η.
    pub fn eta(&self) -> f64 {
        self.r0
    }
}

fn overlaps(m: &Mat2) -> [C64; 4] {
    let a0 = m[0][0].norm_sqr() - m[1][0].norm_sqr();
    let r0 = m[0][0].norm_sqr() + m[1][0].norm_sqr();
    let x = m[1][1].conj() * m[1][0];
    let y = m[0][1].conj() * m[0][0];
    [C64::new(a0, 0.0), x - y, C64::new(r0, 0.0), x + y]
}

/// Script quantities of the cropped sequence at its phases (φ, θ₀).
///
/// φ-derivatives are central differences in θ₂ with steps h and h/2; their
/// Richardson combination is returned.
pub fn script_quantities(dist: &MomentumDistribution, seq: &SequenceParams) -> Result<ScriptQuantities> {
    seq.validate()?;
    let h = seq.fd_step;
    let shifts = [h, -h, 0.5 * h, -0.5 * h];
    // [A₀, A₁₀, R₀, R₁₀, then (A₀, A₁₀) at φ+h, φ-h, φ+h/2, φ-h/2]
    let v = dist.integrate_many::<12, _>(|q| {
        let base = base_pulses(q, seq)?;
        let mut out = [ZERO; 12];
        out[..4].copy_from_slice(&overlaps(&assemble(q, &base, seq, seq.phi, true).m));
        for (k, &d) in shifts.iter().enumerate() {
            let o = overlaps(&assemble(q, &base, seq, seq.phi + d, true).m);
            out[4 + 2 * k] = o[0];
            out[5 + 2 * k] = o[1];
        }
        Ok(out)
    })?;
    let mut prime = [ZERO; 2];
    for (c, slot) in prime.iter_mut().enumerate() {
        let coarse = (v[4 + c] - v[6 + c]) / (2.0 * h);
        let fine = (v[8 + c] - v[10 + c]) / h;
        let mismatch = (coarse - fine).norm();
        if mismatch > FD_CONSISTENCY {
            return Err(Error::Derivative { mismatch });
        }
        *slot = (4.0 * fine - coarse) / 3.0;
    }
    Ok(ScriptQuantities { a0: v[0].re, a10: v[1], a0_prime: prime[0].re, a10_prime: prime[1], r0: v[2].re, r10: v[3] })
}

/// Exit-class position density |ψ_i(z̃)|² in units of the displacement ħkT/m.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionProfile {
    pub z: Vec<f64>,
    pub density: Vec<f64>,
    pub overlap_warning: bool,
}

/// Fourier transform of φ₀(q) M_{i0}(q) on a uniform momentum grid.
///
/// The grid spacing keeps the aliasing period of the transform beyond the
/// requested window plus the two-unit spread of the clusters.
pub fn position_distribution(
    dist: &MomentumDistribution,
    seq: &SequenceParams,
    exit: usize,
    z: &[f64],
) -> Result<PositionProfile> {
    seq.validate()?;
    if exit > 1 {
        return Err(Error::Config(format!("exit class {exit} is not 0 or 1")));
    }
    if z.iter().any(|x| !x.is_finite()) || z.is_empty() {
        return Err(Error::Config("position grid must be non-empty and finite".into()));
    }
    let width = cluster_width(dist, seq);
    let max_gap = z.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    if max_gap >= 0.5 * width {
        return Err(Error::Config(format!(
            "position grid spacing {max_gap:e} does not resolve the cluster width {width:e}"
        )));
    }
    let (zmin, zmax) = z.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let lt = seq.lambda_t;
    let period = (zmax - zmin) + 4.0;
    let half = dist.support();
    let n_q = ((2.0 * half * lt * period / PI).ceil() as usize).max(64) + 1;
    let dq = 2.0 * half / (n_q - 1) as f64;
    let qs: Vec<f64> = (0..n_q).map(|k| -half + k as f64 * dq).collect();
    let amps: Vec<C64> = qs
        .par_iter()
        .map(|&q| {
            let t = mzi_transfer(q, seq, false)?;
            let w = if k_is_endpoint(q, half) { 0.5 } else { 1.0 };
            Ok(t.m[exit][0] * (dist.density_at(q).sqrt() * w * dq))
        })
        .collect::<Result<_>>()?;
    if let Some(k) = amps.iter().position(|a| !(a.re.is_finite() && a.im.is_finite())) {
        return Err(Error::NonFinite { index: k, q: qs[k] });
    }
    let norm = 2.0 * lt / (2.0 * PI);
    let density = z
        .par_iter()
        .map(|&zz| {
            // e^{i 2λ_T q (z̃ - 1)}; path phases in M carry the displacements
            let k = 2.0 * lt * (zz - 1.0);
            let mut acc = ZERO;
            const ANCHOR: usize = 256;
            let step = C64::from_polar(1.0, k * dq);
            let mut ph = ZERO;
            for (j, a) in amps.iter().enumerate() {
                if j % ANCHOR == 0 {
                    ph = C64::from_polar(1.0, k * qs[j]);
                }
                acc += a * ph;
                ph *= step;
            }
            norm * acc.norm_sqr()
        })
        .collect();
    Ok(PositionProfile { z: z.to_vec(), density, overlap_warning: overlap_warning(dist, seq) })
}

fn k_is_endpoint(q: f64, half: f64) -> bool {
    (q.abs() - half).abs() < 1e-15 * half.max(1.0)
}
