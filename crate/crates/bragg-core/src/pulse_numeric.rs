//! Runge-Kutta evolution of the truncated multi-class Bragg Hamiltonian for
//! box and Blackman envelopes.

use std::f64::consts::PI;

use nalgebra::DVector;
use ode_solvers::dop853::Dop853;
use ode_solvers::dop_shared::{IntegrationError, OutputType};
use ode_solvers::System;
use rayon::prelude::*;

use crate::mat2::{self, Mat2};
use crate::{Error, Result, C64};

/// Leading Blackman coefficient a₀; the pulse area is a₀ ε λ_j.
pub const BLACKMAN_A0: f64 = 0.42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Box,
    Blackman,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeSpec {
    pub shape: Shape,
    /// Peak coupling ε.
    pub eps: f64,
    /// Pulse area τ.
    pub tau: f64,
}

impl EnvelopeSpec {
    pub fn new(shape: Shape, eps: f64, tau: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Domain(format!("eps = {eps} must be positive")));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::Domain(format!("tau = {tau} must be non-negative")));
        }
        Ok(Self { shape, eps, tau })
    }

    /// Pulse duration λ_j.
    pub fn duration(&self) -> f64 {
        match self.shape {
            Shape::Box => self.tau / self.eps,
            Shape::Blackman => self.tau / (BLACKMAN_A0 * self.eps),
        }
    }

    /// Instantaneous coupling ε_td(λ).
    pub fn rabi(&self, lam: f64) -> f64 {
        let lj = self.duration();
        if !(0.0..=lj).contains(&lam) {
            return 0.0;
        }
        match self.shape {
            Shape::Box => self.eps,
            Shape::Blackman => {
                let x = 2.0 * PI * lam / lj;
                self.eps * (BLACKMAN_A0 - 0.5 * x.cos() + 0.08 * (2.0 * x).cos())
            }
        }
    }
}

/// Inclusive range of momentum classes kept in the truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassRange {
    pub n_min: i32,
    pub n_max: i32,
}

impl Default for ClassRange {
    fn default() -> Self {
        Self { n_min: -2, n_max: 3 }
    }
}

impl ClassRange {
    pub fn new(n_min: i32, n_max: i32) -> Result<Self> {
        if n_min > 0 || n_max < 1 {
            return Err(Error::Config(format!("class range {n_min}..={n_max} must contain 0 and 1")));
        }
        Ok(Self { n_min, n_max })
    }

    pub fn len(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position of class n in the state vector.
    pub fn index(&self, n: i32) -> usize {
        (n - self.n_min) as usize
    }

    pub fn classes(&self) -> impl Iterator<Item = i32> {
        self.n_min..=self.n_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12 }
    }
}

/// Tridiagonal Hamiltonian H_nn = δ_n, H_(n±1)n = ε_td/2 e^{±iθ}.
#[derive(Debug, Clone, Copy)]
pub struct ClassHamiltonian {
    pub q: f64,
    pub theta: f64,
    pub classes: ClassRange,
    pub envelope: EnvelopeSpec,
}

/// Detuning δ_n = (2n - 1)q̃ + n(n - 1).
pub fn detuning(n: i32, q: f64) -> f64 {
    let n = n as f64;
    (2.0 * n - 1.0) * q + n * (n - 1.0)
}

impl ClassHamiltonian {
    /// Dense matrix at time λ, for inspection and tests.
    pub fn matrix(&self, lam: f64) -> Vec<Vec<C64>> {
        let d = self.classes.len();
        let half = 0.5 * self.envelope.rabi(lam);
        let up = C64::from_polar(half, self.theta);
        let mut h = vec![vec![C64::new(0.0, 0.0); d]; d];
        for (i, n) in self.classes.classes().enumerate() {
            h[i][i] = C64::new(detuning(n, self.q), 0.0);
            if i + 1 < d {
                h[i + 1][i] = up;
                h[i][i + 1] = up.conj();
            }
        }
        h
    }
}

/// Columns packed as interleaved (re, im) pairs, followed by the clock λ.
///
/// The envelope is read from the clock component so the system is autonomous;
/// the solver then keeps its full order for time-dependent couplings.
struct Schrodinger {
    diag: Vec<f64>,
    n_cols: usize,
    env: EnvelopeSpec,
    phase: C64,
}

impl System<f64, DVector<f64>> for Schrodinger {
    fn system(&self, _lam: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        let d = self.diag.len();
        let clock = 2 * d * self.n_cols;
        dy[clock] = 1.0;
        let half = 0.5 * self.env.rabi(y[clock]);
        let up = self.phase * half;
        let dn = up.conj();
        for c in 0..self.n_cols {
            let base = 2 * d * c;
            let psi = |i: usize| C64::new(y[base + 2 * i], y[base + 2 * i + 1]);
            for i in 0..d {
                let mut h = psi(i) * self.diag[i];
                if i > 0 {
                    h += up * psi(i - 1);
                }
                if i + 1 < d {
                    h += dn * psi(i + 1);
                }
                // dψ/dλ = -i Hψ
                dy[base + 2 * i] = h.im;
                dy[base + 2 * i + 1] = -h.re;
            }
        }
    }
}

/// Transfer matrix over a class range, indexed by class number.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub classes: ClassRange,
    /// Column-major: `cols[k]` is the evolved state of the k-th initial class.
    cols: Vec<Vec<C64>>,
    col_classes: Vec<i32>,
}

impl TransferMatrix {
    /// Amplitude ⟨m|U|n⟩. Panics if column n was not evolved.
    pub fn get(&self, m: i32, n: i32) -> C64 {
        let k = self.col_classes.iter().position(|&c| c == n).expect("column not evolved");
        self.cols[k][self.classes.index(m)]
    }

    pub fn column_norm(&self, n: i32) -> f64 {
        let k = self.col_classes.iter().position(|&c| c == n).expect("column not evolved");
        self.cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn evolved_columns(&self) -> &[i32] {
        &self.col_classes
    }

    /// Main-class block in the Heisenberg frame, diag(e^{iλ/2}, e^{-iλ/2})·U.
    pub fn main_block(&self, duration: f64) -> Mat2 {
        let u = [[self.get(0, 0), self.get(0, 1)], [self.get(1, 0), self.get(1, 1)]];
        mat2::mul(&mat2::dynamic_phase(duration), &u)
    }
}

/// Evolves the listed initial classes through one pulse.
pub fn evolve_columns(
    q: f64,
    env: &EnvelopeSpec,
    theta: f64,
    classes: ClassRange,
    columns: &[i32],
    tol: Tolerances,
) -> Result<TransferMatrix> {
    if tol.rtol > 1e-8 {
        return Err(Error::Config(format!("rtol = {} above 1e-8", tol.rtol)));
    }
    let d = classes.len();
    let mut y0 = DVector::zeros(2 * d * columns.len() + 1);
    for (k, &n) in columns.iter().enumerate() {
        if n < classes.n_min || n > classes.n_max {
            return Err(Error::Config(format!("initial class {n} outside truncation")));
        }
        y0[2 * d * k + 2 * classes.index(n)] = 1.0;
    }
    let lam_end = env.duration();
    let unpack = |y: &DVector<f64>| -> Vec<Vec<C64>> {
        (0..columns.len())
            .map(|k| (0..d).map(|i| C64::new(y[2 * d * k + 2 * i], y[2 * d * k + 2 * i + 1])).collect())
            .collect()
    };
    if lam_end == 0.0 {
        return Ok(TransferMatrix { classes, cols: unpack(&y0), col_classes: columns.to_vec() });
    }
    let sys = Schrodinger {
        diag: classes.classes().map(|n| detuning(n, q)).collect(),
        n_cols: columns.len(),
        env: *env,
        phase: C64::from_polar(1.0, theta),
    };
    let mut solver = Dop853::from_param(
        sys,
        0.0,
        lam_end,
        lam_end,
        y0,
        tol.rtol,
        tol.atol,
        0.9,
        0.0,
        0.333,
        6.0,
        lam_end,
        0.0,
        10_000_000,
        u32::MAX,
        OutputType::Sparse,
    );
    solver.integrate().map_err(|e| {
        let (lambda, reason) = match e {
            IntegrationError::StepSizeUnderflow { x } => (x, "step size underflow".to_string()),
            IntegrationError::MaxNumStepReached { x, n_step } => (x, format!("step limit {n_step} reached")),
            IntegrationError::StiffnessDetected { x } => (x, "stiffness detected".to_string()),
        };
        Error::Integration { lambda, reason }
    })?;
    let y = solver.y_out().last().expect("solver output");
    Ok(TransferMatrix { classes, cols: unpack(y), col_classes: columns.to_vec() })
}

/// Full transfer matrix: every class of the truncation evolved.
pub fn evolve_pulse(q: f64, env: &EnvelopeSpec, theta: f64, classes: ClassRange, tol: Tolerances) -> Result<TransferMatrix> {
    let cols: Vec<i32> = classes.classes().collect();
    evolve_columns(q, env, theta, classes, &cols, tol)
}

/// Heisenberg-frame main block G of one pulse.
pub fn main_transfer(q: f64, env: &EnvelopeSpec, theta: f64, classes: ClassRange, tol: Tolerances) -> Result<Mat2> {
    let u = evolve_columns(q, env, theta, classes, &[0, 1], tol)?;
    Ok(u.main_block(env.duration()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectivityRow {
    pub q: f64,
    pub v: f64,
    /// |R|² = |G₀₁|².
    pub r: f64,
    /// |R̃|² = |G₁₀|².
    pub r_tilde: f64,
}

/// Momentum-resolved mirror reflectivities of one pulse.
pub fn reflectivity_profile(
    env: &EnvelopeSpec,
    theta: f64,
    grid: &[f64],
    classes: ClassRange,
    tol: Tolerances,
) -> Result<Vec<ReflectivityRow>> {
    if let Some(&q) = grid.iter().find(|q| !(-0.5..=0.5).contains(*q)) {
        return Err(Error::Domain(format!("grid point {q} outside the class interval")));
    }
    grid.par_iter()
        .map(|&q| {
            let g = main_transfer(q, env, theta, classes, tol)?;
            Ok(ReflectivityRow { q, v: 2.0 * q / env.eps, r: g[0][1].norm_sqr(), r_tilde: g[1][0].norm_sqr() })
        })
        .collect()
}

/// Full width at half maximum of a sampled peak, by linear interpolation
/// of the outermost half-maximum crossings.
pub fn fwhm(x: &[f64], y: &[f64]) -> Option<f64> {
    let (imax, &ymax) = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    let half = 0.5 * ymax;
    let mut left = None;
    for i in (0..imax).rev() {
        if y[i] < half {
            left = Some(x[i] + (half - y[i]) / (y[i + 1] - y[i]) * (x[i + 1] - x[i]));
            break;
        }
    }
    let mut right = None;
    for i in imax + 1..y.len() {
        if y[i] < half {
            right = Some(x[i - 1] + (y[i - 1] - half) / (y[i - 1] - y[i]) * (x[i] - x[i - 1]));
            break;
        }
    }
    Some(right? - left?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blackman_area_matches_tau() {
        let env = EnvelopeSpec::new(Shape::Blackman, 0.3, PI).unwrap();
        let lj = env.duration();
        let n = 20_000;
        let h = lj / n as f64;
        // Simpson
        let mut s = env.rabi(0.0) + env.rabi(lj);
        for i in 1..n {
            s += env.rabi(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        assert!((s * h / 3.0 - PI).abs() < 1e-10);
    }

    #[test]
    fn hamiltonian_is_hermitian_tridiagonal() {
        let h = ClassHamiltonian {
            q: 0.13,
            theta: 0.4,
            classes: ClassRange::default(),
            envelope: EnvelopeSpec::new(Shape::Blackman, 0.7, PI).unwrap(),
        };
        let m = h.matrix(1.3);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(m[i][j], m[j][i].conj());
                if i.abs_diff(j) > 1 {
                    assert_eq!(m[i][j], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn zero_area_is_identity() {
        let env = EnvelopeSpec::new(Shape::Box, 0.2, 0.0).unwrap();
        let u = evolve_pulse(0.1, &env, 0.0, ClassRange::default(), Tolerances::default()).unwrap();
        for m in -2..=3 {
            for n in -2..=3 {
                let e = if m == n { 1.0 } else { 0.0 };
                assert_eq!(u.get(m, n), C64::new(e, 0.0));
            }
        }
    }

    #[test]
    fn fwhm_of_triangle() {
        let x: Vec<f64> = (0..=100).map(|i| i as f64 / 50.0 - 1.0).collect();
        let y: Vec<f64> = x.iter().map(|x| 1.0 - x.abs()).collect();
        assert!((fwhm(&x, &y).unwrap() - 1.0).abs() < 1e-12);
    }
}
