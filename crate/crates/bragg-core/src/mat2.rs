//! Minimal complex 2×2 algebra for main-class transfer matrices.

use crate::C64;

pub type Mat2 = [[C64; 2]; 2];

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn identity() -> Mat2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn dagger(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

pub fn det(a: &Mat2) -> C64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn scale(a: &Mat2, s: C64) -> Mat2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

pub fn diag(d0: C64, d1: C64) -> Mat2 {
    [[d0, ZERO], [ZERO, d1]]
}

/// Heisenberg-frame phase diag(e^{iλ/2}, e^{-iλ/2}) of a pulse of duration λ.
pub fn dynamic_phase(lambda: f64) -> Mat2 {
    diag(C64::from_polar(1.0, 0.5 * lambda), C64::from_polar(1.0, -0.5 * lambda))
}

/// Shift of the laser phase by δ: element (m, n) picks up e^{i(m-n)δ}.
pub fn shift_phase(a: &Mat2, delta: f64) -> Mat2 {
    let e = C64::from_polar(1.0, delta);
    [[a[0][0], a[0][1] * e.conj()], [a[1][0] * e, a[1][1]]]
}

pub fn max_abs_diff(a: &Mat2, b: &Mat2) -> f64 {
    let mut m = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((a[i][j] - b[i][j]).norm());
        }
    }
    m
}
