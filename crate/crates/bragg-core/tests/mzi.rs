use std::f64::consts::PI;

use bragg_core::mat2::{self, Mat2};
use bragg_core::mzi_core::{
    mzi_transfer, position_distribution, script_quantities, signal_cropped, signal_full, vs_closed_forms, Backend,
    SequenceParams,
};
use bragg_core::pulse_analytic::{vs_coefficients, PulseParams};
use bragg_core::units_grid::{make_gaussian_mode, MomentumDistribution};
use bragg_core::{Error, C64};
use proptest::prelude::*;

fn vs_seq(eps: f64) -> SequenceParams {
    SequenceParams::new(eps, Backend::AnalyticVsOnly).unwrap()
}

fn mode(sigma: f64) -> MomentumDistribution {
    make_gaussian_mode(sigma, 200).unwrap()
}

fn a0(m: &Mat2) -> f64 {
    m[0][0].norm_sqr() - m[1][0].norm_sqr()
}

fn a10(m: &Mat2) -> C64 {
    m[1][1].conj() * m[1][0] - m[0][1].conj() * m[0][0]
}

/// Composite Simpson on [a, b] with an even number of panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for k in 1..panels {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// |φ₀|²-weighted average by Simpson quadrature, independent of the library grid.
fn gaussian_average(sigma: f64, f: impl Fn(f64) -> f64) -> f64 {
    let half = (12.0 * sigma).min(0.5);
    let g = |q: f64| (-0.5 * (q / sigma).powi(2)).exp();
    simpson(|q| g(q) * f(q), -half, half, 20_000) / simpson(g, -half, half, 20_000)
}

#[test]
fn resonant_atoms_see_the_ideal_interferometer() {
    for &theta0 in &[0.0, 0.7, -2.1] {
        for k in 0..16 {
            let phi = -PI + 2.0 * PI * k as f64 / 16.0;
            let mut seq = vs_seq(0.1).with_phi(phi);
            seq.theta0 = theta0;
            let m = mzi_transfer(0.0, &seq, false).unwrap().m;
            assert!((a0(&m) - phi.cos()).abs() < 1e-12);
            assert!((a10(&m) - C64::from_polar(phi.sin(), theta0)).norm() < 1e-12);
        }
    }
}

#[test]
fn narrow_mode_script_quantities_are_ideal() {
    let mut seq = vs_seq(0.1);
    seq.theta0 = 0.4;
    let s = script_quantities(&mode(1e-9), &seq).unwrap();
    assert!((s.a0 - 1.0).abs() < 1e-10);
    assert!(s.a10.norm() < 1e-8);
    assert!(s.v_m().abs() < 1e-10);
    assert!(s.r10.norm() < 1e-8);
    assert!((s.a10_prime - C64::from_polar(1.0, 0.4)).norm() < 1e-7);
    assert!((s.a0_prime).abs() < 1e-7);
}

#[test]
fn cropped_norm_is_mirror_reflectivity() {
    let seq = vs_seq(0.1);
    for &q in &[0.0, 0.01, 0.03, -0.07] {
        let m = mzi_transfer(q, &seq, true).unwrap().m;
        let (_, r) = vs_coefficients(q, &PulseParams::new(0.1, PI, 0.0).unwrap());
        let kept = m[0][0].norm_sqr() + m[1][0].norm_sqr();
        assert!((kept - r.norm_sqr()).abs() < 1e-12, "q = {q}");
    }
    let m = mzi_transfer(0.0, &seq, true).unwrap().m;
    assert!((m[0][0].norm_sqr() + m[1][0].norm_sqr() - 1.0).abs() < 1e-12);
}

#[test]
fn crop_removes_exactly_the_outer_paths() {
    let seq = SequenceParams::new(0.2, Backend::Perturbative).unwrap().with_phi(0.9);
    for &q in &[0.0, 0.02, -0.04, 0.11] {
        let full = mzi_transfer(q, &seq, false).unwrap();
        let crop = mzi_transfer(q, &seq, true).unwrap();
        for i in 0..2 {
            let central = (full.paths[i][1] + full.paths[i][2]).norm_sqr();
            assert!((crop.population(i) - central).abs() < 1e-14);
            assert!(crop.paths[i][0].norm() == 0.0 && crop.paths[i][3].norm() == 0.0);
        }
    }
}

#[test]
fn vs_closed_forms_match_path_signals() {
    let dist = mode(0.05);
    let seq = vs_seq(0.1);
    let cf = vs_closed_forms(&dist, 0.1).unwrap();
    let full = signal_full(&dist, &seq).unwrap();
    let crop = signal_cropped(&dist, &seq).unwrap();
    assert!((cf.offset_full - full.offset).abs() < 1e-10);
    assert!((cf.amplitude - full.amplitude).abs() < 1e-10);
    assert!((cf.amplitude - crop.amplitude).abs() < 1e-10);
    assert!((cf.offset_cropped - crop.offset).abs() < 1e-10);
    assert!((cf.eta_cropped - crop.eta).abs() < 1e-10);
}

#[test]
fn full_offset_matches_independent_quadrature() {
    // O_H = -⟨(v² + cos(πf/2))² (v² + cos πf) / f⁶⟩
    let eps = 0.1;
    let oracle = -gaussian_average(0.05, |q| {
        let v = 2.0 * q / eps;
        let f = (1.0 + v * v).sqrt();
        (v * v + (0.5 * PI * f).cos()).powi(2) * (v * v + (PI * f).cos()) / f.powi(6)
    });
    let got = signal_full(&mode(0.05), &vs_seq(eps)).unwrap().offset;
    assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
    assert!(got < -0.05 && got > -0.06);
}

#[test]
fn cropped_offset_matches_independent_quadrature() {
    let eps = 0.1;
    let oracle = gaussian_average(0.05, |q| {
        let v = 2.0 * q / eps;
        let f = (1.0 + v * v).sqrt();
        (v * v + (0.5 * PI * f).cos()).powi(2) * (0.5 * PI * f).sin().powi(2) / f.powi(6)
    });
    let got = signal_cropped(&mode(0.05), &vs_seq(eps)).unwrap().offset;
    assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
}

#[test]
fn no_velocity_selectivity_limit() {
    let dist = mode(1e-9);
    for &phi in &[0.0, 0.8, 2.0] {
        let s = signal_full(&dist, &vs_seq(0.1).with_phi(phi)).unwrap();
        assert!(s.offset.abs() < 1e-12);
        assert!((s.amplitude - 1.0).abs() < 1e-12);
        assert!((s.signal + 0.5 * phi.cos()).abs() < 1e-12);
        let c = signal_cropped(&dist, &vs_seq(0.1)).unwrap();
        assert!(c.offset.abs() < 1e-12 && (c.eta - 1.0).abs() < 1e-12);
    }
}

#[test]
fn cropping_reduces_the_offset() {
    let dist = mode(0.05);
    let seq = vs_seq(0.1);
    let full = signal_full(&dist, &seq).unwrap();
    let crop = signal_cropped(&dist, &seq).unwrap();
    assert!(full.offset < 0.0);
    assert!(crop.offset >= 0.0);
    assert!(crop.offset.abs() < full.offset.abs());
}

#[test]
fn perturbative_agrees_with_numeric_at_weak_coupling() {
    let eps = 0.1;
    let pert = SequenceParams::new(eps, Backend::Perturbative).unwrap();
    let num = SequenceParams::new(eps, Backend::numeric_box()).unwrap();
    let a = mzi_transfer(0.05, &pert, false).unwrap().m;
    let b = mzi_transfer(0.05, &num, false).unwrap().m;
    assert!(mat2::max_abs_diff(&a, &b) < eps.powi(4));
}

#[test]
fn vacuum_noise_is_positive_for_lossy_pulses() {
    let seq = SequenceParams::new(0.1, Backend::Perturbative).unwrap();
    let s = script_quantities(&mode(0.005), &seq).unwrap();
    assert!(s.v_m() > 0.0);
    assert!((0.0..=1.0).contains(&s.r0));
    assert!(s.a0.abs() <= s.r0);
}

#[test]
fn a10_stays_small_in_the_working_range() {
    for &sigma in &[0.005, 0.05] {
        for &eps in &[0.05, 0.1, 0.2, 0.3] {
            let seq = SequenceParams::new(eps, Backend::Perturbative).unwrap();
            let s = script_quantities(&mode(sigma), &seq).unwrap();
            assert!(s.a10.norm() <= 0.1, "eps = {eps}, sigma = {sigma}: {}", s.a10);
            assert!((0.0..=1.0).contains(&s.r0) && s.a0.abs() <= s.r0);
        }
    }
}

#[test]
fn weak_coupling_degrades_contrast() {
    let s = script_quantities(&mode(0.005), &vs_seq(0.01)).unwrap();
    assert!(s.a0 < 0.9, "{}", s.a0);
}

#[test]
fn overlap_warning_for_short_interrogation() {
    let dist = mode(0.005);
    let mut seq = vs_seq(0.1);
    assert!(!signal_full(&dist, &seq).unwrap().overlap_warning);
    seq.lambda_t = 50.0;
    assert!(signal_full(&dist, &seq).unwrap().overlap_warning);
}

#[test]
fn invalid_sequences_are_rejected() {
    assert!(matches!(SequenceParams::new(0.0, Backend::Perturbative), Err(Error::Domain(_))));
    let mut seq = vs_seq(0.1);
    seq.lambda_t = -1.0;
    assert!(matches!(mzi_transfer(0.0, &seq, false), Err(Error::Domain(_))));
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn trapezoid(z: &[f64], y: &[f64]) -> f64 {
    z.windows(2).zip(y.windows(2)).map(|(z, y)| 0.5 * (z[1] - z[0]) * (y[0] + y[1])).sum()
}

fn short_seq(phi: f64) -> SequenceParams {
    let mut seq = vs_seq(0.1).with_phi(phi);
    seq.lambda_t = 1e3;
    seq
}

#[test]
fn position_density_conserves_probability() {
    let dist = mode(0.05);
    let seq = short_seq(0.3);
    let z = grid(-0.5, 2.5, 3001);
    let total: f64 = (0..2)
        .map(|i| trapezoid(&z, &position_distribution(&dist, &seq, i, &z).unwrap().density))
        .sum();
    assert!((total - 1.0).abs() < 1e-6, "{total}");
}

#[test]
fn position_clusters_sit_at_unit_displacements() {
    let dist = mode(0.05);
    let z = grid(-0.5, 2.5, 3001);
    let window = |z: &[f64], d: &[f64], lo: f64, hi: f64| {
        let (zz, dd): (Vec<f64>, Vec<f64>) =
            z.iter().zip(d).filter(|(x, _)| (lo..=hi).contains(*x)).map(|(x, y)| (*x, *y)).unzip();
        trapezoid(&zz, &dd)
    };
    let mut outer = Vec::new();
    let mut central = Vec::new();
    for &phi in &[0.0, 1.0, 2.0] {
        let d = position_distribution(&dist, &short_seq(phi), 0, &z).unwrap().density;
        outer.push((window(&z, &d, -0.5, 0.5), window(&z, &d, 1.5, 2.5)));
        central.push(window(&z, &d, 0.5, 1.5));
    }
    for o in &outer[1..] {
        assert!((o.0 - outer[0].0).abs() < 1e-6 && (o.1 - outer[0].1).abs() < 1e-6);
    }
    assert!((central[0] - central[2]).abs() > 0.1);
    assert!(outer[0].0 > 1e-3 && outer[0].1 > 1e-3);
}

#[test]
fn outer_clusters_are_two_peaked() {
    let dist = mode(0.05);
    let z = grid(-0.3, 0.3, 601);
    let d = position_distribution(&dist, &short_seq(0.0), 0, &z).unwrap().density;
    let centre = d[300];
    let peak = d.iter().cloned().fold(0.0, f64::max);
    let argmax = d.iter().position(|&x| x == peak).unwrap();
    assert!(centre < 0.5 * peak, "centre {centre}, peak {peak}");
    assert!((z[argmax]).abs() > 0.005);
}

#[test]
fn coarse_position_grid_is_a_config_error() {
    let dist = mode(0.05);
    let z = grid(-0.5, 2.5, 31);
    assert!(matches!(position_distribution(&dist, &short_seq(0.0), 0, &z), Err(Error::Config(_))));
    assert!(matches!(position_distribution(&dist, &short_seq(0.0), 2, &[0.0]), Err(Error::Config(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vs_transfer_is_unitary(q in -0.5f64..0.5, eps in 0.02f64..1.5, phi in -PI..PI) {
        let m = mzi_transfer(q, &vs_seq(eps).with_phi(phi), false).unwrap().m;
        let p = mat2::mul(&mat2::dagger(&m), &m);
        prop_assert!(mat2::max_abs_diff(&p, &mat2::identity()) < 1e-12);
    }

    #[test]
    fn signals_are_two_pi_periodic(phi in -PI..PI, eps in 0.05f64..0.5) {
        let dist = make_gaussian_mode(0.02, 64).unwrap();
        let seq = SequenceParams::new(eps, Backend::Perturbative).unwrap();
        let a = signal_full(&dist, &seq.with_phi(phi)).unwrap().signal;
        let b = signal_full(&dist, &seq.with_phi(phi + 2.0 * PI)).unwrap().signal;
        let c = signal_cropped(&dist, &seq.with_phi(phi)).unwrap().signal;
        let d = signal_cropped(&dist, &seq.with_phi(phi - 2.0 * PI)).unwrap().signal;
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((c - d).abs() < 1e-12);
    }
}
