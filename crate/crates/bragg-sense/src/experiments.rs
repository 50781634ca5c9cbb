//! The six experiments. Each returns its tables in deterministic row order.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use bragg_core::mzi_core::{
    position_distribution, script_quantities, signal_cropped, signal_full, Backend, SequenceParams,
};
use bragg_core::optimizer::{optimize_inclination_with, optimize_twisting_with};
use bragg_core::pulse_analytic::{pert_transfer, PulseParams, PERT_VALID_EPS};
use bragg_core::pulse_numeric::{
    evolve_columns, fwhm, reflectivity_profile, ClassRange, EnvelopeSpec, Shape, Tolerances,
};
use bragg_core::sensitivity::{uncertainty_oat, uncertainty_vs_only, Detection, UncertaintyResult};
use bragg_core::spin_states::{optimal_twisting, OatParams};
use bragg_core::units_grid::{make_gaussian_mode, MomentumDistribution};
use bragg_core::Error;
use rayon::prelude::*;

use crate::config::{AlphaSpec, AutoOr, BackendKind, Experiment, RunConfig, ShapeKind};
use crate::output::{Cell, Table};
use crate::AppError;

pub struct Outcome {
    pub tables: BTreeMap<String, Table>,
    pub backends: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { tables: BTreeMap::new(), backends: BTreeMap::new(), warnings: Vec::new() }
    }

    fn add(&mut self, name: &str, backend: &str, table: Table) {
        self.tables.insert(name.to_string(), table);
        self.backends.insert(name.to_string(), backend.to_string());
    }
}

/// Resolved physics and numerics of a run.
struct Ctx<'a> {
    cfg: &'a RunConfig,
}

impl<'a> Ctx<'a> {
    fn p(&self) -> &'a crate::config::Physics {
        &self.cfg.physics
    }

    fn eps(&self) -> f64 {
        self.p().eps.expect("resolved")
    }

    fn n(&self) -> u64 {
        self.p().n_atoms.expect("resolved")
    }

    fn grid(&self, key: &str, g: &Option<crate::config::Grid>) -> Result<Vec<f64>, AppError> {
        g.as_ref().expect("resolved").points(key)
    }

    fn dist(&self) -> Result<MomentumDistribution, AppError> {
        Ok(make_gaussian_mode(self.p().sigma_q.expect("resolved"), self.cfg.numerics.nodes.expect("resolved"))?)
    }

    fn classes(&self) -> Result<ClassRange, AppError> {
        let [lo, hi] = self.p().classes.expect("resolved");
        Ok(ClassRange::new(lo, hi)?)
    }

    fn tol(&self) -> Tolerances {
        Tolerances { rtol: self.cfg.numerics.rtol.expect("resolved"), atol: self.cfg.numerics.atol.expect("resolved") }
    }

    fn shape(&self) -> Shape {
        to_shape(self.p().shape.expect("resolved"))
    }

    fn backend(&self, kind: BackendKind, shape: Shape) -> Result<Backend, AppError> {
        Ok(match kind {
            BackendKind::AnalyticVsOnly => Backend::AnalyticVsOnly,
            BackendKind::Perturbative => Backend::Perturbative,
            BackendKind::Numeric => Backend::Numeric { shape, classes: self.classes()?, tol: self.tol() },
        })
    }

    fn configured_backend(&self) -> Result<Backend, AppError> {
        self.backend(self.p().backend.expect("resolved"), self.shape())
    }

    fn seq(&self, eps: f64, backend: Backend) -> Result<SequenceParams, AppError> {
        let mut s = SequenceParams::new(eps, backend)?;
        if let Some(AutoOr::Value(l)) = self.p().lambda_t {
            s.lambda_t = l;
        }
        s.fd_step = self.cfg.numerics.fd_step.expect("resolved");
        s.validate()?;
        Ok(s)
    }

    fn chi(&self) -> Result<f64, AppError> {
        match self.p().chi.expect("resolved") {
            AutoOr::Value(c) => Ok(c),
            AutoOr::Keyword(_) => Ok(optimal_twisting(self.n())?),
        }
    }

    fn oat(&self) -> Result<OatParams, AppError> {
        let chi = self.chi()?;
        Ok(match self.p().alpha.expect("resolved") {
            AlphaSpec::Value(alpha) => OatParams { chi, alpha },
            AlphaSpec::Keyword(_) => OatParams::equator(chi, self.n()),
        })
    }
}

fn to_shape(s: ShapeKind) -> Shape {
    match s {
        ShapeKind::Box => Shape::Box,
        ShapeKind::Blackman => Shape::Blackman,
    }
}

fn backend_label(b: &Backend) -> String {
    match b {
        Backend::AnalyticVsOnly => "analytic_vs_only".into(),
        Backend::Perturbative => "perturbative".into(),
        Backend::Numeric { shape, classes, .. } => {
            format!("numeric({}, classes {}..={})", shape_label(*shape), classes.n_min, classes.n_max)
        }
    }
}

fn shape_label(s: Shape) -> &'static str {
    match s {
        Shape::Box => "box",
        Shape::Blackman => "blackman",
    }
}

/// NΔφ², with singular working points reported as NaN.
fn n_dphi2(r: Result<UncertaintyResult, Error>) -> Result<f64, AppError> {
    match r {
        Ok(u) => Ok(u.n_dphi2),
        Err(Error::Singular(_)) => Ok(f64::NAN),
        Err(e) => Err(e.into()),
    }
}

fn pert_range_warning(eps: &[f64], kind: &str) -> Option<String> {
    let outside = eps.iter().filter(|&&e| e > PERT_VALID_EPS).count();
    (outside > 0).then(|| {
        format!("{kind}: perturbative backend used beyond eps = {PERT_VALID_EPS} at {outside} point(s); results are outside its validated range")
    })
}

pub fn run(exp: Experiment, cfg: &RunConfig) -> Result<Outcome, AppError> {
    let ctx = Ctx { cfg };
    match exp {
        Experiment::RabiMap => rabi_map(&ctx),
        Experiment::Fringe => fringe(&ctx),
        Experiment::SensitivitySweep => sensitivity_sweep(&ctx),
        Experiment::ValidatePert => validate_pert(&ctx),
        Experiment::PulseShape => pulse_shape(&ctx),
        Experiment::Optimize => optimize(&ctx),
    }
}

/// Class populations after one pulse from class 0, over momentum and area.
fn rabi_map(ctx: &Ctx) -> Result<Outcome, AppError> {
    let eps = ctx.eps();
    let qs = ctx.grid("physics.q_grid", &ctx.p().q_grid)?;
    let taus = ctx.grid("physics.tau_grid", &ctx.p().tau_grid)?;
    if qs.iter().any(|q| !(-0.5..=0.5).contains(q)) {
        return Err(AppError::Config("physics.q_grid: values must lie in [-0.5, 0.5]".into()));
    }
    let classes = ctx.classes()?;
    let shape = ctx.shape();
    let tol = ctx.tol();
    let blocks = qs
        .par_iter()
        .map(|&q| {
            let mut rows = Vec::new();
            for &tau in &taus {
                let u = evolve_columns(q, &EnvelopeSpec::new(shape, eps, tau)?, 0.0, classes, &[0], tol)?;
                for n in classes.classes() {
                    rows.push(vec![Cell::from(q), tau.into(), n.into(), u.get(n, 0).norm_sqr().into()]);
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>, AppError>>()?;
    let mut t = Table::new(&["q", "tau", "class", "population"]);
    blocks.into_iter().flatten().for_each(|r| t.push(r));
    let mut out = Outcome::new();
    out.add("rabi-map", &backend_label(&Backend::Numeric { shape, classes, tol }), t);
    Ok(out)
}

/// Fringes, offsets and phase uncertainty with full and cropped detection,
/// plus exit position densities.
fn fringe(ctx: &Ctx) -> Result<Outcome, AppError> {
    let eps = ctx.eps();
    let n = ctx.n();
    let dist = ctx.dist()?;
    let backend = ctx.configured_backend()?;
    let label = backend_label(&backend);
    let seq = ctx.seq(eps, backend)?;
    let phis = ctx.grid("physics.phi_grid", &ctx.p().phi_grid)?;
    let rows = phis
        .par_iter()
        .map(|&phi| {
            let s = seq.with_phi(phi);
            let full = signal_full(&dist, &s)?;
            let crop = signal_cropped(&dist, &s)?;
            Ok(vec![
                Cell::from(phi),
                full.signal.into(),
                crop.signal.into(),
                n_dphi2(uncertainty_vs_only(&dist, &seq, Detection::Full, n, phi))?.into(),
                n_dphi2(uncertainty_vs_only(&dist, &seq, Detection::Cropped, n, phi))?.into(),
            ])
        })
        .collect::<Result<Vec<_>, AppError>>()?;
    let mut t = Table::new(&["phi", "signal_full", "signal_cropped", "n_dphi2_full", "n_dphi2_cropped"]);
    rows.into_iter().for_each(|r| t.push(r));

    let full = signal_full(&dist, &seq)?;
    let crop = signal_cropped(&dist, &seq)?;
    let mut summary = Table::new(&["quantity", "value"]);
    for (k, v) in [
        ("offset_full", full.offset),
        ("offset_cropped", crop.offset),
        ("amplitude", full.amplitude),
        ("eta_full", full.eta),
        ("eta_cropped", crop.eta),
    ] {
        summary.push(vec![k.into(), v.into()]);
    }

    let z = ctx.grid("physics.z_grid", &ctx.p().z_grid)?;
    let pos_seq = seq.with_phi(ctx.p().position_phi.expect("resolved"));
    let d0 = position_distribution(&dist, &pos_seq, 0, &z)?;
    let d1 = position_distribution(&dist, &pos_seq, 1, &z)?;
    let mut pos = Table::new(&["z", "density_exit0", "density_exit1"]);
    for k in 0..z.len() {
        pos.push(vec![z[k].into(), d0.density[k].into(), d1.density[k].into()]);
    }

    let mut out = Outcome::new();
    if full.overlap_warning {
        out.warnings.push("fringe: exit clusters overlap; cross terms between them are neglected".into());
    }
    if seq.range_warning() {
        out.warnings.extend(pert_range_warning(&[eps], "fringe"));
    }
    out.add("fringe", &label, t);
    out.add("fringe-summary", &label, summary);
    out.add("fringe-position", &label, pos);
    Ok(out)
}

/// NΔφ² of the configured input state against ε, perturbative and numeric side by side.
fn sensitivity_sweep(ctx: &Ctx) -> Result<Outcome, AppError> {
    let eps = ctx.grid("physics.eps_grid", &ctx.p().eps_grid)?;
    let n = ctx.n();
    let dist = ctx.dist()?;
    let oat = ctx.oat()?;
    let numeric = ctx.backend(BackendKind::Numeric, ctx.shape())?;
    let rows = eps
        .par_iter()
        .map(|&e| {
            let value = |b: Backend| -> Result<f64, AppError> {
                let s = script_quantities(&dist, &ctx.seq(e, b)?)?;
                n_dphi2(uncertainty_oat(&s, &oat, n))
            };
            let pert = value(Backend::Perturbative)?;
            let num = value(numeric)?;
            let flag = if num.is_nan() {
                "singular"
            } else if num < 1.0 {
                "sub_snl"
            } else {
                "above_snl"
            };
            Ok(vec![Cell::from(e), pert.into(), num.into(), flag.into()])
        })
        .collect::<Result<Vec<_>, AppError>>()?;
    let mut t = Table::new(&["epsilon", "n_dphi2_pert", "n_dphi2_num", "regime_flag"]);
    rows.into_iter().for_each(|r| t.push(r));
    let mut out = Outcome::new();
    out.warnings.extend(pert_range_warning(&eps, "sensitivity-sweep"));
    out.add("sensitivity-sweep", &format!("perturbative | {}", backend_label(&numeric)), t);
    Ok(out)
}

fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Perturbative against numeric single-pulse amplitudes over the pulse area.
fn validate_pert(ctx: &Ctx) -> Result<Outcome, AppError> {
    let eps = ctx.eps();
    let q = ctx.p().q.expect("resolved");
    let taus = ctx.grid("physics.tau_grid", &ctx.p().tau_grid)?;
    if taus.iter().any(|t| *t < 0.0) {
        return Err(AppError::Config("physics.tau_grid: pulse areas must be non-negative".into()));
    }
    let classes = ctx.classes()?;
    if classes.n_min > -1 || classes.n_max < 2 {
        return Err(AppError::Config("physics.classes: validate-pert needs classes -1 and 2".into()));
    }
    let tol = ctx.tol();
    let blocks = taus
        .par_iter()
        .map(|&tau| {
            let pert = pert_transfer(q, &PulseParams::new(eps, tau, 0.0)?);
            let env = EnvelopeSpec::new(Shape::Box, eps, tau)?;
            let u = evolve_columns(q, &env, 0.0, classes, &[0, 1], tol)?;
            let g = u.main_block(env.duration());
            let mut rows = Vec::new();
            for input in 0..2usize {
                for out in 0..2usize {
                    let (a, b) = (pert.g[out][input], g[out][input]);
                    let ph = if a.norm() > 0.0 && b.norm() > 0.0 { wrap_phase(a.arg() - b.arg()) } else { f64::NAN };
                    rows.push(vec![
                        Cell::from(tau),
                        (out as i32).into(),
                        (input as i32).into(),
                        a.norm().into(),
                        b.norm().into(),
                        (a.norm() - b.norm()).into(),
                        a.arg().into(),
                        b.arg().into(),
                        ph.into(),
                    ]);
                }
            }
            let adj = pert.adjacent;
            for (class, input, m) in [(-1, 0, adj.g_m10), (-1, 1, adj.g_m11), (2, 0, adj.g20), (2, 1, adj.g21)] {
                let num = u.get(class, input).norm();
                rows.push(vec![
                    Cell::from(tau),
                    class.into(),
                    input.into(),
                    m.into(),
                    num.into(),
                    (m - num).into(),
                    f64::NAN.into(),
                    u.get(class, input).arg().into(),
                    f64::NAN.into(),
                ]);
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>, AppError>>()?;
    let mut t = Table::new(&[
        "tau",
        "class",
        "input",
        "modulus_pert",
        "modulus_num",
        "modulus_residual",
        "phase_pert",
        "phase_num",
        "phase_residual",
    ]);
    blocks.into_iter().flatten().for_each(|r| t.push(r));
    let mut out = Outcome::new();
    out.warnings.extend(pert_range_warning(&[eps], "validate-pert"));
    out.add("validate-pert", &format!("perturbative | {}", backend_label(&Backend::Numeric { shape: Shape::Box, classes, tol })), t);
    Ok(out)
}

/// Mirror reflectivity against momentum for box and Blackman envelopes.
fn pulse_shape(ctx: &Ctx) -> Result<Outcome, AppError> {
    let eps = ctx.eps();
    let tau = ctx.p().tau.expect("resolved");
    let qs = ctx.grid("physics.q_grid", &ctx.p().q_grid)?;
    let classes = ctx.classes()?;
    let tol = ctx.tol();
    let profile = |s: Shape| reflectivity_profile(&EnvelopeSpec::new(s, eps, tau)?, 0.0, &qs, classes, tol);
    let bx = profile(Shape::Box)?;
    let bm = profile(Shape::Blackman)?;
    let mut t = Table::new(&["q", "v", "r_tilde_box", "r_tilde_blackman", "r_box", "r_blackman"]);
    for (a, b) in bx.iter().zip(&bm) {
        t.push(vec![a.q.into(), a.v.into(), a.r_tilde.into(), b.r_tilde.into(), a.r.into(), b.r.into()]);
    }
    let v: Vec<f64> = bx.iter().map(|r| r.v).collect();
    let mut summary = Table::new(&["shape", "fwhm_v"]);
    for (name, rows) in [("box", &bx), ("blackman", &bm)] {
        let y: Vec<f64> = rows.iter().map(|r| r.r_tilde).collect();
        summary.push(vec![name.into(), fwhm(&v, &y).unwrap_or(f64::NAN).into()]);
    }
    let mut out = Outcome::new();
    if summary.rows.iter().any(|r| r[1] == Cell::Num(f64::NAN)) {
        out.warnings.push("pulse-shape: reflectivity peak not bracketed by the momentum grid".into());
    }
    let label = format!("numeric(box, blackman, classes {}..={})", classes.n_min, classes.n_max);
    out.add("pulse-shape", &label, t);
    out.add("pulse-shape-summary", &label, summary);
    Ok(out)
}

/// Inclination and twisting optimization against ε.
fn optimize(ctx: &Ctx) -> Result<Outcome, AppError> {
    let eps = ctx.grid("physics.eps_grid", &ctx.p().eps_grid)?;
    let n = ctx.n();
    let dist = ctx.dist()?;
    let chi0 = ctx.chi()?;
    let backend = ctx.configured_backend()?;
    let rows = eps
        .par_iter()
        .map(|&e| {
            let s = script_quantities(&dist, &ctx.seq(e, backend)?)?;
            let eq = n_dphi2(uncertainty_oat(&s, &OatParams::equator(chi0, n), n))?;
            let incl = optimize_inclination_with(&s, n, chi0)?;
            let twist = optimize_twisting_with(&s, n, chi0)?;
            Ok(vec![
                Cell::from(e),
                eq.into(),
                incl.value.into(),
                incl.param.into(),
                twist.value.into(),
                twist.param.into(),
                (incl.converged && twist.converged).into(),
                (incl.degraded || twist.degraded).into(),
            ])
        })
        .collect::<Result<Vec<_>, AppError>>()?;
    let mut t = Table::new(&[
        "epsilon",
        "n_dphi2_equator",
        "n_dphi2_inclination",
        "vartheta_opt",
        "n_dphi2_twisting",
        "chi_opt",
        "converged",
        "degraded",
    ]);
    let mut out = Outcome::new();
    for (e, r) in eps.iter().zip(rows) {
        if r[7] == Cell::Bool(true) {
            out.warnings.push(format!("optimize: several local minima at eps = {e}"));
        }
        t.push(r);
    }
    if matches!(backend, Backend::Perturbative) {
        out.warnings.extend(pert_range_warning(&eps, "optimize"));
    }
    out.add("optimize", &backend_label(&backend), t);
    Ok(out)
}
