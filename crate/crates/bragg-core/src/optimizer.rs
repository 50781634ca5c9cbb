//! One-dimensional optimization of the OAT input state for a given
//! interferometer: inclination at fixed twisting, or twisting at fixed rotation.

use argmin::core::{CostFunction, Executor, State, TerminationReason};
use argmin::solver::brent::BrentOpt;

use crate::mzi_core::{script_quantities, ScriptQuantities, SequenceParams};
use crate::sensitivity::uncertainty_oat;
use crate::spin_states::{optimal_twisting, OatParams};
use crate::units_grid::MomentumDistribution;
use crate::{Error, Result};

/// Inclination search interval in rad.
pub const INCLINATION_BRACKET: (f64, f64) = (-0.2, 0.2);

/// Points of the dense pre-scan.
pub const SCAN_POINTS: usize = 201;

/// Relative value spread treated as a plateau.
pub const VALUE_TOL: f64 = 1e-12;

const PARAM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptResult {
    /// ϑ* in rad or χ*.
    pub param: f64,
    /// NΔφ² at the optimum.
    pub value: f64,
    /// Objective evaluations including the scan.
    pub evaluations: u64,
    pub bracket: (f64, f64),
    pub converged: bool,
    /// The scan found more than one local minimum.
    pub degraded: bool,
}

struct Objective<'a> {
    f: &'a dyn Fn(f64) -> Result<f64>,
}

impl CostFunction for Objective<'_> {
    type Param = f64;
    type Output = f64;
    fn cost(&self, x: &f64) -> std::result::Result<f64, argmin::core::Error> {
        (self.f)(*x).map_err(|e| argmin::core::Error::msg(e.to_string()))
    }
}

/// Dense scan, then Brent refinement between the neighbours of the best
/// scan point. Ties within [`VALUE_TOL`] resolve toward `preferred`.
fn scan_and_refine(f: &dyn Fn(f64) -> Result<f64>, lo: f64, hi: f64, preferred: f64) -> Result<OptResult> {
    let xs: Vec<f64> = (0..SCAN_POINTS).map(|k| lo + (hi - lo) * k as f64 / (SCAN_POINTS - 1) as f64).collect();
    let ys = xs.iter().map(|&x| f(x)).collect::<Result<Vec<f64>>>()?;
    if let Some(k) = ys.iter().position(|y| !y.is_finite()) {
        return Err(Error::Optimizer(format!("objective not finite at {}", xs[k])));
    }
    let best = (0..ys.len()).min_by(|&a, &b| ys[a].total_cmp(&ys[b])).expect("non-empty scan");
    let local_minima = (0..ys.len())
        .filter(|&k| (k == 0 || ys[k] < ys[k - 1]) && (k + 1 == ys.len() || ys[k] <= ys[k + 1]))
        .count();
    let (a, b) = (xs[best.saturating_sub(1)], xs[(best + 1).min(xs.len() - 1)]);
    let obj = Objective { f };
    let solver = BrentOpt::new(a, b).set_tolerance(f64::EPSILON.sqrt(), PARAM_TOL);
    let res = Executor::new(obj, solver)
        .configure(|s| s.max_iters(200))
        .run()
        .map_err(|e| Error::Optimizer(e.to_string()))?;
    let state = res.state();
    let converged = matches!(state.get_termination_reason(), Some(TerminationReason::SolverConverged));
    let evaluations = SCAN_POINTS as u64 + state.get_iter() + 1;
    let (mut param, mut value) = match state.best_param {
        Some(x) if state.best_cost <= ys[best] => (x, state.best_cost),
        _ => (xs[best], ys[best]),
    };
    if (lo..=hi).contains(&preferred) {
        let v = f(preferred)?;
        if v <= value * (1.0 + VALUE_TOL) {
            param = preferred;
            value = v.min(value);
        }
    }
    Ok(OptResult { param, value, evaluations, bracket: (lo, hi), converged, degraded: local_minima > 1 })
}

/// Minimizes NΔφ² over the inclination ϑ at fixed twisting χ.
pub fn optimize_inclination_with(scripts: &ScriptQuantities, n: u64, chi: f64) -> Result<OptResult> {
    let f = |t: f64| Ok(uncertainty_oat(scripts, &OatParams::with_inclination(chi, t, n), n)?.n_dphi2);
    scan_and_refine(&f, INCLINATION_BRACKET.0, INCLINATION_BRACKET.1, 0.0)
}

/// Minimizes NΔφ² over χ ∈ (0, 4χ₀] with the rotation fixed at α = -α₀(χ₀).
pub fn optimize_twisting_with(scripts: &ScriptQuantities, n: u64, chi0: f64) -> Result<OptResult> {
    let alpha = OatParams::equator(chi0, n).alpha;
    let f = |chi: f64| Ok(uncertainty_oat(scripts, &OatParams { chi, alpha }, n)?.n_dphi2);
    let hi = 4.0 * chi0;
    scan_and_refine(&f, hi / (SCAN_POINTS - 1) as f64, hi, chi0)
}

/// Inclination optimization at χ₀(N).
pub fn optimize_inclination(dist: &MomentumDistribution, seq: &SequenceParams, n: u64) -> Result<OptResult> {
    let scripts = script_quantities(dist, seq)?;
    optimize_inclination_with(&scripts, n, optimal_twisting(n)?)
}

/// Twisting optimization with the rotation that levels the χ₀ state.
pub fn optimize_twisting(dist: &MomentumDistribution, seq: &SequenceParams, n: u64) -> Result<OptResult> {
    let scripts = script_quantities(dist, seq)?;
    optimize_twisting_with(&scripts, n, optimal_twisting(n)?)
}
