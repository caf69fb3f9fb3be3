//! Alternating optimization of ST transmit power and IRS reflection.
//!
//! One outer round updates the power in closed form from the current
//! equivalent gains, then improves the lifted reflection vector by
//! successive convex approximation: each fractional quadratic form is
//! minorized by an affine bound built from its largest-eigenvalue shift
//! (`sca_bound`), and the resulting subproblem has the closed-form
//! phase-alignment solution of `solve_p23`, with the dual variable of the
//! PU constraint found by bisection. Every accepted iterate keeps the PU
//! constraint satisfied, so the SU-rate trace is nondecreasing.

use crate::numerics::{max_eigenvalue, quadratic_form, C64, CVector, HermitianMatrix, NumericsError};
use crate::stream;
use crate::system::{
    build_ab, equivalent_gain, sinr_primary_lifted, sinr_secondary_lifted, su_rate, AbMatrices,
    LiftedChannels, ReflectionVector, SystemParams,
};
use crate::channel::ChannelSet;
use rand::Rng;
use std::f64::consts::TAU;

/// Solver tolerances and iteration caps. Defaults give stable traces at
/// desk scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoOptions {
    /// Relative change of the SU rate that stops the outer alternation.
    pub outer_tol: f64,
    /// Relative change of the beamforming objective that stops the inner
    /// SCA loop.
    pub inner_tol: f64,
    /// Relative tolerance on |γ_p(λ) − γ_th| in the bisection.
    pub bisection_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for AoOptions {
    fn default() -> Self {
        Self {
            outer_tol: 1e-4,
            inner_tol: 1e-5,
            bisection_tol: 1e-8,
            max_outer: 50,
            max_inner: 100,
        }
    }
}

/// Initial phase-shift vector for the alternation.
#[derive(Debug, Clone)]
pub enum AoInit {
    /// Uniform-random phases from a derived stream.
    Seed(u64),
    /// All-zero phases.
    Zeros,
    /// Explicit starting phases, one per element.
    Phases(Vec<f64>),
}

/// Outcome of one solve: the optimized pair, achieved SINRs, iteration
/// counts and the per-outer-round objective trace.
#[derive(Debug, Clone)]
pub struct SolveResult {
    /// ST transmit power, watts.
    pub p_s: f64,
    /// Optimized reflection coefficients; `None` for no-IRS baselines.
    pub v: Option<ReflectionVector>,
    pub gamma_p: f64,
    pub gamma_s: f64,
    /// SU rate log2(1+γ_s), bps/Hz.
    pub rate: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// True when the PU SINR floor is met within 1e-6 relative.
    pub feasible: bool,
    /// SU rate after each outer round; nondecreasing within numerics.
    pub objective_trace: Vec<f64>,
}

/// Feasibility slack accepted on the PU constraint when declaring a result
/// feasible.
pub const FEASIBILITY_SLACK: f64 = 1e-6;

pub(crate) fn meets_pu_constraint(gamma_p: f64, gamma_th: f64) -> bool {
    gamma_p >= gamma_th * (1.0 - FEASIBILITY_SLACK)
}

/// Closed-form optimal ST power for fixed reflection:
/// max(0, min((P0·α_pp/γ_th − σ_p²)/α_sp, P_max)). With no interference
/// path (α_sp = 0) the budget binds whenever the PU constraint is
/// satisfiable at all.
pub fn optimal_power(alpha_pp: f64, alpha_sp: f64, params: &SystemParams) -> f64 {
    assert!(alpha_pp >= 0.0 && alpha_sp >= 0.0, "gains must be nonnegative");
    let headroom = params.p_p * alpha_pp / params.gamma_th - params.sigma2_p;
    if alpha_sp == 0.0 {
        if headroom >= 0.0 {
            params.p_max
        } else {
            0.0
        }
    } else {
        (headroom / alpha_sp).clamp(0.0, params.p_max)
    }
}

/// Affine minorant of a fractional quadratic form: f(ṽ) ≥ 2Re{wᴴṽ} + d for
/// all unit-modulus ṽ, with equality at the expansion point.
#[derive(Debug, Clone)]
pub struct ScaBound {
    pub w: CVector,
    pub d: f64,
}

/// Value of the minorant at a point.
pub fn bound_value(bound: &ScaBound, vt: &CVector) -> f64 {
    2.0 * bound.w.inner(vt).re + bound.d
}

/// Build the minorant of ṽᴴAṽ/ṽᴴBṽ at unit-modulus `v0`, computing the
/// largest eigenvalue of `B` iteratively.
pub fn sca_bound(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    v0: &CVector,
) -> Result<ScaBound, NumericsError> {
    let lambda = max_eigenvalue(b)?;
    Ok(sca_bound_with_lambda(a, b, lambda, v0))
}

/// Same minorant with the largest eigenvalue of `B` supplied by the caller
/// (the optimizer's B matrices are rank-1 plus identity, so λ is exact in
/// closed form).
pub fn sca_bound_with_lambda(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    lambda_b: f64,
    v0: &CVector,
) -> ScaBound {
    let dim = v0.len() as f64;
    let y0 = quadratic_form(b, v0);
    assert!(y0 > 0.0, "B must be positive definite");
    let q0 = quadratic_form(a, v0);
    let ratio = q0 / (y0 * y0);
    // w = A·v0/y0 − (B − λI)·v0 · q0/y0²
    let av = a.matvec(v0);
    let bv = b.matvec(v0);
    let w = CVector::from_fn(v0.len(), |k| {
        av[k] / y0 - (bv[k] - v0[k] * lambda_b) * ratio
    });
    let d = -(2.0 * lambda_b * dim - y0) * ratio;
    ScaBound { w, d }
}

/// Unit-modulus projection with a fallback entry for exact zeros.
fn phase_or(z: C64, fallback: C64) -> C64 {
    let mag = z.norm();
    if mag > 0.0 {
        z / mag
    } else {
        fallback
    }
}

/// PU-constraint surrogate value at the phase-aligned maximizer for dual
/// variable λ: 2Σ Re{w_pp*(n)·e^{j∠(w_ss(n)+λw_pp(n))}} + d_pp. Entries
/// where w_ss + λw_pp vanishes take the phase of `fallback`.
pub fn gamma_p_of_lambda(
    lambda: f64,
    w_ss: &CVector,
    w_pp: &CVector,
    d_pp: f64,
    fallback: &CVector,
) -> f64 {
    assert!(lambda >= 0.0, "dual variable must be nonnegative");
    assert_eq!(w_ss.len(), w_pp.len());
    assert_eq!(w_ss.len(), fallback.len());
    let mut acc = d_pp;
    for n in 0..w_ss.len() {
        let u = phase_or(w_ss[n] + w_pp[n] * lambda, fallback[n]);
        acc += 2.0 * (w_pp[n].conj() * u).re;
    }
    acc
}

/// Limit of [`gamma_p_of_lambda`] as λ → ∞: phases align to w_pp, so the
/// value is 2Σ|w_pp(n)| + d_pp.
pub fn gamma_p_at_infinity(w_pp: &CVector, d_pp: f64) -> f64 {
    2.0 * w_pp.abs_sum() + d_pp
}

fn aligned_vector(w_ss: &CVector, w_pp: &CVector, lambda: f64, fallback: &CVector) -> CVector {
    CVector::from_fn(w_ss.len(), |n| {
        phase_or(w_ss[n] + w_pp[n] * lambda, fallback[n])
    })
}

/// Solution of one approximated beamforming subproblem.
#[derive(Debug, Clone)]
pub enum P23Outcome {
    Feasible(P23Point),
    /// Even full alignment to w_pp cannot reach the SINR floor.
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct P23Point {
    /// Unit-modulus maximizer.
    pub u: CVector,
    /// Dual variable of the PU constraint (0 when the constraint is slack).
    pub lambda: f64,
    /// True when the constraint binds and λ was found by bisection.
    pub case2: bool,
    /// Subproblem objective 2Re{w_ssᴴu} + d_ss.
    pub objective: f64,
}

/// Closed-form solution of the approximated subproblem: if the surrogate
/// constraint already holds at the unconstrained maximizer u_n = e^{j∠w_ss(n)}
/// take it; otherwise bisect the dual variable λ until the constraint is met
/// with equality and take u_n = e^{j∠(w_ss(n)+λw_pp(n))}. Returns
/// `Infeasible` when not even the λ → ∞ alignment reaches the floor.
pub fn solve_p23(
    w_ss: &CVector,
    w_pp: &CVector,
    d_ss: f64,
    d_pp: f64,
    gamma_th: f64,
    v_prev: &CVector,
    bisection_tol: f64,
) -> P23Outcome {
    let tol = bisection_tol * gamma_th.abs().max(1.0);
    let gamma_zero = gamma_p_of_lambda(0.0, w_ss, w_pp, d_pp, v_prev);
    if gamma_zero >= gamma_th {
        let u = aligned_vector(w_ss, w_pp, 0.0, v_prev);
        let objective = 2.0 * w_ss.inner(&u).re + d_ss;
        return P23Outcome::Feasible(P23Point {
            u,
            lambda: 0.0,
            case2: false,
            objective,
        });
    }
    if gamma_p_at_infinity(w_pp, d_pp) < gamma_th {
        return P23Outcome::Infeasible;
    }
    // Bracket: γ_p is nondecreasing in λ, γ_p(0) < γ_th ≤ γ_p(∞).
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut doublings = 0;
    while gamma_p_of_lambda(hi, w_ss, w_pp, d_pp, v_prev) < gamma_th {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            break; // γ_p(∞) barely clears the floor; bisect what we have
        }
    }
    let mut lambda = hi;
    for _ in 0..BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        let value = gamma_p_of_lambda(mid, w_ss, w_pp, d_pp, v_prev);
        if (value - gamma_th).abs() <= tol {
            lambda = mid;
            break;
        }
        if value >= gamma_th {
            hi = mid;
        } else {
            lo = mid;
        }
        lambda = hi; // feasible side if the cap exhausts the bracket
    }
    let u = aligned_vector(w_ss, w_pp, lambda, v_prev);
    let objective = 2.0 * w_ss.inner(&u).re + d_ss;
    P23Outcome::Feasible(P23Point {
        u,
        lambda,
        case2: true,
        objective,
    })
}

const BISECTION_CAP: usize = 200;

/// Result of the inner SCA loop.
#[derive(Debug, Clone)]
pub struct BeamformingResult {
    /// Final lifted reflection vector.
    pub v: CVector,
    pub iterations: usize,
    /// False when the first subproblem was already infeasible and the
    /// initial vector was kept unchanged.
    pub moved: bool,
}

fn fractional_objective(ab: &AbMatrices, vt: &CVector) -> f64 {
    quadratic_form(&ab.a_ss, vt) / quadratic_form(&ab.b_ps, vt)
}

fn pu_fraction(ab: &AbMatrices, vt: &CVector) -> f64 {
    quadratic_form(&ab.a_pp, vt) / quadratic_form(&ab.b_sp, vt)
}

/// Inner loop of the alternation: repeatedly rebuild both minorants at the
/// current iterate and solve the approximated subproblem, until the true
/// fractional objective stalls or the iteration cap is reached. On an
/// infeasible subproblem the previous iterate is kept. Returns the iterate
/// with the best objective among those meeting the PU constraint
/// (each accepted subproblem solution does, by the minorant property).
pub fn optimize_beamforming(
    lifted: &LiftedChannels,
    p_s: f64,
    params: &SystemParams,
    v_init: &CVector,
    opts: &AoOptions,
) -> BeamformingResult {
    assert_eq!(lifted.dim(), v_init.len(), "lifted dimension mismatch");
    let ab = build_ab(lifted, p_s, params);
    let mut vt = v_init.clone();
    let mut f_prev = fractional_objective(&ab, &vt);
    let mut best = vt.clone();
    let mut best_f = if pu_fraction(&ab, &vt) >= params.gamma_th {
        f_prev
    } else {
        f64::NEG_INFINITY
    };
    let mut iterations = 0;
    let mut moved = false;
    for _ in 0..opts.max_inner {
        iterations += 1;
        let bound_ss = sca_bound_with_lambda(&ab.a_ss, &ab.b_ps, ab.lambda_b_ps, &vt);
        let bound_pp = sca_bound_with_lambda(&ab.a_pp, &ab.b_sp, ab.lambda_b_sp, &vt);
        match solve_p23(
            &bound_ss.w,
            &bound_pp.w,
            bound_ss.d,
            bound_pp.d,
            params.gamma_th,
            &vt,
            opts.bisection_tol,
        ) {
            P23Outcome::Infeasible => break,
            P23Outcome::Feasible(point) => {
                vt = point.u;
                moved = true;
            }
        }
        let f = fractional_objective(&ab, &vt);
        if f >= best_f {
            best_f = f;
            best = vt.clone();
        }
        if (f - f_prev).abs() <= opts.inner_tol * f_prev.abs().max(1e-30) {
            break;
        }
        f_prev = f;
    }
    let v = if best_f > f64::NEG_INFINITY { best } else { vt };
    BeamformingResult {
        v,
        iterations,
        moved,
    }
}

fn initial_lifted(n: usize, init: &AoInit) -> CVector {
    let phases: Vec<f64> = match init {
        AoInit::Seed(seed) => {
            let mut rng = stream::rng(&[*seed]);
            (0..n).map(|_| rng.gen::<f64>() * TAU).collect()
        }
        AoInit::Zeros => vec![0.0; n],
        AoInit::Phases(p) => {
            assert_eq!(p.len(), n, "initial phase count must equal N");
            p.clone()
        }
    };
    CVector::from_fn(n + 1, |k| {
        if k < n {
            C64::from_polar(1.0, phases[k])
        } else {
            C64::new(1.0, 0.0)
        }
    })
}

/// Full alternating optimization on one channel realization. Alternates the
/// closed-form power update with the inner SCA beamforming loop until the
/// SU rate stalls, then extracts the reflection coefficients.
pub fn solve_ao(
    ch: &ChannelSet,
    params: &SystemParams,
    init: AoInit,
    opts: &AoOptions,
) -> SolveResult {
    params.validate().expect("system parameters must be valid");
    assert_eq!(
        ch.n_elements(),
        params.n_elements,
        "channel set and params disagree on N"
    );
    let lifted = LiftedChannels::from_channel_set(ch);
    let mut vt = initial_lifted(params.n_elements, &init);
    let mut p_s = 0.0;
    let mut trace = Vec::new();
    let mut total_inner = 0;
    let mut outer_done = 0;
    let mut obj_prev = f64::NEG_INFINITY;
    for outer in 1..=opts.max_outer {
        outer_done = outer;
        let alpha_pp = equivalent_gain(&vt, &lifted.hbar_pp);
        let alpha_sp = equivalent_gain(&vt, &lifted.hbar_sp);
        p_s = optimal_power(alpha_pp, alpha_sp, params);
        let bf = optimize_beamforming(&lifted, p_s, params, &vt, opts);
        vt = bf.v;
        total_inner += bf.iterations;
        let gamma_s = sinr_secondary_lifted(&vt, p_s, &lifted, params);
        let objective = su_rate(gamma_s);
        trace.push(objective);
        if obj_prev.is_finite()
            && (objective - obj_prev).abs() <= opts.outer_tol * obj_prev.abs().max(1e-30)
        {
            break;
        }
        obj_prev = objective;
    }
    let v = ReflectionVector::from_lifted(&vt);
    let gamma_p = sinr_primary_lifted(&vt, p_s, &lifted, params);
    let gamma_s = sinr_secondary_lifted(&vt, p_s, &lifted, params);
    let feasible = meets_pu_constraint(gamma_p, params.gamma_th);
    SolveResult {
        p_s: if feasible { p_s } else { 0.0 },
        v: Some(v),
        gamma_p,
        gamma_s,
        rate: su_rate(gamma_s),
        outer_iterations: outer_done,
        inner_iterations: total_inner,
        feasible,
        objective_trace: trace,
    }
}
