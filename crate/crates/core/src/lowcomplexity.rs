//! Low-complexity two-stage designs and no-IRS baselines.
//!
//! Stage one picks the reflection vector from a single link criterion:
//! coherent phase alignment to maximize a desired link's gain, or
//! interference minimization. Interference minimization is closed-form when
//! the direct path dominates the total reflect path; otherwise it lifts the
//! problem to a unit-diagonal PSD matrix, solves the relaxation with a
//! first-order splitting method, recovers a unit-modulus vector (principal
//! eigenvector or Gaussian randomization) and polishes it by cyclic
//! per-element phase updates. Stage two reuses the closed-form power
//! control.

use crate::ao::{meets_pu_constraint, optimal_power, SolveResult};
use crate::channel::ChannelSet;
use crate::numerics::{outer_product, C64, CVector, HermitianMatrix};
use crate::system::{
    equivalent_gain, sinr_primary, sinr_secondary, su_rate, LiftedChannels, ReflectionVector,
    SystemParams,
};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::FRAC_1_SQRT_2;
use thiserror::Error;

/// The selectable designs. The four IRS variants shape one equivalent link
/// each; the two baselines ignore the IRS and differ in whether the SR
/// cancels the decoded PU signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DesignKind {
    MaxAlphaPP,
    MaxAlphaSS,
    MinAlphaSP,
    MinAlphaPS,
    NoIrsWithSic,
    NoIrsWithoutSic,
}

impl DesignKind {
    pub fn uses_irs(self) -> bool {
        !matches!(self, DesignKind::NoIrsWithSic | DesignKind::NoIrsWithoutSic)
    }
}

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("splitting method did not reach residual tolerance within {0} iterations")]
    IterationCap(usize),
}

/// First-order SDP solver knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    /// Residual threshold; the stopping test scales it by the matrix
    /// dimension.
    pub residual_tol: f64,
    pub max_iterations: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-7,
            max_iterations: 50_000,
        }
    }
}

/// Stage-one knobs for the interference-minimizing designs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowComplexityOptions {
    pub randomization_count: usize,
    pub sdp: SdpOptions,
}

impl Default for LowComplexityOptions {
    fn default() -> Self {
        Self {
            randomization_count: 1000,
            sdp: SdpOptions::default(),
        }
    }
}

/// Unit-diagonal PSD matrix variable of the relaxation, plus the iteration
/// count that produced it.
#[derive(Debug, Clone)]
pub struct PsdMatrixVariable {
    pub matrix: HermitianMatrix,
    pub iterations: usize,
}

/// Re{Tr(H·V)} for Hermitian arguments.
pub fn trace_product(h: &HermitianMatrix, v: &HermitianMatrix) -> f64 {
    assert_eq!(h.dim(), v.dim(), "trace product dimension mismatch");
    let n = h.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (h.entry(i, j) * v.entry(j, i)).re;
        }
    }
    acc
}

/// Coherent phase alignment: pick v so every reflected term adds in phase
/// with the direct channel, yielding gain (Σ|h_c(n)| + |h_d|)². A zero
/// direct channel falls back to reference phase 0.
pub fn signal_max_phases(h_cascaded: &CVector, h_direct: C64) -> ReflectionVector {
    let d_phase = if h_direct.norm() > 0.0 {
        h_direct / h_direct.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    ReflectionVector::from_coefficients(CVector::from_fn(h_cascaded.len(), |n| {
        let c = h_cascaded[n];
        let mag = c.norm();
        if mag > 0.0 {
            // e^{j(∠h_c(n) − ∠h_d)}
            (c / mag) * d_phase.conj()
        } else {
            C64::new(1.0, 0.0)
        }
    }))
}

fn case1_cancel_phases(h_cascaded: &CVector, h_direct: C64) -> CVector {
    let d_phase = if h_direct.norm() > 0.0 {
        h_direct / h_direct.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    CVector::from_fn(h_cascaded.len(), |n| {
        let c = h_cascaded[n];
        let mag = c.norm();
        if mag > 0.0 {
            // e^{j(π + ∠h_c(n) − ∠h_d)}
            -(c / mag) * d_phase.conj()
        } else {
            C64::new(1.0, 0.0)
        }
    })
}

/// Residual amplitude h_d + Σ conj(v_n)·h_c(n) of a candidate.
fn residual(v: &CVector, h_cascaded: &CVector, h_direct: C64) -> C64 {
    let mut acc = h_direct;
    for n in 0..v.len() {
        acc += v[n].conj() * h_cascaded[n];
    }
    acc
}

/// Cyclic per-element phase updates minimizing the residual magnitude. Each
/// update is the exact single-coordinate optimum, so the residual is
/// nonincreasing; stops when a full sweep no longer improves it.
fn polish_cancellation(v: &mut CVector, h_cascaded: &CVector, h_direct: C64) {
    const MAX_SWEEPS: usize = 500;
    let mut total = residual(v, h_cascaded, h_direct);
    for _ in 0..MAX_SWEEPS {
        let before = total.norm();
        for n in 0..v.len() {
            let mag = h_cascaded[n].norm();
            if mag == 0.0 {
                continue;
            }
            let rest = total - v[n].conj() * h_cascaded[n];
            let rest_mag = rest.norm();
            if rest_mag == 0.0 {
                // any phase leaves |residual| = |h_c(n)|; keep the current one
                total = v[n].conj() * h_cascaded[n];
                continue;
            }
            // point the term opposite the rest of the sum
            let conj_v = -(rest / rest_mag) * (h_cascaded[n].conj() / mag);
            v[n] = conj_v.conj();
            total = rest * (1.0 - mag / rest_mag);
        }
        let after = total.norm();
        if after >= before - 1e-15 * before.max(1e-300) {
            break;
        }
    }
}

/// Interference-minimizing reflection design.
#[derive(Debug, Clone)]
pub struct InterferenceMinOutcome {
    pub v: ReflectionVector,
    /// True when the reflect path could overpower the direct path and the
    /// relaxation route ran.
    pub case2: bool,
    /// True when the SDP solver failed and the closed-form phases were used
    /// as the starting point instead.
    pub sdr_fallback: bool,
    pub sdp_iterations: usize,
}

/// Minimize |vᴴh_c + h_d|². When Σ|h_c(n)| ≤ |h_d| the anti-phase
/// alignment is exactly optimal with residual (|h_d| − Σ|h_c(n)|)².
/// Otherwise solve the unit-diagonal PSD relaxation of the lifted problem,
/// recover a unit-modulus candidate and polish it; the closed-form
/// anti-phase vector is always polished alongside so the returned residual
/// never exceeds the closed-form value.
pub fn interference_min(
    h_cascaded: &CVector,
    h_direct: C64,
    randomization_count: usize,
    rng: &mut impl Rng,
    opts: &SdpOptions,
) -> InterferenceMinOutcome {
    let reflect_sum = h_cascaded.abs_sum();
    if reflect_sum <= h_direct.norm() {
        return InterferenceMinOutcome {
            v: ReflectionVector::from_coefficients(case1_cancel_phases(h_cascaded, h_direct)),
            case2: false,
            sdr_fallback: false,
            sdp_iterations: 0,
        };
    }
    let n = h_cascaded.len();
    let hbar = CVector::from_fn(n + 1, |k| if k < n { h_cascaded[k] } else { h_direct });
    let h = outer_product(&hbar);
    let mut sdr_fallback = false;
    let mut sdp_iterations = 0;
    let mut candidates: Vec<CVector> = Vec::new();
    match sdr_solve(&h, opts) {
        Ok(var) => {
            sdp_iterations = var.iterations;
            let (evals, evecs) = var.matrix.eigh();
            let top = evals[n];
            let second = evals[n.saturating_sub(1)];
            let lifted = if top > 0.0 && second / top < 1e-6 {
                evecs[n].clone()
            } else {
                gaussian_randomize(&var.matrix, &h, randomization_count, rng)
            };
            candidates.push(
                ReflectionVector::from_lifted(&lifted)
                    .coefficients()
                    .clone(),
            );
        }
        Err(SdpError::IterationCap(_)) => {
            sdr_fallback = true;
        }
    }
    candidates.push(case1_cancel_phases(h_cascaded, h_direct));
    let mut best: Option<(f64, CVector)> = None;
    for mut cand in candidates {
        polish_cancellation(&mut cand, h_cascaded, h_direct);
        let value = residual(&cand, h_cascaded, h_direct).norm_sqr();
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, cand));
        }
    }
    let (_, v) = best.expect("at least one candidate");
    InterferenceMinOutcome {
        v: ReflectionVector::from_coefficients(v),
        case2: true,
        sdr_fallback,
        sdp_iterations,
    }
}

/// Minimize Tr(H·V) over Hermitian V with unit diagonal and V ⪰ 0, by
/// alternating a diagonal-constrained affine step with a PSD projection
/// (full eigendecomposition) and a scaled dual update. The returned matrix
/// has an exactly unit diagonal and is PSD to working precision.
pub fn sdr_solve(h: &HermitianMatrix, opts: &SdpOptions) -> Result<PsdMatrixVariable, SdpError> {
    let n = h.dim();
    if n == 1 {
        return Ok(PsdMatrixVariable {
            matrix: HermitianMatrix::identity(1),
            iterations: 0,
        });
    }
    let scale = h.frobenius_norm();
    let hn = if scale > 0.0 {
        h.scale(1.0 / scale)
    } else {
        h.clone()
    };
    let eps = opts.residual_tol * n as f64;
    let mut z = HermitianMatrix::identity(n);
    let mut u = HermitianMatrix::zeros(n);
    let mut rho = 1.0_f64;
    for it in 1..=opts.max_iterations {
        // affine step: argmin Tr(Hn X) + ρ/2‖X − Z + U‖² with diag(X) = 1
        let mut x = z.clone();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    x.set_entry(i, i, C64::new(1.0, 0.0));
                } else {
                    let value = z.entry(i, j) - u.entry(i, j) - hn.entry(i, j) / rho;
                    x.set_entry(i, j, value);
                }
            }
        }
        // PSD projection of X + U
        let m = x.add(&u);
        let z_next = psd_project(&m);
        let mut primal = 0.0_f64;
        let mut dual = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let r = x.entry(i, j) - z_next.entry(i, j);
                primal += r.norm_sqr();
                let s = z_next.entry(i, j) - z.entry(i, j);
                dual += s.norm_sqr();
                u.set_entry(i, j, u.entry(i, j) + r);
            }
        }
        let primal = primal.sqrt();
        let dual = rho * dual.sqrt();
        z = z_next;
        if primal <= eps && dual <= eps {
            return Ok(PsdMatrixVariable {
                matrix: unit_diagonal_rescale(&z),
                iterations: it,
            });
        }
        if it % 25 == 0 {
            if primal > 10.0 * dual && rho < 1e4 {
                rho *= 2.0;
                u = u.scale(0.5);
            } else if dual > 10.0 * primal && rho > 1e-4 {
                rho *= 0.5;
                u = u.scale(2.0);
            }
        }
    }
    Err(SdpError::IterationCap(opts.max_iterations))
}

fn psd_project(m: &HermitianMatrix) -> HermitianMatrix {
    let n = m.dim();
    let (evals, evecs) = m.eigh();
    let mut out = HermitianMatrix::zeros(n);
    for (lam, vec) in evals.iter().zip(evecs.iter()) {
        if *lam <= 0.0 {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                let add = vec[i] * vec[j].conj() * *lam;
                out.set_entry(i, j, out.entry(i, j) + add);
            }
        }
    }
    out
}

/// Congruence rescale to an exactly unit diagonal; preserves positive
/// semidefiniteness.
fn unit_diagonal_rescale(m: &HermitianMatrix) -> HermitianMatrix {
    let n = m.dim();
    let mut out = HermitianMatrix::zeros(n);
    let diag: Vec<f64> = (0..n).map(|i| m.entry(i, i).re).collect();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                out.set_entry(i, i, C64::new(1.0, 0.0));
            } else if diag[i] > 1e-12 && diag[j] > 1e-12 {
                out.set_entry(i, j, m.entry(i, j) / (diag[i] * diag[j]).sqrt());
            }
        }
    }
    out
}

fn unit_modulus_projection(z: &CVector) -> CVector {
    CVector::from_fn(z.len(), |n| {
        let mag = z[n].norm();
        if mag > 0.0 {
            z[n] / mag
        } else {
            C64::new(1.0, 0.0)
        }
    })
}

/// Draw `count` complex Gaussian vectors with covariance V, project each to
/// unit modulus and return the one minimizing uᴴHu. The principal
/// eigenvector's projection is always injected as a candidate, so a rank-1
/// V reproduces its eigenvector extraction deterministically.
pub fn gaussian_randomize(
    v: &HermitianMatrix,
    h: &HermitianMatrix,
    count: usize,
    rng: &mut impl Rng,
) -> CVector {
    let n = v.dim();
    assert_eq!(h.dim(), n, "randomization dimension mismatch");
    let (evals, evecs) = v.eigh();
    let principal = unit_modulus_projection(&evecs[n - 1]);
    let score = |u: &CVector| crate::numerics::quadratic_form(h, u);
    let mut best = principal.clone();
    let mut best_score = score(&best);
    let factors: Vec<(f64, &CVector)> = evals
        .iter()
        .zip(evecs.iter())
        .filter(|(lam, _)| **lam > 1e-14)
        .map(|(lam, vec)| (lam.sqrt(), vec))
        .collect();
    for _ in 0..count {
        let mut draw = CVector::zeros(n);
        for (sd, vec) in &factors {
            let g: f64 = rng.sample(StandardNormal);
            let gi: f64 = rng.sample(StandardNormal);
            let coeff = C64::new(g * FRAC_1_SQRT_2, gi * FRAC_1_SQRT_2) * *sd;
            draw = draw.add(&vec.scaled(coeff));
        }
        let candidate = unit_modulus_projection(&draw);
        let s = score(&candidate);
        if s < best_score {
            best_score = s;
            best = candidate;
        }
    }
    best
}

/// Two-stage design: stage one fixes v by the selected criterion, stage two
/// applies the closed-form power control to the resulting equivalent gains.
pub fn solve_two_stage(
    kind: DesignKind,
    ch: &ChannelSet,
    params: &SystemParams,
    opts: &LowComplexityOptions,
    rng: &mut impl Rng,
) -> SolveResult {
    assert!(kind.uses_irs(), "two-stage designs require an IRS design kind");
    let lifted = LiftedChannels::from_channel_set(ch);
    let n = params.n_elements;
    let split = |hbar: &CVector| -> (CVector, C64) {
        (CVector::from_fn(n, |k| hbar[k]), hbar[n])
    };
    let mut sdp_iterations = 0;
    let v = match kind {
        DesignKind::MaxAlphaPP => {
            let (cascade, direct) = split(&lifted.hbar_pp);
            signal_max_phases(&cascade, direct)
        }
        DesignKind::MaxAlphaSS => {
            let (cascade, direct) = split(&lifted.hbar_ss);
            signal_max_phases(&cascade, direct)
        }
        DesignKind::MinAlphaSP => {
            let (cascade, direct) = split(&lifted.hbar_sp);
            let out =
                interference_min(&cascade, direct, opts.randomization_count, rng, &opts.sdp);
            sdp_iterations = out.sdp_iterations;
            out.v
        }
        DesignKind::MinAlphaPS => {
            let (cascade, direct) = split(&lifted.hbar_ps);
            let out =
                interference_min(&cascade, direct, opts.randomization_count, rng, &opts.sdp);
            sdp_iterations = out.sdp_iterations;
            out.v
        }
        DesignKind::NoIrsWithSic | DesignKind::NoIrsWithoutSic => unreachable!(),
    };
    let vt = v.lifted();
    let alpha_pp = equivalent_gain(&vt, &lifted.hbar_pp);
    let alpha_sp = equivalent_gain(&vt, &lifted.hbar_sp);
    let p_s = optimal_power(alpha_pp, alpha_sp, params);
    let gamma_p = sinr_primary(&v, p_s, &lifted, params);
    let gamma_s = sinr_secondary(&v, p_s, &lifted, params);
    let feasible = meets_pu_constraint(gamma_p, params.gamma_th);
    let rate = su_rate(gamma_s);
    SolveResult {
        p_s,
        v: Some(v),
        gamma_p,
        gamma_s,
        rate,
        outer_iterations: 1,
        inner_iterations: sdp_iterations,
        feasible,
        objective_trace: vec![rate],
    }
}

/// No-IRS baseline: power control on the direct gains alone. With SIC the
/// SR first decodes the PU signal (treating its own as noise) whenever that
/// link supports the PU's target SINR, then removes it.
pub fn solve_no_irs(with_sic: bool, ch: &ChannelSet, params: &SystemParams) -> SolveResult {
    let alpha_pp = ch.h_pp.norm_sqr();
    let alpha_sp = ch.h_sp.norm_sqr();
    let alpha_ps = ch.h_ps.norm_sqr();
    let alpha_ss = ch.h_ss.norm_sqr();
    let p_s = optimal_power(alpha_pp, alpha_sp, params);
    let gamma_p = params.p_p * alpha_pp / (p_s * alpha_sp + params.sigma2_p);
    let gamma_s_direct = p_s * alpha_ss / (params.p_p * alpha_ps + params.sigma2_s);
    let gamma_s = if with_sic {
        let decode_sinr = params.p_p * alpha_ps / (p_s * alpha_ss + params.sigma2_s);
        if decode_sinr >= params.gamma_th {
            p_s * alpha_ss / params.sigma2_s
        } else {
            gamma_s_direct
        }
    } else {
        gamma_s_direct
    };
    let feasible = meets_pu_constraint(gamma_p, params.gamma_th);
    let rate = su_rate(gamma_s);
    SolveResult {
        p_s,
        v: None,
        gamma_p,
        gamma_s,
        rate,
        outer_iterations: 1,
        inner_iterations: 0,
        feasible,
        objective_trace: vec![rate],
    }
}

/// Dispatch a design tag to its solver.
pub fn solve_design(
    kind: DesignKind,
    ch: &ChannelSet,
    params: &SystemParams,
    opts: &LowComplexityOptions,
    rng: &mut impl Rng,
) -> SolveResult {
    match kind {
        DesignKind::NoIrsWithSic => solve_no_irs(true, ch, params),
        DesignKind::NoIrsWithoutSic => solve_no_irs(false, ch, params),
        _ => solve_two_stage(kind, ch, params, opts, rng),
    }
}
