//! SINR and rate evaluation, the lifted channel representation and the
//! quadratic-form matrices behind the beamforming subproblems.
//!
//! Conventions: `xᴴy` always conjugates the left argument. The lifted
//! reflection vector ṽ has N+1 unit-modulus entries; the physical N-entry
//! reflection vector is recovered as v_n = phase(ṽ_n / ṽ_{N+1}), and the
//! equivalent channel amplitude of link (i,j) is ṽᴴh̄_ij with
//! h̄_ij = [h_irj; h_ij]. All arithmetic is in linear watts; dB and dBm
//! appear only at the config boundary.

use crate::channel::{cascaded_channel, ChannelSet};
use crate::numerics::{outer_product, C64, CVector, HermitianMatrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("invalid {field}: {message}")]
    Invalid { field: &'static str, message: String },
}

/// Fixed system-level quantities of one problem instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Fixed PT transmit power P0, watts.
    pub p_p: f64,
    /// ST power budget, watts.
    pub p_max: f64,
    /// Noise power at the PR, watts.
    pub sigma2_p: f64,
    /// Noise power at the SR, watts.
    pub sigma2_s: f64,
    /// PU SINR floor, linear.
    pub gamma_th: f64,
    /// IRS element count N.
    pub n_elements: usize,
}

impl SystemParams {
    pub fn validate(&self) -> Result<(), SystemError> {
        let positive: [(&'static str, f64); 5] = [
            ("p_p", self.p_p),
            ("p_max", self.p_max),
            ("sigma2_p", self.sigma2_p),
            ("sigma2_s", self.sigma2_s),
            ("gamma_th", self.gamma_th),
        ];
        for (field, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(SystemError::Invalid {
                    field,
                    message: format!("{value} must be positive and finite"),
                });
            }
        }
        if self.n_elements < 1 {
            return Err(SystemError::Invalid {
                field: "n_elements",
                message: "must be ≥ 1".into(),
            });
        }
        Ok(())
    }
}

/// Cascades stacked over the direct scalars: h̄_ij = [h_irj; h_ij], each of
/// length N+1 with the direct channel in the last slot.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedChannels {
    pub hbar_pp: CVector,
    pub hbar_ps: CVector,
    pub hbar_sp: CVector,
    pub hbar_ss: CVector,
}

fn lift(cascade: &CVector, direct: C64) -> CVector {
    let n = cascade.len();
    CVector::from_fn(n + 1, |k| if k < n { cascade[k] } else { direct })
}

impl LiftedChannels {
    pub fn from_channel_set(ch: &ChannelSet) -> Self {
        let _ = ch.n_elements(); // asserts vector length consistency
        Self {
            hbar_pp: lift(&cascaded_channel(&ch.h_pr, &ch.h_rp), ch.h_pp),
            hbar_ps: lift(&cascaded_channel(&ch.h_pr, &ch.h_rs), ch.h_ps),
            hbar_sp: lift(&cascaded_channel(&ch.h_sr, &ch.h_rp), ch.h_sp),
            hbar_ss: lift(&cascaded_channel(&ch.h_sr, &ch.h_rs), ch.h_ss),
        }
    }

    /// Lifted dimension N+1.
    pub fn dim(&self) -> usize {
        self.hbar_pp.len()
    }
}

/// N unit-modulus reflection coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionVector {
    v: CVector,
}

impl ReflectionVector {
    pub fn from_phases(phases: &[f64]) -> Self {
        assert!(!phases.is_empty());
        Self {
            v: CVector::from_fn(phases.len(), |n| C64::from_polar(1.0, phases[n])),
        }
    }

    /// Wrap unit-modulus coefficients directly.
    pub fn from_coefficients(v: CVector) -> Self {
        debug_assert!(
            v.iter().all(|z| (z.norm() - 1.0).abs() <= 1e-12),
            "reflection coefficients must have unit modulus"
        );
        Self { v }
    }

    /// Recover v from a lifted vector: v_n = e^{j∠(ṽ_n/ṽ_{N+1})}. Invariant
    /// to the global phase of ṽ.
    pub fn from_lifted(lifted: &CVector) -> Self {
        let n = lifted.len() - 1;
        assert!(n >= 1, "lifted vector must have at least two entries");
        let last = lifted[n];
        assert!(last.norm() > 0.0, "auxiliary coordinate must be nonzero");
        Self {
            v: CVector::from_fn(n, |k| {
                let ratio = lifted[k] / last;
                let mag = ratio.norm();
                if mag > 0.0 {
                    ratio / mag
                } else {
                    C64::new(1.0, 0.0)
                }
            }),
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coefficients(&self) -> &CVector {
        &self.v
    }

    /// Per-element phase shifts in radians.
    pub fn phases(&self) -> Vec<f64> {
        (0..self.v.len()).map(|n| self.v[n].arg()).collect()
    }

    /// Lifted form [v; 1].
    pub fn lifted(&self) -> CVector {
        let n = self.v.len();
        CVector::from_fn(n + 1, |k| {
            if k < n {
                self.v[k]
            } else {
                C64::new(1.0, 0.0)
            }
        })
    }
}

/// Equivalent channel power gain α = |ṽᴴh̄|². Invariant to a global phase
/// rotation of ṽ.
pub fn equivalent_gain(lifted_v: &CVector, hbar: &CVector) -> f64 {
    assert_eq!(lifted_v.len(), hbar.len(), "equivalent gain length mismatch");
    lifted_v.inner(hbar).norm_sqr()
}

/// Achievable SU rate log2(1 + γ_s) in bps/Hz.
pub fn su_rate(gamma_s: f64) -> f64 {
    assert!(gamma_s >= 0.0, "SINR must be nonnegative");
    (1.0 + gamma_s).log2()
}

/// PU SINR: p_p|ṽᴴh̄_pp|² / (p_s|ṽᴴh̄_sp|² + σ_p²).
pub fn sinr_primary(
    v: &ReflectionVector,
    p_s: f64,
    lifted: &LiftedChannels,
    params: &SystemParams,
) -> f64 {
    let vt = v.lifted();
    sinr_primary_lifted(&vt, p_s, lifted, params)
}

pub fn sinr_primary_lifted(
    vt: &CVector,
    p_s: f64,
    lifted: &LiftedChannels,
    params: &SystemParams,
) -> f64 {
    assert!(p_s >= 0.0, "transmit power must be nonnegative");
    let signal = params.p_p * equivalent_gain(vt, &lifted.hbar_pp);
    let interference = p_s * equivalent_gain(vt, &lifted.hbar_sp);
    signal / (interference + params.sigma2_p)
}

/// SU SINR: p_s|ṽᴴh̄_ss|² / (p_p|ṽᴴh̄_ps|² + σ_s²).
pub fn sinr_secondary(
    v: &ReflectionVector,
    p_s: f64,
    lifted: &LiftedChannels,
    params: &SystemParams,
) -> f64 {
    let vt = v.lifted();
    sinr_secondary_lifted(&vt, p_s, lifted, params)
}

pub fn sinr_secondary_lifted(
    vt: &CVector,
    p_s: f64,
    lifted: &LiftedChannels,
    params: &SystemParams,
) -> f64 {
    assert!(p_s >= 0.0, "transmit power must be nonnegative");
    let signal = p_s * equivalent_gain(vt, &lifted.hbar_ss);
    let interference = params.p_p * equivalent_gain(vt, &lifted.hbar_ps);
    signal / (interference + params.sigma2_s)
}

/// The quadratic-form matrices of the beamforming subproblem:
/// A_jj = p_j H_jj and B_ij = p_i H_ij + I σ_j²/(N+1), all (N+1)×(N+1).
#[derive(Debug, Clone)]
pub struct AbMatrices {
    pub a_ss: HermitianMatrix,
    pub a_pp: HermitianMatrix,
    pub b_ps: HermitianMatrix,
    pub b_sp: HermitianMatrix,
    /// Exact largest eigenvalues of the rank-1-plus-identity B matrices.
    pub lambda_b_ps: f64,
    pub lambda_b_sp: f64,
}

pub fn build_ab(lifted: &LiftedChannels, p_s: f64, params: &SystemParams) -> AbMatrices {
    assert!(p_s >= 0.0, "transmit power must be nonnegative");
    let dim = lifted.dim() as f64;
    let a_ss = outer_product(&lifted.hbar_ss).scale(p_s);
    let a_pp = outer_product(&lifted.hbar_pp).scale(params.p_p);
    let b_ps = outer_product(&lifted.hbar_ps)
        .scale(params.p_p)
        .add_scaled_identity(params.sigma2_s / dim);
    let b_sp = outer_product(&lifted.hbar_sp)
        .scale(p_s)
        .add_scaled_identity(params.sigma2_p / dim);
    // λmax of p·hhᴴ + cI is p·‖h‖² + c exactly.
    let lambda_b_ps = params.p_p * lifted.hbar_ps.norm_sqr() + params.sigma2_s / dim;
    let lambda_b_sp = p_s * lifted.hbar_sp.norm_sqr() + params.sigma2_p / dim;
    AbMatrices {
        a_ss,
        a_pp,
        b_ps,
        b_sp,
        lambda_b_ps,
        lambda_b_sp,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{max_eigenvalue, quadratic_form};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn params(n: usize) -> SystemParams {
        SystemParams {
            p_p: 0.1,
            p_max: 1.0,
            sigma2_p: 1e-9,
            sigma2_s: 2e-9,
            gamma_th: 10.0,
            n_elements: n,
        }
    }

    fn random_channels(rng: &mut impl Rng, n: usize) -> ChannelSet {
        let mut z = || c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        let mut vec = |rng: &mut dyn FnMut() -> C64| CVector::from_fn(n, |_| rng());
        ChannelSet {
            h_pp: z(),
            h_ps: z(),
            h_sp: z(),
            h_ss: z(),
            h_pr: vec(&mut z),
            h_sr: vec(&mut z),
            h_rp: vec(&mut z),
            h_rs: vec(&mut z),
        }
    }

    fn random_reflection(rng: &mut impl Rng, n: usize) -> ReflectionVector {
        let phases: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * TAU).collect();
        ReflectionVector::from_phases(&phases)
    }

    fn zero_cascade_channels(n: usize) -> ChannelSet {
        ChannelSet {
            h_pp: c(2.0, 0.0),
            h_ps: c(0.3, 0.1),
            h_sp: c(0.5, -0.2),
            h_ss: c(1.0, 1.0),
            h_pr: CVector::zeros(n),
            h_sr: CVector::zeros(n),
            h_rp: CVector::zeros(n),
            h_rs: CVector::zeros(n),
        }
    }

    #[test]
    fn su_rate_reference_points() {
        assert_eq!(su_rate(0.0), 0.0);
        assert!((su_rate(1.0) - 1.0).abs() < 1e-15);
        assert!((su_rate(3.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn equivalent_gain_basis_vector() {
        let ones = CVector::new(vec![c(1.0, 0.0); 4]);
        let e2 = CVector::from_fn(4, |k| if k == 2 { c(1.0, 0.0) } else { c(0.0, 0.0) });
        assert!((equivalent_gain(&ones, &e2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn equivalent_gain_global_phase_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let vt = CVector::from_fn(5, |_| C64::from_polar(1.0, rng.gen::<f64>() * TAU));
        let hbar = CVector::from_fn(5, |_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let g1 = equivalent_gain(&vt, &hbar);
        let rotated = vt.scaled(C64::from_polar(1.0, 0.7));
        let g2 = equivalent_gain(&rotated, &hbar);
        assert!((g1 - g2).abs() <= 1e-12 * g1.max(1.0));
    }

    #[test]
    fn equivalent_gain_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let vt = CVector::from_fn(6, |_| C64::from_polar(1.0, rng.gen::<f64>() * TAU));
            let hbar =
                CVector::from_fn(6, |_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            let mut acc = c(0.0, 0.0);
            for n in 0..6 {
                acc += vt[n].conj() * hbar[n];
            }
            assert!((equivalent_gain(&vt, &hbar) - acc.norm_sqr()).abs() < 1e-13);
        }
    }

    #[test]
    fn sinr_primary_interference_free_direct_link() {
        let n = 3;
        let ch = zero_cascade_channels(n);
        let lifted = LiftedChannels::from_channel_set(&ch);
        let p = params(n);
        let v = random_reflection(&mut ChaCha8Rng::seed_from_u64(1), n);
        let got = sinr_primary(&v, 0.0, &lifted, &p);
        let expect = p.p_p * ch.h_pp.norm_sqr() / p.sigma2_p;
        assert!((got - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn sinr_matches_from_scratch_signal_model() {
        // Independent evaluation of the received-signal expressions with the
        // diagonal phase matrix Φ (Φ_nn = conj(v_n) in this crate's
        // convention).
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let n = 4;
            let ch = random_channels(&mut rng, n);
            let lifted = LiftedChannels::from_channel_set(&ch);
            let p = params(n);
            let v = random_reflection(&mut rng, n);
            let p_s = rng.gen::<f64>();

            let phi: Vec<C64> = (0..n).map(|k| v.coefficients()[k].conj()).collect();
            let composite = |h_ir: &CVector, h_rj: &CVector, direct: C64| -> C64 {
                let mut acc = direct;
                for k in 0..n {
                    acc += h_rj[k].conj() * phi[k] * h_ir[k].conj();
                }
                acc
            };
            let gp_num = p.p_p * composite(&ch.h_pr, &ch.h_rp, ch.h_pp).norm_sqr();
            let gp_den = p_s * composite(&ch.h_sr, &ch.h_rp, ch.h_sp).norm_sqr() + p.sigma2_p;
            let gs_num = p_s * composite(&ch.h_sr, &ch.h_rs, ch.h_ss).norm_sqr();
            let gs_den = p.p_p * composite(&ch.h_pr, &ch.h_rs, ch.h_ps).norm_sqr() + p.sigma2_s;

            let gp = sinr_primary(&v, p_s, &lifted, &p);
            let gs = sinr_secondary(&v, p_s, &lifted, &p);
            assert!((gp - gp_num / gp_den).abs() <= 1e-10 * gp.max(1e-30));
            assert!((gs - gs_num / gs_den).abs() <= 1e-10 * gs.max(1e-30));
        }
    }

    #[test]
    fn sinr_primary_coherent_sum_closed_form() {
        // Phase-aligned v with zero interference channels: γ_p equals
        // p_p(Σ|h_prp(n)| + |h_pp|)²/σ_p².
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let n = 5;
        let mut ch = random_channels(&mut rng, n);
        ch.h_sr = CVector::zeros(n);
        ch.h_sp = c(0.0, 0.0);
        let lifted = LiftedChannels::from_channel_set(&ch);
        let p = params(n);
        // Align each cascade term with the direct channel.
        let cascade = cascaded_channel(&ch.h_pr, &ch.h_rp);
        let v = ReflectionVector::from_coefficients(CVector::from_fn(n, |k| {
            let align = cascade[k] * ch.h_pp.conj();
            let mag = align.norm();
            if mag > 0.0 {
                align / mag
            } else {
                c(1.0, 0.0)
            }
        }));
        let got = sinr_primary(&v, 0.7, &lifted, &p);
        let coherent = cascade.abs_sum() + ch.h_pp.norm();
        let expect = p.p_p * coherent * coherent / p.sigma2_p;
        assert!((got - expect).abs() <= 1e-10 * expect);
    }

    #[test]
    fn secondary_sinr_limit_without_primary_interference() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let n = 3;
        let mut ch = random_channels(&mut rng, n);
        ch.h_pr = CVector::zeros(n);
        ch.h_ps = c(0.0, 0.0);
        let lifted = LiftedChannels::from_channel_set(&ch);
        let p = params(n);
        let v = random_reflection(&mut rng, n);
        let p_s = 0.4;
        let got = sinr_secondary(&v, p_s, &lifted, &p);
        let expect = p_s * equivalent_gain(&v.lifted(), &lifted.hbar_ss) / p.sigma2_s;
        assert!((got - expect).abs() <= 1e-12 * expect.max(1e-30));
    }

    #[test]
    fn build_ab_zero_channels() {
        let n = 1;
        let ch = ChannelSet {
            h_pp: c(0.0, 0.0),
            h_ps: c(0.0, 0.0),
            h_sp: c(0.0, 0.0),
            h_ss: c(0.0, 0.0),
            h_pr: CVector::zeros(n),
            h_sr: CVector::zeros(n),
            h_rp: CVector::zeros(n),
            h_rs: CVector::zeros(n),
        };
        let lifted = LiftedChannels::from_channel_set(&ch);
        let p = params(n);
        let ab = build_ab(&lifted, 0.5, &p);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(ab.a_ss.entry(i, j), c(0.0, 0.0));
                let expect_ps = if i == j { p.sigma2_s / 2.0 } else { 0.0 };
                assert!((ab.b_ps.entry(i, j) - c(expect_ps, 0.0)).norm() < 1e-18);
            }
        }
    }

    #[test]
    fn matrix_form_ratio_equals_secondary_sinr() {
        // ṽᴴA_ssṽ / ṽᴴB_psṽ must reproduce γ_s for unit-modulus ṽ.
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for &n in &[1usize, 2, 4, 8] {
            for _ in 0..50 {
                let ch = random_channels(&mut rng, n);
                let lifted = LiftedChannels::from_channel_set(&ch);
                let p = params(n);
                let v = random_reflection(&mut rng, n);
                let p_s = rng.gen::<f64>();
                let ab = build_ab(&lifted, p_s, &p);
                let vt = v.lifted();
                let ratio_s =
                    quadratic_form(&ab.a_ss, &vt) / quadratic_form(&ab.b_ps, &vt);
                let gs = sinr_secondary(&v, p_s, &lifted, &p);
                assert!(
                    (ratio_s - gs).abs() <= 1e-10 * gs.max(1e-30),
                    "n={n}: matrix form {ratio_s} vs scalar {gs}"
                );
                let ratio_p =
                    quadratic_form(&ab.a_pp, &vt) / quadratic_form(&ab.b_sp, &vt);
                let gp = sinr_primary(&v, p_s, &lifted, &p);
                assert!((ratio_p - gp).abs() <= 1e-10 * gp.max(1e-30));
            }
        }
    }

    #[test]
    fn b_matrices_are_positive_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 4;
        let ch = random_channels(&mut rng, n);
        let lifted = LiftedChannels::from_channel_set(&ch);
        let p = params(n);
        let ab = build_ab(&lifted, 0.3, &p);
        for _ in 0..50 {
            let x = CVector::from_fn(n + 1, |_| {
                c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            assert!(quadratic_form(&ab.b_ps, &x) > 0.0);
            assert!(quadratic_form(&ab.b_sp, &x) > 0.0);
        }
    }

    #[test]
    fn b_matrix_lambda_floor_and_structured_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let n = 4;
        let ch = random_channels(&mut rng, n);
        let lifted = LiftedChannels::from_channel_set(&ch);
        let p = params(n);
        let ab = build_ab(&lifted, 0.3, &p);
        // identity-shift floor
        assert!(ab.lambda_b_sp >= p.sigma2_p / (n as f64 + 1.0));
        // structured λmax matches the iterative solver
        let got_ps = max_eigenvalue(&ab.b_ps).unwrap();
        assert!((got_ps - ab.lambda_b_ps).abs() <= 1e-9 * ab.lambda_b_ps);
        let got_sp = max_eigenvalue(&ab.b_sp).unwrap();
        assert!((got_sp - ab.lambda_b_sp).abs() <= 1e-9 * ab.lambda_b_sp);
    }

    #[test]
    fn lifted_extraction_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let v = random_reflection(&mut rng, 6);
        let rotated = v.lifted().scaled(C64::from_polar(1.0, 1.234));
        let back = ReflectionVector::from_lifted(&rotated);
        for n in 0..6 {
            assert!((back.coefficients()[n] - v.coefficients()[n]).norm() < 1e-12);
        }
    }

    #[test]
    fn extraction_preserves_sinrs() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let n = 5;
        let ch = random_channels(&mut rng, n);
        let lifted = LiftedChannels::from_channel_set(&ch);
        let p = params(n);
        // arbitrary unit-modulus lifted vector, not normalized to last = 1
        let vt = CVector::from_fn(n + 1, |_| C64::from_polar(1.0, rng.gen::<f64>() * TAU));
        let v = ReflectionVector::from_lifted(&vt);
        let p_s = 0.2;
        let direct_p = sinr_primary_lifted(&vt, p_s, &lifted, &p);
        let extracted_p = sinr_primary(&v, p_s, &lifted, &p);
        assert!((direct_p - extracted_p).abs() <= 1e-10 * direct_p.max(1e-30));
        let direct_s = sinr_secondary_lifted(&vt, p_s, &lifted, &p);
        let extracted_s = sinr_secondary(&v, p_s, &lifted, &p);
        assert!((direct_s - extracted_s).abs() <= 1e-10 * direct_s.max(1e-30));
    }

    #[test]
    fn global_phase_invariance_of_sinrs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 4;
        let ch = random_channels(&mut rng, n);
        let lifted = LiftedChannels::from_channel_set(&ch);
        let p = params(n);
        let vt = CVector::from_fn(n + 1, |_| C64::from_polar(1.0, rng.gen::<f64>() * TAU));
        let rotated = vt.scaled(C64::from_polar(1.0, 2.5));
        let p_s = 0.6;
        let a = sinr_primary_lifted(&vt, p_s, &lifted, &p);
        let b = sinr_primary_lifted(&rotated, p_s, &lifted, &p);
        assert!((a - b).abs() <= 1e-11 * a.max(1e-30));
    }
}
