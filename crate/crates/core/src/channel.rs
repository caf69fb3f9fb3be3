//! Channel realizations: distance-based path loss, Rician small-scale
//! fading, UPA line-of-sight steering vectors, cascaded reflect channels and
//! the full per-trial channel set.
//!
//! All gains are linear baseband amplitudes. dB values appear only in
//! [`FadingSpec::reference_loss_db`], which matches how configs state them.

use crate::numerics::{C64, CVector};
use crate::stream::{self, ids};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid {field}: {message}")]
    Invalid { field: &'static str, message: String },
}

/// Large-scale path loss and Rician fading parameters for one link class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingSpec {
    /// Path loss exponent c in L0·(d/d0)^(-c).
    pub path_loss_exponent: f64,
    /// Rician factor β ≥ 0; +∞ means pure line of sight.
    pub rician_factor: f64,
    /// Path loss at the reference distance, in dB (negative for loss).
    pub reference_loss_db: f64,
    /// Reference distance d0 in meters.
    pub reference_distance_m: f64,
}

impl FadingSpec {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(1.5..=6.0).contains(&self.path_loss_exponent) {
            return Err(ChannelError::Invalid {
                field: "path_loss_exponent",
                message: format!("{} outside [1.5, 6]", self.path_loss_exponent),
            });
        }
        if self.rician_factor < 0.0 || self.rician_factor.is_nan() {
            return Err(ChannelError::Invalid {
                field: "rician_factor",
                message: format!("{} must be ≥ 0 or +inf", self.rician_factor),
            });
        }
        if !(self.reference_distance_m > 0.0) {
            return Err(ChannelError::Invalid {
                field: "reference_distance_m",
                message: format!("{} must be > 0", self.reference_distance_m),
            });
        }
        if !self.reference_loss_db.is_finite() {
            return Err(ChannelError::Invalid {
                field: "reference_loss_db",
                message: "must be finite".into(),
            });
        }
        Ok(())
    }
}

/// Amplitude gain sqrt(L0 · (d/d0)^(-c)) of a link at distance `d`.
pub fn path_loss_amplitude(distance_m: f64, spec: &FadingSpec) -> f64 {
    assert!(distance_m > 0.0, "path loss requires a positive distance");
    let l0 = 10f64.powf(spec.reference_loss_db / 10.0);
    (l0 * (distance_m / spec.reference_distance_m).powf(-spec.path_loss_exponent)).sqrt()
}

fn complex_normal(rng: &mut impl Rng) -> C64 {
    // CN(0,1): two real normals with variance 1/2 each.
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Rician small-scale fading around a unit-magnitude LoS component:
/// per entry, sqrt(β/(1+β))·los + sqrt(1/(1+β))·CN(0,1). β = +∞ returns the
/// LoS vector exactly; β = 0 is pure Rayleigh.
pub fn rician_sample(los: &CVector, rician_factor: f64, rng: &mut impl Rng) -> CVector {
    assert!(
        rician_factor >= 0.0 && !rician_factor.is_nan(),
        "Rician factor must be ≥ 0 or +inf"
    );
    debug_assert!(
        los.iter().all(|z| (z.norm() - 1.0).abs() < 1e-9),
        "LoS entries must have unit magnitude"
    );
    if rician_factor.is_infinite() {
        return los.clone();
    }
    let los_scale = (rician_factor / (1.0 + rician_factor)).sqrt();
    let nlos_scale = (1.0 / (1.0 + rician_factor)).sqrt();
    CVector::from_fn(los.len(), |n| {
        los[n] * los_scale + complex_normal(rng) * nlos_scale
    })
}

/// Uniform planar array of reflecting elements.
#[derive(Debug, Clone, PartialEq)]
pub struct IrsPanel {
    /// Reference position of element (0, 0), meters.
    pub reference: [f64; 3],
    /// Unit outward normal of the panel plane.
    pub normal: [f64; 3],
    pub rows: usize,
    pub cols: usize,
    /// Element spacing Δd in meters (same along rows and columns).
    pub spacing_m: f64,
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

fn normalize3(a: [f64; 3]) -> [f64; 3] {
    let n = norm3(a);
    assert!(n > 0.0, "cannot normalize a zero vector");
    [a[0] / n, a[1] / n, a[2] / n]
}

pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm3(sub3(a, b))
}

impl IrsPanel {
    pub fn element_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Orthonormal in-plane axes: columns step along `t1`, rows along `t2`.
    fn tangent_frame(&self) -> ([f64; 3], [f64; 3]) {
        let n = normalize3(self.normal);
        let mut t1 = cross3(n, [0.0, 0.0, 1.0]);
        if norm3(t1) < 1e-9 {
            t1 = cross3(n, [1.0, 0.0, 0.0]);
        }
        let t1 = normalize3(t1);
        let t2 = normalize3(cross3(n, t1));
        (t1, t2)
    }

    /// Offset of element (row, col) from the reference element, meters.
    pub fn element_offset(&self, row: usize, col: usize) -> [f64; 3] {
        let (t1, t2) = self.tangent_frame();
        let c = col as f64 * self.spacing_m;
        let r = row as f64 * self.spacing_m;
        [
            c * t1[0] + r * t2[0],
            c * t1[1] + r * t2[1],
            c * t1[2] + r * t2[2],
        ]
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(ChannelError::Invalid {
                field: "panel",
                message: "rows and cols must be ≥ 1".into(),
            });
        }
        if !(self.spacing_m > 0.0) {
            return Err(ChannelError::Invalid {
                field: "spacing_m",
                message: format!("{} must be > 0", self.spacing_m),
            });
        }
        if norm3(self.normal) < 1e-9 {
            return Err(ChannelError::Invalid {
                field: "irs_normal",
                message: "must be a nonzero vector".into(),
            });
        }
        Ok(())
    }
}

/// Planar-wavefront steering vector of the panel toward `source`, row-major
/// element order. Every entry has unit magnitude; elements closer to the
/// source lead in phase.
pub fn upa_los_vector(source: [f64; 3], panel: &IrsPanel, wavelength_m: f64) -> CVector {
    assert!(wavelength_m > 0.0, "wavelength must be positive");
    let toward = sub3(source, panel.reference);
    assert!(
        norm3(toward) > 0.0,
        "source must not coincide with the IRS reference"
    );
    let u = normalize3(toward);
    let k = TAU / wavelength_m;
    CVector::from_fn(panel.element_count(), |idx| {
        let row = idx / panel.cols;
        let col = idx % panel.cols;
        let phase = k * dot3(panel.element_offset(row, col), u);
        C64::from_polar(1.0, phase)
    })
}

/// Entrywise cascaded transmitter→IRS→receiver channel:
/// entry n = conj(h_rj(n)) · conj(h_ir(n)).
pub fn cascaded_channel(h_ir: &CVector, h_rj: &CVector) -> CVector {
    assert_eq!(h_ir.len(), h_rj.len(), "cascaded channel length mismatch");
    CVector::from_fn(h_ir.len(), |n| h_rj[n].conj() * h_ir[n].conj())
}

/// One realization of every link in the system. Scalars are the direct
/// node-to-node channels; vectors are the per-element IRS links.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h_pp: C64,
    pub h_ps: C64,
    pub h_sp: C64,
    pub h_ss: C64,
    /// PT → IRS.
    pub h_pr: CVector,
    /// ST → IRS.
    pub h_sr: CVector,
    /// IRS → PR.
    pub h_rp: CVector,
    /// IRS → SR.
    pub h_rs: CVector,
}

impl ChannelSet {
    pub fn n_elements(&self) -> usize {
        let n = self.h_pr.len();
        assert!(
            self.h_sr.len() == n && self.h_rp.len() == n && self.h_rs.len() == n,
            "IRS link vectors must share one length"
        );
        n
    }
}

/// Positions of the four terminal roles for one setup, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolePositions {
    pub pt: [f64; 3],
    pub pr: [f64; 3],
    pub st: [f64; 3],
    pub sr: [f64; 3],
}

/// Everything needed to draw one [`ChannelSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub panel: IrsPanel,
    pub wavelength_m: f64,
    pub positions: RolePositions,
    /// Fading class of the four ground links.
    pub ground: FadingSpec,
    /// Fading class of each terminal's IRS link (near terminals are LoS).
    pub irs_pt: FadingSpec,
    pub irs_pr: FadingSpec,
    pub irs_st: FadingSpec,
    pub irs_sr: FadingSpec,
}

impl ChannelModel {
    fn ground_link(&self, tx: [f64; 3], rx: [f64; 3], key: &[u64]) -> C64 {
        let amp = path_loss_amplitude(distance(tx, rx), &self.ground);
        let los = CVector::new(vec![C64::new(1.0, 0.0)]);
        let g = rician_sample(&los, self.ground.rician_factor, &mut stream::rng(key));
        g[0] * amp
    }

    fn irs_link(&self, node: [f64; 3], spec: &FadingSpec, key: &[u64]) -> CVector {
        let amp = path_loss_amplitude(distance(node, self.panel.reference), spec);
        let los = upa_los_vector(node, &self.panel, self.wavelength_m);
        let g = rician_sample(&los, spec.rician_factor, &mut stream::rng(key));
        g.scaled(C64::new(amp, 0.0))
    }
}

/// Draw every link of one trial. Each link consumes its own derived RNG
/// stream, so the output is a pure function of (model, master_seed, trial).
pub fn generate_channels(model: &ChannelModel, master_seed: u64, trial: u64) -> ChannelSet {
    let p = &model.positions;
    let key = |link: u64| [master_seed, trial, link];
    ChannelSet {
        h_pp: model.ground_link(p.pt, p.pr, &key(ids::LINK_H_PP)),
        h_ps: model.ground_link(p.pt, p.sr, &key(ids::LINK_H_PS)),
        h_sp: model.ground_link(p.st, p.pr, &key(ids::LINK_H_SP)),
        h_ss: model.ground_link(p.st, p.sr, &key(ids::LINK_H_SS)),
        h_pr: model.irs_link(p.pt, &model.irs_pt, &key(ids::LINK_H_PR)),
        h_sr: model.irs_link(p.st, &model.irs_st, &key(ids::LINK_H_SR)),
        h_rp: model.irs_link(p.pr, &model.irs_pr, &key(ids::LINK_H_RP)),
        h_rs: model.irs_link(p.sr, &model.irs_sr, &key(ids::LINK_H_RS)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(exponent: f64, rician: f64, loss_db: f64) -> FadingSpec {
        FadingSpec {
            path_loss_exponent: exponent,
            rician_factor: rician,
            reference_loss_db: loss_db,
            reference_distance_m: 1.0,
        }
    }

    fn test_panel(rows: usize, cols: usize, spacing: f64) -> IrsPanel {
        IrsPanel {
            reference: [0.0, 0.0, 0.0],
            normal: [0.0, 1.0, 0.0],
            rows,
            cols,
            spacing_m: spacing,
        }
    }

    #[test]
    fn path_loss_reference_values() {
        // -30 dB at 1 m: amplitude sqrt(1e-3)
        let s = spec(3.0, 0.0, -30.0);
        assert!((path_loss_amplitude(1.0, &s) - 1e-3f64.sqrt()).abs() < 1e-12);
        // 0 dB at reference distance, any exponent
        let s0 = spec(2.5, 0.0, 0.0);
        assert!((path_loss_amplitude(1.0, &s0) - 1.0).abs() < 1e-15);
        // d=10, L0=-30 dB, c=2 -> sqrt(1e-3 * 1e-2)
        let s2 = spec(2.0, 0.0, -30.0);
        assert!((path_loss_amplitude(10.0, &s2) - 1e-5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    #[should_panic(expected = "positive distance")]
    fn path_loss_rejects_nonpositive_distance() {
        let s = spec(3.0, 0.0, -30.0);
        let _ = path_loss_amplitude(0.0, &s);
    }

    #[test]
    fn rician_infinite_factor_is_pure_los() {
        let los = CVector::new(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = rician_sample(&los, f64::INFINITY, &mut rng);
        assert_eq!(g, los);
    }

    #[test]
    fn rician_rayleigh_mean_power_is_unit() {
        // β = 0: per-entry mean power -> 1 over 1e5 draws within 2%
        let los = CVector::new(vec![C64::new(1.0, 0.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws = 100_000;
        let mean_power: f64 = (0..draws)
            .map(|_| rician_sample(&los, 0.0, &mut rng)[0].norm_sqr())
            .sum::<f64>()
            / draws as f64;
        assert!(
            (mean_power - 1.0).abs() < 0.02,
            "mean power {mean_power} not within 2% of 1"
        );
    }

    #[test]
    fn rician_mean_matches_los_scaling() {
        // β = 3: entry mean -> sqrt(3/4)·los over 1e5 draws within 2%
        let los = CVector::new(vec![C64::new(0.0, 1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 100_000;
        let mut sum = C64::new(0.0, 0.0);
        for _ in 0..draws {
            sum += rician_sample(&los, 3.0, &mut rng)[0];
        }
        let mean = sum / draws as f64;
        let expect = los[0] * (3.0f64 / 4.0).sqrt();
        assert!(
            (mean - expect).norm() < 0.02,
            "mean {mean} vs expected {expect}"
        );
    }

    #[test]
    fn rician_power_normalization_for_finite_factors() {
        let los = CVector::new(vec![C64::new(1.0, 0.0)]);
        for (seed, beta) in [(3u64, 0.5), (4, 1.0), (5, 10.0)] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let draws = 100_000;
            let mean_power: f64 = (0..draws)
                .map(|_| rician_sample(&los, beta, &mut rng)[0].norm_sqr())
                .sum::<f64>()
                / draws as f64;
            assert!(
                (mean_power - 1.0).abs() < 0.02,
                "β={beta}: mean power {mean_power}"
            );
        }
    }

    #[test]
    #[should_panic(expected = "Rician factor")]
    fn rician_rejects_negative_factor() {
        let los = CVector::new(vec![C64::new(1.0, 0.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let _ = rician_sample(&los, -1.0, &mut rng);
    }

    #[test]
    fn upa_broadside_is_all_ones() {
        let panel = test_panel(2, 3, 0.15);
        let v = upa_los_vector([0.0, 10.0, 0.0], &panel, 0.4);
        for n in 0..v.len() {
            assert!((v[n] - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn upa_endfire_half_wavelength() {
        // 1x2 array, spacing λ/2, source at endfire along the column axis.
        let panel = test_panel(1, 2, 0.2);
        let v = upa_los_vector([100.0, 0.0, 0.0], &panel, 0.4);
        assert!((v[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((v[1] - C64::from_polar(1.0, std::f64::consts::PI)).norm() < 1e-9);
    }

    #[test]
    fn upa_phases_separate_into_row_and_column_gradients() {
        let panel = test_panel(2, 2, 0.13);
        let source = [3.0, 7.0, -2.0];
        let lambda = 0.4;
        let v = upa_los_vector(source, &panel, lambda);
        // direct geometric phase per element
        let u = {
            let d = sub3(source, panel.reference);
            normalize3(d)
        };
        for row in 0..2 {
            for col in 0..2 {
                let phase = TAU / lambda * dot3(panel.element_offset(row, col), u);
                let expect = C64::from_polar(1.0, phase);
                let got = v[row * 2 + col];
                assert!((got - expect).norm() < 1e-12);
                // phase = row gradient + column gradient
                let row_phase = TAU / lambda * dot3(panel.element_offset(row, 0), u);
                let col_phase = TAU / lambda * dot3(panel.element_offset(0, col), u);
                let sum = C64::from_polar(1.0, row_phase + col_phase);
                assert!((got - sum).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn upa_entries_have_unit_modulus() {
        let panel = test_panel(4, 5, 0.15);
        let v = upa_los_vector([1.3, 2.2, 0.7], &panel, 0.4);
        for n in 0..v.len() {
            assert!((v[n].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cascade_all_ones() {
        let ones = CVector::new(vec![C64::new(1.0, 0.0); 4]);
        let c = cascaded_channel(&ones, &ones);
        for n in 0..4 {
            assert!((c[n] - C64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn cascade_conjugate_product() {
        // h_ir=[i], h_rj=[i] -> [(-i)(-i)] = [-1]
        let i = CVector::new(vec![C64::new(0.0, 1.0)]);
        let c = cascaded_channel(&i, &i);
        assert!((c[0] - C64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn cascade_matches_diagonal_matrix_form() {
        // Σ φ_n · h_irj(n) must equal h_rjᴴ · diag(φ) · h_ir* for any φ.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = 5;
            let h_ir = CVector::from_fn(n, |_| {
                C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            let h_rj = CVector::from_fn(n, |_| {
                C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            let phi = CVector::from_fn(n, |_| C64::from_polar(1.0, rng.gen::<f64>() * TAU));
            let cascade = cascaded_channel(&h_ir, &h_rj);
            let via_cascade: C64 = (0..n).map(|k| phi[k] * cascade[k]).sum();
            let via_matrix: C64 = (0..n).map(|k| h_rj[k].conj() * phi[k] * h_ir[k].conj()).sum();
            assert!((via_cascade - via_matrix).norm() < 1e-12);
        }
    }

    fn test_model() -> ChannelModel {
        ChannelModel {
            panel: IrsPanel {
                reference: [0.0, 0.0, 0.5],
                normal: [0.0, 1.0, 0.0],
                rows: 2,
                cols: 3,
                spacing_m: 0.15,
            },
            wavelength_m: 0.4,
            positions: RolePositions {
                pt: [-3.0, 50.0, 0.0],
                pr: [0.0, 0.25, 0.0],
                st: [0.0, 4.8, 0.0],
                sr: [3.0, 50.0, 0.0],
            },
            ground: spec(3.0, 0.0, -30.0),
            irs_pt: spec(3.0, 0.0, -30.0),
            irs_pr: spec(2.0, f64::INFINITY, -30.0),
            irs_st: spec(2.0, f64::INFINITY, -30.0),
            irs_sr: spec(3.0, 0.0, -30.0),
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let model = test_model();
        let a = generate_channels(&model, 42, 3);
        let b = generate_channels(&model, 42, 3);
        assert_eq!(a, b);
        let c = generate_channels(&model, 42, 4);
        assert_ne!(a, c);
    }

    #[test]
    fn los_irs_link_magnitude_is_pure_path_loss() {
        let model = test_model();
        let ch = generate_channels(&model, 1, 0);
        let d = distance(model.positions.pr, model.panel.reference);
        let expect = path_loss_amplitude(d, &model.irs_pr);
        for n in 0..ch.h_rp.len() {
            assert!(
                (ch.h_rp[n].norm() - expect).abs() < 1e-12,
                "LoS link entry magnitude must equal the path loss exactly"
            );
        }
    }

    #[test]
    fn ensemble_mean_power_matches_path_loss() {
        // mean |h_pp|² over many trials -> L0·D^-c within 3%
        let model = test_model();
        let d = distance(model.positions.pt, model.positions.pr);
        let expect = 1e-3 * d.powf(-3.0);
        let trials = 10_000;
        let mean: f64 = (0..trials)
            .map(|t| generate_channels(&model, 9, t).h_pp.norm_sqr())
            .sum::<f64>()
            / trials as f64;
        assert!(
            (mean - expect).abs() < 0.03 * expect,
            "mean {mean:.3e} vs expected {expect:.3e}"
        );
    }
}
