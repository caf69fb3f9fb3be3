//! Scenario configuration, Monte Carlo sweeps and result persistence.
//!
//! A scenario fixes one deployment setup (which terminals sit near the
//! IRS), a P_max grid in dBm and a trial count. Every (design, P_max,
//! trial) cell produces one [`ResultRecord`]. All randomness derives from
//! `master_seed` through per-trial, per-link counter streams, so a sweep is
//! a pure function of its config: identical bytes out for identical
//! configs, on any number of worker threads. Within a trial every design
//! and every P_max point consumes the same channel realization, giving
//! paired comparisons across the whole grid.

use crate::ao::{solve_ao, AoInit, AoOptions, SolveResult};
use crate::channel::{distance, generate_channels, ChannelModel, FadingSpec, IrsPanel, RolePositions};
use crate::lowcomplexity::{solve_design, DesignKind, LowComplexityOptions, SdpOptions};
use crate::stream::{self, ids};
use crate::system::SystemParams;
use crate::{db_to_linear, dbm_to_watts};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config field {field}: {message}")]
    Validation { field: String, message: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

fn invalid(field: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Design selector as it appears in configs, CLI flags and CSV rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DesignId {
    IrsAO,
    MaxAlphaPP,
    MaxAlphaSS,
    MinAlphaSP,
    MinAlphaPS,
    NoIrsWithSic,
    NoIrsWithoutSic,
}

impl DesignId {
    pub const ALL: [DesignId; 7] = [
        DesignId::IrsAO,
        DesignId::MaxAlphaPP,
        DesignId::MaxAlphaSS,
        DesignId::MinAlphaSP,
        DesignId::MinAlphaPS,
        DesignId::NoIrsWithSic,
        DesignId::NoIrsWithoutSic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DesignId::IrsAO => "IrsAO",
            DesignId::MaxAlphaPP => "MaxAlphaPP",
            DesignId::MaxAlphaSS => "MaxAlphaSS",
            DesignId::MinAlphaSP => "MinAlphaSP",
            DesignId::MinAlphaPS => "MinAlphaPS",
            DesignId::NoIrsWithSic => "NoIrsWithSic",
            DesignId::NoIrsWithoutSic => "NoIrsWithoutSic",
        }
    }

    pub fn parse(name: &str) -> Option<DesignId> {
        DesignId::ALL.iter().copied().find(|d| d.as_str() == name)
    }

    fn kind(self) -> Option<DesignKind> {
        match self {
            DesignId::IrsAO => None,
            DesignId::MaxAlphaPP => Some(DesignKind::MaxAlphaPP),
            DesignId::MaxAlphaSS => Some(DesignKind::MaxAlphaSS),
            DesignId::MinAlphaSP => Some(DesignKind::MinAlphaSP),
            DesignId::MinAlphaPS => Some(DesignKind::MinAlphaPS),
            DesignId::NoIrsWithSic => Some(DesignKind::NoIrsWithSic),
            DesignId::NoIrsWithoutSic => Some(DesignKind::NoIrsWithoutSic),
        }
    }
}

impl fmt::Display for DesignId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarrierConfig {
    pub frequency_mhz: f64,
    pub wavelength_m: f64,
}

impl Default for CarrierConfig {
    fn default() -> Self {
        Self {
            frequency_mhz: 750.0,
            wavelength_m: 0.4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub irs_position: [f64; 3],
    pub irs_normal: [f64; 3],
    pub irs_rows: usize,
    pub irs_cols: usize,
    /// Element spacing in meters; 3λ/8 at the default carrier.
    pub element_spacing_m: f64,
    pub p1: [f64; 3],
    pub p2: [f64; 3],
    pub s1: [f64; 3],
    pub s2: [f64; 3],
}

impl Default for GeometryConfig {
    fn default() -> Self {
        // P1 and S1 form the IRS hotspot: P1 sits directly under the
        // low-mounted panel, S1 a few meters away on its boresight, so the
        // reflect path through the IRS can rival the direct P1-S1 link and
        // cross-link interference in the hotspot is cancellable. P2 and S2
        // are a couple hundred meters out on different bearings, which
        // keeps the hotspot cross link the dominant impairment.
        Self {
            irs_position: [0.0, 0.0, 0.5],
            irs_normal: [0.0, 1.0, 0.0],
            irs_rows: 6,
            irs_cols: 10,
            element_spacing_m: 0.15,
            p1: [0.0, 0.25, 0.0],
            s1: [0.0, 4.8, 0.0],
            p2: [-215.0, 1.0, 0.0],
            s2: [0.0, 220.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkFadingConfig {
    pub path_loss_exponent: f64,
    /// Rician factor; `inf` selects pure line of sight.
    pub rician_factor: f64,
}

impl Default for LinkFadingConfig {
    fn default() -> Self {
        Self {
            path_loss_exponent: 3.0,
            rician_factor: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FadingConfig {
    pub reference_loss_db: f64,
    pub reference_distance_m: f64,
    /// Links among ground terminals.
    pub ground: LinkFadingConfig,
    /// IRS links of the two hotspot terminals (P1, S1).
    pub irs_near: LinkFadingConfig,
    /// IRS links of the two far terminals (P2, S2).
    pub irs_far: LinkFadingConfig,
}

impl Default for FadingConfig {
    fn default() -> Self {
        Self {
            reference_loss_db: -30.0,
            reference_distance_m: 1.0,
            ground: LinkFadingConfig {
                path_loss_exponent: 3.0,
                rician_factor: 0.0,
            },
            irs_near: LinkFadingConfig {
                path_loss_exponent: 2.0,
                rician_factor: f64::INFINITY,
            },
            irs_far: LinkFadingConfig {
                path_loss_exponent: 3.0,
                rician_factor: 0.0,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Fixed PT power P0, dBm.
    pub p0_dbm: f64,
    /// PU SINR floor, dB.
    pub gamma_th_db: f64,
    pub sigma2_p_dbm: f64,
    pub sigma2_s_dbm: f64,
    /// IRS element count; must equal rows × cols.
    pub n_elements: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            p0_dbm: 20.0,
            gamma_th_db: 20.0,
            sigma2_p_dbm: -105.0,
            sigma2_s_dbm: -105.0,
            n_elements: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AoInitKind {
    /// First start from the interference-cancelling stage-one vector, the
    /// rest from random phases. A purely random start tends to park the
    /// alternation at the power budget its initial reflection happens to
    /// allow; seeding with the cancelling vector lets the power update
    /// exploit a suppressed ST→PR path from the first round.
    Cancel,
    Random,
    Zeros,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AoConfig {
    pub outer_tol: f64,
    pub inner_tol: f64,
    pub bisection_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub init: AoInitKind,
    /// Number of independent random starts; the best feasible result wins.
    pub restarts: usize,
}

impl Default for AoConfig {
    fn default() -> Self {
        let defaults = AoOptions::default();
        Self {
            outer_tol: defaults.outer_tol,
            inner_tol: defaults.inner_tol,
            bisection_tol: defaults.bisection_tol,
            max_outer: defaults.max_outer,
            max_inner: defaults.max_inner,
            init: AoInitKind::Cancel,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdpConfig {
    pub residual_tol: f64,
    pub max_iterations: usize,
}

impl Default for SdpConfig {
    fn default() -> Self {
        let defaults = SdpOptions::default();
        Self {
            residual_tol: defaults.residual_tol,
            max_iterations: defaults.max_iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub ao: AoConfig,
    pub sdp: SdpConfig,
    pub randomization_count: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            ao: AoConfig::default(),
            sdp: SdpConfig::default(),
            randomization_count: 1000,
        }
    }
}

/// One simulated deployment: geometry, fading, system powers, the P_max
/// sweep grid and the designs to run on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// 1: PR and SR near the IRS; 2: PT and SR near; 3: PR and ST near.
    pub setup_id: u8,
    pub trials: u32,
    pub master_seed: u64,
    /// Strictly increasing ST power budgets, dBm.
    pub sweep_p_max_dbm: Vec<f64>,
    pub designs: Vec<DesignId>,
    pub carrier: CarrierConfig,
    pub geometry: GeometryConfig,
    pub fading: FadingConfig,
    pub system: SystemConfig,
    pub solver: SolverConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            setup_id: 1,
            trials: 50,
            master_seed: 1,
            sweep_p_max_dbm: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            designs: DesignId::ALL.to_vec(),
            carrier: CarrierConfig::default(),
            geometry: GeometryConfig::default(),
            fading: FadingConfig::default(),
            system: SystemConfig::default(),
            solver: SolverConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let config: ScenarioConfig =
            toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(1..=3).contains(&self.setup_id) {
            return Err(invalid("setup_id", format!("{} not in 1..=3", self.setup_id)));
        }
        if self.trials < 1 {
            return Err(invalid("trials", "must be ≥ 1"));
        }
        if self.sweep_p_max_dbm.is_empty() {
            return Err(invalid("sweep_p_max_dbm", "must be nonempty"));
        }
        if self
            .sweep_p_max_dbm
            .windows(2)
            .any(|w| !(w[1] > w[0]) || !w[0].is_finite() || !w[1].is_finite())
        {
            return Err(invalid("sweep_p_max_dbm", "must be strictly increasing"));
        }
        if self.designs.is_empty() {
            return Err(invalid("designs", "must list at least one design"));
        }
        if !(self.carrier.wavelength_m > 0.0) {
            return Err(invalid("carrier.wavelength_m", "must be > 0"));
        }
        if !(self.carrier.frequency_mhz > 0.0) {
            return Err(invalid("carrier.frequency_mhz", "must be > 0"));
        }
        if self.geometry.irs_rows * self.geometry.irs_cols != self.system.n_elements {
            return Err(invalid(
                "system.n_elements",
                format!(
                    "{} does not match irs_rows × irs_cols = {}",
                    self.system.n_elements,
                    self.geometry.irs_rows * self.geometry.irs_cols
                ),
            ));
        }
        self.panel().validate().map_err(|e| invalid("geometry", e.to_string()))?;
        for (name, spec) in [
            ("fading.ground", self.link_spec(self.fading.ground)),
            ("fading.irs_near", self.link_spec(self.fading.irs_near)),
            ("fading.irs_far", self.link_spec(self.fading.irs_far)),
        ] {
            spec.validate().map_err(|e| invalid(name, e.to_string()))?;
        }
        let nodes = [
            ("p1", self.geometry.p1),
            ("p2", self.geometry.p2),
            ("s1", self.geometry.s1),
            ("s2", self.geometry.s2),
            ("irs", self.geometry.irs_position),
        ];
        for (i, (name_a, a)) in nodes.iter().enumerate() {
            for (name_b, b) in nodes.iter().skip(i + 1) {
                if distance(*a, *b) <= 0.0 {
                    return Err(invalid(
                        "geometry",
                        format!("{name_a} and {name_b} must not coincide"),
                    ));
                }
            }
        }
        let system = self.system_params(self.sweep_p_max_dbm[0]);
        system
            .validate()
            .map_err(|e| invalid("system", e.to_string()))?;
        if self.solver.ao.restarts < 1 {
            return Err(invalid("solver.ao.restarts", "must be ≥ 1"));
        }
        if self.solver.randomization_count < 1 {
            return Err(invalid("solver.randomization_count", "must be ≥ 1"));
        }
        Ok(())
    }

    fn link_spec(&self, link: LinkFadingConfig) -> FadingSpec {
        FadingSpec {
            path_loss_exponent: link.path_loss_exponent,
            rician_factor: link.rician_factor,
            reference_loss_db: self.fading.reference_loss_db,
            reference_distance_m: self.fading.reference_distance_m,
        }
    }

    fn panel(&self) -> IrsPanel {
        IrsPanel {
            reference: self.geometry.irs_position,
            normal: self.geometry.irs_normal,
            rows: self.geometry.irs_rows,
            cols: self.geometry.irs_cols,
            spacing_m: self.geometry.element_spacing_m,
        }
    }

    /// Role positions and near/far flags for this setup. P1 and S1 are the
    /// hotspot nodes; the roles they play differ per setup.
    fn roles(&self) -> (RolePositions, [bool; 4]) {
        let g = &self.geometry;
        // near flags ordered (pt, pr, st, sr)
        match self.setup_id {
            1 => (
                RolePositions {
                    pt: g.p2,
                    pr: g.p1,
                    st: g.s2,
                    sr: g.s1,
                },
                [false, true, false, true],
            ),
            2 => (
                RolePositions {
                    pt: g.p1,
                    pr: g.p2,
                    st: g.s2,
                    sr: g.s1,
                },
                [true, false, false, true],
            ),
            3 => (
                RolePositions {
                    pt: g.p2,
                    pr: g.p1,
                    st: g.s1,
                    sr: g.s2,
                },
                [false, true, true, false],
            ),
            other => panic!("setup_id {other} out of range"),
        }
    }

    pub fn channel_model(&self) -> ChannelModel {
        let (positions, near) = self.roles();
        let pick = |is_near: bool| {
            self.link_spec(if is_near {
                self.fading.irs_near
            } else {
                self.fading.irs_far
            })
        };
        ChannelModel {
            panel: self.panel(),
            wavelength_m: self.carrier.wavelength_m,
            positions,
            ground: self.link_spec(self.fading.ground),
            irs_pt: pick(near[0]),
            irs_pr: pick(near[1]),
            irs_st: pick(near[2]),
            irs_sr: pick(near[3]),
        }
    }

    pub fn system_params(&self, p_max_dbm: f64) -> SystemParams {
        SystemParams {
            p_p: dbm_to_watts(self.system.p0_dbm),
            p_max: dbm_to_watts(p_max_dbm),
            sigma2_p: dbm_to_watts(self.system.sigma2_p_dbm),
            sigma2_s: dbm_to_watts(self.system.sigma2_s_dbm),
            gamma_th: db_to_linear(self.system.gamma_th_db),
            n_elements: self.system.n_elements,
        }
    }

    fn ao_options(&self) -> AoOptions {
        AoOptions {
            outer_tol: self.solver.ao.outer_tol,
            inner_tol: self.solver.ao.inner_tol,
            bisection_tol: self.solver.ao.bisection_tol,
            max_outer: self.solver.ao.max_outer,
            max_inner: self.solver.ao.max_inner,
        }
    }

    fn lc_options(&self) -> LowComplexityOptions {
        LowComplexityOptions {
            randomization_count: self.solver.randomization_count,
            sdp: SdpOptions {
                residual_tol: self.solver.sdp.residual_tol,
                max_iterations: self.solver.sdp.max_iterations,
            },
        }
    }
}

/// Load and validate a scenario config from a TOML file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig, HarnessError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
        path: path.display().to_string(),
        source,
    })?;
    ScenarioConfig::from_toml_str(&text)
}

/// One solved (design, P_max, trial) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub setup_id: u8,
    pub design: DesignId,
    pub p_max_dbm: f64,
    pub trial: u32,
    /// Derived per-trial stream key, recorded for replay.
    pub seed: u64,
    pub rate_bps_hz: f64,
    pub gamma_p: f64,
    pub gamma_s: f64,
    pub p_s_watts: f64,
    pub outer_iterations: u32,
    pub inner_iterations: u32,
    pub feasible: bool,
    pub wall_time_ms: f64,
}

/// Stage-one interference-cancelling phases for the AO warm start: the same
/// ST→PR suppression the MinAlphaSP design uses, derived from a dedicated
/// per-trial stream.
fn warm_start_phases(
    config: &ScenarioConfig,
    ch: &crate::channel::ChannelSet,
    trial: u32,
) -> Vec<f64> {
    use crate::channel::cascaded_channel;
    use crate::lowcomplexity::interference_min;
    let cascade = cascaded_channel(&ch.h_sr, &ch.h_rp);
    let mut rng = stream::rng(&[config.master_seed, trial as u64, ids::AO_WARM]);
    let lc = config.lc_options();
    interference_min(&cascade, ch.h_sp, lc.randomization_count, &mut rng, &lc.sdp)
        .v
        .phases()
}

fn solve_cell(
    config: &ScenarioConfig,
    design: DesignId,
    design_index: usize,
    params: &SystemParams,
    ch: &crate::channel::ChannelSet,
    trial: u32,
    p_max_index: usize,
) -> SolveResult {
    let ao_opts = config.ao_options();
    let lc_opts = config.lc_options();
    match design.kind() {
        None => {
            // Alternating optimizer, best feasible result over restarts.
            let restarts = config.solver.ao.restarts.max(1);
            let mut best: Option<SolveResult> = None;
            for restart in 0..restarts {
                let init = match (config.solver.ao.init, restart) {
                    (AoInitKind::Cancel, 0) => {
                        AoInit::Phases(warm_start_phases(config, ch, trial))
                    }
                    (AoInitKind::Zeros, 0) => AoInit::Zeros,
                    _ => AoInit::Seed(stream::mix(&[
                        config.master_seed,
                        trial as u64,
                        ids::AO_INIT,
                        restart as u64,
                    ])),
                };
                let candidate = solve_ao(ch, params, init, &ao_opts);
                let better = match &best {
                    None => true,
                    Some(current) => {
                        (candidate.feasible, candidate.rate) > (current.feasible, current.rate)
                    }
                };
                if better {
                    best = Some(candidate);
                }
            }
            best.expect("at least one restart")
        }
        Some(kind) => {
            let mut rng = stream::rng(&[
                config.master_seed,
                trial as u64,
                ids::RANDOMIZATION + design_index as u64,
                p_max_index as u64,
            ]);
            solve_design(kind, ch, params, &lc_opts, &mut rng)
        }
    }
}

/// Run the full sweep: every design on every (P_max, trial) cell, channels
/// drawn once per trial. Records come back sorted by (design order, P_max,
/// trial) regardless of worker scheduling; solve failures surface as
/// infeasible rows rather than aborting the sweep.
pub fn run_sweep(config: &ScenarioConfig) -> Result<Vec<ResultRecord>, HarnessError> {
    config.validate()?;
    let model = config.channel_model();
    let mut records: Vec<ResultRecord> = (0..config.trials)
        .into_par_iter()
        .flat_map_iter(|trial| {
            let ch = generate_channels(&model, config.master_seed, trial as u64);
            let trial_seed = stream::mix(&[config.master_seed, trial as u64]);
            let mut rows = Vec::with_capacity(config.sweep_p_max_dbm.len() * config.designs.len());
            for (p_max_index, &p_max_dbm) in config.sweep_p_max_dbm.iter().enumerate() {
                let params = config.system_params(p_max_dbm);
                for (design_index, &design) in config.designs.iter().enumerate() {
                    let start = Instant::now();
                    let result = solve_cell(
                        config,
                        design,
                        design_index,
                        &params,
                        &ch,
                        trial,
                        p_max_index,
                    );
                    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
                    rows.push(ResultRecord {
                        setup_id: config.setup_id,
                        design,
                        p_max_dbm,
                        trial,
                        seed: trial_seed,
                        rate_bps_hz: result.rate,
                        gamma_p: result.gamma_p,
                        gamma_s: result.gamma_s,
                        p_s_watts: result.p_s,
                        outer_iterations: result.outer_iterations as u32,
                        inner_iterations: result.inner_iterations as u32,
                        feasible: result.feasible,
                        wall_time_ms,
                    });
                }
            }
            rows
        })
        .collect();
    let design_order: Vec<DesignId> = config.designs.clone();
    let position = |d: DesignId| design_order.iter().position(|&x| x == d).unwrap_or(usize::MAX);
    records.sort_by(|a, b| {
        position(a.design)
            .cmp(&position(b.design))
            .then(a.p_max_dbm.partial_cmp(&b.p_max_dbm).expect("finite grid"))
            .then(a.trial.cmp(&b.trial))
    });
    Ok(records)
}

/// Write records as CSV with a header row, fields in declaration order.
pub fn write_results(records: &[ResultRecord], path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    for record in records {
        writer.serialize(record)?;
    }
    writer.flush()?;
    Ok(())
}

/// CSV bytes of the records, for in-memory comparisons.
pub fn results_to_csv(records: &[ResultRecord]) -> Result<Vec<u8>, HarnessError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for record in records {
        writer.serialize(record)?;
    }
    Ok(writer.into_inner().expect("in-memory writer"))
}

/// Read records back from a CSV written by [`write_results`].
pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<ResultRecord>, HarnessError> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let mut records = Vec::new();
    for row in reader.deserialize() {
        records.push(row?);
    }
    Ok(records)
}

/// Per-(setup, design, P_max) mean and standard error of the SU rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub setup_id: u8,
    pub design: DesignId,
    pub p_max_dbm: f64,
    pub trials: usize,
    pub mean_rate: f64,
    pub stderr_rate: f64,
}

/// Aggregate records into mean ± standard error per (setup, design, P_max),
/// sorted by that key.
pub fn summarize(records: &[ResultRecord]) -> Vec<SummaryRow> {
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<(u8, &'static str, u64), Vec<f64>> = BTreeMap::new();
    let mut meta: BTreeMap<(u8, &'static str, u64), (DesignId, f64)> = BTreeMap::new();
    for r in records {
        let key = (r.setup_id, r.design.as_str(), r.p_max_dbm.to_bits());
        groups.entry(key).or_default().push(r.rate_bps_hz);
        meta.entry(key).or_insert((r.design, r.p_max_dbm));
    }
    let mut rows: Vec<SummaryRow> = groups
        .into_iter()
        .map(|(key, rates)| {
            let (design, p_max_dbm) = meta[&key];
            let n = rates.len();
            let mean = rates.iter().sum::<f64>() / n as f64;
            let stderr = if n > 1 {
                let var =
                    rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                setup_id: key.0,
                design,
                p_max_dbm,
                trials: n,
                mean_rate: mean,
                stderr_rate: stderr,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.setup_id
            .cmp(&b.setup_id)
            .then(a.design.as_str().cmp(b.design.as_str()))
            .then(a.p_max_dbm.partial_cmp(&b.p_max_dbm).expect("finite"))
    });
    rows
}
