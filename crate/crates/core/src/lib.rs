//! Joint secondary-transmitter power control and IRS passive beamforming
//! for spectrum sharing.
//!
//! A secondary link shares one band with a primary link while an
//! intelligent reflecting surface shapes the effective channels. The crate
//! maximizes the achievable secondary-user rate subject to a primary-user
//! SINR floor via:
//!
//! - an alternating optimizer ([`ao`]) that interleaves closed-form power
//!   control with successive-convex-approximation passive beamforming, and
//! - low-complexity two-stage designs ([`lowcomplexity`]) that first pick
//!   the reflection coefficients by a single link criterion (signal power
//!   maximization or interference minimization via semidefinite relaxation
//!   plus Gaussian randomization) and then apply the same power control,
//!   alongside no-IRS baselines with and without successive interference
//!   cancellation.
//!
//! [`channel`] draws seeded Rician channel realizations from deployment
//! geometry, and [`harness`] runs reproducible Monte Carlo sweeps over the
//! ST power budget, writing one CSV row per (design, budget, trial).

pub mod ao;
pub mod channel;
pub mod harness;
pub mod lowcomplexity;
pub mod numerics;
pub mod stream;
pub mod system;

pub use ao::{solve_ao, AoInit, AoOptions, SolveResult};
pub use channel::{generate_channels, ChannelModel, ChannelSet, FadingSpec, IrsPanel};
pub use harness::{load_config, run_sweep, summarize, write_results, ResultRecord, ScenarioConfig};
pub use lowcomplexity::{solve_design, solve_no_irs, solve_two_stage, DesignKind};
pub use numerics::{CVector, HermitianMatrix, C64};
pub use system::{ReflectionVector, SystemParams};

/// Linear power ratio from decibels.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Watts from dBm.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}
