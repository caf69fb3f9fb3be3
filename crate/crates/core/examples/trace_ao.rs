//! Watch one alternating-optimization trajectory: per-outer p_s, PU SINR
//! and the equivalent gains that drive the power budget.

use irsshare::ao::{optimal_power, optimize_beamforming, AoOptions};
use irsshare::channel::generate_channels;
use irsshare::harness::ScenarioConfig;
use irsshare::numerics::{C64, CVector};
use irsshare::stream;
use irsshare::system::{equivalent_gain, sinr_primary_lifted, LiftedChannels};
use rand::Rng;
use std::f64::consts::TAU;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let setup: u8 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(3);
    let trial: u64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0);
    let inner_tol: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1e-5);
    let max_inner: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(100);
    let mut config = ScenarioConfig {
        setup_id: setup,
        ..ScenarioConfig::default()
    };
    config.geometry.irs_rows = 4;
    config.geometry.irs_cols = 5;
    config.system.n_elements = 20;
    let model = config.channel_model();
    let ch = generate_channels(&model, 2024, trial);
    let params = config.system_params(30.0);
    let lifted = LiftedChannels::from_channel_set(&ch);
    let n = 20;
    let mut rng = stream::rng(&[2024, trial, 100, 0]);
    let mut vt = CVector::from_fn(n + 1, |k| {
        if k < n {
            C64::from_polar(1.0, rng.gen::<f64>() * TAU)
        } else {
            C64::new(1.0, 0.0)
        }
    });
    let opts = AoOptions {
        inner_tol,
        max_inner,
        ..AoOptions::default()
    };
    println!("|h_sp|^2 = {:.3e}  |h_pp|^2 = {:.3e}", ch.h_sp.norm_sqr(), ch.h_pp.norm_sqr());
    println!(
        "sum |cascade_sp| = {:.3e} vs |h_sp| = {:.3e}  (nullable: {})",
        CVector::from_fn(n, |k| lifted.hbar_sp[k]).abs_sum(),
        ch.h_sp.norm(),
        CVector::from_fn(n, |k| lifted.hbar_sp[k]).abs_sum() > ch.h_sp.norm()
    );
    for outer in 1..=60 {
        let alpha_pp = equivalent_gain(&vt, &lifted.hbar_pp);
        let alpha_sp = equivalent_gain(&vt, &lifted.hbar_sp);
        let p_s = optimal_power(alpha_pp, alpha_sp, &params);
        let bf = optimize_beamforming(&lifted, p_s, &params, &vt, &opts);
        vt = bf.v;
        let gp = sinr_primary_lifted(&vt, p_s, &lifted, &params);
        let a_pp2 = equivalent_gain(&vt, &lifted.hbar_pp);
        let a_sp2 = equivalent_gain(&vt, &lifted.hbar_sp);
        println!(
            "outer {outer:>2}: p_s {p_s:.3e}  inner {:>3}  γ_p/γ_th {:.6}  α_pp {:.3e}  α_sp {:.3e}",
            bf.iterations,
            gp / params.gamma_th,
            a_pp2,
            a_sp2
        );
    }
}
