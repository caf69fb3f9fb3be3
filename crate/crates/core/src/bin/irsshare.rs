//! Command-line front end: run Monte Carlo sweeps, lint configs, and spot
//! check the closed-form solvers against brute-force oracles.

use clap::{Args, Parser, Subcommand};
use irsshare::ao::{gamma_p_at_infinity, gamma_p_of_lambda, optimal_power, solve_p23, P23Outcome};
use irsshare::harness::{
    load_config, run_sweep, summarize, write_results, DesignId, ScenarioConfig,
};
use irsshare::lowcomplexity::{
    interference_min, sdr_solve, signal_max_phases, trace_product, SdpOptions,
};
use irsshare::numerics::{outer_product, quadratic_form, C64, CVector};
use irsshare::system::SystemParams;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "irsshare",
    about = "IRS-assisted spectrum sharing: joint power control and passive beamforming simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo sweep described by a config file.
    Run(RunArgs),
    /// Parse and validate a config file.
    Validate {
        /// Path to the scenario TOML.
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the small-scale brute-force verification suite.
    Oracle {
        /// Random instances per check.
        #[arg(long, default_value_t = 100)]
        instances: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Path to the scenario TOML; omit to use built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long, default_value = "results.csv")]
    output: PathBuf,
    /// Comma-separated design list overriding the config.
    #[arg(long, value_delimiter = ',')]
    designs: Option<Vec<String>>,
    /// Setup override (1, 2 or 3).
    #[arg(long)]
    setup: Option<u8>,
    /// Trial-count override.
    #[arg(long)]
    trials: Option<u32>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the per-design summary table after the run.
    #[arg(long, default_value_t = true)]
    summary: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Validate { config } => cmd_validate(config),
        Command::Oracle { instances } => cmd_oracle(instances),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<(), String> {
    let mut config = match &args.config {
        Some(path) => load_config(path).map_err(|e| e.to_string())?,
        None => ScenarioConfig::default(),
    };
    if let Some(setup) = args.setup {
        config.setup_id = setup;
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(names) = &args.designs {
        let mut designs = Vec::new();
        for name in names {
            let design = DesignId::parse(name)
                .ok_or_else(|| format!("unknown design {name:?}; expected one of {:?}",
                    DesignId::ALL.map(|d| d.as_str())))?;
            designs.push(design);
        }
        config.designs = designs;
    }
    config.validate().map_err(|e| e.to_string())?;
    let records = run_sweep(&config).map_err(|e| e.to_string())?;
    write_results(&records, &args.output).map_err(|e| e.to_string())?;
    println!(
        "wrote {} records to {}",
        records.len(),
        args.output.display()
    );
    if args.summary {
        println!(
            "{:<16} {:>10} {:>8} {:>12} {:>12}",
            "design", "Pmax[dBm]", "trials", "mean rate", "stderr"
        );
        for row in summarize(&records) {
            println!(
                "{:<16} {:>10.1} {:>8} {:>12.6} {:>12.6}",
                row.design.as_str(),
                row.p_max_dbm,
                row.trials,
                row.mean_rate,
                row.stderr_rate
            );
        }
    }
    Ok(())
}

fn cmd_validate(path: PathBuf) -> Result<(), String> {
    let config = load_config(&path).map_err(|e| e.to_string())?;
    println!(
        "{} OK: setup {}, {} trials, {} sweep points, {} designs",
        path.display(),
        config.setup_id,
        config.trials,
        config.sweep_p_max_dbm.len(),
        config.designs.len()
    );
    Ok(())
}

struct OracleReport {
    failures: usize,
}

impl OracleReport {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        if pass {
            println!("PASS  {name}: {detail}");
        } else {
            println!("FAIL  {name}: {detail}");
            self.failures += 1;
        }
    }
}

fn cmd_oracle(instances: usize) -> Result<(), String> {
    let mut report = OracleReport { failures: 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce57);

    // Closed-form power control vs. a fine grid search.
    let mut worst_gap = 0.0_f64;
    let grid = 100_000usize;
    for _ in 0..instances {
        let params = SystemParams {
            p_p: 10f64.powf(rng.gen_range(-2.0..1.0)),
            p_max: 10f64.powf(rng.gen_range(-2.0..0.5)),
            sigma2_p: 10f64.powf(rng.gen_range(-6.0..-2.0)),
            sigma2_s: 1e-3,
            gamma_th: 10f64.powf(rng.gen_range(0.0..3.0)),
            n_elements: 1,
        };
        let alpha_pp = rng.gen::<f64>();
        let alpha_sp = if rng.gen::<f64>() < 0.1 { 0.0 } else { rng.gen::<f64>() };
        let closed = optimal_power(alpha_pp, alpha_sp, &params);
        let mut best = 0.0_f64;
        for k in 0..=grid {
            let p = params.p_max * k as f64 / grid as f64;
            if params.p_p * alpha_pp / (p * alpha_sp + params.sigma2_p) >= params.gamma_th {
                best = p;
            }
        }
        worst_gap = worst_gap.max((closed - best).abs());
    }
    let step = 1.0 / grid as f64;
    report.check(
        "power-control-grid",
        worst_gap <= step * 1.01,
        format!("max |closed - grid| = {worst_gap:.2e} (grid step {step:.1e})"),
    );

    // Subproblem solution: unit modulus and constraint equality in case 2.
    let mut max_modulus_dev = 0.0_f64;
    let mut max_equality_dev = 0.0_f64;
    for _ in 0..instances {
        let n = 6;
        let w_ss = CVector::from_fn(n, |_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let w_pp = CVector::from_fn(n, |_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let fallback = CVector::from_fn(n, |_| C64::from_polar(1.0, rng.gen::<f64>() * TAU));
        let g0 = gamma_p_of_lambda(0.0, &w_ss, &w_pp, 0.0, &fallback);
        let ginf = gamma_p_at_infinity(&w_pp, 0.0);
        let target = g0 + 0.6 * (ginf - g0);
        if let P23Outcome::Feasible(point) =
            solve_p23(&w_ss, &w_pp, 0.0, 0.0, target, &fallback, 1e-8)
        {
            for k in 0..n {
                max_modulus_dev = max_modulus_dev.max((point.u[k].norm() - 1.0).abs());
            }
            if point.case2 {
                let achieved = gamma_p_of_lambda(point.lambda, &w_ss, &w_pp, 0.0, &fallback);
                max_equality_dev = max_equality_dev
                    .max((achieved - target).abs() / target.abs().max(1.0));
            }
        }
    }
    report.check(
        "subproblem-unit-modulus",
        max_modulus_dev <= 1e-12,
        format!("max | |u|-1 | = {max_modulus_dev:.2e}"),
    );
    report.check(
        "subproblem-constraint-equality",
        max_equality_dev <= 1e-8,
        format!("max relative |γ_p(λ*) - γ_th| = {max_equality_dev:.2e}"),
    );

    // Closed-form design identities.
    let mut max_gain_dev = 0.0_f64;
    let mut max_residual_dev = 0.0_f64;
    for _ in 0..instances {
        let n = 6;
        let h_c = CVector::from_fn(n, |_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let h_d = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        let v = signal_max_phases(&h_c, h_d);
        let mut sum = h_d;
        for k in 0..n {
            sum += v.coefficients()[k].conj() * h_c[k];
        }
        let coherent = h_c.abs_sum() + h_d.norm();
        max_gain_dev = max_gain_dev
            .max((sum.norm_sqr() - coherent * coherent).abs() / (coherent * coherent));

        let h_c_small = h_c.scaled(C64::new(0.05, 0.0));
        let h_d_big = C64::new(1.0 + rng.gen::<f64>(), rng.gen::<f64>());
        let out = interference_min(&h_c_small, h_d_big, 64, &mut rng, &SdpOptions::default());
        let mut res = h_d_big;
        for k in 0..n {
            res += out.v.coefficients()[k].conj() * h_c_small[k];
        }
        let expect = (h_d_big.norm() - h_c_small.abs_sum()).powi(2);
        max_residual_dev =
            max_residual_dev.max((res.norm_sqr() - expect).abs() / expect.max(1e-30));
    }
    report.check(
        "coherent-gain-identity",
        max_gain_dev <= 1e-12,
        format!("max relative deviation {max_gain_dev:.2e}"),
    );
    report.check(
        "cancellation-residual-identity",
        max_residual_dev <= 1e-12,
        format!("max relative deviation {max_residual_dev:.2e}"),
    );

    // Relaxation lower bound vs. exhaustive enumeration at small size.
    let levels = 48usize;
    let mut bound_ok = true;
    let mut worst_excess = f64::NEG_INFINITY;
    for _ in 0..instances.min(10) {
        let n = 3;
        let hbar = CVector::from_fn(n + 1, |_| {
            C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let h = outer_product(&hbar);
        let solved = sdr_solve(&h, &SdpOptions::default()).map_err(|e| e.to_string())?;
        let objective = trace_product(&h, &solved.matrix);
        let mut best = f64::INFINITY;
        let mut u = vec![C64::new(1.0, 0.0); n + 1];
        for a in 0..levels {
            u[0] = C64::from_polar(1.0, TAU * a as f64 / levels as f64);
            for b in 0..levels {
                u[1] = C64::from_polar(1.0, TAU * b as f64 / levels as f64);
                for c in 0..levels {
                    u[2] = C64::from_polar(1.0, TAU * c as f64 / levels as f64);
                    let uv = CVector::new(u.clone());
                    best = best.min(quadratic_form(&h, &uv));
                }
            }
        }
        let excess = objective - best;
        worst_excess = worst_excess.max(excess);
        bound_ok &= excess <= 1e-6;
    }
    report.check(
        "sdr-lower-bound",
        bound_ok,
        format!("max (relaxation - exhaustive) = {worst_excess:.2e}"),
    );

    if report.failures == 0 {
        println!("all oracle checks passed");
        Ok(())
    } else {
        Err(format!("{} oracle check(s) failed", report.failures))
    }
}
