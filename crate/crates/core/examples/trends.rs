//! Quick look at the criterion-9 sweep trends at desk scale.

use irsshare::harness::{run_sweep, summarize, DesignId, ScenarioConfig};

fn desk_config(setup_id: u8, designs: Vec<DesignId>) -> ScenarioConfig {
    let mut config = ScenarioConfig {
        setup_id,
        trials: 50,
        master_seed: 2024,
        sweep_p_max_dbm: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
        designs,
        ..ScenarioConfig::default()
    };
    config.geometry.irs_rows = 4;
    config.geometry.irs_cols = 5;
    config.system.n_elements = 20;
    config
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let setup: u8 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(3);
    let trials: u32 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(50);
    let designs = match setup {
        1 => vec![
            DesignId::IrsAO,
            DesignId::MaxAlphaPP,
            DesignId::MaxAlphaSS,
            DesignId::MinAlphaSP,
            DesignId::MinAlphaPS,
        ],
        2 => vec![DesignId::MinAlphaPS, DesignId::NoIrsWithSic],
        _ => vec![
            DesignId::IrsAO,
            DesignId::NoIrsWithSic,
            DesignId::NoIrsWithoutSic,
        ],
    };
    let mut config = desk_config(setup, designs);
    config.trials = trials;
    let start = std::time::Instant::now();
    let records = run_sweep(&config).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    println!("setup {setup}: {} records in {elapsed:.1}s", records.len());
    let mut last_design = None;
    for row in summarize(&records) {
        if last_design != Some(row.design) {
            println!("--- {}", row.design.as_str());
            last_design = Some(row.design);
        }
        println!(
            "  Pmax {:>5.1} dBm  mean {:.6}  stderr {:.6}",
            row.p_max_dbm, row.mean_rate, row.stderr_rate
        );
    }
}
