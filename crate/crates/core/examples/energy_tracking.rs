// Energy and emissions from power readings.
//
// Power is integrated between successive `log_carbon_metrics` calls using
// the reading taken at the start of each interval. 100 W held for one hour
// is 0.1 kWh, which at 475 gCO2eq/kWh is 47.5 g.
//
// `cargo run --example energy_tracking [OUT_DIR]`

use std::path::Path;

use provtrack::clock::ManualClock;
use provtrack::telemetry::ScriptedTelemetry;
use provtrack::{start_run_with, Context, RunConfig, RunHooks};

/// Returns (kWh, grams CO2eq) after one hour at 100 W.
pub fn run_example(out_dir: &Path) -> provtrack::Result<(f64, f64)> {
    let clock = ManualClock::shared(0);
    let hooks = RunHooks::deterministic(clock.clone()).telemetry(ScriptedTelemetry::new().constant_power(100.0, None));
    let config = RunConfig::new("www.example.org")
        .experiment_name("energy_tracking")
        .save_dir(out_dir);
    let run = start_run_with(config, hooks)?;

    run.log_carbon_metrics(Context::Training, 0)?;
    clock.advance(3_600_000);
    run.log_carbon_metrics(Context::Training, 1)?;

    let kwh = run.cumulative_energy_kwh();
    let grams = kwh * run.carbon_intensity();
    println!("energy: {kwh} kWh");
    println!("emissions at {} g/kWh: {grams} g", run.carbon_intensity());

    run.set_carbon_intensity(56.0)?;
    println!("same energy at 56 g/kWh: {} g", kwh * run.carbon_intensity());
    run.end_run(false, false)?;
    Ok((kwh, grams))
}

#[allow(dead_code)]
fn main() -> provtrack::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "prov_examples".into());
    run_example(Path::new(&out)).map(|_| ())
}
