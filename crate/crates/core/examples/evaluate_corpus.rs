//! Runs the whole pipeline over a small synthetic corpus for every
//! perturbation and monitor, then prints the aggregated report.
//!
//! Run with `cargo run --release --example evaluate_corpus [-- n_images]`.

use elz::config::{Aggregation, RunConfig};
use elz::evaluation::{aggregate_report, evaluate_dataset, report_table, Readout};
use elz::synth::generate;

fn main() -> elz::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let mut cfg = RunConfig {
        seed: 17,
        ..RunConfig::default()
    };
    cfg.camera.image_width_px = 512;
    cfg.camera.image_height_px = 288;
    cfg.synth.width = 512;
    cfg.synth.height = 288;
    cfg.validate()?;

    let images: Vec<String> = (0..n).map(|i| format!("scene_{i:02}")).collect();
    let readouts = evaluate_dataset(&cfg, &images, |id| {
        let index: u64 = id
            .trim_start_matches("scene_")
            .parse()
            .expect("ids are generated above");
        generate(&cfg.synth, cfg.seed, index)
    });
    let errors = readouts.iter().filter(|r| matches!(r, Readout::Error(_))).count();
    println!("{} readout records, {errors} failed units\n", readouts.len());

    for agg in [Aggregation::Micro, Aggregation::Macro] {
        print!("{}", report_table(&aggregate_report(&readouts, agg), agg));
        println!();
    }
    Ok(())
}
