//! Re-checks the best-ranked candidates at high resolution with each runtime
//! monitor and compares the verdicts with the ground truth.
//!
//! Run with `cargo run --example runtime_monitors`.

use elz::candidates::generate_candidates;
use elz::config::RunConfig;
use elz::evaluation::truly_unsafe;
use elz::hazard::rank_candidates;
use elz::monitors::{monitor_composed, MonitorConfig, MonitorKind};
use elz::segmentation::NoiseModel;
use elz::synth::generate;
use elz::{Rect, Resolution, Segmenter, SyntheticSegmenter};

fn main() -> elz::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.camera.image_width_px = 512;
    cfg.camera.image_height_px = 288;
    cfg.synth.width = 512;
    cfg.synth.height = 288;
    cfg.segmenter.noise = NoiseModel::Scalar(0.2);

    let gt = generate(&cfg.synth, 4, 0)?;
    let seg = SyntheticSegmenter::new(cfg.segmenter_for("scene"), &gt)?;
    let (w, h) = seg.frame_size(Resolution::Low);
    let low = seg.segment_labels(Rect::full(w, h), Resolution::Low)?;
    let set = generate_candidates(&low, &cfg.camera, &cfg.safety, &cfg.candidates_for("scene"))?;
    let ranked = rank_candidates(
        &set.candidates,
        &low,
        &set.forbidden,
        &cfg.camera,
        &cfg.safety,
        &cfg.effective_hazard(),
    )?;

    print!("{:>4}  {:>6}", "rank", "truth");
    for kind in MonitorKind::ALL {
        print!("  {:>28}", kind.name());
    }
    println!();
    for s in &ranked {
        let truth = if truly_unsafe(s.candidate.square(), &gt, seg.hd_scale()) {
            "unsafe"
        } else {
            "safe"
        };
        print!("{:>4}  {truth:>6}", s.rank);
        for kind in MonitorKind::ALL {
            let v = monitor_composed(&s.candidate, &seg, &MonitorConfig { kind, ..cfg.monitor })?;
            let word = if v.accepted { "accept" } else { "reject" };
            print!("  {:>28}", format!("{word} ({})", v.reason.name()));
        }
        println!();
    }
    Ok(())
}
