//! Ranks landing candidates by the blend of semantic hazard (what lies in the
//! clearance square) and distance hazard (how close forbidden ground is).
//!
//! Run with `cargo run --example hazard_ranking`.

use elz::candidates::generate_candidates;
use elz::config::RunConfig;
use elz::hazard::rank_candidates;
use elz::synth::generate;
use elz::{Rect, Resolution, Segmenter, SyntheticSegmenter};

fn main() -> elz::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.camera.image_width_px = 512;
    cfg.camera.image_height_px = 288;
    cfg.synth.width = 512;
    cfg.synth.height = 288;

    let gt = generate(&cfg.synth, 21, 0)?;
    let seg = SyntheticSegmenter::new(cfg.segmenter_for("scene"), &gt)?;
    let (w, h) = seg.frame_size(Resolution::Low);
    let low = seg.segment_labels(Rect::full(w, h), Resolution::Low)?;
    let set = generate_candidates(&low, &cfg.camera, &cfg.safety, &cfg.candidates_for("scene"))?;

    let weights = cfg.effective_hazard();
    let ranked = rank_candidates(
        &set.candidates,
        &low,
        &set.forbidden,
        &cfg.camera,
        &cfg.safety,
        &weights,
    )?;
    println!("h = {:.2} * h_s + {:.2} * h_d", weights.alpha, 1.0 - weights.alpha);
    println!(
        "{:>4}  {:>4}  {:>10}  {:>6}  {:>6}  {:>6}",
        "rank", "id", "center", "h_s", "h_d", "h"
    );
    for s in &ranked {
        println!(
            "{:>4}  {:>4}  ({:>3},{:>3})  {:>6.3}  {:>6.3}  {:>6.3}",
            s.rank, s.candidate.id, s.candidate.x, s.candidate.y, s.h_s, s.h_d, s.h
        );
    }
    Ok(())
}
