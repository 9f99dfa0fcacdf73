//! Runs the core model's candidate search on a segmented synthetic scene:
//! forbidden pixels, valid centers per stripe, DBSCAN regions and K-means
//! representatives. Writes an overlay PNG of the survivors.
//!
//! Run with `cargo run --example landing_candidates [-- out.png]`.

use std::path::PathBuf;

use elz::candidates::{generate_candidates, CandidateConfig};
use elz::io::{render_overlay, write_rgb_png, OverlayMark, OverlayStatus};
use elz::synth::{generate, SynthConfig};
use elz::{CameraModel, Rect, Resolution, SafetyRadiusConfig, Segmenter, SegmenterSpec, SyntheticSegmenter};

fn main() -> elz::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("elz_candidates.png"));
    let cam = CameraModel {
        image_width_px: 512,
        image_height_px: 288,
        ..CameraModel::default()
    };
    let synth = SynthConfig {
        width: cam.image_width_px,
        height: cam.image_height_px,
        ..SynthConfig::default()
    };
    let gt = generate(&synth, 11, 0)?;
    let seg = SyntheticSegmenter::new(SegmenterSpec::noisy(0.1, 11), &gt)?;
    let (w, h) = seg.frame_size(Resolution::Low);
    let low = seg.segment_labels(Rect::full(w, h), Resolution::Low)?;

    let cfg = CandidateConfig::default();
    let set = generate_candidates(&low, &cam, &SafetyRadiusConfig::default(), &cfg)?;
    println!("forbidden pixels: {} of {}", set.forbidden.count(), w * h);
    println!("valid centers:    {}", set.valid.len());
    println!(
        "DBSCAN regions:   {} (eps {}, min_pts {}); quotas {:?}",
        set.stats.quotas.len(),
        cfg.eps,
        cfg.min_pts,
        set.stats.quotas
    );
    println!(
        "candidates after overlap pruning: {} (budget {})",
        set.candidates.len(),
        cfg.budget
    );
    for c in &set.candidates {
        println!(
            "  #{:<3} ({:>3}, {:>3})  radius {:>2} px  region {:>2}  cell of {} centers",
            c.id, c.x, c.y, c.radius_px, c.cluster_id, c.cell_size
        );
    }

    let marks: Vec<OverlayMark> = set
        .candidates
        .iter()
        .map(|c| OverlayMark {
            x: c.x,
            y: c.y,
            radius_px: c.radius_px,
            rank: None,
            status: OverlayStatus::Unmonitored,
        })
        .collect();
    write_rgb_png(&out, &render_overlay(&low, &marks, None))?;
    println!("overlay written to {}", out.display());
    Ok(())
}
