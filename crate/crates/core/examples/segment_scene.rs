//! Generates a synthetic urban scene and segments it with the seeded noisy
//! oracle at both resolutions, then shows how Monte-Carlo passes spread.
//!
//! Run with `cargo run --example segment_scene`.

use elz::labels::CategoryId;
use elz::monitors::{mcd_scores, underclassify, HierarchyNode};
use elz::synth::{generate, SynthConfig};
use elz::{Rect, Resolution, Segmenter, SegmenterSpec, SyntheticSegmenter};

fn main() -> elz::Result<()> {
    let synth = SynthConfig {
        width: 512,
        height: 288,
        ..SynthConfig::default()
    };
    let gt = generate(&synth, 7, 0)?;
    println!("native ground truth: {}x{}", gt.width(), gt.height());
    let hist = gt.histogram(Rect::full(gt.width(), gt.height()));
    for c in CategoryId::ALL {
        let frac = hist[c.index()] as f64 / (gt.width() * gt.height()) as f64;
        let tag = if c.is_unsafe() { "unsafe" } else { "" };
        println!("  {:<16} {:>5.1}%  {tag}", c.name(), 100.0 * frac);
    }

    let seg = SyntheticSegmenter::new(SegmenterSpec::noisy(0.15, 7), &gt)?;
    let s = seg.hd_scale();
    for res in [Resolution::Low, Resolution::High] {
        let (w, h) = seg.frame_size(res);
        let labels = seg.segment_labels(Rect::full(w, h), res)?;
        let mut wrong = 0usize;
        for y in 0..h {
            for x in 0..w {
                // A low-resolution pixel looks at the center of its native block.
                let (gx, gy) = match res {
                    Resolution::Low => (s * x + s / 2, s * y + s / 2),
                    Resolution::High => (x, y),
                };
                wrong += usize::from(labels.get(x, y) != gt.get(gx, gy));
            }
        }
        println!(
            "{res:?} {w}x{h}: {:.1}% of pixels mislabeled",
            100.0 * wrong as f64 / (w * h) as f64
        );
    }

    // How a 128x128 native patch looks to the hierarchy check, first with
    // the deterministic softmax and then with the Monte-Carlo bound.
    let patch = Rect::new(448, 320, 128, 128);
    let tau = 0.25;
    let det = seg.segment(patch, Resolution::High, None)?.softmax;
    let det_nodes: Vec<HierarchyNode> = det.as_slice().chunks(8).map(|p| underclassify(p, tau)).collect();
    let scores = mcd_scores(&seg.mcd_passes(patch, 10, 0.9)?)?;
    let mcd_nodes: Vec<HierarchyNode> = scores.as_slice().chunks(8).map(|p| underclassify(p, tau)).collect();
    println!(
        "\nhierarchy nodes over a {}x{} patch (tau = {tau}):",
        patch.width, patch.height
    );
    println!("  {:<8} {:>13} {:>13}", "node", "deterministic", "10 MC passes");
    for (name, pick) in [
        (
            "leaf",
            (|n: &HierarchyNode| matches!(n, HierarchyNode::Leaf(_))) as fn(&HierarchyNode) -> bool,
        ),
        ("Safe", |n| *n == HierarchyNode::Safe),
        ("Unsafe", |n| *n == HierarchyNode::Unsafe),
        ("Any", |n| *n == HierarchyNode::Any),
    ] {
        let a = det_nodes.iter().filter(|n| pick(n)).count();
        let b = mcd_nodes.iter().filter(|n| pick(n)).count();
        println!("  {name:<8} {a:>13} {b:>13}");
    }
    Ok(())
}
