//! Walks the ranked candidates through the LHD monitor until one is accepted,
//! falling back to the parachute default action, and scores every stage
//! against the ground truth.
//!
//! Run with `cargo run --example select_landing`.

use elz::candidates::generate_candidates;
use elz::config::RunConfig;
use elz::evaluation::{safety_gains, true_hazard};
use elz::hazard::rank_candidates;
use elz::monitors::{monitor_composed, MonitorConfig, MonitorKind};
use elz::perturbation::{degradation, Perturbation, PerturbationSpec};
use elz::selection::{default_region, run_selection, Choice};
use elz::synth::generate;
use elz::{Rect, Resolution, Segmenter, SyntheticSegmenter};

fn main() -> elz::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.camera.image_width_px = 512;
    cfg.camera.image_height_px = 288;
    cfg.synth.width = 512;
    cfg.synth.height = 288;

    // Fog lowers segmenter confidence and adds label errors.
    let fog = PerturbationSpec::new(Perturbation::Fog { density: 0.6 }, 0);
    let gt = generate(&cfg.synth, 2, 0)?;
    let seg = SyntheticSegmenter::new(cfg.segmenter_for("scene"), &gt)?.with_degradation(degradation(
        &fog,
        cfg.camera.image_width_px,
        cfg.camera.image_height_px,
    ));
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

    let mcfg = MonitorConfig::with_kind(MonitorKind::Lhd);
    let outcome = run_selection(
        &ranked,
        |s| monitor_composed(&s.candidate, &seg, &mcfg),
        cfg.selection.limits(),
    )?;
    for a in &outcome.attempts {
        let verdict = if a.verdict.accepted { "accepted" } else { "rejected" };
        println!(
            "rank {:>2} (candidate {:>2}): {verdict} ({})",
            a.rank,
            a.candidate_id,
            a.verdict.reason.name()
        );
    }

    let s = seg.hd_scale();
    let hazard = |r: Rect| true_hazard(r, &gt, s, &cfg.hazard, &cfg.true_hazard);
    let square_of = |id: usize| {
        ranked
            .iter()
            .find(|r| r.candidate.id == id)
            .map(|r| r.candidate.square())
            .expect("ids come from the ranked list")
    };
    let h_default = hazard(default_region(&cfg.camera, cfg.selection.default_frac)?.region)?;
    let h_cm = match outcome.cm_choice {
        Some(id) => hazard(square_of(id))?,
        None => h_default,
    };
    let h_final = match outcome.chosen {
        Choice::Candidate(id) => hazard(square_of(id))?,
        Choice::DefaultAction => h_default,
    };
    let g = safety_gains(h_default, h_cm, h_final);
    println!("\ntrue hazard: default action {h_default:.3}, core model choice {h_cm:.3}, final {h_final:.3}");
    println!(
        "gains (positive = safer): G_CM {:.3}, G_RM {:.3}, G* {:.3}",
        g.g_cm, g.g_rm, g.g_star
    );
    println!(
        "monitor time: {:.2e} s over {} checks",
        outcome.total_monitor_time_s,
        outcome.attempts.len()
    );
    Ok(())
}
