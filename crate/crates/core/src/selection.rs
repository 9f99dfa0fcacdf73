//! The landing decision loop: monitor candidates in rank order and fall back
//! to the default action when all of them are rejected.

use serde::{Deserialize, Serialize};

use crate::camera::CameraModel;
use crate::error::{Error, Result};
use crate::hazard::ScoredCandidate;
use crate::labels::Rect;
use crate::monitors::MonitorVerdict;

/// Where the UAV ends up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    Candidate(usize),
    DefaultAction,
}

/// Cutting the motors and opening the parachute in place. Its hazard is
/// measured on a bottom-center proxy region of the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefaultAction {
    pub region: Rect,
}

/// Bottom-center rectangle of `size_frac` of the image in each dimension.
pub fn default_region(cam: &CameraModel, size_frac: f64) -> Result<DefaultAction> {
    if !(size_frac > 0.0 && size_frac <= 0.25) {
        return Err(Error::config(format!(
            "default_action.size_frac must be in (0, 0.25] (got {size_frac})"
        )));
    }
    let (w_img, h_img) = (cam.image_width_px, cam.image_height_px);
    let w = (size_frac * w_img as f64).floor() as usize;
    let h = (size_frac * h_img as f64).floor() as usize;
    if w == 0 || h == 0 {
        return Err(Error::config(format!(
            "default_action.size_frac {size_frac} gives an empty region on a {w_img}x{h_img} image"
        )));
    }
    Ok(DefaultAction {
        region: Rect::new((w_img - w) / 2, h_img - h, w, h),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionLimits {
    /// Give up after this many monitored candidates; `None` tries them all.
    pub max_attempts: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub candidate_id: usize,
    pub rank: usize,
    pub verdict: MonitorVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub chosen: Choice,
    /// Rank-1 candidate before monitoring, if any.
    pub cm_choice: Option<usize>,
    pub attempts: Vec<Attempt>,
    pub total_monitor_time_s: f64,
}

/// Monitors `ranked` candidates in order and stops at the first acceptance.
pub fn run_selection<F>(ranked: &[ScoredCandidate], mut monitor: F, limits: SelectionLimits) -> Result<SelectionOutcome>
where
    F: FnMut(&ScoredCandidate) -> Result<MonitorVerdict>,
{
    let mut order: Vec<&ScoredCandidate> = ranked.iter().collect();
    order.sort_by_key(|s| s.rank);
    let cap = limits.max_attempts.unwrap_or(usize::MAX);
    let mut attempts = Vec::new();
    let mut total = 0.0;
    let mut chosen = Choice::DefaultAction;
    for s in order.iter().take(cap) {
        let verdict = monitor(s)?;
        total += verdict.elapsed_s;
        attempts.push(Attempt {
            candidate_id: s.candidate.id,
            rank: s.rank,
            verdict,
        });
        if verdict.accepted {
            chosen = Choice::Candidate(s.candidate.id);
            break;
        }
    }
    Ok(SelectionOutcome {
        chosen,
        cm_choice: order.first().map(|s| s.candidate.id),
        attempts,
        total_monitor_time_s: total,
    })
}
