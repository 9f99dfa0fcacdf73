//! Core-model candidate generation: forbidden pixels, stripe-wise valid-pixel
//! search, density clustering and representative selection.

mod dbscan;
mod integral;
mod kmeans;

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use dbscan::{cluster_candidates, dbscan, Clustering};
pub use integral::SummedAreaTable;
pub use kmeans::{kmeans, KMeans};

use crate::camera::{pixel_radius, CameraModel, SafetyRadiusConfig};
use crate::error::{Error, Result, Violations};
use crate::hash::mix;
use crate::labels::{Rect, SemanticMap};

/// Binary map of pixels whose label is an unsafe category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForbiddenMap {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl ForbiddenMap {
    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::domain("forbidden bit count does not match dimensions"));
        }
        Ok(ForbiddenMap { width, height, bits })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn integral(&self) -> SummedAreaTable {
        SummedAreaTable::from_mask(self.width, self.height, &self.bits)
    }
}

pub fn forbidden_map(seg: &SemanticMap) -> ForbiddenMap {
    ForbiddenMap {
        width: seg.width(),
        height: seg.height(),
        bits: seg.labels().iter().map(|c| c.is_unsafe()).collect(),
    }
}

/// How the pixel safety radius sizes the clearance square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SquareMode {
    /// The radius is the half-width: side `2R̂ + 1`.
    HalfWidth,
    /// The radius is the side length (rounded up to odd).
    Side,
}

impl SquareMode {
    pub fn side_px(self, radius_px: usize) -> usize {
        match self {
            SquareMode::HalfWidth => 2 * radius_px + 1,
            SquareMode::Side => radius_px | 1,
        }
    }
}

/// A pixel coordinate; orders by row, then column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pixel {
    pub y: u32,
    pub x: u32,
}

impl Pixel {
    pub fn new(x: u32, y: u32) -> Self {
        Pixel { x, y }
    }
}

/// A horizontal band of the image sharing one pixel safety radius.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stripe {
    pub index: usize,
    pub rows: Range<usize>,
    pub center_row: usize,
    pub radius_px: usize,
    pub side_px: usize,
}

impl Stripe {
    pub fn half(&self) -> usize {
        self.side_px / 2
    }
}

/// Kept stripes of an image, top to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripeLayout {
    pub stripes: Vec<Stripe>,
    pub height: usize,
}

impl StripeLayout {
    pub fn new(cam: &CameraModel, safety: &SafetyRadiusConfig, cfg: &CandidateConfig) -> Result<Self> {
        cam.validate()?;
        safety.validate()?;
        let h = cam.image_height_px;
        if h < cfg.n_stripes {
            return Err(Error::config(format!(
                "image height {h} is smaller than the {} stripes",
                cfg.n_stripes
            )));
        }
        let stripes = (cfg.dropped_stripes..cfg.n_stripes)
            .map(|k| {
                let rows = k * h / cfg.n_stripes..(k + 1) * h / cfg.n_stripes;
                let center_row = (rows.start + rows.end) / 2;
                let radius_px = pixel_radius(safety, cam.ground_size_at_row(center_row))?;
                Ok(Stripe {
                    index: k,
                    side_px: cfg.square.side_px(radius_px),
                    rows,
                    center_row,
                    radius_px,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StripeLayout { stripes, height: h })
    }

    pub fn stripe_for_row(&self, row: usize) -> Option<&Stripe> {
        self.stripes.iter().find(|s| s.rows.contains(&row))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CandidateConfig {
    /// Target number of representatives (N*).
    pub budget: usize,
    pub eps: f64,
    pub min_pts: usize,
    pub max_overlap: f64,
    pub square: SquareMode,
    pub n_stripes: usize,
    pub dropped_stripes: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    pub seed: u64,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        CandidateConfig {
            budget: 20,
            eps: 3.0,
            min_pts: 4,
            max_overlap: 0.25,
            square: SquareMode::HalfWidth,
            n_stripes: 10,
            dropped_stripes: 2,
            kmeans_max_iter: 100,
            kmeans_tol: 1e-4,
            seed: 0,
        }
    }
}

impl CandidateConfig {
    pub fn validate(&self) -> Result<()> {
        let mut v = Violations::default();
        v.check(self.budget >= 1, || "candidates.budget must be >= 1".into());
        v.check(self.eps > 0.0, || "candidates.eps must be > 0".into());
        v.check(self.min_pts >= 1, || "candidates.min_pts must be >= 1".into());
        v.check((0.0..=1.0).contains(&self.max_overlap), || {
            "candidates.max_overlap must be in [0, 1]".into()
        });
        v.check(self.n_stripes >= 1 && self.dropped_stripes < self.n_stripes, || {
            "candidates.dropped_stripes must be < n_stripes".into()
        });
        v.check(self.kmeans_max_iter >= 1, || {
            "candidates.kmeans_max_iter must be >= 1".into()
        });
        v.into_result()
    }
}

/// A landing candidate in the low-resolution frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: usize,
    pub x: usize,
    pub y: usize,
    /// Pixel safety radius of the candidate's stripe.
    pub radius_px: usize,
    /// Side of the clearance square (odd).
    pub side_px: usize,
    pub cluster_id: usize,
    /// Points in the K-means cell this candidate represents.
    pub cell_size: usize,
}

impl Candidate {
    pub fn half(&self) -> usize {
        self.side_px / 2
    }

    /// Clearance square. Only meaningful when it fits in the image.
    pub fn square(&self) -> Rect {
        let h = self.half();
        Rect::new(self.x - h, self.y - h, self.side_px, self.side_px)
    }
}

/// Area of the intersection of two clearance squares over the smaller square's area.
pub fn overlap_fraction(a: &Candidate, b: &Candidate) -> f64 {
    let (sa, sb) = (a.side_px as f64, b.side_px as f64);
    let axis = |ca: usize, cb: usize| {
        let lo = (ca as f64 - sa / 2.0).max(cb as f64 - sb / 2.0);
        let hi = (ca as f64 + sa / 2.0).min(cb as f64 + sb / 2.0);
        (hi - lo).max(0.0)
    };
    let inter = axis(a.x, b.x) * axis(a.y, b.y);
    let smaller = sa.min(sb).powi(2);
    if smaller <= 0.0 {
        return 0.0;
    }
    (inter / smaller).clamp(0.0, 1.0)
}

/// Pixels whose clearance square is in-bounds and forbidden-free, row-major order.
/// Only the kept stripes (all but the top `dropped_stripes`) contribute centers.
pub fn valid_pixels(fmap: &ForbiddenMap, layout: &StripeLayout) -> Result<Vec<Pixel>> {
    if fmap.height() != layout.height {
        return Err(Error::config(format!(
            "forbidden map height {} does not match camera height {}",
            fmap.height(),
            layout.height
        )));
    }
    let sat = fmap.integral();
    let (w, h) = (fmap.width(), fmap.height());
    let mut out = Vec::new();
    for stripe in &layout.stripes {
        let half = stripe.half();
        let side = stripe.side_px;
        if w < side {
            continue;
        }
        for y in stripe.rows.clone() {
            if y < half || y + half >= h {
                continue;
            }
            for x in half..w - half {
                if sat.sum(Rect::new(x - half, y - half, side, side)) == 0 {
                    out.push(Pixel::new(x as u32, y as u32));
                }
            }
        }
    }
    Ok(out)
}

/// Cluster sizes and proportional representative quotas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterStats {
    pub sizes: Vec<usize>,
    pub total: usize,
    pub quotas: Vec<usize>,
    pub budget: usize,
}

/// `N*_k = max{1, round(N* · N_k / N)}`.
pub fn cluster_quotas(sizes: &[usize], budget: usize) -> ClusterStats {
    let total: usize = sizes.iter().sum();
    let quotas = sizes
        .iter()
        .map(|&n_k| {
            if total == 0 {
                return 1;
            }
            let q = (budget as f64 * n_k as f64 / total as f64).round() as usize;
            q.max(1)
        })
        .collect();
    ClusterStats {
        sizes: sizes.to_vec(),
        total,
        quotas,
        budget,
    }
}

/// K-means representatives per cluster, snapped to member pixels, then pruned
/// so no two clearance squares overlap by more than `cfg.max_overlap`.
pub fn select_representatives(
    pixels: &[Pixel],
    clustering: &Clustering,
    layout: &StripeLayout,
    cfg: &CandidateConfig,
) -> Result<(ClusterStats, Vec<Candidate>)> {
    let members = clustering.members();
    let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    let stats = cluster_quotas(&sizes, cfg.budget);

    let mut cands = Vec::new();
    for (k, idx) in members.iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let pts: Vec<[f64; 2]> = idx.iter().map(|&i| [pixels[i].x as f64, pixels[i].y as f64]).collect();
        let quota = stats.quotas[k].min(pts.len());
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[cfg.seed, k as u64]));
        let km = kmeans(&pts, quota, cfg.kmeans_max_iter, cfg.kmeans_tol, &mut rng);
        for (j, c) in km.centroids.iter().enumerate() {
            let snapped = idx
                .iter()
                .map(|&i| pixels[i])
                .min_by(|a, b| {
                    let da = (a.x as f64 - c[0]).powi(2) + (a.y as f64 - c[1]).powi(2);
                    let db = (b.x as f64 - c[0]).powi(2) + (b.y as f64 - c[1]).powi(2);
                    da.total_cmp(&db).then(a.cmp(b))
                })
                .expect("non-empty cluster");
            let stripe = layout
                .stripe_for_row(snapped.y as usize)
                .ok_or_else(|| Error::inconsistent(format!("valid pixel {snapped:?} lies outside the kept stripes")))?;
            cands.push(Candidate {
                id: 0,
                x: snapped.x as usize,
                y: snapped.y as usize,
                radius_px: stripe.radius_px,
                side_px: stripe.side_px,
                cluster_id: k,
                cell_size: km.cell_sizes[j],
            });
        }
    }

    let mut kept = prune_overlaps(&cands, cfg.max_overlap);
    for (id, c) in kept.iter_mut().enumerate() {
        c.id = id;
    }
    Ok((stats, kept))
}

/// Removes one candidate of every pair overlapping more than `max_overlap`,
/// visiting pairs by descending overlap. The candidate with the larger K-means
/// cell survives; on a tie the lower `(y, x)` survives.
fn prune_overlaps(cands: &[Candidate], max_overlap: f64) -> Vec<Candidate> {
    let mut pairs = Vec::new();
    for i in 0..cands.len() {
        for j in i + 1..cands.len() {
            let o = overlap_fraction(&cands[i], &cands[j]);
            if o > max_overlap {
                pairs.push((o, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut alive = vec![true; cands.len()];
    for (_, i, j) in pairs {
        if !alive[i] || !alive[j] {
            continue;
        }
        let (a, b) = (&cands[i], &cands[j]);
        let a_wins = a
            .cell_size
            .cmp(&b.cell_size)
            .then_with(|| (b.y, b.x).cmp(&(a.y, a.x)))
            .is_ge();
        alive[if a_wins { j } else { i }] = false;
    }
    cands.iter().zip(alive).filter(|(_, a)| *a).map(|(c, _)| *c).collect()
}

/// Everything the core model derives from one low-resolution label map.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub forbidden: ForbiddenMap,
    pub layout: StripeLayout,
    pub valid: Vec<Pixel>,
    pub clustering: Clustering,
    pub stats: ClusterStats,
    pub candidates: Vec<Candidate>,
}

/// Runs valid-pixel search, clustering and representative selection.
pub fn generate_candidates(
    seg: &SemanticMap,
    cam: &CameraModel,
    safety: &SafetyRadiusConfig,
    cfg: &CandidateConfig,
) -> Result<CandidateSet> {
    cfg.validate()?;
    if seg.width() != cam.image_width_px || seg.height() != cam.image_height_px {
        return Err(Error::config(format!(
            "label map is {}x{} but the camera expects {}x{}",
            seg.width(),
            seg.height(),
            cam.image_width_px,
            cam.image_height_px
        )));
    }
    let layout = StripeLayout::new(cam, safety, cfg)?;
    let forbidden = forbidden_map(seg);
    let valid = valid_pixels(&forbidden, &layout)?;
    let clustering = cluster_candidates(&valid, cfg.eps, cfg.min_pts);
    let (stats, candidates) = if valid.is_empty() {
        (cluster_quotas(&[], cfg.budget), Vec::new())
    } else {
        select_representatives(&valid, &clustering, &layout, cfg)?
    };

    let sat = forbidden.integral();
    for c in &candidates {
        let sq = c.square();
        if c.x < c.half() || c.y < c.half() || !sq.fits_in(seg.width(), seg.height()) || sat.sum(sq) != 0 {
            return Err(Error::inconsistent(format!(
                "candidate {} at ({}, {}) has an invalid clearance square",
                c.id, c.x, c.y
            )));
        }
    }
    Ok(CandidateSet {
        forbidden,
        layout,
        valid,
        clustering,
        stats,
        candidates,
    })
}
