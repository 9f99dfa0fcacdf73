//! Segmenter abstraction plus a seeded noisy-oracle segmenter that stands in
//! for a trained network.
//!
//! The synthetic segmenter reads ground truth at native (high) resolution.
//! Low resolution is the native map subsampled by `hd_scale` (the frame the
//! core model works in); high resolution returns native pixels. Every random
//! decision is keyed by the native sensor coordinate, so a pixel gets the same
//! label no matter which region it is requested through.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violations};
use crate::hash::{mix, normal, unit};
use crate::labels::{argmax, CategoryId, Rect, SemanticMap, SoftmaxMap, NUM_CATEGORIES};

/// Smoothing applied to the oracle's one-hot softmax.
pub const ORACLE_EPSILON: f32 = 1e-6;

/// Category that stuck sensor lines are read as.
pub const STUCK_CATEGORY: CategoryId = CategoryId::LowVegetation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmenterKind {
    GroundTruthOracle,
    NoisyOracle,
}

/// Label error model of the noisy oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// Each pixel is wrong with this probability; wrong labels are uniform over the other seven.
    Scalar(f64),
    /// Row-stochastic matrix: `confusion[truth][emitted]`.
    Confusion(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmenterSpec {
    pub kind: SegmenterKind,
    pub noise: NoiseModel,
    /// Logit margin of the emitted label; larger means sharper softmax.
    pub concentration: f64,
    pub seed: u64,
    /// Stochastic-pass mixing weight per unit dropout rate.
    pub mcd_jitter: f64,
    /// Native pixels per low-resolution pixel along each axis.
    pub hd_scale: usize,
    /// High-resolution error probability as a fraction of the low-resolution one.
    pub hd_error_factor: f64,
    /// Probability that a high-resolution error draw reuses the low-resolution
    /// one at the same place; 1 nests high-res errors inside low-res ones.
    pub hd_error_correlation: f64,
    /// Side (low-res pixels) of square error blobs; 0 draws errors per pixel.
    pub blob_px: usize,
    /// Standard deviation of the background logit noise.
    pub logit_noise: f64,
}

impl Default for SegmenterSpec {
    fn default() -> Self {
        SegmenterSpec {
            kind: SegmenterKind::NoisyOracle,
            noise: NoiseModel::Scalar(0.1),
            concentration: 6.0,
            seed: 0,
            mcd_jitter: 0.5,
            hd_scale: 2,
            hd_error_factor: 0.3,
            hd_error_correlation: 0.5,
            blob_px: 8,
            logit_noise: 0.5,
        }
    }
}

impl SegmenterSpec {
    pub fn oracle() -> Self {
        SegmenterSpec {
            kind: SegmenterKind::GroundTruthOracle,
            noise: NoiseModel::Scalar(0.0),
            ..SegmenterSpec::default()
        }
    }

    pub fn noisy(error_rate: f64, seed: u64) -> Self {
        SegmenterSpec {
            noise: NoiseModel::Scalar(error_rate),
            seed,
            ..SegmenterSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Violations::default();
        match &self.noise {
            NoiseModel::Scalar(e) => v.check((0.0..=1.0).contains(e), || {
                format!("segmenter error rate must be in [0, 1] (got {e})")
            }),
            NoiseModel::Confusion(m) => {
                v.check(
                    m.len() == NUM_CATEGORIES && m.iter().all(|r| r.len() == NUM_CATEGORIES),
                    || "segmenter confusion matrix must be 8x8".to_string(),
                );
                for (i, row) in m.iter().enumerate() {
                    let sum: f64 = row.iter().sum();
                    v.check(row.iter().all(|&p| p >= 0.0) && (sum - 1.0).abs() < 1e-9, || {
                        format!("confusion row {i} must be non-negative and sum to 1 (sum {sum})")
                    });
                }
            }
        }
        v.check(self.concentration > 0.0, || {
            format!("segmenter concentration must be > 0 (got {})", self.concentration)
        });
        v.check(self.mcd_jitter >= 0.0, || {
            format!("segmenter mcd_jitter must be >= 0 (got {})", self.mcd_jitter)
        });
        v.check(self.hd_scale >= 1, || "segmenter hd_scale must be >= 1".to_string());
        v.check((0.0..=1.0).contains(&self.hd_error_factor), || {
            format!(
                "segmenter hd_error_factor must be in [0, 1] (got {})",
                self.hd_error_factor
            )
        });
        v.check((0.0..=1.0).contains(&self.hd_error_correlation), || {
            format!(
                "segmenter hd_error_correlation must be in [0, 1] (got {})",
                self.hd_error_correlation
            )
        });
        v.check(self.logit_noise >= 0.0, || {
            "segmenter logit_noise must be >= 0".to_string()
        });
        v.into_result()
    }

    /// Confusion matrix implied by the noise model.
    pub fn confusion(&self) -> [[f64; NUM_CATEGORIES]; NUM_CATEGORIES] {
        let mut m = [[0.0; NUM_CATEGORIES]; NUM_CATEGORIES];
        match &self.noise {
            NoiseModel::Scalar(e) => {
                for (i, row) in m.iter_mut().enumerate() {
                    for (j, p) in row.iter_mut().enumerate() {
                        *p = if i == j { 1.0 - e } else { e / 7.0 };
                    }
                }
            }
            NoiseModel::Confusion(rows) => {
                for (i, row) in rows.iter().enumerate().take(NUM_CATEGORIES) {
                    for (j, &p) in row.iter().enumerate().take(NUM_CATEGORIES) {
                        m[i][j] = p;
                    }
                }
            }
        }
        m
    }
}

/// Orientation of a stuck sensor line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Row,
    Column,
}

/// A band of stuck sensor rows or columns, in low-resolution frame pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrapLine {
    pub axis: Axis,
    pub start: usize,
    pub thickness: usize,
}

impl TrapLine {
    pub fn covers(&self, x: usize, y: usize) -> bool {
        let p = match self.axis {
            Axis::Row => y,
            Axis::Column => x,
        };
        p >= self.start && p < self.start + self.thickness
    }
}

/// Directional label smearing, in low-resolution frame pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smear {
    pub length_px: usize,
    pub angle_rad: f64,
}

/// How a sensing fault changes what the synthetic segmenter sees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Degradation {
    /// Added to every category's error probability.
    pub extra_error: f64,
    /// Multiplies the softmax concentration (< 1 means less confident).
    pub concentration_scale: f64,
    /// Image content displacement in frame pixels; ground truth stays put.
    pub shift_px: (i64, i64),
    pub smear: Option<Smear>,
    pub traps: Vec<TrapLine>,
}

impl Default for Degradation {
    fn default() -> Self {
        Degradation {
            extra_error: 0.0,
            concentration_scale: 1.0,
            shift_px: (0, 0),
            smear: None,
            traps: Vec::new(),
        }
    }
}

/// Labels and softmax over one region.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub labels: SemanticMap,
    pub softmax: SoftmaxMap,
}

/// Anything that can segment regions of one scene at two resolutions.
pub trait Segmenter {
    /// Size of the native (high-resolution) frame.
    fn native_size(&self) -> (usize, usize);

    /// Native pixels per low-resolution pixel.
    fn hd_scale(&self) -> usize;

    fn frame_size(&self, res: Resolution) -> (usize, usize) {
        let (w, h) = self.native_size();
        match res {
            Resolution::High => (w, h),
            Resolution::Low => (w / self.hd_scale(), h / self.hd_scale()),
        }
    }

    /// Labels plus softmax over `region` (coordinates of the requested resolution).
    /// `pass` selects a stochastic inference pass; `None` is the deterministic output.
    fn segment(&self, region: Rect, res: Resolution, pass: Option<u32>) -> Result<Segmentation>;

    /// Deterministic labels only.
    fn segment_labels(&self, region: Rect, res: Resolution) -> Result<SemanticMap> {
        Ok(self.segment(region, res, None)?.labels)
    }

    /// `n` stochastic high-resolution passes over `region`. `jitter_scale`
    /// multiplies the segmenter's own stochasticity (the dropout-rate knob).
    fn mcd_passes(&self, region: Rect, n: usize, jitter_scale: f64) -> Result<Vec<SoftmaxMap>>;
}

// Hash stream tags.
const TAG_ERROR: u64 = 1;
const TAG_PICK: u64 = 2;
const TAG_LOGIT: u64 = 3;
const TAG_AMBIG: u64 = 4;
const TAG_SMEAR: u64 = 5;
const TAG_PASS: u64 = 6;
const TAG_HD_SHARE: u64 = 7;
const TAG_HD_ERROR: u64 = 8;

struct PixelDraw {
    label: CategoryId,
    truth: CategoryId,
    erroneous: bool,
    trapped: bool,
}

/// Seeded generative error model over a ground-truth map.
#[derive(Debug, Clone)]
pub struct SyntheticSegmenter<'a> {
    spec: SegmenterSpec,
    gt: &'a SemanticMap,
    degradation: Degradation,
    confusion: [[f64; NUM_CATEGORIES]; NUM_CATEGORIES],
}

impl<'a> SyntheticSegmenter<'a> {
    pub fn new(spec: SegmenterSpec, gt: &'a SemanticMap) -> Result<Self> {
        spec.validate()?;
        if gt.width() < spec.hd_scale || gt.height() < spec.hd_scale {
            return Err(Error::domain("ground truth smaller than one low-resolution pixel"));
        }
        let confusion = spec.confusion();
        Ok(SyntheticSegmenter {
            spec,
            gt,
            degradation: Degradation::default(),
            confusion,
        })
    }

    pub fn with_degradation(mut self, degradation: Degradation) -> Self {
        self.degradation = degradation;
        self
    }

    pub fn spec(&self) -> &SegmenterSpec {
        &self.spec
    }

    fn is_oracle(&self) -> bool {
        self.spec.kind == SegmenterKind::GroundTruthOracle
    }

    /// Native sensor coordinate sampled by a pixel of the requested frame.
    #[inline]
    fn sensor_coord(&self, x: usize, y: usize, res: Resolution) -> (usize, usize) {
        match res {
            Resolution::High => (x, y),
            Resolution::Low => {
                let s = self.spec.hd_scale;
                (s * x + s / 2, s * y + s / 2)
            }
        }
    }

    fn error_key(&self, qx: usize, qy: usize) -> [u64; 4] {
        if self.spec.blob_px > 0 {
            let b = self.spec.blob_px * self.spec.hd_scale;
            [self.spec.seed, 1, (qx / b) as u64, (qy / b) as u64]
        } else {
            [self.spec.seed, 0, qx as u64, qy as u64]
        }
    }

    fn draw(&self, qx: usize, qy: usize, res: Resolution) -> PixelDraw {
        let gt = self.gt;
        if self.is_oracle() {
            let c = gt.get(qx, qy);
            return PixelDraw {
                label: c,
                truth: c,
                erroneous: false,
                trapped: false,
            };
        }
        let s = self.spec.hd_scale;
        let d = &self.degradation;
        let (fx, fy) = (qx / s, qy / s);
        if d.traps.iter().any(|t| t.covers(fx, fy)) {
            return PixelDraw {
                label: STUCK_CATEGORY,
                truth: gt.get(qx, qy),
                erroneous: false,
                trapped: true,
            };
        }

        let mut sx = qx as i64 - d.shift_px.0 * s as i64;
        let mut sy = qy as i64 - d.shift_px.1 * s as i64;
        if let Some(smear) = d.smear {
            let t =
                (unit(mix(&[self.spec.seed, TAG_SMEAR, qx as u64, qy as u64])) - 0.5) * (smear.length_px * s) as f64;
            sx += (t * smear.angle_rad.cos()).round() as i64;
            sy += (t * smear.angle_rad.sin()).round() as i64;
        }
        let sx = sx.clamp(0, gt.width() as i64 - 1) as usize;
        let sy = sy.clamp(0, gt.height() as i64 - 1) as usize;
        let truth = gt.get(sx, sy);

        let row = &self.confusion[truth.index()];
        let mut p_err = ((1.0 - row[truth.index()]) + d.extra_error).clamp(0.0, 0.95);
        if res == Resolution::High {
            p_err *= self.spec.hd_error_factor;
        }
        let mut key = [0u64; 5];
        key[..4].copy_from_slice(&self.error_key(qx, qy));
        key[4] = TAG_ERROR;
        let mut u = unit(mix(&key));
        if res == Resolution::High {
            key[4] = TAG_HD_SHARE;
            if unit(mix(&key)) >= self.spec.hd_error_correlation {
                key[4] = TAG_HD_ERROR;
                u = unit(mix(&key));
            }
        }
        if u >= p_err {
            return PixelDraw {
                label: truth,
                truth,
                erroneous: false,
                trapped: false,
            };
        }
        key[4] = TAG_PICK;
        let v = unit(mix(&key));
        let label = pick_confused(row, truth, v);
        PixelDraw {
            label,
            truth,
            erroneous: label != truth,
            trapped: false,
        }
    }

    fn base_probs(&self, draw: &PixelDraw, qx: usize, qy: usize, res: Resolution) -> [f64; NUM_CATEGORIES] {
        let mut p = [0.0; NUM_CATEGORIES];
        if self.is_oracle() {
            let eps = ORACLE_EPSILON as f64;
            p.iter_mut().for_each(|v| *v = eps);
            p[draw.label.index()] = 1.0 - 7.0 * eps;
            return p;
        }
        let res_tag = res as u64;
        let conc = self.spec.concentration * self.degradation.concentration_scale;
        let mut z = [0.0; NUM_CATEGORIES];
        for (j, zj) in z.iter_mut().enumerate() {
            *zj = self.spec.logit_noise
                * normal(mix(&[
                    self.spec.seed,
                    TAG_LOGIT,
                    res_tag,
                    qx as u64,
                    qy as u64,
                    j as u64,
                ]));
        }
        let l = draw.label.index();
        z[l] += conc;
        if draw.erroneous && !draw.trapped {
            let w = 0.3 + 0.65 * unit(mix(&[self.spec.seed, TAG_AMBIG, res_tag, qx as u64, qy as u64]));
            z[draw.truth.index()] += conc * w;
        }
        let runner_up = z
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != l)
            .map(|(_, &v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        if z[l] < runner_up + 0.05 {
            z[l] = runner_up + 0.05;
        }
        softmax(&z)
    }

    fn check_region(&self, region: Rect, res: Resolution) -> Result<()> {
        let (w, h) = self.frame_size(res);
        if region.is_empty() || !region.fits_in(w, h) {
            return Err(Error::domain(format!(
                "region {region:?} outside the {w}x{h} {res:?} frame"
            )));
        }
        Ok(())
    }

    /// Mean-preserving stochastic pass: every other channel `j` trades
    /// `λ·u_j·p_j·p_top` with the top channel, `u_j` uniform on [-1, 1]. The
    /// spread of a channel scales with its own probability, so confident
    /// pixels stay confident and the sum stays exactly one.
    fn perturb_pass(&self, probs: &mut [f64; NUM_CATEGORIES], lambda: f64, key: [u64; 4]) {
        if lambda <= 0.0 {
            return;
        }
        let top = (0..NUM_CATEGORIES)
            .max_by(|&a, &b| probs[a].total_cmp(&probs[b]).then(b.cmp(&a)))
            .expect("non-empty");
        let p_top = probs[top];
        let mut moved = 0.0;
        for (j, pj) in probs.iter_mut().enumerate() {
            if j == top {
                continue;
            }
            let u = 2.0 * unit(mix(&[key[0], key[1], key[2], key[3], j as u64])) - 1.0;
            let t = lambda * u * *pj * p_top;
            *pj += t;
            moved += t;
        }
        probs[top] -= moved;
    }

    fn render(&self, region: Rect, res: Resolution, passes: &[Option<u32>], lambda: f64) -> Vec<Segmentation> {
        let n = region.area();
        let mut labels: Vec<Vec<CategoryId>> = passes.iter().map(|_| Vec::with_capacity(n)).collect();
        let mut probs: Vec<Vec<f32>> = passes.iter().map(|_| Vec::with_capacity(n * NUM_CATEGORIES)).collect();
        for y in region.y..region.bottom() {
            for x in region.x..region.right() {
                let (qx, qy) = self.sensor_coord(x, y, res);
                let draw = self.draw(qx, qy, res);
                let base = self.base_probs(&draw, qx, qy, res);
                for (k, pass) in passes.iter().enumerate() {
                    let mut p = base;
                    let label = match pass {
                        None => draw.label,
                        Some(pass) => {
                            if !self.is_oracle() {
                                self.perturb_pass(
                                    &mut p,
                                    lambda,
                                    [self.spec.seed ^ TAG_PASS, *pass as u64, qx as u64, qy as u64],
                                );
                            }
                            let as_f32: Vec<f32> = p.iter().map(|&v| v as f32).collect();
                            CategoryId::ALL[argmax(&as_f32)]
                        }
                    };
                    labels[k].push(label);
                    probs[k].extend(p.iter().map(|&v| v as f32));
                }
            }
        }
        labels
            .into_iter()
            .zip(probs)
            .map(|(l, p)| Segmentation {
                labels: SemanticMap::from_labels(region.width, region.height, l).expect("sized by construction"),
                softmax: SoftmaxMap::from_probs(region.width, region.height, p).expect("sized by construction"),
            })
            .collect()
    }

    fn lambda(&self, jitter_scale: f64) -> f64 {
        (self.spec.mcd_jitter * jitter_scale).clamp(0.0, 1.0)
    }
}

impl Segmenter for SyntheticSegmenter<'_> {
    fn native_size(&self) -> (usize, usize) {
        (self.gt.width(), self.gt.height())
    }

    fn hd_scale(&self) -> usize {
        self.spec.hd_scale
    }

    fn segment(&self, region: Rect, res: Resolution, pass: Option<u32>) -> Result<Segmentation> {
        self.check_region(region, res)?;
        Ok(self
            .render(region, res, &[pass], self.lambda(1.0))
            .pop()
            .expect("one pass requested"))
    }

    fn segment_labels(&self, region: Rect, res: Resolution) -> Result<SemanticMap> {
        self.check_region(region, res)?;
        let mut labels = Vec::with_capacity(region.area());
        for y in region.y..region.bottom() {
            for x in region.x..region.right() {
                let (qx, qy) = self.sensor_coord(x, y, res);
                labels.push(self.draw(qx, qy, res).label);
            }
        }
        SemanticMap::from_labels(region.width, region.height, labels)
    }

    fn mcd_passes(&self, region: Rect, n: usize, jitter_scale: f64) -> Result<Vec<SoftmaxMap>> {
        if n < 2 {
            return Err(Error::domain(format!("MCD needs at least 2 passes (got {n})")));
        }
        self.check_region(region, Resolution::High)?;
        let passes: Vec<Option<u32>> = (0..n as u32).map(Some).collect();
        Ok(self
            .render(region, Resolution::High, &passes, self.lambda(jitter_scale))
            .into_iter()
            .map(|s| s.softmax)
            .collect())
    }
}

/// Picks an emitted label from the off-diagonal part of a confusion row.
fn pick_confused(row: &[f64; NUM_CATEGORIES], truth: CategoryId, v: f64) -> CategoryId {
    let t = truth.index();
    let off: f64 = row.iter().enumerate().filter(|&(j, _)| j != t).map(|(_, p)| p).sum();
    let others = CategoryId::ALL.iter().copied().filter(|c| *c != truth);
    if off <= 0.0 {
        let k = ((v * 7.0) as usize).min(6);
        return others.clone().nth(k).expect("seven other categories");
    }
    let mut acc = 0.0;
    let mut last = truth;
    for c in others {
        acc += row[c.index()] / off;
        last = c;
        if v < acc {
            return c;
        }
    }
    last
}

fn softmax(z: &[f64; NUM_CATEGORIES]) -> [f64; NUM_CATEGORIES] {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p = [0.0; NUM_CATEGORIES];
    let mut sum = 0.0;
    for (pj, &zj) in p.iter_mut().zip(z) {
        *pj = (zj - m).exp();
        sum += *pj;
    }
    p.iter_mut().for_each(|v| *v /= sum);
    p
}

/// Deterministic or stochastic segmentation of `region` with a synthetic segmenter.
pub fn segment(
    spec: &SegmenterSpec,
    ground_truth: &SemanticMap,
    region: Rect,
    resolution: Resolution,
    stochastic_pass: Option<u32>,
) -> Result<Segmentation> {
    SyntheticSegmenter::new(spec.clone(), ground_truth)?.segment(region, resolution, stochastic_pass)
}

/// `n_passes` stochastic high-resolution passes with the spec's own jitter.
pub fn mcd_passes(
    spec: &SegmenterSpec,
    ground_truth: &SemanticMap,
    region: Rect,
    n_passes: usize,
) -> Result<Vec<SoftmaxMap>> {
    SyntheticSegmenter::new(spec.clone(), ground_truth)?.mcd_passes(region, n_passes, 1.0)
}
