//! A segmenter backed by label and softmax files produced elsewhere.
//!
//! For image `<id>` the files live in one directory:
//!
//! * `<id>.low.png`, `<id>.low.elsm`: the downscaled frame
//! * `<id>.high.png`, `<id>.high.elsm`: the native frame
//! * `<id>.mcd.<k>.elsm` for `k = 0, 1, ...` (optional): stochastic native passes
//!
//! Without stochastic passes every MCD pass repeats the deterministic
//! softmax, so the per-pixel spread is zero.

use std::path::Path;

use super::{read_label_map, read_softmax};
use crate::error::{Error, Result};
use crate::labels::{Rect, SemanticMap, SoftmaxMap, NUM_CATEGORIES};
use crate::segmentation::{Resolution, Segmentation, Segmenter};

#[derive(Debug, Clone)]
pub struct PrecomputedSegmenter {
    low: Segmentation,
    high: Segmentation,
    passes: Vec<SoftmaxMap>,
    hd_scale: usize,
}

fn crop_softmax(m: &SoftmaxMap, r: Rect) -> Result<SoftmaxMap> {
    let mut probs = Vec::with_capacity(r.area() * NUM_CATEGORIES);
    for y in r.y..r.bottom() {
        for x in r.x..r.right() {
            probs.extend_from_slice(m.pixel(x, y));
        }
    }
    SoftmaxMap::from_probs(r.width, r.height, probs)
}

fn check_pair(labels: &SemanticMap, softmax: &SoftmaxMap, what: &str) -> Result<()> {
    if (labels.width(), labels.height()) != (softmax.width(), softmax.height()) {
        return Err(Error::inconsistent(format!(
            "{what} labels are {}x{} but softmax is {}x{}",
            labels.width(),
            labels.height(),
            softmax.width(),
            softmax.height()
        )));
    }
    Ok(())
}

impl PrecomputedSegmenter {
    pub fn new(low: Segmentation, high: Segmentation, passes: Vec<SoftmaxMap>, hd_scale: usize) -> Result<Self> {
        check_pair(&low.labels, &low.softmax, "low-resolution")?;
        check_pair(&high.labels, &high.softmax, "native")?;
        if hd_scale == 0
            || low.labels.width() * hd_scale != high.labels.width()
            || low.labels.height() * hd_scale != high.labels.height()
        {
            return Err(Error::inconsistent(format!(
                "native frame {}x{} is not {hd_scale} times the low frame {}x{}",
                high.labels.width(),
                high.labels.height(),
                low.labels.width(),
                low.labels.height()
            )));
        }
        for (k, p) in passes.iter().enumerate() {
            if (p.width(), p.height()) != (high.softmax.width(), high.softmax.height()) {
                return Err(Error::inconsistent(format!("stochastic pass {k} has the wrong size")));
            }
        }
        Ok(PrecomputedSegmenter {
            low,
            high,
            passes,
            hd_scale,
        })
    }

    /// Loads the files of image `id` from `dir`.
    pub fn load(dir: &Path, id: &str, hd_scale: usize) -> Result<Self> {
        let pair = |res: &str| -> Result<Segmentation> {
            Ok(Segmentation {
                labels: read_label_map(&dir.join(format!("{id}.{res}.png")))?,
                softmax: read_softmax(&dir.join(format!("{id}.{res}.elsm")))?,
            })
        };
        let low = pair("low")?;
        let high = pair("high")?;
        let mut passes = Vec::new();
        loop {
            let p = dir.join(format!("{id}.mcd.{}.elsm", passes.len()));
            if !p.is_file() {
                break;
            }
            passes.push(read_softmax(&p)?);
        }
        PrecomputedSegmenter::new(low, high, passes, hd_scale)
    }

    fn frame(&self, res: Resolution) -> &Segmentation {
        match res {
            Resolution::Low => &self.low,
            Resolution::High => &self.high,
        }
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
}

impl Segmenter for PrecomputedSegmenter {
    fn native_size(&self) -> (usize, usize) {
        (self.high.labels.width(), self.high.labels.height())
    }

    fn hd_scale(&self) -> usize {
        self.hd_scale
    }

    /// Stored outputs are deterministic, so `pass` selects a stored stochastic
    /// pass when one exists and the deterministic softmax otherwise.
    fn segment(&self, region: Rect, res: Resolution, pass: Option<u32>) -> Result<Segmentation> {
        self.check_region(region, res)?;
        let frame = self.frame(res);
        let softmax = match (res, pass) {
            (Resolution::High, Some(k)) if !self.passes.is_empty() => &self.passes[k as usize % self.passes.len()],
            _ => &frame.softmax,
        };
        Ok(Segmentation {
            labels: frame.labels.crop(region)?,
            softmax: crop_softmax(softmax, region)?,
        })
    }

    fn segment_labels(&self, region: Rect, res: Resolution) -> Result<SemanticMap> {
        self.check_region(region, res)?;
        self.frame(res).labels.crop(region)
    }

    /// Stored passes are reused cyclically when fewer than `n` exist. A zero
    /// `jitter_scale` disables stochasticity.
    fn mcd_passes(&self, region: Rect, n: usize, jitter_scale: f64) -> Result<Vec<SoftmaxMap>> {
        if n < 2 {
            return Err(Error::domain(format!("MCD needs at least 2 passes (got {n})")));
        }
        self.check_region(region, Resolution::High)?;
        (0..n)
            .map(|k| {
                let src = if self.passes.is_empty() || jitter_scale == 0.0 {
                    &self.high.softmax
                } else {
                    &self.passes[k % self.passes.len()]
                };
                crop_softmax(src, region)
            })
            .collect()
    }
}
