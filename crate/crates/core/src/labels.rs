//! Category palette, dense label maps and per-pixel softmax maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of semantic categories.
pub const NUM_CATEGORIES: usize = 8;

/// The eight scene categories. Discriminants follow the alphabetical palette
/// order used by label-map files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum CategoryId {
    Background = 0,
    Building = 1,
    Human = 2,
    LowVegetation = 3,
    MovingCar = 4,
    Road = 5,
    StaticCar = 6,
    Tree = 7,
}

impl CategoryId {
    pub const ALL: [CategoryId; NUM_CATEGORIES] = [
        CategoryId::Background,
        CategoryId::Building,
        CategoryId::Human,
        CategoryId::LowVegetation,
        CategoryId::MovingCar,
        CategoryId::Road,
        CategoryId::StaticCar,
        CategoryId::Tree,
    ];

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    /// Forbidden inside a landing perimeter.
    #[inline]
    pub fn is_unsafe(self) -> bool {
        matches!(
            self,
            CategoryId::Building | CategoryId::Road | CategoryId::StaticCar | CategoryId::MovingCar
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            CategoryId::Background => "background",
            CategoryId::Building => "building",
            CategoryId::Human => "human",
            CategoryId::LowVegetation => "low_vegetation",
            CategoryId::MovingCar => "moving_car",
            CategoryId::Road => "road",
            CategoryId::StaticCar => "static_car",
            CategoryId::Tree => "tree",
        }
    }

    /// Palette color (UAVid convention).
    pub fn color(self) -> [u8; 3] {
        match self {
            CategoryId::Background => [0, 0, 0],
            CategoryId::Building => [128, 0, 0],
            CategoryId::Human => [64, 64, 0],
            CategoryId::LowVegetation => [128, 128, 0],
            CategoryId::MovingCar => [64, 0, 128],
            CategoryId::Road => [128, 64, 128],
            CategoryId::StaticCar => [192, 0, 192],
            CategoryId::Tree => [0, 128, 0],
        }
    }
}

/// Axis-aligned pixel rectangle, half-open: `[x, x + width) × [y, y + height)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Rect { x, y, width, height }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Rect::new(0, 0, width, height)
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    pub fn right(&self) -> usize {
        self.x + self.width
    }

    pub fn bottom(&self) -> usize {
        self.y + self.height
    }

    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.right() <= width && self.bottom() <= height
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    /// Scales every coordinate by an integer factor.
    pub fn scaled(&self, s: usize) -> Rect {
        Rect::new(self.x * s, self.y * s, self.width * s, self.height * s)
    }

    /// Grows the rectangle by `margin` on each edge and clips it to `[0,w)×[0,h)`.
    pub fn expanded_clipped(&self, margin: usize, width: usize, height: usize) -> Rect {
        let x0 = self.x.saturating_sub(margin);
        let y0 = self.y.saturating_sub(margin);
        let x1 = (self.right() + margin).min(width);
        let y1 = (self.bottom() + margin).min(height);
        Rect::new(x0, y0, x1.saturating_sub(x0), y1.saturating_sub(y0))
    }
}

/// Dense per-pixel category labels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticMap {
    width: usize,
    height: usize,
    labels: Vec<CategoryId>,
}

impl SemanticMap {
    pub fn filled(width: usize, height: usize, category: CategoryId) -> Self {
        SemanticMap {
            width,
            height,
            labels: vec![category; width * height],
        }
    }

    pub fn from_labels(width: usize, height: usize, labels: Vec<CategoryId>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::domain(format!(
                "label count {} does not match {}x{}",
                labels.len(),
                width,
                height
            )));
        }
        Ok(SemanticMap { width, height, labels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[CategoryId] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> CategoryId {
        self.labels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: CategoryId) {
        self.labels[y * self.width + x] = c;
    }

    /// Copies out a sub-rectangle.
    pub fn crop(&self, r: Rect) -> Result<SemanticMap> {
        if !r.fits_in(self.width, self.height) {
            return Err(Error::domain(format!(
                "region {r:?} outside {}x{} map",
                self.width, self.height
            )));
        }
        let mut labels = Vec::with_capacity(r.area());
        for y in r.y..r.bottom() {
            labels.extend_from_slice(&self.labels[y * self.width + r.x..y * self.width + r.right()]);
        }
        Ok(SemanticMap {
            width: r.width,
            height: r.height,
            labels,
        })
    }

    /// Nearest-neighbour upscale by an integer factor (each pixel becomes an `s×s` block).
    pub fn upscale(&self, s: usize) -> SemanticMap {
        let (w, h) = (self.width * s, self.height * s);
        let mut labels = Vec::with_capacity(w * h);
        for y in 0..h {
            let row = &self.labels[(y / s) * self.width..(y / s + 1) * self.width];
            for &c in row {
                for _ in 0..s {
                    labels.push(c);
                }
            }
        }
        SemanticMap {
            width: w,
            height: h,
            labels,
        }
    }

    /// Per-category pixel counts over a region.
    pub fn histogram(&self, r: Rect) -> [usize; NUM_CATEGORIES] {
        let mut counts = [0usize; NUM_CATEGORIES];
        for y in r.y..r.bottom() {
            for &c in &self.labels[y * self.width + r.x..y * self.width + r.right()] {
                counts[c.index()] += 1;
            }
        }
        counts
    }

    pub fn any_unsafe(&self, r: Rect) -> bool {
        (r.y..r.bottom()).any(|y| {
            self.labels[y * self.width + r.x..y * self.width + r.right()]
                .iter()
                .any(|c| c.is_unsafe())
        })
    }
}

/// Per-pixel probability vectors over the eight categories, row-major, channel-minor.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxMap {
    width: usize,
    height: usize,
    probs: Vec<f32>,
}

impl SoftmaxMap {
    pub fn from_probs(width: usize, height: usize, probs: Vec<f32>) -> Result<Self> {
        if probs.len() != width * height * NUM_CATEGORIES {
            return Err(Error::domain(format!(
                "softmax length {} does not match {}x{}x{}",
                probs.len(),
                width,
                height,
                NUM_CATEGORIES
            )));
        }
        Ok(SoftmaxMap { width, height, probs })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.probs
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * NUM_CATEGORIES;
        &self.probs[i..i + NUM_CATEGORIES]
    }

    /// Label map from per-pixel argmax (ties → lowest category index).
    pub fn argmax_map(&self) -> SemanticMap {
        let labels = self
            .probs
            .chunks_exact(NUM_CATEGORIES)
            .map(|p| CategoryId::ALL[argmax(p)])
            .collect();
        SemanticMap {
            width: self.width,
            height: self.height,
            labels,
        }
    }

    /// Largest deviation of any pixel's channel sum from 1.
    pub fn max_normalization_error(&self) -> f64 {
        self.probs
            .chunks_exact(NUM_CATEGORIES)
            .map(|p| (p.iter().map(|&v| v as f64).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Index of the largest value; first index wins on ties.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
