//! Seeded procedural ground-truth maps: roads, building blocks, cars near and
//! on roads, tree clumps, open background, people and low vegetation.
//!
//! Maps are drawn on the core-model grid and upscaled to native resolution, so
//! subsampling them back to the core-model frame is exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, Violations};
use crate::hash::mix;
use crate::labels::{CategoryId, SemanticMap};

/// Target area fraction per category. Low vegetation fills the remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassTargets {
    pub building: f64,
    pub road: f64,
    pub static_car: f64,
    pub tree: f64,
    pub human: f64,
    pub moving_car: f64,
    pub background: f64,
}

impl Default for ClassTargets {
    fn default() -> Self {
        ClassTargets {
            building: 0.20,
            road: 0.12,
            static_car: 0.01,
            tree: 0.15,
            human: 0.005,
            moving_car: 0.01,
            background: 0.12,
        }
    }
}

impl ClassTargets {
    pub fn get(&self, c: CategoryId) -> f64 {
        match c {
            CategoryId::Building => self.building,
            CategoryId::Road => self.road,
            CategoryId::StaticCar => self.static_car,
            CategoryId::Tree => self.tree,
            CategoryId::Human => self.human,
            CategoryId::MovingCar => self.moving_car,
            CategoryId::Background => self.background,
            CategoryId::LowVegetation => 1.0 - self.painted_total(),
        }
    }

    fn painted_total(&self) -> f64 {
        self.building + self.road + self.static_car + self.tree + self.human + self.moving_car + self.background
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Number of maps the `synth` command writes.
    pub count: usize,
    /// Core-model frame size; native maps are `hd_scale` times larger.
    pub width: usize,
    pub height: usize,
    pub hd_scale: usize,
    pub targets: ClassTargets,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            count: 10,
            width: 1024,
            height: 576,
            hd_scale: 2,
            targets: ClassTargets::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let mut v = Violations::default();
        v.check(self.count >= 1, || "synth.count must be >= 1".into());
        v.check(self.width >= 32 && self.height >= 32, || {
            format!("synth map must be at least 32x32 (got {}x{})", self.width, self.height)
        });
        v.check(self.hd_scale >= 1, || "synth.hd_scale must be >= 1".into());
        let t = self.targets;
        let all = [
            t.building,
            t.road,
            t.static_car,
            t.tree,
            t.human,
            t.moving_car,
            t.background,
        ];
        v.check(all.iter().all(|&x| (0.0..=1.0).contains(&x)), || {
            "synth.targets must each be in [0, 1]".into()
        });
        v.check(t.road > 0.0 || t.building > 0.0, || {
            "synth.targets need a positive road or building fraction".into()
        });
        v.check(t.painted_total() < 0.9, || {
            format!(
                "synth.targets leave {:.3} for low vegetation; at least 0.1 is required",
                1.0 - t.painted_total()
            )
        });
        v.into_result()
    }
}

struct Canvas {
    w: usize,
    h: usize,
    labels: Vec<CategoryId>,
    counts: [usize; 8],
}

impl Canvas {
    fn new(w: usize, h: usize) -> Self {
        let mut counts = [0; 8];
        counts[CategoryId::LowVegetation.index()] = w * h;
        Canvas {
            w,
            h,
            labels: vec![CategoryId::LowVegetation; w * h],
            counts,
        }
    }

    fn count(&self, c: CategoryId) -> usize {
        self.counts[c.index()]
    }

    /// Paints `(x, y)` with `to` if it currently holds `from`.
    fn paint(&mut self, x: i64, y: i64, from: CategoryId, to: CategoryId) -> bool {
        if x < 0 || y < 0 || x >= self.w as i64 || y >= self.h as i64 {
            return false;
        }
        let i = y as usize * self.w + x as usize;
        if self.labels[i] != from {
            return false;
        }
        self.labels[i] = to;
        self.counts[from.index()] -= 1;
        self.counts[to.index()] += 1;
        true
    }

    fn rect(&mut self, x0: i64, y0: i64, w: i64, h: i64, from: CategoryId, to: CategoryId) {
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                self.paint(x, y, from, to);
            }
        }
    }

    fn disk(&mut self, cx: f64, cy: f64, r: f64, from: CategoryId, to: CategoryId) {
        let (x0, x1) = ((cx - r).floor() as i64, (cx + r).ceil() as i64);
        let (y0, y1) = ((cy - r).floor() as i64, (cy + r).ceil() as i64);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                if dx * dx + dy * dy <= r * r {
                    self.paint(x, y, from, to);
                }
            }
        }
    }
}

/// Paints one gently curving road crossing the whole map.
fn road(c: &mut Canvas, rng: &mut ChaCha8Rng) {
    let horizontal = rng.random::<f64>() < 0.5;
    let (len, across) = if horizontal { (c.w, c.h) } else { (c.h, c.w) };
    let width = rng.random_range((across / 40).max(2)..=(across / 18).max(3)) as f64;
    let start = rng.random_range(0.1..0.9) * across as f64;
    let slope = rng.random_range(-0.25..0.25);
    let amp = rng.random_range(0.0..0.06) * across as f64;
    let freq = rng.random_range(1.0..3.0) * std::f64::consts::TAU / len as f64;
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    for t in 0..len {
        let centre = start + slope * t as f64 + amp * (freq * t as f64 + phase).sin();
        let lo = (centre - width / 2.0).round() as i64;
        let hi = (centre + width / 2.0).round() as i64;
        for a in lo..hi {
            let (x, y) = if horizontal { (t as i64, a) } else { (a, t as i64) };
            c.paint(x, y, CategoryId::LowVegetation, CategoryId::Road);
        }
    }
}

/// Repeats `shape` until `cat` covers `target` of the map or attempts run out.
fn fill(
    c: &mut Canvas,
    cat: CategoryId,
    target: f64,
    rng: &mut ChaCha8Rng,
    mut shape: impl FnMut(&mut Canvas, &mut ChaCha8Rng),
) {
    let goal = (target * (c.w * c.h) as f64).round() as usize;
    let mut attempts = 0;
    while c.count(cat) < goal && attempts < 20_000 {
        shape(c, rng);
        attempts += 1;
    }
}

/// Native-resolution ground truth for map `index` of a corpus seeded by `seed`.
pub fn generate(cfg: &SynthConfig, seed: u64, index: u64) -> Result<SemanticMap> {
    cfg.validate()?;
    Ok(generate_core_grid(cfg, seed, index).upscale(cfg.hd_scale))
}

/// The same map at core-model resolution.
pub fn generate_core_grid(cfg: &SynthConfig, seed: u64, index: u64) -> SemanticMap {
    use CategoryId::*;
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, 0x5EED, index]));
    let (w, h) = (cfg.width, cfg.height);
    let t = cfg.targets;
    let mut c = Canvas::new(w, h);
    let unit = w.min(h) as f64;

    // Moving cars are later carved out of the road surface.
    fill(&mut c, Road, t.road + t.moving_car, &mut rng, road);

    fill(&mut c, Building, t.building, &mut rng, |c, rng| {
        let bw = rng.random_range(unit / 20.0..unit / 6.0) as i64;
        let bh = rng.random_range(unit / 20.0..unit / 6.0) as i64;
        let x = rng.random_range(-bw / 2..w as i64);
        let y = rng.random_range(-bh / 2..h as i64);
        c.rect(x, y, bw, bh, LowVegetation, Building);
    });

    fill(&mut c, Tree, t.tree, &mut rng, |c, rng| {
        let cx = rng.random_range(0.0..w as f64);
        let cy = rng.random_range(0.0..h as f64);
        let r = rng.random_range(unit / 60.0..unit / 20.0);
        for _ in 0..rng.random_range(2..6) {
            let ox = rng.random_range(-r..r);
            let oy = rng.random_range(-r..r);
            c.disk(cx + ox, cy + oy, r * rng.random_range(0.6..1.0), LowVegetation, Tree);
        }
    });

    fill(&mut c, Background, t.background, &mut rng, |c, rng| {
        let bw = rng.random_range(unit / 25.0..unit / 8.0) as i64;
        let bh = rng.random_range(unit / 25.0..unit / 8.0) as i64;
        let x = rng.random_range(0..w as i64);
        let y = rng.random_range(0..h as i64);
        c.rect(x, y, bw, bh, LowVegetation, Background);
    });

    let car = ((unit / 80.0).round() as i64).max(1);
    let road_pixels: Vec<(i64, i64)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| c.labels[y * w + x] == Road)
        .map(|(x, y)| (x as i64, y as i64))
        .collect();
    if !road_pixels.is_empty() {
        fill(&mut c, StaticCar, t.static_car, &mut rng, |c, rng| {
            // Park next to a road: step away from a road pixel until grass is found.
            let (rx, ry) = road_pixels[rng.random_range(0..road_pixels.len())];
            let (dx, dy) = [(1, 0), (-1, 0), (0, 1), (0, -1)][rng.random_range(0..4)];
            let (mut x, mut y) = (rx, ry);
            for _ in 0..(unit / 10.0) as i64 {
                x += dx;
                y += dy;
                if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                    return;
                }
                if c.labels[y as usize * w + x as usize] == LowVegetation {
                    let (cw, ch) = if dx != 0 { (car, 2 * car) } else { (2 * car, car) };
                    c.rect(x, y, cw, ch, LowVegetation, StaticCar);
                    return;
                }
            }
        });
        fill(&mut c, MovingCar, t.moving_car, &mut rng, |c, rng| {
            let (x, y) = road_pixels[rng.random_range(0..road_pixels.len())];
            c.rect(x, y, 2 * car, car, Road, MovingCar);
        });
    }

    fill(&mut c, Human, t.human, &mut rng, |c, rng| {
        let x = rng.random_range(0..w as i64);
        let y = rng.random_range(0..h as i64);
        let s = rng.random_range(1..=2);
        c.rect(x, y, s, s, LowVegetation, Human);
    });

    SemanticMap::from_labels(w, h, c.labels).expect("sized by construction")
}
