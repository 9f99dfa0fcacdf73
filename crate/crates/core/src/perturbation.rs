//! Seeded sensing faults used to stress the pipeline.
//!
//! Each perturbation has two faces: a raster transform for pipelines that feed
//! real images to a real segmenter, and a [`Degradation`] of the synthetic
//! segmenter's error model for desk-scale runs. Ground truth is never touched.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violations};
use crate::hash::{mix, unit};
use crate::segmentation::{Axis, Degradation, Smear, TrapLine};

/// Fault kind and its magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    None,
    /// `v' = clamp(scale·v + offset)`.
    Brightness {
        scale: f64,
        offset: f64,
    },
    /// Gray veil, denser toward the top of the image (farther ground).
    Fog {
        density: f64,
    },
    /// 1-D box blur of odd length along `angle_deg` (0 = horizontal).
    MotionBlur {
        length_px: usize,
        angle_deg: f64,
    },
    /// Image content moves by `(dx, dy)` pixels; ground truth stays put.
    ShiftedPixels {
        dx: i64,
        dy: i64,
    },
    /// `stripes` seeded rows or columns of `thickness_px` stuck at `value`.
    PixelTrap {
        stripes: usize,
        thickness_px: usize,
        value: f32,
    },
}

impl Perturbation {
    /// Report label of the perturbation kind.
    pub fn name(&self) -> &'static str {
        match self {
            Perturbation::None => "None",
            Perturbation::Brightness { .. } => "Brightness",
            Perturbation::Fog { .. } => "Fog",
            Perturbation::MotionBlur { .. } => "Motion blur",
            Perturbation::ShiftedPixels { .. } => "Shifted pixels",
            Perturbation::PixelTrap { .. } => "Pixel trap",
        }
    }

    /// Lowercase, underscore-separated form of [`Perturbation::name`], usable as a directory name.
    pub fn slug(&self) -> String {
        self.name().to_ascii_lowercase().replace(' ', "_")
    }

    /// Moderate magnitude of each kind for an image of the given size.
    pub fn standard_grid(width: usize, height: usize) -> Vec<Perturbation> {
        vec![
            Perturbation::None,
            Perturbation::Brightness {
                scale: 1.5,
                offset: 0.1,
            },
            Perturbation::Fog { density: 0.5 },
            Perturbation::MotionBlur {
                length_px: 9,
                angle_deg: 0.0,
            },
            Perturbation::ShiftedPixels {
                dx: (width / 40) as i64,
                dy: (height / 40) as i64,
            },
            Perturbation::PixelTrap {
                stripes: 3,
                thickness_px: 4,
                value: 1.0,
            },
        ]
    }

    /// Checks magnitudes against their documented ranges for an image of the given size.
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        let mut v = Violations::default();
        match *self {
            Perturbation::None => {}
            Perturbation::Brightness { scale, offset } => {
                v.check((0.3..=1.7).contains(&scale), || {
                    format!("brightness scale must be in [0.3, 1.7] (got {scale})")
                });
                v.check((-0.5..=0.5).contains(&offset), || {
                    format!("brightness offset must be in [-0.5, 0.5] (got {offset})")
                });
            }
            Perturbation::Fog { density } => v.check((0.2..=0.8).contains(&density), || {
                format!("fog density must be in [0.2, 0.8] (got {density})")
            }),
            Perturbation::MotionBlur { length_px, angle_deg } => {
                v.check((3..=15).contains(&length_px) && length_px % 2 == 1, || {
                    format!("motion blur length must be odd in [3, 15] (got {length_px})")
                });
                v.check(angle_deg.is_finite(), || "motion blur angle must be finite".into());
            }
            Perturbation::ShiftedPixels { dx, dy } => {
                let (mx, my) = (width as f64 * 0.05, height as f64 * 0.05);
                v.check(dx.unsigned_abs() as f64 <= mx && dy.unsigned_abs() as f64 <= my, || {
                    format!("shift ({dx}, {dy}) exceeds 5% of the {width}x{height} image")
                });
            }
            Perturbation::PixelTrap {
                stripes,
                thickness_px,
                value,
            } => {
                v.check((1..=3).contains(&stripes), || {
                    format!("pixel trap stripes must be in [1, 3] (got {stripes})")
                });
                v.check(thickness_px >= 1 && thickness_px <= width.min(height), || {
                    format!(
                        "pixel trap thickness must be in [1, {}] (got {thickness_px})",
                        width.min(height)
                    )
                });
                v.check((0.0..=1.0).contains(&value), || {
                    format!("pixel trap value must be in [0, 1] (got {value})")
                });
            }
        }
        v.into_result()
    }
}

/// A perturbation with the seed of its random choices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    #[serde(flatten)]
    pub perturbation: Perturbation,
    #[serde(default)]
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn new(perturbation: Perturbation, seed: u64) -> Self {
        PerturbationSpec { perturbation, seed }
    }

    pub fn none() -> Self {
        PerturbationSpec::new(Perturbation::None, 0)
    }

    pub fn name(&self) -> &'static str {
        self.perturbation.name()
    }
}

/// Seeded stuck lines of a pixel trap on a `width`×`height` frame. Empty for other kinds.
pub fn trap_lines(spec: &PerturbationSpec, width: usize, height: usize) -> Vec<TrapLine> {
    let Perturbation::PixelTrap {
        stripes, thickness_px, ..
    } = spec.perturbation
    else {
        return Vec::new();
    };
    (0..stripes as u64)
        .map(|i| {
            let axis = if unit(mix(&[spec.seed, 0x7A9, i, 0])) < 0.5 {
                Axis::Row
            } else {
                Axis::Column
            };
            let extent = match axis {
                Axis::Row => height,
                Axis::Column => width,
            };
            let room = extent.saturating_sub(thickness_px) + 1;
            let start = ((unit(mix(&[spec.seed, 0x7A9, i, 1])) * room as f64) as usize).min(room - 1);
            TrapLine {
                axis,
                start,
                thickness: thickness_px,
            }
        })
        .collect()
}

/// How the synthetic segmenter's error model responds to a perturbation.
/// `width`×`height` is the core-model frame; shifts and lines are in its pixels.
pub fn degradation(spec: &PerturbationSpec, width: usize, height: usize) -> Degradation {
    let mut d = Degradation::default();
    match spec.perturbation {
        Perturbation::None => {}
        Perturbation::Brightness { scale, offset } => {
            d.extra_error = 0.5 * (scale - 1.0).abs() + 0.5 * offset.abs();
            d.concentration_scale = 1.0 - 0.4 * (scale - 1.0).abs();
        }
        Perturbation::Fog { density } => {
            d.extra_error = 0.3 * density;
            d.concentration_scale = 1.0 - 0.5 * density;
        }
        Perturbation::MotionBlur { length_px, angle_deg } => {
            d.extra_error = 0.005 * length_px as f64;
            d.concentration_scale = (1.0 - 0.02 * length_px as f64).max(0.1);
            d.smear = Some(Smear {
                length_px,
                angle_rad: angle_deg.to_radians(),
            });
        }
        Perturbation::ShiftedPixels { dx, dy } => d.shift_px = (dx, dy),
        Perturbation::PixelTrap { .. } => d.traps = trap_lines(spec, width, height),
    }
    d
}

/// RGB raster with channels in [0, 1], row-major, channel-minor.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Raster {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::domain(format!(
                "raster data length {} does not match {width}x{height}x3",
                data.len()
            )));
        }
        Ok(Raster { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Self {
        let data = (0..width * height).flat_map(|_| rgb).collect();
        Raster { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [f32; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    fn clamped(&self, x: i64, y: i64) -> [f32; 3] {
        let x = x.clamp(0, self.width as i64 - 1) as usize;
        let y = y.clamp(0, self.height as i64 - 1) as usize;
        self.get(x, y)
    }

    fn map_pixels(&self, f: impl Fn(usize, usize) -> [f32; 3]) -> Raster {
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.height {
            for x in 0..self.width {
                data.extend(f(x, y));
            }
        }
        Raster {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// Offsets of the motion-blur taps: `length` distinct pixels centred on the origin.
pub fn blur_taps(length: usize, angle_deg: f64) -> Vec<(i64, i64)> {
    let (s, c) = angle_deg.to_radians().sin_cos();
    let half = (length as i64 - 1) / 2;
    (-half..=half)
        .map(|t| {
            if c.abs() >= s.abs() {
                (t * c.signum() as i64, (t as f64 * s / c.abs()).round() as i64)
            } else {
                ((t as f64 * c / s.abs()).round() as i64, t * s.signum() as i64)
            }
        })
        .collect()
}

/// Applies the raster face of a perturbation.
pub fn apply_raster(img: &Raster, spec: &PerturbationSpec) -> Result<Raster> {
    spec.perturbation.validate(img.width, img.height)?;
    Ok(match spec.perturbation {
        Perturbation::None => img.clone(),
        Perturbation::Brightness { scale, offset } => {
            let (scale, offset) = (scale as f32, offset as f32);
            Raster {
                data: img.data.iter().map(|&v| (scale * v + offset).clamp(0.0, 1.0)).collect(),
                ..img.clone()
            }
        }
        Perturbation::Fog { density } => {
            let denom = (img.height.max(2) - 1) as f64;
            img.map_pixels(|x, y| {
                let a = (density * (0.5 + 0.5 * (1.0 - y as f64 / denom))) as f32;
                img.get(x, y).map(|v| (1.0 - a) * v + a * 0.8)
            })
        }
        Perturbation::MotionBlur { length_px, angle_deg } => {
            let taps = blur_taps(length_px, angle_deg);
            let w = 1.0 / taps.len() as f32;
            img.map_pixels(|x, y| {
                let mut acc = [0.0f32; 3];
                for &(dx, dy) in &taps {
                    let p = img.clamped(x as i64 + dx, y as i64 + dy);
                    for k in 0..3 {
                        acc[k] += w * p[k];
                    }
                }
                acc
            })
        }
        Perturbation::ShiftedPixels { dx, dy } => img.map_pixels(|x, y| img.clamped(x as i64 - dx, y as i64 - dy)),
        Perturbation::PixelTrap { value, .. } => {
            let lines = trap_lines(spec, img.width, img.height);
            img.map_pixels(|x, y| {
                if lines.iter().any(|l| l.covers(x, y)) {
                    [value; 3]
                } else {
                    img.get(x, y)
                }
            })
        }
    })
}
