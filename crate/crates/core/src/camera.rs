//! Oblique pinhole geometry: per-row ground footprint and the pixel size of
//! the physical safety radius.
//!
//! The camera sits `height_m` above a flat ground plane with its optical axis
//! tilted `tilt_deg` away from nadir. Rows are equally spaced on a planar
//! sensor whose vertical field of view spans the full image height.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violations};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraModel {
    pub height_m: f64,
    pub tilt_deg: f64,
    pub vfov_deg: f64,
    pub image_width_px: usize,
    pub image_height_px: usize,
}

impl Default for CameraModel {
    fn default() -> Self {
        CameraModel {
            height_m: 50.0,
            tilt_deg: 45.0,
            vfov_deg: 40.0,
            image_width_px: 1024,
            image_height_px: 576,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        let mut v = Violations::default();
        v.check(self.height_m.is_finite() && self.height_m > 0.0, || {
            format!("camera.height_m must be > 0 (got {})", self.height_m)
        });
        v.check(self.tilt_deg > 0.0 && self.tilt_deg < 90.0, || {
            format!("camera.tilt_deg must be in (0, 90) (got {})", self.tilt_deg)
        });
        v.check(self.vfov_deg > 0.0 && self.vfov_deg < 180.0, || {
            format!("camera.vfov_deg must be in (0, 180) (got {})", self.vfov_deg)
        });
        v.check(self.tilt_deg + self.vfov_deg / 2.0 < 90.0, || {
            format!(
                "camera.tilt_deg + vfov_deg/2 must be < 90 so every row hits the ground (got {})",
                self.tilt_deg + self.vfov_deg / 2.0
            )
        });
        v.check(self.tilt_deg >= self.vfov_deg / 2.0, || {
            format!(
                "camera.tilt_deg must be >= vfov_deg/2 so no row looks behind nadir (got tilt {} vfov {})",
                self.tilt_deg, self.vfov_deg
            )
        });
        v.check(self.image_width_px > 0 && self.image_height_px > 0, || {
            "camera image dimensions must be positive".to_string()
        });
        v.into_result()
    }

    /// Focal length in pixels.
    pub fn focal_px(&self) -> f64 {
        (self.image_height_px as f64 / 2.0) / (self.vfov_deg.to_radians() / 2.0).tan()
    }

    /// Angle from nadir (radians) of the ray through the horizontal pixel edge `edge`
    /// (0 = top of the image, `image_height_px` = bottom).
    fn edge_angle(&self, edge: f64) -> f64 {
        let offset = self.image_height_px as f64 / 2.0 - edge;
        self.tilt_deg.to_radians() + (offset / self.focal_px()).atan()
    }

    /// Horizontal ground distance from the nadir point to where the edge ray lands.
    fn edge_ground_distance(&self, edge: f64) -> f64 {
        self.height_m * self.edge_angle(edge).tan()
    }

    /// Ground size (meters/pixel along the view direction) of one row.
    pub fn ground_size_at_row(&self, row: usize) -> f64 {
        let r = row as f64;
        self.edge_ground_distance(r) - self.edge_ground_distance(r + 1.0)
    }
}

/// δ for every image row, top row first. Non-increasing from top to bottom.
pub fn ground_size_per_row(cam: &CameraModel) -> Result<Vec<f64>> {
    cam.validate()?;
    Ok((0..cam.image_height_px)
        .map(|row| cam.ground_size_at_row(row))
        .collect())
}

/// Physical safety radius and its safety coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SafetyRadiusConfig {
    pub radius_m: f64,
    pub beta: f64,
}

impl Default for SafetyRadiusConfig {
    fn default() -> Self {
        SafetyRadiusConfig {
            radius_m: 2.0,
            beta: 1.7,
        }
    }
}

impl SafetyRadiusConfig {
    pub fn validate(&self) -> Result<()> {
        let mut v = Violations::default();
        v.check(self.radius_m.is_finite() && self.radius_m > 0.0, || {
            format!("safety.radius_m must be > 0 (got {})", self.radius_m)
        });
        v.check(self.beta.is_finite() && self.beta >= 1.0, || {
            format!("safety.beta must be >= 1 (got {})", self.beta)
        });
        v.into_result()
    }
}

/// `ceil(β·R/δ)`, never below one pixel.
pub fn pixel_radius(cfg: &SafetyRadiusConfig, delta_m: f64) -> Result<usize> {
    if !(delta_m > 0.0 && delta_m.is_finite()) {
        return Err(Error::domain(format!(
            "ground size per pixel must be > 0 (got {delta_m})"
        )));
    }
    let exact = cfg.beta * cfg.radius_m / delta_m;
    // Absorb representation error such as 3.4 / 0.1 = 34.000000000000004.
    let px = (exact - 1e-9 * exact.max(1.0)).ceil();
    Ok((px as usize).max(1))
}

/// Ground radius actually protected by `radius_px` pixels when the true pixel size
/// is `delta_true_m`.
pub fn protected_ground_radius(radius_px: usize, delta_true_m: f64) -> f64 {
    radius_px as f64 * delta_true_m
}
