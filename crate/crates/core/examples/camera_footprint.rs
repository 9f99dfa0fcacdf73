//! Ground footprint of each image row and the pixel safety radius of each
//! candidate stripe for the default oblique camera.
//!
//! Run with `cargo run --example camera_footprint`.

use elz::camera::{ground_size_per_row, pixel_radius, protected_ground_radius};
use elz::candidates::{CandidateConfig, StripeLayout};
use elz::{CameraModel, SafetyRadiusConfig};

fn main() -> elz::Result<()> {
    let cam = CameraModel::default();
    let safety = SafetyRadiusConfig::default();
    let delta = ground_size_per_row(&cam)?;

    println!(
        "camera: {} m up, tilted {} deg, vertical FOV {} deg, {}x{} px",
        cam.height_m, cam.tilt_deg, cam.vfov_deg, cam.image_width_px, cam.image_height_px
    );
    println!("{:>6}  {:>12}  {:>10}", "row", "ground m/px", "radius px");
    for row in (0..cam.image_height_px).step_by(64).chain([cam.image_height_px - 1]) {
        println!(
            "{row:>6}  {:>12.4}  {:>10}",
            delta[row],
            pixel_radius(&safety, delta[row])?
        );
    }

    let layout = StripeLayout::new(&cam, &safety, &CandidateConfig::default())?;
    println!("\nstripes searched for candidates (the top ones are dropped):");
    for s in &layout.stripes {
        // Rows nearer the camera have smaller pixels, so they bound the protection.
        let worst = s.rows.clone().map(|r| delta[r]).fold(f64::INFINITY, f64::min);
        println!(
            "  rows {:>3}..{:<3} radius {:>3} px  protects >= {:.2} m (target {} m)",
            s.rows.start,
            s.rows.end,
            s.radius_px,
            protected_ground_radius(s.radius_px, worst),
            safety.radius_m
        );
    }
    Ok(())
}
