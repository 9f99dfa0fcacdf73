//! Applies each standard sensing fault to a rendered scene and shows both of
//! its faces: the pixel change in the RGB image and the extra label errors
//! it induces in the synthetic segmenter.
//!
//! Run with `cargo run --example perturbations [-- out_dir]` to also save the
//! perturbed images as PNG.

use std::path::PathBuf;

use elz::io::{write_rgb_png, RgbImage};
use elz::perturbation::{apply_raster, degradation, Perturbation, PerturbationSpec, Raster};
use elz::synth::{generate_core_grid, SynthConfig};
use elz::{Rect, Resolution, Segmenter, SegmenterSpec, SemanticMap, SyntheticSegmenter};

fn render(map: &SemanticMap) -> Raster {
    let mut img = Raster::filled(map.width(), map.height(), [0.0; 3]);
    for y in 0..map.height() {
        for x in 0..map.width() {
            img.set(x, y, map.get(x, y).color().map(|c| c as f32 / 255.0));
        }
    }
    img
}

fn to_rgb(r: &Raster) -> RgbImage {
    RgbImage {
        width: r.width(),
        height: r.height(),
        data: r.data().iter().map(|&v| (v * 255.0).round() as u8).collect(),
    }
}

fn main() -> elz::Result<()> {
    let out_dir = std::env::args().nth(1).map(PathBuf::from);
    let synth = SynthConfig {
        width: 512,
        height: 288,
        ..SynthConfig::default()
    };
    let core = generate_core_grid(&synth, 9, 0);
    let gt = core.upscale(synth.hd_scale);
    let clean = render(&core);

    println!("{:<16} {:>14} {:>16}", "perturbation", "mean |dRGB|", "low-res errors");
    for (i, p) in Perturbation::standard_grid(synth.width, synth.height)
        .into_iter()
        .enumerate()
    {
        let spec = PerturbationSpec::new(p, 9);
        let img = apply_raster(&clean, &spec)?;
        let diff = img
            .data()
            .iter()
            .zip(clean.data())
            .map(|(a, b)| (a - b).abs() as f64)
            .sum::<f64>()
            / clean.data().len() as f64;

        let seg = SyntheticSegmenter::new(SegmenterSpec::noisy(0.1, 9), &gt)?.with_degradation(degradation(
            &spec,
            synth.width,
            synth.height,
        ));
        let low = seg.segment_labels(Rect::full(synth.width, synth.height), Resolution::Low)?;
        let wrong = low.labels().iter().zip(core.labels()).filter(|(a, b)| a != b).count();
        println!(
            "{:<16} {diff:>14.4} {:>15.1}%",
            spec.name(),
            100.0 * wrong as f64 / core.labels().len() as f64
        );
        if let Some(dir) = &out_dir {
            write_rgb_png(&dir.join(format!("{i}_{}.png", p.slug())), &to_rgb(&img))?;
        }
    }
    Ok(())
}
