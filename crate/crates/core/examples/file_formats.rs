//! Exports a synthetic scene in the on-disk formats the `elz` tool reads and
//! writes, loads it back as a precomputed segmenter, and checks that the
//! pipeline gives the same readouts from the files as from memory.
//!
//! Run with `cargo run --example file_formats [-- out_dir]`.

use std::path::PathBuf;

use elz::config::RunConfig;
use elz::evaluation::{evaluate_image, precomputed_dir, Readout};
use elz::io::{
    read_jsonl, read_label_map, sha256_file, write_jsonl, write_label_map, write_softmax, FileDigest, Manifest,
    PrecomputedSegmenter,
};
use elz::perturbation::PerturbationSpec;
use elz::synth::generate;
use elz::{Rect, Resolution, Segmenter, SyntheticSegmenter};

fn main() -> elz::Result<()> {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("elz_formats"));
    let mut cfg = RunConfig::default();
    cfg.camera.image_width_px = 256;
    cfg.camera.image_height_px = 144;
    cfg.synth.width = 256;
    cfg.synth.height = 144;
    cfg.paths.dataset_dir = root.join("dataset");
    let id = "scene";
    let none = PerturbationSpec::none();

    // Ground truth as an indexed PNG.
    let gt = generate(&cfg.synth, 1, 0)?;
    let gt_path = cfg.paths.dataset_dir.join("labels").join(format!("{id}.png"));
    write_label_map(&gt_path, &gt)?;
    assert_eq!(read_label_map(&gt_path)?, gt);

    // Segmenter outputs: labels as PNG, softmax tensors as ELSM files.
    let seg = SyntheticSegmenter::new(cfg.segmenter_for(id), &gt)?;
    let dir = precomputed_dir(&cfg, &none);
    for (res, tag) in [(Resolution::Low, "low"), (Resolution::High, "high")] {
        let (w, h) = seg.frame_size(res);
        let out = seg.segment(Rect::full(w, h), res, None)?;
        write_label_map(&dir.join(format!("{id}.{tag}.png")), &out.labels)?;
        write_softmax(&dir.join(format!("{id}.{tag}.elsm")), &out.softmax)?;
    }
    let (w, h) = seg.native_size();
    let passes = seg.mcd_passes(Rect::full(w, h), cfg.monitor.n_mcd, cfg.monitor.rho)?;
    for (k, p) in passes.iter().enumerate() {
        write_softmax(&dir.join(format!("{id}.mcd.{k}.elsm")), p)?;
    }

    let monitors = &cfg.evaluation.monitors;
    let direct = evaluate_image(&cfg, id, &gt, &none, &seg, monitors)?;
    let stored = PrecomputedSegmenter::load(&dir, id, cfg.segmenter.hd_scale)?;
    let replayed = evaluate_image(&cfg, id, &gt, &none, &stored, monitors)?;
    println!(
        "{} readouts from memory, {} from files, identical: {}",
        direct.len(),
        replayed.len(),
        direct == replayed
    );

    let readouts_path = root.join("readouts.jsonl");
    write_jsonl(&readouts_path, &replayed)?;
    let back: Vec<Readout> = read_jsonl(&readouts_path)?;
    assert_eq!(back, replayed);

    let mut manifest = Manifest::new("file_formats example", cfg.seed, &cfg.to_toml_string());
    manifest.inputs.push(FileDigest::of(&gt_path)?);
    manifest.outputs.push(FileDigest::of(&readouts_path)?);
    manifest.write(&root.join("manifest.json"))?;
    println!("readouts sha256 {}", sha256_file(&readouts_path)?);
    println!("files under {}", root.display());
    Ok(())
}
