//! Label maps as PNG files.
//!
//! Written as 8-bit indexed images whose palette lists the eight category
//! colors in alphabetical category order, so the palette index is the
//! category id. Reading also accepts indexed images of lower bit depth,
//! 8-bit grayscale (value = category id) and 8-bit RGB/RGBA whose colors
//! match the palette exactly.

use std::io::Cursor;
use std::path::Path;

use png::{BitDepth, ColorType, Transformations};

use super::{read_bytes, write_bytes};
use crate::error::{Error, Result};
use crate::labels::{CategoryId, SemanticMap, NUM_CATEGORIES};

fn png_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Png {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn encode_label_map(map: &SemanticMap) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, map.width() as u32, map.height() as u32);
        enc.set_color(ColorType::Indexed);
        enc.set_depth(BitDepth::Eight);
        let palette: Vec<u8> = CategoryId::ALL.iter().flat_map(|c| c.color()).collect();
        enc.set_palette(palette);
        let mut w = enc.write_header().map_err(|e| png_err(Path::new("<memory>"), e))?;
        let data: Vec<u8> = map.labels().iter().map(|&c| c as u8).collect();
        w.write_image_data(&data)
            .map_err(|e| png_err(Path::new("<memory>"), e))?;
    }
    Ok(out)
}

pub fn write_label_map(path: &Path, map: &SemanticMap) -> Result<()> {
    write_bytes(path, &encode_label_map(map)?)
}

pub fn read_label_map(path: &Path) -> Result<SemanticMap> {
    decode_label_map(&read_bytes(path)?).map_err(|e| match e {
        Error::Png { message, .. } => Error::Png {
            path: path.to_path_buf(),
            message,
        },
        Error::Parse { offset, message, .. } => Error::Parse {
            path: path.to_path_buf(),
            offset,
            message,
        },
        other => other,
    })
}

fn unpack(row: &[u8], depth: u8, width: usize) -> Vec<u8> {
    if depth == 8 {
        return row[..width].to_vec();
    }
    let per_byte = 8 / depth as usize;
    let mask = (1u8 << depth) - 1;
    (0..width)
        .map(|i| {
            let byte = row[i / per_byte];
            let shift = 8 - depth as usize * (i % per_byte + 1);
            (byte >> shift) & mask
        })
        .collect()
}

pub fn decode_label_map(bytes: &[u8]) -> Result<SemanticMap> {
    let here = Path::new("<memory>");
    let mut dec = png::Decoder::new(Cursor::new(bytes));
    dec.set_transformations(Transformations::IDENTITY);
    let mut reader = dec.read_info().map_err(|e| png_err(here, e))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| png_err(here, "image too large"))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(|e| png_err(here, e))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let depth = match info.bit_depth {
        BitDepth::One => 1,
        BitDepth::Two => 2,
        BitDepth::Four => 4,
        BitDepth::Eight => 8,
        BitDepth::Sixteen => {
            return Err(png_err(here, "16-bit label maps are not supported"));
        }
    };

    let palette_colors: Vec<[u8; 3]> = CategoryId::ALL.iter().map(|c| c.color()).collect();
    let by_color = |rgb: [u8; 3], offset: usize| -> Result<CategoryId> {
        palette_colors
            .iter()
            .position(|&c| c == rgb)
            .map(|i| CategoryId::ALL[i])
            .ok_or_else(|| Error::Parse {
                path: here.to_path_buf(),
                offset: offset as u64,
                message: format!("color {rgb:?} is not in the category palette"),
            })
    };

    let mut labels = Vec::with_capacity(w * h);
    match info.color_type {
        ColorType::Indexed | ColorType::Grayscale => {
            // Indexed files written by other tools may order their palette differently;
            // map each palette entry to a category by color when a palette is present.
            let remap: Option<Vec<Result<CategoryId>>> = if info.color_type == ColorType::Indexed {
                let pal = reader.info().palette.as_ref().map(|p| p.to_vec()).unwrap_or_default();
                Some(
                    pal.chunks_exact(3)
                        .enumerate()
                        .map(|(i, c)| by_color([c[0], c[1], c[2]], i * 3))
                        .collect(),
                )
            } else {
                None
            };
            for y in 0..h {
                let row = unpack(&buf[y * info.line_size..(y + 1) * info.line_size], depth, w);
                for (x, &v) in row.iter().enumerate() {
                    let cat = match &remap {
                        Some(table) => match table.get(v as usize) {
                            Some(Ok(c)) => *c,
                            _ => {
                                return Err(Error::Parse {
                                    path: here.to_path_buf(),
                                    offset: (y * info.line_size + x) as u64,
                                    message: format!("palette index {v} at ({x}, {y}) is not a category"),
                                })
                            }
                        },
                        None if (v as usize) < NUM_CATEGORIES => CategoryId::ALL[v as usize],
                        None => {
                            return Err(Error::Parse {
                                path: here.to_path_buf(),
                                offset: (y * info.line_size + x) as u64,
                                message: format!("gray value {v} at ({x}, {y}) is not a category id"),
                            })
                        }
                    };
                    labels.push(cat);
                }
            }
        }
        ColorType::Rgb | ColorType::Rgba if depth == 8 => {
            let ch = if info.color_type == ColorType::Rgb { 3 } else { 4 };
            for y in 0..h {
                for x in 0..w {
                    let i = y * info.line_size + x * ch;
                    labels.push(by_color([buf[i], buf[i + 1], buf[i + 2]], i)?);
                }
            }
        }
        other => {
            return Err(png_err(here, format!("unsupported label map color type {other:?}")));
        }
    }
    SemanticMap::from_labels(w, h, labels)
}
