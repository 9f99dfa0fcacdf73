//! Diagnostic overlays: the label map dimmed under candidate circles colored
//! by monitor verdict, rank numbers, the default-action box and a legend.

use std::path::Path;

use png::{BitDepth, ColorType};

use super::write_bytes;
use crate::error::{Error, Result};
use crate::labels::{Rect, SemanticMap};

/// 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize) -> Self {
        RgbImage {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Sets a pixel; coordinates outside the image are ignored.
    pub fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return;
        }
        let i = 3 * (y as usize * self.width + x as usize);
        self.data[i..i + 3].copy_from_slice(&c);
    }

    fn fill_rect(&mut self, x: i64, y: i64, w: i64, h: i64, c: [u8; 3]) {
        for yy in y..y + h {
            for xx in x..x + w {
                self.put(xx, yy, c);
            }
        }
    }

    fn outline_rect(&mut self, r: Rect, thickness: i64, c: [u8; 3]) {
        let (x0, y0) = (r.x as i64, r.y as i64);
        let (x1, y1) = (r.right() as i64 - 1, r.bottom() as i64 - 1);
        for t in 0..thickness {
            for x in x0..=x1 {
                self.put(x, y0 + t, c);
                self.put(x, y1 - t, c);
            }
            for y in y0..=y1 {
                self.put(x0 + t, y, c);
                self.put(x1 - t, y, c);
            }
        }
    }

    /// Ring of the given radius drawn with midpoint steps at every angle.
    fn circle(&mut self, cx: i64, cy: i64, r: i64, thickness: i64, c: [u8; 3]) {
        for rr in (r - thickness + 1).max(0)..=r {
            let mut x = rr;
            let mut y = 0;
            let mut err = 1 - rr;
            while x >= y {
                for (dx, dy) in [(x, y), (y, x), (-y, x), (-x, y), (-x, -y), (-y, -x), (y, -x), (x, -y)] {
                    self.put(cx + dx, cy + dy, c);
                }
                y += 1;
                if err < 0 {
                    err += 2 * y + 1;
                } else {
                    x -= 1;
                    err += 2 * (y - x) + 1;
                }
            }
        }
    }

    fn text(&mut self, x: i64, y: i64, s: &str, scale: i64, c: [u8; 3]) {
        for (k, ch) in s.chars().enumerate() {
            let rows = glyph(ch);
            let ox = x + k as i64 * 4 * scale;
            for (ry, bits) in rows.iter().enumerate() {
                for rx in 0..3 {
                    if bits & (0b100 >> rx) != 0 {
                        self.fill_rect(ox + rx * scale, y + ry as i64 * scale, scale, scale, c);
                    }
                }
            }
        }
    }
}

/// 3x5 bitmap glyphs; unknown characters render blank.
fn glyph(c: char) -> [u8; 5] {
    match c {
        '0' => [0b111, 0b101, 0b101, 0b101, 0b111],
        '1' => [0b010, 0b110, 0b010, 0b010, 0b111],
        '2' => [0b111, 0b001, 0b111, 0b100, 0b111],
        '3' => [0b111, 0b001, 0b111, 0b001, 0b111],
        '4' => [0b101, 0b101, 0b111, 0b001, 0b001],
        '5' => [0b111, 0b100, 0b111, 0b001, 0b111],
        '6' => [0b111, 0b100, 0b111, 0b101, 0b111],
        '7' => [0b111, 0b001, 0b010, 0b010, 0b010],
        '8' => [0b111, 0b101, 0b111, 0b101, 0b111],
        '9' => [0b111, 0b101, 0b111, 0b001, 0b111],
        'A' => [0b010, 0b101, 0b111, 0b101, 0b101],
        'C' => [0b111, 0b100, 0b100, 0b100, 0b111],
        'D' => [0b110, 0b101, 0b101, 0b101, 0b110],
        'E' => [0b111, 0b100, 0b110, 0b100, 0b111],
        'F' => [0b111, 0b100, 0b110, 0b100, 0b100],
        'I' => [0b111, 0b010, 0b010, 0b010, 0b111],
        'J' => [0b001, 0b001, 0b001, 0b101, 0b111],
        'L' => [0b100, 0b100, 0b100, 0b100, 0b111],
        'M' => [0b101, 0b111, 0b111, 0b101, 0b101],
        'N' => [0b110, 0b101, 0b101, 0b101, 0b101],
        'O' => [0b111, 0b101, 0b101, 0b101, 0b111],
        'P' => [0b111, 0b101, 0b111, 0b100, 0b100],
        'R' => [0b110, 0b101, 0b110, 0b101, 0b101],
        'T' => [0b111, 0b010, 0b010, 0b010, 0b010],
        'U' => [0b101, 0b101, 0b101, 0b101, 0b111],
        _ => [0; 5],
    }
}

/// How a candidate fared with the monitor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlayStatus {
    Accepted,
    Rejected,
    /// Ranked but never submitted to the monitor.
    Unmonitored,
}

impl OverlayStatus {
    pub fn color(self) -> [u8; 3] {
        match self {
            OverlayStatus::Accepted => [40, 220, 40],
            OverlayStatus::Rejected => [230, 30, 30],
            OverlayStatus::Unmonitored => [240, 220, 40],
        }
    }
}

const DEFAULT_COLOR: [u8; 3] = [40, 120, 255];

/// One candidate to draw, in low-resolution frame pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverlayMark {
    pub x: usize,
    pub y: usize,
    pub radius_px: usize,
    /// 1-based hazard rank, drawn next to the circle when set.
    pub rank: Option<usize>,
    pub status: OverlayStatus,
}

/// Renders candidates over a dimmed label map.
pub fn render_overlay(labels: &SemanticMap, marks: &[OverlayMark], default_region: Option<Rect>) -> RgbImage {
    let (w, h) = (labels.width(), labels.height());
    let mut img = RgbImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let [r, g, b] = labels.get(x, y).color();
            img.put(x as i64, y as i64, [r / 2 + 32, g / 2 + 32, b / 2 + 32]);
        }
    }
    let thickness = (w.min(h) / 300).max(1) as i64;
    let scale = (w.min(h) / 200).max(1) as i64;
    if let Some(r) = default_region {
        img.outline_rect(r, thickness, DEFAULT_COLOR);
    }
    for m in marks {
        let (cx, cy, r) = (m.x as i64, m.y as i64, m.radius_px.max(1) as i64);
        img.circle(cx, cy, r, thickness, m.status.color());
        img.fill_rect(
            cx - thickness,
            cy - thickness,
            2 * thickness + 1,
            2 * thickness + 1,
            m.status.color(),
        );
        if let Some(rank) = m.rank {
            img.text(cx + r + 2, cy - r, &rank.to_string(), scale, [255, 255, 255]);
        }
    }
    let entries = [
        ("ACCEPTED", OverlayStatus::Accepted.color()),
        ("REJECTED", OverlayStatus::Rejected.color()),
        ("UNMONITORED", OverlayStatus::Unmonitored.color()),
        ("DEFAULT", DEFAULT_COLOR),
    ];
    let line = 7 * scale;
    img.fill_rect(0, 0, 4 * scale * 14, line * entries.len() as i64 + 2 * scale, [0, 0, 0]);
    for (i, (name, color)) in entries.iter().enumerate() {
        let y = scale + i as i64 * line;
        img.fill_rect(scale, y, 5 * scale, 5 * scale, *color);
        img.text(8 * scale, y, name, scale, [255, 255, 255]);
    }
    img
}

pub fn write_rgb_png(path: &Path, img: &RgbImage) -> Result<()> {
    let png_err = |e: png::EncodingError| Error::Png {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width as u32, img.height as u32);
        enc.set_color(ColorType::Rgb);
        enc.set_depth(BitDepth::Eight);
        let mut w = enc.write_header().map_err(png_err)?;
        w.write_image_data(&img.data).map_err(png_err)?;
    }
    write_bytes(path, &out)
}

/// Reads any 8- or 16-bit PNG as 8-bit RGB; alpha is dropped, gray is replicated.
pub fn read_rgb_png(path: &Path) -> Result<RgbImage> {
    let png_err = |e: png::DecodingError| Error::Png {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let bytes = super::read_bytes(path)?;
    let mut dec = png::Decoder::new(std::io::Cursor::new(bytes));
    dec.set_transformations(png::Transformations::normalize_to_color8());
    let mut reader = dec.read_info().map_err(png_err)?;
    let size = reader.output_buffer_size().ok_or_else(|| Error::Png {
        path: path.to_path_buf(),
        message: "image too large".into(),
    })?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let ch = match info.color_type {
        ColorType::Grayscale => 1,
        ColorType::GrayscaleAlpha => 2,
        ColorType::Rgb => 3,
        ColorType::Rgba => 4,
        ColorType::Indexed => {
            return Err(Error::Png {
                path: path.to_path_buf(),
                message: "palette was not expanded".into(),
            })
        }
    };
    let mut img = RgbImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let i = y * info.line_size + x * ch;
            let c = if ch < 3 {
                [buf[i]; 3]
            } else {
                [buf[i], buf[i + 1], buf[i + 2]]
            };
            img.put(x as i64, y as i64, c);
        }
    }
    Ok(img)
}
