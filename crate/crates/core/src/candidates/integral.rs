//! Summed-area table over a binary mask.

use crate::labels::Rect;

/// `data[(y) * (w + 1) + x]` holds the count of set cells in `[0, x) × [0, y)`.
#[derive(Debug, Clone)]
pub struct SummedAreaTable {
    width: usize,
    height: usize,
    data: Vec<u32>,
}

impl SummedAreaTable {
    pub fn from_mask(width: usize, height: usize, mask: &[bool]) -> Self {
        assert_eq!(mask.len(), width * height);
        let stride = width + 1;
        let mut data = vec![0u32; stride * (height + 1)];
        for y in 0..height {
            let mut row_sum = 0u32;
            for x in 0..width {
                row_sum += mask[y * width + x] as u32;
                data[(y + 1) * stride + x + 1] = data[y * stride + x + 1] + row_sum;
            }
        }
        SummedAreaTable { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of set cells inside `r`. `r` must lie within the table.
    #[inline]
    pub fn sum(&self, r: Rect) -> u32 {
        let stride = self.width + 1;
        let (x0, y0, x1, y1) = (r.x, r.y, r.right(), r.bottom());
        debug_assert!(x1 <= self.width && y1 <= self.height);
        self.data[y1 * stride + x1] + self.data[y0 * stride + x0]
            - self.data[y0 * stride + x1]
            - self.data[y1 * stride + x0]
    }
}
