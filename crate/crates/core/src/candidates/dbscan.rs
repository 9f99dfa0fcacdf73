//! DBSCAN over integer pixel coordinates.
//!
//! Neighbourhoods are enumerated from a fixed stencil of integer offsets within
//! `eps`, looked up in a dense index grid over the points' bounding box, so a
//! full run is `O(n · |stencil|)`.
//!
//! The neighbour count includes the point itself. Points are visited in input
//! order and each cluster is expanded completely before the next one starts,
//! so a border point reachable from several clusters joins the earliest one.

use std::collections::VecDeque;

use super::Pixel;

const EMPTY: u32 = u32::MAX;

/// Result of [`cluster_candidates`]: every point belongs to exactly one cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    /// Cluster index per input point.
    pub labels: Vec<usize>,
    pub n_clusters: usize,
    /// How many of the clusters are promoted noise singletons (they come last).
    pub n_noise_promoted: usize,
}

impl Clustering {
    /// Point indices per cluster, in input order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters];
        for (i, &c) in self.labels.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

fn stencil(eps: f64) -> Vec<(i64, i64)> {
    let r = eps.floor() as i64;
    let lim = eps * eps + 1e-9;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if ((dx * dx + dy * dy) as f64) <= lim {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Plain DBSCAN labels: `Some(cluster)` or `None` for noise. Points must be distinct.
pub fn dbscan(points: &[Pixel], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    if points.is_empty() {
        return Vec::new();
    }
    let min_x = points.iter().map(|p| p.x).min().unwrap() as i64;
    let min_y = points.iter().map(|p| p.y).min().unwrap() as i64;
    let max_x = points.iter().map(|p| p.x).max().unwrap() as i64;
    let max_y = points.iter().map(|p| p.y).max().unwrap() as i64;
    let (gw, gh) = (max_x - min_x + 1, max_y - min_y + 1);
    let mut grid = vec![EMPTY; (gw * gh) as usize];
    for (i, p) in points.iter().enumerate() {
        let cell = ((p.y as i64 - min_y) * gw + (p.x as i64 - min_x)) as usize;
        debug_assert_eq!(grid[cell], EMPTY, "duplicate point {p:?}");
        grid[cell] = i as u32;
    }
    let offsets = stencil(eps);

    let neighbours = |i: usize, out: &mut Vec<usize>| {
        out.clear();
        let (px, py) = (points[i].x as i64 - min_x, points[i].y as i64 - min_y);
        for &(dx, dy) in &offsets {
            let (x, y) = (px + dx, py + dy);
            if x < 0 || y < 0 || x >= gw || y >= gh {
                continue;
            }
            let j = grid[(y * gw + x) as usize];
            if j != EMPTY {
                out.push(j as usize);
            }
        }
    };

    let n = points.len();
    let mut is_core = vec![false; n];
    let mut buf = Vec::with_capacity(offsets.len());
    for (i, core) in is_core.iter_mut().enumerate() {
        neighbours(i, &mut buf);
        *core = buf.len() >= min_pts;
    }

    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut queue = VecDeque::new();
    let mut n_clusters = 0;
    for start in 0..n {
        if labels[start].is_some() || !is_core[start] {
            continue;
        }
        let c = n_clusters;
        n_clusters += 1;
        labels[start] = Some(c);
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            neighbours(p, &mut buf);
            for &q in &buf {
                if labels[q].is_none() {
                    labels[q] = Some(c);
                    if is_core[q] {
                        queue.push_back(q);
                    }
                }
            }
        }
    }
    labels
}

/// DBSCAN with noise points promoted to singleton clusters.
pub fn cluster_candidates(points: &[Pixel], eps: f64, min_pts: usize) -> Clustering {
    let raw = dbscan(points, eps, min_pts);
    let mut n_clusters = raw.iter().flatten().map(|&c| c + 1).max().unwrap_or(0);
    let dense = n_clusters;
    let labels = raw
        .into_iter()
        .map(|l| {
            l.unwrap_or_else(|| {
                n_clusters += 1;
                n_clusters - 1
            })
        })
        .collect();
    Clustering {
        labels,
        n_clusters,
        n_noise_promoted: n_clusters - dense,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn px(x: u32, y: u32) -> Pixel {
        Pixel { x, y }
    }

    #[test]
    fn stencil_radius_three_has_29_offsets() {
        assert_eq!(stencil(3.0).len(), 29);
    }

    #[test]
    fn separated_blobs_form_two_clusters() {
        let mut pts = Vec::new();
        for (ox, oy) in [(10, 10), (110, 10)] {
            for i in 0..10u32 {
                pts.push(px(ox + i % 5, oy + i / 5));
            }
        }
        let c = cluster_candidates(&pts, 3.0, 4);
        assert_eq!(c.n_clusters, 2);
        assert!(c.labels[..10].iter().all(|&l| l == c.labels[0]));
        assert!(c.labels[10..].iter().all(|&l| l == c.labels[10]));
        assert_ne!(c.labels[0], c.labels[10]);
    }

    #[test]
    fn filled_rectangle_is_one_cluster() {
        let pts: Vec<_> = (0..20u32).flat_map(|y| (0..30u32).map(move |x| px(x, y))).collect();
        assert_eq!(cluster_candidates(&pts, 3.0, 4).n_clusters, 1);
    }

    #[test]
    fn isolated_points_become_singletons() {
        let pts = vec![px(0, 0), px(50, 50), px(100, 0)];
        let c = cluster_candidates(&pts, 3.0, 4);
        assert_eq!(c.n_clusters, 3);
        assert_eq!(c.n_noise_promoted, 3);
        assert_eq!(c.labels, vec![0, 1, 2]);
    }

    #[test]
    fn border_point_joins_first_cluster() {
        // Two dense columns with a shared border point between them.
        let mut pts = Vec::new();
        for y in 0..6 {
            pts.push(px(0, y));
        }
        for y in 0..6 {
            pts.push(px(6, y));
        }
        pts.push(px(3, 0));
        let c = dbscan(&pts, 3.0, 4);
        assert_eq!(c[12], c[0]);
        assert_ne!(c[0], c[6]);
    }
}
