//! Lloyd's K-means with k-means++ seeding over 2-D points.

use rand::Rng;

#[derive(Debug, Clone)]
pub struct KMeans {
    pub centroids: Vec<[f64; 2]>,
    /// Centroid index per point.
    pub assignment: Vec<usize>,
    /// Points per centroid.
    pub cell_sizes: Vec<usize>,
    pub iterations: usize,
}

#[inline]
fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    dx * dx + dy * dy
}

fn nearest(centroids: &[[f64; 2]], p: [f64; 2]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, &c) in centroids.iter().enumerate() {
        let d = dist2(c, p);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus_init<R: Rng>(points: &[[f64; 2]], k: usize, rng: &mut R) -> Vec<[f64; 2]> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|&p| dist2(p, centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            rng.random_range(0..points.len())
        } else {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = points.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target {
                    pick = i;
                    break;
                }
            }
            pick
        };
        let c = points[next];
        centroids.push(c);
        for (d, &p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, c));
        }
    }
    centroids
}

/// Clusters `points` into `k` groups. `tol` is relative to the mean per-axis variance.
pub fn kmeans<R: Rng>(points: &[[f64; 2]], k: usize, max_iter: usize, tol: f64, rng: &mut R) -> KMeans {
    assert!(!points.is_empty() && k >= 1 && k <= points.len());
    let n = points.len() as f64;
    let mean = points
        .iter()
        .fold([0.0, 0.0], |acc, p| [acc[0] + p[0] / n, acc[1] + p[1] / n]);
    if k == 1 {
        return KMeans {
            centroids: vec![mean],
            assignment: vec![0; points.len()],
            cell_sizes: vec![points.len()],
            iterations: 0,
        };
    }
    let var = points.iter().map(|&p| dist2(p, mean)).sum::<f64>() / (2.0 * n);
    let threshold = tol * var;

    let mut centroids = plus_plus_init(points, k, rng);
    let mut assignment = vec![0usize; points.len()];
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        for (a, &p) in assignment.iter_mut().zip(points) {
            *a = nearest(&centroids, p).0;
        }
        let mut sums = vec![[0.0f64; 2]; k];
        let mut counts = vec![0usize; k];
        for (&a, &p) in assignment.iter().zip(points) {
            sums[a][0] += p[0];
            sums[a][1] += p[1];
            counts[a] += 1;
        }
        let mut shift = 0.0;
        for j in 0..k {
            let updated = if counts[j] > 0 {
                [sums[j][0] / counts[j] as f64, sums[j][1] / counts[j] as f64]
            } else {
                // Reseed an empty cell at the point farthest from its centroid.
                let far = points
                    .iter()
                    .zip(&assignment)
                    .map(|(&p, &a)| dist2(p, centroids[a]))
                    .enumerate()
                    .fold((0, -1.0), |best, (i, d)| if d > best.1 { (i, d) } else { best })
                    .0;
                points[far]
            };
            shift += dist2(updated, centroids[j]);
            centroids[j] = updated;
        }
        if shift <= threshold {
            break;
        }
    }
    let mut cell_sizes = vec![0usize; k];
    for (a, &p) in assignment.iter_mut().zip(points) {
        *a = nearest(&centroids, p).0;
        cell_sizes[*a] += 1;
    }
    KMeans {
        centroids,
        assignment,
        cell_sizes,
        iterations,
    }
}
