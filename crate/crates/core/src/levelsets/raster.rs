//! Exact Euclidean distance transform and raster Hausdorff distances.

use crate::par;

const INF: f64 = 1e30;

/// Squared distance transform of a sampled function along one line.
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared pixel distance from every pixel to the nearest `true` pixel
/// (row-major, `nx` by `ny`); `None` when the mask is empty.
pub fn distance_transform(mask: &[bool], nx: usize, ny: usize) -> Option<Vec<f64>> {
    if !mask.iter().any(|&m| m) {
        return None;
    }
    let mut cols = vec![0.0; nx * ny];
    // pass along y for every column (stored column-major)
    par::for_each_chunk(&mut cols, ny, |i, col| {
        let f: Vec<f64> = (0..ny).map(|j| if mask[j * nx + i] { 0.0 } else { INF }).collect();
        let mut v = vec![0usize; ny];
        let mut z = vec![0.0; ny + 1];
        edt_1d(&f, col, &mut v, &mut z);
    });
    let mut out = vec![0.0; nx * ny];
    let cols = &cols;
    par::for_each_chunk(&mut out, nx, |j, row| {
        let f: Vec<f64> = (0..nx).map(|i| cols[i * ny + j]).collect();
        let mut v = vec![0usize; nx];
        let mut z = vec![0.0; nx + 1];
        edt_1d(&f, row, &mut v, &mut z);
    });
    Some(out)
}

/// Pixel centres of an `n` by `n` raster over `[lo, hi]`.
pub fn raster_points(lo: [f64; 2], hi: [f64; 2], n: usize) -> Vec<[f64; 2]> {
    let dx = (hi[0] - lo[0]) / n as f64;
    let dy = (hi[1] - lo[1]) / n as f64;
    (0..n * n)
        .map(|k| [lo[0] + ((k % n) as f64 + 0.5) * dx, lo[1] + ((k / n) as f64 + 0.5) * dy])
        .collect()
}

/// Hausdorff distance between two sets given by membership tests, both
/// restricted to the window `[lo, hi]` and rasterized on `n` by `n` pixels.
/// Requires a square pixel (equal window sides).
pub fn raster_hausdorff<A, B>(a: A, b: B, lo: [f64; 2], hi: [f64; 2], n: usize) -> f64
where
    A: Fn([f64; 2]) -> bool + Sync,
    B: Fn([f64; 2]) -> bool + Sync,
{
    let pts = raster_points(lo, hi, n);
    let ma = par::map_slice(&pts, |p| a(*p));
    let mb = par::map_slice(&pts, |p| b(*p));
    raster_hausdorff_masks(&ma, &mb, n, (hi[0] - lo[0]) / n as f64)
}

/// Hausdorff distance between two `n` by `n` masks with pixel size `px`.
pub fn raster_hausdorff_masks(ma: &[bool], mb: &[bool], n: usize, px: f64) -> f64 {
    let (da, db) = (distance_transform(ma, n, n), distance_transform(mb, n, n));
    match (da, db) {
        (None, None) => 0.0,
        (None, _) | (_, None) => f64::INFINITY,
        (Some(da), Some(db)) => {
            let dir = |m: &[bool], d: &[f64]| {
                par::max_range(m.len(), |k| if m[k] { d[k] } else { 0.0 })
            };
            px * dir(ma, &db).max(dir(mb, &da)).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_matches_brute_force() {
        let (nx, ny) = (13, 9);
        let mask: Vec<bool> = (0..nx * ny).map(|k| (k * 37) % 11 == 0).collect();
        let d = distance_transform(&mask, nx, ny).unwrap();
        for k in 0..nx * ny {
            let (i, j) = ((k % nx) as f64, (k / nx) as f64);
            let brute = (0..nx * ny)
                .filter(|&q| mask[q])
                .map(|q| ((q % nx) as f64 - i).powi(2) + ((q / nx) as f64 - j).powi(2))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(d[k], brute);
        }
        assert!(distance_transform(&[false; 4], 2, 2).is_none());
    }

    #[test]
    fn concentric_disks() {
        let a = |p: [f64; 2]| p[0] * p[0] + p[1] * p[1] < 1.0;
        let b = |p: [f64; 2]| p[0] * p[0] + p[1] * p[1] < 4.0;
        let d = raster_hausdorff(a, b, [-3.0, -3.0], [3.0, 3.0], 600);
        assert!((d - 1.0).abs() < 0.02, "{d}");
        assert_eq!(raster_hausdorff(|_| false, |_| false, [0.0, 0.0], [1.0, 1.0], 8), 0.0);
        assert!(raster_hausdorff(a, |_| false, [-1.0, -1.0], [1.0, 1.0], 8).is_infinite());
    }
}
