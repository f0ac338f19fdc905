//! Marching squares for `{u > level}` with the outside of the grid treated
//! as `-inf`, so every contour closes.

use std::collections::HashMap;

use crate::grid::GridField;

type Key = (i64, i64, u8);

/// Closed loops bounding `{u > level}`, inside on the left.
pub fn contour_loops(u: &GridField, level: f64) -> Vec<Vec<[f64; 2]>> {
    let g = &u.grid;
    let (nx, ny) = (g.n[0] as i64, g.n[1] as i64);
    let val = |i: i64, j: i64| -> f64 {
        if i < 0 || j < 0 || i >= nx || j >= ny {
            f64::NEG_INFINITY
        } else {
            u.values[(j * nx + i) as usize]
        }
    };
    let pos = |i: i64, j: i64| -> [f64; 2] {
        g.frame
            .to_physical([(g.offset[0] + i) as f64 * g.h, (g.offset[1] + j) as f64 * g.h])
    };
    let point = |a: (i64, i64), b: (i64, i64)| -> [f64; 2] {
        let (va, vb) = (val(a.0, a.1), val(b.0, b.1));
        let t = if va == f64::NEG_INFINITY {
            1.0
        } else if vb == f64::NEG_INFINITY {
            0.0
        } else {
            (level - va) / (vb - va)
        };
        let (pa, pb) = (pos(a.0, a.1), pos(b.0, b.1));
        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
    };
    let mut next: HashMap<Key, Key> = HashMap::new();
    let mut coords: HashMap<Key, [f64; 2]> = HashMap::new();
    for j in -1..ny {
        for i in -1..nx {
            let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let ins: Vec<bool> = c.iter().map(|&(a, b)| val(a, b) > level).collect();
            if ins.iter().all(|&x| x) || ins.iter().all(|&x| !x) {
                continue;
            }
            let keys: [Key; 4] = [(i, j, 0), (i + 1, j, 1), (i, j + 1, 0), (i, j, 1)];
            // crossings in counter-clockwise order; true = inside -> outside
            let mut cross: Vec<(usize, bool)> = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                if ins[a] != ins[b] {
                    cross.push((e, ins[a]));
                    coords.entry(keys[e]).or_insert_with(|| point(c[a], c[b]));
                }
            }
            let centre_inside = cross.len() == 4 && {
                let s: f64 = c.iter().map(|&(a, b)| val(a, b)).sum();
                0.25 * s > level
            };
            let m = cross.len();
            for k in 0..m {
                if !cross[k].1 {
                    continue;
                }
                let partner = if centre_inside {
                    (1..m).map(|d| (k + d) % m).find(|&q| !cross[q].1)
                } else {
                    (1..m).map(|d| (k + m - d) % m).find(|&q| !cross[q].1)
                };
                if let Some(q) = partner {
                    next.insert(keys[cross[k].0], keys[cross[q].0]);
                }
            }
        }
    }
    let mut loops = Vec::new();
    let mut starts: Vec<Key> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut seen = std::collections::HashSet::new();
    for s in starts {
        if seen.contains(&s) {
            continue;
        }
        let mut lp: Vec<[f64; 2]> = Vec::new();
        let mut k = s;
        loop {
            seen.insert(k);
            let p = coords[&k];
            if lp.last().is_none_or(|q: &[f64; 2]| *q != p) {
                lp.push(p);
            }
            match next.get(&k) {
                Some(&n) if n != s && !seen.contains(&n) => k = n,
                _ => break,
            }
        }
        while lp.len() > 1 && lp.first() == lp.last() {
            lp.pop();
        }
        if lp.len() >= 3 {
            loops.push(lp);
        }
    }
    loops
}
