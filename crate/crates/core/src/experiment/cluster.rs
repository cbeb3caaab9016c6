//! Single-linkage clustering on the flat torus.

use std::collections::HashMap;

use petgraph::unionfind::UnionFind;

use crate::maps::TorusPoint;

/// Number of connected components of the graph joining points at toroidal
/// distance `< delta`.
///
/// Points are bucketed into square cells whose diagonal is shorter than
/// `delta`, so each cell is a clique; only pairs of distinct components in
/// nearby cells are compared point by point.
pub fn cluster_cp_points(points: &[TorusPoint], delta: f64) -> usize {
    if points.is_empty() {
        return 0;
    }
    if !(delta > 0.0) {
        return points.len();
    }
    let m = ((std::f64::consts::SQRT_2 / delta).floor() as u64).saturating_add(1);
    let cell_of = |p: &TorusPoint| {
        let cx = ((p.x * m as f64) as u64).min(m - 1);
        let cy = ((p.y * m as f64) as u64).min(m - 1);
        (cx, cy)
    };
    let mut cells: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        cells.entry(cell_of(p)).or_default().push(i);
    }

    let mut uf = UnionFind::<usize>::new(points.len());
    for members in cells.values() {
        for pair in members.windows(2) {
            uf.union(pair[0], pair[1]);
        }
    }

    let reach = (delta * m as f64).ceil() as i64;
    let m_i = m as i64;
    for (&(ax, ay), a) in &cells {
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                let b_key = (
                    (ax as i64 + dx).rem_euclid(m_i) as u64,
                    (ay as i64 + dy).rem_euclid(m_i) as u64,
                );
                if b_key <= (ax, ay) {
                    continue;
                }
                let Some(b) = cells.get(&b_key) else {
                    continue;
                };
                if uf.equiv(a[0], b[0]) {
                    continue;
                }
                'search: for &i in a {
                    for &j in b {
                        if points[i].distance(&points[j]) < delta {
                            uf.union(i, j);
                            break 'search;
                        }
                    }
                }
            }
        }
    }

    let mut roots: Vec<usize> = (0..points.len()).map(|i| uf.find_mut(i)).collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}
