//! Vortex detection in sampled wave functions by discrete phase winding.
//!
//! Every grid cell `(i, k) -> (i+1, k) -> (i+1, k+1) -> (i, k+1)` is traversed
//! counter-clockwise, summing the phase increments wrapped to `(-pi, pi]`; a
//! total of `2 pi w` marks a vortex of winding `w` at the cell centroid. The
//! polygon through the innermost ring covers the pole. Detections in
//! neighbouring cells are merged into one vortex with the summed winding.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::model::{ComplexField, PolarGrid, Vec2, VortexConfiguration};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectedVortices {
    pub positions: Vec<Vec2>,
    pub windings: Vec<i32>,
}

impl DetectedVortices {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn total_winding(&self) -> i32 {
        self.windings.iter().sum()
    }

    /// For each vortex of `reference`, the distance to the nearest detection
    /// of the same winding (`inf` if there is none).
    pub fn distances_to(&self, reference: &VortexConfiguration) -> Vec<f64> {
        reference
            .positions()
            .iter()
            .zip(reference.degrees())
            .map(|(a, d)| {
                self.positions
                    .iter()
                    .zip(&self.windings)
                    .filter(|(_, w)| **w == d.as_i32())
                    .map(|(p, _)| (*p - *a).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }
}

#[inline]
fn increment(a: Complex64, b: Complex64) -> f64 {
    (b * a.conj()).arg()
}

fn winding_of(total: f64) -> i32 {
    (total / (2.0 * PI)).round() as i32
}

/// Cell index used for the pole polygon.
const POLE: usize = usize::MAX;

pub fn localize_vortices(field: &ComplexField) -> DetectedVortices {
    let grid = *field.grid();
    let (nr, nt) = (grid.n_r(), grid.n_theta());
    let v = field.values();
    let at = |i: usize, k: usize| v[i * nt + k % nt];

    // (cell id, winding, centroid)
    let mut cells: Vec<(usize, i32, Vec2)> = Vec::new();
    let pole_total: f64 = (0..nt).map(|k| increment(at(0, k), at(0, k + 1))).sum();
    let w = winding_of(pole_total);
    if w != 0 {
        cells.push((POLE, w, Vec2::ZERO));
    }
    for i in 0..nr - 1 {
        for k in 0..nt {
            let total = increment(at(i, k), at(i + 1, k))
                + increment(at(i + 1, k), at(i + 1, k + 1))
                + increment(at(i + 1, k + 1), at(i, k + 1))
                + increment(at(i, k + 1), at(i, k));
            let w = winding_of(total);
            if w != 0 {
                let c = (grid.node(i, k) + grid.node(i + 1, k) + grid.node(i + 1, (k + 1) % nt)
                    + grid.node(i, (k + 1) % nt))
                    * 0.25;
                cells.push((i * nt + k, w, c));
            }
        }
    }
    merge(&grid, cells)
}

fn adjacent(grid: &PolarGrid, a: usize, b: usize) -> bool {
    let nt = grid.n_theta();
    match (a == POLE, b == POLE) {
        (true, true) => true,
        (true, false) => b / nt == 0,
        (false, true) => a / nt == 0,
        (false, false) => {
            let (ia, ka) = (a / nt, a % nt);
            let (ib, kb) = (b / nt, b % nt);
            let dk = (ka + nt - kb) % nt;
            ia.abs_diff(ib) <= 1 && (dk <= 1 || dk == nt - 1)
        }
    }
}

fn merge(grid: &PolarGrid, cells: Vec<(usize, i32, Vec2)>) -> DetectedVortices {
    let n = cells.len();
    let mut cluster: Vec<usize> = (0..n).collect();
    fn root(c: &mut [usize], mut x: usize) -> usize {
        while c[x] != x {
            c[x] = c[c[x]];
            x = c[x];
        }
        x
    }
    for a in 0..n {
        for b in a + 1..n {
            if adjacent(grid, cells[a].0, cells[b].0) {
                let (ra, rb) = (root(&mut cluster, a), root(&mut cluster, b));
                if ra != rb {
                    cluster[rb.max(ra)] = ra.min(rb);
                }
            }
        }
    }
    let mut out = DetectedVortices::default();
    for r in 0..n {
        if root(&mut cluster, r) != r {
            continue;
        }
        let mut winding = 0;
        let mut weight = 0.0;
        let mut pos = Vec2::ZERO;
        for (m, &(_, w, c)) in cells.iter().enumerate() {
            if root(&mut cluster, m) == r {
                winding += w;
                let wt = w.unsigned_abs() as f64;
                pos += c * wt;
                weight += wt;
            }
        }
        if winding != 0 {
            out.positions.push(pos * (1.0 / weight));
            out.windings.push(winding);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Degree;
    use crate::reconstruction::canonical_map;

    #[test]
    fn constant_has_no_vortices() {
        let g = PolarGrid::new(16, 32).unwrap();
        let d = localize_vortices(&ComplexField::constant(g, Complex64::new(1.0, 0.0)));
        assert!(d.is_empty());
    }

    #[test]
    fn centered_vortex_is_found_by_pole_loop() {
        let g = PolarGrid::new(16, 32).unwrap();
        let c = VortexConfiguration::from_triples(&[(0.0, 0.0, -1)]).unwrap();
        let d = localize_vortices(&canonical_map(&c, 16, &g).unwrap());
        assert_eq!(d.windings, vec![-1]);
        assert_eq!(d.positions, vec![Vec2::ZERO]);
    }

    #[test]
    fn finds_mixed_degrees() {
        let g = PolarGrid::new(64, 128).unwrap();
        let c = VortexConfiguration::from_triples(&[(0.3, 0.2, 1), (-0.4, -0.1, -1), (0.05, -0.6, 1)])
            .unwrap();
        let d = localize_vortices(&canonical_map(&c, 64, &g).unwrap());
        assert_eq!(d.len(), 3);
        assert_eq!(d.total_winding(), 1);
        for (dist, a) in d.distances_to(&c).iter().zip(c.positions()) {
            let ring = (a.norm() * 64.0) as usize;
            assert!(*dist <= g.cell_diameter(ring), "{dist}");
        }
    }

    #[test]
    fn distances_respect_winding() {
        let det = DetectedVortices { positions: vec![Vec2::new(0.1, 0.0)], windings: vec![1] };
        let c = VortexConfiguration::new(vec![Vec2::new(0.1, 0.0)], vec![Degree::Negative]).unwrap();
        assert_eq!(det.distances_to(&c), vec![f64::INFINITY]);
    }
}
