//! Domain types shared across the crate: vortex configurations, the polar
//! grid over the unit disk, and sampled fields.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A point or 2-vector in Cartesian coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Applies the symplectic matrix `[[0, 1], [-1, 0]]`.
    #[inline]
    pub fn symplectic(self) -> Vec2 {
        Vec2::new(self.y, -self.x)
    }

    /// Rotates counterclockwise by `angle`.
    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    #[inline]
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// Degree (winding number) of a single vortex. Only a single quantum of
/// vorticity is supported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Degree {
    Positive,
    Negative,
}

impl Degree {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Degree::Positive => 1.0,
            Degree::Negative => -1.0,
        }
    }

    #[inline]
    pub fn as_i32(self) -> i32 {
        match self {
            Degree::Positive => 1,
            Degree::Negative => -1,
        }
    }
}

impl TryFrom<i64> for Degree {
    type Error = Error;

    fn try_from(d: i64) -> Result<Self> {
        match d {
            1 => Ok(Degree::Positive),
            -1 => Ok(Degree::Negative),
            other => Err(Error::InvalidConfig(format!(
                "vortex degree must be +1 or -1, got {other}"
            ))),
        }
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i32())
    }
}

/// Positions of N vortices inside the open unit disk together with their
/// degrees.
#[derive(Clone, Debug, PartialEq)]
pub struct VortexConfiguration {
    positions: Vec<Vec2>,
    degrees: Vec<Degree>,
}

impl VortexConfiguration {
    pub fn new(positions: Vec<Vec2>, degrees: Vec<Degree>) -> Result<Self> {
        if positions.len() != degrees.len() {
            return Err(Error::InvalidConfig(format!(
                "{} positions but {} degrees",
                positions.len(),
                degrees.len()
            )));
        }
        for (j, p) in positions.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidConfig(format!("vortex {j} has a non-finite position")));
            }
            if p.norm() >= 1.0 {
                return Err(Error::InvalidConfig(format!(
                    "vortex {j} at ({}, {}) is not inside the open unit disk",
                    p.x, p.y
                )));
            }
        }
        for i in 0..positions.len() {
            for j in i + 1..positions.len() {
                if positions[i] == positions[j] {
                    return Err(Error::InvalidConfig(format!(
                        "vortices {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(VortexConfiguration { positions, degrees })
    }

    /// Builds a configuration from `(x, y, degree)` triples.
    pub fn from_triples(triples: &[(f64, f64, i64)]) -> Result<Self> {
        let positions = triples.iter().map(|&(x, y, _)| Vec2::new(x, y)).collect();
        let degrees = triples
            .iter()
            .map(|&(_, _, d)| Degree::try_from(d))
            .collect::<Result<Vec<_>>>()?;
        Self::new(positions, degrees)
    }

    /// Same degrees, new positions.
    pub fn with_positions(&self, positions: Vec<Vec2>) -> Result<Self> {
        Self::new(positions, self.degrees.clone())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    pub fn degrees(&self) -> &[Degree] {
        &self.degrees
    }

    pub fn total_degree(&self) -> i32 {
        self.degrees.iter().map(|d| d.as_i32()).sum()
    }

    pub fn separation(&self) -> Separation {
        separation_of(&self.positions)
    }
}

/// Which term attains the minimum in the separation functional.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Limiter {
    /// Pairwise distance between two vortices.
    Pair(usize, usize),
    /// Distance of one vortex to the unit circle.
    Boundary(usize),
    /// Empty configuration.
    None,
}

/// Quarter of the minimum over pairwise vortex distances and distances to the
/// unit circle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Separation {
    pub rho: f64,
    pub limiter: Limiter,
}

/// Separation of a configuration.
pub fn separation(config: &VortexConfiguration) -> Separation {
    separation_of(config.positions())
}

/// Separation of raw positions. Positions outside the disk yield a negative
/// boundary term.
pub fn separation_of(positions: &[Vec2]) -> Separation {
    let mut best = f64::INFINITY;
    let mut limiter = Limiter::None;
    for (j, p) in positions.iter().enumerate() {
        let d = 1.0 - p.norm();
        if d < best {
            best = d;
            limiter = Limiter::Boundary(j);
        }
    }
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            let d = (positions[i] - positions[j]).norm();
            if d < best {
                best = d;
                limiter = Limiter::Pair(i, j);
            }
        }
    }
    Separation {
        rho: 0.25 * best,
        limiter,
    }
}

/// Distance between the Dirac measures `pi * sum d_j delta_{a_j}` and
/// `pi * sum d_j delta_{b_j}` in the dual Lipschitz norm, valid while every
/// vortex has moved by at most the separation of `a`.
pub fn dirac_w11_distance(a: &VortexConfiguration, b: &VortexConfiguration) -> Result<f64> {
    if a.degrees() != b.degrees() {
        return Err(Error::InvalidConfig(
            "configurations have different degree lists".into(),
        ));
    }
    let rho = a.separation().rho;
    let mut total = 0.0;
    for (j, (pa, pb)) in a.positions().iter().zip(b.positions()).enumerate() {
        let displacement = (*pa - *pb).norm();
        if displacement > rho {
            return Err(Error::PairingInvalid {
                index: j,
                displacement,
                rho,
            });
        }
        total += displacement;
    }
    Ok(PI * total)
}

/// Cell-centered polar grid over the unit disk.
///
/// Radii are `r_i = (i + 1/2) / n_r` and angles `theta_k = 2 pi k / n_theta`.
/// Nodes are stored radial-major: all angles of ring 0, then ring 1, ...
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PolarGrid {
    n_r: usize,
    n_theta: usize,
}

impl PolarGrid {
    pub fn new(n_r: usize, n_theta: usize) -> Result<Self> {
        if n_r < 2 {
            return Err(Error::InvalidParams(format!("n_r must be >= 2, got {n_r}")));
        }
        if n_theta < 4 || !n_theta.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!(
                "n_theta must be even and >= 4, got {n_theta}"
            )));
        }
        Ok(PolarGrid { n_r, n_theta })
    }

    #[inline]
    pub fn n_r(&self) -> usize {
        self.n_r
    }

    #[inline]
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_r * self.n_theta
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dr(&self) -> f64 {
        1.0 / self.n_r as f64
    }

    #[inline]
    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    #[inline]
    pub fn radius(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.n_r as f64
    }

    #[inline]
    pub fn angle(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.n_theta as f64
    }

    #[inline]
    pub fn index(&self, i: usize, k: usize) -> usize {
        i * self.n_theta + k
    }

    /// Ring and angle index of a flat node index.
    #[inline]
    pub fn ring_angle(&self, idx: usize) -> (usize, usize) {
        (idx / self.n_theta, idx % self.n_theta)
    }

    pub fn node(&self, i: usize, k: usize) -> Vec2 {
        let (s, c) = self.angle(k).sin_cos();
        let r = self.radius(i);
        Vec2::new(r * c, r * s)
    }

    /// All node positions in storage order.
    pub fn nodes(&self) -> Vec<Vec2> {
        let trig = self.trig_table();
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.n_r {
            let r = self.radius(i);
            out.extend(trig.iter().map(|&(c, s)| Vec2::new(r * c, r * s)));
        }
        out
    }

    /// `(cos theta_k, sin theta_k)` for every angle.
    pub fn trig_table(&self) -> Vec<(f64, f64)> {
        (0..self.n_theta)
            .map(|k| {
                let (s, c) = self.angle(k).sin_cos();
                (c, s)
            })
            .collect()
    }

    /// Quadrature weight `r_i dr dtheta` of a node on ring `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.radius(i) * self.dr() * self.dtheta()
    }

    /// Largest cell diameter on ring `i`.
    pub fn cell_diameter(&self, i: usize) -> f64 {
        let outer = (i as f64 + 1.0) / self.n_r as f64;
        self.dr().hypot(outer * self.dtheta())
    }

    /// Weighted sum `sum_i w_i sum_k values[i, k]`, in a fixed order.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        values
            .chunks_exact(self.n_theta)
            .enumerate()
            .map(|(i, ring)| self.weight(i) * ring.iter().sum::<f64>())
            .sum()
    }
}

impl fmt::Display for PolarGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n_r, self.n_theta)
    }
}

/// Complex samples at every node of a polar grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: PolarGrid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: PolarGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParams(format!(
                "{} samples for a {} grid",
                values.len(),
                grid
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite sample at node {idx}")));
        }
        Ok(ComplexField { grid, values })
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: PolarGrid, f: impl Fn(Vec2) -> Complex64 + Sync + Send) -> Result<Self> {
        let nodes = grid.nodes();
        let values = crate::par::map_slice(&nodes, |&p| f(p));
        Self::new(grid, values)
    }

    pub fn constant(grid: PolarGrid, value: Complex64) -> Self {
        ComplexField {
            grid,
            values: vec![value; grid.len()],
        }
    }

    #[inline]
    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// `integral |psi|^2` over the disk.
    pub fn mass(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        self.grid.integrate(&sq)
    }
}

/// Cartesian 2-vector samples at every node of a polar grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: PolarGrid,
    values: Vec<Vec2>,
}

impl VectorField {
    pub fn new(grid: PolarGrid, values: Vec<Vec2>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParams(format!(
                "{} samples for a {} grid",
                values.len(),
                grid
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite sample at node {idx}")));
        }
        Ok(VectorField { grid, values })
    }

    #[inline]
    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Vec2] {
        &self.values
    }
}

/// Real samples at every node of a polar grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: PolarGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: PolarGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParams(format!(
                "{} samples for a {} grid",
                values.len(),
                grid
            )));
        }
        Ok(ScalarField { grid, values })
    }

    #[inline]
    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }
}

/// Why a trajectory stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    ReachedTmax,
    CollisionGuard,
    BoundaryGuard,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ReachedTmax => "ReachedTmax",
            Termination::CollisionGuard => "CollisionGuard",
            Termination::BoundaryGuard => "BoundaryGuard",
        }
    }

    pub fn is_guard(self) -> bool {
        !matches!(self, Termination::ReachedTmax)
    }
}

impl std::str::FromStr for Termination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ReachedTmax" => Ok(Termination::ReachedTmax),
            "CollisionGuard" => Ok(Termination::CollisionGuard),
            "BoundaryGuard" => Ok(Termination::BoundaryGuard),
            other => Err(Error::format("trajectory", format!("unknown termination `{other}`"))),
        }
    }
}

/// Time series of vortex configurations produced by the reduced dynamics.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<VortexConfiguration>,
    pub renormalized_energy: Vec<f64>,
    pub min_separation: Vec<Separation>,
    pub termination: Termination,
    pub dt: f64,
    pub n_modes: usize,
}

impl TrajectoryRecord {
    pub fn final_state(&self) -> &VortexConfiguration {
        self.states.last().expect("trajectory always holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory always holds the initial time")
    }

    /// Index of the recorded time closest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &ti) in self.times.iter().enumerate() {
            if (ti - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cfg(t: &[(f64, f64, i64)]) -> VortexConfiguration {
        VortexConfiguration::from_triples(t).unwrap()
    }

    #[test]
    fn separation_examples() {
        assert_abs_diff_eq!(separation(&cfg(&[(0.0, 0.0, 1)])).rho, 0.25, epsilon = 1e-15);
        let pair = separation(&cfg(&[(0.5, 0.0, 1), (-0.5, 0.0, 1)]));
        assert_abs_diff_eq!(pair.rho, 0.125, epsilon = 1e-15);

        let mut grid = Vec::new();
        for x in [-0.3, 0.0, 0.3] {
            for y in [-0.3, 0.0, 0.3] {
                grid.push((x, y, 1));
            }
        }
        let s = separation(&cfg(&grid));
        assert_abs_diff_eq!(s.rho, 0.075, epsilon = 1e-12);
        assert!(matches!(s.limiter, Limiter::Pair(_, _)));
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(VortexConfiguration::from_triples(&[(1.0, 0.0, 1)]).is_err());
        assert!(VortexConfiguration::from_triples(&[(0.1, 0.0, 2)]).is_err());
        assert!(VortexConfiguration::from_triples(&[(0.1, 0.0, 1), (0.1, 0.0, -1)]).is_err());
        assert!(VortexConfiguration::new(vec![Vec2::ZERO], vec![]).is_err());
        assert!(PolarGrid::new(1, 8).is_err());
        assert!(PolarGrid::new(4, 7).is_err());
        assert!(PolarGrid::new(4, 2).is_err());
    }

    #[test]
    fn dirac_distance_examples() {
        let a = cfg(&[(0.1, 0.0, 1), (-0.1, 0.0, 1)]);
        assert_eq!(dirac_w11_distance(&a, &a).unwrap(), 0.0);
        let b = cfg(&[(0.11, 0.0, 1), (-0.1, 0.0, 1)]);
        assert_abs_diff_eq!(dirac_w11_distance(&a, &b).unwrap(), PI * 0.01, epsilon = 1e-12);
        let c = cfg(&[(0.5, 0.0, 1)]);
        let d = cfg(&[(0.5, 0.05, 1)]);
        assert_abs_diff_eq!(dirac_w11_distance(&c, &d).unwrap(), 0.157_079_632_679_489_66, epsilon = 1e-12);
    }

    #[test]
    fn dirac_distance_rejects_large_displacement() {
        let a = cfg(&[(0.1, 0.0, 1), (-0.1, 0.0, 1)]);
        let b = cfg(&[(0.2, 0.0, 1), (-0.1, 0.0, 1)]);
        assert!(matches!(
            dirac_w11_distance(&a, &b),
            Err(Error::PairingInvalid { index: 0, .. })
        ));
    }

    #[test]
    fn quadrature_weights() {
        for (n_r, n_theta) in [(8, 16), (64, 128), (256, 512)] {
            let g = PolarGrid::new(n_r, n_theta).unwrap();
            let ones = vec![1.0; g.len()];
            assert!((g.integrate(&ones) - PI).abs() < 1e-12);
        }
        // int r^2 = pi / 2 with O(n_r^-2) relative error
        let mut errs = Vec::new();
        for n_r in [16, 32, 64] {
            let g = PolarGrid::new(n_r, 16).unwrap();
            let vals: Vec<f64> = g.nodes().iter().map(|p| p.norm_sqr()).collect();
            errs.push(((g.integrate(&vals) - PI / 2.0) / (PI / 2.0)).abs());
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
        }
    }

    fn point_strategy() -> impl Strategy<Value = Vec2> {
        (0.0..0.9f64, 0.0..(2.0 * PI)).prop_map(|(r, t)| Vec2::new(r * t.cos(), r * t.sin()))
    }

    proptest! {
        #[test]
        fn separation_is_permutation_invariant(pts in prop::collection::vec(point_strategy(), 2..6), shift in 0usize..6) {
            let mut rotated = pts.clone();
            rotated.rotate_left(shift % pts.len());
            let a = separation_of(&pts).rho;
            let b = separation_of(&rotated).rho;
            prop_assert_eq!(a, b);
        }

        #[test]
        fn dirac_distance_is_a_metric(
            base in prop::collection::vec(point_strategy(), 1..4),
            d1 in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4),
            d2 in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4),
        ) {
            let n = base.len();
            let degs = vec![Degree::Positive; n];
            let a = match VortexConfiguration::new(base.clone(), degs.clone()) { Ok(a) => a, Err(_) => return Ok(()) };
            let rho = a.separation().rho;
            // displacements small enough that every pairing stays valid from any of the three
            let scale = rho / 8.0;
            let shift = |d: &[(f64, f64)]| -> Vec<Vec2> {
                base.iter().zip(d).map(|(p, &(dx, dy))| *p + Vec2::new(dx, dy) * scale).collect()
            };
            let b = VortexConfiguration::new(shift(&d1[..n]), degs.clone()).unwrap();
            let c = VortexConfiguration::new(shift(&d2[..n]), degs).unwrap();
            let ab = dirac_w11_distance(&a, &b).unwrap();
            let ba = dirac_w11_distance(&b, &a).unwrap();
            let bc = dirac_w11_distance(&b, &c).unwrap();
            let ac = dirac_w11_distance(&a, &c).unwrap();
            prop_assert!((ab - ba).abs() < 1e-14);
            prop_assert!(ab >= 0.0);
            prop_assert!(ac <= ab + bc + 1e-14);
        }
    }
}
