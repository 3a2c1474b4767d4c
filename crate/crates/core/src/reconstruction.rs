//! Wave functions rebuilt from vortex centers: the canonical harmonic map
//! `u* = e^{iH} prod ((x - a_j)/|x - a_j|)^{d_j}` and its core-smoothed
//! version `psi* = u* prod f(|x - a_j|)`.

use num_complex::Complex64;

use crate::diagnostics::supercurrent;
use crate::dynamics::VortexModel;
use crate::error::{Error, Result};
use crate::metrics::{epsilon_regression, lp_norm, LinearFit};
use crate::model::{ComplexField, Degree, PolarGrid, Vec2, VortexConfiguration};
use crate::par;
use crate::profile::{solve_profile, RadialProfile};

/// Nodes closer than this to a vortex are rejected.
pub const NODE_TOLERANCE: f64 = 1e-12;
/// Core radius used when the configuration leaves room for it.
pub const PREFERRED_R0: f64 = 0.3;

/// `min(0.3, 2 rho)`.
pub fn default_r0(config: &VortexConfiguration) -> f64 {
    PREFERRED_R0.min(2.0 * config.separation().rho)
}

/// Largest `r0` for which the balls `B_r0(a_j)` are pairwise disjoint and
/// inside the disk.
pub fn max_r0(config: &VortexConfiguration) -> f64 {
    let p = config.positions();
    let mut best = f64::INFINITY;
    for (i, a) in p.iter().enumerate() {
        best = best.min(1.0 - a.norm());
        for b in &p[i + 1..] {
            best = best.min(0.5 * (*a - *b).norm());
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct ReconstructionSpec {
    pub config: VortexConfiguration,
    pub epsilon: f64,
    pub r0: f64,
    pub n_modes: usize,
    pub profile: RadialProfile,
    pub grid: PolarGrid,
}

impl ReconstructionSpec {
    /// Solves the core profile for `(epsilon, r0)` and validates the result.
    pub fn new(
        config: VortexConfiguration,
        epsilon: f64,
        r0: f64,
        n_modes: usize,
        grid: PolarGrid,
        mesh_size: usize,
        tol: f64,
    ) -> Result<Self> {
        check_r0(&config, r0)?;
        let profile = solve_profile(epsilon, r0, mesh_size, tol)?;
        let spec = ReconstructionSpec { config, epsilon, r0, n_modes, profile, grid };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_r0(&self.config, self.r0)?;
        if self.profile.epsilon() != self.epsilon || self.profile.r0() != self.r0 {
            return Err(Error::InvalidParams(format!(
                "profile solved for (eps, r0) = ({}, {}), spec has ({}, {})",
                self.profile.epsilon(),
                self.profile.r0(),
                self.epsilon,
                self.r0
            )));
        }
        Ok(())
    }
}

fn check_r0(config: &VortexConfiguration, r0: f64) -> Result<()> {
    let limit = max_r0(config);
    if !(r0 > 0.0) || r0 > limit {
        return Err(Error::InvalidParams(format!(
            "r0 = {r0} must lie in (0, {limit}] so the core balls are disjoint and inside the disk"
        )));
    }
    Ok(())
}

fn check_nodes(config: &VortexConfiguration, grid: &PolarGrid) -> Result<()> {
    for (idx, x) in grid.nodes().into_iter().enumerate() {
        for (j, a) in config.positions().iter().enumerate() {
            if (x - *a).norm() < NODE_TOLERANCE {
                return Err(Error::NodeOnVortex { node: idx, vortex: j });
            }
        }
    }
    Ok(())
}

/// `((x - a)/|x - a|)^d`, with `d = -1` by conjugation.
#[inline]
fn unit_factor(x: Vec2, a: Vec2, d: Degree) -> Complex64 {
    let z = (x - a).to_complex();
    let u = z / z.norm();
    match d {
        Degree::Positive => u,
        Degree::Negative => u.conj(),
    }
}

fn map_value(config: &VortexConfiguration, h: f64, x: Vec2) -> Complex64 {
    let mut u = Complex64::from_polar(1.0, h);
    for (a, d) in config.positions().iter().zip(config.degrees()) {
        u *= unit_factor(x, *a, *d);
    }
    u
}

/// Samples `u*` on `grid`, with the phase correction `H` built from `n_modes`
/// boundary modes.
pub fn canonical_map(config: &VortexConfiguration, n_modes: usize, grid: &PolarGrid) -> Result<ComplexField> {
    check_nodes(config, grid)?;
    let h = VortexModel::new(n_modes)?.boundary_correction(config)?.conjugate();
    ComplexField::from_fn(*grid, |x| map_value(config, h.value_unchecked(x), x))
}

/// Samples `psi*`. Outside every core ball the value is `u*` itself.
pub fn reconstruct_psi(spec: &ReconstructionSpec) -> Result<ComplexField> {
    spec.validate()?;
    let u = canonical_map(&spec.config, spec.n_modes, &spec.grid)?;
    Ok(smooth_cores(&spec.config, &spec.profile, u))
}

/// Multiplies `u` by `prod f(|x - a_j|)` inside the core balls.
pub fn smooth_cores(config: &VortexConfiguration, profile: &RadialProfile, u: ComplexField) -> ComplexField {
    let grid = *u.grid();
    let nodes = grid.nodes();
    let r0 = profile.r0();
    let mut values = u.into_values();
    let scale: Vec<Option<f64>> = par::map_slice(&nodes, |&x| {
        let mut m = None;
        for a in config.positions() {
            let r = (x - *a).norm();
            if r < r0 {
                *m.get_or_insert(1.0) *= profile.eval(r);
            }
        }
        m
    });
    for (v, s) in values.iter_mut().zip(scale) {
        if let Some(s) = s {
            *v *= s;
        }
    }
    ComplexField::new(grid, values).expect("scaling keeps samples finite")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonRow {
    pub epsilon: f64,
    /// `||psi* - u*||_{L^2}`.
    pub field_error: f64,
    /// `||j(psi*) - j(u*)||_{L^{4/3}}`.
    pub current_error: f64,
}

#[derive(Debug, Clone)]
pub struct EpsilonStudy {
    pub rows: Vec<EpsilonRow>,
    pub field_fit: LinearFit,
    pub current_fit: LinearFit,
}

/// Distance of `psi*_eps` from `u*` for each `eps`, with log-log fits.
pub fn epsilon_study(
    config: &VortexConfiguration,
    r0: f64,
    n_modes: usize,
    grid: &PolarGrid,
    epsilons: &[f64],
    mesh_size: usize,
    tol: f64,
) -> Result<EpsilonStudy> {
    check_r0(config, r0)?;
    let u = canonical_map(config, n_modes, grid)?;
    let ju = supercurrent(&u)?;
    let rows = par::map_jobs(epsilons, |&epsilon| -> Result<EpsilonRow> {
        let profile = solve_profile(epsilon, r0, mesh_size, tol)?;
        let psi = smooth_cores(config, &profile, u.clone());
        Ok(EpsilonRow {
            epsilon,
            field_error: lp_norm(&psi, &u, 2.0)?,
            current_error: lp_norm(&supercurrent(&psi)?, &ju, 4.0 / 3.0)?,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let pts = |f: fn(&EpsilonRow) -> f64| rows.iter().map(|r| (r.epsilon, f(r))).collect::<Vec<_>>();
    let field_fit = epsilon_regression(&pts(|r| r.field_error))?;
    let current_fit = epsilon_regression(&pts(|r| r.current_error))?;
    Ok(EpsilonStudy { rows, field_fit, current_fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::DEFAULT_TOL;
    use std::f64::consts::PI;

    fn cfg(t: &[(f64, f64, i64)]) -> VortexConfiguration {
        VortexConfiguration::from_triples(t).unwrap()
    }

    /// Winding of `field` along the closed loop of nodes `loop_idx`.
    fn winding(field: &ComplexField, loop_idx: &[usize]) -> f64 {
        let v = field.values();
        let mut total = 0.0;
        for w in 0..loop_idx.len() {
            let (a, b) = (v[loop_idx[w]], v[loop_idx[(w + 1) % loop_idx.len()]]);
            total += (b / a).arg();
        }
        total / (2.0 * PI)
    }

    #[test]
    fn unit_modulus() {
        let g = PolarGrid::new(32, 64).unwrap();
        let c = cfg(&[(0.31, 0.2, 1), (-0.4, -0.1, -1), (0.05, -0.6, 1)]);
        let u = canonical_map(&c, 64, &g).unwrap();
        assert!(u.values().iter().all(|v| (v.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn centered_vortex_has_no_phase_correction() {
        let g = PolarGrid::new(16, 32).unwrap();
        let u = canonical_map(&cfg(&[(0.0, 0.0, 1)]), 32, &g).unwrap();
        for (x, v) in g.nodes().iter().zip(u.values()) {
            assert!((v - x.to_complex() / x.norm()).norm() < 1e-14);
        }
    }

    #[test]
    fn winding_matches_degrees() {
        let g = PolarGrid::new(64, 128).unwrap();
        let c = cfg(&[(0.5, 0.0, 1), (-0.5, 0.0, -1)]);
        let u = canonical_map(&c, 64, &g).unwrap();
        // Counter-clockwise loops of nodes bracketing each vortex: rings
        // 28..36 and a sector of angles around theta = 0 or pi.
        for (j, k0) in [(0usize, 0usize), (1, 64)] {
            let ks: Vec<usize> = (0..7).map(|s| (k0 + 128 - 3 + s) % 128).collect();
            let mut path = Vec::new();
            for &k in &ks {
                path.push(g.index(28, k));
            }
            for i in 29..=36 {
                path.push(g.index(i, ks[6]));
            }
            for &k in ks.iter().rev().skip(1) {
                path.push(g.index(36, k));
            }
            for i in (29..36).rev() {
                path.push(g.index(i, ks[0]));
            }
            path.reverse();
            let w = winding(&u, &path);
            assert!((w - c.degrees()[j].sign()).abs() < 1e-12, "{j}: {w}");
        }
    }

    #[test]
    fn psi_equals_map_outside_cores() {
        let g = PolarGrid::new(48, 96).unwrap();
        let c = cfg(&[(0.5, 0.0, 1), (-0.5, 0.0, 1)]);
        let spec = ReconstructionSpec::new(c.clone(), 0.05, 0.3, 64, g, 4000, DEFAULT_TOL).unwrap();
        let u = canonical_map(&c, 64, &g).unwrap();
        let psi = reconstruct_psi(&spec).unwrap();
        let mut inside = 0;
        for ((x, a), b) in g.nodes().iter().zip(u.values()).zip(psi.values()) {
            let dmin = c.positions().iter().map(|p| (*x - *p).norm()).fold(f64::INFINITY, f64::min);
            if dmin >= 0.3 {
                assert_eq!(a, b);
            } else {
                inside += 1;
                let f = spec.profile.eval(dmin);
                assert!((b.norm() - f).abs() < 1e-14);
            }
        }
        assert!(inside > 0);
    }

    #[test]
    fn current_scales_with_modulus_squared() {
        let g = PolarGrid::new(128, 256).unwrap();
        let c = cfg(&[(0.3, 0.2, 1)]);
        let spec = ReconstructionSpec::new(c.clone(), 0.05, 0.3, 64, g, 4000, DEFAULT_TOL).unwrap();
        let u = canonical_map(&c, 64, &g).unwrap();
        let psi = reconstruct_psi(&spec).unwrap();
        let (ju, jp) = (supercurrent(&u).unwrap(), supercurrent(&psi).unwrap());
        for ((x, a), (b, p)) in g.nodes().iter().zip(ju.values()).zip(jp.values().iter().zip(psi.values())) {
            if (*x - c.positions()[0]).norm() > 0.1 {
                let expected = *a * p.norm_sqr();
                assert!((*b - expected).norm() < 2e-3 * a.norm().max(1.0), "{x:?}");
            }
        }
    }

    #[test]
    fn radius_rules() {
        let c = cfg(&[(0.5, 0.0, 1), (-0.5, 0.0, 1)]);
        assert!((max_r0(&c) - 0.5).abs() < 1e-15);
        assert!((default_r0(&c) - 0.25).abs() < 1e-15);
        let g = PolarGrid::new(8, 16).unwrap();
        assert!(matches!(
            ReconstructionSpec::new(c, 0.05, 0.6, 64, g, 2000, DEFAULT_TOL),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn node_on_vortex() {
        let g = PolarGrid::new(4, 8).unwrap();
        let p = g.node(1, 3);
        let c = VortexConfiguration::new(vec![p], vec![Degree::Positive]).unwrap();
        assert!(matches!(
            canonical_map(&c, 16, &g),
            Err(Error::NodeOnVortex { node, vortex: 0 }) if node == g.index(1, 3)
        ));
    }
}
