//! Derivative-based diagnostics of sampled wave functions: supercurrent,
//! Jacobian and Ginzburg-Landau energy.
//!
//! Derivatives use second-order centered differences in `(r, theta)`. The
//! innermost ring differences across the pole (the node at angle
//! `theta + pi` on the same ring sits at signed radius `-r_0`); the outermost
//! ring uses a one-sided three-point stencil.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ComplexField, PolarGrid, ScalarField, Vec2, VectorField};
use crate::par;

fn check_resolution(grid: &PolarGrid) -> Result<()> {
    if grid.n_r() < 3 {
        return Err(Error::GridTooCoarse(format!(
            "need at least 3 rings for radial differences, got {}",
            grid.n_r()
        )));
    }
    if grid.n_theta() < 4 {
        return Err(Error::GridTooCoarse(format!(
            "need at least 4 angles, got {}",
            grid.n_theta()
        )));
    }
    Ok(())
}

/// Cartesian gradient `(d_x v, d_y v)` of nodal samples.
fn cartesian_gradient<T>(grid: &PolarGrid, values: &[T]) -> Vec<(T, T)>
where
    T: Copy + Send + Sync + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let nr = grid.n_r();
    let nt = grid.n_theta();
    let inv_2dr = 0.5 / grid.dr();
    let inv_2dt = 0.5 / grid.dtheta();
    let trig = grid.trig_table();
    par::map_range(grid.len(), |idx| {
        let (i, k) = grid.ring_angle(idx);
        let at = |ii: usize, kk: usize| values[ii * nt + kk];
        let d_r = if i == 0 {
            (at(1, k) - at(0, (k + nt / 2) % nt)) * inv_2dr
        } else if i == nr - 1 {
            (at(i, k) * 3.0 - at(i - 1, k) * 4.0 + at(i - 2, k)) * inv_2dr
        } else {
            (at(i + 1, k) - at(i - 1, k)) * inv_2dr
        };
        let d_t = (at(i, (k + 1) % nt) - at(i, (k + nt - 1) % nt)) * inv_2dt;
        let (c, s) = trig[k];
        let inv_r = 1.0 / grid.radius(i);
        (d_r * c - d_t * (s * inv_r), d_r * s + d_t * (c * inv_r))
    })
}

/// `(d_x psi, d_y psi)` at every node.
pub fn gradient(field: &ComplexField) -> Result<Vec<(Complex64, Complex64)>> {
    check_resolution(field.grid())?;
    Ok(cartesian_gradient(field.grid(), field.values()))
}

/// Supercurrent `j(psi) = Im(conj(psi) grad psi)`.
pub fn supercurrent(field: &ComplexField) -> Result<VectorField> {
    let grad = gradient(field)?;
    let values = field
        .values()
        .iter()
        .zip(&grad)
        .map(|(psi, (dx, dy))| Vec2::new((psi.conj() * dx).im, (psi.conj() * dy).im))
        .collect();
    VectorField::new(*field.grid(), values)
}

/// Jacobian `det grad psi = Im(conj(d_x psi) d_y psi)`.
pub fn jacobian(field: &ComplexField) -> Result<ScalarField> {
    let grad = gradient(field)?;
    let values = grad.iter().map(|(dx, dy)| (dx.conj() * dy).im).collect();
    ScalarField::new(*field.grid(), values)
}

/// Ginzburg-Landau energy density `1/2 |grad psi|^2 + (1 - |psi|^2)^2 / (4 eps^2)`.
pub fn energy_density(field: &ComplexField, epsilon: f64) -> Result<ScalarField> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParams(format!("epsilon must be positive, got {epsilon}")));
    }
    let grad = gradient(field)?;
    let inv = 0.25 / (epsilon * epsilon);
    let values = field
        .values()
        .iter()
        .zip(&grad)
        .map(|(psi, (dx, dy))| {
            let defect = 1.0 - psi.norm_sqr();
            0.5 * (dx.norm_sqr() + dy.norm_sqr()) + inv * defect * defect
        })
        .collect();
    ScalarField::new(*field.grid(), values)
}

/// Total energy `E_eps(psi)`.
pub fn energy(field: &ComplexField, epsilon: f64) -> Result<f64> {
    Ok(energy_density(field, epsilon)?.integral())
}

/// Divergence of a vector field by the same stencils.
pub fn divergence(field: &VectorField) -> Result<ScalarField> {
    let grid = field.grid();
    check_resolution(grid)?;
    let jx: Vec<f64> = field.values().iter().map(|v| v.x).collect();
    let jy: Vec<f64> = field.values().iter().map(|v| v.y).collect();
    let (gx, gy) = par::join(
        || cartesian_gradient(grid, &jx),
        || cartesian_gradient(grid, &jy),
    );
    let values = gx.iter().zip(&gy).map(|(a, b)| a.0 + b.1).collect();
    ScalarField::new(*grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn field(grid: PolarGrid, f: impl Fn(Vec2) -> Complex64 + Sync + Send) -> ComplexField {
        ComplexField::from_fn(grid, f).unwrap()
    }

    #[test]
    fn real_field_has_no_current_or_jacobian() {
        let g = PolarGrid::new(32, 64).unwrap();
        let f = field(g, |p| Complex64::new(1.0 + p.x * p.y - p.x.powi(3), 0.0));
        assert!(supercurrent(&f).unwrap().values().iter().all(|v| v.norm() == 0.0));
        assert!(jacobian(&f).unwrap().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn identity_map_has_unit_jacobian() {
        let g = PolarGrid::new(16, 32).unwrap();
        let f = field(g, |p| Complex64::new(p.x, p.y));
        for v in jacobian(&f).unwrap().values() {
            // linear fields are differentiated exactly up to the angular stencil
            assert!((v - 1.0).abs() < 0.02, "{v}");
        }
        let j = jacobian(&f).unwrap();
        assert!((j.integral() - PI).abs() < 0.01 * PI);
    }

    #[test]
    fn centered_vortex_current_converges_at_second_order() {
        let mut errs = Vec::new();
        for (nr, nt) in [(32, 64), (64, 128)] {
            let g = PolarGrid::new(nr, nt).unwrap();
            let f = field(g, |p| Complex64::new(p.x, p.y) / p.norm());
            let j = supercurrent(&f).unwrap();
            let mut worst: f64 = 0.0;
            for (idx, v) in j.values().iter().enumerate() {
                let (i, _) = g.ring_angle(idx);
                let r = g.radius(i);
                if r > 0.2 {
                    worst = worst.max((v.norm() * r - 1.0).abs());
                }
            }
            errs.push(worst);
        }
        assert!(errs[1] < 1e-3, "{errs:?}");
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn plane_wave_current() {
        let k = Vec2::new(1.5, -0.5);
        let g = PolarGrid::new(128, 256).unwrap();
        let f = field(g, |p| Complex64::from_polar(1.0, k.dot(p)));
        let j = supercurrent(&f).unwrap();
        let mut worst: f64 = 0.0;
        for v in j.values() {
            worst = worst.max((*v - k).norm());
        }
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn energy_of_constants() {
        let g = PolarGrid::new(8, 16).unwrap();
        let one = ComplexField::constant(g, Complex64::new(1.0, 0.0));
        assert_eq!(energy(&one, 0.1).unwrap(), 0.0);
        let zero = ComplexField::constant(g, Complex64::new(0.0, 0.0));
        let e = energy(&zero, 0.1).unwrap();
        assert!((e - PI / (4.0 * 0.01)).abs() < 1e-9);
        assert!(energy(&zero, 0.0).is_err());
    }

    #[test]
    fn gauge_invariance() {
        let g = PolarGrid::new(24, 48).unwrap();
        let f = field(g, |p| Complex64::new(p.x - 0.2, p.y + 0.1) * (1.0 + p.x));
        let rot = Complex64::from_polar(1.0, 1.234);
        let h = ComplexField::new(g, f.values().iter().map(|v| v * rot).collect()).unwrap();
        let (ja, jb) = (supercurrent(&f).unwrap(), supercurrent(&h).unwrap());
        for (a, b) in ja.values().iter().zip(jb.values()) {
            assert!((*a - *b).norm() < 1e-12);
        }
        let (ja, jb) = (jacobian(&f).unwrap(), jacobian(&h).unwrap());
        for (a, b) in ja.values().iter().zip(jb.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((energy(&f, 0.3).unwrap() - energy(&h, 0.3).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn too_coarse() {
        let g = PolarGrid::new(2, 8).unwrap();
        let f = ComplexField::constant(g, Complex64::new(1.0, 0.0));
        assert!(matches!(supercurrent(&f), Err(Error::GridTooCoarse(_))));
        assert!(matches!(jacobian(&f), Err(Error::GridTooCoarse(_))));
        assert!(matches!(energy(&f, 0.1), Err(Error::GridTooCoarse(_))));
    }
}
