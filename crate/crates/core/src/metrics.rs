//! Error metrics between sampled fields and least-squares rate fits.

use num_complex::Complex64;

use crate::diagnostics;
use crate::error::{Error, Result};
use crate::model::{ComplexField, PolarGrid, VectorField};

/// Fields whose pointwise differences have a magnitude.
pub trait GridSamples {
    fn grid(&self) -> &PolarGrid;
    /// `|self(idx) - other(idx)|`.
    fn difference_at(&self, other: &Self, idx: usize) -> f64;
    /// `|self(idx)|`.
    fn magnitude_at(&self, idx: usize) -> f64;
}

impl GridSamples for ComplexField {
    fn grid(&self) -> &PolarGrid {
        ComplexField::grid(self)
    }

    #[inline]
    fn difference_at(&self, other: &Self, idx: usize) -> f64 {
        (self.values()[idx] - other.values()[idx]).norm()
    }

    #[inline]
    fn magnitude_at(&self, idx: usize) -> f64 {
        self.values()[idx].norm()
    }
}

impl GridSamples for VectorField {
    fn grid(&self) -> &PolarGrid {
        VectorField::grid(self)
    }

    #[inline]
    fn difference_at(&self, other: &Self, idx: usize) -> f64 {
        (self.values()[idx] - other.values()[idx]).norm()
    }

    #[inline]
    fn magnitude_at(&self, idx: usize) -> f64 {
        self.values()[idx].norm()
    }
}

fn check_grids(a: &PolarGrid, b: &PolarGrid) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch(a.to_string(), b.to_string()));
    }
    Ok(())
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParams(format!("Lp exponent must be >= 1, got {p}")));
    }
    Ok(())
}

fn weighted_power_sum(grid: &PolarGrid, p: f64, f: impl Fn(usize) -> f64) -> f64 {
    let vals: Vec<f64> = (0..grid.len()).map(|idx| f(idx).powf(p)).collect();
    grid.integrate(&vals)
}

/// `||a - b||_{L^p}` with polar quadrature weights.
pub fn lp_norm<F: GridSamples>(a: &F, b: &F, p: f64) -> Result<f64> {
    check_grids(a.grid(), b.grid())?;
    check_exponent(p)?;
    Ok(weighted_power_sum(a.grid(), p, |idx| a.difference_at(b, idx)).powf(1.0 / p))
}

/// `||a||_{L^p}`.
pub fn lp_magnitude<F: GridSamples>(a: &F, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(weighted_power_sum(a.grid(), p, |idx| a.magnitude_at(idx)).powf(1.0 / p))
}

/// Phase `phi = arg <b, a>` minimizing `||a - e^{i phi} b||_{L^2}`.
pub fn best_phase(a: &ComplexField, b: &ComplexField) -> Result<f64> {
    check_grids(a.grid(), b.grid())?;
    let grid = a.grid();
    let nt = grid.n_theta();
    let mut inner = Complex64::default();
    for (i, (ra, rb)) in a
        .values()
        .chunks_exact(nt)
        .zip(b.values().chunks_exact(nt))
        .enumerate()
    {
        let ring: Complex64 = ra.iter().zip(rb).map(|(x, y)| y.conj() * x).sum();
        inner += ring * grid.weight(i);
    }
    Ok(inner.arg())
}

/// `e^{i phi} b`.
pub fn rotate_phase(b: &ComplexField, phi: f64) -> ComplexField {
    let rot = Complex64::from_polar(1.0, phi);
    let values = b.values().iter().map(|v| v * rot).collect();
    ComplexField::new(*b.grid(), values).expect("phase rotation keeps samples finite")
}

/// Comparison metrics offered on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    /// `||j(a) - j(b)||_{L^{4/3}}`.
    L43Supercurrent,
    /// `||a - b||_{L^2}`.
    L2,
    /// `||grad a - grad b||_{L^2}`.
    L2Gradient,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l43-supercurrent" => Ok(Metric::L43Supercurrent),
            "l2" => Ok(Metric::L2),
            "l2-gradient" => Ok(Metric::L2Gradient),
            other => Err(Error::InvalidParams(format!(
                "unknown metric `{other}` (expected l43-supercurrent, l2 or l2-gradient)"
            ))),
        }
    }
}

/// Distance between two wave functions in the given metric. With `mod_phase`
/// the global phase of `b` is first aligned to `a`.
pub fn compare_fields(a: &ComplexField, b: &ComplexField, metric: Metric, mod_phase: bool) -> Result<f64> {
    check_grids(a.grid(), b.grid())?;
    let aligned;
    let b = if mod_phase {
        aligned = rotate_phase(b, best_phase(a, b)?);
        &aligned
    } else {
        b
    };
    match metric {
        Metric::L2 => lp_norm(a, b, 2.0),
        Metric::L43Supercurrent => {
            let ja = diagnostics::supercurrent(a)?;
            let jb = diagnostics::supercurrent(b)?;
            lp_norm(&ja, &jb, 4.0 / 3.0)
        }
        Metric::L2Gradient => {
            let ga = diagnostics::gradient(a)?;
            let gb = diagnostics::gradient(b)?;
            let grid = a.grid();
            let sq: Vec<f64> = ga
                .iter()
                .zip(&gb)
                .map(|(x, y)| (x.0 - y.0).norm_sqr() + (x.1 - y.1).norm_sqr())
                .collect();
            Ok(grid.integrate(&sq).sqrt())
        }
    }
}

/// Least-squares line `y = slope x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

pub fn linear_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit(format!("{} points", points.len())));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::DegenerateFit("non-finite data".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(LinearFit {
        slope,
        intercept,
        residual,
    })
}

/// Fits `ln e = slope ln eps + intercept`.
pub fn epsilon_regression(errors: &[(f64, f64)]) -> Result<LinearFit> {
    if errors.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 points, got {}",
            errors.len()
        )));
    }
    if errors.iter().any(|&(eps, e)| !(eps > 0.0) || !(e > 0.0)) {
        return Err(Error::DegenerateFit("values must be positive".into()));
    }
    let logs: Vec<(f64, f64)> = errors.iter().map(|&(eps, e)| (eps.ln(), e.ln())).collect();
    linear_fit(&logs)
}
