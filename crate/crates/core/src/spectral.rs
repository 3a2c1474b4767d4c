//! Harmonic extension of boundary data on the unit disk through truncated
//! Fourier series.
//!
//! Boundary data `g(e^{i theta}) = sum_{|k|<=n} g_k e^{i k theta}` extends to the
//! harmonic function `sum g_k r^{|k|} e^{i k theta}`. For real data this equals
//! `Re P(z)` with `P(z) = g_0 + 2 sum_{k>=1} g_k z^k`, which gives values and
//! gradients through one Horner pass: `grad = (Re P'(z), -Im P'(z))`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::model::{Degree, Vec2, VortexConfiguration};

/// Default FFT oversampling factor for the log boundary datum.
pub const DEFAULT_OVERSAMPLE: usize = 4;

/// Vortices closer than this to the unit circle make the boundary datum
/// singular on the sampling circle.
const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Fourier coefficients `g_k`, `|k| <= n`, of real boundary data.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryExpansion {
    /// `coeffs[k + n] = g_k`.
    coeffs: Vec<Complex64>,
}

impl BoundaryExpansion {
    /// Builds an expansion from the nonnegative modes `g_0, ..., g_n`; the
    /// negative modes follow from `g_{-k} = conj(g_k)`.
    pub fn from_nonnegative(modes: &[Complex64]) -> Result<Self> {
        if modes.len() < 2 {
            return Err(Error::InvalidParams("expansion needs at least mode 1".into()));
        }
        if modes[0].im != 0.0 {
            return Err(Error::InvalidParams("mean of real data must be real".into()));
        }
        let n = modes.len() - 1;
        let mut coeffs = vec![Complex64::default(); 2 * n + 1];
        for (k, &c) in modes.iter().enumerate() {
            coeffs[n + k] = c;
            coeffs[n - k] = c.conj();
        }
        Ok(BoundaryExpansion { coeffs })
    }

    #[inline]
    pub fn max_mode(&self) -> usize {
        (self.coeffs.len() - 1) / 2
    }

    /// Coefficient `g_k`; zero for `|k| > n`.
    pub fn coefficient(&self, k: i64) -> Complex64 {
        let n = self.max_mode() as i64;
        if k.abs() > n {
            Complex64::default()
        } else {
            self.coeffs[(k + n) as usize]
        }
    }

    /// All coefficients, ordered from `-n` to `n`.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    fn nonnegative(&self) -> &[Complex64] {
        &self.coeffs[self.max_mode()..]
    }

    /// Evaluates the projected boundary datum at angle `theta`.
    pub fn boundary_value(&self, theta: f64) -> f64 {
        let z = Complex64::from_polar(1.0, theta);
        let (p, _) = horner(self.nonnegative(), z);
        p.re
    }
}

/// Kind of harmonic extension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtensionKind {
    /// Harmonic extension of Dirichlet data.
    Dirichlet,
    /// Zero-mean harmonic conjugate of a Dirichlet extension, i.e. the
    /// Neumann phase with `grad H = -curl R`.
    NeumannConjugate,
}

/// A harmonic function on the disk given by a truncated series.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicExtension {
    expansion: BoundaryExpansion,
    kind: ExtensionKind,
}

impl HarmonicExtension {
    pub fn dirichlet(expansion: BoundaryExpansion) -> Self {
        HarmonicExtension {
            expansion,
            kind: ExtensionKind::Dirichlet,
        }
    }

    /// Builds a Neumann-kind extension directly; requires a zero mean.
    pub fn neumann(expansion: BoundaryExpansion) -> Result<Self> {
        if expansion.coefficient(0) != Complex64::default() {
            return Err(Error::InvalidParams(
                "Neumann phase must have a zero-mean expansion".into(),
            ));
        }
        Ok(HarmonicExtension {
            expansion,
            kind: ExtensionKind::NeumannConjugate,
        })
    }

    #[inline]
    pub fn kind(&self) -> ExtensionKind {
        self.kind
    }

    #[inline]
    pub fn expansion(&self) -> &BoundaryExpansion {
        &self.expansion
    }

    /// Zero-mean harmonic conjugate `H` with `grad H = -curl R`:
    /// `h_k = -i sgn(k) g_k`, `h_0 = 0`.
    pub fn conjugate(&self) -> HarmonicExtension {
        let mut modes: Vec<Complex64> = self
            .expansion
            .nonnegative()
            .iter()
            .map(|&g| Complex64::new(g.im, -g.re))
            .collect();
        modes[0] = Complex64::default();
        HarmonicExtension {
            expansion: BoundaryExpansion::from_nonnegative(&modes)
                .expect("conjugate keeps the mode count"),
            kind: ExtensionKind::NeumannConjugate,
        }
    }

    /// Value at `x` without the domain check.
    #[inline]
    pub(crate) fn value_unchecked(&self, x: Vec2) -> f64 {
        let (p, _) = horner(self.expansion.nonnegative(), x.to_complex());
        p.re
    }

    /// Gradient at `x` without the domain check.
    #[inline]
    pub(crate) fn gradient_unchecked(&self, x: Vec2) -> Vec2 {
        let (_, dp) = horner(self.expansion.nonnegative(), x.to_complex());
        Vec2::new(dp.re, -dp.im)
    }

    pub fn value(&self, x: Vec2) -> Result<f64> {
        check_inside(x)?;
        Ok(self.value_unchecked(x))
    }

    pub fn gradient(&self, x: Vec2) -> Result<Vec2> {
        check_inside(x)?;
        Ok(self.gradient_unchecked(x))
    }
}

/// Evaluates `P(z) = g_0 + 2 sum_{k>=1} g_k z^k` and `P'(z)`.
#[inline]
fn horner(modes: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let n = modes.len() - 1;
    // Q(z) = sum_{k>=1} g_k z^{k-1}, so P = g_0 + 2 z Q and P' = 2 (Q + z Q').
    let mut q = Complex64::default();
    let mut dq = Complex64::default();
    for k in (1..=n).rev() {
        dq = dq * z + q;
        q = q * z + modes[k];
    }
    let p = modes[0] + 2.0 * z * q;
    let dp = 2.0 * (q + z * dq);
    (p, dp)
}

fn check_inside(x: Vec2) -> Result<()> {
    if x.is_finite() && x.norm() < 1.0 {
        Ok(())
    } else {
        Err(Error::OutsideDomain { x: x.x, y: x.y })
    }
}

/// Smallest integer `>= n` whose only prime factors are 2, 3 and 5.
fn next_smooth(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Projects the log boundary datum `g_a(e^{i theta}) = -sum_j d_j ln|e^{i theta} - a_j|`
/// onto the first `2n + 1` Fourier modes by equispaced sampling and an FFT.
///
/// Holds the FFT plan and the sampling table so repeated projections (one
/// per ODE stage) do not replan.
pub struct LogBoundaryProjector {
    max_mode: usize,
    fft: Arc<dyn Fft<f64>>,
    circle: Vec<Vec2>,
}

impl std::fmt::Debug for LogBoundaryProjector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LogBoundaryProjector")
            .field("max_mode", &self.max_mode)
            .field("samples", &self.circle.len())
            .finish()
    }
}

impl LogBoundaryProjector {
    pub fn new(max_mode: usize, oversample: usize) -> Result<Self> {
        if max_mode < 1 {
            return Err(Error::InvalidParams("max mode must be >= 1".into()));
        }
        if oversample < 2 {
            return Err(Error::InvalidParams("oversample must be >= 2".into()));
        }
        let len = next_smooth(oversample * (2 * max_mode + 1));
        let fft = FftPlanner::new().plan_fft_forward(len);
        let circle = (0..len)
            .map(|l| {
                let (s, c) = (2.0 * std::f64::consts::PI * l as f64 / len as f64).sin_cos();
                Vec2::new(c, s)
            })
            .collect();
        Ok(LogBoundaryProjector {
            max_mode,
            fft,
            circle,
        })
    }

    #[inline]
    pub fn max_mode(&self) -> usize {
        self.max_mode
    }

    /// Number of boundary samples (FFT length).
    pub fn samples(&self) -> usize {
        self.circle.len()
    }

    pub fn project(&self, config: &VortexConfiguration) -> Result<BoundaryExpansion> {
        self.project_raw(config.positions(), config.degrees())
    }

    pub(crate) fn project_raw(
        &self,
        positions: &[Vec2],
        degrees: &[Degree],
    ) -> Result<BoundaryExpansion> {
        for (j, p) in positions.iter().enumerate() {
            if p.norm() > 1.0 - BOUNDARY_TOLERANCE {
                return Err(Error::DegenerateConfig(format!(
                    "vortex {j} lies on the boundary circle"
                )));
            }
        }
        let len = self.circle.len();
        // -sum d_j ln|z - a_j| = -1/2 ln prod |z - a_j|^{2 d_j}
        let mut buf: Vec<Complex64> = self
            .circle
            .iter()
            .map(|&z| {
                let mut prod = 1.0;
                for (a, d) in positions.iter().zip(degrees) {
                    let dist2 = (z - *a).norm_sqr();
                    match d {
                        Degree::Positive => prod *= dist2,
                        Degree::Negative => prod /= dist2,
                    }
                }
                Complex64::new(-0.5 * prod.ln(), 0.0)
            })
            .collect();
        self.fft.process(&mut buf);
        let scale = 1.0 / len as f64;
        let mut modes: Vec<Complex64> = buf[..=self.max_mode].iter().map(|c| c * scale).collect();
        modes[0].im = 0.0;
        BoundaryExpansion::from_nonnegative(&modes)
    }
}

/// One-shot projection of the log boundary datum of `config`.
pub fn project_log_boundary(
    config: &VortexConfiguration,
    n: usize,
    oversample: usize,
) -> Result<BoundaryExpansion> {
    LogBoundaryProjector::new(n, oversample)?.project(config)
}

/// Value of the Dirichlet extension `R_n` at `x`.
pub fn evaluate_dirichlet(ext: &HarmonicExtension, x: Vec2) -> Result<f64> {
    ext.value(x)
}

/// Cartesian gradient of the Dirichlet extension `R_n` at `x`.
pub fn evaluate_dirichlet_gradient(ext: &HarmonicExtension, x: Vec2) -> Result<Vec2> {
    ext.gradient(x)
}

/// `grad H_n(x) = -curl R_n(x) = (-d_y R_n, d_x R_n)`.
pub fn neumann_phase_gradient(ext_r: &HarmonicExtension, x: Vec2) -> Result<Vec2> {
    let g = ext_r.gradient(x)?;
    Ok(Vec2::new(-g.y, g.x))
}

/// Zero-mean phase `H_n` with `grad H_n = -curl R_n`, evaluated at `x` through
/// the conjugate series.
pub fn reconstruct_h_value(ext_r: &HarmonicExtension, x: Vec2) -> Result<f64> {
    check_inside(x)?;
    Ok(ext_r.conjugate().value_unchecked(x))
}
