//! Radial core profile of a degree-one vortex.
//!
//! Solves `(1/r)(r f')' - f/r^2 + (1 - f^2) f / eps^2 = 0` on `[0, r0]` with
//! `f(0) = 0`, `f(r0) = 1`. In the scaled variable `s = r / eps` the problem
//! only depends on `r0 / eps`, so the solve is carried out on `[0, r0/eps]`
//! and mapped back. The mesh is uniform on the core `s <= 8` and geometrically
//! graded beyond it, with matching spacing at the junction.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::metrics::linear_fit;
use crate::par;

/// Default Newton tolerance on the scaled residual.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default number of mesh intervals.
pub const DEFAULT_MESH: usize = 20_000;
/// Largest admissible core spacing in units of `eps`.
pub const MAX_CORE_SPACING: f64 = 0.1;

const CORE_EXTENT: f64 = 8.0;
const MAX_NEWTON: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    epsilon: f64,
    r0: f64,
    /// Scaled nodes `s = r / eps`, from 0 to `r0 / eps`.
    scaled: Vec<f64>,
    values: Vec<f64>,
    residual_norm: f64,
    iterations: usize,
}

impl RadialProfile {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// `r0 / eps`.
    pub fn ratio(&self) -> f64 {
        self.r0 / self.epsilon
    }

    /// Mesh nodes in physical radius.
    pub fn nodes(&self) -> Vec<f64> {
        self.scaled.iter().map(|s| s * self.epsilon).collect()
    }

    /// Mesh nodes in units of `eps`.
    pub fn scaled_nodes(&self) -> &[f64] {
        &self.scaled
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mesh_size(&self) -> usize {
        self.scaled.len() - 1
    }

    /// Max residual of the discrete equation at interior nodes, in the scaled
    /// variable (the physical residual times `eps^2`).
    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    pub fn newton_iterations(&self) -> usize {
        self.iterations
    }

    /// Piecewise-linear interpolant of `f` at physical radius `r`; equals 1
    /// for `r >= r0`.
    pub fn eval(&self, r: f64) -> f64 {
        self.eval_scaled(r / self.epsilon)
    }

    pub fn eval_scaled(&self, s: f64) -> f64 {
        let n = self.scaled.len();
        if s >= self.scaled[n - 1] {
            return 1.0;
        }
        if s <= 0.0 {
            return 0.0;
        }
        let hi = self.scaled.partition_point(|&x| x <= s).clamp(1, n - 1);
        let (s0, s1) = (self.scaled[hi - 1], self.scaled[hi]);
        let t = (s - s0) / (s1 - s0);
        self.values[hi - 1] + t * (self.values[hi] - self.values[hi - 1])
    }

    /// Smallest `c` with `f(r) >= 1 - c (eps/r)^2` at every node.
    pub fn lower_bound_constant(&self) -> f64 {
        self.scaled
            .iter()
            .zip(&self.values)
            .skip(1)
            .map(|(s, f)| (1.0 - f) * s * s)
            .fold(0.0, f64::max)
    }
}

fn build_mesh(ratio: f64, intervals: usize) -> Result<Vec<f64>> {
    let core = CORE_EXTENT.min(ratio);
    let h = if ratio > core {
        core * (1.0 + (ratio / core).ln()) / intervals as f64
    } else {
        ratio / intervals as f64
    };
    if h > MAX_CORE_SPACING {
        return Err(Error::InvalidParams(format!(
            "{intervals} intervals give core spacing {h:.3} eps for r0/eps = {ratio}; \
             at least {} are needed",
            (intervals as f64 * h / MAX_CORE_SPACING).ceil()
        )));
    }
    let n_core = ((core / h).round() as usize).clamp(1, intervals);
    let n_graded = intervals - n_core;
    if n_graded == 0 && ratio > core {
        return Err(Error::InvalidParams("mesh leaves no graded intervals".into()));
    }
    let mut s: Vec<f64> = (0..=n_core).map(|i| core * i as f64 / n_core as f64).collect();
    if n_graded > 0 {
        let q = (ratio / core).powf(1.0 / n_graded as f64);
        s.extend((1..n_graded).map(|i| core * q.powi(i as i32)));
        s.push(ratio);
    } else {
        *s.last_mut().unwrap() = ratio;
    }
    Ok(s)
}

/// Discrete operator coefficients `(lower, upper)` at interior node `i`:
/// `L f_i = lower (f_{i-1} - f_i) + upper (f_{i+1} - f_i)`.
fn stencil(s: &[f64], i: usize) -> (f64, f64) {
    let (hm, hp) = (s[i] - s[i - 1], s[i + 1] - s[i]);
    let w = 0.5 * (hm + hp);
    let (sm, sp) = (0.5 * (s[i] + s[i - 1]), 0.5 * (s[i] + s[i + 1]));
    let scale = 1.0 / (s[i] * w);
    (scale * sm / hm, scale * sp / hp)
}

fn residual(s: &[f64], f: &[f64], out: &mut [f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 1..s.len() - 1 {
        let (a, b) = stencil(s, i);
        let fi = f[i];
        let r = a * (f[i - 1] - fi) + b * (f[i + 1] - fi) - fi / (s[i] * s[i])
            + (1.0 - fi * fi) * fi;
        out[i] = r;
        worst = worst.max(r.abs());
    }
    worst
}

/// Solves `J delta = -res` for the interior unknowns; `delta` is written in place.
fn newton_step(s: &[f64], f: &[f64], res: &[f64], delta: &mut [f64]) -> Result<()> {
    let n = s.len();
    let m = n - 2;
    let mut c_prime = vec![0.0; m];
    let mut d_prime = vec![0.0; m];
    for row in 0..m {
        let i = row + 1;
        let (a, b) = stencil(s, i);
        let diag = -a - b - 1.0 / (s[i] * s[i]) + 1.0 - 3.0 * f[i] * f[i];
        let lower = if row > 0 { a } else { 0.0 };
        let upper = if row + 1 < m { b } else { 0.0 };
        let denom = diag - lower * if row > 0 { c_prime[row - 1] } else { 0.0 };
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::LinearSolveFailure("singular profile Jacobian".into()));
        }
        c_prime[row] = upper / denom;
        let prev = if row > 0 { d_prime[row - 1] } else { 0.0 };
        d_prime[row] = (-res[i] - lower * prev) / denom;
    }
    delta[m] = d_prime[m - 1];
    for row in (0..m - 1).rev() {
        delta[row + 1] = d_prime[row] - c_prime[row] * delta[row + 2];
    }
    Ok(())
}

fn newton(s: &[f64], mut f: Vec<f64>, tol: f64) -> Result<(Vec<f64>, f64, usize)> {
    let n = s.len();
    let mut res = vec![0.0; n];
    let mut delta = vec![0.0; n];
    let mut trial = f.clone();
    let mut trial_res = vec![0.0; n];
    let mut norm = residual(s, &f, &mut res);
    for iter in 0..MAX_NEWTON {
        if norm <= tol {
            return Ok((f, norm, iter));
        }
        newton_step(s, &f, &res, &mut delta)?;
        let mut lambda = 1.0;
        loop {
            for i in 1..n - 1 {
                trial[i] = f[i] + lambda * delta[i];
            }
            let trial_norm = residual(s, &trial, &mut trial_res);
            if trial_norm < norm || lambda < 1e-6 {
                std::mem::swap(&mut f, &mut trial);
                std::mem::swap(&mut res, &mut trial_res);
                norm = trial_norm;
                break;
            }
            lambda *= 0.5;
        }
        if !norm.is_finite() {
            break;
        }
    }
    Err(Error::NoConvergence(format!(
        "profile Newton stalled at residual {norm:.3e} after {MAX_NEWTON} iterations"
    )))
}

/// Solves the profile problem with Newton's method on a finite-volume
/// discretization with `mesh_size` intervals, starting from `f = r / r0`.
pub fn solve_profile(epsilon: f64, r0: f64, mesh_size: usize, tol: f64) -> Result<RadialProfile> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParams(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(r0 > epsilon && r0.is_finite()) {
        return Err(Error::InvalidParams(format!("need 0 < epsilon < r0, got r0 = {r0}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be positive, got {tol}")));
    }
    if mesh_size < 4 {
        return Err(Error::InvalidParams(format!("mesh size {mesh_size} too small")));
    }
    let ratio = r0 / epsilon;
    let s = build_mesh(ratio, mesh_size)?;
    let linear: Vec<f64> = s.iter().map(|x| x / ratio).collect();
    let admissible = |f: &[f64]| {
        f.iter().all(|v| (0.0..=1.0).contains(v)) && f.windows(2).all(|w| w[1] >= w[0])
    };
    let (values, residual_norm, iterations) = match newton(&s, linear, tol) {
        Ok(v) if admissible(&v.0) => v,
        _ => {
            let mut guess: Vec<f64> = s.iter().map(|x| x / (2.0 + x * x).sqrt()).collect();
            *guess.last_mut().unwrap() = 1.0;
            let v = newton(&s, guess, tol)?;
            if !admissible(&v.0) {
                return Err(Error::NoConvergence(format!(
                    "Newton converged to a non-monotone profile for r0/eps = {ratio}; refine the mesh"
                )));
            }
            v
        }
    };
    Ok(RadialProfile { epsilon, r0, scaled: s, values, residual_norm, iterations })
}

/// Localized energy `2 pi int_0^r0 [ (f'^2 + f^2/r^2)/2 + (1-f^2)^2/(4 eps^2) ] r dr`
/// by composite trapezoid quadrature of the piecewise-linear profile.
pub fn localized_energy(profile: &RadialProfile) -> f64 {
    let s = &profile.scaled;
    let f = &profile.values;
    let node = |i: usize| {
        let pot = 1.0 - f[i] * f[i];
        let angular = if s[i] > 0.0 { 0.5 * f[i] * f[i] / s[i] } else { 0.0 };
        angular + 0.25 * pot * pot * s[i]
    };
    let mut total = 0.0;
    for i in 0..s.len() - 1 {
        let h = s[i + 1] - s[i];
        let slope = (f[i + 1] - f[i]) / h;
        total += 0.5 * slope * slope * 0.5 * (s[i] + s[i + 1]) * h;
        total += 0.5 * h * (node(i) + node(i + 1));
    }
    2.0 * PI * total
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaSample {
    pub ratio: f64,
    pub energy: f64,
    /// `I - pi ln(ratio)`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaEstimate {
    pub gamma: f64,
    /// Difference between the full fit and the extrapolation through the two
    /// largest ratios.
    pub uncertainty: f64,
    pub samples: Vec<GammaSample>,
}

/// Extrapolates `I(r, eps) - pi ln(r/eps)` to `eps/r -> 0`, linearly in
/// `(eps/r)^2`.
pub fn compute_gamma(ratios: &[f64], mesh_size: usize, tol: f64) -> Result<GammaEstimate> {
    if ratios.len() < 3 {
        return Err(Error::InvalidParams(format!("need at least 3 ratios, got {}", ratios.len())));
    }
    if ratios.iter().any(|r| !(*r > 1.0) || !r.is_finite()) {
        return Err(Error::InvalidParams("ratios must be finite and > 1".into()));
    }
    if ratios.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("ratios must be strictly increasing".into()));
    }
    if ratios[ratios.len() - 1] / ratios[0] < 100.0 * (1.0 - 1e-12) {
        return Err(Error::InvalidParams("ratios must span at least two decades".into()));
    }
    let solved = par::map_jobs(ratios, |&ratio| {
        let p = solve_profile(1.0, ratio, mesh_size, tol)?;
        let energy = localized_energy(&p);
        Ok(GammaSample { ratio, energy, excess: energy - PI * ratio.ln() })
    });
    let samples: Vec<GammaSample> = solved.into_iter().collect::<Result<_>>()?;
    let steps: Vec<f64> = samples.windows(2).map(|w| w[1].excess - w[0].excess).collect();
    if steps.iter().any(|d| d.signum() != steps[0].signum()) {
        return Err(Error::NoConvergence(format!(
            "non-monotone excess energies {:?}",
            samples.iter().map(|s| s.excess).collect::<Vec<_>>()
        )));
    }
    let points = |tail: &[GammaSample]| -> Vec<(f64, f64)> {
        tail.iter().map(|s| (s.ratio.powi(-2), s.excess)).collect()
    };
    let gamma = linear_fit(&points(&samples))?.intercept;
    let last = linear_fit(&points(&samples[samples.len() - 2..]))?.intercept;
    Ok(GammaEstimate { gamma, uncertainty: (gamma - last).abs(), samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_values_and_shape() {
        let p = solve_profile(0.01, 0.3, 4000, DEFAULT_TOL).unwrap();
        let v = p.values();
        assert_eq!(v[0], 0.0);
        assert_eq!(*v.last().unwrap(), 1.0);
        assert!(v.iter().all(|f| (0.0..=1.0).contains(f)));
        assert!(v.windows(2).all(|w| w[1] >= w[0]));
        assert!(p.residual_norm() <= DEFAULT_TOL);
        assert_eq!(p.eval(0.3), 1.0);
        assert_eq!(p.eval(0.5), 1.0);
        assert_eq!(p.eval(0.0), 0.0);
        assert!((p.ratio() - 30.0).abs() < 1e-12);
        assert!((p.nodes().last().unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn scale_invariance() {
        let a = solve_profile(0.01, 0.2, 3000, DEFAULT_TOL).unwrap();
        let b = solve_profile(0.02, 0.4, 3000, DEFAULT_TOL).unwrap();
        for t in [0.001, 0.01, 0.05, 0.2, 0.5, 0.9] {
            assert!((a.eval(t * 0.2) - b.eval(t * 0.4)).abs() < 1e-12);
        }
    }

    #[test]
    fn core_slope_and_far_field() {
        // f ~ A s near the origin and 1 - f ~ 1/(2 s^2) far out.
        let p = solve_profile(1.0, 1000.0, 20_000, 1e-10).unwrap();
        let far = 1.0 - p.eval_scaled(30.0);
        assert!((far * 900.0 - 0.5).abs() < 0.02, "{far}");
        let small = p.eval_scaled(0.05) / 0.05;
        assert!((small - p.eval_scaled(0.1) / 0.1).abs() < 1e-3);
        let c = p.lower_bound_constant();
        assert!(c > 0.4 && c.is_finite(), "{c}");
        for (s, f) in p.scaled_nodes().iter().zip(p.values()).skip(1) {
            assert!(*f >= 1.0 - c / (s * s) - 1e-15);
        }
    }

    #[test]
    fn excess_energy_matches_collocation_solve() {
        // Independent adaptive collocation solve with tolerance 1e-10.
        let p = solve_profile(0.01, 1.0, DEFAULT_MESH, DEFAULT_TOL).unwrap();
        let excess = localized_energy(&p) - PI * 100f64.ln();
        assert!((excess - 1.196_655_430).abs() < 1e-6, "{excess}");
    }

    #[test]
    fn energy_grows_logarithmically() {
        let i1 = localized_energy(&solve_profile(1.0, 200.0, 20_000, DEFAULT_TOL).unwrap());
        let i2 = localized_energy(&solve_profile(1.0, 400.0, 20_000, DEFAULT_TOL).unwrap());
        assert!((i2 - i1 - PI * 2f64.ln()).abs() < 1e-4, "{}", i2 - i1);
    }

    #[test]
    fn energy_of_linear_profile() {
        // f = s/R is integrated exactly apart from the trapezoid error in the
        // potential term.
        let ratio = 3.0;
        let s = build_mesh(ratio, 3000).unwrap();
        let values: Vec<f64> = s.iter().map(|x| x / ratio).collect();
        let p = RadialProfile {
            epsilon: 1.0,
            r0: ratio,
            scaled: s,
            values,
            residual_norm: 0.0,
            iterations: 0,
        };
        let exact = 2.0 * PI * (0.5 + ratio * ratio / 24.0);
        assert!((localized_energy(&p) - exact).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(matches!(solve_profile(0.0, 1.0, 100, 1e-8), Err(Error::InvalidParams(_))));
        assert!(matches!(solve_profile(0.5, 0.4, 100, 1e-8), Err(Error::InvalidParams(_))));
        assert!(matches!(solve_profile(1e-3, 1.0, 50, 1e-8), Err(Error::InvalidParams(_))));
        assert!(matches!(compute_gamma(&[10.0, 100.0], 1000, 1e-8), Err(Error::InvalidParams(_))));
        assert!(matches!(
            compute_gamma(&[10.0, 20.0, 40.0], 1000, 1e-8),
            Err(Error::InvalidParams(_))
        ));
    }
}
