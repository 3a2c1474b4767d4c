//! Reference solver for `i psi_t = Lap psi + (1 - |psi|^2) psi / eps^2` on the
//! unit disk with homogeneous Neumann data.
//!
//! Strang splitting: a half step of the exact nonlinear phase rotation, a
//! Crank-Nicolson step of `psi_t = -i Lap psi`, and a second half step. The
//! Laplacian is the five-point polar stencil in finite-volume form; it is
//! diagonalized in angle by a DFT on each ring, leaving one complex
//! tridiagonal system per angular mode. The innermost ring has no flux
//! through the pole and the outermost ring no flux through `r = 1`.
//!
//! Near the pole the angular symbol `lambda_m / r^2` of high modes far
//! exceeds the radial stiffness; Crank-Nicolson maps such modes to a phase
//! close to `pi` per step, where the nonlinear sub-step pumps them
//! resonantly. A pole filter therefore drops angular mode `m` on ring `i`
//! unless `sin(pi m / n_theta) <= 2 pi (i + 1/2) / n_theta`, i.e. unless its
//! angular stiffness stays below the radial one. Rings with
//! `r >= n_theta / (2 pi n_r)` are unaffected. Both sub-steps preserve the
//! discrete mass `sum r_i |psi|^2`; the filter can only remove mass carried
//! by unresolved modes.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::diagnostics;
use crate::error::{Error, Result};
use crate::localize::{localize_vortices, DetectedVortices};
use crate::metrics::lp_norm;
use crate::model::{ComplexField, PolarGrid, TrajectoryRecord, VortexConfiguration};
use crate::par;
use crate::reconstruction::{canonical_map, reconstruct_psi, smooth_cores, ReconstructionSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpConfig {
    pub epsilon: f64,
    pub dt: f64,
    pub t_max: f64,
    pub grid: PolarGrid,
    /// Steps between recorded snapshots; 0 records only the endpoints.
    pub snapshot_stride: usize,
}

impl GpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParams(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidParams(format!("t_max must be non-negative, got {}", self.t_max)));
        }
        let n = (self.t_max / self.dt).round();
        if (n * self.dt - self.t_max).abs() > 1e-9 * self.t_max.max(self.dt) {
            return Err(Error::InvalidParams(format!(
                "t_max = {} is not a multiple of dt = {}",
                self.t_max, self.dt
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }
}

/// `psi <- psi exp(-i tau (1 - |psi|^2) / eps^2)` at every node.
pub fn nonlinear_flow(values: &mut [Complex64], tau: f64, epsilon: f64) {
    let k = tau / (epsilon * epsilon);
    par::for_each_mut(values, |v| {
        let phase = -k * (1.0 - v.norm_sqr());
        *v *= Complex64::from_polar(1.0, phase);
    });
}

/// Prefactored Crank-Nicolson solver for the linear sub-flow.
pub struct GpSolver {
    cfg: GpConfig,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Flux coefficients `r_{i -+ 1/2} / (r_i dr^2)`.
    lower: Vec<f64>,
    upper: Vec<f64>,
    inv_r2: Vec<f64>,
    /// Angular symbols `lambda_m`, indexed by `min(m, n_theta - m)`.
    lambda: Vec<f64>,
    /// Thomas factors per distinct symbol, `n_r` entries each.
    c_prime: Vec<Complex64>,
    inv_denom: Vec<Complex64>,
    /// First ring on which each distinct mode survives the pole filter.
    first_ring: Vec<usize>,
    work: Vec<Complex64>,
}

impl GpSolver {
    pub fn new(cfg: GpConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid;
        let (nr, nt) = (grid.n_r(), grid.n_theta());
        let dr = grid.dr();
        let dth = grid.dtheta();
        let mut lower = vec![0.0; nr];
        let mut upper = vec![0.0; nr];
        let mut inv_r2 = vec![0.0; nr];
        for i in 0..nr {
            let r = grid.radius(i);
            let scale = 1.0 / (r * dr * dr);
            lower[i] = if i > 0 { scale * (i as f64 * dr) } else { 0.0 };
            upper[i] = if i + 1 < nr { scale * ((i + 1) as f64 * dr) } else { 0.0 };
            inv_r2[i] = 1.0 / (r * r);
        }
        let distinct = nt / 2 + 1;
        let lambda: Vec<f64> = (0..distinct)
            .map(|m| {
                let s = (std::f64::consts::PI * m as f64 / nt as f64).sin();
                -4.0 / (dth * dth) * s * s
            })
            .collect();
        let beta = Complex64::new(0.0, 0.5 * cfg.dt);
        let mut c_prime = vec![Complex64::default(); distinct * nr];
        let mut inv_denom = vec![Complex64::default(); distinct * nr];
        for m in 0..distinct {
            let cp = &mut c_prime[m * nr..(m + 1) * nr];
            let id = &mut inv_denom[m * nr..(m + 1) * nr];
            for i in 0..nr {
                let diag = -(lower[i] + upper[i]) + lambda[m] * inv_r2[i];
                let prev = if i > 0 { cp[i - 1] } else { Complex64::default() };
                let denom = Complex64::new(1.0, 0.0) + beta * diag - beta * lower[i] * prev;
                if denom.norm() == 0.0 || !denom.is_finite() {
                    return Err(Error::LinearSolveFailure(format!("zero pivot in mode {m}, row {i}")));
                }
                id[i] = 1.0 / denom;
                cp[i] = beta * upper[i] * id[i];
            }
        }
        let first_ring = (0..distinct)
            .map(|m| {
                let s = (std::f64::consts::PI * m as f64 / nt as f64).sin();
                (0..nr)
                    .find(|&i| s <= 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / nt as f64)
                    .unwrap_or(nr)
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(GpSolver {
            cfg,
            fwd: planner.plan_fft_forward(nt),
            inv: planner.plan_fft_inverse(nt),
            lower,
            upper,
            inv_r2,
            lambda,
            c_prime,
            inv_denom,
            first_ring,
            work: vec![Complex64::default(); grid.len()],
        })
    }

    pub fn config(&self) -> &GpConfig {
        &self.cfg
    }

    fn ring_ffts(&self, values: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let nt = self.cfg.grid.n_theta();
        par::for_each_chunk_mut(values, nt, |_, ring| {
            let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
            plan.process_with_scratch(ring, &mut scratch);
        });
    }

    /// Crank-Nicolson step of `psi_t = -i Lap psi` over `dt`.
    pub fn linear_step(&mut self, values: &mut [Complex64]) {
        let grid = self.cfg.grid;
        let (nr, nt) = (grid.n_r(), grid.n_theta());
        self.ring_ffts(values, &self.fwd);
        // Mode-major layout for the radial solves.
        let mut modes = std::mem::take(&mut self.work);
        {
            let src: &[Complex64] = values;
            par::for_each_chunk_mut(&mut modes, nr, |m, col| {
                for (i, c) in col.iter_mut().enumerate() {
                    *c = src[i * nt + m];
                }
            });
        }
        let beta = Complex64::new(0.0, 0.5 * self.cfg.dt);
        let norm = 1.0 / nt as f64;
        let (lower, upper, inv_r2) = (&self.lower, &self.upper, &self.inv_r2);
        let (lambda, c_prime, inv_denom) = (&self.lambda, &self.c_prime, &self.inv_denom);
        let first_ring = &self.first_ring;
        par::for_each_chunk_mut(&mut modes, nr, |m, col| {
            let key = m.min(nt - m);
            let lam = lambda[key];
            let cp = &c_prime[key * nr..(key + 1) * nr];
            let id = &inv_denom[key * nr..(key + 1) * nr];
            let mut rhs = vec![Complex64::default(); nr];
            for i in 0..nr {
                let mut lap = (lam * inv_r2[i] - lower[i] - upper[i]) * col[i];
                if i > 0 {
                    lap += lower[i] * col[i - 1];
                }
                if i + 1 < nr {
                    lap += upper[i] * col[i + 1];
                }
                rhs[i] = col[i] - beta * lap;
            }
            let mut prev = Complex64::default();
            for i in 0..nr {
                prev = (rhs[i] - beta * lower[i] * prev) * id[i];
                rhs[i] = prev;
            }
            for i in (0..nr - 1).rev() {
                let next = rhs[i + 1];
                rhs[i] -= cp[i] * next;
            }
            for (c, r) in col.iter_mut().zip(&rhs) {
                *c = r * norm;
            }
            col[..first_ring[key]].fill(Complex64::default());
        });
        {
            let src = &modes;
            par::for_each_chunk_mut(values, nt, |i, ring| {
                for (m, v) in ring.iter_mut().enumerate() {
                    *v = src[m * nr + i];
                }
            });
        }
        self.work = modes;
        self.ring_ffts(values, &self.inv);
    }

    /// One Strang step.
    pub fn step(&mut self, psi: &mut ComplexField) -> Result<()> {
        if *psi.grid() != self.cfg.grid {
            return Err(Error::GridMismatch(psi.grid().to_string(), self.cfg.grid.to_string()));
        }
        let (half, eps) = (0.5 * self.cfg.dt, self.cfg.epsilon);
        let values = psi.values_mut();
        nonlinear_flow(values, half, eps);
        self.linear_step(values);
        nonlinear_flow(values, half, eps);
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolveFailure("non-finite values after step".into()));
        }
        Ok(())
    }
}

/// A single Strang step from `state`.
pub fn gp_step(state: &ComplexField, cfg: &GpConfig) -> Result<ComplexField> {
    let mut solver = GpSolver::new(*cfg)?;
    let mut out = state.clone();
    solver.step(&mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpSample {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct GpRun {
    /// Mass and energy at every snapshot, including both endpoints.
    pub samples: Vec<GpSample>,
    pub final_state: ComplexField,
}

impl GpRun {
    /// `max |E(t) - E(0)| / E(0)` over the samples.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.samples[0].energy;
        self.samples.iter().map(|s| (s.energy - e0).abs() / e0.abs()).fold(0.0, f64::max)
    }

    /// `max |M(t) - M(0)| / M(0)` over the samples.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.samples[0].mass;
        self.samples.iter().map(|s| (s.mass - m0).abs() / m0).fold(0.0, f64::max)
    }
}

/// Runs `cfg.steps()` Strang steps from `initial`, calling `on_snapshot` at
/// step 0, every `snapshot_stride` steps, and at the final step.
pub fn run_gp<F>(initial: &ComplexField, cfg: &GpConfig, mut on_snapshot: F) -> Result<GpRun>
where
    F: FnMut(&GpSample, &ComplexField) -> Result<()>,
{
    let mut solver = GpSolver::new(*cfg)?;
    let mut psi = initial.clone();
    let steps = cfg.steps();
    let mut samples = Vec::new();
    let mut record = |step: usize, psi: &ComplexField| -> Result<()> {
        let sample = GpSample {
            step,
            time: step as f64 * cfg.dt,
            mass: psi.mass(),
            energy: diagnostics::energy(psi, cfg.epsilon)?,
        };
        on_snapshot(&sample, psi)?;
        samples.push(sample);
        Ok(())
    };
    record(0, &psi)?;
    for step in 1..=steps {
        solver.step(&mut psi)?;
        let stride_hit = cfg.snapshot_stride > 0 && step % cfg.snapshot_stride == 0;
        if stride_hit || step == steps {
            record(step, &psi)?;
        }
    }
    Ok(GpRun { samples, final_state: psi })
}

#[derive(Debug, Clone)]
pub struct TrackingSample {
    pub sample: GpSample,
    pub detected: DetectedVortices,
    /// State of the reduced dynamics at the snapshot time.
    pub reference: VortexConfiguration,
    /// Largest distance from a reference vortex to the nearest detection of
    /// the same winding.
    pub position_error: f64,
    /// `||j(psi) - j(psi*(a(t)))||_{L^{4/3}}`.
    pub current_error: f64,
}

#[derive(Debug, Clone)]
pub struct CrossCheck {
    pub samples: Vec<TrackingSample>,
    pub run: GpRun,
}

impl CrossCheck {
    pub fn max_position_error(&self) -> f64 {
        self.samples.iter().map(|s| s.position_error).fold(0.0, f64::max)
    }
}

/// Runs the reference solver from `psi*(a(0))` and compares every snapshot
/// with the reconstruction from the reduced trajectory.
pub fn cross_check<F>(
    spec: &ReconstructionSpec,
    cfg: &GpConfig,
    trajectory: &TrajectoryRecord,
    mut on_snapshot: F,
) -> Result<CrossCheck>
where
    F: FnMut(&TrackingSample, &ComplexField) -> Result<()>,
{
    if cfg.grid != spec.grid || cfg.epsilon != spec.epsilon {
        return Err(Error::InvalidParams("solver and reconstruction settings differ".into()));
    }
    if trajectory.final_time() + 0.5 * trajectory.dt < cfg.t_max {
        return Err(Error::InvalidParams(format!(
            "trajectory ends at t = {}, before t_max = {}",
            trajectory.final_time(),
            cfg.t_max
        )));
    }
    let initial = reconstruct_psi(spec)?;
    let mut samples = Vec::new();
    let run = run_gp(&initial, cfg, |sample, psi| {
        let reference = trajectory.states[trajectory.nearest_index(sample.time)].clone();
        let detected = localize_vortices(psi);
        let position_error = detected.distances_to(&reference).into_iter().fold(0.0, f64::max);
        let u = canonical_map(&reference, spec.n_modes, &spec.grid)?;
        let star = smooth_cores(&reference, &spec.profile, u);
        let current_error = lp_norm(
            &diagnostics::supercurrent(psi)?,
            &diagnostics::supercurrent(&star)?,
            4.0 / 3.0,
        )?;
        let tracked = TrackingSample { sample: *sample, detected, reference, position_error, current_error };
        on_snapshot(&tracked, psi)?;
        samples.push(tracked);
        Ok(())
    })?;
    Ok(CrossCheck { samples, run })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Vec2;

    fn config(grid: PolarGrid, dt: f64, t_max: f64, epsilon: f64) -> GpConfig {
        GpConfig { epsilon, dt, t_max, grid, snapshot_stride: 0 }
    }

    fn smooth(grid: PolarGrid) -> ComplexField {
        // Neumann-compatible bump: radial derivative vanishes at r = 1.
        ComplexField::from_fn(grid, |p: Vec2| {
            let r2 = p.norm_sqr();
            let bump = (1.0 - r2) * (1.0 - r2);
            Complex64::new(1.0 + 0.3 * bump * p.x, 0.2 * bump * (p.y - 0.5 * p.x * p.y))
        })
        .unwrap()
    }

    #[test]
    fn constant_is_fixed() {
        let g = PolarGrid::new(16, 32).unwrap();
        let one = ComplexField::constant(g, Complex64::new(1.0, 0.0));
        let out = gp_step(&one, &config(g, 1e-2, 1e-2, 0.1)).unwrap();
        for v in out.values() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-13, "{v}");
        }
    }

    #[test]
    fn nonlinear_rotation_closed_form() {
        let mut v = vec![Complex64::new(2.0, 0.0); 3];
        nonlinear_flow(&mut v, 0.1, 1.0);
        let expected = Complex64::from_polar(2.0, 0.3);
        assert!(v.iter().all(|x| (x - expected).norm() < 1e-15));
    }

    #[test]
    fn mass_is_conserved_for_resolved_modes() {
        let g = PolarGrid::new(32, 64).unwrap();
        let psi = ComplexField::from_fn(g, |p: Vec2| {
            let r2 = p.norm_sqr();
            Complex64::new(1.0 + 0.4 * (1.0 - r2) * (1.0 - r2), 0.3 * r2 * (1.5 - r2))
        })
        .unwrap();
        let run = run_gp(&psi, &config(g, 1e-3, 0.05, 0.2), |_, _| Ok(())).unwrap();
        assert!(run.mass_drift() < 1e-13, "{}", run.mass_drift());
    }

    #[test]
    fn pole_filter_loses_little_mass() {
        let g = PolarGrid::new(32, 64).unwrap();
        let psi = smooth(g);
        let run = run_gp(&psi, &config(g, 1e-3, 0.05, 0.2), |_, _| Ok(())).unwrap();
        assert!(run.mass_drift() < 1e-8, "{}", run.mass_drift());
    }

    #[test]
    fn angular_mode_is_preserved() {
        let g = PolarGrid::new(24, 48).unwrap();
        let mut solver = GpSolver::new(config(g, 1e-3, 1e-3, 1.0)).unwrap();
        let field = ComplexField::from_fn(g, |p: Vec2| {
            let r = p.norm();
            Complex64::new(p.x, p.y) / r * (r * r * (1.5 - r))
        })
        .unwrap();
        let mut values = field.values().to_vec();
        solver.linear_step(&mut values);
        for i in 0..g.n_r() {
            let base = values[g.index(i, 0)];
            for k in 0..g.n_theta() {
                let rot = Complex64::from_polar(1.0, g.angle(k));
                assert!((values[g.index(i, k)] - base * rot).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn second_order_in_time() {
        let g = PolarGrid::new(16, 32).unwrap();
        let psi = smooth(g);
        let t = 0.02;
        let run = |dt: f64| run_gp(&psi, &config(g, dt, t, 0.5), |_, _| Ok(())).unwrap().final_state;
        let (a, b, c) = (run(5e-4), run(2.5e-4), run(1.25e-4));
        let diff = |x: &ComplexField, y: &ComplexField| crate::metrics::lp_norm(x, y, 2.0).unwrap();
        let ratio = diff(&a, &b) / diff(&b, &c);
        assert!((ratio - 4.0).abs() < 0.4, "{ratio}");
    }

    #[test]
    fn rejects_bad_configs() {
        let g = PolarGrid::new(8, 16).unwrap();
        assert!(GpSolver::new(config(g, 0.0, 1.0, 0.1)).is_err());
        assert!(GpSolver::new(config(g, 0.3, 1.0, 0.1)).is_err());
        assert!(GpSolver::new(config(g, 0.1, 1.0, -1.0)).is_err());
        let mut s = GpSolver::new(config(g, 0.1, 1.0, 0.1)).unwrap();
        let mut other = ComplexField::constant(PolarGrid::new(8, 8).unwrap(), Complex64::new(1.0, 0.0));
        assert!(matches!(s.step(&mut other), Err(Error::GridMismatch(..))));
    }
}
