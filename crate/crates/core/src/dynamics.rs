//! Reduced point-vortex dynamics on the unit disk.
//!
//! Vortex centers follow `a_j' = -(1/pi) d_j J grad_{a_j} W` where `W` is the
//! renormalized energy and `J = [[0, 1], [-1, 0]]`. The boundary correction
//! `R` is replaced by its spectral truncation `R_n`, giving the forcing
//!
//! ```text
//! F_j = 2 J ( grad R_n(a_j) + sum_{k != j} d_k (a_j - a_k) / |a_j - a_k|^2 )
//! ```
//!
//! integrated with classical fixed-step RK4.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::metrics::{linear_fit, LinearFit};
use crate::model::{
    separation_of, Degree, Limiter, Separation, Termination, TrajectoryRecord, Vec2,
    VortexConfiguration,
};
use crate::par;
use crate::spectral::{HarmonicExtension, LogBoundaryProjector, DEFAULT_OVERSAMPLE};

/// Default guard threshold on the separation.
pub const DEFAULT_RHO_MIN: f64 = 1e-3;

/// Forcing term evaluated at one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ForcingEvaluation {
    pub velocities: Vec<Vec2>,
    pub grad_w: Vec<Vec2>,
    pub separation_at_eval: Separation,
}

/// Evaluates `R_n`, the forcing and the renormalized energy for a fixed
/// truncation order. Reuses one FFT plan across evaluations.
#[derive(Debug)]
pub struct VortexModel {
    projector: LogBoundaryProjector,
}

impl VortexModel {
    pub fn new(n_modes: usize) -> Result<Self> {
        Self::with_oversample(n_modes, DEFAULT_OVERSAMPLE)
    }

    pub fn with_oversample(n_modes: usize, oversample: usize) -> Result<Self> {
        Ok(VortexModel {
            projector: LogBoundaryProjector::new(n_modes, oversample)?,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.projector.max_mode()
    }

    /// Spectral approximation `R_n` of the boundary correction.
    pub fn boundary_correction(&self, config: &VortexConfiguration) -> Result<HarmonicExtension> {
        self.correction_raw(config.positions(), config.degrees())
    }

    fn correction_raw(&self, positions: &[Vec2], degrees: &[Degree]) -> Result<HarmonicExtension> {
        check_distinct(positions)?;
        Ok(HarmonicExtension::dirichlet(
            self.projector.project_raw(positions, degrees)?,
        ))
    }

    /// `grad R_n(a_j) + sum_{k != j} d_k (a_j - a_k) / |a_j - a_k|^2` for every `j`.
    fn brackets(positions: &[Vec2], degrees: &[Degree], r_n: &HarmonicExtension) -> Vec<Vec2> {
        positions
            .iter()
            .enumerate()
            .map(|(j, &a)| {
                let mut s = r_n.gradient_unchecked(a);
                for (k, (&b, d)) in positions.iter().zip(degrees).enumerate() {
                    if k != j {
                        let diff = a - b;
                        s += diff * (d.sign() / diff.norm_sqr());
                    }
                }
                s
            })
            .collect()
    }

    /// Velocities `F^n(b)` and the boundary correction used to compute them.
    fn velocities_raw(
        &self,
        positions: &[Vec2],
        degrees: &[Degree],
    ) -> Result<(Vec<Vec2>, HarmonicExtension)> {
        let r_n = self.correction_raw(positions, degrees)?;
        let v = Self::brackets(positions, degrees, &r_n)
            .into_iter()
            .map(|s| s.symplectic() * 2.0)
            .collect();
        Ok((v, r_n))
    }

    pub fn forcing(&self, config: &VortexConfiguration) -> Result<ForcingEvaluation> {
        let positions = config.positions();
        let degrees = config.degrees();
        let r_n = self.correction_raw(positions, degrees)?;
        let brackets = Self::brackets(positions, degrees, &r_n);
        let grad_w: Vec<Vec2> = brackets
            .iter()
            .zip(degrees)
            .map(|(s, d)| *s * (-2.0 * PI * d.sign()))
            .collect();
        let velocities = grad_w
            .iter()
            .zip(degrees)
            .map(|(g, d)| g.symplectic() * (-d.sign() / PI))
            .collect();
        Ok(ForcingEvaluation {
            velocities,
            grad_w,
            separation_at_eval: config.separation(),
        })
    }

    /// `W = -pi sum_{i != j} d_i d_j ln|a_i - a_j| - pi sum_j d_j R_n(a_j)`,
    /// with the pair sum over ordered pairs.
    pub fn renormalized_energy(&self, config: &VortexConfiguration) -> Result<f64> {
        let r_n = self.boundary_correction(config)?;
        Ok(energy_from_correction(config.positions(), config.degrees(), &r_n))
    }
}

fn energy_from_correction(positions: &[Vec2], degrees: &[Degree], r_n: &HarmonicExtension) -> f64 {
    let mut pairs = 0.0;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            pairs += degrees[i].sign() * degrees[j].sign() * (positions[i] - positions[j]).norm().ln();
        }
    }
    let boundary: f64 = positions
        .iter()
        .zip(degrees)
        .map(|(a, d)| d.sign() * r_n.value_unchecked(*a))
        .sum();
    -2.0 * PI * pairs - PI * boundary
}

fn check_distinct(positions: &[Vec2]) -> Result<()> {
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            if (positions[i] - positions[j]).norm() <= f64::EPSILON {
                return Err(Error::DegenerateConfig(format!(
                    "vortices {i} and {j} coincide"
                )));
            }
        }
    }
    Ok(())
}

/// Renormalized energy with `R` approximated by `n_modes` Fourier modes.
pub fn renormalized_energy(config: &VortexConfiguration, n_modes: usize) -> Result<f64> {
    VortexModel::new(n_modes)?.renormalized_energy(config)
}

/// `W_eps = N (gamma + pi ln(1/eps)) + W`.
pub fn w_epsilon(
    config: &VortexConfiguration,
    n_modes: usize,
    epsilon: f64,
    gamma_const: f64,
) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParams(format!("epsilon must be positive, got {epsilon}")));
    }
    if config.is_empty() {
        return Ok(0.0);
    }
    let w = renormalized_energy(config, n_modes)?;
    Ok(config.len() as f64 * (gamma_const + PI * (1.0 / epsilon).ln()) + w)
}

/// Forcing `F^n` at a configuration.
pub fn forcing(config: &VortexConfiguration, n_modes: usize) -> Result<ForcingEvaluation> {
    VortexModel::new(n_modes)?.forcing(config)
}

/// Fixed-step RK4 settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_max: f64,
    pub n_modes: usize,
    pub rho_min: f64,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_max: f64, n_modes: usize) -> Self {
        IntegratorConfig {
            dt,
            t_max,
            n_modes,
            rho_min: DEFAULT_RHO_MIN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max > self.dt && self.t_max.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "t_max ({}) must exceed dt ({})",
                self.t_max, self.dt
            )));
        }
        if self.n_modes < 1 {
            return Err(Error::InvalidConfig("n_modes must be >= 1".into()));
        }
        if !(self.rho_min > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "rho_min must be positive, got {}",
                self.rho_min
            )));
        }
        Ok(())
    }

    /// Step sizes: `dt` repeated, plus one shortened final step when `dt`
    /// does not divide `t_max`.
    fn steps(&self) -> (usize, Option<f64>) {
        let ratio = self.t_max / self.dt;
        let full = (ratio + 1e-9).floor() as usize;
        let rest = self.t_max - full as f64 * self.dt;
        if rest > 1e-12 * self.t_max {
            (full, Some(rest))
        } else {
            (full, None)
        }
    }
}

fn guard_kind(sep: &Separation) -> Termination {
    match sep.limiter {
        Limiter::Pair(_, _) => Termination::CollisionGuard,
        _ => Termination::BoundaryGuard,
    }
}

/// Integrates the reduced dynamics with classical RK4.
///
/// Every stage configuration is checked against `rho_min` before the forcing
/// is evaluated there; a violation ends the record at the last accepted state
/// with the corresponding guard termination.
pub fn integrate(initial: &VortexConfiguration, cfg: &IntegratorConfig) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let sep0 = initial.separation();
    if !(sep0.rho > cfg.rho_min) {
        return Err(Error::InvalidConfig(format!(
            "initial separation {} does not exceed rho_min {}",
            sep0.rho, cfg.rho_min
        )));
    }
    let model = VortexModel::new(cfg.n_modes)?;
    let degrees = initial.degrees();
    let n = initial.len();

    let mut y: Vec<Vec2> = initial.positions().to_vec();
    let (mut k1, r0) = model.velocities_raw(&y, degrees)?;

    let mut record = TrajectoryRecord {
        times: vec![0.0],
        states: vec![initial.clone()],
        renormalized_energy: vec![energy_from_correction(&y, degrees, &r0)],
        min_separation: vec![sep0],
        termination: Termination::ReachedTmax,
        dt: cfg.dt,
        n_modes: cfg.n_modes,
    };

    let (full, rest) = cfg.steps();
    let total = full + usize::from(rest.is_some());
    let mut stage = vec![Vec2::ZERO; n];

    for step in 0..total {
        let h = if step < full { cfg.dt } else { rest.unwrap_or(cfg.dt) };
        let t_next = if step + 1 == total { cfg.t_max } else { (step + 1) as f64 * cfg.dt };

        let advance = |base: &[Vec2], k: &[Vec2], factor: f64, out: &mut Vec<Vec2>| {
            for ((o, b), v) in out.iter_mut().zip(base).zip(k) {
                *o = *b + *v * factor;
            }
        };
        let guarded = |pts: &[Vec2]| -> Option<Termination> {
            let s = separation_of(pts);
            (s.rho <= cfg.rho_min).then(|| guard_kind(&s))
        };

        advance(&y, &k1, 0.5 * h, &mut stage);
        if let Some(t) = guarded(&stage) {
            record.termination = t;
            return Ok(record);
        }
        let (k2, _) = model.velocities_raw(&stage, degrees)?;

        advance(&y, &k2, 0.5 * h, &mut stage);
        if let Some(t) = guarded(&stage) {
            record.termination = t;
            return Ok(record);
        }
        let (k3, _) = model.velocities_raw(&stage, degrees)?;

        advance(&y, &k3, h, &mut stage);
        if let Some(t) = guarded(&stage) {
            record.termination = t;
            return Ok(record);
        }
        let (k4, _) = model.velocities_raw(&stage, degrees)?;

        let next: Vec<Vec2> = (0..n)
            .map(|j| y[j] + (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0))
            .collect();
        let sep = separation_of(&next);
        if sep.rho <= cfg.rho_min {
            record.termination = guard_kind(&sep);
            return Ok(record);
        }
        let (k_next, r_next) = model.velocities_raw(&next, degrees)?;

        record.times.push(t_next);
        record
            .renormalized_energy
            .push(energy_from_correction(&next, degrees, &r_next));
        record.min_separation.push(sep);
        record.states.push(initial.with_positions(next.clone())?);
        y = next;
        k1 = k_next;
    }
    Ok(record)
}

/// Parameter varied in a convergence study.
#[derive(Clone, Debug, PartialEq)]
pub enum Sweep {
    TimeSteps(Vec<f64>),
    Modes(Vec<usize>),
}

/// One row of a convergence table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    /// `dt` or `n` of the run.
    pub value: f64,
    /// `|b(T) - b_ref(T)|` over all vortex coordinates.
    pub error: f64,
}

#[derive(Clone, Debug)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Log-log fit (time steps) or log-lin fit (modes) over rows above
    /// [`ERROR_FLOOR`]; `None` when fewer than two rows qualify.
    pub fit: Option<LinearFit>,
    pub fitted_rows: usize,
    pub reference: VortexConfiguration,
}

/// Errors below this are round-off and excluded from rate fits.
pub const ERROR_FLOOR: f64 = 1e-13;

fn run_to_end(initial: &VortexConfiguration, cfg: &IntegratorConfig) -> Result<VortexConfiguration> {
    let rec = integrate(initial, cfg)?;
    if rec.termination.is_guard() {
        return Err(Error::InvalidConfig(format!(
            "run with dt = {}, n = {} stopped early ({}) at t = {}",
            cfg.dt,
            cfg.n_modes,
            rec.termination.as_str(),
            rec.final_time()
        )));
    }
    Ok(rec.final_state().clone())
}

fn distance(a: &VortexConfiguration, b: &VortexConfiguration) -> f64 {
    a.positions()
        .iter()
        .zip(b.positions())
        .map(|(p, q)| (*p - *q).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Final-time errors of runs varying `dt` or `n` against a reference run,
/// with the fitted rate. Runs are independent and execute in parallel.
pub fn convergence_study(
    initial: &VortexConfiguration,
    base: &IntegratorConfig,
    sweep: &Sweep,
    reference: &IntegratorConfig,
) -> Result<ConvergenceTable> {
    let configs: Vec<IntegratorConfig> = match sweep {
        Sweep::TimeSteps(dts) => dts.iter().map(|&dt| IntegratorConfig { dt, ..*base }).collect(),
        Sweep::Modes(ns) => ns
            .iter()
            .map(|&n_modes| IntegratorConfig { n_modes, ..*base })
            .collect(),
    };
    if configs.is_empty() {
        return Err(Error::InvalidParams("empty sweep".into()));
    }
    let (reference_state, runs) = par::join(
        || run_to_end(initial, reference),
        || par::map_jobs(&configs, |c| run_to_end(initial, c)),
    );
    let reference_state = reference_state?;
    let mut rows = Vec::with_capacity(configs.len());
    for (c, run) in configs.iter().zip(runs) {
        let value = match sweep {
            Sweep::TimeSteps(_) => c.dt,
            Sweep::Modes(_) => c.n_modes as f64,
        };
        rows.push(ConvergenceRow {
            value,
            error: distance(&run?, &reference_state),
        });
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.error > ERROR_FLOOR)
        .map(|r| match sweep {
            Sweep::TimeSteps(_) => (r.value.ln(), r.error.ln()),
            Sweep::Modes(_) => (r.value, r.error.ln()),
        })
        .collect();
    let fit = if points.len() >= 2 { Some(linear_fit(&points)?) } else { None };
    Ok(ConvergenceTable {
        rows,
        fit,
        fitted_rows: points.len(),
        reference: reference_state,
    })
}
