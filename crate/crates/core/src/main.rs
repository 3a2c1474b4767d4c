use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use vortexlab::dynamics::{convergence_study, integrate, ConvergenceTable, IntegratorConfig, Sweep};
use vortexlab::formats::{self, num};
use vortexlab::gp::{cross_check, GpConfig};
use vortexlab::localize::localize_vortices;
use vortexlab::metrics::{compare_fields, epsilon_regression, LinearFit, Metric};
use vortexlab::profile::{self, compute_gamma, localized_energy, solve_profile};
use vortexlab::reconstruction::{canonical_map, epsilon_study, reconstruct_psi, ReconstructionSpec};
use vortexlab::scenario::ScenarioConfig;
use vortexlab::{Error, Result};

#[derive(Parser)]
#[command(name = "vortexlab", version, about = "Vortex tracking for the Gross-Pitaevskii equation on the unit disk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the radial core profile and write (r, f) as CSV.
    Profile {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        r0: f64,
        #[arg(long, default_value_t = profile::DEFAULT_MESH)]
        mesh: usize,
        #[arg(long, default_value_t = profile::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Integrate the reduced vortex dynamics.
    Evolve {
        #[arg(long)]
        config: String,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Rebuild the wave function from a trajectory at a given time.
    Reconstruct {
        #[arg(long)]
        traj: String,
        #[arg(long)]
        time: f64,
        #[arg(long)]
        config: String,
        /// Write the canonical harmonic map instead of the smoothed field.
        #[arg(long)]
        unsmoothed: bool,
        #[arg(long, default_value_t = profile::DEFAULT_MESH)]
        mesh: usize,
        #[arg(long)]
        out: String,
    },
    /// Run the reference solver from the reconstructed initial field.
    GpRun {
        #[arg(long)]
        config: String,
        #[arg(long)]
        out_prefix: String,
        /// Time step of the reference solver (defaults to the scenario dt).
        #[arg(long)]
        dt: Option<f64>,
        /// Final time (defaults to the scenario t_max).
        #[arg(long)]
        t_max: Option<f64>,
        /// Steps between snapshots; 0 keeps only the endpoints.
        #[arg(long, default_value_t = 0)]
        snapshot_every: usize,
        #[arg(long, default_value_t = profile::DEFAULT_MESH)]
        mesh: usize,
    },
    /// Detect vortices in a field file.
    Localize {
        #[arg(long)]
        field: String,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Distance between two field files.
    Compare {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, value_enum, default_value_t = MetricArg::L2)]
        metric: MetricArg,
        /// Align the global phase of `b` to `a` first.
        #[arg(long)]
        mod_phase: bool,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Final-time error of the reduced dynamics against time step.
    SweepDt(SweepArgs<f64>),
    /// Final-time error of the reduced dynamics against boundary modes.
    SweepN(SweepArgs<usize>),
    /// Error of the reconstruction (or of the reference solver) against core size.
    SweepEps {
        #[arg(long)]
        config: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_enum, default_value_t = EpsMode::Reconstruction)]
        mode: EpsMode,
        /// Reference-solver time step in `gp` mode.
        #[arg(long)]
        gp_dt: Option<f64>,
        #[arg(long, default_value_t = profile::DEFAULT_MESH)]
        mesh: usize,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Extrapolate the core energy constant.
    Gamma {
        #[arg(long, value_delimiter = ',', required = true)]
        ratios: Vec<f64>,
        #[arg(long, default_value_t = profile::DEFAULT_MESH)]
        mesh: usize,
        #[arg(long, default_value_t = profile::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value = "-")]
        out: String,
    },
}

#[derive(Args)]
struct SweepArgs<T: Clone + Send + Sync + std::str::FromStr + 'static>
where
    <T as std::str::FromStr>::Err: std::error::Error + Send + Sync + 'static,
{
    #[arg(long)]
    config: String,
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<T>,
    /// Time step of the reference run (defaults to the scenario dt).
    #[arg(long)]
    reference_dt: Option<f64>,
    /// Boundary modes of the reference run.
    #[arg(long, default_value_t = 256)]
    reference_n: usize,
    /// Boundary modes of the swept runs in a time-step sweep (defaults to the scenario value).
    #[arg(long)]
    n_modes: Option<usize>,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    L43Supercurrent,
    L2,
    L2Gradient,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Metric {
        match m {
            MetricArg::L43Supercurrent => Metric::L43Supercurrent,
            MetricArg::L2 => Metric::L2,
            MetricArg::L2Gradient => Metric::L2Gradient,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EpsMode {
    Reconstruction,
    Gp,
}

enum Outcome {
    Done,
    Guard(String),
}

fn fit_lines(out: &mut String, name: &str, fit: &LinearFit) {
    writeln!(out, "# {name}_slope={}", num(fit.slope)).unwrap();
    writeln!(out, "# {name}_intercept={}", num(fit.intercept)).unwrap();
    writeln!(out, "# {name}_residual={}", num(fit.residual)).unwrap();
}

fn convergence_csv(label: &str, table: &ConvergenceTable) -> String {
    let mut out = format!("{label},error\n");
    for row in &table.rows {
        writeln!(out, "{},{}", num(row.value), num(row.error)).unwrap();
    }
    if let Some(fit) = &table.fit {
        fit_lines(&mut out, "fit", fit);
    }
    writeln!(out, "# fitted_rows={}", table.fitted_rows).unwrap();
    out
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Profile { epsilon, r0, mesh, tol, out } => {
            let p = solve_profile(epsilon, r0, mesh, tol)?;
            let mut csv = String::from("r,f\n");
            for (r, f) in p.nodes().iter().zip(p.values()) {
                writeln!(csv, "{},{}", num(*r), num(*f)).unwrap();
            }
            writeln!(csv, "# epsilon={}", num(epsilon)).unwrap();
            writeln!(csv, "# r0={}", num(r0)).unwrap();
            writeln!(csv, "# residual_norm={}", num(p.residual_norm())).unwrap();
            writeln!(csv, "# lower_bound_c={}", num(p.lower_bound_constant())).unwrap();
            writeln!(csv, "# localized_energy={}", num(localized_energy(&p))).unwrap();
            formats::write_output(&out, csv.as_bytes())?;
        }
        Command::Evolve { config, out } => {
            let scenario = ScenarioConfig::load(&config)?;
            let record = integrate(&scenario.configuration()?, &scenario.integrator())?;
            formats::write_output(&out, formats::encode_trajectory(&record).as_bytes())?;
            if record.termination.is_guard() {
                return Ok(Outcome::Guard(format!(
                    "{} at t = {}",
                    record.termination.as_str(),
                    num(record.final_time())
                )));
            }
        }
        Command::Reconstruct { traj, time, config, unsmoothed, mesh, out } => {
            let scenario = ScenarioConfig::load(&config)?;
            let record = formats::read_trajectory(&traj)?;
            if time < 0.0 || time > record.final_time() + 0.5 * record.dt {
                return Err(Error::InvalidParams(format!(
                    "time {time} outside the trajectory range [0, {}]",
                    record.final_time()
                )));
            }
            let state = record.states[record.nearest_index(time)].clone();
            let grid = scenario.polar_grid()?;
            let field = if unsmoothed {
                canonical_map(&state, scenario.n_modes, &grid)?
            } else {
                let spec = ReconstructionSpec::new(
                    state,
                    scenario.epsilon,
                    scenario.r0,
                    scenario.n_modes,
                    grid,
                    mesh,
                    profile::DEFAULT_TOL,
                )?;
                reconstruct_psi(&spec)?
            };
            formats::write_field(&out, &field)?;
        }
        Command::GpRun { config, out_prefix, dt, t_max, snapshot_every, mesh } => {
            let scenario = ScenarioConfig::load(&config)?;
            if let Some(dir) = std::path::Path::new(&format!("{out_prefix}series.csv")).parent() {
                std::fs::create_dir_all(dir)?;
            }
            let initial = scenario.configuration()?;
            let grid = scenario.polar_grid()?;
            let t_max = t_max.unwrap_or(scenario.t_max);
            let gp_cfg = GpConfig {
                epsilon: scenario.epsilon,
                dt: dt.unwrap_or(scenario.dt),
                t_max,
                grid,
                snapshot_stride: snapshot_every,
            };
            let trajectory = integrate(&initial, &IntegratorConfig { t_max, ..scenario.integrator() })?;
            if trajectory.termination.is_guard() {
                return Ok(Outcome::Guard(format!(
                    "reduced dynamics stopped early: {} at t = {}",
                    trajectory.termination.as_str(),
                    num(trajectory.final_time())
                )));
            }
            let spec = ReconstructionSpec::new(
                initial,
                scenario.epsilon,
                scenario.r0,
                scenario.n_modes,
                grid,
                mesh,
                profile::DEFAULT_TOL,
            )?;
            let mut vortices = String::from("t,x,y,winding\n");
            let check = cross_check(&spec, &gp_cfg, &trajectory, |s, psi| {
                let path = format!("{out_prefix}snapshot_{:08}.gpf", s.sample.step);
                formats::write_field(&path, psi)?;
                for (p, w) in s.detected.positions.iter().zip(&s.detected.windings) {
                    writeln!(vortices, "{},{},{},{w}", num(s.sample.time), num(p.x), num(p.y)).unwrap();
                }
                Ok(())
            })?;
            let mut series = String::from("t,mass,energy,position_error,current_error\n");
            for s in &check.samples {
                writeln!(
                    series,
                    "{},{},{},{},{}",
                    num(s.sample.time),
                    num(s.sample.mass),
                    num(s.sample.energy),
                    num(s.position_error),
                    num(s.current_error)
                )
                .unwrap();
            }
            writeln!(series, "# epsilon={}", num(gp_cfg.epsilon)).unwrap();
            writeln!(series, "# dt={}", num(gp_cfg.dt)).unwrap();
            writeln!(series, "# grid={}", gp_cfg.grid).unwrap();
            formats::write_output(&format!("{out_prefix}series.csv"), series.as_bytes())?;
            formats::write_output(&format!("{out_prefix}vortices.csv"), vortices.as_bytes())?;
        }
        Command::Localize { field, out } => {
            let f = formats::read_field(&field)?;
            let d = localize_vortices(&f);
            let mut csv = String::from("x,y,winding\n");
            for (p, w) in d.positions.iter().zip(&d.windings) {
                writeln!(csv, "{},{},{w}", num(p.x), num(p.y)).unwrap();
            }
            formats::write_output(&out, csv.as_bytes())?;
        }
        Command::Compare { a, b, metric, mod_phase, out } => {
            let (fa, fb) = (formats::read_field(&a)?, formats::read_field(&b)?);
            let metric_name = metric.to_possible_value().unwrap().get_name().to_string();
            let value = compare_fields(&fa, &fb, metric.into(), mod_phase)?;
            let csv = format!("metric,mod_phase,value\n{metric_name},{mod_phase},{}\n", num(value));
            formats::write_output(&out, csv.as_bytes())?;
        }
        Command::SweepDt(args) => {
            let scenario = ScenarioConfig::load(&args.config)?;
            let base = IntegratorConfig { n_modes: args.n_modes.unwrap_or(scenario.n_modes), ..scenario.integrator() };
            let reference = IntegratorConfig {
                dt: args.reference_dt.unwrap_or(scenario.dt),
                n_modes: args.reference_n,
                ..base
            };
            let table = convergence_study(&scenario.configuration()?, &base, &Sweep::TimeSteps(args.values), &reference)?;
            formats::write_output(&args.out, convergence_csv("dt", &table).as_bytes())?;
        }
        Command::SweepN(args) => {
            let scenario = ScenarioConfig::load(&args.config)?;
            let base = scenario.integrator();
            let reference = IntegratorConfig {
                dt: args.reference_dt.unwrap_or(scenario.dt),
                n_modes: args.reference_n,
                ..base
            };
            let table = convergence_study(&scenario.configuration()?, &base, &Sweep::Modes(args.values), &reference)?;
            formats::write_output(&args.out, convergence_csv("n", &table).as_bytes())?;
        }
        Command::SweepEps { config, values, mode, gp_dt, mesh, out } => {
            let scenario = ScenarioConfig::load(&config)?;
            let initial = scenario.configuration()?;
            let grid = scenario.polar_grid()?;
            let csv = match mode {
                EpsMode::Reconstruction => {
                    let study = epsilon_study(
                        &initial,
                        scenario.r0,
                        scenario.n_modes,
                        &grid,
                        &values,
                        mesh,
                        profile::DEFAULT_TOL,
                    )?;
                    let mut csv = String::from("epsilon,field_error,current_error\n");
                    for r in &study.rows {
                        writeln!(csv, "{},{},{}", num(r.epsilon), num(r.field_error), num(r.current_error)).unwrap();
                    }
                    fit_lines(&mut csv, "field", &study.field_fit);
                    fit_lines(&mut csv, "current", &study.current_fit);
                    csv
                }
                EpsMode::Gp => {
                    let trajectory = integrate(&initial, &scenario.integrator())?;
                    if trajectory.termination.is_guard() {
                        return Ok(Outcome::Guard(format!(
                            "reduced dynamics stopped early: {}",
                            trajectory.termination.as_str()
                        )));
                    }
                    let mut csv = String::from("epsilon,position_error,current_error\n");
                    let mut rows = Vec::new();
                    for &epsilon in &values {
                        let spec = ReconstructionSpec::new(
                            initial.clone(),
                            epsilon,
                            scenario.r0,
                            scenario.n_modes,
                            grid,
                            mesh,
                            profile::DEFAULT_TOL,
                        )?;
                        let cfg = GpConfig {
                            epsilon,
                            dt: gp_dt.unwrap_or(scenario.dt),
                            t_max: scenario.t_max,
                            grid,
                            snapshot_stride: 0,
                        };
                        let check = cross_check(&spec, &cfg, &trajectory, |_, _| Ok(()))?;
                        let last = check.samples.last().expect("final snapshot");
                        writeln!(csv, "{},{},{}", num(epsilon), num(last.position_error), num(last.current_error))
                            .unwrap();
                        rows.push((epsilon, last.current_error));
                    }
                    if rows.len() >= 3 {
                        fit_lines(&mut csv, "current", &epsilon_regression(&rows)?);
                    }
                    csv
                }
            };
            formats::write_output(&out, csv.as_bytes())?;
        }
        Command::Gamma { ratios, mesh, tol, out } => {
            let est = compute_gamma(&ratios, mesh, tol)?;
            let mut csv = String::from("ratio,energy,excess\n");
            for s in &est.samples {
                writeln!(csv, "{},{},{}", num(s.ratio), num(s.energy), num(s.excess)).unwrap();
            }
            writeln!(csv, "# gamma={}", num(est.gamma)).unwrap();
            writeln!(csv, "# uncertainty={}", num(est.uncertainty)).unwrap();
            formats::write_output(&out, csv.as_bytes())?;
        }
    }
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Guard(msg)) => {
            eprintln!("stopped early: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
