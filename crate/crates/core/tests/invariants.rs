use std::f64::consts::PI;

use num_complex::Complex64;

use vortexlab::diagnostics::{divergence, energy, supercurrent};
use vortexlab::dynamics::{integrate, w_epsilon, IntegratorConfig, VortexModel};
use vortexlab::gp::{run_gp, GpConfig};
use vortexlab::localize::localize_vortices;
use vortexlab::metrics::lp_magnitude;
use vortexlab::profile::{compute_gamma, localized_energy, solve_profile, DEFAULT_MESH, DEFAULT_TOL};
use vortexlab::reconstruction::{canonical_map, reconstruct_psi, ReconstructionSpec};
use vortexlab::{ComplexField, PolarGrid, Vec2, VortexConfiguration};

fn case1() -> VortexConfiguration {
    VortexConfiguration::from_triples(&[(0.5, 0.0, 1), (-0.5, 0.0, 1)]).unwrap()
}

fn grid(n_r: usize) -> PolarGrid {
    PolarGrid::new(n_r, 2 * n_r).unwrap()
}

struct CurrentErrors {
    /// `max |j(u*) + curl G|` away from cores and edges.
    stream: f64,
    /// `max |div j(u*)|` away from cores and edges.
    div: f64,
    /// `max |j . nu| / max |j|` on the outermost ring.
    normal: f64,
}

fn current_errors(c: &VortexConfiguration, n_r: usize) -> CurrentErrors {
    let g = grid(n_r);
    let j = supercurrent(&canonical_map(c, 64, &g).unwrap()).unwrap();
    let div = divergence(&j).unwrap();
    let r_n = VortexModel::new(64).unwrap().boundary_correction(c).unwrap();
    let mut out = CurrentErrors { stream: 0.0, div: 0.0, normal: 0.0 };
    let mut j_outer: f64 = 0.0;
    for (idx, p) in g.nodes().iter().enumerate() {
        let (i, _) = g.ring_angle(idx);
        let jj = j.values()[idx];
        if i == n_r - 1 {
            out.normal = out.normal.max((jj.dot(*p) / p.norm()).abs());
            j_outer = j_outer.max(jj.norm());
            continue;
        }
        if i == 0 || c.positions().iter().any(|a| (*p - *a).norm() <= 0.2) {
            continue;
        }
        // G = sum d ln|x - a| + R_n, and -curl G = (-d_y G, d_x G)
        let mut grad = r_n.gradient(*p).unwrap();
        for (a, d) in c.positions().iter().zip(c.degrees()) {
            let v = *p - *a;
            grad += v * (d.sign() / v.norm_sqr());
        }
        out.stream = out.stream.max((Vec2::new(-grad.y, grad.x) - jj).norm());
        out.div = out.div.max(div.values()[idx].abs());
    }
    out.normal /= j_outer;
    out
}

#[test]
fn canonical_current_is_a_rotated_stream_gradient() {
    let c = VortexConfiguration::from_triples(&[(0.5, 0.0, 1), (-0.3, 0.4, -1), (0.0, -0.4, 1)]).unwrap();
    let (coarse, fine) = (current_errors(&c, 128), current_errors(&c, 256));
    // second order: halving h divides by about four
    assert!(fine.stream < 1e-2 && coarse.stream / fine.stream > 3.0, "{} {}", coarse.stream, fine.stream);
    assert!(coarse.div / fine.div > 3.0, "{} {}", coarse.div, fine.div);
    // the outermost ring sits half a cell inside the wall
    assert!(fine.normal < 1.0 / 256.0, "{}", fine.normal);
    assert!(coarse.normal / fine.normal > 1.7, "{} {}", coarse.normal, fine.normal);
}

#[test]
fn centered_vortex_current_norm() {
    let c = VortexConfiguration::from_triples(&[(0.0, 0.0, 1)]).unwrap();
    let j = supercurrent(&canonical_map(&c, 16, &grid(256)).unwrap()).unwrap();
    // int (1/r)^{4/3} r dr dtheta = 3 pi
    let exact = (3.0 * PI).powf(0.75);
    let got = lp_magnitude(&j, 4.0 / 3.0).unwrap();
    assert!((got - exact).abs() <= 0.02 * exact, "{got} vs {exact}");
}

#[test]
fn energy_gap_is_bounded_by_core_ratio_squared() {
    let c = case1();
    let g = grid(256);
    let gamma = compute_gamma(&[1e2, 1e3, 1e4], DEFAULT_MESH, DEFAULT_TOL).unwrap().gamma;
    let r0 = 0.3;
    for eps in [0.1, 0.05, 0.025] {
        let spec = ReconstructionSpec::new(c.clone(), eps, r0, 64, g, DEFAULT_MESH, DEFAULT_TOL).unwrap();
        let gap = energy(&reconstruct_psi(&spec).unwrap(), eps).unwrap() - w_epsilon(&c, 64, eps, gamma).unwrap();
        let bound = 1.5 * c.len() as f64 * (eps / r0).powi(2);
        println!("eps {eps}: gap {gap:.6e}, bound {bound:.6e}");
        assert!(gap <= bound, "eps {eps}: gap {gap} exceeds {bound}");
    }
}

#[test]
fn mirror_symmetric_dipole_stays_symmetric() {
    let c = VortexConfiguration::from_triples(&[(0.3, 0.4, 1), (0.3, -0.4, -1)]).unwrap();
    let rec = integrate(&c, &IntegratorConfig::new(1e-3, 0.2, 64)).unwrap();
    assert!(!rec.termination.is_guard());
    for s in &rec.states {
        let (p, q) = (s.positions()[0], s.positions()[1]);
        assert!((p.x - q.x).abs() <= 1e-14 && (p.y + q.y).abs() <= 1e-14, "{p:?} {q:?}");
    }
}

#[test]
fn energy_drift_is_fourth_order() {
    let c = VortexConfiguration::from_triples(&[(0.5, 0.0, 1), (-0.5, 0.0, 1), (0.0, 0.3, -1)]).unwrap();
    let drift = |dt: f64| {
        let rec = integrate(&c, &IntegratorConfig::new(dt, 1.0, 64)).unwrap();
        assert!(!rec.termination.is_guard());
        let w0 = rec.renormalized_energy[0];
        rec.renormalized_energy.iter().map(|w| (w - w0).abs()).fold(0.0, f64::max)
    };
    let d: Vec<f64> = [2e-2, 1e-2, 5e-3].iter().map(|&dt| drift(dt)).collect();
    for w in d.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((3.7..=4.3).contains(&order), "{d:?}");
    }
}

#[test]
fn profile_energy_converges_at_second_order() {
    let e: Vec<f64> = [2000, 4000, 8000, 16000]
        .iter()
        .map(|&m| localized_energy(&solve_profile(0.01, 0.3, m, DEFAULT_TOL).unwrap()))
        .collect();
    let steps: Vec<f64> = e.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(steps.iter().all(|s| *s > 0.0), "not monotone: {e:?}");
    for w in steps.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.8..=2.2).contains(&order), "{e:?}");
    }
}

#[test]
fn gp_solver_converges_at_second_order_in_space() {
    // Q = int psi(T) (1 + x + i y^2) on successively halved grids
    let q: Vec<f64> = [16, 32, 64, 128]
        .iter()
        .map(|&n| {
            let g = grid(n);
            let psi = ComplexField::from_fn(g, |p| {
                let b = (1.0 - p.norm_sqr()).powi(2);
                Complex64::new(1.0 + 0.3 * b * p.x, 0.2 * b * (p.y - 0.5 * p.x * p.y))
            })
            .unwrap();
            let cfg = GpConfig { epsilon: 0.5, dt: 1e-3, t_max: 0.05, grid: g, snapshot_stride: 0 };
            let out = run_gp(&psi, &cfg, |_, _| Ok(())).unwrap().final_state;
            let w: Vec<f64> = g
                .nodes()
                .iter()
                .zip(out.values())
                .map(|(p, v)| (v * Complex64::new(1.0 + p.x, p.y * p.y)).re)
                .collect();
            g.integrate(&w)
        })
        .collect();
    for w in q.windows(3) {
        let order = ((w[0] - w[1]) / (w[1] - w[2])).abs().log2();
        assert!((1.8..=2.5).contains(&order), "{q:?}");
    }
}

#[test]
fn gp_run_conserves_total_winding_for_case1() {
    let g = grid(96);
    let spec = ReconstructionSpec::new(case1(), 0.1, 0.3, 64, g, DEFAULT_MESH, DEFAULT_TOL).unwrap();
    let cfg = GpConfig { epsilon: 0.1, dt: 2e-4, t_max: 1.0, grid: g, snapshot_stride: 250 };
    let mut snapshots = 0;
    run_gp(&reconstruct_psi(&spec).unwrap(), &cfg, |s, psi| {
        let d = localize_vortices(psi);
        assert_eq!(d.windings, vec![1, 1], "t = {}", s.time);
        snapshots += 1;
        Ok(())
    })
    .unwrap();
    assert_eq!(snapshots, 21);
}
