//! Convergence of the unfolded, rescaled velocity to the local limit.
//!
//! For each member of the family the thin-domain problem is solved and
//! unfolded. Macro cell `k` is compared with the cell solutions `chi^xi`,
//! `xi = f' - grad P̂` from the macroscopic solve, at the 2x2 Gauss points
//! of the cell.

use rayon::prelude::*;
use thinpore::cell_problems::{build_permeability_table, uniform_directions, CellSolver};
use thinpore::fields::{unfold, StaggeredField};
use thinpore::geometry::{build_cell, build_thin_medium};
use thinpore::macroscale::DarcySolution;
use thinpore::vi_solver::{BinghamProblem, BinghamSolver};

use crate::config::{Command, ExperimentConfig};
use crate::report::StudyReport;
use crate::runs::darcy_solution;
use crate::CliError;

/// Bilinear interpolation of cell-centered values, constant beyond the
/// outermost centers.
fn bilinear(sol: &DarcySolution<f64>, values: &[[f64; 2]], x: [f64; 2]) -> [f64; 2] {
    let [nx, ny] = sol.grid.dims;
    let h = sol.grid.spacing();
    let locate = |x: f64, h: f64, n: usize| {
        let s = (x / h - 0.5).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        (i, s - i as f64)
    };
    let (i, wx) = locate(x[0], h[0], nx);
    let (j, wy) = locate(x[1], h[1], ny);
    let v = |a: usize, b: usize| values[a + nx * b];
    let mut out = [0.0; 2];
    for (c, o) in out.iter_mut().enumerate() {
        *o = (1.0 - wx) * (1.0 - wy) * v(i, j)[c]
            + wx * (1.0 - wy) * v(i + 1, j)[c]
            + (1.0 - wx) * wy * v(i, j + 1)[c]
            + wx * wy * v(i + 1, j + 1)[c];
    }
    out
}

/// `sum |u - chi|²` over the micro grid; a planar `chi` is extended
/// constantly in `y3`.
fn squared_distance(u: &StaggeredField<f64>, chi: &StaggeredField<f64>) -> f64 {
    let [n1, n2, n3] = u.dims;
    let layer = n1 * n2;
    let planar = chi.dims[2] == 1 && n3 > 1;
    let mut s = 0.0;
    for c in 0..3 {
        for (idx, x) in u.comps[c].iter().enumerate() {
            let y = if planar { chi.comps[c][idx % layer] } else { chi.comps[c][idx] };
            s += (x - y) * (x - y);
        }
    }
    s
}

/// Runs the study over `sweep.epsilons`. Each member's failure is recorded
/// and the study continues.
pub fn run_epsilon_study(cfg: &ExperimentConfig) -> Result<StudyReport, CliError> {
    cfg.validate(Command::EpsilonStudy)?;
    let mut report = StudyReport::new(Command::EpsilonStudy, cfg);
    let n = cfg.grid.cell_resolution;
    let (mu, g) = (cfg.medium.mu, cfg.medium.g);
    let vcfg = cfg.solver_config();
    let family = cfg.family()?;

    let cell = build_cell(&cfg.medium_spec(), n).map_err(|e| CliError::from_core("grid", e))?;
    let limit = CellSolver::new(cfg.medium.regime.into(), cfg.lambda(), &cell)
        .map_err(|e| CliError::from_core("medium", e))?;
    let table = build_permeability_table(
        &limit,
        &cfg.table_params(),
        &uniform_directions(cfg.sweep.directions),
        &cfg.sweep.magnitudes,
    )
    .map_err(|e| CliError::from_core("sweep", e))?;
    let darcy = darcy_solution(cfg, &table)?;
    let xi_centers = darcy.xi_at_centers(|x| cfg.forcing.eval(x));
    report.note("darcy", format!("{} iterations, converged {}", darcy.iterations, darcy.converged));

    let mut distances = Vec::new();
    for (eps, a) in family {
        let spec = cfg.medium_at(eps, a);
        let s = spec.velocity_scale();
        let mut r = report.record(cfg, format!("eps={eps:e}"));
        r.epsilon = Some(eps);
        r.a_eps = Some(a);
        let run = || -> Result<(f64, f64, f64, usize, bool), String> {
            let thin = build_thin_medium(&spec, n).map_err(|e| e.to_string())?;
            let forcing = StaggeredField::from_fn(&thin.grid, |x| {
                let f = cfg.forcing.eval([x[0], x[1]]);
                [f[0], f[1], 0.0]
            });
            let problem = BinghamProblem {
                grid: thin.grid.clone(),
                mu,
                yield_stress: spec.scaled_yield(),
                epsilon: eps,
                forcing,
            };
            let sol = BinghamSolver::new(&thin.grid, eps)
                .and_then(|b| b.solve(&problem, &vcfg))
                .map_err(|e| e.to_string())?;
            let mut unf = unfold(&thin, &sol.velocity, a).map_err(|e| e.to_string())?;
            let inv = 1.0 / (s * s);
            for sl in unf.slices.iter_mut() {
                sl.scale(inv);
            }
            let micro = (n * n * n) as f64;
            let [m1, m2] = unf.macro_cells;
            // 2x2 Gauss points per macro cell, equal weights
            let o = 0.5 / 3f64.sqrt();
            let jobs: Vec<([usize; 2], [f64; 2])> = (0..m2)
                .flat_map(|b| (0..m1).map(move |c| [c, b]))
                .flat_map(|k| {
                    let c = thin.macro_center(k);
                    [[-o, -o], [o, -o], [-o, o], [o, o]].map(|d| (k, [c[0] + d[0] * a, c[1] + d[1] * a]))
                })
                .collect();
            let parts: Vec<Result<(f64, f64, bool), String>> = jobs
                .par_iter()
                .map(|(k, x)| {
                    let xi = bilinear(&darcy, &xi_centers, *x);
                    let chi = limit.solve(mu, g, xi, &vcfg).map_err(|e| e.to_string())?;
                    let u = unf.slice(*k);
                    let cells = chi.chi.dims.iter().product::<usize>() as f64;
                    let ref_sq = squared_distance(&chi.chi, &StaggeredField::zeros(chi.chi.dims)) / cells;
                    Ok((0.25 * squared_distance(u, &chi.chi) / micro, 0.25 * ref_sq, chi.converged))
                })
                .collect();
            let mut d2 = 0.0;
            let mut ref2 = 0.0;
            let mut ok = sol.converged;
            for p in parts {
                let (d, rf, c) = p?;
                d2 += d;
                ref2 += rf;
                ok &= c;
            }
            let w = a * a;
            Ok((
                (d2 * w).sqrt(),
                unf.l2_norm(),
                (ref2 * w).sqrt(),
                sol.iterations,
                ok,
            ))
        };
        match run() {
            Ok((d, l2, rf, it, ok)) => {
                r.distance = Some(d);
                r.l2 = Some(l2);
                r.reference = Some(rf);
                r.iterations = Some(it);
                r.converged = ok && darcy.converged;
                distances.push(d);
            }
            Err(e) => r.failure = Some(e),
        }
        report.records.push(r);
    }
    let monotone = distances.len() == report.records.len() && distances.windows(2).all(|w| w[1] <= w[0]);
    report.note("nonincreasing", monotone);
    Ok(report)
}
