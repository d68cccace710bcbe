//! Drivers for the `single`, `cell`, `sweep`, `darcy` and `verify-apriori`
//! commands.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thinpore::cell_problems::{
    build_permeability_table, solve_column_1d, uniform_directions, BinghamProfile, CellSolver, PermeabilityTable,
};
use thinpore::fields::{norms, write_dump, StaggeredField};
use thinpore::geometry::{build_cell, build_thin_medium, Regime};
use thinpore::macroscale::{solve_darcy, DarcyProblem, DarcySolution, OmegaGrid};
use thinpore::vi_solver::{verify_apriori, BinghamProblem, BinghamSolver};

use crate::config::{Command, ExperimentConfig};
use crate::report::StudyReport;
use crate::CliError;

fn core(field: &'static str) -> impl Fn(thinpore::Error) -> CliError {
    move |e| CliError::from_core(field, e)
}

fn dump(values: &[f64], dims: [usize; 3]) -> String {
    let mut buf = Vec::new();
    write_dump(&mut buf, dims, values).expect("in-memory dump");
    String::from_utf8(buf).expect("dump is ascii")
}

/// One Bingham solve on the thin domain.
pub fn run_single(cfg: &ExperimentConfig) -> Result<StudyReport, CliError> {
    cfg.validate(Command::Single)?;
    let mut report = StudyReport::new(Command::Single, cfg);
    let spec = cfg.medium_spec();
    let n = cfg.grid.cell_resolution;
    let thin = build_thin_medium(&spec, n).map_err(core("medium"))?;
    let forcing = StaggeredField::from_fn(&thin.grid, |x| {
        let f = cfg.forcing.eval([x[0], x[1]]);
        [f[0], f[1], 0.0]
    });
    let problem = BinghamProblem {
        grid: thin.grid.clone(),
        mu: spec.mu,
        yield_stress: spec.scaled_yield(),
        epsilon: spec.epsilon,
        forcing,
    };
    let vcfg = cfg.solver_config();
    let solver = BinghamSolver::new(&thin.grid, spec.epsilon).map_err(core("medium"))?;
    let sol = solver.solve(&problem, &vcfg).map_err(core("solver"))?;
    let nm = norms(&thin.grid, &sol.velocity, spec.epsilon).map_err(core("medium"))?;
    let s = spec.velocity_scale();

    let mut r = report.record(cfg, format!("eps={:e}", spec.epsilon));
    r.epsilon = Some(spec.epsilon);
    r.a_eps = Some(spec.a_eps);
    r.energy = Some(sol.energy);
    r.l2 = Some(nm.l2);
    r.sym_grad = Some(nm.sym_grad);
    r.grad = Some(nm.grad);
    r.iterations = Some(sol.iterations);
    r.converged = sol.converged;
    report.records.push(r);
    report.note("cells", thin.grid.cell_count());
    report.note("l2/s^2", format!("{:e}", nm.l2 / (s * s)));
    report.note("symgrad/s", format!("{:e}", nm.sym_grad / s));

    if cfg.output.certificate_samples > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let amp = sol.velocity.max_abs().max(1e-6);
        let mut worst = f64::INFINITY;
        for _ in 0..cfg.output.certificate_samples {
            let t = amp * rng.gen_range(0.01..1.0);
            let mut v = sol.velocity.clone();
            for comp in v.comps.iter_mut() {
                comp.iter_mut().for_each(|x| *x += t * rng.gen_range(-1.0..1.0));
            }
            v.project_constraints(&thin.grid);
            let res = solver.certificate_residual(&problem, &sol, &v).map_err(core("solver"))?;
            worst = worst.min(res);
        }
        let bound = -10.0 * vcfg.tol_rel * sol.energy.abs();
        report.note("certificate", format!("{worst:e} (bound {bound:e})"));
        report.note("cert_ok", worst >= bound);
    }
    if cfg.output.dump_fields {
        for (c, comp) in sol.velocity.comps.iter().enumerate() {
            report.files.push((format!("velocity_{}.dump", c + 1), dump(comp, sol.velocity.dims)));
        }
        report.files.push(("pressure.dump".into(), dump(&sol.pressure.values, sol.pressure.dims)));
    }
    Ok(report)
}

fn cell_solver(cfg: &ExperimentConfig) -> Result<CellSolver<f64>, CliError> {
    let cell = build_cell(&cfg.medium_spec(), cfg.grid.cell_resolution).map_err(core("grid"))?;
    CellSolver::new(cfg.medium.regime.into(), cfg.lambda(), &cell).map_err(core("medium"))
}

/// Cell problems at the forces listed in `sweep.xi`. Supercritical runs
/// also solve the column numerically against the closed form.
pub fn run_cell(cfg: &ExperimentConfig) -> Result<StudyReport, CliError> {
    cfg.validate(Command::Cell)?;
    let mut report = StudyReport::new(Command::Cell, cfg);
    if cfg.sweep.xi.is_empty() {
        report.note("empty", "no forces listed");
        return Ok(report);
    }
    let solver = cell_solver(cfg)?;
    let (mu, g) = (cfg.medium.mu, cfg.medium.g);
    let vcfg = cfg.solver_config();
    let ccfg = cfg.column_config();
    let supercritical = solver.regime() == Regime::Supercritical;
    let rows: Vec<_> = cfg
        .sweep
        .xi
        .par_iter()
        .map(|xi| {
            let cell = solver.solve(mu, g, *xi, &vcfg);
            let column = supercritical.then(|| solve_column_1d(xi[0].hypot(xi[1]), mu, g, &ccfg));
            (cell, column)
        })
        .collect();
    for (i, (xi, (cell, column))) in cfg.sweep.xi.iter().zip(rows).enumerate() {
        let mut r = report.record(cfg, format!("xi[{i:04}]"));
        r.xi_1 = Some(xi[0]);
        r.xi_2 = Some(xi[1]);
        match cell {
            Ok(s) => {
                r.k_1 = Some(s.k[0]);
                r.k_2 = Some(s.k[1]);
                r.k_3 = Some(s.k3);
                r.energy = Some(s.energy);
                r.iterations = Some(s.iterations);
                r.converged = s.converged;
            }
            Err(e) => r.failure = Some(e.to_string()),
        }
        match column {
            Some(Ok(c)) => {
                let p = BinghamProfile::new(xi[0].hypot(xi[1]), mu, g).map_err(core("medium"))?;
                r.flux = Some(c.flux);
                r.reference = Some(p.flux());
                r.error = Some(c.max_error(&p));
                r.converged &= c.converged;
            }
            Some(Err(e)) => {
                r.converged = false;
                r.failure = Some(e.to_string());
            }
            None => {}
        }
        report.records.push(r);
    }
    Ok(report)
}

fn table(cfg: &ExperimentConfig) -> Result<PermeabilityTable<f64>, CliError> {
    let solver = cell_solver(cfg)?;
    build_permeability_table(
        &solver,
        &cfg.table_params(),
        &uniform_directions(cfg.sweep.directions),
        &cfg.sweep.magnitudes,
    )
    .map_err(core("sweep"))
}

fn table_records(report: &mut StudyReport, cfg: &ExperimentConfig, t: &PermeabilityTable<f64>) {
    let per_ray = t.magnitudes.len();
    for (i, e) in t.entries.iter().enumerate() {
        let mut r = report.record(cfg, format!("d{:03}/t{:04}", e.direction, i % per_ray));
        r.xi_1 = Some(e.xi[0]);
        r.xi_2 = Some(e.xi[1]);
        r.k_1 = Some(e.k[0]);
        r.k_2 = Some(e.k[1]);
        r.converged = e.converged;
        r.failure = e.failure.clone();
        report.records.push(r);
    }
    let th: Vec<String> = t
        .thresholds
        .iter()
        .map(|x| x.map_or_else(|| "-".to_string(), |x| format!("{:e}", x.estimate())))
        .collect();
    report.note("thresholds", th.join(" "));
    report.note("monotone", t.is_monotone(1e-10));
}

/// Permeability table over `sweep.directions` and `sweep.magnitudes`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<StudyReport, CliError> {
    cfg.validate(Command::Sweep)?;
    let mut report = StudyReport::new(Command::Sweep, cfg);
    if cfg.sweep.directions == 0 || cfg.sweep.magnitudes.is_empty() {
        report.note("empty", "no samples requested");
        return Ok(report);
    }
    let t = table(cfg)?;
    table_records(&mut report, cfg, &t);
    if t.g == 0.0 {
        if let Ok(fit) = t.fit_linear() {
            let m = fit.matrix;
            report.note("linear_fit", format!("[[{:e}, {:e}], [{:e}, {:e}]]", m[0][0], m[0][1], m[1][0], m[1][1]));
            report.note("fit_residual", format!("{:e}", fit.max_residual));
        }
    }
    report.files.push(("table.csv".into(), t.to_csv()));
    Ok(report)
}

/// Solves the macroscopic problem for a config's table and forcing.
pub fn darcy_solution(cfg: &ExperimentConfig, t: &PermeabilityTable<f64>) -> Result<DarcySolution<f64>, CliError> {
    let grid = OmegaGrid::new(cfg.darcy.dims, cfg.medium.omega_extent).map_err(core("darcy"))?;
    let problem = DarcyProblem::from_fn(grid, |x| cfg.forcing.eval(x), cfg.darcy_config());
    solve_darcy(&problem, t).map_err(core("darcy"))
}

/// Permeability table followed by the nonlinear Darcy solve.
pub fn run_darcy(cfg: &ExperimentConfig) -> Result<StudyReport, CliError> {
    cfg.validate(Command::Darcy)?;
    let mut report = StudyReport::new(Command::Darcy, cfg);
    let t = table(cfg)?;
    let sol = darcy_solution(cfg, &t)?;
    let mut r = report.record(cfg, "darcy");
    r.error = Some(sol.div_residual());
    r.iterations = Some(sol.iterations);
    r.converged = sol.converged && !t.has_gaps();
    report.records.push(r);
    report.note("boundary", format!("{:e}", sol.boundary_flux()));
    report.note("clamped", sol.clamped);
    report.note("indeterminate", sol.indeterminate.iter().filter(|b| **b).count());
    report.note("table_gaps", t.has_gaps());

    let mut csv = String::from("i,j,x,y,p,u_1,u_2,indeterminate\n");
    let [nx, ny] = sol.grid.dims;
    let u = sol.cell_velocity();
    for j in 0..ny {
        for i in 0..nx {
            let c = i + nx * j;
            let x = sol.grid.center(i, j);
            csv.push_str(&format!(
                "{i},{j},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                x[0], x[1], sol.pressure.values[c], u[c][0], u[c][1], sol.indeterminate[c]
            ));
        }
    }
    report.files.push(("darcy.csv".into(), csv));
    report.files.push(("table.csv".into(), t.to_csv()));
    Ok(report)
}

/// Scaled norms over the family in `sweep.epsilons` / `sweep.a_eps`.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<StudyReport, CliError> {
    cfg.validate(Command::VerifyApriori)?;
    let mut report = StudyReport::new(Command::VerifyApriori, cfg);
    let family: Vec<_> = cfg.family()?.into_iter().map(|(e, a)| cfg.medium_at(e, a)).collect();
    let forcing = |x: [f64; 2]| cfg.forcing.eval(x);
    let out = verify_apriori(&family, cfg.grid.cell_resolution, &forcing, &cfg.solver_config())
        .map_err(core("sweep"))?;
    for row in &out.rows {
        let mut r = report.record(cfg, format!("eps={:e}", row.epsilon));
        r.epsilon = Some(row.epsilon);
        r.a_eps = Some(row.a_eps);
        r.l2 = Some(row.l2_ratio);
        r.sym_grad = Some(row.sym_grad_ratio);
        r.grad = Some(row.grad_ratio);
        r.converged = row.converged;
        r.failure = row.failure.clone();
        report.records.push(r);
    }
    report.note(
        "spread",
        format!("{:e} {:e} {:e}", out.spread[0], out.spread[1], out.spread[2]),
    );
    report.note("bounded", out.bounded(2.0));
    Ok(report)
}
