//! Local problems on the unit cell with a frozen macroscopic force `xi`
//! and the nonlinear permeability `K(xi) = ∫_Y chi dy` they define.
//!
//! * critical: the Bingham problem on `Y` with vertical derivatives scaled
//!   by `lambda`, solved by the staggered-grid solver with `eps = 1/lambda`;
//! * subcritical: the planar problem on `Y'`, one periodic layer in `y3`;
//! * supercritical: independent plane Bingham columns over the fluid part
//!   of `Y'`, in closed form.

mod profile;
mod table;

pub use profile::{bingham_profile_1d, solve_column_1d, BinghamProfile, ColumnConfig, ColumnSolution};
pub use table::{
    build_permeability_table, uniform_directions, LinearFit, PermeabilityTable, TableEntry, TableParams, Threshold,
};

use crate::error::{invalid, Result};
use crate::fields::{divergence_eps, StaggeredField};
use crate::geometry::{CellGrid, Lambda, Regime, StructuredGrid};
use crate::real::Real;
use crate::vi_solver::{BinghamProblem, BinghamSolver, VISolverConfig};

/// One local problem.
#[derive(Debug, Clone)]
pub struct CellProblem<T> {
    pub regime: Regime,
    pub lambda: Lambda<T>,
    pub cell: CellGrid<T>,
    pub mu: T,
    /// Unscaled yield coefficient.
    pub g: T,
    pub xi: [T; 2],
}

impl<T: Real> CellProblem<T> {
    pub fn validate(&self) -> Result<()> {
        check_regime(self.regime, self.lambda)?;
        if !(self.mu > T::zero()) || !self.mu.is_finite() {
            return Err(invalid("mu", "viscosity must be positive"));
        }
        if !(self.g >= T::zero()) || !self.g.is_finite() {
            return Err(invalid("g", "yield coefficient must be nonnegative"));
        }
        if !self.xi.iter().all(|x| x.is_finite()) {
            return Err(invalid("xi", "must be finite"));
        }
        Ok(())
    }
}

fn check_regime<T: Real>(regime: Regime, lambda: Lambda<T>) -> Result<()> {
    match (regime, lambda) {
        (Regime::Critical, Lambda::Finite(l)) if l > T::zero() && l.is_finite() => Ok(()),
        (Regime::Critical, _) => Err(invalid("lambda", "critical regime needs a finite positive lambda")),
        (Regime::Subcritical, Lambda::Zero) | (Regime::Supercritical, Lambda::Infinity) => Ok(()),
        _ => Err(invalid("lambda", "inconsistent with regime")),
    }
}

#[derive(Debug, Clone)]
pub struct CellSolution<T> {
    pub regime: Regime,
    /// Grid carrying `chi`: the cell, or its planar section when subcritical.
    pub grid: StructuredGrid<T>,
    pub chi: StaggeredField<T>,
    /// Column profile (supercritical only).
    pub profile: Option<BinghamProfile<T>>,
    /// `∫_Y chi' dy`.
    pub k: [T; 2],
    /// `∫_Y chi_3 dy`.
    pub k3: T,
    /// Largest cellwise divergence of `chi` in the regime's operator.
    pub div_residual: T,
    pub energy: T,
    pub converged: bool,
    pub iterations: usize,
}

impl<T: Real> CellSolution<T> {
    /// Whether `chi` exceeds `tol` anywhere.
    pub fn flows(&self, tol: T) -> bool {
        self.chi.max_abs() > tol
    }
}

/// Assembled local solver for one regime and cell, reusable across
/// forcings, viscosities and yield coefficients.
#[derive(Debug, Clone)]
pub struct CellSolver<T> {
    regime: Regime,
    lambda: Lambda<T>,
    cell: CellGrid<T>,
    grid: StructuredGrid<T>,
    /// Vertical scale handed to the Bingham solver (`1/lambda`).
    eps: T,
    inner: Option<BinghamSolver<T>>,
}

impl<T: Real> CellSolver<T> {
    pub fn new(regime: Regime, lambda: Lambda<T>, cell: &CellGrid<T>) -> Result<Self> {
        check_regime(regime, lambda)?;
        if cell.is_planar() {
            return Err(invalid("cell", "expected the three-dimensional cell"));
        }
        let (grid, eps) = match (regime, lambda) {
            (Regime::Critical, Lambda::Finite(l)) => (cell.grid.clone(), T::one() / l),
            (Regime::Subcritical, _) => (cell.to_planar().grid, T::one()),
            _ => (cell.grid.clone(), T::one()),
        };
        let inner = match regime {
            Regime::Supercritical => None,
            _ => Some(BinghamSolver::new(&grid, eps)?),
        };
        Ok(CellSolver {
            regime,
            lambda,
            cell: cell.clone(),
            grid,
            eps,
            inner,
        })
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn lambda(&self) -> Lambda<T> {
        self.lambda
    }

    pub fn cell(&self) -> &CellGrid<T> {
        &self.cell
    }

    /// Grid on which solutions are returned.
    pub fn grid(&self) -> &StructuredGrid<T> {
        &self.grid
    }

    /// The Bingham problem posed for `xi` (critical and subcritical).
    pub fn bingham_problem(&self, mu: T, g: T, xi: [T; 2]) -> BinghamProblem<T> {
        let forcing = StaggeredField::from_fn(&self.grid, |_| [xi[0], xi[1], T::zero()]);
        BinghamProblem {
            grid: self.grid.clone(),
            mu,
            yield_stress: g,
            epsilon: self.eps,
            forcing,
        }
    }

    pub fn solve(&self, mu: T, g: T, xi: [T; 2], config: &VISolverConfig<T>) -> Result<CellSolution<T>> {
        CellProblem {
            regime: self.regime,
            lambda: self.lambda,
            cell: self.cell.clone(),
            mu,
            g,
            xi,
        }
        .validate()?;
        match &self.inner {
            Some(solver) => {
                let problem = self.bingham_problem(mu, g, xi);
                let sol = solver.solve(&problem, config)?;
                let div = divergence_eps(&self.grid, &sol.velocity, self.eps)?;
                let div_residual = div.values.iter().fold(T::zero(), |m, d| m.max(d.abs()));
                let [k1, k2, k3] = integrate(&self.grid, &sol.velocity);
                Ok(CellSolution {
                    regime: self.regime,
                    grid: self.grid.clone(),
                    chi: sol.velocity,
                    profile: None,
                    k: [k1, k2],
                    k3,
                    div_residual,
                    energy: sol.energy,
                    converged: sol.converged,
                    iterations: sol.iterations,
                })
            }
            None => self.solve_columns(mu, g, xi),
        }
    }

    fn solve_columns(&self, mu: T, g: T, xi: [T; 2]) -> Result<CellSolution<T>> {
        let phi = xi[0].hypot(xi[1]);
        let profile = BinghamProfile::new(phi, mu, g)?;
        let dir = if phi > T::zero() { [xi[0] / phi, xi[1] / phi] } else { [T::zero(); 2] };
        let chi = StaggeredField::from_fn(&self.grid, |y| {
            let w = profile.eval(y[2]);
            [w * dir[0], w * dir[1], T::zero()]
        });
        let area = self.cell.fluid_area();
        let q = profile.flux();
        // at the minimizer the energy is minus half the viscous term, and
        // ∫|w'| = 2 w_plug
        let energy = -T::lit(0.5) * (phi * q - T::lit(2.0) * g * profile.plug_velocity()) * area;
        Ok(CellSolution {
            regime: self.regime,
            grid: self.grid.clone(),
            chi,
            profile: Some(profile),
            k: [area * q * dir[0], area * q * dir[1]],
            k3: T::zero(),
            div_residual: T::zero(),
            energy,
            converged: true,
            iterations: 0,
        })
    }
}

/// Midpoint integrals `∫ v_c` of the three components over the grid.
pub(crate) fn integrate<T: Real>(grid: &StructuredGrid<T>, v: &StaggeredField<T>) -> [T; 3] {
    let vol = grid.cell_volume();
    let mut k = [T::zero(); 3];
    for (kc, comp) in k.iter_mut().zip(&v.comps) {
        *kc = comp.iter().copied().sum::<T>() * vol;
    }
    k
}

fn solve_in<T: Real>(problem: &CellProblem<T>, want: Regime, config: &VISolverConfig<T>) -> Result<CellSolution<T>> {
    problem.validate()?;
    if problem.regime != want {
        return Err(invalid("regime", format!("expected the {} regime", want.name())));
    }
    CellSolver::new(problem.regime, problem.lambda, &problem.cell)?.solve(problem.mu, problem.g, problem.xi, config)
}

/// Local problem with a finite `lambda`.
pub fn solve_cell_critical<T: Real>(problem: &CellProblem<T>, config: &VISolverConfig<T>) -> Result<CellSolution<T>> {
    solve_in(problem, Regime::Critical, config)
}

/// Planar local problem on `Y'`.
pub fn solve_cell_subcritical<T: Real>(problem: &CellProblem<T>, config: &VISolverConfig<T>) -> Result<CellSolution<T>> {
    solve_in(problem, Regime::Subcritical, config)
}

/// Column-wise local problem. `config` is unused.
pub fn solve_cell_supercritical<T: Real>(
    problem: &CellProblem<T>,
    config: &VISolverConfig<T>,
) -> Result<CellSolution<T>> {
    solve_in(problem, Regime::Supercritical, config)
}

/// Dispatches on `problem.regime`.
pub fn solve_cell<T: Real>(problem: &CellProblem<T>, config: &VISolverConfig<T>) -> Result<CellSolution<T>> {
    solve_in(problem, problem.regime, config)
}
