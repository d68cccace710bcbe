//! Sampled permeability `K(xi)` along rays `xi = t d`.

use std::fmt::{LowerExp, Write as _};

use rayon::prelude::*;

use super::CellSolver;
use crate::error::{invalid, Result};
use crate::geometry::Regime;
use crate::real::Real;
use crate::vi_solver::VISolverConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct TableParams<T> {
    pub mu: T,
    pub g: T,
    pub solver: VISolverConfig<T>,
    /// A cell solution counts as flowing when `max|chi|` exceeds
    /// `flow_tol |xi| / mu`.
    pub flow_tol: T,
    /// Bisection steps refining each directional threshold.
    pub threshold_steps: usize,
}

impl<T: Real> TableParams<T> {
    pub fn new(mu: T, g: T) -> Self {
        TableParams {
            mu,
            g,
            solver: VISolverConfig::default(),
            flow_tol: T::lit(1e-8),
            threshold_steps: 6,
        }
    }
}

/// One sample of the table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry<T> {
    pub direction: usize,
    pub magnitude: T,
    pub xi: [T; 2],
    pub k: [T; 2],
    pub flows: bool,
    pub converged: bool,
    /// Error message when the cell solve failed; `k` is then zero.
    pub failure: Option<String>,
}

impl<T> TableEntry<T> {
    /// Whether the sample is usable for interpolation.
    pub fn is_valid(&self) -> bool {
        self.converged && self.failure.is_none()
    }
}

/// Bracket `[lower, upper]` of the yield threshold along one direction.
/// `lower` has no flow; `upper`, when present, flows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold<T> {
    pub lower: T,
    pub upper: Option<T>,
}

impl<T: Real> Threshold<T> {
    /// Midpoint of the bracket, or `lower` when no flowing sample exists.
    pub fn estimate(&self) -> T {
        match self.upper {
            Some(u) => T::lit(0.5) * (self.lower + u),
            None => self.lower,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermeabilityTable<T> {
    pub regime: Regime,
    pub mu: T,
    pub g: T,
    /// Unit directions.
    pub directions: Vec<[T; 2]>,
    /// Positive, strictly increasing sample magnitudes shared by all rays.
    pub magnitudes: Vec<T>,
    /// Direction-major samples: entry `d * magnitudes.len() + i`.
    pub entries: Vec<TableEntry<T>>,
    /// Per-direction threshold; `None` without a yield stress.
    pub thresholds: Vec<Option<Threshold<T>>>,
}

/// Least-squares linear fit `K ≈ M xi` over the valid samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit<T> {
    pub matrix: [[T; 2]; 2],
    /// Largest `|K - M xi|` relative to the largest `|K|`.
    pub max_residual: T,
}

impl<T: Real> LinearFit<T> {
    pub fn apply(&self, xi: [T; 2]) -> [T; 2] {
        let m = &self.matrix;
        [m[0][0] * xi[0] + m[0][1] * xi[1], m[1][0] * xi[0] + m[1][1] * xi[1]]
    }

    /// `|M12 - M21|` relative to the largest entry.
    pub fn asymmetry(&self) -> T {
        let m = &self.matrix;
        let s = m.iter().flatten().fold(T::zero(), |a, b| a.max(b.abs()));
        if s == T::zero() {
            return T::zero();
        }
        (m[0][1] - m[1][0]).abs() / s
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn eigenvalues(&self) -> [T; 2] {
        let m = &self.matrix;
        let half = T::lit(0.5);
        let a = m[0][0];
        let d = m[1][1];
        let b = half * (m[0][1] + m[1][0]);
        let mean = half * (a + d);
        let r = (half * (a - d)).hypot(b);
        [mean - r, mean + r]
    }
}

impl<T: Real> PermeabilityTable<T> {
    pub fn entry(&self, direction: usize, i: usize) -> &TableEntry<T> {
        &self.entries[direction * self.magnitudes.len() + i]
    }

    /// Samples along one direction, in increasing magnitude.
    pub fn ray(&self, direction: usize) -> &[TableEntry<T>] {
        let n = self.magnitudes.len();
        &self.entries[direction * n..(direction + 1) * n]
    }

    pub fn max_magnitude(&self) -> T {
        self.magnitudes.last().copied().unwrap_or(T::zero())
    }

    /// Whether any sample failed or did not converge.
    pub fn has_gaps(&self) -> bool {
        self.entries.iter().any(|e| !e.is_valid())
    }

    /// Whether `|K|` is nondecreasing along every ray up to `tol`.
    pub fn is_monotone(&self, tol: T) -> bool {
        (0..self.directions.len()).all(|d| {
            let mut prev = T::zero();
            self.ray(d).iter().filter(|e| e.is_valid()).all(|e| {
                let n = e.k[0].hypot(e.k[1]);
                let ok = n + tol >= prev;
                prev = prev.max(n);
                ok
            })
        })
    }

    pub fn fit_linear(&self) -> Result<LinearFit<T>> {
        let mut a = [[T::zero(); 2]; 2];
        let mut b = [[T::zero(); 2]; 2];
        let mut kmax = T::zero();
        for e in self.entries.iter().filter(|e| e.is_valid()) {
            for r in 0..2 {
                for c in 0..2 {
                    a[r][c] += e.xi[r] * e.xi[c];
                    b[r][c] += e.k[r] * e.xi[c];
                }
            }
            kmax = kmax.max(e.k[0].hypot(e.k[1]));
        }
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if !(det.abs() > T::zero()) {
            return Err(invalid("directions", "samples do not span the plane"));
        }
        let inv = [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]];
        let mut m = [[T::zero(); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] = b[r][0] * inv[0][c] + b[r][1] * inv[1][c];
            }
        }
        let mut fit = LinearFit {
            matrix: m,
            max_residual: T::zero(),
        };
        let mut res = T::zero();
        for e in self.entries.iter().filter(|e| e.is_valid()) {
            let p = fit.apply(e.xi);
            res = res.max((e.k[0] - p[0]).hypot(e.k[1] - p[1]));
        }
        fit.max_residual = if kmax > T::zero() { res / kmax } else { res };
        Ok(fit)
    }

    /// CSV with columns `xi_1,xi_2,K_1,K_2,converged`, one row per sample
    /// in table order.
    pub fn to_csv(&self) -> String
    where
        T: LowerExp,
    {
        let mut s = String::from("xi_1,xi_2,K_1,K_2,converged\n");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e},{}",
                e.xi[0],
                e.xi[1],
                e.k[0],
                e.k[1],
                e.is_valid()
            );
        }
        s
    }
}

/// `n` unit vectors at angles `2 pi k / n`.
pub fn uniform_directions<T: Real>(n: usize) -> Vec<[T; 2]> {
    (0..n)
        .map(|k| {
            let a = T::TAU() * T::from_usize_lossy(k) / T::from_usize_lossy(n);
            [a.cos(), a.sin()]
        })
        .collect()
}

/// Samples `K(t d)` for every direction and magnitude and brackets the
/// yield threshold along each direction by bisection.
pub fn build_permeability_table<T: Real>(
    solver: &CellSolver<T>,
    params: &TableParams<T>,
    directions: &[[T; 2]],
    magnitudes: &[T],
) -> Result<PermeabilityTable<T>> {
    if !(params.mu > T::zero()) {
        return Err(invalid("mu", "viscosity must be positive"));
    }
    if !(params.g >= T::zero()) {
        return Err(invalid("g", "yield coefficient must be nonnegative"));
    }
    if !(params.flow_tol > T::zero()) {
        return Err(invalid("flow_tol", "must be positive"));
    }
    params.solver.validate()?;
    for (i, d) in directions.iter().enumerate() {
        if (d[0].hypot(d[1]) - T::one()).abs() > T::lit(1e-9) {
            return Err(invalid(&format!("directions[{i}]"), "must be a unit vector"));
        }
    }
    for (i, t) in magnitudes.iter().enumerate() {
        if !(*t > T::zero()) || !t.is_finite() {
            return Err(invalid(&format!("magnitudes[{i}]"), "must be positive and finite"));
        }
        if i > 0 && !(*t > magnitudes[i - 1]) {
            return Err(invalid(&format!("magnitudes[{i}]"), "must be strictly increasing"));
        }
    }

    let keys: Vec<(usize, T)> = (0..directions.len())
        .flat_map(|d| magnitudes.iter().map(move |t| (d, *t)))
        .collect();
    let entries: Vec<TableEntry<T>> = keys
        .par_iter()
        .map(|&(d, t)| sample(solver, params, d, directions[d], t))
        .collect();

    let n = magnitudes.len();
    let thresholds: Vec<Option<Threshold<T>>> = if params.g == T::zero() {
        vec![None; directions.len()]
    } else if solver.regime() == Regime::Supercritical {
        let t = T::lit(2.0) * params.g;
        vec![Some(Threshold { lower: t, upper: Some(t) }); directions.len()]
    } else {
        (0..directions.len())
            .into_par_iter()
            .map(|d| Some(bisect(solver, params, directions[d], &entries[d * n..(d + 1) * n])))
            .collect()
    };

    Ok(PermeabilityTable {
        regime: solver.regime(),
        mu: params.mu,
        g: params.g,
        directions: directions.to_vec(),
        magnitudes: magnitudes.to_vec(),
        entries,
        thresholds,
    })
}

fn sample<T: Real>(solver: &CellSolver<T>, params: &TableParams<T>, d: usize, dir: [T; 2], t: T) -> TableEntry<T> {
    let xi = [t * dir[0], t * dir[1]];
    let mut e = TableEntry {
        direction: d,
        magnitude: t,
        xi,
        k: [T::zero(); 2],
        flows: false,
        converged: false,
        failure: None,
    };
    match solver.solve(params.mu, params.g, xi, &params.solver) {
        Ok(s) => {
            e.flows = s.flows(params.flow_tol * t / params.mu);
            e.k = s.k;
            e.converged = s.converged;
        }
        Err(err) => e.failure = Some(err.to_string()),
    }
    e
}

fn bisect<T: Real>(solver: &CellSolver<T>, params: &TableParams<T>, dir: [T; 2], ray: &[TableEntry<T>]) -> Threshold<T> {
    let valid = ray.iter().filter(|e| e.is_valid());
    let mut hi = valid.clone().filter(|e| e.flows).map(|e| e.magnitude).next();
    let mut lo = valid
        .filter(|e| !e.flows && hi.map_or(true, |h| e.magnitude < h))
        .map(|e| e.magnitude)
        .last()
        .unwrap_or(T::zero());
    if let Some(mut h) = hi {
        for _ in 0..params.threshold_steps {
            let mid = T::lit(0.5) * (lo + h);
            let e = sample(solver, params, 0, dir, mid);
            if !e.is_valid() {
                break;
            }
            if e.flows {
                h = mid;
            } else {
                lo = mid;
            }
        }
        hi = Some(h);
    }
    Threshold { lower: lo, upper: hi }
}
