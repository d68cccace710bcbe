//! Nonlinear Darcy law on `omega`:
//! `div U = 0`, `U = K(f' - grad P)`, `U·n = 0` on the boundary,
//! with `K` given by a sampled permeability table.
//!
//! Pressures live at the centers of a uniform `nx x ny` grid, normal
//! fluxes on the faces. The tangential part of `xi = f' - grad P` on a face
//! is the average over the four neighboring faces of the other family,
//! boundary faces counting as zero. Each correction step solves a Poisson
//! problem weighted by the radial mobility `d|K|/d|xi|` for the residual
//! divergence, followed by a backtracking line search on its l2 norm.

mod interp;

pub use interp::{eval_permeability, Evaluated, Interpolator};

use crate::cell_problems::PermeabilityTable;
use crate::error::{invalid, Result};
use crate::fields::{Frame, ScalarField, StaggeredField};
use crate::geometry::StructuredGrid;
use crate::real::Real;
use crate::vi_solver::linalg::{cg, Csr, Diag};

/// Uniform cell-centered grid on `omega = [0, L1] x [0, L2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaGrid<T> {
    pub dims: [usize; 2],
    pub extent: [T; 2],
}

impl<T: Real> OmegaGrid<T> {
    pub fn new(dims: [usize; 2], extent: [T; 2]) -> Result<Self> {
        if dims[0] < 2 || dims[1] < 2 {
            return Err(invalid("dims", "need at least two cells per direction"));
        }
        if !extent.iter().all(|l| *l > T::zero() && l.is_finite()) {
            return Err(invalid("extent", "must be positive"));
        }
        Ok(OmegaGrid { dims, extent })
    }

    pub fn spacing(&self) -> [T; 2] {
        [
            self.extent[0] / T::from_usize_lossy(self.dims[0]),
            self.extent[1] / T::from_usize_lossy(self.dims[1]),
        ]
    }

    pub fn cells(&self) -> usize {
        self.dims[0] * self.dims[1]
    }

    pub fn center(&self, i: usize, j: usize) -> [T; 2] {
        let h = self.spacing();
        let half = T::lit(0.5);
        [
            (T::from_usize_lossy(i) + half) * h[0],
            (T::from_usize_lossy(j) + half) * h[1],
        ]
    }

    /// Index of x-face `i` (left of cell `i`) in row `j`, `i = 0..=nx`.
    #[inline]
    fn xf(&self, i: usize, j: usize) -> usize {
        i + (self.dims[0] + 1) * j
    }

    /// Index of y-face `j` (below cell row `j`) in column `i`, `j = 0..=ny`.
    #[inline]
    fn yf(&self, i: usize, j: usize) -> usize {
        i + self.dims[0] * j
    }

    fn n_xfaces(&self) -> usize {
        (self.dims[0] + 1) * self.dims[1]
    }

    fn n_yfaces(&self) -> usize {
        self.dims[0] * (self.dims[1] + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DarcyConfig<T> {
    /// First trial step of the line search, in `(0, 1]`.
    pub relaxation: T,
    /// Bound on the cellwise divergence of `U`.
    pub tol: T,
    pub max_iter: usize,
    /// Ramp width above the thresholds; `None` selects 2% of the largest
    /// tabulated magnitude.
    pub eta: Option<T>,
    /// Mobility floor relative to the largest face mobility.
    pub mobility_floor: T,
}

impl<T: Real> Default for DarcyConfig<T> {
    fn default() -> Self {
        DarcyConfig {
            relaxation: T::one(),
            tol: T::lit(1e-10),
            max_iter: 500,
            eta: None,
            mobility_floor: T::lit(1e-3),
        }
    }
}

impl<T: Real> DarcyConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.relaxation > T::zero() && self.relaxation <= T::one()) {
            return Err(invalid("relaxation", "must lie in (0, 1]"));
        }
        if !(self.tol > T::zero()) {
            return Err(invalid("tol", "must be positive"));
        }
        if let Some(e) = self.eta {
            if !(e >= T::zero()) {
                return Err(invalid("eta", "must be nonnegative"));
            }
        }
        if !(self.mobility_floor > T::zero() && self.mobility_floor <= T::one()) {
            return Err(invalid("mobility_floor", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Forcing `f'` sampled on the faces: `fx` on x-faces, `fy` on y-faces.
#[derive(Debug, Clone, PartialEq)]
pub struct DarcyProblem<T> {
    pub grid: OmegaGrid<T>,
    pub fx: Vec<T>,
    pub fy: Vec<T>,
    pub config: DarcyConfig<T>,
}

impl<T: Real> DarcyProblem<T> {
    /// Samples `f` at the face midpoints.
    pub fn from_fn(grid: OmegaGrid<T>, f: impl Fn([T; 2]) -> [T; 2], config: DarcyConfig<T>) -> Self {
        let h = grid.spacing();
        let half = T::lit(0.5);
        let [nx, ny] = grid.dims;
        let mut fx = vec![T::zero(); grid.n_xfaces()];
        let mut fy = vec![T::zero(); grid.n_yfaces()];
        for j in 0..ny {
            for i in 0..=nx {
                let x = [T::from_usize_lossy(i) * h[0], (T::from_usize_lossy(j) + half) * h[1]];
                fx[grid.xf(i, j)] = f(x)[0];
            }
        }
        for j in 0..=ny {
            for i in 0..nx {
                let x = [(T::from_usize_lossy(i) + half) * h[0], T::from_usize_lossy(j) * h[1]];
                fy[grid.yf(i, j)] = f(x)[1];
            }
        }
        DarcyProblem { grid, fx, fy, config }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DarcySolution<T> {
    pub grid: OmegaGrid<T>,
    /// Mean-zero pressure `P̂`, dims `(nx, ny, 1)`.
    pub pressure: ScalarField<T>,
    /// Normal filtration velocity on x-faces (boundary faces zero).
    pub ux: Vec<T>,
    /// Normal filtration velocity on y-faces (boundary faces zero).
    pub uy: Vec<T>,
    /// Vertical filtration velocity, identically zero.
    pub u3: T,
    /// `max |div U|` before each correction and at the end.
    pub residual_history: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// Some evaluation exceeded the tabulated magnitudes.
    pub clamped: bool,
    /// Cells without flow through any face while the table has a yield
    /// threshold: the pressure there is one admissible choice among many.
    pub indeterminate: Vec<bool>,
}

impl<T: Real> DarcySolution<T> {
    /// `max |div U|` over the cells.
    pub fn div_residual(&self) -> T {
        divergence(&self.grid, &self.ux, &self.uy)
            .into_iter()
            .fold(T::zero(), |m, d| m.max(d.abs()))
    }

    /// Net outward flux through `∂omega`; zero by construction.
    pub fn boundary_flux(&self) -> T {
        let [nx, ny] = self.grid.dims;
        let h = self.grid.spacing();
        let g = &self.grid;
        let mut s = T::zero();
        for j in 0..ny {
            s += (self.ux[g.xf(nx, j)] - self.ux[g.xf(0, j)]) * h[1];
        }
        for i in 0..nx {
            s += (self.uy[g.yf(i, ny)] - self.uy[g.yf(i, 0)]) * h[0];
        }
        s
    }

    /// Cell-centered filtration velocity: mean of the two opposite face fluxes.
    pub fn cell_velocity(&self) -> Vec<[T; 2]> {
        let g = &self.grid;
        let [nx, ny] = g.dims;
        let half = T::lit(0.5);
        let mut out = Vec::with_capacity(g.cells());
        for j in 0..ny {
            for i in 0..nx {
                out.push([
                    half * (self.ux[g.xf(i, j)] + self.ux[g.xf(i + 1, j)]),
                    half * (self.uy[g.yf(i, j)] + self.uy[g.yf(i, j + 1)]),
                ]);
            }
        }
        out
    }

    /// Cell-centered `f' - grad P̂`, with one-sided differences at the boundary.
    pub fn xi_at_centers(&self, f: impl Fn([T; 2]) -> [T; 2]) -> Vec<[T; 2]> {
        let g = &self.grid;
        let [nx, ny] = g.dims;
        let h = g.spacing();
        let p = &self.pressure.values;
        let at = |i: usize, j: usize| p[i + nx * j];
        let diff = |lo: T, hi: T, span: usize, hh: T| (hi - lo) / (T::from_usize_lossy(span) * hh);
        let mut out = Vec::with_capacity(g.cells());
        for j in 0..ny {
            for i in 0..nx {
                let (il, ir) = (i.saturating_sub(1), (i + 1).min(nx - 1));
                let (jl, jr) = (j.saturating_sub(1), (j + 1).min(ny - 1));
                let gx = diff(at(il, j), at(ir, j), ir - il, h[0]);
                let gy = diff(at(i, jl), at(i, jr), jr - jl, h[1]);
                let fc = f(g.center(i, j));
                out.push([fc[0] - gx, fc[1] - gy]);
            }
        }
        out
    }
}

/// Face fluxes `U = K(f' - grad P)` for a given pressure.
pub fn darcy_fluxes<T: Real>(
    problem: &DarcyProblem<T>,
    k: &Interpolator<T>,
    pressure: &ScalarField<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    if pressure.values.len() != problem.grid.cells() {
        return Err(invalid("pressure", "length does not match the grid"));
    }
    let st = evaluate(problem, k, &pressure.values);
    Ok((st.ux, st.uy))
}

/// Filtration velocity `(U', U3)`: the average of `v` over its grid.
pub fn filtration_velocity<T: Real>(grid: &StructuredGrid<T>, v: &StaggeredField<T>) -> Result<([T; 2], T)> {
    if v.dims != grid.dims {
        return Err(crate::error::Error::DimensionMismatch {
            expected: grid.dims,
            found: v.dims,
        });
    }
    let [a, b, c] = crate::cell_problems::integrate(grid, v);
    let total = grid.cell_volume() * T::from_usize_lossy(grid.cell_count());
    Ok(([a / total, b / total], c / total))
}

/// Discrete state of one pressure iterate.
struct State<T> {
    /// `xi` on x-faces and y-faces.
    xi_x: Vec<[T; 2]>,
    xi_y: Vec<[T; 2]>,
    ux: Vec<T>,
    uy: Vec<T>,
    clamped: bool,
}

/// Face values of `xi` and the fluxes `U = K(xi)` for pressure `p`.
fn evaluate<T: Real>(pb: &DarcyProblem<T>, k: &Interpolator<T>, p: &[T]) -> State<T> {
    let g = &pb.grid;
    let [nx, ny] = g.dims;
    let h = g.spacing();
    let mut nx_ = vec![T::zero(); g.n_xfaces()];
    let mut ny_ = vec![T::zero(); g.n_yfaces()];
    for j in 0..ny {
        for i in 1..nx {
            let f = g.xf(i, j);
            nx_[f] = pb.fx[f] - (p[i + nx * j] - p[i - 1 + nx * j]) / h[0];
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let f = g.yf(i, j);
            ny_[f] = pb.fy[f] - (p[i + nx * j] - p[i + nx * (j - 1)]) / h[1];
        }
    }
    let quarter = T::lit(0.25);
    let mut xi_x = vec![[T::zero(); 2]; g.n_xfaces()];
    let mut xi_y = vec![[T::zero(); 2]; g.n_yfaces()];
    let mut ux = vec![T::zero(); g.n_xfaces()];
    let mut uy = vec![T::zero(); g.n_yfaces()];
    let mut clamped = false;
    for j in 0..ny {
        for i in 1..nx {
            let f = g.xf(i, j);
            let t = ny_[g.yf(i - 1, j)] + ny_[g.yf(i - 1, j + 1)] + ny_[g.yf(i, j)] + ny_[g.yf(i, j + 1)];
            xi_x[f] = [nx_[f], quarter * t];
            let e = k.eval(xi_x[f]);
            ux[f] = e.k[0];
            clamped |= e.clamped;
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let f = g.yf(i, j);
            let t = nx_[g.xf(i, j - 1)] + nx_[g.xf(i + 1, j - 1)] + nx_[g.xf(i, j)] + nx_[g.xf(i + 1, j)];
            xi_y[f] = [quarter * t, ny_[f]];
            let e = k.eval(xi_y[f]);
            uy[f] = e.k[1];
            clamped |= e.clamped;
        }
    }
    State {
        xi_x,
        xi_y,
        ux,
        uy,
        clamped,
    }
}

fn divergence<T: Real>(g: &OmegaGrid<T>, ux: &[T], uy: &[T]) -> Vec<T> {
    let [nx, ny] = g.dims;
    let h = g.spacing();
    let mut d = vec![T::zero(); g.cells()];
    for j in 0..ny {
        for i in 0..nx {
            d[i + nx * j] = (ux[g.xf(i + 1, j)] - ux[g.xf(i, j)]) / h[0] + (uy[g.yf(i, j + 1)] - uy[g.yf(i, j)]) / h[1];
        }
    }
    d
}

/// `-div(k grad)` with face weights `kx`, `ky` and no-flux boundaries.
fn weighted_laplacian<T: Real>(g: &OmegaGrid<T>, kx: &[T], ky: &[T]) -> Csr<T> {
    let [nx, ny] = g.dims;
    let h = g.spacing();
    let (mut r, mut c, mut v) = (Vec::new(), Vec::new(), Vec::new());
    let mut link = |a: usize, b: usize, w: T| {
        r.extend([a, a, b, b]);
        c.extend([a, b, a, b]);
        v.extend([w, -w, -w, w]);
    };
    for j in 0..ny {
        for i in 1..nx {
            link(i - 1 + nx * j, i + nx * j, kx[g.xf(i, j)] / (h[0] * h[0]));
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            link(i + nx * (j - 1), i + nx * j, ky[g.yf(i, j)] / (h[1] * h[1]));
        }
    }
    Csr::from_triplets(g.cells(), g.cells(), &r, &c, &v)
}

/// Solves `A x = b` on mean-zero vectors for a Neumann operator `A`.
fn neumann_solve<T: Real>(a: &Csr<T>, b: &[T]) -> Vec<T> {
    let n = b.len();
    let mean = b.iter().copied().sum::<T>() / T::from_usize_lossy(n);
    let rhs: Vec<T> = b.iter().map(|x| *x - mean).collect();
    let inv: Vec<T> = a.diagonal().into_iter().map(|d| if d > T::zero() { T::one() / d } else { T::one() }).collect();
    let bn = rhs.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let mut x = vec![T::zero(); n];
    if bn == T::zero() {
        return x;
    }
    let norm2 = rhs.iter().map(|v| *v * *v).sum::<T>().sqrt();
    cg(a, &Diag(inv), &rhs, &mut x, T::lit(1e-14) * norm2, 20 * n + 100);
    let m = x.iter().copied().sum::<T>() / T::from_usize_lossy(n);
    x.iter_mut().for_each(|v| *v -= m);
    x
}

/// Radial derivative `d|K(s xi/|xi|)|/ds` per face, by a central difference.
fn radial_mobility<T: Real>(k: &Interpolator<T>, xi: &[[T; 2]]) -> Vec<T> {
    xi.iter()
        .map(|x| {
            let s = x[0].hypot(x[1]);
            if s > T::zero() {
                let d = T::lit(1e-6) * s;
                let at = |t: T| {
                    let kk = k.eval([x[0] * t / s, x[1] * t / s]).k;
                    kk[0].hypot(kk[1])
                };
                ((at(s + d) - at((s - d).max(T::zero()))) / (d + d.min(s))).max(T::zero())
            } else {
                T::zero()
            }
        })
        .collect()
}

fn l2<T: Real>(v: &[T]) -> T {
    v.iter().map(|x| *x * *x).sum::<T>().sqrt()
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Solves the nonlinear Darcy problem by linearized corrections.
pub fn solve_darcy<T: Real>(problem: &DarcyProblem<T>, table: &PermeabilityTable<T>) -> Result<DarcySolution<T>> {
    problem.config.validate()?;
    let g = problem.grid;
    OmegaGrid::new(g.dims, g.extent)?;
    if problem.fx.len() != g.n_xfaces() || problem.fy.len() != g.n_yfaces() {
        return Err(invalid("forcing", "face arrays do not match the grid"));
    }
    let cfg = &problem.config;
    let k = Interpolator::new(table, cfg.eta)?;
    let [nx, ny] = g.dims;

    // least-squares start: grad P closest to f' in the interior faces
    let ones_x = vec![T::one(); g.n_xfaces()];
    let ones_y = vec![T::one(); g.n_yfaces()];
    let lap = weighted_laplacian(&g, &ones_x, &ones_y);
    let mut fxi = problem.fx.clone();
    let mut fyi = problem.fy.clone();
    for j in 0..ny {
        fxi[g.xf(0, j)] = T::zero();
        fxi[g.xf(nx, j)] = T::zero();
    }
    for i in 0..nx {
        fyi[g.yf(i, 0)] = T::zero();
        fyi[g.yf(i, ny)] = T::zero();
    }
    let divf: Vec<T> = divergence(&g, &fxi, &fyi).into_iter().map(|d| -d).collect();
    let mut p = neumann_solve(&lap, &divf);

    let mut st = evaluate(problem, &k, &p);
    let mut clamped = st.clamped;
    let mut history = Vec::new();
    let mut it = 0;
    let mut converged = false;
    loop {
        let div = divergence(&g, &st.ux, &st.uy);
        let res = max_abs(&div);
        history.push(res);
        if res <= cfg.tol {
            converged = true;
            break;
        }
        if it == cfg.max_iter {
            break;
        }
        it += 1;
        let mut kx = radial_mobility(&k, &st.xi_x);
        let mut ky = radial_mobility(&k, &st.xi_y);
        let kmax = max_abs(&kx).max(max_abs(&ky));
        let floor = if kmax > T::zero() { cfg.mobility_floor * kmax } else { T::one() };
        kx.iter_mut().chain(ky.iter_mut()).for_each(|v| *v = v.max(floor));
        let a = weighted_laplacian(&g, &kx, &ky);
        let rhs: Vec<T> = div.iter().map(|d| -*d).collect();
        let dp = neumann_solve(&a, &rhs);
        // backtrack on the l2 norm of the divergence
        let merit = l2(&div);
        let mut theta = cfg.relaxation;
        loop {
            let trial: Vec<T> = p.iter().zip(&dp).map(|(pi, di)| *pi + theta * *di).collect();
            let next = evaluate(problem, &k, &trial);
            let m = l2(&divergence(&g, &next.ux, &next.uy));
            let accept = m < (T::one() - T::lit(1e-4) * theta) * merit;
            if accept || theta < T::lit(1e-6) {
                p = trial;
                st = next;
                break;
            }
            theta = theta * T::lit(0.5);
        }
        clamped |= st.clamped;
    }

    let mean = p.iter().copied().sum::<T>() / T::from_usize_lossy(p.len());
    p.iter_mut().for_each(|v| *v -= mean);
    let has_threshold = table.thresholds.iter().any(|t| t.is_some_and(|t| t.lower > T::zero()));
    let mut indeterminate = vec![false; g.cells()];
    if has_threshold {
        for j in 0..ny {
            for i in 0..nx {
                indeterminate[i + nx * j] = st.ux[g.xf(i, j)] == T::zero()
                    && st.ux[g.xf(i + 1, j)] == T::zero()
                    && st.uy[g.yf(i, j)] == T::zero()
                    && st.uy[g.yf(i, j + 1)] == T::zero();
            }
        }
    }
    Ok(DarcySolution {
        grid: g,
        pressure: ScalarField {
            dims: [nx, ny, 1],
            frame: Frame::Rescaled,
            mean_zero: true,
            values: p,
        },
        ux: st.ux,
        uy: st.uy,
        u3: T::zero(),
        residual_history: history,
        iterations: it,
        converged,
        clamped,
        indeterminate,
    })
}
