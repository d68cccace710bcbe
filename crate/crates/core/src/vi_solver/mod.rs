//! Discrete Bingham variational inequality on the rescaled domain.
//!
//! The solver minimizes
//! `J(v) = mu ∫|D_eps[v]|² + sqrt2 G ∫|D_eps[v]| - ∫ f·v`
//! over discretely divergence-free fields with an augmented Lagrangian
//! splitting `q = D_eps[u]`. Each outer iteration solves a Stokes-like
//! saddle problem for `(u, p)` with MINRES, shrinks `q` cellwise and
//! updates the multiplier.

pub(crate) mod amg;
pub(crate) mod discrete;
pub(crate) mod linalg;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::fields::{norms, tensor_norm, tensor_norm_sq, ScalarField, StaggeredField, TensorField};
use crate::geometry::{build_thin_medium, MediumSpec, StructuredGrid};
use crate::real::Real;
use amg::Amg;
use discrete::{BlockPrecond, Discretization, PressurePoisson, Saddle};
use linalg::{cg, minres, pdot, Diag, KrylovStats, Precond};

const ADAPT_EVERY: usize = 5;
const ADAPT_RATIO: f64 = 10.0;
/// Momentum is kept while the combined residual drops below this factor.
const RESTART: f64 = 0.999;
const OCT_CHUNK: usize = 4096;

/// One Bingham problem on a structured grid in the rescaled frame.
#[derive(Debug, Clone)]
pub struct BinghamProblem<T> {
    pub grid: StructuredGrid<T>,
    pub mu: T,
    /// Effective (already scaled) yield stress `G`.
    pub yield_stress: T,
    /// Vertical derivatives are multiplied by `1/epsilon`.
    pub epsilon: T,
    /// Forcing `(f', 0)` sampled at the velocity storage points.
    pub forcing: StaggeredField<T>,
}

impl<T: Real> BinghamProblem<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > T::zero()) || !self.mu.is_finite() {
            return Err(invalid("mu", "viscosity must be positive"));
        }
        if !(self.yield_stress >= T::zero()) || !self.yield_stress.is_finite() {
            return Err(invalid("yield_stress", "must be nonnegative"));
        }
        if !(self.epsilon > T::zero()) || !self.epsilon.is_finite() {
            return Err(invalid("epsilon", "must be positive"));
        }
        if self.forcing.dims != self.grid.dims {
            return Err(Error::DimensionMismatch {
                expected: self.grid.dims,
                found: self.forcing.dims,
            });
        }
        if self.forcing.comps[2].iter().any(|x| *x != T::zero()) {
            return Err(invalid("forcing", "vertical component must vanish"));
        }
        if self.forcing.comps.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("forcing"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VISolverConfig<T> {
    /// Initial augmentation parameter; `None` selects `2 mu`.
    pub rho: Option<T>,
    /// Rebalance `rho` from the primal and dual residuals.
    pub adaptive_rho: bool,
    /// Over-relaxation factor of the splitting, in `(0, 2)`.
    pub relaxation: T,
    /// Nesterov momentum on `(q, m)` with adaptive restart.
    pub accelerate: bool,
    /// Relative energy change that ends the outer iteration.
    pub tol_rel: T,
    /// Bound on `||div_eps u||_inf` of the returned field.
    pub tol_div: T,
    pub max_outer: usize,
    /// Regularization of the plastic term, used only in diagnostics.
    pub delta: T,
    /// Relative tolerance of each saddle solve.
    pub lin_tol: T,
    /// Outer iterations also stop an inner solve once its residual has
    /// dropped by this factor from the warm start; `0` disables it.
    pub inner_rel: T,
    pub max_lin_iter: usize,
}

impl<T: Real> Default for VISolverConfig<T> {
    fn default() -> Self {
        VISolverConfig {
            rho: None,
            adaptive_rho: true,
            relaxation: T::one(),
            accelerate: true,
            tol_rel: T::lit(1e-8),
            tol_div: T::lit(1e-10),
            max_outer: 5000,
            delta: T::zero(),
            lin_tol: T::lit(1e-10),
            inner_rel: T::lit(0.1),
            max_lin_iter: 20_000,
        }
    }
}

impl<T: Real> VISolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.rho {
            if !(r > T::zero()) {
                return Err(invalid("rho", "must be positive"));
            }
        }
        if !(self.relaxation > T::zero() && self.relaxation < T::lit(2.0)) {
            return Err(invalid("relaxation", "must lie in (0, 2)"));
        }
        if !(self.tol_rel > T::zero()) {
            return Err(invalid("tol_rel", "must be positive"));
        }
        if !(self.tol_div > T::zero()) {
            return Err(invalid("tol_div", "must be positive"));
        }
        if self.max_outer == 0 {
            return Err(invalid("max_outer", "must be at least 1"));
        }
        if !(self.delta >= T::zero()) {
            return Err(invalid("delta", "must be nonnegative"));
        }
        if !(self.lin_tol > T::zero()) {
            return Err(invalid("lin_tol", "must be positive"));
        }
        if !(self.inner_rel >= T::zero() && self.inner_rel < T::one()) {
            return Err(invalid("inner_rel", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Diagnostics of one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord<T> {
    pub iteration: usize,
    /// Energy of the current iterate.
    pub energy: T,
    /// `||div_eps u||_inf` after the saddle solve.
    pub div_residual: T,
    /// `||D_eps[u] - q||` relative to the first strain norm.
    pub shrink_residual: T,
    /// Relative change of the plastic variable `q`.
    pub dual_residual: T,
    /// `j(u) - (m, D_eps[u])` relative to the initial energy scale.
    pub gap: T,
    /// Augmentation parameter used in this iteration.
    pub rho: T,
    pub linear_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct VISolution<T> {
    pub velocity: StaggeredField<T>,
    /// Mean-zero pressure on fluid cells.
    pub pressure: ScalarField<T>,
    /// Plastic multiplier per octant, `|m| <= sqrt2 G`.
    pub multiplier: TensorField<T>,
    /// Best energy reached after each outer iteration (nonincreasing).
    pub energy_history: Vec<T>,
    pub residual_history: Vec<IterationRecord<T>>,
    pub energy: T,
    pub converged: bool,
    pub iterations: usize,
    /// Regularized energy with `sqrt(|D|² + delta²)` in place of `|D|`
    /// when `delta > 0`.
    pub regularized_energy: Option<T>,
}

impl<T: Real> VISolution<T> {
    /// Diagnostics as CSV rows `iteration,energy,div_residual,shrink_residual`.
    pub fn diagnostics_csv(&self) -> String
    where
        T: std::fmt::LowerExp,
    {
        let mut s = String::from("iteration,energy,div_residual,shrink_residual\n");
        for r in &self.residual_history {
            s.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e}\n",
                r.iteration, r.energy, r.div_residual, r.shrink_residual
            ));
        }
        s
    }
}

/// Assembled operators for one grid and vertical scale, reusable across
/// forcings, viscosities and yield stresses.
#[derive(Debug, Clone)]
pub struct BinghamSolver<T> {
    grid: StructuredGrid<T>,
    epsilon: T,
    disc: Discretization<T>,
    amg: Amg<T>,
}

impl<T: Real> BinghamSolver<T> {
    pub fn new(grid: &StructuredGrid<T>, epsilon: T) -> Result<Self> {
        if !(epsilon > T::zero()) || !epsilon.is_finite() {
            return Err(invalid("epsilon", "must be positive"));
        }
        let disc = Discretization::new(grid, T::one() / epsilon);
        let amg = disc.multigrid();
        Ok(BinghamSolver {
            grid: grid.clone(),
            epsilon,
            disc,
            amg,
        })
    }

    pub fn grid(&self) -> &StructuredGrid<T> {
        &self.grid
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    fn check(&self, problem: &BinghamProblem<T>) -> Result<()> {
        problem.validate()?;
        if problem.grid != self.grid || problem.epsilon != self.epsilon {
            return Err(invalid("problem", "grid or epsilon differs from the assembled solver"));
        }
        Ok(())
    }

    /// Energy `J(v)` of a field satisfying the constraints.
    pub fn energy(&self, problem: &BinghamProblem<T>, v: &StaggeredField<T>) -> Result<T> {
        self.check(problem)?;
        let x = self.disc.gather(v);
        let f = self.disc.gather(&problem.forcing);
        Ok(self.energy_parts(problem, &x, &f).0)
    }

    /// `(J, quadratic term, plastic term)` of a free-unknown vector.
    fn energy_parts(&self, problem: &BinghamProblem<T>, x: &[T], f: &[T]) -> (T, T, T) {
        let d = &self.disc;
        let mut rows = vec![T::zero(); d.e.nrows];
        d.strain(x, &mut rows);
        let mut oct = vec![[T::zero(); 6]; 8 * d.lay.cells()];
        d.octants(&rows, &mut oct);
        let quad = problem.mu * d.strain_energy(&rows) * d.vol;
        let l1 = oct_l1(&oct) * T::lit(0.125);
        let plast = T::SQRT_2() * problem.yield_stress * l1 * d.vol;
        let load = pdot(f, x) * d.vol;
        (quad + plast - load, quad, plast)
    }

    /// Solves the Stokes problem (`G = 0`) by one saddle solve.
    pub fn solve_stokes(&self, problem: &BinghamProblem<T>, config: &VISolverConfig<T>) -> Result<VISolution<T>> {
        self.check(problem)?;
        config.validate()?;
        if problem.yield_stress != T::zero() {
            return Err(invalid("yield_stress", "the Stokes path requires zero yield stress"));
        }
        let f = self.disc.gather(&problem.forcing);
        if f.iter().all(|x| *x == T::zero()) {
            return Ok(self.zero_solution());
        }
        let d = &self.disc;
        let nu = d.nfree();
        let two_mu = T::lit(2.0) * problem.mu;
        let saddle = Saddle::new(d, two_mu);
        let minv = self.preconditioner(two_mu);
        let mut rhs = f.clone();
        rhs.extend(std::iter::repeat(T::zero()).take(d.npress()));
        let mut x = vec![T::zero(); rhs.len()];
        let st = self.saddle_solve(&saddle, &minv, &rhs, &mut x, config, T::zero())?;
        let (mut u, p) = {
            let (u, p) = x.split_at(nu);
            (u.to_vec(), p.to_vec())
        };
        let div = self.project_divergence(&mut u, config)?;
        let (energy, _, _) = self.energy_parts(problem, &u, &f);
        let rec = IterationRecord {
            iteration: 1,
            energy,
            div_residual: div,
            shrink_residual: T::zero(),
            dual_residual: T::zero(),
            gap: T::zero(),
            rho: T::zero(),
            linear_iterations: st.iterations,
        };
        Ok(self.finish(u, p, vec![[T::zero(); 6]; 8 * d.lay.cells()], vec![rec], energy, st.converged && div <= config.tol_div, problem, config))
    }

    /// Solves the Bingham inequality; `G = 0` is routed to [`solve_stokes`](Self::solve_stokes).
    pub fn solve(&self, problem: &BinghamProblem<T>, config: &VISolverConfig<T>) -> Result<VISolution<T>> {
        self.check(problem)?;
        config.validate()?;
        if problem.yield_stress == T::zero() {
            return self.solve_stokes(problem, config);
        }
        let d = &self.disc;
        let f = d.gather(&problem.forcing);
        if f.iter().all(|x| *x == T::zero()) {
            return Ok(self.zero_solution());
        }
        let nu = d.nfree();
        let noct = 8 * d.lay.cells();
        let mu = problem.mu;
        let two_mu = T::lit(2.0) * mu;
        let alpha = config.relaxation;
        let sqrt2g = T::SQRT_2() * problem.yield_stress;
        let mut rho = config.rho.unwrap_or(two_mu);
        let mut saddle = Saddle::new(d, two_mu + rho);
        let mut minv = self.preconditioner(two_mu + rho);

        let mut x = vec![T::zero(); nu + d.npress()];
        let mut rhs = vec![T::zero(); nu + d.npress()];
        let mut rows = vec![T::zero(); d.e.nrows];
        // current iterates and the extrapolated point fed to the next step
        let mut q = vec![[T::zero(); 6]; noct];
        let mut m = vec![[T::zero(); 6]; noct];
        let mut qh = q.clone();
        let mut mh = m.clone();
        let mut z = vec![[T::zero(); 6]; noct];
        let mut history = Vec::new();
        let mut best = Vec::new();
        let mut prev_energy: Option<T> = None;
        let mut scale: Option<(T, T)> = None;
        let mut converged = false;
        let mut momentum = T::one();
        let mut combined_prev = T::infinity();
        let eighth = T::lit(0.125);
        let tiny = T::min_positive_value();

        for k in 1..=config.max_outer {
            // u-step: right-hand side f + Eᵀ collapse(rho q - m)
            z.par_iter_mut()
                .zip(qh.par_iter().zip(mh.par_iter()))
                .for_each(|(zo, (qo, mo))| {
                    for t in 0..6 {
                        zo[t] = rho * qo[t] - mo[t];
                    }
                });
            d.collapse(&z, &mut rows);
            {
                let (ru, rp) = rhs.split_at_mut(nu);
                d.et.mul(&rows, ru);
                ru.par_iter_mut().zip(f.par_iter()).for_each(|(r, fi)| *r += *fi);
                rp.iter_mut().for_each(|v| *v = T::zero());
            }
            let st = self.saddle_solve(&saddle, &minv, &rhs, &mut x, config, config.inner_rel)?;

            let u = &x[..nu];
            d.strain(u, &mut rows);
            d.octants(&rows, &mut z);
            let thr = sqrt2g / rho;
            // relaxed shrink and multiplier update; qh, mh receive the new
            // iterates, q, m keep the previous ones until the momentum step
            let sums: Vec<[T; 7]> = z
                .par_chunks(OCT_CHUNK)
                .zip(qh.par_chunks_mut(OCT_CHUNK).zip(mh.par_chunks_mut(OCT_CHUNK)))
                .map(|(zs, (qs, ms))| {
                    let mut acc = [T::zero(); 7];
                    for ((zo, qo), mo) in zs.iter().zip(qs.iter_mut()).zip(ms.iter_mut()) {
                        let mut zh = [T::zero(); 6];
                        let mut y = [T::zero(); 6];
                        for t in 0..6 {
                            zh[t] = alpha * zo[t] + (T::one() - alpha) * qo[t];
                            y[t] = zh[t] + mo[t] / rho;
                        }
                        let ny = tensor_norm(&y);
                        let sc = if ny > thr { (ny - thr) / ny } else { T::zero() };
                        let mut dq = [T::zero(); 6];
                        let mut dm = [T::zero(); 6];
                        let mut r = [T::zero(); 6];
                        for t in 0..6 {
                            let qn = sc * y[t];
                            dq[t] = qn - qo[t];
                            dm[t] = rho * (zh[t] - qn);
                            qo[t] = qn;
                            mo[t] += dm[t];
                            r[t] = zo[t] - qn;
                        }
                        let nz = tensor_norm_sq(zo);
                        acc[0] += tensor_norm_sq(&r);
                        acc[1] += tensor_norm_sq(&dq);
                        acc[2] += nz;
                        acc[3] += nz.sqrt();
                        acc[4] += tensor_dot(mo, zo);
                        acc[5] += tensor_norm_sq(&dm);
                    }
                    acc
                })
                .collect();
            let mut sum = [T::zero(); 7];
            for a in sums {
                for t in 0..7 {
                    sum[t] += a[t];
                }
            }
            let [pr, dq2, bu, l1, mz, dm2, _] = sum;
            let quad = mu * bu * eighth * d.vol;
            let load = pdot(&f, u) * d.vol;
            let plastic = sqrt2g * l1 * eighth * d.vol;
            let energy = quad + plastic - load;
            if !energy.is_finite() {
                return Err(Error::NonFinite("outer iteration"));
            }
            let (bu_ref, e_ref) = *scale.get_or_insert_with(|| ((bu * eighth).sqrt(), quad + load.abs()));
            let shrink_res = (pr * eighth).sqrt() / bu_ref.max(tiny);
            let dual_res = (dq2 * eighth).sqrt() / bu_ref.max(tiny);
            let gap = (plastic - mz * eighth * d.vol) / e_ref.max(tiny);
            let mut div = vec![T::zero(); d.npress()];
            d.d.mul(u, &mut div);
            let div_res = div.iter().fold(T::zero(), |a, v| a.max(v.abs()));
            history.push(IterationRecord {
                iteration: k,
                energy,
                div_residual: div_res,
                shrink_residual: shrink_res,
                dual_residual: dual_res,
                gap,
                rho,
                linear_iterations: st.iterations,
            });
            let incumbent = best.last().map_or(energy, |b: &T| b.min(energy));
            best.push(incumbent);
            if let Some(pe) = prev_energy {
                let de = (energy - pe).abs();
                if de <= config.tol_rel * e_ref.max(tiny)
                    && gap.abs() <= config.tol_rel
                    && shrink_res <= config.tol_rel.sqrt()
                    && dual_res <= config.tol_rel.sqrt()
                {
                    converged = true;
                }
            }
            prev_energy = Some(energy);

            // new iterates now sit in (qh, mh); move them to (q, m)
            std::mem::swap(&mut q, &mut qh);
            std::mem::swap(&mut m, &mut mh);
            if converged {
                break;
            }
            let mut reset = false;
            if config.adaptive_rho && k % ADAPT_EVERY == 0 {
                let dual = dual_res * rho / two_mu;
                let next = if shrink_res > T::lit(ADAPT_RATIO) * dual {
                    rho * T::lit(2.0)
                } else if dual > T::lit(ADAPT_RATIO) * shrink_res {
                    rho * T::lit(0.5)
                } else {
                    rho
                };
                if next != rho {
                    rho = next;
                    saddle = Saddle::new(d, two_mu + rho);
                    minv = self.preconditioner(two_mu + rho);
                    reset = true;
                }
            }
            let combined = dm2 / rho + rho * dq2;
            if config.accelerate && !reset && combined < T::lit(RESTART) * combined_prev {
                let next = (T::one() + (T::one() + T::lit(4.0) * momentum * momentum).sqrt()) * T::lit(0.5);
                let beta = (momentum - T::one()) / next;
                momentum = next;
                // (qh, mh) currently hold the previous iterates
                extrapolate(&mut qh, &q, beta);
                extrapolate(&mut mh, &m, beta);
            } else {
                momentum = T::one();
                qh.copy_from_slice(&q);
                mh.copy_from_slice(&m);
            }
            combined_prev = combined;
            log::trace!(
                "outer {k}: energy {:.10e} gap {:.3e} shrink {:.3e} dual {:.3e} rho {:.3e} linear {}",
                energy.as_f64(),
                gap.as_f64(),
                shrink_res.as_f64(),
                dual_res.as_f64(),
                rho.as_f64(),
                st.iterations
            );
        }

        // final u-step from (q, m) to full linear accuracy
        z.par_iter_mut().zip(q.par_iter().zip(m.par_iter())).for_each(|(zo, (qo, mo))| {
            for t in 0..6 {
                zo[t] = rho * qo[t] - mo[t];
            }
        });
        d.collapse(&z, &mut rows);
        {
            let (ru, rp) = rhs.split_at_mut(nu);
            d.et.mul(&rows, ru);
            ru.par_iter_mut().zip(f.par_iter()).for_each(|(r, fi)| *r += *fi);
            rp.iter_mut().for_each(|v| *v = T::zero());
        }
        self.saddle_solve(&saddle, &minv, &rhs, &mut x, config, T::zero())?;
        let (mut u, p) = {
            let (u, p) = x.split_at(nu);
            (u.to_vec(), p.to_vec())
        };
        let div = self.project_divergence(&mut u, config)?;
        let (energy, _, _) = self.energy_parts(problem, &u, &f);
        let mut sol = self.finish(u, p, m, history, energy, converged && div <= config.tol_div, problem, config);
        sol.energy_history = best;
        Ok(sol)
    }

    fn preconditioner(&self, c: T) -> BlockPrecond<'_, T> {
        BlockPrecond {
            amg: &self.amg,
            c,
            nu: self.disc.nfree(),
        }
    }

    fn saddle_solve(
        &self,
        saddle: &Saddle<'_, T>,
        minv: &BlockPrecond<'_, T>,
        rhs: &[T],
        x: &mut [T],
        config: &VISolverConfig<T>,
        rel: T,
    ) -> Result<KrylovStats<T>> {
        let mut z = vec![T::zero(); rhs.len()];
        minv.apply(rhs, &mut z);
        let bnorm = pdot(rhs, &z).max(T::zero()).sqrt();
        let st = minres(saddle, minv, rhs, x, config.lin_tol * bnorm, rel, config.max_lin_iter);
        if x.iter().any(|v| !v.is_finite()) || !st.residual.is_finite() {
            return Err(Error::NonFinite("saddle solve"));
        }
        if !st.converged {
            log::warn!(
                "saddle solve stopped after {} iterations at residual {:e} (target {:e})",
                st.iterations,
                st.residual.as_f64(),
                (config.lin_tol * bnorm).as_f64().max(rel.as_f64() * st.initial.as_f64())
            );
        }
        Ok(st)
    }

    /// Removes the divergence left by the inexact saddle solve with a
    /// discrete Helmholtz projection. Returns `||D u||_inf` afterwards.
    fn project_divergence(&self, u: &mut [T], config: &VISolverConfig<T>) -> Result<T> {
        let d = &self.disc;
        let mut div = vec![T::zero(); d.npress()];
        d.d.mul(u, &mut div);
        let inf = |v: &[T]| v.iter().fold(T::zero(), |a, x| a.max(x.abs()));
        if inf(&div) <= config.tol_div * T::lit(0.01) {
            return Ok(inf(&div));
        }
        let op = PressurePoisson {
            disc: d,
            scratch: std::cell::RefCell::new(vec![T::zero(); d.nfree()]),
        };
        let mut diag = vec![T::zero(); d.npress()];
        for r in 0..d.d.nrows {
            for p in d.d.indptr[r]..d.d.indptr[r + 1] {
                diag[r] += d.d.data[p] * d.d.data[p];
            }
        }
        let minv = Diag(diag.iter().map(|x| if *x > T::zero() { T::one() / *x } else { T::one() }).collect());
        // remove the mean so the singular system stays consistent
        let mean = div.iter().fold(T::zero(), |a, b| a + *b) / T::from_usize_lossy(div.len().max(1));
        div.iter_mut().for_each(|v| *v -= mean);
        let mut phi = vec![T::zero(); d.npress()];
        let target = config.tol_div * T::lit(1e-3);
        cg(&op, &minv, &div, &mut phi, target, 20 * d.npress().max(100));
        let mut corr = vec![T::zero(); d.nfree()];
        d.dt.mul(&phi, &mut corr);
        u.par_iter_mut().zip(corr.par_iter()).for_each(|(a, b)| *a -= *b);
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("divergence projection"));
        }
        let mut after = vec![T::zero(); d.npress()];
        d.d.mul(u, &mut after);
        Ok(inf(&after))
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        u: Vec<T>,
        p: Vec<T>,
        m: Vec<[T; 6]>,
        history: Vec<IterationRecord<T>>,
        energy: T,
        converged: bool,
        problem: &BinghamProblem<T>,
        config: &VISolverConfig<T>,
    ) -> VISolution<T> {
        let d = &self.disc;
        let velocity = d.scatter(&u);
        let mut pressure = d.scatter_pressure(&p);
        pressure.normalize_mean(&self.grid);
        let regularized_energy = (config.delta > T::zero()).then(|| {
            let mut rows = vec![T::zero(); d.e.nrows];
            d.strain(&u, &mut rows);
            let mut oct = vec![[T::zero(); 6]; 8 * d.lay.cells()];
            d.octants(&rows, &mut oct);
            let dl2 = config.delta * config.delta;
            let reg = oct
                .iter()
                .fold(T::zero(), |a, t| a + (tensor_norm_sq(t) + dl2).sqrt())
                * T::lit(0.125)
                * d.vol;
            let f = d.gather(&problem.forcing);
            problem.mu * d.strain_energy(&rows) * d.vol + T::SQRT_2() * problem.yield_stress * reg
                - pdot(&f, &u) * d.vol
        });
        let energy_history = history.iter().map(|r| r.energy).collect();
        VISolution {
            velocity,
            pressure,
            multiplier: TensorField {
                dims: self.grid.dims,
                octants: m,
            },
            energy_history,
            iterations: history.len(),
            residual_history: history,
            energy,
            converged,
            regularized_energy,
        }
    }

    fn zero_solution(&self) -> VISolution<T> {
        let mut pressure = ScalarField::zeros(self.grid.dims);
        pressure.mean_zero = true;
        VISolution {
            velocity: StaggeredField::zeros(self.grid.dims),
            pressure,
            multiplier: TensorField::zeros(self.grid.dims),
            energy_history: vec![T::zero()],
            residual_history: vec![IterationRecord {
                iteration: 1,
                energy: T::zero(),
                div_residual: T::zero(),
                shrink_residual: T::zero(),
                dual_residual: T::zero(),
                gap: T::zero(),
                rho: T::zero(),
                linear_iterations: 0,
            }],
            energy: T::zero(),
            converged: true,
            iterations: 1,
            regularized_energy: None,
        }
    }

    /// Residual of the discrete inequality for a test field `v`:
    /// `a(u, v-u) + j(v) - j(u) - (f, v-u) - (p, div(v-u))`.
    /// Values on constrained faces of `v` are ignored.
    pub fn certificate_residual(
        &self,
        problem: &BinghamProblem<T>,
        sol: &VISolution<T>,
        v: &StaggeredField<T>,
    ) -> Result<T> {
        self.check(problem)?;
        let d = &self.disc;
        let u = d.gather(&sol.velocity);
        let vv = d.gather(v);
        let f = d.gather(&problem.forcing);
        let w: Vec<T> = vv.iter().zip(&u).map(|(a, b)| *a - *b).collect();
        let mut ru = vec![T::zero(); d.e.nrows];
        let mut rw = vec![T::zero(); d.e.nrows];
        d.strain(&u, &mut ru);
        d.strain(&w, &mut rw);
        let a_uw = T::lit(2.0) * problem.mu * ru.iter().zip(&rw).zip(&d.w).fold(T::zero(), |s, ((a, b), c)| s + *a * *b * *c);
        let mut rv = vec![T::zero(); d.e.nrows];
        d.strain(&vv, &mut rv);
        let mut ou = vec![[T::zero(); 6]; 8 * d.lay.cells()];
        let mut ov = ou.clone();
        d.octants(&ru, &mut ou);
        d.octants(&rv, &mut ov);
        let j = |o: &[[T; 6]]| T::SQRT_2() * problem.yield_stress * oct_l1(o) * T::lit(0.125);
        let mut divw = vec![T::zero(); d.npress()];
        d.d.mul(&w, &mut divw);
        let p: Vec<T> = d.fluid.iter().map(|c| sol.pressure.values[*c as usize]).collect();
        let r = a_uw + j(&ov) - j(&ou) - pdot(&f, &w) - pdot(&p, &divw);
        Ok(r * d.vol)
    }
}

/// `hat = cur + beta (cur - hat)`, with `hat` holding the previous iterate.
fn extrapolate<T: Real>(hat: &mut [[T; 6]], cur: &[[T; 6]], beta: T) {
    hat.par_iter_mut().zip(cur.par_iter()).for_each(|(h, c)| {
        for t in 0..6 {
            h[t] = c[t] + beta * (c[t] - h[t]);
        }
    });
}

fn tensor_dot<T: Real>(a: &[T; 6], b: &[T; 6]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + T::lit(2.0) * (a[3] * b[3] + a[4] * b[4] + a[5] * b[5])
}

fn oct_l1<T: Real>(oct: &[[T; 6]]) -> T {
    oct.par_chunks(4096)
        .map(|c| c.iter().fold(T::zero(), |a, t| a + tensor_norm(t)))
        .collect::<Vec<T>>()
        .into_iter()
        .fold(T::zero(), |a, b| a + b)
}

/// Energy `J(v) = mu ∫|D_eps v|² + sqrt2 G ∫|D_eps v| - ∫ f·v`.
pub fn energy<T: Real>(problem: &BinghamProblem<T>, v: &StaggeredField<T>) -> Result<T> {
    BinghamSolver::new(&problem.grid, problem.epsilon)?.energy(problem, v)
}

pub fn solve_bingham<T: Real>(problem: &BinghamProblem<T>, config: &VISolverConfig<T>) -> Result<VISolution<T>> {
    BinghamSolver::new(&problem.grid, problem.epsilon)?.solve(problem, config)
}

pub fn solve_stokes<T: Real>(problem: &BinghamProblem<T>, config: &VISolverConfig<T>) -> Result<VISolution<T>> {
    BinghamSolver::new(&problem.grid, problem.epsilon)?.solve_stokes(problem, config)
}

/// One member of an a-priori verification family.
#[derive(Debug, Clone, PartialEq)]
pub struct AprioriRow<T> {
    pub epsilon: T,
    pub a_eps: T,
    /// Scale `s`: `a_eps` (critical, subcritical) or `eps` (supercritical).
    pub scale: T,
    /// `||u||/s²`
    pub l2_ratio: T,
    /// `||D_eps[u]||/s`
    pub sym_grad_ratio: T,
    /// `||D_eps u||/s`
    pub grad_ratio: T,
    pub converged: bool,
    /// Set when the member could not be solved.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AprioriReport<T> {
    pub rows: Vec<AprioriRow<T>>,
    /// Largest max/min quotient of each ratio column over the solved rows.
    pub spread: [T; 3],
}

impl<T: Real> AprioriReport<T> {
    /// Whether every ratio column varies by less than `factor`.
    pub fn bounded(&self, factor: T) -> bool {
        self.spread.iter().all(|s| *s < factor)
    }
}

/// Solves every member of a family of media with forcing `f'(x')` on a
/// thin grid with `n` cells per period and tabulates the scaled norms.
pub fn verify_apriori<T: Real>(
    family: &[MediumSpec<T>],
    n: usize,
    forcing: &(dyn Fn([T; 2]) -> [T; 2] + Sync),
    config: &VISolverConfig<T>,
) -> Result<AprioriReport<T>> {
    let first = family.first().ok_or_else(|| invalid("family", "must not be empty"))?;
    for (i, s) in family.iter().enumerate() {
        s.validate()?;
        if s.omega_extent != first.omega_extent
            || s.obstacle_radius != first.obstacle_radius
            || s.mu != first.mu
            || s.g != first.g
            || s.regime != first.regime
        {
            return Err(invalid(&format!("family[{i}]"), "members must share omega, r, mu, g and regime"));
        }
        if i > 0 && !(s.epsilon < family[i - 1].epsilon) {
            return Err(invalid(&format!("family[{i}].epsilon"), "must decrease"));
        }
    }
    let rows: Vec<AprioriRow<T>> = family
        .par_iter()
        .map(|s| apriori_member(s, n, forcing, config))
        .collect();
    let mut spread = [T::one(); 3];
    for (col, sp) in spread.iter_mut().enumerate() {
        let vals: Vec<T> = rows
            .iter()
            .filter(|r| r.failure.is_none())
            .map(|r| [r.l2_ratio, r.sym_grad_ratio, r.grad_ratio][col])
            .collect();
        let hi = vals.iter().fold(T::zero(), |a, b| a.max(*b));
        let lo = vals.iter().fold(T::infinity(), |a, b| a.min(*b));
        *sp = if hi == T::zero() { T::one() } else { hi / lo };
    }
    Ok(AprioriReport { rows, spread })
}

fn apriori_member<T: Real>(
    s: &MediumSpec<T>,
    n: usize,
    forcing: &(dyn Fn([T; 2]) -> [T; 2] + Sync),
    config: &VISolverConfig<T>,
) -> AprioriRow<T> {
    let scale = s.velocity_scale();
    let mut row = AprioriRow {
        epsilon: s.epsilon,
        a_eps: s.a_eps,
        scale,
        l2_ratio: T::zero(),
        sym_grad_ratio: T::zero(),
        grad_ratio: T::zero(),
        converged: false,
        failure: None,
    };
    let run = || -> Result<(T, T, T, bool)> {
        let thin = build_thin_medium(s, n)?;
        let f = StaggeredField::from_fn(&thin.grid, |x| {
            let v = forcing([x[0], x[1]]);
            [v[0], v[1], T::zero()]
        });
        let problem = BinghamProblem {
            grid: thin.grid.clone(),
            mu: s.mu,
            yield_stress: s.scaled_yield(),
            epsilon: s.epsilon,
            forcing: f,
        };
        let sol = solve_bingham(&problem, config)?;
        let nm = norms(&thin.grid, &sol.velocity, s.epsilon)?;
        Ok((nm.l2, nm.sym_grad, nm.grad, sol.converged))
    };
    match run() {
        Ok((l2, sg, g, conv)) => {
            row.l2_ratio = l2 / (scale * scale);
            row.sym_grad_ratio = sg / scale;
            row.grad_ratio = g / scale;
            row.converged = conv;
        }
        Err(e) => row.failure = Some(e.to_string()),
    }
    row
}
