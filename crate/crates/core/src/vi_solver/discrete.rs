//! Assembled discrete operators on the free velocity unknowns.
//!
//! All quantities are normalized by the cell volume: the viscous form is
//! `V Eᵀ Ω E` with strain matrix `E` and row weights `Ω`, the divergence
//! pairing is `V (p, D u)` and the load is `V (f, u)`.

use rayon::prelude::*;

use super::amg::{spmm, Amg, Key};
use super::linalg::{Csr, LinOp, Precond};
use crate::fields::stencil::{Layout, Tap};
use crate::fields::{StaggeredField, ScalarField};
use crate::geometry::StructuredGrid;
use crate::real::Real;

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub(crate) struct Discretization<T> {
    pub lay: Layout<T>,
    pub dims: [usize; 3],
    pub vol: T,
    /// `(component, cell)` of every free velocity unknown.
    pub free: Vec<(u8, u32)>,
    /// Cell of each pressure unknown (the fluid cells).
    pub fluid: Vec<u32>,
    /// Strain rows by free unknowns.
    pub e: Csr<T>,
    pub et: Csr<T>,
    /// Quadrature weight of every strain row.
    pub w: Vec<T>,
    /// Divergence rows (fluid cells) by free unknowns.
    pub d: Csr<T>,
    pub dt: Csr<T>,
}

impl<T: Real> Discretization<T> {
    pub fn new(grid: &StructuredGrid<T>, sz: T) -> Self {
        let lay = Layout::new(grid, sz);
        let n = grid.cell_count();
        let mut col = [vec![NONE; n], vec![NONE; n], vec![NONE; n]];
        let mut free = Vec::new();
        for (comp, cmap) in col.iter_mut().enumerate() {
            for (c, slot) in cmap.iter_mut().enumerate() {
                if !grid.is_constrained(comp, c) {
                    *slot = free.len() as u32;
                    free.push((comp as u8, c as u32));
                }
            }
        }
        let nfree = free.len();

        let nrows = lay.strain_rows();
        let mut w = vec![T::zero(); nrows];
        let (mut ri, mut ci, mut vi) = (Vec::new(), Vec::new(), Vec::new());
        let mut add = |row: usize, taps: &[Tap<T>], scale: T| {
            for t in taps {
                let c = col[t.comp][t.cell];
                if c != NONE {
                    ri.push(row);
                    ci.push(c as usize);
                    vi.push(scale * t.coef);
                }
            }
        };
        let half = T::lit(0.5);
        lay.for_each_diagonal(|c, d, taps| {
            add(3 * c + d, taps, T::one());
        });
        lay.for_each_edge(|_, _, row, ta, tb| {
            add(row, ta, half);
            add(row, tb, half);
        });
        w[..3 * n].fill(T::one());
        lay.for_each_edge(|e, node, row, _, _| w[row] = lay.edge_weight(e, node));
        let e = Csr::from_triplets(nrows, nfree, &ri, &ci, &vi);
        let et = e.transpose();

        let mut fluid = Vec::new();
        let mut pidx = vec![NONE; n];
        for (c, slot) in pidx.iter_mut().enumerate() {
            if !grid.is_solid(c) {
                *slot = fluid.len() as u32;
                fluid.push(c as u32);
            }
        }
        let (mut ri, mut ci, mut vi) = (Vec::new(), Vec::new(), Vec::new());
        lay.for_each_divergence(|c, taps| {
            if pidx[c] == NONE {
                return;
            }
            for t in taps {
                let k = col[t.comp][t.cell];
                if k != NONE {
                    ri.push(pidx[c] as usize);
                    ci.push(k as usize);
                    vi.push(t.coef);
                }
            }
        });
        let d = Csr::from_triplets(fluid.len(), nfree, &ri, &ci, &vi);
        let dt = d.transpose();

        Discretization {
            lay,
            dims: grid.dims,
            vol: grid.cell_volume(),
            free,
            fluid,
            e,
            et,
            w,
            d,
            dt,
        }
    }

    pub fn nfree(&self) -> usize {
        self.free.len()
    }

    pub fn npress(&self) -> usize {
        self.fluid.len()
    }

    pub fn gather(&self, v: &StaggeredField<T>) -> Vec<T> {
        self.free
            .iter()
            .map(|(comp, c)| v.comps[*comp as usize][*c as usize])
            .collect()
    }

    pub fn scatter(&self, x: &[T]) -> StaggeredField<T> {
        let mut v = StaggeredField::zeros(self.dims);
        for ((comp, c), val) in self.free.iter().zip(x) {
            v.comps[*comp as usize][*c as usize] = *val;
        }
        v
    }

    pub fn scatter_pressure(&self, p: &[T]) -> ScalarField<T> {
        let mut s = ScalarField::zeros(self.dims);
        for (c, val) in self.fluid.iter().zip(p) {
            s.values[*c as usize] = *val;
        }
        s
    }

    /// `E x` (strain row values).
    pub fn strain(&self, x: &[T], rows: &mut [T]) {
        self.e.mul(x, rows);
    }

    /// Octant tensors from strain row values.
    pub fn octants(&self, rows: &[T], out: &mut [[T; 6]]) {
        let lay = &self.lay;
        let nx = lay.ax[0].n;
        let ny = lay.ax[1].n;
        out.par_chunks_mut(8 * nx).enumerate().for_each(|(line, chunk)| {
            let j = line % ny;
            let k = line / ny;
            for i in 0..nx {
                let r = lay.octant_rows(i, j, k);
                for o in 0..8 {
                    chunk[8 * i + o] = r[o].map(|ri| rows[ri]);
                }
            }
        });
    }

    /// Adjoint of [`octants`](Self::octants) under the octant quadrature:
    /// returns `z` with `(B x, y)_W = (E x, z)`, where `W` weighs each
    /// octant by 1/8 and doubles off-diagonal products.
    pub fn collapse(&self, oct: &[[T; 6]], rows: &mut [T]) {
        rows.iter_mut().for_each(|r| *r = T::zero());
        let lay = &self.lay;
        let eighth = T::lit(0.125);
        let quarter = T::lit(0.25);
        for k in 0..lay.ax[2].n {
            for j in 0..lay.ax[1].n {
                for i in 0..lay.ax[0].n {
                    let c = lay.lin(i, j, k);
                    let r = lay.octant_rows(i, j, k);
                    for o in 0..8 {
                        let t = &oct[8 * c + o];
                        for q in 0..3 {
                            rows[r[o][q]] += eighth * t[q];
                        }
                        for q in 3..6 {
                            rows[r[o][q]] += quarter * t[q];
                        }
                    }
                }
            }
        }
    }

    /// `y = Eᵀ Ω E x` (viscous operator without the `2 mu` factor).
    pub fn viscous(&self, x: &[T], y: &mut [T], scratch: &mut [T]) {
        self.e.mul(x, scratch);
        scratch
            .par_iter_mut()
            .zip(self.w.par_iter())
            .for_each(|(s, w)| *s *= *w);
        self.et.mul(scratch, y);
    }

    /// Assembled `Eᵀ Ω E`.
    pub fn viscous_matrix(&self) -> Csr<T> {
        let mut we = self.e.clone();
        for r in 0..we.nrows {
            let w = self.w[r];
            for p in we.indptr[r]..we.indptr[r + 1] {
                we.data[p] *= w;
            }
        }
        spmm(&self.et, &we)
    }

    /// Component and storage index of every free unknown.
    pub fn keys(&self) -> Vec<Key> {
        let [nx, ny, _] = self.dims;
        self.free
            .iter()
            .map(|(comp, c)| {
                let c = *c as usize;
                (*comp, [(c % nx) as u32, ((c / nx) % ny) as u32, (c / (nx * ny)) as u32])
            })
            .collect()
    }

    /// Multigrid hierarchy of the viscous block.
    pub fn multigrid(&self) -> Amg<T> {
        Amg::new(self.viscous_matrix(), self.keys(), self.dims)
    }

    /// `sum_r Ω_r (E x)_r^2`, the strain energy density integrated over
    /// octants, divided by the cell volume.
    pub fn strain_energy(&self, rows: &[T]) -> T {
        rows.iter().zip(&self.w).fold(T::zero(), |s, (r, w)| s + *w * *r * *r)
    }
}

/// The saddle operator `[c A, -Dᵀ; -D, 0]` on `(u, p)`.
pub(crate) struct Saddle<'a, T> {
    pub disc: &'a Discretization<T>,
    pub c: T,
    pub scratch: std::cell::RefCell<Vec<T>>,
}

impl<'a, T: Real> Saddle<'a, T> {
    pub fn new(disc: &'a Discretization<T>, c: T) -> Self {
        Saddle {
            disc,
            c,
            scratch: std::cell::RefCell::new(vec![T::zero(); disc.e.nrows]),
        }
    }

}

/// Block-diagonal preconditioner: one multigrid cycle for `c A` on the
/// velocity block, the inverse Schur complement estimate `c I` on the
/// pressure block.
pub(crate) struct BlockPrecond<'a, T> {
    pub amg: &'a Amg<T>,
    pub c: T,
    pub nu: usize,
}

impl<'a, T: Real> Precond<T> for BlockPrecond<'a, T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        let (ru, rp) = r.split_at(self.nu);
        let (zu, zp) = z.split_at_mut(self.nu);
        self.amg.apply(ru, zu);
        let ic = T::one() / self.c;
        zu.par_iter_mut().for_each(|v| *v *= ic);
        let c = self.c;
        zp.par_iter_mut().zip(rp.par_iter()).for_each(|(zi, ri)| *zi = c * *ri);
    }
}

impl<'a, T: Real> LinOp<T> for Saddle<'a, T> {
    fn dim(&self) -> usize {
        self.disc.nfree() + self.disc.npress()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        let nu = self.disc.nfree();
        let (xu, xp) = x.split_at(nu);
        let (yu, yp) = y.split_at_mut(nu);
        let mut s = self.scratch.borrow_mut();
        self.disc.viscous(xu, yu, &mut s);
        let c = self.c;
        yu.par_iter_mut().for_each(|v| *v *= c);
        self.disc.dt.mul_add(-T::one(), xp, yu);
        self.disc.d.mul(xu, yp);
        yp.par_iter_mut().for_each(|v| *v = -*v);
    }
}

/// `D Dᵀ` on pressures, used to project out divergence residuals.
pub(crate) struct PressurePoisson<'a, T> {
    pub disc: &'a Discretization<T>,
    pub scratch: std::cell::RefCell<Vec<T>>,
}

impl<'a, T: Real> LinOp<T> for PressurePoisson<'a, T> {
    fn dim(&self) -> usize {
        self.disc.npress()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        let mut s = self.scratch.borrow_mut();
        self.disc.dt.mul(x, &mut s);
        self.disc.d.mul(&s, y);
    }
}
