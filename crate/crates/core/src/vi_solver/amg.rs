//! Smoothed-aggregation multigrid for the viscous block.
//!
//! Aggregates are geometric: unknowns of one velocity component whose
//! storage indices share `(i/2, j/2, k/2)` form one coarse unknown. The
//! tentative piecewise-constant prolongator is smoothed by one damped
//! Jacobi step and coarse operators are Galerkin products. Smoothing uses
//! a Chebyshev polynomial in `D⁻¹A`, which keeps the V-cycle symmetric
//! positive definite so it can precondition MINRES.

use rayon::prelude::*;

use super::linalg::{pdot, Csr};
use crate::real::Real;

const COARSE_LIMIT: usize = 2000;
const CHEB_DEGREE: usize = 2;
const CHEB_RATIO: f64 = 25.0;

#[derive(Debug, Clone)]
struct Level<T> {
    a: Csr<T>,
    dinv: Vec<T>,
    lmax: T,
    /// Prolongation to this level from the next coarser one.
    p: Csr<T>,
    r: Csr<T>,
}

#[derive(Debug, Clone)]
pub(crate) struct Amg<T> {
    levels: Vec<Level<T>>,
    coarse: DenseCholesky<T>,
}

/// Geometric key of an unknown: component and storage index.
pub(crate) type Key = (u8, [u32; 3]);

impl<T: Real> Amg<T> {
    /// Builds the hierarchy for the SPD matrix `a` whose unknowns carry
    /// `keys` on a grid of dimensions `dims`.
    pub fn new(a: Csr<T>, keys: Vec<Key>, dims: [usize; 3]) -> Self {
        let mut levels = Vec::new();
        let mut a = a;
        let mut keys = keys;
        let mut dims = dims;
        loop {
            let n = a.nrows;
            let coarse_dims = dims.map(|d| if d > 1 { d.div_ceil(2) } else { 1 });
            if n <= COARSE_LIMIT || coarse_dims == dims {
                break;
            }
            let (agg, ckeys) = aggregate(&keys, coarse_dims);
            let nc = ckeys.len();
            if nc * 10 > n * 9 {
                break;
            }
            let dinv: Vec<T> = a.diagonal().iter().map(|d| T::one() / *d).collect();
            let lmax = spectral_radius(&a, &dinv);
            let omega = T::lit(4.0 / 3.0) / lmax;
            let p = smoothed_prolongator(&a, &dinv, omega, &agg, nc);
            let r = p.transpose();
            let ap = spmm(&a, &p);
            let ac = spmm(&r, &ap);
            levels.push(Level { a, dinv, lmax, p, r });
            a = ac;
            keys = ckeys;
            dims = coarse_dims;
        }
        let coarse = DenseCholesky::new(&a);
        Amg { levels, coarse }
    }

    #[cfg(test)]
    pub fn levels(&self) -> usize {
        self.levels.len() + 1
    }

    /// `(rows, nonzeros)` of each level operator, coarsest last.
    #[cfg(test)]
    pub fn complexity(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = self.levels.iter().map(|l| (l.a.nrows, l.a.data.len())).collect();
        v.push((self.coarse.n, self.coarse.n * self.coarse.n));
        v
    }

    /// One V-cycle for `A x = b` from a zero initial guess.
    pub fn apply(&self, b: &[T], x: &mut [T]) {
        self.cycle(0, b, x);
    }

    fn cycle(&self, l: usize, b: &[T], x: &mut [T]) {
        if l == self.levels.len() {
            self.coarse.solve(b, x);
            return;
        }
        let lev = &self.levels[l];
        chebyshev(lev, b, x, true);
        let mut r = vec![T::zero(); b.len()];
        lev.a.mul(x, &mut r);
        r.par_iter_mut().zip(b.par_iter()).for_each(|(ri, bi)| *ri = *bi - *ri);
        let mut rc = vec![T::zero(); lev.r.nrows];
        lev.r.mul(&r, &mut rc);
        let mut xc = vec![T::zero(); rc.len()];
        self.cycle(l + 1, &rc, &mut xc);
        lev.p.mul_add(T::one(), &xc, x);
        chebyshev(lev, b, x, false);
    }
}

/// Chebyshev smoothing of `A x = b` on the interval
/// `[lmax/CHEB_RATIO, lmax]` of `D⁻¹A`, starting from `x` or from zero.
fn chebyshev<T: Real>(lev: &Level<T>, b: &[T], x: &mut [T], from_zero: bool) {
    let hi = lev.lmax;
    let lo = hi / T::lit(CHEB_RATIO);
    let theta = (hi + lo) * T::lit(0.5);
    let delta = (hi - lo) * T::lit(0.5);
    let sigma = theta / delta;
    let mut rho = T::one() / sigma;
    let n = b.len();
    let mut r = b.to_vec();
    if from_zero {
        x.iter_mut().for_each(|v| *v = T::zero());
    } else {
        let mut ax = vec![T::zero(); n];
        lev.a.mul(x, &mut ax);
        r.par_iter_mut().zip(ax.par_iter()).for_each(|(ri, ai)| *ri -= *ai);
    }
    let mut d: Vec<T> = r
        .par_iter()
        .zip(lev.dinv.par_iter())
        .map(|(ri, di)| *ri * *di / theta)
        .collect();
    let mut ad = vec![T::zero(); n];
    for k in 0..CHEB_DEGREE {
        x.par_iter_mut().zip(d.par_iter()).for_each(|(xi, di)| *xi += *di);
        if k + 1 == CHEB_DEGREE {
            break;
        }
        lev.a.mul(&d, &mut ad);
        r.par_iter_mut().zip(ad.par_iter()).for_each(|(ri, ai)| *ri -= *ai);
        let rho_new = T::one() / (T::lit(2.0) * sigma - rho);
        let c1 = rho_new * rho;
        let c2 = T::lit(2.0) * rho_new / delta;
        d.par_iter_mut()
            .zip(r.par_iter().zip(lev.dinv.par_iter()))
            .for_each(|(di, (ri, dv))| *di = c1 * *di + c2 * *ri * *dv);
        rho = rho_new;
    }
}

/// Upper estimate of the spectral radius of `D⁻¹A` by power iteration.
fn spectral_radius<T: Real>(a: &Csr<T>, dinv: &[T]) -> T {
    let n = a.nrows;
    // deterministic start vector
    let mut v: Vec<T> = (0..n)
        .map(|i| T::one() + T::lit(0.37) * T::from_usize_lossy((i * 7919) % 13))
        .collect();
    let mut w = vec![T::zero(); n];
    let mut lam = T::one();
    for _ in 0..15 {
        let nv = pdot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        a.mul(&v, &mut w);
        w.iter_mut().zip(dinv).for_each(|(x, d)| *x *= *d);
        lam = pdot(&v, &w);
        std::mem::swap(&mut v, &mut w);
    }
    lam * T::lit(1.1)
}

fn aggregate(keys: &[Key], cdims: [usize; 3]) -> (Vec<u32>, Vec<Key>) {
    let ncell = cdims[0] * cdims[1] * cdims[2];
    let mut slot = vec![u32::MAX; 3 * ncell];
    let mut agg = Vec::with_capacity(keys.len());
    let mut ckeys = Vec::new();
    for (comp, idx) in keys {
        let c = [0, 1, 2].map(|a| if cdims[a] == 1 { 0 } else { idx[a] / 2 });
        let lin = *comp as usize * ncell + c[0] as usize + cdims[0] * (c[1] as usize + cdims[1] * c[2] as usize);
        if slot[lin] == u32::MAX {
            slot[lin] = ckeys.len() as u32;
            ckeys.push((*comp, c));
        }
        agg.push(slot[lin]);
    }
    (agg, ckeys)
}

/// `P = (I - omega D⁻¹A) P_tent`.
fn smoothed_prolongator<T: Real>(a: &Csr<T>, dinv: &[T], omega: T, agg: &[u32], nc: usize) -> Csr<T> {
    let rows: Vec<Vec<(u32, T)>> = (0..a.nrows)
        .into_par_iter()
        .map(|i| {
            let mut entries: Vec<(u32, T)> = Vec::with_capacity(16);
            let s = omega * dinv[i];
            for p in a.indptr[i]..a.indptr[i + 1] {
                let j = a.indices[p] as usize;
                let v = -s * a.data[p];
                entries.push((agg[j], v));
            }
            entries.push((agg[i], T::one()));
            merge(entries)
        })
        .collect();
    from_rows(rows, nc)
}

fn merge<T: Real>(mut e: Vec<(u32, T)>) -> Vec<(u32, T)> {
    e.sort_by_key(|x| x.0);
    let mut out: Vec<(u32, T)> = Vec::with_capacity(e.len());
    for (c, v) in e {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += v,
            _ => out.push((c, v)),
        }
    }
    out
}

fn from_rows<T: Real>(rows: Vec<Vec<(u32, T)>>, ncols: usize) -> Csr<T> {
    let nrows = rows.len();
    let mut indptr = Vec::with_capacity(nrows + 1);
    indptr.push(0);
    let nnz: usize = rows.iter().map(|r| r.len()).sum();
    let mut indices = Vec::with_capacity(nnz);
    let mut data = Vec::with_capacity(nnz);
    for r in rows {
        for (c, v) in r {
            indices.push(c);
            data.push(v);
        }
        indptr.push(indices.len());
    }
    Csr {
        nrows,
        ncols,
        indptr,
        indices,
        data,
    }
}

/// Sparse product `A B` (row-wise Gustavson, columns sorted per row).
pub(crate) fn spmm<T: Real>(a: &Csr<T>, b: &Csr<T>) -> Csr<T> {
    let rows: Vec<Vec<(u32, T)>> = (0..a.nrows)
        .into_par_iter()
        .map_init(
            || (vec![T::zero(); b.ncols], vec![u32::MAX; b.ncols], Vec::<u32>::new()),
            |(acc, mark, cols), i| {
                cols.clear();
                for p in a.indptr[i]..a.indptr[i + 1] {
                    let k = a.indices[p] as usize;
                    let av = a.data[p];
                    for q in b.indptr[k]..b.indptr[k + 1] {
                        let j = b.indices[q];
                        if mark[j as usize] != i as u32 {
                            mark[j as usize] = i as u32;
                            acc[j as usize] = T::zero();
                            cols.push(j);
                        }
                        acc[j as usize] += av * b.data[q];
                    }
                }
                cols.sort_unstable();
                cols.iter().map(|j| (*j, acc[*j as usize])).collect()
            },
        )
        .collect();
    from_rows(rows, b.ncols)
}

/// Dense Cholesky factorization for the coarsest level.
#[derive(Debug, Clone)]
struct DenseCholesky<T> {
    n: usize,
    l: Vec<T>,
}

impl<T: Real> DenseCholesky<T> {
    fn new(a: &Csr<T>) -> Self {
        let n = a.nrows;
        let mut l = vec![T::zero(); n * n];
        for i in 0..n {
            for p in a.indptr[i]..a.indptr[i + 1] {
                l[i * n + a.indices[p] as usize] += a.data[p];
            }
        }
        for j in 0..n {
            let mut d = l[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            let d = d.max(T::min_positive_value()).sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = l[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        DenseCholesky { n, l }
    }

    fn solve(&self, b: &[T], x: &mut [T]) {
        let n = self.n;
        x.copy_from_slice(b);
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[i * n + k] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
    }
}
