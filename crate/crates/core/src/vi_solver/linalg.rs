//! Compressed sparse row matrices, deterministic parallel vector kernels
//! and the Krylov solvers (preconditioned MINRES, CG) used by the solver.
//!
//! Reductions split vectors into fixed-size chunks and combine the chunk
//! sums in order, so results do not depend on the number of threads.

use rayon::prelude::*;
use sprs::TriMat;

use crate::real::{dot, Real};

const CHUNK: usize = 4096;

#[derive(Debug, Clone)]
pub(crate) struct Csr<T> {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<u32>,
    pub data: Vec<T>,
}

impl<T: Real> Csr<T> {
    /// Builds from triplets; duplicate entries are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, rows: &[usize], cols: &[usize], vals: &[T]) -> Self {
        let mut tri = TriMat::with_capacity((nrows, ncols), vals.len());
        for ((r, c), v) in rows.iter().zip(cols).zip(vals) {
            tri.add_triplet(*r, *c, *v);
        }
        Self::from_sprs(tri.to_csr())
    }

    fn from_sprs(m: sprs::CsMat<T>) -> Self {
        let (nrows, ncols) = m.shape();
        let m = if m.is_csr() { m } else { m.to_csr() };
        let (indptr, indices, data) = m.into_raw_storage();
        Csr {
            nrows,
            ncols,
            indptr,
            indices: indices.into_iter().map(|i| i as u32).collect(),
            data,
        }
    }

    pub fn transpose(&self) -> Self {
        let m = sprs::CsMat::new(
            (self.nrows, self.ncols),
            self.indptr.clone(),
            self.indices.iter().map(|i| *i as usize).collect(),
            self.data.clone(),
        );
        Self::from_sprs(m.transpose_view().to_csr())
    }

    #[inline]
    fn row_dot(&self, r: usize, x: &[T]) -> T {
        let mut s = T::zero();
        for p in self.indptr[r]..self.indptr[r + 1] {
            s += self.data[p] * x[self.indices[p] as usize];
        }
        s
    }

    /// `y = M x`
    pub fn mul(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.ncols);
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(b, ys)| {
            let r0 = b * CHUNK;
            for (o, yr) in ys.iter_mut().enumerate() {
                *yr = self.row_dot(r0 + o, x);
            }
        });
    }

    /// `y += alpha M x`
    pub fn mul_add(&self, alpha: T, x: &[T], y: &mut [T]) {
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(b, ys)| {
            let r0 = b * CHUNK;
            for (o, yr) in ys.iter_mut().enumerate() {
                *yr += alpha * self.row_dot(r0 + o, x);
            }
        });
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows)
            .map(|r| {
                (self.indptr[r]..self.indptr[r + 1])
                    .find(|p| self.indices[*p] as usize == r)
                    .map_or(T::zero(), |p| self.data[p])
            })
            .collect()
    }

    /// Dense matrix, for tests on small problems.
    #[cfg(test)]
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.ncols]; self.nrows];
        for r in 0..self.nrows {
            for p in self.indptr[r]..self.indptr[r + 1] {
                d[r][self.indices[p] as usize] += self.data[p];
            }
        }
        d
    }
}

pub(crate) fn pdot<T: Real>(a: &[T], b: &[T]) -> T {
    let parts: Vec<T> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| dot(x, y))
        .collect();
    parts.into_iter().fold(T::zero(), |s, x| s + x)
}

pub(crate) fn pnorm<T: Real>(a: &[T]) -> T {
    pdot(a, a).sqrt()
}

/// `y = a x + b y`
pub(crate) fn paxpby<T: Real>(a: T, x: &[T], b: T, y: &mut [T]) {
    y.par_chunks_mut(CHUNK)
        .zip(x.par_chunks(CHUNK))
        .for_each(|(ys, xs)| {
            for (yi, xi) in ys.iter_mut().zip(xs) {
                *yi = a * *xi + b * *yi;
            }
        });
}

/// A symmetric linear operator acting on vectors of length `dim`.
pub(crate) trait LinOp<T> {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);
}

impl<T: Real> LinOp<T> for Csr<T> {
    fn dim(&self) -> usize {
        self.nrows
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        self.mul(x, y);
    }
}

/// A symmetric positive definite preconditioner `z = M⁻¹ r`.
pub(crate) trait Precond<T> {
    fn apply(&self, r: &[T], z: &mut [T]);
}

/// Diagonal preconditioner holding the inverse diagonal.
pub(crate) struct Diag<T>(pub Vec<T>);

impl<T: Real> Precond<T> for Diag<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        z.par_iter_mut()
            .zip(r.par_iter().zip(self.0.par_iter()))
            .for_each(|(zi, (ri, mi))| *zi = *ri * *mi);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct KrylovStats<T> {
    pub iterations: usize,
    /// Final residual estimate in the preconditioner norm.
    pub residual: T,
    /// Residual of the initial guess in the same norm.
    pub initial: T,
    pub converged: bool,
}

/// Preconditioned MINRES (Paige and Saunders) for symmetric, possibly
/// indefinite or singular-consistent systems with an SPD preconditioner.
/// Stops when the preconditioned residual falls
/// below `max(atol, rtol r0)`. `x` is the initial guess on entry.
pub(crate) fn minres<T: Real, A: LinOp<T>, P: Precond<T> + ?Sized>(
    a: &A,
    minv: &P,
    b: &[T],
    x: &mut [T],
    atol: T,
    rtol: T,
    max_iter: usize,
) -> KrylovStats<T> {
    let n = a.dim();
    let mut r1 = vec![T::zero(); n];
    a.apply(x, &mut r1);
    paxpby(T::one(), b, -T::one(), &mut r1);
    let mut y = vec![T::zero(); n];
    minv.apply(&r1, &mut y);
    let beta1 = pdot(&r1, &y).max(T::zero()).sqrt();
    let atol = atol.max(rtol * beta1);
    if beta1 <= atol {
        return KrylovStats {
            iterations: 0,
            residual: beta1,
            initial: beta1,
            converged: true,
        };
    }
    let mut r2 = r1.clone();
    let mut v = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let mut w1 = vec![T::zero(); n];
    let mut w2 = vec![T::zero(); n];
    let (mut oldb, mut beta, mut dbar, mut epsln) = (T::zero(), beta1, T::zero(), T::zero());
    let (mut phibar, mut cs, mut sn) = (beta1, -T::one(), T::zero());
    let tiny = T::epsilon();
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let s = T::one() / beta;
        v.par_iter_mut().zip(y.par_iter()).for_each(|(vi, yi)| *vi = s * *yi);
        a.apply(&v, &mut y);
        if it >= 2 {
            paxpby(-(beta / oldb), &r1, T::one(), &mut y);
        }
        let alfa = pdot(&v, &y);
        paxpby(-(alfa / beta), &r2, T::one(), &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        minv.apply(&r2, &mut y);
        oldb = beta;
        beta = pdot(&r2, &y).max(T::zero()).sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(tiny);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar = sn * phibar;
        let denom = T::one() / gamma;
        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        // w = (v - oldeps w1 - delta w2) / gamma
        w.par_chunks_mut(CHUNK)
            .zip(v.par_chunks(CHUNK))
            .zip(w1.par_chunks(CHUNK).zip(w2.par_chunks(CHUNK)))
            .zip(x.par_chunks_mut(CHUNK))
            .for_each(|(((ws, vs), (w1s, w2s)), xs)| {
                for q in 0..ws.len() {
                    ws[q] = (vs[q] - oldeps * w1s[q] - delta * w2s[q]) * denom;
                    xs[q] += phi * ws[q];
                }
            });
        if phibar <= atol || beta <= tiny * beta1 {
            return KrylovStats {
                iterations: it,
                residual: phibar,
                initial: beta1,
                converged: true,
            };
        }
    }
    KrylovStats {
        iterations: it,
        residual: phibar,
        initial: beta1,
        converged: phibar <= atol,
    }
}

/// Preconditioned conjugate gradients for a symmetric positive
/// semidefinite operator with a consistent right-hand side.
pub(crate) fn cg<T: Real, A: LinOp<T>, P: Precond<T> + ?Sized>(
    a: &A,
    minv: &P,
    b: &[T],
    x: &mut [T],
    atol: T,
    max_iter: usize,
) -> KrylovStats<T> {
    let n = a.dim();
    let mut r = vec![T::zero(); n];
    a.apply(x, &mut r);
    paxpby(T::one(), b, -T::one(), &mut r);
    let mut z = vec![T::zero(); n];
    minv.apply(&r, &mut z);
    let mut p = z.clone();
    let mut q = vec![T::zero(); n];
    let mut rz = pdot(&r, &z);
    let mut res = pnorm(&r);
    let initial = res;
    let mut it = 0;
    while res > atol && it < max_iter {
        it += 1;
        a.apply(&p, &mut q);
        let pq = pdot(&p, &q);
        if !(pq > T::zero()) {
            break;
        }
        let alpha = rz / pq;
        paxpby(alpha, &p, T::one(), x);
        paxpby(-alpha, &q, T::one(), &mut r);
        res = pnorm(&r);
        minv.apply(&r, &mut z);
        let rz_new = pdot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        paxpby(T::one(), &z, beta, &mut p);
    }
    KrylovStats {
        iterations: it,
        residual: res,
        initial,
        converged: res <= atol,
    }
}
