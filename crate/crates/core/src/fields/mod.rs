//! Discrete fields on the staggered grid and the operators acting on them.
//!
//! Velocities live on cell faces, pressures at cell centers. Strain tensors
//! are stored per octant: each cell is split into eight sub-cells, and the
//! tensor of a sub-cell combines the cell's diagonal strains with the
//! off-diagonal strains of the three edges touching that corner. Midpoint
//! quadrature over these sub-cells defines every integral of the solver.

mod dump;
pub(crate) mod stencil;

pub use dump::{read_dump, write_dump};

use crate::error::{Error, Result};
use crate::geometry::{StructuredGrid, ThinGrid};
use crate::real::Real;
use stencil::{apply, Layout};

/// Vertical coordinate convention of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// `x3 in (0, eps)`.
    Physical,
    /// `y3 = x3 / eps in (0, 1)`.
    Rescaled,
}

impl Frame {
    fn name(self) -> &'static str {
        match self {
            Frame::Physical => "physical",
            Frame::Rescaled => "rescaled",
        }
    }
}

fn expect_frame(found: Frame, expected: Frame) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::FrameMismatch {
            expected: expected.name(),
            found: found.name(),
        })
    }
}

fn expect_dims(found: [usize; 3], expected: [usize; 3]) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Face-centered velocity. Component `c` at linear cell index `i` lives on
/// the low face of cell `i` normal to axis `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredField<T> {
    pub dims: [usize; 3],
    pub frame: Frame,
    pub comps: [Vec<T>; 3],
}

impl<T: Real> StaggeredField<T> {
    pub fn zeros(dims: [usize; 3]) -> Self {
        let n = dims[0] * dims[1] * dims[2];
        StaggeredField {
            dims,
            frame: Frame::Rescaled,
            comps: [vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]],
        }
    }

    /// Samples `f` at the storage points of `grid`; constrained values are zeroed.
    pub fn from_fn(grid: &StructuredGrid<T>, f: impl Fn([T; 3]) -> [T; 3]) -> Self {
        let mut v = Self::zeros(grid.dims);
        for c in 0..grid.cell_count() {
            let (i, j, k) = grid.unlin(c);
            for comp in 0..3 {
                v.comps[comp][c] = f(grid.face_center(comp, i, j, k))[comp];
            }
        }
        v.project_constraints(grid);
        v
    }

    /// Like [`from_fn`](Self::from_fn) but keeps values on constrained faces.
    pub fn sample_unconstrained(grid: &StructuredGrid<T>, f: impl Fn([T; 3]) -> [T; 3]) -> Self {
        let mut v = Self::zeros(grid.dims);
        for c in 0..grid.cell_count() {
            let (i, j, k) = grid.unlin(c);
            for comp in 0..3 {
                v.comps[comp][c] = f(grid.face_center(comp, i, j, k))[comp];
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.comps[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Zeroes every degree of freedom on a wall or touching the solid.
    pub fn project_constraints(&mut self, grid: &StructuredGrid<T>) {
        for comp in 0..3 {
            for c in 0..grid.cell_count() {
                if grid.is_constrained(comp, c) {
                    self.comps[comp][c] = T::zero();
                }
            }
        }
    }

    pub fn satisfies_constraints(&self, grid: &StructuredGrid<T>) -> bool {
        (0..3).all(|comp| {
            (0..grid.cell_count())
                .all(|c| !grid.is_constrained(comp, c) || self.comps[comp][c] == T::zero())
        })
    }

    pub fn scale(&mut self, alpha: T) {
        for comp in self.comps.iter_mut() {
            for x in comp.iter_mut() {
                *x *= alpha;
            }
        }
    }

    pub fn max_abs(&self) -> T {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(T::zero(), |m, x| m.max(x.abs()))
    }
}

/// Cell-centered scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    pub dims: [usize; 3],
    pub frame: Frame,
    /// Set when the field has been normalized to zero mean over fluid cells.
    pub mean_zero: bool,
    pub values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn zeros(dims: [usize; 3]) -> Self {
        ScalarField {
            dims,
            frame: Frame::Rescaled,
            mean_zero: false,
            values: vec![T::zero(); dims[0] * dims[1] * dims[2]],
        }
    }

    /// Mean over fluid cells.
    pub fn fluid_mean(&self, grid: &StructuredGrid<T>) -> T {
        let mut s = T::zero();
        let mut n = 0usize;
        for (c, v) in self.values.iter().enumerate() {
            if !grid.is_solid(c) {
                s += *v;
                n += 1;
            }
        }
        if n == 0 {
            T::zero()
        } else {
            s / T::from_usize_lossy(n)
        }
    }

    /// Subtracts the fluid mean and zeroes solid cells.
    pub fn normalize_mean(&mut self, grid: &StructuredGrid<T>) {
        let m = self.fluid_mean(grid);
        for (c, v) in self.values.iter_mut().enumerate() {
            *v = if grid.is_solid(c) { T::zero() } else { *v - m };
        }
        self.mean_zero = true;
    }
}

/// Symmetric tensor per octant, components `[xx, yy, zz, xy, xz, yz]`.
/// Octant `o = ox + 2 oy + 4 oz` of cell `c` is entry `8 c + o`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField<T> {
    pub dims: [usize; 3],
    pub octants: Vec<[T; 6]>,
}

impl<T: Real> TensorField<T> {
    pub fn zeros(dims: [usize; 3]) -> Self {
        TensorField {
            dims,
            octants: vec![[T::zero(); 6]; 8 * dims[0] * dims[1] * dims[2]],
        }
    }

    /// Full symmetric matrix of octant `o` of cell `c`.
    pub fn matrix(&self, c: usize, o: usize) -> [[T; 3]; 3] {
        to_matrix(&self.octants[8 * c + o])
    }

    /// Average over the eight octants of cell `c`.
    pub fn cell_mean(&self, c: usize) -> [[T; 3]; 3] {
        let mut s = [T::zero(); 6];
        for t in &self.octants[8 * c..8 * c + 8] {
            for q in 0..6 {
                s[q] += t[q];
            }
        }
        let eighth = T::lit(0.125);
        to_matrix(&s.map(|x| x * eighth))
    }

    /// Largest octant norm within cell `c`.
    pub fn cell_max_norm(&self, c: usize) -> T {
        self.octants[8 * c..8 * c + 8]
            .iter()
            .fold(T::zero(), |m, t| m.max(tensor_norm(t)))
    }
}

fn to_matrix<T: Real>(t: &[T; 6]) -> [[T; 3]; 3] {
    [[t[0], t[3], t[4]], [t[3], t[1], t[5]], [t[4], t[5], t[2]]]
}

/// Frobenius norm of a symmetric tensor stored as `[xx, yy, zz, xy, xz, yz]`.
#[inline]
pub fn tensor_norm<T: Real>(t: &[T; 6]) -> T {
    tensor_norm_sq(t).sqrt()
}

#[inline]
pub(crate) fn tensor_norm_sq<T: Real>(t: &[T; 6]) -> T {
    let two = T::lit(2.0);
    t[0] * t[0] + t[1] * t[1] + t[2] * t[2] + two * (t[3] * t[3] + t[4] * t[4] + t[5] * t[5])
}

/// Values of the strain rows (diagonal entries first, then edges).
pub(crate) fn strain_rows<T: Real>(lay: &Layout<T>, v: &[Vec<T>; 3]) -> Vec<T> {
    let mut rows = vec![T::zero(); lay.strain_rows()];
    let half = T::lit(0.5);
    lay.for_each_diagonal(|c, d, taps| rows[3 * c + d] = apply(taps, v));
    lay.for_each_edge(|_, _, row, ta, tb| rows[row] = half * (apply(ta, v) + apply(tb, v)));
    rows
}

/// Gathers strain rows into octant tensors.
pub(crate) fn octants_from_rows<T: Real>(lay: &Layout<T>, rows: &[T]) -> Vec<[T; 6]> {
    let mut out = vec![[T::zero(); 6]; 8 * lay.cells()];
    for k in 0..lay.ax[2].n {
        for j in 0..lay.ax[1].n {
            for i in 0..lay.ax[0].n {
                let c = lay.lin(i, j, k);
                for (o, r) in lay.octant_rows(i, j, k).iter().enumerate() {
                    out[8 * c + o] = r.map(|ri| rows[ri]);
                }
            }
        }
    }
    out
}

fn layout_for<T: Real>(grid: &StructuredGrid<T>, v: &StaggeredField<T>, epsilon: T) -> Result<Layout<T>> {
    expect_frame(v.frame, Frame::Rescaled)?;
    expect_dims(v.dims, grid.dims)?;
    if !(epsilon > T::zero()) || !epsilon.is_finite() {
        return Err(crate::error::invalid("epsilon", "must be positive"));
    }
    Ok(Layout::new(grid, T::one() / epsilon))
}

/// Scaled symmetric gradient: horizontal derivatives plain, vertical ones times `1/epsilon`.
pub fn sym_gradient_eps<T: Real>(
    grid: &StructuredGrid<T>,
    v: &StaggeredField<T>,
    epsilon: T,
) -> Result<TensorField<T>> {
    let lay = layout_for(grid, v, epsilon)?;
    let rows = strain_rows(&lay, &v.comps);
    Ok(TensorField {
        dims: grid.dims,
        octants: octants_from_rows(&lay, &rows),
    })
}

/// Scaled divergence `div_x' v' + (1/epsilon) d_y3 v_3` at cell centers.
pub fn divergence_eps<T: Real>(
    grid: &StructuredGrid<T>,
    v: &StaggeredField<T>,
    epsilon: T,
) -> Result<ScalarField<T>> {
    let lay = layout_for(grid, v, epsilon)?;
    let mut out = ScalarField::zeros(grid.dims);
    lay.for_each_divergence(|c, taps| out.values[c] = apply(taps, &v.comps));
    Ok(out)
}

/// Scaled gradient of a cell-centered scalar onto faces, the negative
/// adjoint of [`divergence_eps`]. Wall faces receive zero.
pub fn gradient_eps<T: Real>(
    grid: &StructuredGrid<T>,
    q: &ScalarField<T>,
    epsilon: T,
) -> Result<StaggeredField<T>> {
    expect_dims(q.dims, grid.dims)?;
    let lay = Layout::new(grid, T::one() / epsilon);
    let mut g = StaggeredField::zeros(grid.dims);
    lay.for_each_divergence(|c, taps| {
        for t in taps {
            g.comps[t.comp][t.cell] -= t.coef * q.values[c];
        }
    });
    Ok(g)
}

/// Maps a physical-frame field to the rescaled frame. On a shared grid the
/// values are unchanged and only the frame tag flips.
pub fn dilate<T: Real>(u: &StaggeredField<T>, _epsilon: T) -> Result<StaggeredField<T>> {
    expect_frame(u.frame, Frame::Physical)?;
    let mut out = u.clone();
    out.frame = Frame::Rescaled;
    Ok(out)
}

/// Inverse of [`dilate`].
pub fn undilate<T: Real>(u: &StaggeredField<T>, _epsilon: T) -> Result<StaggeredField<T>> {
    expect_frame(u.frame, Frame::Rescaled)?;
    let mut out = u.clone();
    out.frame = Frame::Physical;
    Ok(out)
}

/// A field on the thin domain unfolded onto `omega x Y`: one micro field per
/// macro cell, constant in `x'` across the macro cell.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedField<T> {
    pub macro_cells: [usize; 2],
    /// Micro grid dimensions `(n, n, nz)`.
    pub micro_dims: [usize; 3],
    pub a_eps: T,
    /// `slices[m1 + M1 m2]` holds the micro field of macro cell `(m1, m2)`.
    pub slices: Vec<StaggeredField<T>>,
}

impl<T: Real> UnfoldedField<T> {
    pub fn slice(&self, m: [usize; 2]) -> &StaggeredField<T> {
        &self.slices[m[0] + self.macro_cells[0] * m[1]]
    }

    /// `L^2(omega x Y)` norm with midpoint quadrature.
    pub fn l2_norm(&self) -> T {
        let [n1, n2, n3] = self.micro_dims;
        let w = self.a_eps * self.a_eps / T::from_usize_lossy(n1 * n2 * n3);
        let mut s = T::zero();
        for sl in &self.slices {
            for comp in &sl.comps {
                for x in comp {
                    s += *x * *x;
                }
            }
        }
        (s * w).sqrt()
    }

    /// Average over the macro cells (the estimate of the limit micro field).
    pub fn macro_average(&self) -> StaggeredField<T> {
        let mut out = StaggeredField::zeros(self.micro_dims);
        let inv = T::one() / T::from_usize_lossy(self.slices.len().max(1));
        for sl in &self.slices {
            for comp in 0..3 {
                for (o, x) in out.comps[comp].iter_mut().zip(&sl.comps[comp]) {
                    *o += *x * inv;
                }
            }
        }
        out
    }
}

/// Unfolds a rescaled thin-domain field: macro cell `k'` contributes its
/// micro values at `y' = (x' - a k')/a`, relabeled into cell layout.
pub fn unfold<T: Real>(thin: &ThinGrid<T>, v: &StaggeredField<T>, a_eps: T) -> Result<UnfoldedField<T>> {
    expect_frame(v.frame, Frame::Rescaled)?;
    expect_dims(v.dims, thin.grid.dims)?;
    let rel = ((a_eps - thin.a_eps) / thin.a_eps).abs();
    if rel > T::lit(1e-12) {
        return Err(Error::NonIntegralTiling {
            extent: (thin.a_eps * T::from_usize_lossy(thin.macro_cells[0])).as_f64(),
            period: a_eps.as_f64(),
        });
    }
    let n = thin.resolution;
    let nz = thin.grid.dims[2];
    let [m1, m2] = thin.macro_cells;
    let mut slices = Vec::with_capacity(m1 * m2);
    for b in 0..m2 {
        for a in 0..m1 {
            let mut s = StaggeredField::zeros([n, n, nz]);
            for k in 0..nz {
                for j in 0..n {
                    for i in 0..n {
                        let src = thin.grid.lin(a * n + i, b * n + j, k);
                        let dst = i + n * (j + n * k);
                        for comp in 0..3 {
                            s.comps[comp][dst] = v.comps[comp][src];
                        }
                    }
                }
            }
            slices.push(s);
        }
    }
    Ok(UnfoldedField {
        macro_cells: thin.macro_cells,
        micro_dims: [n, n, nz],
        a_eps,
        slices,
    })
}

/// Quantities bounded by the a-priori estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms<T> {
    /// `||v||_{L^2}`
    pub l2: T,
    /// `||D_eps[v]||_{L^2}` of the symmetric scaled gradient.
    pub sym_grad: T,
    /// `||D_eps v||_{L^2}` of the full scaled gradient.
    pub grad: T,
    /// `int |D_eps[v]|`
    pub sym_grad_l1: T,
}

/// Midpoint-quadrature norms of a rescaled field.
pub fn norms<T: Real>(grid: &StructuredGrid<T>, v: &StaggeredField<T>, epsilon: T) -> Result<Norms<T>> {
    let lay = layout_for(grid, v, epsilon)?;
    let vol = grid.cell_volume();
    let mut l2 = T::zero();
    for comp in &v.comps {
        for x in comp {
            l2 += *x * *x;
        }
    }
    let rows = strain_rows(&lay, &v.comps);
    let oct = octants_from_rows(&lay, &rows);
    let eighth = T::lit(0.125);
    let mut sq = T::zero();
    let mut l1 = T::zero();
    for t in &oct {
        let n2 = tensor_norm_sq(t);
        sq += n2;
        l1 += n2.sqrt();
    }
    // full gradient: diagonal terms at centers, each one-sided derivative
    // on its edge with weight adj/4
    let mut g2 = T::zero();
    lay.for_each_diagonal(|_, _, taps| {
        let d = apply(taps, &v.comps);
        g2 += d * d;
    });
    let half = T::lit(0.5);
    lay.for_each_edge(|e, node, _, ta, tb| {
        let w = lay.edge_weight(e, node) * half;
        let da = apply(ta, &v.comps);
        let db = apply(tb, &v.comps);
        g2 += w * (da * da + db * db);
    });
    Ok(Norms {
        l2: (l2 * vol).sqrt(),
        sym_grad: (sq * eighth * vol).sqrt(),
        grad: (g2 * vol).sqrt(),
        sym_grad_l1: l1 * eighth * vol,
    })
}

/// `L^2` norm of a rescaled field over the grid (midpoint quadrature).
pub fn l2_norm<T: Real>(grid: &StructuredGrid<T>, v: &StaggeredField<T>) -> T {
    let mut s = T::zero();
    for comp in &v.comps {
        for x in comp {
            s += *x * *x;
        }
    }
    (s * grid.cell_volume()).sqrt()
}

#[cfg(test)]
mod tests;
