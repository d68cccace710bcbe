//! Thin porous medium geometry: the unit cell `Y = Y' x (0,1)` with a
//! cylindrical obstacle, its periodic replication over `omega`, and the
//! integer cell index map.

use crate::error::{invalid, Error, Result};
use crate::real::Real;

/// Ratio `a_eps / eps` in the limit. Selects which limit problem applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda<T> {
    Finite(T),
    Zero,
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    /// `a_eps ~ eps`, `lambda` finite and positive.
    Critical,
    /// `a_eps << eps`.
    Subcritical,
    /// `a_eps >> eps`.
    Supercritical,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Critical => "critical",
            Regime::Subcritical => "subcritical",
            Regime::Supercritical => "supercritical",
        }
    }
}

/// Geometric and rheological description of one thin porous medium.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumSpec<T> {
    /// Side lengths `(L1, L2)` of the rectangle `omega`.
    pub omega_extent: [T; 2],
    pub epsilon: T,
    pub a_eps: T,
    pub lambda: Lambda<T>,
    /// Radius of the centered disk `Y'_s`. Zero means an obstacle-free cell.
    pub obstacle_radius: T,
    pub mu: T,
    /// Unscaled yield coefficient `g`.
    pub g: T,
    pub regime: Regime,
}

impl<T: Real> MediumSpec<T> {
    pub fn validate(&self) -> Result<()> {
        for (i, l) in self.omega_extent.iter().enumerate() {
            if !(*l > T::zero()) || !l.is_finite() {
                return Err(invalid(&format!("omega_extent[{i}]"), "must be a positive length"));
            }
        }
        if !(self.epsilon > T::zero() && self.epsilon < T::one()) {
            return Err(invalid("epsilon", "must lie in (0, 1)"));
        }
        if !(self.a_eps > T::zero() && self.a_eps < T::one()) {
            return Err(invalid("a_eps", "must lie in (0, 1)"));
        }
        let half = T::lit(0.5);
        if !(self.obstacle_radius >= T::zero() && self.obstacle_radius < half) {
            return Err(invalid("obstacle_radius", "must lie in [0, 1/2)"));
        }
        if !(self.mu > T::zero()) || !self.mu.is_finite() {
            return Err(invalid("mu", "viscosity must be positive"));
        }
        if !(self.g >= T::zero()) || !self.g.is_finite() {
            return Err(invalid("g", "yield coefficient must be nonnegative"));
        }
        let consistent = matches!(
            (self.regime, self.lambda),
            (Regime::Critical, Lambda::Finite(_))
                | (Regime::Subcritical, Lambda::Zero)
                | (Regime::Supercritical, Lambda::Infinity)
        );
        if !consistent {
            return Err(invalid("lambda", "inconsistent with regime"));
        }
        if let Lambda::Finite(l) = self.lambda {
            if !(l > T::zero()) || !l.is_finite() {
                return Err(invalid("lambda", "finite lambda must be positive"));
            }
        }
        Ok(())
    }

    /// Effective yield stress `g(eps)`: `g a_eps` unless supercritical, then `g eps`.
    pub fn scaled_yield(&self) -> T {
        match self.regime {
            Regime::Critical | Regime::Subcritical => self.g * self.a_eps,
            Regime::Supercritical => self.g * self.epsilon,
        }
    }

    /// Velocity scale `s` of the a-priori estimates and of the limit rescaling.
    pub fn velocity_scale(&self) -> T {
        match self.regime {
            Regime::Critical | Regime::Subcritical => self.a_eps,
            Regime::Supercritical => self.epsilon,
        }
    }

    /// Number of macro cells along each side of `omega`.
    pub fn macro_cells(&self) -> Result<[usize; 2]> {
        let mut m = [0usize; 2];
        for (i, l) in self.omega_extent.iter().enumerate() {
            let ratio = (*l / self.a_eps).as_f64();
            let r = ratio.round();
            if r < 1.0 || (ratio - r).abs() > 1e-9 * ratio.max(1.0) {
                return Err(Error::NonIntegralTiling {
                    extent: l.as_f64(),
                    period: self.a_eps.as_f64(),
                });
            }
            m[i] = r as usize;
        }
        Ok(m)
    }
}

/// Cell index `k'` with `x' in a k' + a [-1/2, 1/2]^2`. Seams round half up.
pub fn kappa<T: Real>(x_prime: [T; 2], a_eps: T) -> [i64; 2] {
    let half = T::lit(0.5);
    let f = |x: T| (x / a_eps + half).floor().to_i64().unwrap_or(i64::MAX);
    [f(x_prime[0]), f(x_prime[1])]
}

/// Boundary treatment along one grid axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisBc {
    Periodic,
    /// Homogeneous Dirichlet walls at both ends of the axis.
    Wall,
}

/// Uniform structured grid with a z-invariant solid mask.
///
/// Cells are indexed `(i, j, k)` with linear index `i + nx (j + ny k)`.
/// Velocity component `c` is stored at the low face of every cell along
/// axis `c`; on wall axes face `0` is the wall and the far wall face is
/// implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredGrid<T> {
    pub dims: [usize; 3],
    /// Measure spacing along each axis (horizontal physical or cell
    /// coordinate, vertical in the rescaled coordinate `y3`).
    pub spacing: [T; 3],
    pub bc: [AxisBc; 3],
    /// Coordinates of the low corner of the grid.
    pub origin: [T; 3],
    /// Solid flag per vertical column, `i + nx j`.
    pub solid_columns: Vec<bool>,
}

impl<T: Real> StructuredGrid<T> {
    #[inline]
    pub fn cell_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn lin(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn unlin(&self, c: usize) -> (usize, usize, usize) {
        let i = c % self.dims[0];
        let r = c / self.dims[0];
        (i, r % self.dims[1], r / self.dims[1])
    }

    #[inline]
    pub fn is_solid(&self, c: usize) -> bool {
        self.solid_columns[c % (self.dims[0] * self.dims[1])]
    }

    #[inline]
    pub fn cell_volume(&self) -> T {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    /// Coordinates of a cell center.
    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> [T; 3] {
        let half = T::lit(0.5);
        let idx = [i, j, k];
        let mut x = [T::zero(); 3];
        for a in 0..3 {
            x[a] = self.origin[a] + (T::from_usize_lossy(idx[a]) + half) * self.spacing[a];
        }
        x
    }

    /// Coordinates of the storage location of velocity component `comp` at cell `(i,j,k)`.
    pub fn face_center(&self, comp: usize, i: usize, j: usize, k: usize) -> [T; 3] {
        let mut x = self.cell_center(i, j, k);
        x[comp] -= T::lit(0.5) * self.spacing[comp];
        x
    }

    /// Fraction of the horizontal cross-section occupied by fluid.
    pub fn fluid_area_fraction(&self) -> T {
        let cols = self.dims[0] * self.dims[1];
        let fluid = self.solid_columns.iter().filter(|s| !**s).count();
        T::from_usize_lossy(fluid) / T::from_usize_lossy(cols)
    }

    /// Whether velocity component `comp` at storage cell `c` is forced to zero.
    pub fn is_constrained(&self, comp: usize, c: usize) -> bool {
        let (i, j, k) = self.unlin(c);
        let idx = [i, j, k];
        let n = self.dims[comp];
        if self.bc[comp] == AxisBc::Wall && idx[comp] == 0 {
            return true;
        }
        if self.is_solid(c) {
            return true;
        }
        // the other cell sharing this face
        let mut other = idx;
        other[comp] = if idx[comp] == 0 { n - 1 } else { idx[comp] - 1 };
        self.is_solid(self.lin(other[0], other[1], other[2]))
    }

    /// Plain-text 0/1 raster of the column mask, rows in increasing `j`.
    pub fn mask_raster(&self) -> String {
        let mut s = String::with_capacity(self.solid_columns.len() * 2);
        for j in 0..self.dims[1] {
            for i in 0..self.dims[0] {
                s.push(if self.solid_columns[i + self.dims[0] * j] { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }
}

fn disk_mask<T: Real>(n: usize, radius: T) -> Vec<bool> {
    let h = T::one() / T::from_usize_lossy(n);
    let half = T::lit(0.5);
    let r2 = radius * radius;
    let mut mask = vec![false; n * n];
    for j in 0..n {
        let y = -half + (T::from_usize_lossy(j) + half) * h;
        for i in 0..n {
            let x = -half + (T::from_usize_lossy(i) + half) * h;
            mask[i + n * j] = x * x + y * y < r2;
        }
    }
    mask
}

fn check_resolution<T: Real>(n: usize, radius: T) -> Result<()> {
    if n < 8 {
        return Err(invalid("resolution", "n must be at least 8"));
    }
    if radius > T::zero() && (T::lit(2.0) * radius * T::from_usize_lossy(n)) < T::lit(4.0) {
        return Err(Error::UnresolvedObstacle {
            n,
            radius: radius.as_f64(),
        });
    }
    Ok(())
}

/// Discretized unit cell `Y = [-1/2,1/2]^2 x (0,1)`, periodic in `y'`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid<T> {
    pub resolution: usize,
    pub obstacle_radius: T,
    pub grid: StructuredGrid<T>,
}

impl<T: Real> CellGrid<T> {
    /// `|Y'_f|` of the discrete mask.
    pub fn fluid_area(&self) -> T {
        self.grid.fluid_area_fraction()
    }

    /// Whether the cell is the 2-D section `Y'` (one periodic layer in `y3`).
    pub fn is_planar(&self) -> bool {
        self.grid.dims[2] == 1
    }

    /// Same cross-section, collapsed to one periodic layer of unit height.
    pub fn to_planar(&self) -> CellGrid<T> {
        let mut grid = self.grid.clone();
        grid.dims[2] = 1;
        grid.spacing[2] = T::one();
        grid.bc[2] = AxisBc::Periodic;
        CellGrid {
            resolution: self.resolution,
            obstacle_radius: self.obstacle_radius,
            grid,
        }
    }
}

/// Builds the 3-D unit cell with `n` cells per unit length along each axis.
pub fn build_cell<T: Real>(spec: &MediumSpec<T>, n: usize) -> Result<CellGrid<T>> {
    spec.validate()?;
    build_cell_with_radius(spec.obstacle_radius, n)
}

pub fn build_cell_with_radius<T: Real>(radius: T, n: usize) -> Result<CellGrid<T>> {
    check_resolution(n, radius)?;
    let h = T::one() / T::from_usize_lossy(n);
    let half = T::lit(0.5);
    Ok(CellGrid {
        resolution: n,
        obstacle_radius: radius,
        grid: StructuredGrid {
            dims: [n, n, n],
            spacing: [h, h, h],
            bc: [AxisBc::Periodic, AxisBc::Periodic, AxisBc::Wall],
            origin: [-half, -half, T::zero()],
            solid_columns: disk_mask(n, radius),
        },
    })
}

/// Discretized `Omega~_eps = omega_eps x (0,1)`: `M1 x M2` copies of the cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinGrid<T> {
    pub macro_cells: [usize; 2],
    pub resolution: usize,
    pub a_eps: T,
    pub grid: StructuredGrid<T>,
}

impl<T: Real> ThinGrid<T> {
    /// Macro cell containing `x'`; `omega = [0,L1] x [0,L2]` with cell centers at `a (k' + 1/2)`.
    pub fn macro_index(&self, x_prime: [T; 2]) -> [i64; 2] {
        let half_a = T::lit(0.5) * self.a_eps;
        kappa([x_prime[0] - half_a, x_prime[1] - half_a], self.a_eps)
    }

    /// Center of macro cell `k'`.
    pub fn macro_center(&self, k: [usize; 2]) -> [T; 2] {
        let half = T::lit(0.5);
        [
            (T::from_usize_lossy(k[0]) + half) * self.a_eps,
            (T::from_usize_lossy(k[1]) + half) * self.a_eps,
        ]
    }

    /// Total number of fluid cells.
    pub fn fluid_cells(&self) -> usize {
        (0..self.grid.cell_count()).filter(|c| !self.grid.is_solid(*c)).count()
    }
}

/// Replicates the `n`-resolution cell mask over `omega`.
pub fn build_thin_medium<T: Real>(spec: &MediumSpec<T>, n: usize) -> Result<ThinGrid<T>> {
    spec.validate()?;
    let m = spec.macro_cells()?;
    let cell = build_cell_with_radius(spec.obstacle_radius, n)?;
    let nx = m[0] * n;
    let ny = m[1] * n;
    let mut solid = vec![false; nx * ny];
    for jj in 0..ny {
        for ii in 0..nx {
            solid[ii + nx * jj] = cell.grid.solid_columns[(ii % n) + n * (jj % n)];
        }
    }
    let h = spec.a_eps / T::from_usize_lossy(n);
    Ok(ThinGrid {
        macro_cells: m,
        resolution: n,
        a_eps: spec.a_eps,
        grid: StructuredGrid {
            dims: [nx, ny, n],
            spacing: [h, h, T::one() / T::from_usize_lossy(n)],
            bc: [AxisBc::Wall, AxisBc::Wall, AxisBc::Wall],
            origin: [T::zero(), T::zero(), T::zero()],
            solid_columns: solid,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn spec(l: [f64; 2], a: f64, r: f64) -> MediumSpec<f64> {
        MediumSpec {
            omega_extent: l,
            epsilon: a,
            a_eps: a,
            lambda: Lambda::Finite(1.0),
            obstacle_radius: r,
            mu: 1.0,
            g: 1.0,
            regime: Regime::Critical,
        }
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa([0.1, 0.1], 0.25), [0, 0]);
        assert_eq!(kappa([0.3, 0.0], 0.25), [1, 0]);
        assert_eq!(kappa([-0.3, 0.3], 0.25), [-1, 1]);
        // seam rounds half up
        assert_eq!(kappa([0.125, -0.125], 0.25), [1, 0]);
    }

    #[test]
    fn cell_fluid_area() {
        let pi = std::f64::consts::PI;
        let c = build_cell_with_radius(0.25, 128).unwrap();
        assert!((c.fluid_area() - (1.0 - pi * 0.0625)).abs() < 2.0 / 128.0);
        let c = build_cell_with_radius(0.0, 32).unwrap();
        assert_eq!(c.fluid_area(), 1.0);
        let c = build_cell_with_radius(0.49, 256).unwrap();
        assert!((c.fluid_area() - (1.0 - pi * 0.49 * 0.49)).abs() < 2.0 / 256.0);
    }

    #[test]
    fn cell_rejects_small_resolution() {
        assert!(build_cell_with_radius(0.25, 4).is_err());
        assert!(matches!(
            build_cell_with_radius(0.05, 16),
            Err(Error::UnresolvedObstacle { .. })
        ));
    }

    #[test]
    fn mask_error_ratio_default_radius() {
        let pi = std::f64::consts::PI;
        let exact = 1.0 - pi * 0.0625;
        let errs: Vec<f64> = [32, 64, 128, 256]
            .iter()
            .map(|n| (build_cell_with_radius(0.25, *n).unwrap().fluid_area() - exact).abs())
            .collect();
        for (e, n) in errs.iter().zip([32.0, 64.0, 128.0, 256.0]) {
            assert!(*e <= 1.0 / n);
        }
        for w in errs.windows(2) {
            assert!(w[1] / w[0] <= 0.75, "{errs:?}");
        }
    }

    #[test]
    fn thin_tiling() {
        let t = build_thin_medium(&spec([1.0, 1.0], 0.25, 0.25), 8).unwrap();
        assert_eq!(t.macro_cells, [4, 4]);
        let t = build_thin_medium(&spec([2.0, 1.0], 0.125, 0.25), 32).unwrap();
        assert_eq!(t.macro_cells, [16, 8]);
        let e = build_thin_medium(&spec([1.0, 1.0], 0.3, 0.25), 8).unwrap_err();
        assert!(matches!(e, Error::NonIntegralTiling { .. }));
    }

    #[test]
    fn thin_mask_is_translated_cell_mask() {
        let s = spec([1.0, 0.5], 0.25, 0.3);
        let cell = build_cell(&s, 16).unwrap();
        let thin = build_thin_medium(&s, 16).unwrap();
        let n = 16;
        let nx = thin.grid.dims[0];
        for m1 in 0..4 {
            for m2 in 0..2 {
                for j in 0..n {
                    for i in 0..n {
                        assert_eq!(
                            thin.grid.solid_columns[(m1 * n + i) + nx * (m2 * n + j)],
                            cell.grid.solid_columns[i + n * j]
                        );
                    }
                }
            }
        }
        let per_cell = (0..cell.grid.cell_count()).filter(|c| !cell.grid.is_solid(*c)).count();
        assert_eq!(thin.fluid_cells(), 8 * per_cell);
    }

    #[test]
    fn macro_index_partitions_omega() {
        let s = spec([1.0, 0.75], 0.25, 0.25);
        let thin = build_thin_medium(&s, 8).unwrap();
        let mut counts = vec![0usize; 12];
        // probe points avoid the seams at multiples of 0.25
        for pj in 0..30 {
            for pi in 0..40 {
                let x = [(pi as f64 + 0.37) / 40.0, 0.75 * (pj as f64 + 0.41) / 30.0];
                let k = thin.macro_index(x);
                assert!(k[0] >= 0 && k[0] < 4 && k[1] >= 0 && k[1] < 3);
                let c = thin.macro_center([k[0] as usize, k[1] as usize]);
                assert!((x[0] - c[0]).abs() <= 0.125 && (x[1] - c[1]).abs() <= 0.125);
                counts[k[0] as usize + 4 * k[1] as usize] += 1;
            }
        }
        assert!(counts.iter().all(|c| *c > 0));
    }

    #[test]
    fn constrained_faces() {
        let c = build_cell_with_radius(0.25, 16).unwrap();
        let g = &c.grid;
        for cell in 0..g.cell_count() {
            let (_, _, k) = g.unlin(cell);
            // vertical velocity on the bottom wall
            if k == 0 {
                assert!(g.is_constrained(2, cell));
            }
            if g.is_solid(cell) {
                for comp in 0..3 {
                    assert!(g.is_constrained(comp, cell));
                }
            }
        }
        // tangential components at the bottom layer are free away from the obstacle
        assert!(!g.is_constrained(0, g.lin(0, 0, 0)));
    }

    #[test]
    fn spec_validation() {
        let mut s = spec([1.0, 1.0], 0.25, 0.5);
        assert!(s.validate().is_err());
        s.obstacle_radius = 0.25;
        assert!(s.validate().is_ok());
        s.regime = Regime::Subcritical;
        assert!(s.validate().is_err());
        s.lambda = Lambda::Zero;
        assert!(s.validate().is_ok());
        assert_eq!(s.scaled_yield(), 0.25);
        s.regime = Regime::Supercritical;
        s.lambda = Lambda::Infinity;
        s.epsilon = 0.125;
        assert_eq!(s.scaled_yield(), 0.125);
    }
}
