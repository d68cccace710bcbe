//! Plane Bingham flow between two walls: the closed form and a direct
//! numerical minimization of the discrete column energy.
//!
//! Both solve
//! `min ∫₀¹ (mu/2)|w'|² + g|w'| - phi w  over  w(0) = w(1) = 0`.

use crate::error::{invalid, Result};
use crate::real::Real;

/// Closed-form plane Bingham (Buckingham–Reiner) profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinghamProfile<T> {
    pub phi: T,
    pub mu: T,
    pub g: T,
}

impl<T: Real> BinghamProfile<T> {
    pub fn new(phi: T, mu: T, g: T) -> Result<Self> {
        if !(mu > T::zero()) || !mu.is_finite() {
            return Err(invalid("mu", "viscosity must be positive"));
        }
        if !(phi >= T::zero()) || !phi.is_finite() {
            return Err(invalid("phi", "forcing magnitude must be nonnegative"));
        }
        if !(g >= T::zero()) || !g.is_finite() {
            return Err(invalid("g", "yield coefficient must be nonnegative"));
        }
        Ok(BinghamProfile { phi, mu, g })
    }

    /// Whether the forcing exceeds the plane threshold `2g`.
    pub fn flows(&self) -> bool {
        self.phi > T::lit(2.0) * self.g
    }

    /// Half-width `g/phi` of the central plug, capped at 1/2 (rigid column).
    pub fn plug_half_width(&self) -> T {
        let half = T::lit(0.5);
        if !self.flows() {
            return half;
        }
        (self.g / self.phi).min(half)
    }

    /// Velocity of the plug, `phi (1 - 2g/phi)² / (8 mu)`.
    pub fn plug_velocity(&self) -> T {
        if !self.flows() {
            return T::zero();
        }
        let s = T::one() - T::lit(2.0) * self.g / self.phi;
        self.phi * s * s / (T::lit(8.0) * self.mu)
    }

    /// `w(y)` for `y` in `[0, 1]`.
    pub fn eval(&self, y: T) -> T {
        if !self.flows() {
            return T::zero();
        }
        let half = T::lit(0.5);
        let y = if y > half { T::one() - y } else { y };
        if y >= half - self.plug_half_width() {
            return self.plug_velocity();
        }
        self.phi / (T::lit(2.0) * self.mu) * y * (T::one() - y) - self.g / self.mu * y
    }

    /// Mean flux `Q = (phi/12mu)(1 - 3s/2 + s³/2)` with `s = 2g/phi`.
    pub fn flux(&self) -> T {
        if !self.flows() {
            return T::zero();
        }
        let s = T::lit(2.0) * self.g / self.phi;
        let half = T::lit(0.5);
        self.phi / (T::lit(12.0) * self.mu) * (T::one() - T::lit(1.5) * s + half * s * s * s)
    }

    /// Values at the nodes `y_i = i/cells`, `i = 0..=cells`.
    pub fn nodal(&self, cells: usize) -> Vec<T> {
        let h = T::one() / T::from_usize_lossy(cells);
        (0..=cells).map(|i| self.eval(T::from_usize_lossy(i) * h)).collect()
    }
}

/// Shorthand for [`BinghamProfile::new`].
pub fn bingham_profile_1d<T: Real>(phi: T, mu: T, g: T) -> Result<BinghamProfile<T>> {
    BinghamProfile::new(phi, mu, g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnConfig<T> {
    /// Number of uniform intervals on `[0, 1]`.
    pub cells: usize,
    /// Bound on the nodal update and on the splitting residual.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for ColumnConfig<T> {
    fn default() -> Self {
        ColumnConfig {
            cells: 1024,
            tol: T::lit(1e-12),
            max_iter: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSolution<T> {
    /// Nodal values including both walls.
    pub w: Vec<T>,
    /// Trapezoidal mean of `w`.
    pub flux: T,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Real> ColumnSolution<T> {
    /// Largest nodal deviation from a reference profile.
    pub fn max_error(&self, reference: &BinghamProfile<T>) -> T {
        let r = reference.nodal(self.w.len() - 1);
        self.w.iter().zip(&r).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }
}

/// Minimizes the P1 discretization of the column energy with an augmented
/// Lagrangian splitting on the interval slopes.
pub fn solve_column_1d<T: Real>(phi: T, mu: T, g: T, config: &ColumnConfig<T>) -> Result<ColumnSolution<T>> {
    BinghamProfile::new(phi, mu, g)?;
    let n = config.cells;
    if n < 2 {
        return Err(invalid("cells", "need at least two intervals"));
    }
    if !(config.tol > T::zero()) {
        return Err(invalid("tol", "must be positive"));
    }
    let h = T::one() / T::from_usize_lossy(n);
    let ni = n - 1;
    if phi == T::zero() {
        return Ok(ColumnSolution {
            w: vec![T::zero(); n + 1],
            flux: T::zero(),
            iterations: 0,
            converged: true,
        });
    }
    let r = mu;
    let thr = g / r;
    // slopes d = G w on the n intervals, interior unknowns w[1..n]
    let mut w = vec![T::zero(); n + 1];
    let mut q = vec![T::zero(); n];
    let mut m = vec![T::zero(); n];
    let mut rhs = vec![T::zero(); ni];
    let mut scratch = vec![T::zero(); ni];
    let diag = T::lit(2.0) * (mu + r) / (h * h);
    let off = -(mu + r) / (h * h);
    let mut converged = false;
    let mut it = 0;
    while it < config.max_iter {
        it += 1;
        // (mu + r) Gᵀ G w = phi + Gᵀ (r q - m)
        for i in 0..ni {
            let s = |k: usize| r * q[k] - m[k];
            rhs[i] = phi + (s(i) - s(i + 1)) / h;
        }
        let old = w.clone();
        thomas(diag, off, &rhs, &mut scratch, &mut w[1..n]);
        let mut dw = T::zero();
        let mut res = T::zero();
        for k in 0..n {
            let d = (w[k + 1] - w[k]) / h;
            let y = d + m[k] / r;
            let qk = y.signum() * (y.abs() - thr).max(T::zero());
            m[k] += r * (d - qk);
            res = res.max((d - qk).abs());
            q[k] = qk;
        }
        for (a, b) in w.iter().zip(&old) {
            dw = dw.max((*a - *b).abs());
        }
        if dw <= config.tol && res * h <= config.tol {
            converged = true;
            break;
        }
    }
    let half = T::lit(0.5);
    let inner: T = w[1..n].iter().copied().sum();
    let flux = h * (inner + half * (w[0] + w[n]));
    Ok(ColumnSolution {
        w,
        flux,
        iterations: it,
        converged,
    })
}

/// Solves the constant-coefficient tridiagonal system `[off, diag, off] x = b`.
fn thomas<T: Real>(diag: T, off: T, b: &[T], c: &mut [T], x: &mut [T]) {
    let n = b.len();
    c[0] = off / diag;
    x[0] = b[0] / diag;
    for i in 1..n {
        let den = diag - off * c[i - 1];
        c[i] = off / den;
        x[i] = (b[i] - off * x[i - 1]) / den;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poiseuille_limit() {
        let p = bingham_profile_1d(1.0f64, 1.0, 0.0).unwrap();
        assert!((p.flux() - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(p.plug_half_width(), 0.0);
        assert!((p.eval(0.5) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn below_threshold_is_rigid() {
        let p = bingham_profile_1d(1.0, 1.0, 0.6).unwrap();
        assert!(!p.flows());
        assert_eq!(p.flux(), 0.0);
        assert!(p.nodal(64).iter().all(|w| *w == 0.0));
    }

    #[test]
    fn reference_case() {
        let p = bingham_profile_1d(4.0f64, 1.0, 1.0).unwrap();
        assert!((p.plug_half_width() - 0.25).abs() < 1e-15);
        assert!((p.plug_velocity() - 0.125).abs() < 1e-15);
        assert!((p.flux() - 0.3125 / 3.0).abs() < 1e-15);
        // profile is continuous at the plug edge
        assert!((p.eval(0.25 - 1e-12) - 0.125).abs() < 1e-11);
    }

    #[test]
    fn flux_is_the_mean_of_the_profile() {
        // composite Simpson on a grid aligned with the plug edges
        for (phi, g) in [(4.0, 1.0), (5.0, 1.25), (3.0, 0.0)] {
            let p = bingham_profile_1d(phi, 2.0, g).unwrap();
            let n = 4000;
            let h = 1.0 / n as f64;
            let mut s = 0.0;
            for i in 0..n / 2 {
                let y = 2.0 * i as f64 * h;
                s += p.eval(y) + 4.0 * p.eval(y + h) + p.eval(y + 2.0 * h);
            }
            assert!((s * h / 3.0 - p.flux()).abs() < 1e-12, "phi {phi} g {g}");
        }
    }

    #[test]
    fn thomas_solves_laplacian() {
        let b = vec![1.0f64; 7];
        let mut c = vec![0.0; 7];
        let mut x = vec![0.0; 7];
        thomas(2.0, -1.0, &b, &mut c, &mut x);
        for i in 0..7 {
            let l = if i > 0 { x[i - 1] } else { 0.0 };
            let r = if i < 6 { x[i + 1] } else { 0.0 };
            assert!((2.0 * x[i] - l - r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn numeric_column_matches_closed_form() {
        let cfg = ColumnConfig { cells: 256, ..Default::default() };
        let s = solve_column_1d(4.0, 1.0, 1.0, &cfg).unwrap();
        assert!(s.converged);
        let p = bingham_profile_1d(4.0f64, 1.0, 1.0).unwrap();
        assert!(s.max_error(&p) < 1e-9, "{}", s.max_error(&p));
    }

    #[test]
    fn numeric_column_has_no_flow_below_threshold() {
        let cfg = ColumnConfig { cells: 128, ..Default::default() };
        let s = solve_column_1d(1.9f64, 1.0, 1.0, &cfg).unwrap();
        assert!(s.converged);
        assert!(s.w.iter().all(|w| w.abs() < 1e-10));
    }
}
