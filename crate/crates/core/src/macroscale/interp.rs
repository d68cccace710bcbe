//! Evaluation of a sampled permeability between its rays.
//!
//! A force `xi` inside the cone spanned by adjacent directions `d_a`,
//! `d_b` is written `xi = alpha d_a + beta d_b` with `alpha, beta >= 0`.
//! With `s = alpha + beta` and `R_d` the piecewise linear profile along
//! ray `d`,
//! `K(xi) = (alpha/s) R_a(s) + (beta/s) R_b(s)`,
//! which reproduces the knots and every linear map exactly.

use crate::cell_problems::PermeabilityTable;
use crate::error::{Error, Result};
use crate::real::Real;

/// Result of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluated<T> {
    pub k: [T; 2],
    /// The magnitude exceeded the largest usable sample on some ray.
    pub clamped: bool,
}

#[derive(Debug, Clone)]
struct Ray<T> {
    dir: [T; 2],
    angle: T,
    /// `(magnitude, K)` knots, starting at the origin.
    knots: Vec<(T, [T; 2])>,
    threshold: Option<T>,
}

impl<T: Real> Ray<T> {
    fn raw(&self, s: T) -> ([T; 2], bool) {
        let last = self.knots[self.knots.len() - 1];
        if s >= last.0 {
            return (last.1, s > last.0 * (T::one() + T::lit(64.0) * T::epsilon()));
        }
        let i = self.knots.partition_point(|(t, _)| *t <= s);
        let (t0, k0) = self.knots[i - 1];
        let (t1, k1) = self.knots[i];
        let w = (s - t0) / (t1 - t0);
        ([k0[0] + w * (k1[0] - k0[0]), k0[1] + w * (k1[1] - k0[1])], false)
    }

    fn eval(&self, s: T, eta: T) -> ([T; 2], bool) {
        if let Some(t) = self.threshold {
            if s <= t {
                return ([T::zero(); 2], false);
            }
            if eta > T::zero() && s < t + eta {
                let (k, c) = self.raw(t + eta);
                let w = (s - t) / eta;
                return ([w * k[0], w * k[1]], c);
            }
        }
        self.raw(s)
    }
}

/// Precomputed rays of a table, sorted by angle.
#[derive(Debug, Clone)]
pub struct Interpolator<T> {
    rays: Vec<Ray<T>>,
    /// Width of the ramp above each threshold.
    pub eta: T,
}

impl<T: Real> Interpolator<T> {
    /// `eta = None` selects 2% of the largest tabulated magnitude.
    pub fn new(table: &PermeabilityTable<T>, eta: Option<T>) -> Result<Self> {
        if table.directions.is_empty() || table.magnitudes.is_empty() {
            return Err(Error::EmptyTable);
        }
        let eta = eta.unwrap_or(T::lit(0.02) * table.max_magnitude());
        let mut rays = Vec::with_capacity(table.directions.len());
        for (d, dir) in table.directions.iter().enumerate() {
            let threshold = table.thresholds.get(d).copied().flatten().map(|t| t.estimate());
            let mut knots = vec![(T::zero(), [T::zero(); 2])];
            if let Some(t) = threshold {
                if t > T::zero() {
                    knots.push((t, [T::zero(); 2]));
                }
            }
            let floor = threshold.unwrap_or(T::zero());
            for e in table.ray(d).iter().filter(|e| e.is_valid() && e.magnitude > floor) {
                knots.push((e.magnitude, e.k));
            }
            rays.push(Ray {
                dir: *dir,
                angle: dir[1].atan2(dir[0]),
                knots,
                threshold,
            });
        }
        rays.sort_by(|a, b| a.angle.partial_cmp(&b.angle).expect("finite angles"));
        Ok(Interpolator { rays, eta })
    }

    pub fn eval(&self, xi: [T; 2]) -> Evaluated<T> {
        let s = xi[0].hypot(xi[1]);
        if s == T::zero() {
            return Evaluated {
                k: [T::zero(); 2],
                clamped: false,
            };
        }
        if let Some((a, b, alpha, beta)) = self.cone(xi) {
            let sum = alpha + beta;
            let (ka, ca) = self.rays[a].eval(sum, self.eta);
            let (kb, cb) = self.rays[b].eval(sum, self.eta);
            let wa = alpha / sum;
            let wb = beta / sum;
            return Evaluated {
                k: [wa * ka[0] + wb * kb[0], wa * ka[1] + wb * kb[1]],
                clamped: ca || cb,
            };
        }
        // fewer than three rays: nearest direction, scaled by the projection
        let (ray, p) = self
            .rays
            .iter()
            .map(|r| (r, r.dir[0] * xi[0] + r.dir[1] * xi[1]))
            .fold(None, |best: Option<(&Ray<T>, T)>, (r, p)| match best {
                Some((_, bp)) if bp >= p => best,
                _ => Some((r, p)),
            })
            .expect("nonempty");
        if p <= T::zero() {
            return Evaluated {
                k: [T::zero(); 2],
                clamped: false,
            };
        }
        let (k, clamped) = ray.eval(p, self.eta);
        Evaluated { k, clamped }
    }

    /// Adjacent rays whose cone (opening below pi) contains `xi`, with the
    /// conic coefficients.
    fn cone(&self, xi: [T; 2]) -> Option<(usize, usize, T, T)> {
        let n = self.rays.len();
        if n < 3 {
            return None;
        }
        let th = xi[1].atan2(xi[0]);
        let b = self.rays.partition_point(|r| r.angle <= th) % n;
        let a = (b + n - 1) % n;
        let (da, db) = (self.rays[a].dir, self.rays[b].dir);
        let det = da[0] * db[1] - da[1] * db[0];
        if !(det > T::zero()) {
            return None;
        }
        let alpha = (xi[0] * db[1] - xi[1] * db[0]) / det;
        let beta = (da[0] * xi[1] - da[1] * xi[0]) / det;
        let tol = -T::epsilon() * T::lit(16.0) * xi[0].hypot(xi[1]);
        if alpha < tol || beta < tol {
            return None;
        }
        Some((a, b, alpha.max(T::zero()), beta.max(T::zero())))
    }
}

/// One-shot evaluation of `K(xi)`; see [`Interpolator`].
pub fn eval_permeability<T: Real>(table: &PermeabilityTable<T>, xi: [T; 2], eta: Option<T>) -> Result<Evaluated<T>> {
    Ok(Interpolator::new(table, eta)?.eval(xi))
}
