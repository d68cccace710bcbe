//! Index arithmetic of the staggered grid and row enumeration of the
//! discrete strain, gradient and divergence operators.
//!
//! Strain rows are the diagonal entries at cell centers (three per cell)
//! followed by the off-diagonal entries at cell edges: `xy` on z-edges,
//! `xz` on y-edges and `yz` on x-edges. Along a periodic axis of length
//! `n` there are `n` edge nodes, along a wall axis `n + 1`.

use crate::geometry::{AxisBc, StructuredGrid};
use crate::real::Real;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Axis {
    pub n: usize,
    pub periodic: bool,
}

impl Axis {
    #[inline]
    pub fn nodes(&self) -> usize {
        if self.periodic {
            self.n
        } else {
            self.n + 1
        }
    }

    /// Cell center `c` in `-1..=n`. Wall ghosts are odd reflections.
    #[inline]
    pub fn center(&self, c: isize) -> (usize, i8) {
        let n = self.n as isize;
        if self.periodic {
            (c.rem_euclid(n) as usize, 1)
        } else if c < 0 {
            (0, -1)
        } else if c >= n {
            (self.n - 1, -1)
        } else {
            (c as usize, 1)
        }
    }

    /// Face `f` in `0..=n`; wall faces carry sign 0.
    #[inline]
    pub fn face(&self, f: usize) -> (usize, i8) {
        if self.periodic {
            (f % self.n, 1)
        } else if f == 0 || f >= self.n {
            (0, 0)
        } else {
            (f, 1)
        }
    }

    /// Number of cells adjacent to an edge node along this axis.
    #[inline]
    pub fn adjacency(&self, node: usize) -> usize {
        if self.periodic || (node > 0 && node < self.n) {
            2
        } else {
            1
        }
    }

    /// Edge node of cell `i` on its low (`o = 0`) or high (`o = 1`) side.
    #[inline]
    pub fn node_of(&self, i: usize, o: usize) -> usize {
        if self.periodic {
            (i + o) % self.n
        } else {
            i + o
        }
    }
}

/// One stencil entry: velocity component, storage cell and coefficient.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Tap<T> {
    pub comp: usize,
    pub cell: usize,
    pub coef: T,
}

/// Geometry of the operators: axes, spacings and the vertical scale `s_z`.
#[derive(Debug, Clone)]
pub(crate) struct Layout<T> {
    pub ax: [Axis; 3],
    pub h: [T; 3],
    /// Multiplier of every vertical derivative (`1/eps` or `lambda`).
    pub sz: T,
    edims: [[usize; 3]; 3],
    eoff: [usize; 4],
}

impl<T: Real> Layout<T> {
    pub fn new(grid: &StructuredGrid<T>, sz: T) -> Self {
        let ax = [0, 1, 2].map(|a| Axis {
            n: grid.dims[a],
            periodic: grid.bc[a] == AxisBc::Periodic,
        });
        let [x, y, z] = ax;
        let edims = [
            [x.nodes(), y.nodes(), z.n],
            [x.nodes(), y.n, z.nodes()],
            [x.n, y.nodes(), z.nodes()],
        ];
        let mut eoff = [3 * x.n * y.n * z.n; 4];
        for e in 0..3 {
            eoff[e + 1] = eoff[e] + edims[e][0] * edims[e][1] * edims[e][2];
        }
        Layout { ax, h: grid.spacing, sz, edims, eoff }
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.ax[0].n * self.ax[1].n * self.ax[2].n
    }

    #[inline]
    pub fn lin(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.ax[0].n * (j + self.ax[1].n * k)
    }

    /// Derivative scale along axis `a`: `1/h` horizontally, `s_z/h` vertically.
    #[inline]
    pub fn dscale(&self, a: usize) -> T {
        let s = T::one() / self.h[a];
        if a == 2 {
            s * self.sz
        } else {
            s
        }
    }

    /// Edge node counts `(n0, n1, n2)` of the edge family `e`
    /// (`0` = xy on z-edges, `1` = xz on y-edges, `2` = yz on x-edges).
    #[inline]
    pub fn edge_dims(&self, e: usize) -> [usize; 3] {
        self.edims[e]
    }

    #[inline]
    pub fn edge_offset(&self, e: usize) -> usize {
        self.eoff[e]
    }

    pub fn strain_rows(&self) -> usize {
        self.edge_offset(3)
    }

    /// Row index of edge `(p, q, r)` of family `e`.
    #[inline]
    pub fn edge_row(&self, e: usize, p: usize, q: usize, r: usize) -> usize {
        let d = self.edims[e];
        self.eoff[e] + p + d[0] * (q + d[1] * r)
    }

    /// Axis pair `(a, b)` of edge family `e`, with `a < b`.
    #[inline]
    pub fn edge_axes(e: usize) -> (usize, usize) {
        match e {
            0 => (0, 1),
            1 => (0, 2),
            _ => (1, 2),
        }
    }

    /// Calls `f(cell, d, taps)` for each diagonal strain `d_dd` at each cell.
    pub fn for_each_diagonal(&self, mut f: impl FnMut(usize, usize, &[Tap<T>])) {
        let mut buf: Vec<Tap<T>> = Vec::with_capacity(2);
        for k in 0..self.ax[2].n {
            for j in 0..self.ax[1].n {
                for i in 0..self.ax[0].n {
                    let c = self.lin(i, j, k);
                    let idx = [i, j, k];
                    for d in 0..3 {
                        buf.clear();
                        let s = self.dscale(d);
                        let (hi, sh) = self.ax[d].face(idx[d] + 1);
                        let (lo, sl) = self.ax[d].face(idx[d]);
                        let mut at = idx;
                        at[d] = hi;
                        push(&mut buf, d, self.lin(at[0], at[1], at[2]), s, sh);
                        at[d] = lo;
                        push(&mut buf, d, self.lin(at[0], at[1], at[2]), -s, sl);
                        f(c, d, &buf);
                    }
                }
            }
        }
    }

    /// Calls `f(e, node, row, d_a u_b taps, d_b u_a taps)` for every edge of
    /// every family, where `(a, b)` are the family's axes. `node` holds the
    /// node indices along the three axes (cell index along the edge axis).
    pub fn for_each_edge(&self, mut f: impl FnMut(usize, [usize; 3], usize, &[Tap<T>], &[Tap<T>])) {
        let mut ta: Vec<Tap<T>> = Vec::with_capacity(2);
        let mut tb: Vec<Tap<T>> = Vec::with_capacity(2);
        for e in 0..3 {
            let (a, b) = Self::edge_axes(e);
            let dims = self.edge_dims(e);
            let sa = self.dscale(a);
            let sb = self.dscale(b);
            for r in 0..dims[2] {
                for q in 0..dims[1] {
                    for p in 0..dims[0] {
                        let node = [p, q, r];
                        let row = self.edge_row(e, p, q, r);
                        ta.clear();
                        tb.clear();
                        // d_a u_b: component b sits on face node[b] along b,
                        // cell centers node[a] and node[a]-1 along a
                        {
                            let (fb, sf) = self.ax[b].face(node[b]);
                            let (c1, s1) = self.ax[a].center(node[a] as isize);
                            let (c0, s0) = self.ax[a].center(node[a] as isize - 1);
                            let mut at = node;
                            at[b] = fb;
                            at[a] = c1;
                            push(&mut ta, b, self.lin(at[0], at[1], at[2]), sa, sf * s1);
                            at[a] = c0;
                            push(&mut ta, b, self.lin(at[0], at[1], at[2]), -sa, sf * s0);
                        }
                        {
                            let (fa, sf) = self.ax[a].face(node[a]);
                            let (c1, s1) = self.ax[b].center(node[b] as isize);
                            let (c0, s0) = self.ax[b].center(node[b] as isize - 1);
                            let mut at = node;
                            at[a] = fa;
                            at[b] = c1;
                            push(&mut tb, a, self.lin(at[0], at[1], at[2]), sb, sf * s1);
                            at[b] = c0;
                            push(&mut tb, a, self.lin(at[0], at[1], at[2]), -sb, sf * s0);
                        }
                        f(e, node, row, &ta, &tb);
                    }
                }
            }
        }
    }

    /// Quadrature weight (relative to the cell volume) of an off-diagonal
    /// strain row: the row enters two octants of every adjacent cell, each
    /// with weight 1/8 and the factor 2 of the symmetric pair.
    #[inline]
    pub fn edge_weight(&self, e: usize, node: [usize; 3]) -> T {
        let (a, b) = Self::edge_axes(e);
        let adj = self.ax[a].adjacency(node[a]) * self.ax[b].adjacency(node[b]);
        T::from_usize_lossy(adj) * T::lit(0.5)
    }

    /// Calls `f(cell, taps)` with the divergence stencil of each cell.
    pub fn for_each_divergence(&self, mut f: impl FnMut(usize, &[Tap<T>])) {
        let mut buf: Vec<Tap<T>> = Vec::with_capacity(6);
        for k in 0..self.ax[2].n {
            for j in 0..self.ax[1].n {
                for i in 0..self.ax[0].n {
                    let idx = [i, j, k];
                    buf.clear();
                    for d in 0..3 {
                        let s = self.dscale(d);
                        let (hi, sh) = self.ax[d].face(idx[d] + 1);
                        let (lo, sl) = self.ax[d].face(idx[d]);
                        let mut at = idx;
                        at[d] = hi;
                        push(&mut buf, d, self.lin(at[0], at[1], at[2]), s, sh);
                        at[d] = lo;
                        push(&mut buf, d, self.lin(at[0], at[1], at[2]), -s, sl);
                    }
                    f(self.lin(i, j, k), &buf);
                }
            }
        }
    }

    /// Strain rows of the eight octants of cell `(i, j, k)`, ordered
    /// `ox + 2 oy + 4 oz`, as `[xx, yy, zz, xy, xz, yz]` row indices.
    pub fn octant_rows(&self, i: usize, j: usize, k: usize) -> [[usize; 6]; 8] {
        let c = self.lin(i, j, k);
        let [x, y, z] = self.ax;
        let mut out = [[0usize; 6]; 8];
        for (o, rows) in out.iter_mut().enumerate() {
            let (ox, oy, oz) = (o & 1, (o >> 1) & 1, (o >> 2) & 1);
            let (ni, nj, nk) = (x.node_of(i, ox), y.node_of(j, oy), z.node_of(k, oz));
            *rows = [
                3 * c,
                3 * c + 1,
                3 * c + 2,
                self.edge_row(0, ni, nj, k),
                self.edge_row(1, ni, j, nk),
                self.edge_row(2, i, nj, nk),
            ];
        }
        out
    }
}

#[inline]
fn push<T: Real>(buf: &mut Vec<Tap<T>>, comp: usize, cell: usize, coef: T, sign: i8) {
    match sign {
        0 => {}
        1 => buf.push(Tap { comp, cell, coef }),
        _ => buf.push(Tap { comp, cell, coef: -coef }),
    }
}

/// Applies a tap list to a component-major field.
#[inline]
pub(crate) fn apply<T: Real>(taps: &[Tap<T>], comps: &[Vec<T>; 3]) -> T {
    taps.iter()
        .fold(T::zero(), |s, t| s + t.coef * comps[t.comp][t.cell])
}
