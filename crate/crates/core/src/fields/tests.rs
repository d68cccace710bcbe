use super::*;
use crate::geometry::{build_cell_with_radius, build_thin_medium, AxisBc, Lambda, MediumSpec, Regime};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn box_grid(n: usize, bc: AxisBc) -> StructuredGrid<f64> {
    let h = 1.0 / n as f64;
    StructuredGrid {
        dims: [n, n, n],
        spacing: [h, h, h],
        bc: [bc, bc, AxisBc::Wall],
        origin: [0.0; 3],
        solid_columns: vec![false; n * n],
    }
}

fn thin_spec(l: f64, a: f64, r: f64) -> MediumSpec<f64> {
    MediumSpec {
        omega_extent: [l, l],
        epsilon: a,
        a_eps: a,
        lambda: Lambda::Finite(1.0),
        obstacle_radius: r,
        mu: 1.0,
        g: 0.0,
        regime: Regime::Critical,
    }
}

fn random_field(grid: &StructuredGrid<f64>, seed: u64) -> StaggeredField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = StaggeredField::zeros(grid.dims);
    for comp in v.comps.iter_mut() {
        for x in comp.iter_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
    }
    v.project_constraints(grid);
    v
}

fn interior(grid: &StructuredGrid<f64>, c: usize) -> bool {
    let (i, j, k) = grid.unlin(c);
    let n = grid.dims;
    i >= 1 && j >= 1 && k >= 1 && i + 2 < n[0] && j + 2 < n[1] && k + 2 < n[2]
}

#[test]
fn sym_gradient_of_vertical_shear() {
    let g = box_grid(8, AxisBc::Wall);
    let v = StaggeredField::sample_unconstrained(&g, |x| [x[2], 0.0, 0.0]);
    let t = sym_gradient_eps(&g, &v, 0.1).unwrap();
    for c in 0..g.cell_count() {
        if !interior(&g, c) {
            continue;
        }
        let m = t.cell_mean(c);
        for a in 0..3 {
            for b in 0..3 {
                let want = if (a, b) == (0, 2) || (a, b) == (2, 0) { 5.0 } else { 0.0 };
                assert!((m[a][b] - want).abs() < 1e-12, "{a}{b}: {}", m[a][b]);
            }
        }
    }
}

#[test]
fn sym_gradient_of_stretch_and_zero() {
    let g = box_grid(8, AxisBc::Wall);
    let v = StaggeredField::sample_unconstrained(&g, |x| [x[0], 0.0, 0.0]);
    let t = sym_gradient_eps(&g, &v, 0.37).unwrap();
    for c in (0..g.cell_count()).filter(|c| interior(&g, *c)) {
        for o in 0..8 {
            let m = t.matrix(c, o);
            for a in 0..3 {
                for b in 0..3 {
                    let want = if a == 0 && b == 0 { 1.0 } else { 0.0 };
                    assert!((m[a][b] - want).abs() < 1e-12);
                    assert_eq!(m[a][b], m[b][a]);
                }
            }
        }
    }
    let z = sym_gradient_eps(&g, &StaggeredField::zeros(g.dims), 0.5).unwrap();
    assert!(z.octants.iter().all(|t| t.iter().all(|x| *x == 0.0)));
}

#[test]
fn divergence_examples() {
    let g = box_grid(8, AxisBc::Wall);
    let eps = 0.2;
    let v = StaggeredField::sample_unconstrained(&g, |x| [x[0], 0.0, -eps * x[2]]);
    let d = divergence_eps(&g, &v, eps).unwrap();
    let v2 = StaggeredField::sample_unconstrained(&g, |x| [x[0], x[1], 0.0]);
    let d2 = divergence_eps(&g, &v2, eps).unwrap();
    let v3 = StaggeredField::sample_unconstrained(&g, |x| [0.0, 0.0, x[2]]);
    let d3 = divergence_eps(&g, &v3, 0.5).unwrap();
    for c in (0..g.cell_count()).filter(|c| interior(&g, *c)) {
        assert!(d.values[c].abs() < 1e-12);
        assert!((d2.values[c] - 2.0).abs() < 1e-12);
        assert!((d3.values[c] - 2.0).abs() < 1e-12);
    }
}

#[test]
fn frame_mismatch_is_rejected() {
    let g = box_grid(8, AxisBc::Periodic);
    let mut v = StaggeredField::<f64>::zeros(g.dims);
    v.frame = Frame::Physical;
    assert!(matches!(sym_gradient_eps(&g, &v, 0.5), Err(Error::FrameMismatch { .. })));
    assert!(matches!(divergence_eps(&g, &v, 0.5), Err(Error::FrameMismatch { .. })));
    assert!(dilate(&v, 0.5).is_ok());
    assert!(undilate(&v, 0.5).is_err());
}

#[test]
fn dilate_relabels() {
    let g = box_grid(8, AxisBc::Periodic);
    let eps = 0.25;
    // physical storage heights are eps times the rescaled ones
    let mut u = StaggeredField::sample_unconstrained(&g, |y| [1.5, -2.0, eps * y[2]]);
    u.frame = Frame::Physical;
    let w = dilate(&u, eps).unwrap();
    assert_eq!(w.frame, Frame::Rescaled);
    for c in 0..g.cell_count() {
        let (i, j, k) = g.unlin(c);
        let y3 = g.face_center(2, i, j, k)[2];
        assert_eq!(w.comps[0][c], 1.5);
        assert_eq!(w.comps[2][c], eps * y3);
    }
    assert_eq!(undilate(&w, eps).unwrap(), u);
}

#[test]
fn norms_of_poiseuille_profile() {
    let mut prev = f64::INFINITY;
    for n in [16, 32, 64] {
        let cell = build_cell_with_radius(0.0f64, n).unwrap();
        let v = StaggeredField::from_fn(&cell.grid, |y| [y[2] * (1.0 - y[2]), 0.0, 0.0]);
        let nm = norms(&cell.grid, &v, 1.0).unwrap();
        let err = (nm.l2 * nm.l2 - 1.0 / 30.0).abs();
        assert!(err < 0.1 / (n * n) as f64, "n={n} err={err}");
        assert!(err < prev / 3.0);
        prev = err;
        // |D[v]| = |w'|/sqrt2 and |D v| = |w'| for a pure shear
        let want_grad = (1.0f64 / 3.0).sqrt();
        assert!((nm.grad - want_grad).abs() < 2.0 / n as f64);
        assert!((nm.sym_grad - want_grad / 2f64.sqrt()).abs() < 2.0 / n as f64);
        assert!((nm.sym_grad_l1 - 0.5 / 2f64.sqrt()).abs() < 2.0 / n as f64);
    }
    let cell = build_cell_with_radius(0.25, 16).unwrap();
    let zero = norms(&cell.grid, &StaggeredField::zeros(cell.grid.dims), 0.3).unwrap();
    assert_eq!(zero, Norms { l2: 0.0, sym_grad: 0.0, grad: 0.0, sym_grad_l1: 0.0 });
}

#[test]
fn unfold_constant_and_local_fields() {
    let s = thin_spec(1.0, 0.25, 0.25);
    let thin = build_thin_medium(&s, 8).unwrap();
    let g = &thin.grid;
    let mut v = StaggeredField::<f64>::zeros(g.dims);
    for comp in v.comps.iter_mut() {
        comp.iter_mut().for_each(|x| *x = 3.5);
    }
    let u = unfold(&thin, &v, 0.25).unwrap();
    assert_eq!(u.slices.len(), 16);
    assert!(u.slices.iter().all(|s| s.comps.iter().all(|c| c.iter().all(|x| *x == 3.5))));

    for c in 0..g.cell_count() {
        let (i, _, _) = g.unlin(c);
        v.comps[0][c] = (i / 8) as f64;
    }
    let u = unfold(&thin, &v, 0.25).unwrap();
    for m2 in 0..4 {
        for m1 in 0..4 {
            assert!(u.slice([m1, m2]).comps[0].iter().all(|x| *x == m1 as f64));
        }
    }
    assert!(unfold(&thin, &v, 0.3).is_err());
}

#[test]
fn dump_round_trip() {
    let g = box_grid(8, AxisBc::Periodic);
    let v = random_field(&g, 7);
    let mut buf = Vec::new();
    write_dump(&mut buf, g.dims, &v.comps[0]).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("dims 8 8 8\n"));
    let (dims, vals) = read_dump::<f64, _>(&buf[..]).unwrap();
    assert_eq!(dims, g.dims);
    assert_eq!(vals, v.comps[0]);
}

fn grids() -> Vec<StructuredGrid<f64>> {
    let thin = build_thin_medium(&thin_spec(0.5, 0.25, 0.25), 8).unwrap();
    let cell = build_cell_with_radius(0.3, 8).unwrap();
    vec![thin.grid, cell.grid.clone(), cell.to_planar().grid, box_grid(8, AxisBc::Periodic)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn integration_by_parts(seed in any::<u64>(), which in 0usize..4, eps in 0.05f64..2.0) {
        let g = &grids()[which];
        let v = random_field(g, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut q = ScalarField::zeros(g.dims);
        q.values.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
        let d = divergence_eps(g, &v, eps).unwrap();
        let gq = gradient_eps(g, &q, eps).unwrap();
        let lhs: f64 = d.values.iter().zip(&q.values).map(|(a, b)| a * b).sum();
        let rhs: f64 = (0..3)
            .map(|c| v.comps[c].iter().zip(&gq.comps[c]).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        prop_assert!((lhs + rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn unfolding_is_an_isometry(seed in any::<u64>()) {
        let s = thin_spec(1.0, 0.25, 0.25);
        let thin = build_thin_medium(&s, 8).unwrap();
        let v = random_field(&thin.grid, seed);
        let u = unfold(&thin, &v, 0.25).unwrap();
        let a = u.l2_norm();
        let b = l2_norm(&thin.grid, &v);
        prop_assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn norms_are_homogeneous(seed in any::<u64>(), alpha in -5.0f64..5.0) {
        let g = &grids()[1];
        let v = random_field(g, seed);
        let mut w = v.clone();
        w.scale(alpha);
        let a = norms(g, &v, 0.5).unwrap();
        let b = norms(g, &w, 0.5).unwrap();
        let k = alpha.abs();
        prop_assert!((b.l2 - k * a.l2).abs() <= 1e-12 * (1.0 + b.l2));
        prop_assert!((b.sym_grad - k * a.sym_grad).abs() <= 1e-12 * (1.0 + b.sym_grad));
        prop_assert!((b.grad - k * a.grad).abs() <= 1e-12 * (1.0 + b.grad));
        prop_assert!((b.sym_grad_l1 - k * a.sym_grad_l1).abs() <= 1e-12 * (1.0 + b.sym_grad_l1));
    }

    #[test]
    fn dilate_round_trip(seed in any::<u64>(), eps in 0.01f64..1.0) {
        let g = &grids()[0];
        let mut v = random_field(g, seed);
        v.frame = Frame::Physical;
        let back = undilate(&dilate(&v, eps).unwrap(), eps).unwrap();
        prop_assert_eq!(back, v);
    }

    #[test]
    fn strain_is_symmetric(seed in any::<u64>()) {
        let g = &grids()[1];
        let v = random_field(g, seed);
        let t = sym_gradient_eps(g, &v, 0.7).unwrap();
        for c in 0..g.cell_count() {
            let m = t.cell_mean(c);
            for a in 0..3 {
                for b in 0..3 {
                    prop_assert_eq!(m[a][b], m[b][a]);
                }
            }
        }
    }
}
