use approx::assert_relative_eq;
use relboltz_core::grid::{free_transport, shift_row, velocity, FieldGrid, GridGeometry};
use relboltz_core::MomentumVec;

#[test]
fn geometry_spacing_and_coordinates() {
    let g = GridGeometry::new(5.0, 11, 6.0, 13).unwrap();
    assert_relative_eq!(g.dx(), 1.0);
    assert_relative_eq!(g.dp(), 1.0);
    assert_eq!(g.len(), 11 * 11 * 13 * 13);
    assert_relative_eq!(g.x_coord(0), -5.0);
    assert_relative_eq!(g.p_coord(12), 6.0);
    assert!(GridGeometry::new(5.0, 1, 6.0, 13).is_err());
    assert!(GridGeometry::new(-1.0, 11, 6.0, 13).is_err());
}

#[test]
fn layout_is_momentum_major() {
    let g = GridGeometry::new(1.0, 3, 1.0, 3).unwrap();
    let f = FieldGrid::from_fn(g, |x, p| 100.0 * p[0] + 10.0 * p[1] + x[0] + 0.1 * x[1]);
    let ip = 2 * 3 + 1;
    let row = f.row(ip);
    assert_eq!(row.len(), 9);
    assert_relative_eq!(row[0], 100.0 - 1.0 - 0.1, max_relative = 1e-14);
    assert_relative_eq!(row[5], 100.0 + 0.0 + 0.1, max_relative = 1e-14);
}

#[test]
fn shift_by_whole_cells_is_exact() {
    let n = 5;
    let src: Vec<f64> = (0..n * n).map(|k| k as f64).collect();
    let mut out = vec![0.0; n * n];
    shift_row(&src, n, 0.5, [0.5, -1.0], &mut out);
    for j0 in 0..n {
        for j1 in 0..n {
            let (s0, s1) = (j0 as i64 + 1, j1 as i64 - 2);
            let expect = if s0 < n as i64 && s1 >= 0 { src[(s0 * n as i64 + s1) as usize] } else { 0.0 };
            assert_eq!(out[j0 * n + j1], expect);
        }
    }
}

#[test]
fn shift_reproduces_linear_functions() {
    let n = 9;
    let dx = 0.25;
    let lin = |a: f64, b: f64| 2.0 * a - 3.0 * b;
    let src: Vec<f64> = (0..n * n).map(|k| lin((k / n) as f64 * dx, (k % n) as f64 * dx)).collect();
    let mut out = vec![0.0; n * n];
    let d = [0.13, -0.07];
    shift_row(&src, n, dx, d, &mut out);
    for j0 in 0..n - 1 {
        for j1 in 1..n {
            let expect = lin(j0 as f64 * dx + d[0], j1 as f64 * dx + d[1]);
            assert_relative_eq!(out[j0 * n + j1], expect, epsilon = 1e-12);
        }
    }
    assert_eq!(out[(n - 1) * n + 3], 0.0);
}

#[test]
fn transport_moves_a_bump_by_the_velocity() {
    let g = GridGeometry::new(4.0, 33, 1.0, 3).unwrap();
    let f = FieldGrid::from_fn(g, |x, _| (-(x.norm_sq())).exp());
    let (t, c) = (1.0, 2.0);
    let moved = free_transport(&f, t, c);
    let bilinear_bound = g.dx() * g.dx() / 8.0 * 4.0;
    for ip in 0..g.n_momenta() {
        let v = velocity(&g.momentum(ip), c);
        for ix in 0..g.row_len() {
            let x = g.position(ix);
            let expect = (-((x - v * t).norm_sq())).exp();
            assert!((moved.row(ip)[ix] - expect).abs() <= bilinear_bound, "ip {ip} ix {ix}");
        }
    }
    assert_eq!(velocity(&MomentumVec::new2(3.0, 4.0), f64::INFINITY), MomentumVec::new2(3.0, 4.0));
    assert_relative_eq!(velocity(&MomentumVec::new2(3.0, 4.0), 1.0).norm(), 5.0 / 26f64.sqrt(), max_relative = 1e-14);
}

#[test]
fn field_arithmetic() {
    let g = GridGeometry::new(1.0, 3, 1.0, 3).unwrap();
    let a = FieldGrid::from_fn(g, |x, p| x[0] - p[1]);
    let b = a.scaled(2.0);
    assert_relative_eq!(b.sub(&a).max_abs(), a.max_abs());
    assert_relative_eq!(a.min(), -2.0);
    assert!(FieldGrid::from_values(g, vec![0.0; 3]).is_err());
}
