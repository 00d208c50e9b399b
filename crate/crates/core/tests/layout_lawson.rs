use hypercircle::energy::Problem;
use hypercircle::examples;
use hypercircle::layout::*;
use hypercircle::optimizer::{solve, SolveOptions};

#[test]
fn lawson_layout_is_consistent() {
    let d = examples::lawson_squares();
    let p = Problem::new(&d.complex, &d.theta, &d.cone).unwrap();
    let res = solve(&p, &SolveOptions::default()).unwrap();
    let m = DecoratedMetric::from_solution(&p, &res.x_star).unwrap();
    let c = p.complex();
    let lay = develop(c, &m, &LayoutOptions::default()).unwrap();
    assert!(lay.edge_residual(c, &m) < 1e-9);
    for (v, s) in lay.corner_angle_sums(c).iter().enumerate() {
        assert!((s - d.cone[v]).abs() < 1e-8, "vertex {v}: {s}");
        assert!(holonomy(c, &m, v).distance(&Isometry::IDENTITY) < 1e-8);
    }
    let gens = fuchsian_generators(&lay).unwrap();
    for g in &gens {
        assert!(g.residual < 1e-8);
        // Hyperbolic elements: |trace| > 2, determinant 1.
        assert!(g.isometry.trace().abs() > 2.0);
        let mat = g.matrix();
        assert!((mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0] - 1.0).abs() < 1e-9);
    }
    let tiles = tile(&gens, 2);
    assert!(tiles.len() > 2 * gens.len());
    assert_eq!(overlap_count(&lay.triangles(), &tiles), 0);
    let circ = circles(&lay, &m, c, &p.tri.face_parent).unwrap();
    assert!(circ.orthogonality_residual < 1e-9);
    assert!(circ.redundant_residual < 1e-9);
}
