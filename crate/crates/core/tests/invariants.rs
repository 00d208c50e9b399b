use hypercircle::delaunay::{circle_intersection_angle, spherical_delaunay, Circle, SpherePoint};
use hypercircle::energy::Problem;
use hypercircle::examples;
use hypercircle::sphere::double;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_sphere_points(seed: u64, n: usize) -> Vec<SpherePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| loop {
            let p: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            if r > 0.1 && r < 1.0 {
                break [p[0] / r, p[1] / r, p[2] / r];
            }
        })
        .collect()
}

/// Image of a circle avoiding the origin under `z -> 1 / conj(z)`.
fn invert(c: &Circle) -> Circle {
    let k = c.center.norm_sqr() - c.radius * c.radius;
    Circle { center: c.center / k, radius: c.radius / k.abs() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lens_angle_is_mobius_invariant(
        x1 in 2.0..4.0f64, y1 in -1.0..1.0f64, r1 in 0.5..1.5f64,
        dx in -1.0..1.0f64, dy in -1.0..1.0f64, r2 in 0.5..1.5f64,
        scale in 0.2..5.0f64, turn in 0.0..6.28f64, sx in -3.0..3.0f64, sy in -3.0..3.0f64,
    ) {
        let a = Circle { center: Complex64::new(x1, y1), radius: r1 };
        let b = Circle { center: Complex64::new(x1 + dx, y1 + dy), radius: r2 };
        let d = (a.center - b.center).norm();
        prop_assume!(d < r1 + r2 - 1e-3 && d > (r1 - r2).abs() + 1e-3);
        // Origin outside both discs keeps the orientation of each disc.
        prop_assume!(a.center.norm() > r1 + 1e-2 && b.center.norm() > r2 + 1e-2);
        let theta = circle_intersection_angle(&a, &b).unwrap();
        let m = Complex64::from_polar(scale, turn);
        let shift = Complex64::new(sx, sy);
        let sim = |c: &Circle| Circle { center: m * c.center + shift, radius: scale * c.radius };
        prop_assert!((circle_intersection_angle(&sim(&a), &sim(&b)).unwrap() - theta).abs() < 1e-9);
        prop_assert!((circle_intersection_angle(&invert(&a), &invert(&b)).unwrap() - theta).abs() < 1e-9);
    }

    #[test]
    fn doubling_involution_swaps_the_copies(seed in any::<u64>(), n in 6usize..14, pick in any::<usize>()) {
        let pts = random_sphere_points(seed, n);
        let pat = spherical_delaunay(&pts).unwrap();
        let c = pat.complex.with_v1(vec![true; n]);
        let k_inf = pick % n;
        let dd = double(&c, &pat.theta, k_inf).unwrap();
        let inv = &dd.involution;
        prop_assert_eq!(dd.complex.euler_characteristic(), 2);
        for v in 0..dd.complex.n_vertices() {
            prop_assert_eq!(inv.vertices[inv.vertices[v]], v);
            prop_assert_eq!(dd.vertex_origin[inv.vertices[v]], dd.vertex_origin[v]);
            prop_assert_eq!(inv.vertices[v] == v, dd.on_sigma(v));
        }
        for e in 0..dd.complex.n_edges() {
            prop_assert_eq!(inv.edges[inv.edges[e]], e);
            prop_assert_eq!(dd.theta[inv.edges[e]], dd.theta[e]);
            prop_assert_eq!(inv.edges[e] == e, dd.sigma_edges.contains(&e));
        }
        for f in 0..dd.complex.n_faces() {
            prop_assert_eq!(inv.faces[inv.faces[f]], f);
            prop_assert_ne!(dd.face_copy[inv.faces[f]], dd.face_copy[f]);
            prop_assert_eq!(dd.face_origin[inv.faces[f]], dd.face_origin[f]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn energy_hessian_is_symmetric_and_positive(seed in any::<u64>()) {
        let d = examples::lawson_centers();
        let p = Problem::new(&d.complex, &d.theta, &d.cone).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = loop {
            let x: Vec<f64> = (0..p.dim())
                .map(|i| if i < p.layout.n_edges() && !p.layout.edge_is_hyper(i) { rng.gen_range(-1.5..1.5) } else { rng.gen_range(0.1..2.5) })
                .collect();
            if p.feasibility(&x).unwrap().in_te {
                break x;
            }
        };
        let n = x.len();
        let h = 1e-6;
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[j] += h;
                xm[j] -= h;
                let (gp, gm) = (p.gradient(&xp).unwrap(), p.gradient(&xm).unwrap());
                gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
            })
            .collect();
        let scale = cols.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in 0..n {
                prop_assert!((cols[j][i] - cols[i][j]).abs() <= 1e-5 * scale);
            }
        }
        for _ in 0..10 {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let q: f64 = (0..n).map(|j| v[j] * (0..n).map(|i| cols[j][i] * v[i]).sum::<f64>()).sum();
            prop_assert!(q >= -1e-5 * scale * v.iter().map(|t| t * t).sum::<f64>());
        }
    }
}
