use std::sync::Arc;

use proptest::prelude::*;

use thermoplan::gridmap::{decode_map, encode_map, Cell, Point, SemanticRegion, WorldMap};
use thermoplan::heatfield::{init_heat, HeatSolver, ScoreField, SourceSpec};
use thermoplan::planner::{interrobot_cost, interrobot_guidance};

fn random_map(w: usize, h: usize, occ: Vec<bool>) -> WorldMap {
    WorldMap::new("prop", w, h, (2.0, 2.0), occ, vec![]).unwrap()
}

fn map_strategy() -> impl Strategy<Value = WorldMap> {
    (4usize..24, 4usize..24).prop_flat_map(|(w, h)| {
        proptest::collection::vec(proptest::bool::weighted(0.25), w * h)
            .prop_map(move |occ| random_map(w, h, occ))
    })
}

fn points(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Point>> {
    proptest::collection::vec((0.8f64..1.2, 0.8f64..1.2), n)
        .prop_map(|v| v.into_iter().map(|(x, y)| Point::new(x, y)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cell_center_round_trip(map in map_strategy(), fx in 0.0f64..1.0, fy in 0.0f64..1.0) {
        let (ww, wh) = map.world_size();
        let p = Point::new(fx * ww * 0.999_999, fy * wh * 0.999_999);
        let cell = map.world_to_cell(&p).unwrap();
        let (hx, hy) = map.cell_size();
        let c = map.cell_center(cell);
        prop_assert!((c.x - p.x).abs() <= 0.5 * hx + 1e-12);
        prop_assert!((c.y - p.y).abs() <= 0.5 * hy + 1e-12);
        prop_assert_eq!(map.world_to_cell(&c).unwrap(), cell);
    }

    #[test]
    fn is_free_matches_lookup(map in map_strategy(), fx in -0.2f64..1.2, fy in -0.2f64..1.2) {
        let (ww, wh) = map.world_size();
        let p = Point::new(fx * ww, fy * wh);
        let expected = match map.world_to_cell(&p) {
            Ok(cell) => !map.occupancy()[cell.row * map.width() + cell.col],
            Err(_) => false,
        };
        prop_assert_eq!(map.is_free(&p), expected);
    }

    #[test]
    fn map_codec_round_trip(map in map_strategy()) {
        let text = encode_map(&map);
        let back = decode_map(&text).unwrap();
        prop_assert_eq!(&back, &map);
        prop_assert_eq!(encode_map(&back), text);
    }

    #[test]
    fn interpolation_exact_at_nodes_and_lipschitz(
        raw in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 64),
        a in (0.0f64..2.0, 0.0f64..2.0),
        b in (0.0f64..2.0, 0.0f64..2.0),
    ) {
        let map = Arc::new(WorldMap::empty("interp", 8, 8));
        let vectors: Vec<Point> = raw.iter().map(|&(x, y)| Point::new(x, y)).collect();
        let field = ScoreField::from_vectors(map.clone(), 1, vectors.clone()).unwrap();
        for (i, v) in vectors.iter().enumerate() {
            let c = map.cell_center(map.cell_at(i));
            prop_assert!((field.interpolate(&c).unwrap() - v).norm() < 1e-12);
        }
        // slope bound: largest neighbor difference over the spacing, per axis
        let (h, _) = map.cell_size();
        let mut jump: f64 = 0.0;
        for r in 0..8 {
            for c in 0..8 {
                let v = vectors[r * 8 + c];
                if c + 1 < 8 { jump = jump.max((vectors[r * 8 + c + 1] - v).norm()); }
                if r + 1 < 8 { jump = jump.max((vectors[(r + 1) * 8 + c] - v).norm()); }
            }
        }
        let lip = 2.0 * jump / h;
        let (pa, pb) = (Point::new(a.0, a.1), Point::new(b.0, b.1));
        let fa = field.interpolate(&pa).unwrap();
        let fb = field.interpolate(&pb).unwrap();
        prop_assert!((fa - fb).norm() <= lip * (pa - pb).norm() + 1e-9);
    }

    #[test]
    fn heat_conserved_nonnegative_and_excluded(
        map in map_strategy(),
        pick in any::<prop::sample::Index>(),
        steps in 1usize..60,
    ) {
        let free: Vec<Cell> = map.free_cells().collect();
        prop_assume!(!free.is_empty());
        let src = free[pick.index(free.len())];
        let map = Arc::new(map);
        let spec = SourceSpec::equal(vec![SemanticRegion::new("s", vec![src])]);
        let mut state = init_heat(&spec, &map).unwrap();
        let mut solver = HeatSolver::new(map.clone());
        let dt = solver.default_dt();
        for _ in 0..steps {
            solver.step(&mut state, dt).unwrap();
        }
        prop_assert!((state.total_mass() - 1.0).abs() <= 1e-12);
        for (i, u) in state.u.iter().enumerate() {
            prop_assert!(*u >= 0.0);
            if map.occupancy()[i] {
                prop_assert_eq!(*u, 0.0);
            }
        }
    }

    #[test]
    fn guidance_permutation_equivariant(pts in points(2..=9), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let permuted: Vec<Point> = order.iter().map(|&i| pts[i]).collect();
        let g = interrobot_guidance(&pts, 0.12).unwrap();
        let gp = interrobot_guidance(&permuted, 0.12).unwrap();
        for (k, &i) in order.iter().enumerate() {
            prop_assert!((gp[k] - g[i]).norm() <= 1e-9 * (1.0 + g[i].norm()));
        }
        let c = interrobot_cost(&pts, 0.12).unwrap();
        let cp = interrobot_cost(&permuted, 0.12).unwrap();
        prop_assert!((c - cp).abs() <= 1e-12 * (1.0 + c.abs()));
    }

    #[test]
    fn guidance_push_decreases_with_distance(d1 in 0.01f64..0.119, d2 in 0.01f64..0.119, angle in 0.0f64..6.3) {
        let (near, far) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        prop_assume!(far - near > 1e-6);
        let dir = Point::new(angle.cos(), angle.sin());
        let base = Point::new(1.0, 1.0);
        let g_near = interrobot_guidance(&[base, base + dir * near], 0.12).unwrap();
        let g_far = interrobot_guidance(&[base, base + dir * far], 0.12).unwrap();
        prop_assert!(g_near[0].norm() > g_far[0].norm());
        // the push points away from the other robot
        prop_assert!(g_near[0].dot(&dir) < 0.0);
    }

    #[test]
    fn guidance_step_lowers_cost(pts in points(2..=9)) {
        let Ok(g) = interrobot_guidance(&pts, 0.12) else { return Ok(()); };
        let c0 = interrobot_cost(&pts, 0.12).unwrap();
        let moved: Vec<Point> = pts.iter().zip(&g).map(|(p, v)| p + v * 1e-7).collect();
        let c1 = interrobot_cost(&moved, 0.12).unwrap();
        prop_assert!(c1 <= c0 + 1e-12);
    }
}
