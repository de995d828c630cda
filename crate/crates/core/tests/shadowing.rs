mod common;

use maxosc::shadowing::{bound_constant, shadow_toral, verify_shadowing, PseudoOrbit};
use maxosc::systems::{reduce_mod1, BlockFiltration, ToralSystem};
use proptest::prelude::*;

fn rational_cycle(sys: &ToralSystem, q: i64, x: i64, y: i64) -> Vec<[f64; 2]> {
    let l = sys.matrix();
    let mut cur = (x.rem_euclid(q), y.rem_euclid(q));
    let start = cur;
    let mut out = Vec::new();
    loop {
        out.push([cur.0 as f64 / q as f64, cur.1 as f64 / q as f64]);
        cur = (
            (l[0][0] * cur.0 + l[0][1] * cur.1).rem_euclid(q),
            (l[1][0] * cur.0 + l[1][1] * cur.1).rem_euclid(q),
        );
        if cur == start {
            return out;
        }
    }
}

proptest! {
    #[test]
    fn periodic_shadow_matches_dense_solve(
        q in 2i64..40, x in 0i64..40, y in 0i64..40,
        noise in proptest::collection::vec((-1e-5f64..1e-5, -1e-5f64..1e-5), 120),
    ) {
        let sys = ToralSystem::cat_map();
        let pts: Vec<[f64; 2]> = rational_cycle(&sys, q, x, y)
            .iter()
            .zip(&noise)
            .map(|(p, e)| [reduce_mod1(p[0] + e.0), reduce_mod1(p[1] + e.1)])
            .collect();
        let filt = BlockFiltration::constant(1.0, 0.0, 1e-3).unwrap();
        let orbit = PseudoOrbit::at_level_one(pts, true).unwrap();
        let errs = orbit.errors(&sys);
        let sh = shadow_toral(&sys, &orbit, &filt).unwrap();
        let dense = common::dense_periodic_corrections(&sys, &errs);
        for (w, v) in sh.corrections.iter().zip(&dense) {
            prop_assert!((w[0] - v[0]).abs() < 1e-10 && (w[1] - v[1]).abs() < 1e-10);
        }
        prop_assert!(sh.residual < 1e-10);
        prop_assert!(sh.max_correction <= sh.correction_bound * (1.0 + 1e-9) + 1e-15);
        let report = verify_shadowing(&sys, &sh.points, &orbit, 1.0, &filt).unwrap();
        prop_assert!(report.pass);
    }
}

#[test]
fn cat_bound_constant() {
    let k = bound_constant(&ToralSystem::cat_map(), 0.0).unwrap();
    assert!((k - (1.0 + 5f64.sqrt())).abs() < 1e-12);
}
