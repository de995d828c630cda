use maxosc::measures::{MeasureSpec, TestFunctionFamily};
use maxosc::oscillator::{
    build_ball_chain, build_schedule, construct_point, sample_times, verify_vf_subset_v,
    OscillatorConfig, Profile, VSpec,
};
use maxosc::systems::ShiftSystem;
use proptest::prelude::*;

proptest! {
    #[test]
    fn schedule_recurrences(
        periods in proptest::collection::vec(1u64..50, 7),
        gaps in proptest::collection::vec(0u64..6, 7),
        c in 1.0f64..4.0,
        b0 in 0u64..10,
        paper in any::<bool>(),
    ) {
        let profile = if paper { Profile::Paper } else { Profile::Desk { c } };
        let s = build_schedule(&periods, &gaps, profile, 6, b0).unwrap();
        let mut prev = b0;
        for n in 1..=6 {
            let l = s.level(n);
            prop_assert_eq!(l.a_bar, prev + gaps[n - 1]);
            prop_assert_eq!(l.b_bar, l.a_bar + l.m * l.p);
            let ahead = l.a_bar + gaps[n] + periods[n];
            match profile {
                Profile::Paper => prop_assert_eq!(l.m, (1u64 << n) * ahead),
                Profile::Desk { c } => {
                    prop_assert!(l.m as f64 * l.p as f64 >= c * n as f64 * ahead as f64 - 1e-6);
                    prop_assert!(2.0 * l.a_bar as f64 / (l.b_bar - l.a_bar) as f64 <= 2.0 / (c * n as f64) + 1e-12);
                }
            }
            prev = l.b_bar;
        }
    }

    #[test]
    fn chain_balls_overlap(depth in 2usize..40, zeta0 in 0.2f64..1.0) {
        let full = ShiftSystem::full(2).unwrap();
        let fam = TestFunctionFamily::cylinders(2, 20);
        let v = VSpec::Path(vec![MeasureSpec::Periodic("0".into()), MeasureSpec::Periodic("1".into())]);
        let chain = build_ball_chain(&full, &v, zeta0, depth, &fam, 20).unwrap();
        for n in 0..depth - 1 {
            let d = maxosc::measures::weak_star_distance(&chain.centers()[n], &chain.centers()[n + 1], &fam, 20).unwrap();
            prop_assert!(d.upper() <= chain.radii()[n] + chain.radii()[n + 1]);
            prop_assert!(chain.radii()[n + 1] < chain.radii()[n]);
        }
    }
}

#[test]
fn full_shift_path_run_keeps_books() {
    let full = ShiftSystem::full(2).unwrap();
    let fam = TestFunctionFamily::cylinders(2, 20);
    let v = VSpec::Path(vec![
        MeasureSpec::Periodic("0".into()),
        MeasureSpec::Periodic("01".into()),
        MeasureSpec::Periodic("1".into()),
    ]);
    let chain = build_ball_chain(&full, &v, 0.5, 8, &fam, 20).unwrap();
    let run = construct_point(&full, &chain, &OscillatorConfig::new(7, Profile::Desk { c: 2.0 })).unwrap();
    assert_eq!(run.violations(), 0);
    let times = sample_times(&run, 50, 3);
    let rep = verify_vf_subset_v(&run, &times, 0.1).unwrap();
    assert!(rep.pass, "{rep:?}");
}
