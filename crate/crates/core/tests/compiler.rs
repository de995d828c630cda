mod common;

use maxosc::compiler::{compile_carrier, largest_remainder, rational_weights, recheck_carrier};
use maxosc::measures::{ConvexCombination, Integrable, PeriodicMeasure, TestFunctionFamily};
use maxosc::specification::gap_table_shift;
use maxosc::systems::ShiftSystem;
use proptest::prelude::*;

const CYCLES: [&str; 6] = ["0", "01", "001", "0101", "00101", "0001"];

proptest! {
    #[test]
    fn rounding_hits_tolerance(raw in proptest::collection::vec(0.01f64..1.0, 1..5), zeta in 0.01f64..0.5) {
        let total: f64 = raw.iter().sum();
        let mut theta: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let fix = 1.0 - theta.iter().sum::<f64>();
        theta[0] += fix;
        let rw = rational_weights(&theta, zeta, 4, 1.0).unwrap();
        prop_assert_eq!(rw.counts.iter().sum::<u64>(), rw.s);
        prop_assert!(rw.max_error < zeta / 8.0);
        if rw.s > 1 {
            let prev = largest_remainder(&theta, rw.s - 1);
            let err = theta.iter().zip(&prev).map(|(&w, &c)| (w - c as f64 / (rw.s - 1) as f64).abs()).fold(0.0, f64::max);
            prop_assert!(err >= zeta / 8.0);
        }
    }

    #[test]
    fn carrier_meets_guarantee(picks in proptest::collection::vec((0usize..6, 1u32..5), 1..4), zeta in 0.03f64..0.3) {
        let gm = ShiftSystem::golden_mean();
        let comps: Vec<PeriodicMeasure> = picks.iter().map(|&(i, _)| PeriodicMeasure::parse(&gm, CYCLES[i]).unwrap()).collect();
        let total: u32 = picks.iter().map(|p| p.1).sum();
        let mut w: Vec<f64> = picks.iter().map(|p| p.1 as f64 / total as f64).collect();
        let fix = 1.0 - w.iter().sum::<f64>();
        w[0] += fix;
        let nu = ConvexCombination::new(comps, w).unwrap();
        let fam = TestFunctionFamily::cylinders(2, 6);
        let table = gap_table_shift(&gm, fam.max_locality()).unwrap();
        let carrier = compile_carrier(&gm, &nu, zeta, fam.functions(), &table).unwrap();
        prop_assert!(gm.is_admissible_cycle(&carrier.word).unwrap());
        let achieved = recheck_carrier(&carrier, fam.functions()).unwrap();
        for (phi, a) in fam.functions().iter().zip(&achieved) {
            let maxosc::measures::TestFunction::Cylinder(wd) = phi else { unreachable!() };
            let raw = common::cyclic_count(&carrier.word, wd) as f64 / carrier.word.len() as f64;
            prop_assert!((raw - a).abs() < 1e-12);
            prop_assert!((raw - nu.integrate(phi).unwrap()).abs() < zeta);
        }
    }
}
