mod common;

use maxosc::specification::{gap_table_shift, glue_finite, GlueStream, OrbitSegment};
use maxosc::systems::ShiftSystem;
use proptest::prelude::*;

fn irreducible() -> impl Strategy<Value = ShiftSystem> {
    (2usize..=4)
        .prop_flat_map(|n| (Just(n), proptest::collection::vec(any::<bool>(), n * n)))
        .prop_map(|(n, extra)| {
            let rows: Vec<Vec<bool>> = (0..n)
                .map(|a| (0..n).map(|b| b == (a + 1) % n || extra[a * n + b]).collect())
                .collect();
            ShiftSystem::new(&rows).unwrap()
        })
}

proptest! {
    #[test]
    fn min_walk_matches_bfs(sys in irreducible()) {
        let table = gap_table_shift(&sys, 1).unwrap();
        prop_assert_eq!(table.value, common::bfs_max_gap(&sys));
        for a in 0..sys.alphabet_size() as u8 {
            for b in 0..sys.alphabet_size() as u8 {
                let mut w = vec![a];
                w.extend(sys.connect(a, b));
                w.push(b);
                prop_assert!(sys.is_admissible(&w).unwrap());
            }
        }
    }

    #[test]
    fn glued_cycles_keep_segments(sys in irreducible(), picks in proptest::collection::vec((0usize..64, 1u64..3), 1..5)) {
        let table = gap_table_shift(&sys, 2).unwrap();
        let words = maxosc::specification::admissible_words(&sys, 2);
        let segs: Vec<OrbitSegment> = picks
            .iter()
            .map(|&(i, _)| OrbitSegment::from_word(words[i % words.len()].clone()).unwrap())
            .collect();
        let orbit = glue_finite(&sys, &segs, &table).unwrap();
        let all = orbit.materialize(0, orbit.len() as usize).unwrap();
        prop_assert!(sys.is_admissible_cycle(&all).unwrap());
        for (seg, &off) in segs.iter().zip(orbit.offsets()) {
            prop_assert_eq!(&all[off as usize..off as usize + seg.word.len()], &seg.word[..]);
        }
        prop_assert!(orbit.gaps().iter().all(|&g| g <= table.value));
    }
}

#[test]
fn stream_prefix_is_stable() {
    let gm = ShiftSystem::golden_mean();
    let table = gap_table_shift(&gm, 1).unwrap();
    let segs = ["1", "1", "0", "101"].map(|w| OrbitSegment::from_word(maxosc::systems::parse_word(w).unwrap()).unwrap());
    let mut stream = GlueStream::new(gm.clone(), table, segs.into_iter());
    let mut prefixes = Vec::new();
    while stream.advance_block().unwrap().is_some() {
        let o = stream.orbit();
        prefixes.push(o.materialize(0, o.len() as usize).unwrap());
    }
    for w in prefixes.windows(2) {
        assert!(w[1].starts_with(&w[0]));
    }
    assert!(gm.is_admissible(prefixes.last().unwrap()).unwrap());
}
