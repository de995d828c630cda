mod common;

use std::time::{Duration, Instant};

use maxosc::compiler::compile_measure;
use maxosc::measures::{
    ConvexCombination, Integrable, MeasureSpec, PeriodicMeasure, TestFunction, TestFunctionFamily,
};
use maxosc::oscillator::{
    build_ball_chain, construct_point, irregularity_witness, sample_times, verify_v_subset_vf,
    verify_vf_subset_v, Anchor, OscillationRun, OscillatorConfig, Profile, VSpec,
};
use maxosc::shadowing::{shadow_toral, PseudoOrbit};
use maxosc::specification::{gap_table_shift, glue_finite, GlueStream, GluedOrbit, OrbitSegment};
use maxosc::systems::{reduce_mod1, BlockFiltration, ShiftSystem, ToralSystem, TorusPoint, Word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
    artifact: Vec<u8>,
}

fn outcome(pass: bool, detail: String, artifact: impl serde::Serialize) -> Outcome {
    Outcome {
        pass,
        detail,
        artifact: serde_json::to_vec(&artifact).expect("serializable"),
    }
}

fn random_word(sys: &ShiftSystem, rng: &mut ChaCha8Rng, len: usize) -> Word {
    let rows = sys.transition_rows();
    let mut w = vec![rng.gen_range(0..sys.alphabet_size() as u8)];
    while w.len() < len {
        let last = *w.last().unwrap() as usize;
        let next: Vec<u8> = (0..rows.len()).filter(|&b| rows[last][b]).map(|b| b as u8).collect();
        w.push(next[rng.gen_range(0..next.len())]);
    }
    w
}

fn orbit_fingerprint(orbit: &GluedOrbit) -> (Vec<u64>, Vec<u64>, Vec<u8>) {
    let n = orbit.len().min(4096) as usize;
    (
        orbit.offsets().to_vec(),
        orbit.gaps().to_vec(),
        orbit.materialize(0, n).unwrap(),
    )
}

fn c1_gluing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let systems = [ShiftSystem::full(2).unwrap(), ShiftSystem::golden_mean()];
    let expected = [1u64, 2];
    let mut failures = Vec::new();
    let mut prints = Vec::new();
    for (s, sys) in systems.iter().enumerate() {
        let table = gap_table_shift(sys, 1).unwrap();
        let oracle = common::bfs_max_gap(sys);
        if table.value != expected[s] || oracle != expected[s] {
            failures.push(format!("system {s}: table M = {}, oracle {oracle}", table.value));
        }
    }
    for trial in 0..1000 {
        let sys = &systems[trial % 2];
        let table = gap_table_shift(sys, 1).unwrap();
        let count = rng.gen_range(1..=6);
        let segs: Vec<OrbitSegment> = (0..count)
            .map(|_| {
                let len = rng.gen_range(1..=8);
                let w = random_word(sys, &mut rng, len);
                let reps = if sys.is_admissible_cycle(&w).unwrap() { rng.gen_range(1..=3) } else { 1 };
                OrbitSegment::new(w, reps, rng.gen_range(1..=3)).unwrap()
            })
            .collect();
        let stream = trial % 4 >= 2;
        let orbit = if stream {
            let mut g = GlueStream::new(sys.clone(), table.clone(), segs.clone().into_iter());
            while g.advance_block().unwrap().is_some() {}
            g.into_orbit()
        } else {
            glue_finite(sys, &segs, &table).unwrap()
        };
        let all = orbit.materialize(0, orbit.len() as usize).unwrap();
        let admissible = if stream {
            sys.is_admissible(&all).unwrap()
        } else {
            sys.is_admissible_cycle(&all).unwrap()
        };
        let verbatim = segs.iter().enumerate().all(|(i, seg)| {
            let start = orbit.offsets()[i] as usize;
            let want: Vec<u8> = (0..seg.repeats).flat_map(|_| seg.word.iter().copied()).collect();
            all[start..start + want.len()] == want[..]
        });
        let bounded = orbit.gaps().iter().all(|&g| g <= table.value)
            && (0..segs.len().saturating_sub(1)).all(|i| {
                orbit.offsets()[i + 1] - orbit.offsets()[i] - segs[i].len() == orbit.gaps()[i]
            });
        if !(admissible && verbatim && bounded) {
            failures.push(format!(
                "trial {trial}: admissible {admissible}, verbatim {verbatim}, bounded {bounded}"
            ));
        }
        if trial < 50 {
            prints.push(orbit_fingerprint(&orbit));
        }
    }
    let detail = if failures.is_empty() {
        "1000 lists admissible, verbatim, gap-bounded (M = 1, 2)".to_string()
    } else {
        format!("{} failures; first: {}", failures.len(), failures[0])
    };
    outcome(failures.is_empty(), detail, prints)
}

fn cat_cycle(sys: &ToralSystem, q: i64, start: (i64, i64)) -> Vec<(i64, i64)> {
    let l = sys.matrix();
    let mut out = vec![start];
    loop {
        let (x, y) = *out.last().unwrap();
        let next = (
            (l[0][0] * x + l[0][1] * y).rem_euclid(q),
            (l[1][0] * x + l[1][1] * y).rem_euclid(q),
        );
        if next == start {
            return out;
        }
        out.push(next);
    }
}

fn c2_shadowing() -> Outcome {
    let sys = ToralSystem::cat_map();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let jump = 1e-4;
    let filt = BlockFiltration::constant(1.0, 0.0, jump).unwrap();
    let (mut worst_res, mut worst_dist, mut worst_dense) = (0.0f64, 0.0f64, 0.0f64);
    let mut worst_jump = 0.0f64;
    let mut prints = Vec::new();
    for _ in 0..100 {
        let q = rng.gen_range(3..=60);
        let start = (rng.gen_range(0..q), rng.gen_range(0..q));
        let cycle = cat_cycle(&sys, q, start);
        let reps = 20usize.div_ceil(cycle.len());
        let points: Vec<TorusPoint> = (0..reps)
            .flat_map(|_| cycle.iter())
            .map(|&(x, y)| {
                let r = rng.gen_range(0.0..=jump / 3.62);
                let th = rng.gen_range(0.0..std::f64::consts::TAU);
                [
                    reduce_mod1(x as f64 / q as f64 + r * th.cos()),
                    reduce_mod1(y as f64 / q as f64 + r * th.sin()),
                ]
            })
            .collect();
        let orbit = PseudoOrbit::at_level_one(points.clone(), true).unwrap();
        let errs = orbit.errors(&sys);
        worst_jump = errs.iter().map(|e| e[0].hypot(e[1])).fold(worst_jump, f64::max);
        let sh = shadow_toral(&sys, &orbit, &filt).unwrap();
        let dense = common::dense_periodic_corrections(&sys, &errs);
        worst_res = worst_res.max(sh.residual);
        worst_dist = worst_dist.max(sh.max_correction);
        for (w, d) in sh.corrections.iter().zip(&dense) {
            worst_dense = worst_dense.max((w[0] - d[0]).abs().max((w[1] - d[1]).abs()));
        }
        prints.push(sh.points);
    }
    let pass = worst_res <= 1e-10 && worst_dist <= 3.24e-4 && worst_dense <= 1e-10 && worst_jump <= jump;
    outcome(
        pass,
        format!(
            "max jump {worst_jump:.3e}, residual {worst_res:.2e}, distance {worst_dist:.3e} (≤ 3.24e-4), dense gap {worst_dense:.2e}"
        ),
        prints,
    )
}

fn c3_compiler() -> Outcome {
    let gm = ShiftSystem::golden_mean();
    let nu = ConvexCombination::new(
        vec![PeriodicMeasure::parse(&gm, "0").unwrap(), PeriodicMeasure::parse(&gm, "01").unwrap()],
        vec![0.5, 0.5],
    )
    .unwrap();
    let f: Vec<TestFunction> = ["0", "1", "00", "01"].iter().map(|w| TestFunction::cylinder(w).unwrap()).collect();
    let table = gap_table_shift(&gm, 2).unwrap();
    let compiled = compile_measure(&gm, &nu, 0.05, &f, &table).unwrap();
    let cycle = compiled.orbit.materialize(0, compiled.orbit.len() as usize).unwrap();
    let exact0 = nu.integrate(&f[0]).unwrap();
    let mut worst = 0.0f64;
    for phi in &f {
        let TestFunction::Cylinder(w) = phi else { unreachable!() };
        let avg = common::cyclic_count(&cycle, w) as f64 / cycle.len() as f64;
        worst = worst.max((avg - nu.integrate(phi).unwrap()).abs());
    }
    let pass = worst < 0.05 && exact0 == 0.75 && gm.is_admissible_cycle(&cycle).unwrap();
    outcome(
        pass,
        format!("period {}, max raw-symbol error {worst:.4} (< 0.05), ∫1_[0] dν = {exact0}", cycle.len()),
        (cycle, compiled.guarantee),
    )
}

fn segment_v() -> VSpec {
    VSpec::Path(vec![MeasureSpec::Periodic("0".into()), MeasureSpec::Periodic("01".into())])
}

fn c4_run() -> (OscillationRun, Duration) {
    let gm = ShiftSystem::golden_mean();
    let fam = TestFunctionFamily::cylinders(2, 20);
    let t = Instant::now();
    let chain = build_ball_chain(&gm, &segment_v(), 0.5, 11, &fam, 20).unwrap();
    let run = construct_point(&gm, &chain, &OscillatorConfig::new(10, Profile::Desk { c: 2.0 })).unwrap();
    (run, t.elapsed())
}

fn c4_targets(run: &OscillationRun) -> Vec<ConvexCombination> {
    // tμ_0 + (1−t)μ_01 sits at path parameter 1 − t.
    [0.0, 0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|&t| run.chain.point_at(1.0 - t).unwrap())
        .collect()
}

fn c4_inclusion(run: &OscillationRun, elapsed: Duration) -> Outcome {
    let rep = verify_v_subset_vf(run, &c4_targets(run), 0.1).unwrap();
    let total = run.b(run.depth());
    let cap = 100_000_000u64;
    let fast = elapsed < Duration::from_secs(600);
    let pass = rep.pass && total <= cap && fast;
    let mut detail = format!(
        "coverage {} (worst d̃ + trunc = {:.4} ≤ 0.1); total length b_10 = {total} vs cap {cap}",
        if rep.pass { "ok" } else { "failed" },
        rep.worst
    );
    if total > cap {
        detail.push_str(&format!(
            "; length cap unattainable: b̄_n ≥ (1 + 2n)·b̄_(n−1) forces b_10 ≥ 4.58e9 (largest depth within cap: {})",
            (1..=run.depth()).take_while(|&n| run.b(n) <= cap).count()
        ));
    }
    outcome(pass, detail, (&rep, &run.checkpoints))
}

fn c5_interpolation(run: &OscillationRun) -> Outcome {
    let times = sample_times(run, 200, 5);
    let rep = verify_vf_subset_v(run, &times, 0.1).unwrap();
    let chain_ok = rep.entries.iter().all(|e| e.chain_ok);
    outcome(
        rep.pass,
        format!(
            "200 times, max |Δ|/‖ξ‖ = {:.4} (≤ 0.2), chain bound held: {chain_ok}",
            rep.max_deviation
        ),
        rep,
    )
}

fn c6_run() -> OscillationRun {
    let gm = ShiftSystem::golden_mean();
    let fam = TestFunctionFamily::cylinders(2, 20);
    let v = VSpec::Points(vec![MeasureSpec::Periodic("01".into())]);
    let chain = build_ball_chain(&gm, &v, 0.5, 9, &fam, 20).unwrap();
    let mut cfg = OscillatorConfig::new(8, Profile::Desk { c: 2.0 });
    cfg.anchor = Some(Anchor { cycle: vec![0], delta: 0.125 });
    construct_point(&gm, &chain, &cfg).unwrap()
}

fn c6_generic(run: &OscillationRun) -> Outcome {
    let last = run.checkpoints.last().unwrap();
    let trunc = 0.5f64.powi(19);
    let d = last.dist_to_center + trunc;
    let prefix = run.orbit.materialize(0, 3).unwrap();
    let pass = d <= 0.02 && prefix == vec![0, 0, 0];
    outcome(
        pass,
        format!("final d̃ + trunc = {d:.4} (≤ 0.02), prefix {prefix:?}"),
        (&run.checkpoints, run.orbit.materialize(0, 64).unwrap()),
    )
}

fn c7_irregular(run: &OscillationRun) -> Outcome {
    let gm = &run.system;
    let mu0 = ConvexCombination::single(PeriodicMeasure::parse(gm, "0").unwrap());
    let mu01 = ConvexCombination::single(PeriodicMeasure::parse(gm, "01").unwrap());
    let phi = TestFunction::cylinder("0").unwrap();
    let w = irregularity_witness(run, &phi, &mu0, &mu01).unwrap();
    outcome(
        w.gap >= 0.4,
        format!("lim1 = {:.4}, lim2 = {:.4}, gap {:.4} (≥ 0.4)", w.lim1, w.lim2, w.gap),
        w,
    )
}

fn c8_bookkeeping(runs: &[&OscillationRun]) -> Outcome {
    let bad: usize = runs.iter().map(|r| r.violations()).sum();
    let blocks: usize = runs.iter().map(|r| r.depth()).sum();
    outcome(bad == 0, format!("{blocks} blocks checked, {bad} violations"), bad)
}

fn paper_run() -> OscillationRun {
    let full = ShiftSystem::full(2).unwrap();
    let fam = TestFunctionFamily::cylinders(2, 20);
    let v = VSpec::Path(vec![
        MeasureSpec::Periodic("0".into()),
        MeasureSpec::Periodic("01".into()),
        MeasureSpec::Periodic("1".into()),
    ]);
    let chain = build_ball_chain(&full, &v, 0.5, 5, &fam, 20).unwrap();
    construct_point(&full, &chain, &OscillatorConfig::new(4, Profile::Paper)).unwrap()
}

fn artifacts() -> Vec<Vec<u8>> {
    let (run4, el) = c4_run();
    let run6 = c6_run();
    let mut out = vec![c1_gluing(), c2_shadowing(), c3_compiler()];
    out.push(c4_inclusion(&run4, el));
    out.push(c5_interpolation(&run4));
    out.push(c6_generic(&run6));
    out.push(c7_irregular(&run4));
    out.into_iter().map(|o| o.artifact).collect()
}

fn main() {
    let mut results: Vec<(usize, Outcome, Duration)> = Vec::new();
    let timed = |f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        (o, t.elapsed())
    };
    let (o, t) = timed(&c1_gluing);
    results.push((1, o, t));
    let (o, t) = timed(&c2_shadowing);
    results.push((2, o, t));
    let (o, t) = timed(&c3_compiler);
    results.push((3, o, t));
    let (run4, el4) = c4_run();
    results.push((4, c4_inclusion(&run4, el4), el4));
    let (o, t) = timed(&|| c5_interpolation(&run4));
    results.push((5, o, t));
    let t6 = Instant::now();
    let run6 = c6_run();
    results.push((6, c6_generic(&run6), t6.elapsed()));
    let (o, t) = timed(&|| c7_irregular(&run4));
    results.push((7, o, t));
    let run_p = paper_run();
    let (o, t) = timed(&|| c8_bookkeeping(&[&run4, &run6, &run_p]));
    results.push((8, o, t));
    let t9 = Instant::now();
    let first: Vec<Vec<u8>> = results.iter().take(7).map(|(_, o, _)| o.artifact.clone()).collect();
    let again = artifacts();
    let same = first == again;
    let bytes: usize = first.iter().map(Vec::len).sum();
    results.push((
        9,
        Outcome {
            pass: same,
            detail: format!("criteria 1–7 rerun, {bytes} artifact bytes identical: {same}"),
            artifact: Vec::new(),
        },
        t9.elapsed(),
    ));

    let mut failed = 0;
    for (n, o, t) in &results {
        println!(
            "criterion {n}: {} - {} [{:.2}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
