//! Pipelines behind each subcommand.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use maxosc::compiler::{compile_measure, simplify_to_cycle};
use maxosc::measures::{
    ConvexCombination, Integrable, MeasureSpec, SymbolSequence, TestFunction, TestFunctionFamily,
};
use maxosc::oscillator::{
    build_ball_chain, construct_point, irregularity_witness, pcn_membership, sample_times,
    verify_v_subset_vf, verify_vf_subset_v, Anchor, OscillationRun, OscillatorConfig,
};
use maxosc::shadowing::{shadow_toral, sufficient_filtration, verify_shadowing, PseudoOrbit};
use maxosc::specification::{gap_table_shift, glue_finite, GlueStream, GluedOrbit, OrbitSegment};
use maxosc::systems::{
    format_word, parse_word, ShiftPoint, ShiftSystem, System, ToralSystem, TorusPoint,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::artifacts::{num, ArtifactWriter, InvariantResult, RunManifest};
use crate::spec::{CompileTask, GlueTask, OscillateTask, RunSpec, ShadowTask, Task};

pub const CHECKPOINT_HEADER: &str = "n,a_n,b_n,k_n,p_n,M_n,dist_to_center,step3_bound,pass";

fn invariant(name: &str, pass: bool, detail: impl Into<String>) -> InvariantResult {
    InvariantResult {
        name: name.to_string(),
        pass,
        detail: detail.into(),
    }
}

fn shift_system(spec: &RunSpec) -> Result<ShiftSystem> {
    match spec.system.build()? {
        System::Shift(s) => Ok(s),
        System::Toral(_) => bail!("task `{}` needs a shift system", spec.task.name()),
    }
}

fn toral_system(spec: &RunSpec) -> Result<ToralSystem> {
    match spec.system.build()? {
        System::Toral(s) => Ok(s),
        System::Shift(_) => bail!("task `{}` needs a toral system", spec.task.name()),
    }
}

/// Runs the pipeline named by the run file and writes every artifact to `out`.
pub fn run(spec: &RunSpec, spec_dir: &Path, out: &Path) -> Result<RunManifest> {
    spec.validate()?;
    let mut w = ArtifactWriter::new(out)?;
    let (derived, invariants) = match &spec.task {
        Task::Shadow(t) => run_shadow(spec, t, spec_dir, &mut w)?,
        Task::Glue(t) => run_glue(spec, t, &mut w)?,
        Task::CompileMeasure(t) => run_compile(spec, t, &mut w)?,
        Task::Oscillate(t) => run_oscillate(spec, t, &mut w)?,
    };
    w.finish(spec, derived, invariants)
}

/// Rows `index,x,y,level` after a header line.
pub fn read_pseudo_orbit(text: &str) -> Result<(Vec<TorusPoint>, Vec<u32>)> {
    let mut points = Vec::new();
    let mut levels = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 4 {
            bail!("line {}: expected index,x,y,level", i + 1);
        }
        let idx: usize = f[0].parse().with_context(|| format!("line {}", i + 1))?;
        if idx != points.len() {
            bail!("line {}: index {idx} out of order", i + 1);
        }
        points.push([f[1].parse()?, f[2].parse()?]);
        levels.push(f[3].parse()?);
    }
    Ok((points, levels))
}

fn run_shadow(
    spec: &RunSpec,
    t: &ShadowTask,
    spec_dir: &Path,
    w: &mut ArtifactWriter,
) -> Result<(serde_json::Value, Vec<InvariantResult>)> {
    let sys = toral_system(spec)?;
    let path = spec_dir.join(&t.input);
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading pseudo-orbit {}", path.display()))?;
    let (points, levels) = read_pseudo_orbit(&text)?;
    let start = Instant::now();
    let filt = match t.filtration {
        Some(f) => f,
        None => sufficient_filtration(&sys, t.eta, 1.0, 0.0)?,
    };
    let orbit = PseudoOrbit::new(points, levels, t.periodic)?;
    let sh = shadow_toral(&sys, &orbit, &filt)?;
    let report = verify_shadowing(&sys, &sh.points, &orbit, t.eta, &filt)?;
    w.time("shadow", start.elapsed().as_secs_f64());

    w.write("input.csv", text.as_bytes())?;
    let mut csv = String::from("index,x,y,correction\n");
    for (i, (p, c)) in sh.points.iter().zip(&sh.corrections).enumerate() {
        writeln!(csv, "{i},{},{},{}", num(p[0]), num(p[1]), num(c[0].hypot(c[1])))?;
    }
    w.write("shadow.csv", csv.as_bytes())?;
    w.write_json("report.json", &json!({ "shadow": &sh, "verification": &report }))?;
    let invariants = vec![
        invariant("true orbit", sh.residual <= 1e-10, format!("residual {:.3e}", sh.residual)),
        invariant(
            "shadowing distance",
            report.pass,
            format!("max ratio {:.4}, {} failures", report.max_ratio, report.failures.len()),
        ),
    ];
    Ok((json!({ "filtration": filt }), invariants))
}

fn segments_of(t: &GlueTask) -> Result<Vec<OrbitSegment>> {
    t.segments
        .iter()
        .map(|s| Ok(OrbitSegment::new(parse_word(&s.word)?, s.repeats, s.level)?))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetsFile {
    pub periodic: bool,
    pub len: u64,
    pub gap_bound: u64,
    pub offsets: Vec<u64>,
    pub segment_lengths: Vec<u64>,
    pub gaps: Vec<u64>,
}

/// Admissibility, verbatim windows and gap bounds of a glued word.
pub fn check_glued(
    sys: &ShiftSystem,
    word: &[u8],
    segments: &[OrbitSegment],
    offsets: &OffsetsFile,
) -> Result<Vec<InvariantResult>> {
    let admissible = if offsets.periodic {
        sys.is_admissible_cycle(word)?
    } else {
        sys.is_admissible(word)?
    };
    let verbatim = segments.len() == offsets.offsets.len()
        && segments.iter().zip(&offsets.offsets).all(|(seg, &off)| {
            let want: Vec<u8> = (0..seg.repeats).flat_map(|_| seg.word.iter().copied()).collect();
            let off = off as usize;
            word.len() >= off + want.len() && word[off..off + want.len()] == want[..]
        });
    let bounded = offsets.gaps.iter().all(|&g| g <= offsets.gap_bound);
    Ok(vec![
        invariant("admissible", admissible, format!("{} symbols", word.len())),
        invariant("segments verbatim", verbatim, format!("{} segments", segments.len())),
        invariant(
            "gap bound",
            bounded,
            format!("max gap {} ≤ M = {}", offsets.gaps.iter().max().unwrap_or(&0), offsets.gap_bound),
        ),
    ])
}

fn run_glue(
    spec: &RunSpec,
    t: &GlueTask,
    w: &mut ArtifactWriter,
) -> Result<(serde_json::Value, Vec<InvariantResult>)> {
    let sys = shift_system(spec)?;
    let table = gap_table_shift(&sys, t.resolution)?.with_min_gap_one(t.min_gap_one);
    let segs = segments_of(t)?;
    let total: u64 = segs.iter().map(OrbitSegment::len).sum::<u64>()
        + segs.len() as u64 * table.value;
    if total > crate::spec::DEFAULT_MAX_LENGTH {
        bail!("glued length up to {total} exceeds cap {}", crate::spec::DEFAULT_MAX_LENGTH);
    }
    let start = Instant::now();
    let orbit: GluedOrbit = if t.periodic {
        glue_finite(&sys, &segs, &table)?
    } else {
        let mut g = GlueStream::new(sys.clone(), table.clone(), segs.clone().into_iter());
        while g.advance_block()?.is_some() {}
        g.into_orbit()
    };
    w.time("glue", start.elapsed().as_secs_f64());
    let word = orbit.materialize(0, orbit.len() as usize)?;
    let offsets = OffsetsFile {
        periodic: t.periodic,
        len: orbit.len(),
        gap_bound: table.value,
        offsets: orbit.offsets().to_vec(),
        segment_lengths: orbit.segment_lengths().to_vec(),
        gaps: orbit.gaps().to_vec(),
    };
    w.write("orbit.txt", format!("{}\n", format_word(&word)).as_bytes())?;
    w.write_json("offsets.json", &offsets)?;
    let invariants = check_glued(&sys, &word, &segs, &offsets)?;
    Ok((json!({ "gap_table": table }), invariants))
}

pub fn compile_functions(sys: &ShiftSystem, t: &CompileTask) -> Result<Vec<TestFunction>> {
    Ok(match &t.functions {
        Some(ws) => ws.iter().map(|s| TestFunction::cylinder(s)).collect::<maxosc::Result<_>>()?,
        None => TestFunctionFamily::cylinders(sys.alphabet_size(), t.family_size)
            .functions()
            .to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentsFile {
    pub segments: Vec<crate::spec::SegmentSpec>,
    pub carrier: String,
}

fn run_compile(
    spec: &RunSpec,
    t: &CompileTask,
    w: &mut ArtifactWriter,
) -> Result<(serde_json::Value, Vec<InvariantResult>)> {
    let sys = shift_system(spec)?;
    let nu = t.measure.build(&sys)?;
    let functions = compile_functions(&sys, t)?;
    let resolution = functions.iter().map(TestFunction::locality).max().unwrap_or(1);
    let table = gap_table_shift(&sys, resolution)?;
    let start = Instant::now();
    let compiled = compile_measure(&sys, &nu, t.zeta, &functions, &table)?;
    let carrier = simplify_to_cycle(&compiled)?;
    w.time("compile", start.elapsed().as_secs_f64());
    let file = SegmentsFile {
        segments: compiled
            .segments
            .iter()
            .map(|s| crate::spec::SegmentSpec {
                word: format_word(&s.word),
                repeats: s.repeats,
                level: s.level,
            })
            .collect(),
        carrier: format_word(&carrier.word),
    };
    w.write_json("segments.json", &file)?;
    w.write_json("guarantee.json", &compiled.guarantee)?;
    let invariants = check_carrier(&sys, &nu, &carrier.word, &functions, t.zeta)?;
    Ok((json!({ "gap_table": table }), invariants))
}

pub fn check_carrier(
    sys: &ShiftSystem,
    nu: &ConvexCombination,
    cycle: &[u8],
    functions: &[TestFunction],
    zeta: f64,
) -> Result<Vec<InvariantResult>> {
    let x = ShiftPoint::periodic(cycle.to_vec());
    let period = cycle.len() as u64;
    let mut worst: f64 = 0.0;
    for f in functions {
        let TestFunction::Cylinder(word) = f else {
            bail!("shift functions only");
        };
        let avg = x.count_occurrences(word, 0, period)? as f64 / period as f64;
        worst = worst.max((avg - nu.integrate(f)?).abs());
    }
    Ok(vec![
        invariant("carrier admissible", sys.is_admissible_cycle(cycle)?, format!("period {}", cycle.len())),
        invariant("compile guarantee", worst < zeta, format!("max error {worst:.3e} < ζ = {zeta}")),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainFile {
    pub params: Vec<f64>,
    pub radii: Vec<f64>,
    pub centers: Vec<MeasureSpec>,
}

pub fn anchor_of(t: &OscillateTask) -> Result<Option<Anchor>> {
    t.anchor
        .as_ref()
        .map(|a| {
            Ok(Anchor {
                cycle: parse_word(&a.cycle)?,
                delta: a.delta,
            })
        })
        .transpose()
}

pub fn blocks_csv(orbit: &GluedOrbit) -> String {
    let mut s = String::from("start,repeats,word\n");
    for p in orbit.pieces() {
        let _ = writeln!(s, "{},{},{}", p.start, p.repeats, format_word(&p.word));
    }
    s
}

pub fn checkpoints_csv(run: &OscillationRun) -> String {
    let mut s = format!("{CHECKPOINT_HEADER}\n");
    for c in &run.checkpoints {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            c.n,
            c.a,
            c.b,
            c.k,
            c.p,
            c.gap_bound,
            num(c.dist_to_center),
            num(c.step3_bound),
            c.pass
        );
    }
    s
}

fn run_oscillate(
    spec: &RunSpec,
    t: &OscillateTask,
    w: &mut ArtifactWriter,
) -> Result<(serde_json::Value, Vec<InvariantResult>)> {
    let sys = shift_system(spec)?;
    let family = TestFunctionFamily::cylinders(sys.alphabet_size(), t.family_size);
    let start = Instant::now();
    let chain = build_ball_chain(&sys, &t.v, t.zeta0, t.depth + 1, &family, t.family_size)?;
    w.time("chain", start.elapsed().as_secs_f64());
    let config = OscillatorConfig {
        depth: t.depth,
        profile: t.profile,
        family_size: t.family_size,
        cover_resolution: None,
        eta: t.eta,
        anchor: anchor_of(t)?,
        min_gap_one: t.min_gap_one,
        max_orbit_length: Some(t.max_length),
    };
    let start = Instant::now();
    let run = construct_point(&sys, &chain, &config)?;
    w.time("construct", start.elapsed().as_secs_f64());

    let start = Instant::now();
    let targets: Vec<ConvexCombination> = t
        .targets
        .iter()
        .map(|&p| chain.point_at(p))
        .collect::<maxosc::Result<_>>()?;
    let coverage = verify_v_subset_vf(&run, &targets, t.tolerance)?;
    let times = sample_times(&run, t.samples, spec.seed);
    let interpolation = verify_vf_subset_v(&run, &times, t.tolerance)?;
    let candidates: Vec<u64> = run.checkpoints.iter().map(|c| c.b).collect();
    let (n0, n_max) = (run.b(1).saturating_sub(1), run.b(run.depth()));
    let pcn = if n_max > n0 {
        targets
            .iter()
            .map(|target| {
                pcn_membership(
                    &run.orbit,
                    target,
                    t.tolerance,
                    n0,
                    n_max,
                    &family,
                    t.family_size,
                    t.pcn_scan,
                    &candidates,
                )
            })
            .collect::<maxosc::Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let irregularity = irregularity_report(&run, &chain)?;
    w.time("verify", start.elapsed().as_secs_f64());

    let violations = run.violations();
    let verification = json!({
        "step3": coverage,
        "step4": interpolation,
        "pcn": pcn,
        "irregularity": irregularity,
        "bookkeeping_violations": violations,
        "ratios_nonincreasing": run.schedule.ratios_nonincreasing(),
    });
    w.write("orbit_blocks.csv", blocks_csv(&run.orbit).as_bytes())?;
    let prefix = run.orbit.materialize(0, (t.prefix_len as u64).min(run.orbit.len()) as usize)?;
    w.write("orbit_prefix.txt", format!("{}\n", format_word(&prefix)).as_bytes())?;
    w.write("checkpoints.csv", checkpoints_csv(&run).as_bytes())?;
    w.write_json("verification.json", &verification)?;
    w.write_json(
        "chain.json",
        &ChainFile {
            params: chain.params().to_vec(),
            radii: chain.radii().to_vec(),
            centers: chain.centers().iter().map(MeasureSpec::from_measure).collect(),
        },
    )?;

    let failed: Vec<usize> = run.checkpoints.iter().filter(|c| !c.pass).map(|c| c.n).collect();
    let invariants = vec![
        invariant("step3 bounds", failed.is_empty(), format!("failing rows {failed:?}")),
        invariant("bookkeeping", violations == 0, format!("{violations} violations")),
        invariant(
            "step4 interpolation",
            interpolation.pass,
            format!("{} times, max deviation {:.4}", times.len(), interpolation.max_deviation),
        ),
    ];
    let derived = json!({
        "gap_table": run.table,
        "schedule": run.schedule,
        "eta": run.eta,
        "family": family.functions().iter().map(TestFunction::id).collect::<Vec<_>>(),
        "anchor_len": run.anchor_len,
        "starts": run.starts,
        "orbit_len": run.orbit.len(),
    });
    Ok((derived, invariants))
}

/// Witness between the first two distinct path vertices visited by the
/// chain, on the first family function separating them.
fn irregularity_report(
    run: &OscillationRun,
    chain: &maxosc::oscillator::BallChain,
) -> Result<serde_json::Value> {
    let (Ok(first), Ok(last)) = (chain.point_at(0.0), chain.point_at(1.0)) else {
        return Ok(serde_json::Value::Null);
    };
    for phi in run.family.functions() {
        if (first.integrate(phi)? - last.integrate(phi)?).abs() < 1e-12 {
            continue;
        }
        return Ok(match irregularity_witness(run, phi, &first, &last) {
            Ok(w) => json!({ "function": phi.id(), "witness": w }),
            Err(e) => json!({ "function": phi.id(), "error": e.to_string() }),
        });
    }
    Ok(json!({ "error": "V is a single measure; no irregularity witness" }))
}
