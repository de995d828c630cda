//! Re-checks a finished run directory against its manifest.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use maxosc::measures::TestFunctionFamily;
use maxosc::oscillator::{evaluate_checkpoint, BlockRecord, Schedule};
use maxosc::specification::{GluedOrbit, OrbitSegment, Piece};
use maxosc::systems::{parse_word, ShiftSystem, System, ToralSystem};
use serde::{Deserialize, Serialize};

use crate::artifacts::{digest, InvariantResult, RunManifest, MANIFEST};
use crate::run::{check_carrier, check_glued, compile_functions, ChainFile, OffsetsFile, SegmentsFile};
use crate::spec::{OscillateTask, Task};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub checks: Vec<InvariantResult>,
}

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> InvariantResult {
    InvariantResult {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

/// Accepts the manifest path or the run directory.
pub fn verify(path: &Path) -> Result<VerifyReport> {
    let (dir, manifest_path) = if path.is_dir() {
        (path.to_path_buf(), path.join(MANIFEST))
    } else {
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        (dir, path.to_path_buf())
    };
    let text = fs::read_to_string(&manifest_path)
        .with_context(|| format!("reading {}", manifest_path.display()))?;
    let manifest: RunManifest = serde_json::from_str(&text).context("parsing manifest")?;

    let mut checks = Vec::new();
    for a in &manifest.artifacts {
        match fs::read(dir.join(&a.name)) {
            Err(_) => {
                checks.push(check(format!("digest {}", a.name), false, "missing artifact"));
            }
            Ok(bytes) => {
                let ok = digest(&bytes) == a.sha256;
                let detail = if ok {
                    "ok".to_string()
                } else {
                    format!("digest mismatch ({} bytes, expected {})", bytes.len(), a.bytes)
                };
                checks.push(check(format!("digest {}", a.name), ok, detail));
            }
        }
    }
    match recheck(&manifest, &dir) {
        Ok(mut more) => checks.append(&mut more),
        Err(e) => checks.push(check("artifact re-check", false, format!("{e:#}"))),
    }
    Ok(VerifyReport {
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

fn read(dir: &Path, name: &str) -> Result<String> {
    fs::read_to_string(dir.join(name)).with_context(|| format!("reading {name}"))
}

fn shift(manifest: &RunManifest) -> Result<ShiftSystem> {
    match manifest.spec.system.build()? {
        System::Shift(s) => Ok(s),
        System::Toral(_) => bail!("expected a shift system"),
    }
}

fn toral(manifest: &RunManifest) -> Result<ToralSystem> {
    match manifest.spec.system.build()? {
        System::Toral(s) => Ok(s),
        System::Shift(_) => bail!("expected a toral system"),
    }
}

fn recheck(manifest: &RunManifest, dir: &Path) -> Result<Vec<InvariantResult>> {
    match &manifest.spec.task {
        Task::Oscillate(t) => recheck_oscillate(manifest, t, dir),
        Task::Glue(t) => {
            let sys = shift(manifest)?;
            let word = parse_word(read(dir, "orbit.txt")?.trim())?;
            let offsets: OffsetsFile = serde_json::from_str(&read(dir, "offsets.json")?)?;
            let segs: Vec<OrbitSegment> = t
                .segments
                .iter()
                .map(|s| Ok(OrbitSegment::new(parse_word(&s.word)?, s.repeats, s.level)?))
                .collect::<Result<_>>()?;
            check_glued(&sys, &word, &segs, &offsets)
        }
        Task::CompileMeasure(t) => {
            let sys = shift(manifest)?;
            let file: SegmentsFile = serde_json::from_str(&read(dir, "segments.json")?)?;
            let nu = t.measure.build(&sys)?;
            let functions = compile_functions(&sys, t)?;
            check_carrier(&sys, &nu, &parse_word(&file.carrier)?, &functions, t.zeta)
        }
        Task::Shadow(_) => {
            let sys = toral(manifest)?;
            let text = read(dir, "shadow.csv")?;
            let mut pts = Vec::new();
            for line in text.lines().skip(1).filter(|l| !l.is_empty()) {
                let f: Vec<&str> = line.split(',').collect();
                if f.len() != 4 {
                    bail!("malformed shadow.csv row `{line}`");
                }
                pts.push([f[1].parse::<f64>()?, f[2].parse::<f64>()?]);
            }
            let periodic = matches!(&manifest.spec.task, Task::Shadow(s) if s.periodic);
            let n = pts.len();
            let steps = if periodic { n } else { n.saturating_sub(1) };
            let residual = (0..steps)
                .map(|i| sys.distance(sys.step_unchecked(pts[i]), pts[(i + 1) % n]))
                .fold(0.0, f64::max);
            Ok(vec![check(
                "true orbit",
                residual <= 1e-10,
                format!("residual {residual:.3e}"),
            )])
        }
    }
}

#[derive(Debug, Deserialize)]
struct OscDerived {
    schedule: Schedule,
    eta: f64,
    anchor_len: u64,
}

/// Rebuilds the orbit from its blocks and recomputes every checkpoint
/// row from the orbit and the chain alone.
fn recheck_oscillate(
    manifest: &RunManifest,
    t: &OscillateTask,
    dir: &Path,
) -> Result<Vec<InvariantResult>> {
    let sys = shift(manifest)?;
    let derived: OscDerived = serde_json::from_value(manifest.derived.clone())?;
    let mut pieces = Vec::new();
    for line in read(dir, "orbit_blocks.csv")?.lines().skip(1).filter(|l| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            bail!("malformed orbit_blocks.csv row `{line}`");
        }
        pieces.push(Piece {
            start: f[0].parse()?,
            repeats: f[1].parse()?,
            word: Arc::from(parse_word(f[2])?),
        });
    }
    let orbit = GluedOrbit::from_pieces(pieces)?;
    let mut checks = Vec::new();

    let prefix = parse_word(read(dir, "orbit_prefix.txt")?.trim())?;
    let same = orbit.materialize(0, prefix.len())? == prefix;
    checks.push(check("orbit prefix", same, format!("{} symbols", prefix.len())));
    let mut junctions_ok = true;
    for p in orbit.pieces() {
        let w: Vec<u8> = (0..p.word.len() * 2.min(p.repeats as usize)).map(|i| p.word[i % p.word.len()]).collect();
        junctions_ok &= sys.is_admissible(&w)?;
        if p.start > 0 {
            junctions_ok &= sys.is_admissible(&orbit.materialize(p.start - 1, 2)?)?;
        }
    }
    checks.push(check("orbit admissible", junctions_ok, format!("{} blocks", orbit.pieces().len())));

    let chain: ChainFile = serde_json::from_str(&read(dir, "chain.json")?)?;
    let family = TestFunctionFamily::cylinders(sys.alphabet_size(), t.family_size);
    let system = System::Shift(sys.clone());
    let text = read(dir, "checkpoints.csv")?;
    let mut prev_b = derived.anchor_len;
    for (row, line) in text.lines().enumerate().skip(1).filter(|(_, l)| !l.is_empty()) {
        let name = format!("checkpoint row {row}");
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            checks.push(check(name, false, "wrong column count"));
            continue;
        }
        let parsed = (|| -> Result<_> {
            let block = BlockRecord {
                n: f[0].parse()?,
                a: f[1].parse()?,
                b: f[2].parse()?,
                k: f[3].parse()?,
                p: f[4].parse()?,
                gap_bound: f[5].parse()?,
            };
            Ok((block, f[6].parse::<f64>()?, f[7].parse::<f64>()?, f[8].parse::<bool>()?))
        })();
        let Ok((block, dist, bound, pass)) = parsed else {
            checks.push(check(name, false, "unparsable row"));
            continue;
        };
        let n = block.n;
        if n == 0 || n > derived.schedule.depth() || n > chain.centers.len() {
            checks.push(check(name, false, format!("level {n} out of range")));
            continue;
        }
        let lvl = derived.schedule.level(n);
        let mut problems = Vec::new();
        if block.b - block.a.min(block.b) != lvl.m * lvl.p {
            problems.push("b_n − a_n ≠ m_n p_n".to_string());
        }
        if block.a < prev_b || block.a - prev_b > lvl.gap || block.gap_bound != lvl.gap {
            problems.push("a_n − b_(n−1) exceeds M_n".to_string());
        }
        prev_b = block.b;
        let center = chain.centers[n - 1].build(&sys)?;
        match evaluate_checkpoint(&system, &orbit, &center, chain.radii[n - 1], derived.eta, &block, &family) {
            Ok(c) => {
                let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1e-300);
                if !close(c.dist_to_center, dist) {
                    problems.push(format!("dist_to_center {dist} ≠ recomputed {}", c.dist_to_center));
                }
                if !close(c.step3_bound, bound) {
                    problems.push(format!("step3_bound {bound} ≠ recomputed {}", c.step3_bound));
                }
                if c.pass != pass || !pass {
                    problems.push(format!("pass = {pass}, recomputed {}", c.pass));
                }
            }
            Err(e) => problems.push(e.to_string()),
        }
        let ok = problems.is_empty();
        checks.push(check(name, ok, if ok { "ok".into() } else { problems.join("; ") }));
    }
    Ok(checks)
}
