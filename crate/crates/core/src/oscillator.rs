//! Points whose empirical measures sweep a prescribed connected set `V` of
//! invariant measures, together with the checks on the emitted orbit.
//!
//! A chain of shrinking balls `B(Y_n, ζ_n)` walks back and forth along `V`.
//! Each center is compiled into a periodic carrier `x_n` of period `p_n`,
//! which is repeated `m_n` times and glued after the previous block, so
//! that the time average at the end of block `n` sits near `Y_n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::compiler::{compile_carrier, Carrier};
use crate::error::{Error, Result};
use crate::measures::{
    oscillation_modulus, weak_star_from_integrals, ConvexCombination, EmpiricalMeasure,
    Integrable, MeasureSpec, SymbolSequence, TestFunction, TestFunctionFamily,
};
use crate::specification::{gap_table_shift, GapTable, GlueStream, GluedOrbit, OrbitSegment};
use crate::systems::{ShiftSystem, System, Word};

/// Default initial radius `ζ_0`.
pub const DEFAULT_ZETA0: f64 = 0.5;

/// The target set `V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VSpec {
    /// Piecewise-linear path through the listed measures.
    Path(Vec<MeasureSpec>),
    /// A finite set of measures; only a single point is connected.
    Points(Vec<MeasureSpec>),
}

/// Closed balls `B(Y_n, ζ_n)` whose centers sweep `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallChain {
    vertices: Vec<ConvexCombination>,
    centers: Vec<ConvexCombination>,
    params: Vec<f64>,
    radii: Vec<f64>,
}

impl BallChain {
    pub fn centers(&self) -> &[ConvexCombination] {
        &self.centers
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Path parameter of each center in `[0, 1]`.
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// The point of `V` at path parameter `t ∈ [0, 1]`.
    pub fn point_at(&self, t: f64) -> Result<ConvexCombination> {
        point_on_path(&self.vertices, t)
    }

    /// True iff every grid parameter `i·ε` lies within `ε` of some center.
    pub fn covers(&self, eps: f64) -> bool {
        let steps = (1.0 / eps).ceil() as usize;
        (0..=steps).all(|i| {
            let t = (i as f64 * eps).min(1.0);
            self.params.iter().any(|&p| (p - t).abs() <= eps + 1e-12)
        })
    }
}

fn point_on_path(vertices: &[ConvexCombination], t: f64) -> Result<ConvexCombination> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Precondition(format!("path parameter {t} outside [0,1]")));
    }
    let legs = vertices.len() - 1;
    if legs == 0 {
        return Ok(vertices[0].clone());
    }
    let pos = t * legs as f64;
    let leg = (pos.floor() as usize).min(legs - 1);
    vertices[leg].interpolate(&vertices[leg + 1], pos - leg as f64)
}

/// Builds `depth` balls with radii `ζ_0/(n+1)` whose centers sweep `V`
/// back and forth, halving the step after every sweep and inserting
/// smaller steps wherever consecutive balls would fail to overlap.
pub fn build_ball_chain(
    system: &ShiftSystem,
    v: &VSpec,
    zeta0: f64,
    depth: usize,
    family: &TestFunctionFamily,
    count: usize,
) -> Result<BallChain> {
    if !(zeta0 > 0.0) {
        return Err(Error::config("zeta0", "must be > 0"));
    }
    if depth == 0 {
        return Err(Error::config("depth", "must be ≥ 1"));
    }
    let vertices: Vec<ConvexCombination> = match v {
        VSpec::Path(ms) if !ms.is_empty() => {
            ms.iter().map(|m| m.build(system)).collect::<Result<_>>()?
        }
        VSpec::Points(ms) if ms.len() == 1 => vec![ms[0].build(system)?],
        VSpec::Points(ms) if ms.len() > 1 => {
            return Err(Error::config(
                "V",
                "a finite set of several measures is disconnected; give a path instead",
            ))
        }
        _ => return Err(Error::config("V", "no measures given")),
    };
    let radii: Vec<f64> = (1..=depth).map(|n| zeta0 / (n + 1) as f64).collect();
    let dist = |a: &ConvexCombination, b: &ConvexCombination| -> Result<f64> {
        Ok(crate::measures::weak_star_distance(a, b, family, count)?.upper())
    };

    let mut params = vec![0.0];
    let mut centers = vec![point_on_path(&vertices, 0.0)?];
    let (mut step, mut dir) = (0.25f64, 1.0f64);
    while centers.len() < depth && vertices.len() > 1 {
        let n = centers.len();
        let t = params[n - 1];
        let mut h = step;
        loop {
            let next = (t + dir * h).clamp(0.0, 1.0);
            let cand = point_on_path(&vertices, next)?;
            if dist(&centers[n - 1], &cand)? <= radii[n - 1] + radii[n] {
                params.push(next);
                centers.push(cand);
                break;
            }
            h /= 2.0;
            if h < 1e-9 {
                return Err(Error::invariant("ball overlap", "step size underflow"));
            }
        }
        let t = params[n];
        if (dir > 0.0 && t >= 1.0) || (dir < 0.0 && t <= 0.0) {
            dir = -dir;
            step /= 2.0;
        }
    }
    while centers.len() < depth {
        params.push(0.0);
        centers.push(vertices[0].clone());
    }
    let chain = BallChain {
        vertices,
        centers,
        params,
        radii,
    };
    for n in 0..depth.saturating_sub(1) {
        let d = dist(&chain.centers[n], &chain.centers[n + 1])?;
        if d > chain.radii[n] + chain.radii[n + 1] {
            return Err(Error::invariant(
                "ball overlap",
                format!("d(Y_{}, Y_{}) = {d} exceeds ζ sum", n + 1, n + 2),
            ));
        }
    }
    Ok(chain)
}

/// How block repetition counts grow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `m_n = 2^n (ā_n + M_{n+1} + p_{n+1})`.
    Paper,
    /// `m_n = ⌈c·n·(ā_n + M_{n+1} + p_{n+1}) / p_n⌉`.
    Desk { c: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleLevel {
    pub n: usize,
    pub p: u64,
    pub gap: u64,
    pub a_bar: u64,
    pub b_bar: u64,
    pub m: u64,
    pub k: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub profile: Profile,
    pub b0: u64,
    pub levels: Vec<ScheduleLevel>,
    /// `2ā_n/(b̄_n − ā_n)` per level.
    pub prefix_ratios: Vec<f64>,
    /// `(p_n + ā_{n−1} + M_n)/(b̄_{n−1} − ā_{n−1})` for `n ≥ 2`.
    pub lookahead_ratios: Vec<f64>,
}

impl Schedule {
    pub fn level(&self, n: usize) -> &ScheduleLevel {
        &self.levels[n - 1]
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Both ratio sequences are nonincreasing along the prefix.
    pub fn ratios_nonincreasing(&self) -> bool {
        let mono = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0]);
        mono(&self.prefix_ratios) && mono(&self.lookahead_ratios)
    }
}

const SCHEDULE_LIMIT: u64 = 1 << 63;

/// The block recurrences `ā_n = b̄_{n−1} + M_n`, `b̄_n = ā_n + m_n p_n`
/// starting from `b̄_0 = b0`. `periods` and `gaps` need `depth + 1` entries.
pub fn build_schedule(
    periods: &[u64],
    gaps: &[u64],
    profile: Profile,
    depth: usize,
    b0: u64,
) -> Result<Schedule> {
    if depth == 0 {
        return Err(Error::config("depth", "must be ≥ 1"));
    }
    if periods.len() < depth + 1 || gaps.len() < depth + 1 {
        return Err(Error::Precondition(format!(
            "need {} periods and gaps for depth {depth}",
            depth + 1
        )));
    }
    if periods.contains(&0) {
        return Err(Error::config("periods", "must be ≥ 1"));
    }
    if let Profile::Desk { c } = profile {
        if !(c >= 1.0 && c.is_finite()) {
            return Err(Error::config("profile.c", "must be ≥ 1"));
        }
    }
    let overflow = |n: usize| Error::ScheduleOverflow {
        depth: n,
        max_feasible: n - 1,
    };
    let mut levels: Vec<ScheduleLevel> = Vec::with_capacity(depth);
    let mut prev_b = b0;
    for n in 1..=depth {
        let (p, gap) = (periods[n - 1], gaps[n - 1]);
        let a_bar = prev_b.checked_add(gap).ok_or_else(|| overflow(n))?;
        let ahead = a_bar
            .checked_add(gaps[n])
            .and_then(|x| x.checked_add(periods[n]))
            .ok_or_else(|| overflow(n))?;
        let m = match profile {
            Profile::Paper => 1u64
                .checked_shl(n as u32)
                .filter(|_| n < 64)
                .and_then(|f| f.checked_mul(ahead)),
            Profile::Desk { c } => {
                let raw = (c * n as f64 * ahead as f64 / p as f64).ceil();
                (raw < SCHEDULE_LIMIT as f64).then_some(raw as u64)
            }
        }
        .ok_or_else(|| overflow(n))?
        .max(1);
        let b_bar = m
            .checked_mul(p)
            .and_then(|x| x.checked_add(a_bar))
            .filter(|&b| b < SCHEDULE_LIMIT)
            .ok_or_else(|| overflow(n))?;
        levels.push(ScheduleLevel {
            n,
            p,
            gap,
            a_bar,
            b_bar,
            m,
            k: n as u32,
        });
        prev_b = b_bar;
    }
    let prefix_ratios: Vec<f64> = levels
        .iter()
        .map(|l| 2.0 * l.a_bar as f64 / (l.b_bar - l.a_bar) as f64)
        .collect();
    let lookahead_ratios: Vec<f64> = levels
        .windows(2)
        .map(|w| {
            (w[1].p + w[0].a_bar + w[1].gap) as f64 / (w[0].b_bar - w[0].a_bar) as f64
        })
        .collect();
    if let Profile::Desk { c } = profile {
        for (i, r) in prefix_ratios.iter().enumerate() {
            let limit = 2.0 / (c * (i + 1) as f64);
            if *r > limit * (1.0 + 1e-12) {
                return Err(Error::invariant(
                    "desk ratio bound",
                    format!("2ā/(b̄−ā) = {r} exceeds 2/(cn) = {limit} at n = {}", i + 1),
                ));
            }
        }
    }
    Ok(Schedule {
        profile,
        b0,
        levels,
        prefix_ratios,
        lookahead_ratios,
    })
}

/// Starting point `x_*` (as a cycle) and radius `δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub cycle: Word,
    pub delta: f64,
}

impl Anchor {
    /// Number of leading symbols forcing `d(x̂, x_*) < δ` once the past
    /// agrees: the smallest `k` with `base^k < δ`.
    pub fn resolution(&self, base: f64) -> usize {
        let k = (self.delta.ln() / base.ln()).floor() + 1.0;
        k.max(1.0) as usize
    }

    pub fn word(&self, base: f64) -> Word {
        let k = self.resolution(base);
        (0..k).map(|i| self.cycle[i % self.cycle.len()]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorConfig {
    pub depth: usize,
    pub profile: Profile,
    /// Number `J` of test functions.
    pub family_size: usize,
    /// Cylinder length of the cover; defaults to the family's locality.
    pub cover_resolution: Option<usize>,
    /// Shadowing scale; defaults to half the cover resolution.
    pub eta: Option<f64>,
    pub anchor: Option<Anchor>,
    pub min_gap_one: bool,
    /// Cap on `b_depth`.
    pub max_orbit_length: Option<u64>,
}

impl OscillatorConfig {
    pub fn new(depth: usize, profile: Profile) -> Self {
        OscillatorConfig {
            depth,
            profile,
            family_size: crate::measures::DEFAULT_FAMILY_SIZE,
            cover_resolution: None,
            eta: None,
            anchor: None,
            min_gap_one: false,
            max_orbit_length: None,
        }
    }
}

/// Per-block record at time `b_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: usize,
    pub a: u64,
    pub b: u64,
    pub k: u32,
    pub p: u64,
    pub gap_bound: u64,
    /// `∫φ_j dδ(x̂)^{b_n}` for `j ≤ J`.
    pub integrals: Vec<f64>,
    /// `d̃_J(δ(x̂)^{b_n}, Y_n)`.
    pub dist_to_center: f64,
    /// The per-function bounds lifted to `d̃_J`.
    pub step3_bound: f64,
    /// Per-function deviations `|∫ξ dν_n − ∫ξ dY_n|` for `ξ ∈ F_n`.
    pub deviations: Vec<f64>,
    pub function_bounds: Vec<f64>,
    pub pass: bool,
}

/// The constructed point and its books.
#[derive(Debug, Clone)]
pub struct OscillationRun {
    pub system: ShiftSystem,
    pub family: TestFunctionFamily,
    pub chain: BallChain,
    pub schedule: Schedule,
    pub table: GapTable,
    pub carriers: Vec<Carrier>,
    pub orbit: GluedOrbit,
    pub checkpoints: Vec<Checkpoint>,
    pub eta: f64,
    pub anchor_len: u64,
    /// `a_n` for `n = 1..=depth+1` (the last one is the tail block).
    pub starts: Vec<u64>,
}

impl OscillationRun {
    pub fn depth(&self) -> usize {
        self.checkpoints.len()
    }

    pub fn count(&self) -> usize {
        self.family.len()
    }

    pub fn a(&self, n: usize) -> u64 {
        self.starts[n - 1]
    }

    pub fn b(&self, n: usize) -> u64 {
        if n == 0 {
            self.anchor_len
        } else {
            self.starts[n - 1] + self.schedule.level(n).m * self.schedule.level(n).p
        }
    }

    /// Number of bookkeeping identity or Step-3 bound violations.
    pub fn violations(&self) -> usize {
        let mut bad = 0;
        for (i, c) in self.checkpoints.iter().enumerate() {
            let n = i + 1;
            let lvl = self.schedule.level(n);
            bad += usize::from(c.b - c.a != lvl.m * lvl.p);
            bad += usize::from(c.a - self.b(n - 1) > lvl.gap);
            bad += usize::from(c.a > lvl.a_bar || c.b > lvl.b_bar);
            bad += c
                .deviations
                .iter()
                .zip(&c.function_bounds)
                .filter(|(d, b)| d > b)
                .count();
            bad += usize::from(!c.pass);
        }
        bad
    }
}

/// Per-function Step-3 bound `ζ_n + w_ξ(ηε_k) + 2a/(b−a)‖ξ‖ + 2‖ξ‖·max(M, m−1)/(b−a)`.
pub fn step3_function_bound(
    system: &System,
    phi: &TestFunction,
    zeta: f64,
    eta_eps: f64,
    a: u64,
    b: u64,
    gap_bound: u64,
) -> Result<f64> {
    let w = oscillation_modulus(system, phi, eta_eps)?;
    let block = (b - a) as f64;
    let overhead = gap_bound.max(phi.locality().saturating_sub(1) as u64) as f64;
    Ok(zeta + w + 2.0 * a as f64 / block * phi.norm() + 2.0 * phi.norm() * overhead / block)
}

/// Position data of one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub n: usize,
    pub a: u64,
    pub b: u64,
    pub k: u32,
    pub p: u64,
    pub gap_bound: u64,
}

/// Measures `δ(x)^{b_n}` against `Y_n` on the whole family and evaluates
/// the Step-3 bounds for `ξ ∈ F_n`.
pub fn evaluate_checkpoint<S: SymbolSequence + ?Sized>(
    system: &System,
    orbit: &S,
    center: &ConvexCombination,
    zeta: f64,
    eta_eps: f64,
    block: &BlockRecord,
    family: &TestFunctionFamily,
) -> Result<Checkpoint> {
    let &BlockRecord { n, a, b, k, p, gap_bound } = block;
    if !(a < b) {
        return Err(Error::Precondition(format!("empty block [{a}, {b})")));
    }
    let count = family.len();
    let integrals = EmpiricalMeasure::prefix(orbit, b)?.integrals(family, count)?;
    let target = center.integrals(family, count)?;
    let dist = weak_star_from_integrals(&integrals, &target, family, count)?.value;
    let mut deviations = Vec::new();
    let mut function_bounds = Vec::new();
    let mut bound = 0.0;
    let mut weight = 1.0;
    for (j, phi) in family.functions().iter().enumerate() {
        weight *= 0.5;
        if j < n {
            let fb = step3_function_bound(system, phi, zeta, eta_eps, a, b, gap_bound)?;
            deviations.push((integrals[j] - target[j]).abs());
            function_bounds.push(fb);
            bound += weight * fb.min(2.0 * phi.norm()) / phi.norm();
        } else {
            bound += weight * 2.0;
        }
    }
    let pass = dist <= bound && deviations.iter().zip(&function_bounds).all(|(d, fb)| d <= fb);
    Ok(Checkpoint {
        n,
        a,
        b,
        k,
        p,
        gap_bound,
        integrals,
        dist_to_center: dist,
        step3_bound: bound,
        deviations,
        function_bounds,
        pass,
    })
}

/// Runs the construction up to `config.depth` blocks.
pub fn construct_point(
    system: &ShiftSystem,
    chain: &BallChain,
    config: &OscillatorConfig,
) -> Result<OscillationRun> {
    let depth = config.depth;
    if depth == 0 {
        return Err(Error::config("depth", "must be ≥ 1"));
    }
    if chain.len() < depth + 1 {
        return Err(Error::Precondition(format!(
            "ball chain has {} centers, need depth + 1 = {}",
            chain.len(),
            depth + 1
        )));
    }
    let count = config.family_size;
    if count == 0 {
        return Err(Error::config("family_size", "must be ≥ 1"));
    }
    let family = TestFunctionFamily::cylinders(system.alphabet_size(), count);
    let resolution = config.cover_resolution.unwrap_or(family.max_locality()).max(1);
    let table = gap_table_shift(system, resolution)?.with_min_gap_one(config.min_gap_one);
    let base = system.metric_base();
    let eta = config.eta.unwrap_or(base.powi(resolution as i32) / 2.0);
    if !(eta > 0.0) {
        return Err(Error::config("eta", "must be > 0"));
    }
    let sys = System::Shift(system.clone());

    let mut carriers = Vec::with_capacity(depth + 1);
    for n in 1..=depth + 1 {
        let f_n = &family.functions()[..n.min(count)];
        carriers.push(compile_carrier(
            system,
            &chain.centers()[n - 1],
            chain.radii()[n - 1],
            f_n,
            &table,
        )?);
    }

    let anchor_word = config.anchor.as_ref().map(|a| a.word(base));
    let b0 = anchor_word.as_ref().map_or(0, |w| w.len() as u64);
    let periods: Vec<u64> = carriers.iter().map(Carrier::period).collect();
    let gaps = vec![table.value; depth + 1];
    let schedule = build_schedule(&periods, &gaps, config.profile, depth, b0)?;
    if let Some(cap) = config.max_orbit_length {
        let total = schedule.level(depth).b_bar;
        if total > cap {
            let fits = schedule.levels.iter().take_while(|l| l.b_bar <= cap).count();
            return Err(Error::ResourceCap {
                length: total,
                cap,
                max_depth: fits,
            });
        }
    }

    let mut segments = Vec::with_capacity(depth + 2);
    if let Some(w) = &anchor_word {
        segments.push(OrbitSegment::new(w.clone(), 1, 1)?);
    }
    for n in 1..=depth {
        let lvl = schedule.level(n);
        segments.push(OrbitSegment::new(carriers[n - 1].word.clone(), lvl.m, lvl.k)?);
    }
    let tail = &carriers[depth];
    let tail_reps = (resolution as u64).div_ceil(tail.period()).max(1) + 1;
    segments.push(OrbitSegment::new(tail.word.clone(), tail_reps, depth as u32 + 1)?);

    let mut stream = GlueStream::new(system.clone(), table.clone(), segments.into_iter());
    if let Some(a) = &config.anchor {
        stream.set_past(a.cycle.clone())?;
    }
    while stream.advance_block()?.is_some() {}
    let orbit = stream.into_orbit();
    let skip = usize::from(anchor_word.is_some());
    let starts: Vec<u64> = orbit.offsets()[skip..].to_vec();

    let mut checkpoints = Vec::with_capacity(depth);
    let mut prev_b = b0;
    for n in 1..=depth {
        let lvl = schedule.level(n);
        let a = starts[n - 1];
        let b = a + lvl.m * lvl.p;
        if a - prev_b > lvl.gap || a > lvl.a_bar || b > lvl.b_bar {
            return Err(Error::invariant(
                "block offsets",
                format!("n = {n}: a = {a}, b = {b}, previous b = {prev_b}, M = {}", lvl.gap),
            ));
        }
        if orbit.segment_lengths()[n - 1 + skip] != b - a {
            return Err(Error::invariant("block length", format!("n = {n}")));
        }
        let block = BlockRecord {
            n,
            a,
            b,
            k: lvl.k,
            p: lvl.p,
            gap_bound: lvl.gap,
        };
        let zeta = chain.radii()[n - 1];
        checkpoints.push(evaluate_checkpoint(
            &sys,
            &orbit,
            &chain.centers()[n - 1],
            zeta,
            eta,
            &block,
            &family,
        )?);
        prev_b = b;
    }
    Ok(OscillationRun {
        system: system.clone(),
        family,
        chain: chain.clone(),
        schedule,
        table,
        carriers,
        orbit,
        checkpoints,
        eta,
        anchor_len: b0,
        starts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageEntry {
    pub target: usize,
    pub best_checkpoint: usize,
    /// Certified upper bound on `d̃` at the best checkpoint.
    pub distance: f64,
    pub satisfied: bool,
    pub blocking: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub entries: Vec<CoverageEntry>,
    pub worst: f64,
    pub pass: bool,
}

/// For each target finds the checkpoint `b_n` whose empirical measure is
/// closest in `d̃` (including the truncation bound).
pub fn verify_v_subset_vf(
    run: &OscillationRun,
    targets: &[ConvexCombination],
    tol: f64,
) -> Result<CoverageReport> {
    let count = run.count();
    let mut entries = Vec::with_capacity(targets.len());
    for (ti, target) in targets.iter().enumerate() {
        let tv = target.integrals(&run.family, count)?;
        let mut best = (usize::MAX, f64::INFINITY);
        for c in &run.checkpoints {
            let d = weak_star_from_integrals(&c.integrals, &tv, &run.family, count)?.upper();
            if d < best.1 {
                best = (c.n, d);
            }
        }
        let satisfied = best.1 <= tol;
        let blocking = (!satisfied).then(|| {
            let c = &run.checkpoints[best.0 - 1];
            let trunc = 0.5f64.powi(count as i32 - 1);
            if trunc > tol {
                format!("truncation bound {trunc:.3e} exceeds tolerance")
            } else {
                format!(
                    "closest checkpoint n = {} has Step-3 bound {:.3e} (ζ_n = {:.3e}, prefix ratio {:.3e})",
                    c.n,
                    c.step3_bound,
                    run.chain.radii()[c.n - 1],
                    2.0 * c.a as f64 / (c.b - c.a) as f64
                )
            }
        });
        entries.push(CoverageEntry {
            target: ti,
            best_checkpoint: best.0,
            distance: best.1,
            satisfied,
            blocking,
        });
    }
    let worst = entries.iter().map(|e| e.distance).fold(0.0, f64::max);
    Ok(CoverageReport {
        pass: entries.iter().all(|e| e.satisfied),
        entries,
        worst,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationEntry {
    pub time: u64,
    pub i: usize,
    pub alpha: f64,
    pub l: u64,
    /// `max_ξ |∫ξ dδ(x̂)^N − ∫ξ dρ_N| / ‖ξ‖` over `ξ ∈ F_{i−1}`.
    pub deviation: f64,
    pub deviation_ok: bool,
    pub chain_distance: f64,
    pub chain_bound: f64,
    pub chain_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub entries: Vec<InterpolationEntry>,
    pub max_deviation: f64,
    pub pass: bool,
}

/// Checks that every sampled time average stays near the interpolant
/// `ρ_N = αY_{i−1} + (1−α)Y_i` and that `ρ_N` stays near the chain.
pub fn verify_vf_subset_v(
    run: &OscillationRun,
    times: &[u64],
    tol: f64,
) -> Result<InterpolationReport> {
    let depth = run.depth();
    let count = run.count();
    let mut entries = Vec::with_capacity(times.len());
    for &nt in times {
        if nt < run.b(1) {
            return Err(Error::Precondition(format!("time {nt} precedes b_1 = {}", run.b(1))));
        }
        let i = (1..=depth + 1)
            .take_while(|&i| run.b(i - 1) <= nt)
            .last()
            .expect("b_0 ≤ b_1 ≤ N");
        if i > depth + 1 || (i == depth + 1 && nt > run.a(depth + 1)) {
            return Err(Error::DemandMoreSymbols {
                needed: nt,
                available: run.b(depth),
            });
        }
        let (a_prev, b_prev) = (run.a(i - 1), run.b(i - 1));
        let a_i = run.a(i);
        let (alpha, l) = if nt <= a_i {
            (1.0, 0)
        } else {
            let p_i = run.carriers[i - 1].period();
            let l = (nt - a_i) % p_i;
            let block = (b_prev - a_prev) as f64;
            (block / (block + (nt - a_i - l) as f64), l)
        };
        let y_prev = &run.chain.centers()[i - 2];
        let y_i = &run.chain.centers()[i - 1];
        let emp = EmpiricalMeasure::prefix(&run.orbit, nt)?;
        let f = &run.family.functions()[..(i - 1).min(count)];
        let mut deviation: f64 = 0.0;
        for phi in f {
            let rho = alpha * y_prev.integrate(phi)? + (1.0 - alpha) * y_i.integrate(phi)?;
            deviation = deviation.max((emp.integrate(phi)? - rho).abs() / phi.norm());
        }
        let rho = y_prev.interpolate(y_i, 1.0 - alpha)?;
        let rv = rho.integrals(&run.family, count)?;
        let mut chain_distance = f64::INFINITY;
        for y in [y_prev, y_i] {
            let yv = y.integrals(&run.family, count)?;
            chain_distance =
                chain_distance.min(weak_star_from_integrals(&rv, &yv, &run.family, count)?.value);
        }
        let chain_bound = 2.0 * run.chain.radii()[i - 2] + 2.0 * run.chain.radii()[i - 1];
        entries.push(InterpolationEntry {
            time: nt,
            i,
            alpha,
            l,
            deviation,
            deviation_ok: deviation <= 2.0 * tol,
            chain_distance,
            chain_bound,
            chain_ok: chain_distance <= chain_bound,
        });
    }
    let max_deviation = entries.iter().map(|e| e.deviation).fold(0.0, f64::max);
    Ok(InterpolationReport {
        pass: entries.iter().all(|e| e.deviation_ok && e.chain_ok),
        entries,
        max_deviation,
    })
}

/// `count` times drawn log-uniformly from `[b_1, b_depth]`.
pub fn sample_times(run: &OscillationRun, count: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (run.b(1) as f64, run.b(run.depth()) as f64);
    (0..count)
        .map(|_| {
            let u: f64 = rng.gen();
            ((lo.ln() + u * (hi.ln() - lo.ln())).exp().round() as u64)
                .clamp(run.b(1), run.b(run.depth()))
        })
        .collect()
}

/// Longest stretch of times scanned one by one.
pub const PCN_SCAN_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcnResult {
    pub member: bool,
    pub witness: Option<u64>,
    /// The whole range `(N0, N_max]` was scanned.
    pub exhaustive: bool,
}

/// Whether some `N ∈ (n0, n_max]` has `d̃(δ(x)^N, center) ≤ radius`,
/// certified with the truncation bound. Up to `scan_limit` times (at most
/// [`PCN_SCAN_LIMIT`]) are scanned exactly; beyond that only `candidates`
/// are tried.
#[allow(clippy::too_many_arguments)]
pub fn pcn_membership<S, C>(
    x: &S,
    center: &C,
    radius: f64,
    n0: u64,
    n_max: u64,
    family: &TestFunctionFamily,
    count: usize,
    scan_limit: u64,
    candidates: &[u64],
) -> Result<PcnResult>
where
    S: SymbolSequence + ?Sized,
    C: Integrable + ?Sized,
{
    if n_max <= n0 {
        return Err(Error::Precondition("N_max must exceed N0".into()));
    }
    let target = center.integrals(family, count)?;
    let words: Vec<&[u8]> = family.functions()[..count]
        .iter()
        .map(|f| match f {
            TestFunction::Cylinder(w) => Ok(w.as_slice()),
            _ => Err(Error::Precondition("shift functions only".into())),
        })
        .collect::<Result<_>>()?;
    let check = |n: u64, counts: &[u64]| -> Result<bool> {
        let v: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Ok(weak_star_from_integrals(&v, &target, family, count)?.upper() <= radius)
    };
    let scan_end = n_max.min(n0.saturating_add(scan_limit.clamp(1, PCN_SCAN_LIMIT)));
    let start = n0 + 1;
    let mut counts: Vec<u64> = words
        .iter()
        .map(|w| x.count_occurrences(w, 0, start))
        .collect::<Result<_>>()?;
    let loc = words.iter().map(|w| w.len()).max().unwrap_or(1);
    let mut window: std::collections::VecDeque<u8> = (0..loc as u64)
        .map(|t| x.symbol(start + t))
        .collect::<Result<_>>()?;
    let mut n = start;
    loop {
        if check(n, &counts)? {
            return Ok(PcnResult {
                member: true,
                witness: Some(n),
                exhaustive: true,
            });
        }
        if n >= scan_end {
            break;
        }
        // Move from N to N + 1: position N enters the window.
        for (c, w) in counts.iter_mut().zip(&words) {
            *c += u64::from(w.iter().zip(&window).all(|(a, b)| a == b));
        }
        window.pop_front();
        window.push_back(x.symbol(n + loc as u64)?);
        n += 1;
    }
    let exhaustive = scan_end == n_max;
    for &cand in candidates.iter().filter(|&&c| c > scan_end && c <= n_max) {
        let cs: Vec<u64> = words
            .iter()
            .map(|w| x.count_occurrences(w, 0, cand))
            .collect::<Result<_>>()?;
        if check(cand, &cs)? {
            return Ok(PcnResult {
                member: true,
                witness: Some(cand),
                exhaustive,
            });
        }
    }
    Ok(PcnResult {
        member: false,
        witness: None,
        exhaustive,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedAverage {
    pub n: usize,
    pub time: u64,
    pub average: f64,
    /// Step-3 bound on `|average − ∫φ dY_n|` when `φ ∈ F_n`.
    pub error_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrregularityWitness {
    pub first: Vec<AlignedAverage>,
    pub second: Vec<AlignedAverage>,
    pub lim1: f64,
    pub lim2: f64,
    pub gap: f64,
    pub error_bound: Option<f64>,
}

/// Birkhoff averages of `φ` along the checkpoints whose centers coincide
/// with `mu1` and with `mu2`.
pub fn irregularity_witness(
    run: &OscillationRun,
    phi: &TestFunction,
    mu1: &ConvexCombination,
    mu2: &ConvexCombination,
) -> Result<IrregularityWitness> {
    let (t1, t2) = (mu1.integrate(phi)?, mu2.integrate(phi)?);
    if (t1 - t2).abs() < 1e-12 {
        return Err(Error::DegenerateWitness(format!(
            "{} has equal integrals {t1} against both targets; try another function",
            phi.id()
        )));
    }
    let count = run.count();
    let sys = System::Shift(run.system.clone());
    let j = run.family.functions().iter().position(|f| f == phi);
    let aligned = |mu: &ConvexCombination| -> Result<Vec<AlignedAverage>> {
        let mv = mu.integrals(&run.family, count)?;
        let mut out = Vec::new();
        for (c, y) in run.checkpoints.iter().zip(run.chain.centers()) {
            let yv = y.integrals(&run.family, count)?;
            if weak_star_from_integrals(&mv, &yv, &run.family, count)?.value > 1e-12 {
                continue;
            }
            let average = EmpiricalMeasure::prefix(&run.orbit, c.b)?.integrate(phi)?;
            let error_bound = match j {
                Some(j) if j < c.n => Some(step3_function_bound(
                    &sys,
                    phi,
                    run.chain.radii()[c.n - 1],
                    run.eta,
                    c.a,
                    c.b,
                    c.gap_bound,
                )?),
                _ => None,
            };
            out.push(AlignedAverage {
                n: c.n,
                time: c.b,
                average,
                error_bound,
            });
        }
        Ok(out)
    };
    let (first, second) = (aligned(mu1)?, aligned(mu2)?);
    let (Some(l1), Some(l2)) = (first.last(), second.last()) else {
        return Err(Error::DegenerateWitness(
            "a target is never visited by the chain's checkpoints".into(),
        ));
    };
    let error_bound = l1.error_bound.zip(l2.error_bound).map(|(a, b)| a + b);
    Ok(IrregularityWitness {
        lim1: l1.average,
        lim2: l2.average,
        gap: (l1.average - l2.average).abs(),
        error_bound,
        first,
        second,
    })
}
