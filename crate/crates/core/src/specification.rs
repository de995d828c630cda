//! Gap tables and gluing of orbit segments.
//!
//! Symbolic gluing concatenates segments with shortest bridge words; the
//! result is held as a short list of pieces `(start, word, repeats)` so that
//! orbits far longer than memory can still be queried symbol by symbol or
//! through exact cylinder counts.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::SymbolSequence;
use crate::shadowing::{shadow_toral, PseudoOrbit};
use crate::systems::{
    lift_centered, reduce_mod1, BlockFiltration, ShiftSystem, Symbol, ToralSystem, TorusPoint, Word,
};

/// Uniform bound `M ≥ M_{k,ℓ}` on gluing gaps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapTable {
    pub value: u64,
    pub resolution: usize,
    pub provenance: String,
    pub min_gap_one: bool,
}

impl GapTable {
    /// `M_{k,ℓ}`; the same for every pair of levels.
    pub fn bound(&self, _from_level: u32, _to_level: u32) -> u64 {
        self.value
    }

    pub fn with_min_gap_one(mut self, on: bool) -> Self {
        self.min_gap_one = on;
        self
    }
}

/// `M = max_{u,w} min{h ≥ 1 : some point has x_{[0,r)} = u and x_{[h,h+r)} = w}`
/// over admissible words of length `r = resolution`.
pub fn gap_table_shift(system: &ShiftSystem, resolution: usize) -> Result<GapTable> {
    if resolution == 0 {
        return Err(Error::config("cover_resolution", "cylinder length must be ≥ 1"));
    }
    let n = system.alphabet_size();
    let walk: Vec<Vec<usize>> = (0..n as Symbol)
        .map(|a| (0..n as Symbol).map(|b| system.min_walk(a, b)).collect())
        .collect();
    let words = admissible_words(system, resolution);
    let r = resolution;
    let mut worst = 0usize;
    for u in &words {
        for w in &words {
            let overlap = (1..r).find(|&h| u[h..] == w[..r - h]);
            let x = overlap.unwrap_or(r - 1 + walk[u[r - 1] as usize][w[0] as usize]);
            worst = worst.max(x);
        }
    }
    Ok(GapTable {
        value: worst as u64,
        resolution,
        provenance: format!("cylinders of length {resolution} ({} admissible)", words.len()),
        min_gap_one: false,
    })
}

pub fn admissible_words(system: &ShiftSystem, len: usize) -> Vec<Word> {
    let n = system.alphabet_size() as Symbol;
    let mut words: Vec<Word> = (0..n).map(|s| vec![s]).collect();
    for _ in 1..len {
        words = words
            .into_iter()
            .flat_map(|w| {
                let last = *w.last().expect("nonempty");
                (0..n).filter(move |&s| system.allows(last, s)).map(move |s| {
                    let mut v = w.clone();
                    v.push(s);
                    v
                })
            })
            .collect();
    }
    words
}

/// Gap table over the `q × q` grid of boxes: `M = max_{i,j} min{h ≥ 1 :
/// L^h B_j ∩ B_i has positive area}`, computed exactly in integer arithmetic.
pub fn gap_table_toral(system: &ToralSystem, grid: usize) -> Result<GapTable> {
    const MAX_STEPS: usize = 64;
    if grid == 0 {
        return Err(Error::config("cover_resolution", "grid size must be ≥ 1"));
    }
    let q = grid as i128;
    let boxes = grid * grid;
    let mut first_hit = vec![0usize; boxes * boxes];
    let mut unresolved = boxes * boxes;
    let base = system.matrix();
    let mut power = [[1i128, 0], [0, 1]];
    for h in 1..=MAX_STEPS {
        power = mat_mul(power, base);
        // Image of the unit cell (scaled by q) under L^h.
        let corners = [[0, 0], [1, 0], [1, 1], [0, 1]].map(|c| mat_vec(power, c));
        for j in 0..boxes {
            let off = mat_vec(power, [(j % grid) as i128, (j / grid) as i128]);
            let poly = corners.map(|c| [c[0] + off[0], c[1] + off[1]]);
            for cell in cells_hit(&poly) {
                let i = (cell[0].rem_euclid(q) + cell[1].rem_euclid(q) * q) as usize;
                let slot = &mut first_hit[j * boxes + i];
                if *slot == 0 {
                    *slot = h;
                    unresolved -= 1;
                }
            }
        }
        if unresolved == 0 {
            let value = *first_hit.iter().max().expect("nonempty") as u64;
            return Ok(GapTable {
                value,
                resolution: grid,
                provenance: format!("{grid}x{grid} grid boxes, exact image overlap"),
                min_gap_one: false,
            });
        }
    }
    Err(Error::config(
        "cover_resolution",
        format!("{unresolved} box pairs unreachable within {MAX_STEPS} steps"),
    ))
}

fn mat_mul(a: [[i128; 2]; 2], b: [[i64; 2]; 2]) -> [[i128; 2]; 2] {
    let b = b.map(|r| r.map(i128::from));
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn mat_vec(a: [[i128; 2]; 2], v: [i128; 2]) -> [i128; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

/// Unit cells `[c, c+1)²` whose interior meets the interior of the convex
/// quadrilateral `poly`.
fn cells_hit(poly: &[[i128; 2]; 4]) -> Vec<[i128; 2]> {
    let xmin = poly.iter().map(|p| p[0]).min().expect("4 corners");
    let xmax = poly.iter().map(|p| p[0]).max().expect("4 corners");
    let ymin = poly.iter().map(|p| p[1]).min().expect("4 corners");
    let ymax = poly.iter().map(|p| p[1]).max().expect("4 corners");
    let mut hit = Vec::new();
    for cx in xmin..xmax {
        for cy in ymin..ymax {
            let cell = [[cx, cy], [cx + 1, cy], [cx + 1, cy + 1], [cx, cy + 1]];
            if interiors_meet(poly, &cell) {
                hit.push([cx, cy]);
            }
        }
    }
    hit
}

fn interiors_meet(a: &[[i128; 2]; 4], b: &[[i128; 2]; 4]) -> bool {
    let axes = a
        .iter()
        .zip(a.iter().cycle().skip(1))
        .chain(b.iter().zip(b.iter().cycle().skip(1)))
        .map(|(p, q)| [q[1] - p[1], p[0] - q[0]]);
    for n in axes {
        let proj = |poly: &[[i128; 2]; 4]| {
            let vals = poly.map(|p| p[0] * n[0] + p[1] * n[1]);
            (*vals.iter().min().expect("4"), *vals.iter().max().expect("4"))
        };
        let ((amin, amax), (bmin, bmax)) = (proj(a), proj(b));
        if amax <= bmin || bmax <= amin {
            return false;
        }
    }
    true
}

/// An orbit segment `x_s, σx_s, …` given as `repeats` copies of `word`,
/// ending in block level `level`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitSegment {
    pub word: Arc<[Symbol]>,
    pub repeats: u64,
    pub level: u32,
}

impl OrbitSegment {
    pub fn new(word: impl Into<Arc<[Symbol]>>, repeats: u64, level: u32) -> Result<Self> {
        let word = word.into();
        if word.is_empty() || repeats == 0 {
            return Err(Error::Precondition("segment length must be ≥ 1".into()));
        }
        Ok(OrbitSegment {
            word,
            repeats,
            level,
        })
    }

    pub fn from_word(word: Word) -> Result<Self> {
        Self::new(word, 1, 1)
    }

    pub fn len(&self) -> u64 {
        self.word.len() as u64 * self.repeats
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn first(&self) -> Symbol {
        self.word[0]
    }

    fn last(&self) -> Symbol {
        self.word[self.word.len() - 1]
    }

    fn check(&self, system: &ShiftSystem) -> Result<()> {
        system.check_symbols(&self.word)?;
        if let Some(e) = system.first_violation(&self.word) {
            return Err(e);
        }
        if self.repeats > 1 && !system.allows(self.last(), self.first()) {
            return Err(Error::Inadmissible {
                position: self.word.len() - 1,
                from: self.last(),
                to: self.first(),
            });
        }
        Ok(())
    }
}

/// A maximal run of one repeated word inside a glued orbit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub start: u64,
    pub word: Arc<[Symbol]>,
    pub repeats: u64,
}

impl Piece {
    fn end(&self) -> u64 {
        self.start + self.word.len() as u64 * self.repeats
    }
}

/// A glued point, as pieces laid end to end from coordinate 0.
///
/// Periodic orbits repeat their pieces with period `len`; otherwise the
/// orbit is a finite prefix and reading past `len` fails. Negative
/// coordinates come from `past`, read as a cycle ending at coordinate −1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GluedOrbit {
    pieces: Vec<Piece>,
    starts: Vec<u64>,
    offsets: Vec<u64>,
    segment_lengths: Vec<u64>,
    gaps: Vec<u64>,
    len: u64,
    periodic: bool,
    past: Option<Word>,
}

impl GluedOrbit {
    fn empty() -> Self {
        GluedOrbit {
            pieces: Vec::new(),
            starts: Vec::new(),
            offsets: Vec::new(),
            segment_lengths: Vec::new(),
            gaps: Vec::new(),
            len: 0,
            periodic: false,
            past: None,
        }
    }

    fn push_piece(&mut self, word: Arc<[Symbol]>, repeats: u64) {
        if word.is_empty() || repeats == 0 {
            return;
        }
        let start = self.len;
        self.len = start
            .checked_add(word.len() as u64 * repeats)
            .expect("glued orbit length overflows u64");
        self.starts.push(start);
        self.pieces.push(Piece {
            start,
            word,
            repeats,
        });
    }

    fn push_segment(&mut self, seg: &OrbitSegment) {
        self.offsets.push(self.len);
        self.segment_lengths.push(seg.len());
        self.push_piece(seg.word.clone(), seg.repeats);
    }

    /// Rebuilds a finite (non-periodic) orbit from stored pieces, which
    /// must tile `[0, len)` in order. Segment offsets are not recovered.
    pub fn from_pieces(pieces: impl IntoIterator<Item = Piece>) -> Result<Self> {
        let mut orbit = GluedOrbit::empty();
        for p in pieces {
            if p.start != orbit.len {
                return Err(Error::Parse(format!(
                    "piece starts at {} but the orbit has length {}",
                    p.start, orbit.len
                )));
            }
            if p.word.is_empty() || p.repeats == 0 {
                return Err(Error::Parse(format!("empty piece at {}", p.start)));
            }
            orbit.push_piece(p.word, p.repeats);
        }
        Ok(orbit)
    }

    /// Segment start positions `c_0 < c_1 < …`.
    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn segment_lengths(&self) -> &[u64] {
        &self.segment_lengths
    }

    /// Bridge length after each segment (the last entry closes the period
    /// for periodic orbits).
    pub fn gaps(&self) -> &[u64] {
        &self.gaps
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The period when the orbit is periodic.
    pub fn period(&self) -> Option<u64> {
        self.periodic.then_some(self.len)
    }

    pub fn past(&self) -> Option<&[Symbol]> {
        self.past.as_deref()
    }

    /// Sets the cycle read at negative coordinates; its last symbol must
    /// lead into coordinate 0.
    pub fn set_past(&mut self, system: &ShiftSystem, past: Word) -> Result<()> {
        if past.is_empty() {
            return Err(Error::Precondition("past cycle must be nonempty".into()));
        }
        if !system.is_admissible_cycle(&past)? {
            return Err(Error::Precondition("past cycle is not admissible".into()));
        }
        if let Ok(first) = self.symbol(0) {
            let last = past[past.len() - 1];
            if !system.allows(last, first) {
                return Err(Error::Inadmissible {
                    position: 0,
                    from: last,
                    to: first,
                });
            }
        }
        self.past = Some(past);
        Ok(())
    }

    fn piece_index(&self, i: u64) -> usize {
        self.starts.partition_point(|&s| s <= i) - 1
    }

    /// Coordinate `i`, negative indices reading the past.
    pub fn coordinate(&self, i: i64) -> Result<Symbol> {
        if i < 0 {
            return match &self.past {
                Some(p) => Ok(p[(i.rem_euclid(p.len() as i64)) as usize]),
                None if self.periodic && self.len > 0 => {
                    self.symbol(i.rem_euclid(self.len as i64) as u64)
                }
                None => Err(Error::DemandMoreSymbols {
                    needed: i.unsigned_abs(),
                    available: 0,
                }),
            };
        }
        self.symbol(i as u64)
    }

    /// Symbols `[start, start + len)`.
    pub fn materialize(&self, start: u64, len: usize) -> Result<Word> {
        (start..start + len as u64).map(|i| self.symbol(i)).collect()
    }

    fn check_window(&self, end: u64) -> Result<()> {
        if !self.periodic && end > self.len {
            return Err(Error::DemandMoreSymbols {
                needed: end,
                available: self.len,
            });
        }
        Ok(())
    }

    /// Occurrences of `w` at positions in `[start, end)` with `end ≤ len`;
    /// windows may run past `len` when periodic.
    fn count_within(&self, w: &[Symbol], start: u64, end: u64) -> Result<u64> {
        let m = w.len() as u64;
        let mut total = 0;
        let mut k = self.piece_index(start);
        while k < self.pieces.len() && self.pieces[k].start < end {
            let p = &self.pieces[k];
            let (lo, hi) = (start.max(p.start), end.min(p.end()));
            let fit_hi = hi.min((p.end() + 1).saturating_sub(m)).max(lo);
            if fit_hi > lo {
                total += cyclic_hits(&p.word, w, lo - p.start, fit_hi - p.start);
            }
            for i in fit_hi..hi {
                let mut hit = true;
                for (t, &s) in w.iter().enumerate() {
                    if self.symbol(i + t as u64)? != s {
                        hit = false;
                        break;
                    }
                }
                total += hit as u64;
            }
            k += 1;
        }
        Ok(total)
    }
}

/// Number of offsets `o ∈ [a, b)` at which the periodic extension of
/// `word` starts with `w`.
fn cyclic_hits(word: &[Symbol], w: &[Symbol], a: u64, b: u64) -> u64 {
    let l = word.len();
    let mut prefix = Vec::with_capacity(l + 1);
    prefix.push(0u64);
    for o in 0..l {
        let hit = w.iter().enumerate().all(|(t, &s)| word[(o + t) % l] == s);
        prefix.push(prefix[o] + hit as u64);
    }
    let upto = |x: u64| (x / l as u64) * prefix[l] + prefix[(x % l as u64) as usize];
    upto(b) - upto(a)
}

impl SymbolSequence for GluedOrbit {
    fn symbol(&self, i: u64) -> Result<Symbol> {
        let i = if self.periodic && self.len > 0 {
            i % self.len
        } else {
            i
        };
        if i >= self.len {
            return Err(Error::DemandMoreSymbols {
                needed: i + 1,
                available: self.len,
            });
        }
        let p = &self.pieces[self.piece_index(i)];
        Ok(p.word[((i - p.start) % p.word.len() as u64) as usize])
    }

    fn available(&self) -> Option<u64> {
        if self.periodic {
            None
        } else {
            Some(self.len)
        }
    }

    fn count_occurrences(&self, w: &[Symbol], start: u64, end: u64) -> Result<u64> {
        if end <= start {
            return Ok(0);
        }
        if w.is_empty() {
            return Ok(end - start);
        }
        self.check_window(end + w.len() as u64 - 1)?;
        if !self.periodic {
            return self.count_within(w, start, end);
        }
        let upto = |x: u64| -> Result<u64> {
            let (q, r) = (x / self.len, x % self.len);
            let full = if q > 0 { self.count_within(w, 0, self.len)? } else { 0 };
            Ok(q * full + self.count_within(w, 0, r)?)
        };
        Ok(upto(end)? - upto(start)?)
    }
}

/// Glues segments into one periodic point; the wrap junction is bridged.
pub fn glue_finite(
    system: &ShiftSystem,
    segments: &[OrbitSegment],
    table: &GapTable,
) -> Result<GluedOrbit> {
    if segments.is_empty() {
        return Err(Error::Precondition("no segments to glue".into()));
    }
    let mut orbit = GluedOrbit::empty();
    for (i, seg) in segments.iter().enumerate() {
        seg.check(system)?;
        orbit.push_segment(seg);
        let next = &segments[(i + 1) % segments.len()];
        push_bridge(system, &mut orbit, seg, next, table)?;
    }
    orbit.periodic = true;
    Ok(orbit)
}

fn push_bridge(
    system: &ShiftSystem,
    orbit: &mut GluedOrbit,
    from: &OrbitSegment,
    to: &OrbitSegment,
    table: &GapTable,
) -> Result<()> {
    let bridge = system.connect_min(from.last(), to.first(), usize::from(table.min_gap_one));
    let gap = bridge.len() as u64;
    let bound = table.bound(from.level, to.level);
    if gap > bound {
        return Err(Error::invariant(
            "gap bound",
            format!("bridge of length {gap} exceeds M = {bound}"),
        ));
    }
    orbit.gaps.push(gap);
    orbit.push_piece(bridge.into(), 1);
    Ok(())
}

/// Lazily glues an unbounded supply of segments.
///
/// Each call to [`GlueStream::advance_block`] fixes one more bridge and
/// segment; symbols already emitted are never revised.
#[derive(Debug, Clone)]
pub struct GlueStream<I: Iterator<Item = OrbitSegment>> {
    system: ShiftSystem,
    table: GapTable,
    source: I,
    orbit: GluedOrbit,
    last: Option<OrbitSegment>,
    cursor: u64,
    exhausted: bool,
}

impl<I: Iterator<Item = OrbitSegment>> GlueStream<I> {
    pub fn new(system: ShiftSystem, table: GapTable, source: I) -> Self {
        GlueStream {
            system,
            table,
            source,
            orbit: GluedOrbit::empty(),
            last: None,
            cursor: 0,
            exhausted: false,
        }
    }

    /// Appends the next segment (and the bridge leading into it); returns
    /// its offset, or `None` when the supplier is exhausted.
    pub fn advance_block(&mut self) -> Result<Option<u64>> {
        if self.exhausted {
            return Ok(None);
        }
        let Some(seg) = self.source.next() else {
            self.exhausted = true;
            return Ok(None);
        };
        seg.check(&self.system)?;
        if let Some(prev) = self.last.take() {
            push_bridge(&self.system, &mut self.orbit, &prev, &seg, &self.table)?;
        } else if let Some(past) = &self.orbit.past {
            let last = past[past.len() - 1];
            if !self.system.allows(last, seg.first()) {
                return Err(Error::Inadmissible {
                    position: 0,
                    from: last,
                    to: seg.first(),
                });
            }
        }
        self.orbit.push_segment(&seg);
        let offset = self.orbit.len - seg.len();
        self.last = Some(seg);
        Ok(Some(offset))
    }

    /// Sets the negative coordinates before any segment is glued.
    pub fn set_past(&mut self, past: Word) -> Result<()> {
        if self.orbit.len > 0 {
            return Err(Error::Precondition("past must be set before gluing".into()));
        }
        if !self.system.is_admissible_cycle(&past)? {
            return Err(Error::Precondition("past cycle is not admissible".into()));
        }
        self.orbit.past = Some(past);
        Ok(())
    }

    /// The glued prefix so far.
    pub fn orbit(&self) -> &GluedOrbit {
        &self.orbit
    }

    pub fn into_orbit(self) -> GluedOrbit {
        self.orbit
    }
}

impl<I: Iterator<Item = OrbitSegment>> Iterator for GlueStream<I> {
    type Item = Result<Symbol>;

    fn next(&mut self) -> Option<Self::Item> {
        while self.cursor >= self.orbit.len {
            match self.advance_block() {
                Ok(Some(_)) => {}
                Ok(None) => return None,
                Err(e) => return Some(Err(e)),
            }
        }
        let s = self.orbit.symbol(self.cursor);
        self.cursor += 1;
        Some(s)
    }
}

/// A toral orbit segment `x, f x, …, f^{len-1} x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToralSegment {
    pub start: TorusPoint,
    pub len: usize,
    pub level: u32,
}

/// Result of gluing toral segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToralGlued {
    /// One period of the shadowing orbit.
    pub points: Vec<TorusPoint>,
    pub offsets: Vec<usize>,
    pub gaps: Vec<usize>,
    pub residual: f64,
    pub max_correction: f64,
}

/// Coefficients of a lattice basis with small stable components, from
/// consecutive continued-fraction convergents of the unstable slope.
fn stable_basis(system: &ToralSystem, delta: f64) -> Result<([f64; 2], [f64; 2])> {
    let v = system.unstable_direction();
    let swap = v[0].abs() < v[1].abs();
    let alpha = if swap { v[0] / v[1] } else { v[1] / v[0] };
    let to_vec = |q: i64, p: i64| -> [f64; 2] {
        if swap {
            [p as f64, q as f64]
        } else {
            [q as f64, p as f64]
        }
    };
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0i64, alpha.floor() as i64, 1i64);
    let mut x = alpha - alpha.floor();
    for _ in 0..60 {
        let n0 = system.eigen_coordinates(to_vec(q0, p0));
        let n1 = system.eigen_coordinates(to_vec(q1, p1));
        if (n0.1.abs() + n1.1.abs()) / 2.0 <= delta {
            return Ok(([n0.0, n0.1], [n1.0, n1.1]));
        }
        if x.abs() < 1e-300 {
            break;
        }
        x = 1.0 / x;
        let a = x.floor() as i64;
        x -= a as f64;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    Err(Error::config("delta", format!("δ = {delta} is below numerical resolution")))
}

/// Number of steps after which any point can be reached from any other
/// through a pseudo-orbit with two Euclidean jumps of size at most `δ`.
pub fn toral_connection_gap(system: &ToralSystem, delta: f64) -> Result<GapTable> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::config("delta", "must lie in (0, 1/2)"));
    }
    let (b0, b1) = stable_basis(system, delta)?;
    let reach = (b0[0].abs() + b1[0].abs()) / 2.0;
    let growth = system.unstable_eigenvalue().abs();
    let steps = if reach <= delta {
        0.0
    } else {
        (reach / delta).ln() / growth.ln()
    };
    Ok(GapTable {
        value: (steps.ceil() as u64).max(1),
        resolution: 0,
        provenance: format!("unstable-needle connection with jumps ≤ {delta}"),
        min_gap_one: false,
    })
}

/// Smallest `g` and the displacement `(a, b)` such that the orbit of
/// `p + a v_u` lands within `b v_s` of `target` after `g` steps.
fn toral_bridge(
    system: &ToralSystem,
    p: TorusPoint,
    target: TorusPoint,
    delta: f64,
    min_gap: usize,
    max_gap: usize,
) -> Option<(usize, f64)> {
    let growth = system.unstable_eigenvalue();
    let mut fp = p;
    for _ in 0..min_gap {
        fp = system.step_unchecked(fp);
    }
    for g in min_gap..=max_gap {
        if g == 0 {
            if system.distance(fp, target) <= delta {
                return Some((0, 0.0));
            }
            fp = system.step_unchecked(fp);
            continue;
        }
        let d = [lift_centered(target[0] - fp[0]), lift_centered(target[1] - fp[1])];
        let u_max = delta * growth.abs().powi(g as i32);
        if let Some(a) = needle_hit(system, d, u_max, delta) {
            return Some((g, a / growth.powi(g as i32)));
        }
        fp = system.step_unchecked(fp);
    }
    None
}

/// Searches integer `n` with `d + n = u v_u + s v_s`, `|u| ≤ u_max`,
/// `|s| ≤ s_max`; returns the `u` of the hit with the smallest `|s|`.
fn needle_hit(system: &ToralSystem, d: [f64; 2], u_max: f64, s_max: f64) -> Option<f64> {
    let vu = system.unstable_direction();
    let vs = system.stable_direction();
    let ext = |i: usize| u_max * vu[i].abs() + s_max * vs[i].abs();
    let (x_lo, x_hi) = ((d[0] - ext(0)).floor() as i64, (d[0] + ext(0)).ceil() as i64);
    let (y_lo, y_hi) = ((d[1] - ext(1)).floor() as i64, (d[1] + ext(1)).ceil() as i64);
    if (x_hi - x_lo).saturating_mul(y_hi - y_lo) > 50_000_000 {
        return None;
    }
    let mut best: Option<(f64, f64)> = None;
    for nx in x_lo..=x_hi {
        for ny in y_lo..=y_hi {
            let (u, s) = system.eigen_coordinates([d[0] + nx as f64, d[1] + ny as f64]);
            if u.abs() <= u_max && s.abs() <= s_max && best.is_none_or(|(_, bs)| s.abs() < bs) {
                best = Some((u, s.abs()));
            }
        }
    }
    best.map(|(u, _)| u)
}

/// Glues toral segments into a periodic pseudo-orbit with jumps at most
/// `δ = δ_k` of the largest level used, and shadows it.
pub fn glue_finite_toral(
    system: &ToralSystem,
    segments: &[ToralSegment],
    filtration: &BlockFiltration,
    min_gap_one: bool,
) -> Result<ToralGlued> {
    if segments.is_empty() {
        return Err(Error::Precondition("no segments to glue".into()));
    }
    let top = segments.iter().map(|s| s.level).max().unwrap_or(1).max(1);
    // Sup-norm budget converted to a Euclidean one.
    let delta = filtration.delta_k(top) * 0.999;
    let table = toral_connection_gap(system, delta)?;
    let mut points = Vec::new();
    let mut levels = Vec::new();
    let mut offsets = Vec::new();
    let mut gaps = Vec::new();
    for (i, seg) in segments.iter().enumerate() {
        if seg.len == 0 {
            return Err(Error::Precondition("segment length must be ≥ 1".into()));
        }
        offsets.push(points.len());
        let mut x = seg.start;
        system.step(x)?;
        for _ in 0..seg.len {
            points.push(x);
            levels.push(seg.level.max(1));
            x = system.step_unchecked(x);
        }
        let next = &segments[(i + 1) % segments.len()];
        let (g, a) = toral_bridge(
            system,
            x,
            next.start,
            delta,
            usize::from(min_gap_one),
            table.value as usize,
        )
        .ok_or_else(|| {
            Error::invariant("toral bridge", format!("no connection within M = {}", table.value))
        })?;
        let vu = system.unstable_direction();
        let mut y = [reduce_mod1(x[0] + a * vu[0]), reduce_mod1(x[1] + a * vu[1])];
        for _ in 0..g {
            points.push(y);
            levels.push(seg.level.max(1));
            y = system.step_unchecked(y);
        }
        gaps.push(g);
    }
    let orbit = PseudoOrbit::new(points, levels, true)?;
    let shadow = shadow_toral(system, &orbit, filtration)?;
    Ok(ToralGlued {
        points: shadow.points,
        offsets,
        gaps,
        residual: shadow.residual,
        max_correction: shadow.max_correction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::parse_word;
    use proptest::prelude::*;

    fn seg(s: &str) -> OrbitSegment {
        OrbitSegment::from_word(parse_word(s).unwrap()).unwrap()
    }

    fn prefix(o: &GluedOrbit, n: usize) -> Word {
        o.materialize(0, n).unwrap()
    }

    #[test]
    fn gap_table_examples() {
        let full = ShiftSystem::full(2).unwrap();
        assert_eq!(gap_table_shift(&full, 1).unwrap().value, 1);
        // 000 -> 111 cannot overlap, so three steps are needed.
        assert_eq!(gap_table_shift(&full, 3).unwrap().value, 3);
        let gm = ShiftSystem::golden_mean();
        assert_eq!(gap_table_shift(&gm, 1).unwrap().value, 2);
        let cat = gap_table_toral(&ToralSystem::cat_map(), 4).unwrap();
        assert!(cat.value >= 1 && cat.value < 64);
        assert_eq!(gap_table_toral(&ToralSystem::cat_map(), 1).unwrap().value, 1);
    }

    #[test]
    fn glue_finite_examples() {
        let full = ShiftSystem::full(2).unwrap();
        let t = gap_table_shift(&full, 1).unwrap();
        let o = glue_finite(&full, &[seg("01")], &t).unwrap();
        assert_eq!(o.period(), Some(2));
        assert_eq!(o.offsets(), &[0]);
        assert_eq!(o.gaps(), &[0]);
        let gm = ShiftSystem::golden_mean();
        let t = gap_table_shift(&gm, 1).unwrap();
        let o = glue_finite(&gm, &[seg("0"), seg("0101")], &t).unwrap();
        assert_eq!(prefix(&o, 5), parse_word("00101").unwrap());
        assert_eq!(o.offsets(), &[0, 1]);
        assert_eq!(o.gaps(), &[0, 0]);
        let o = glue_finite(&gm, &[seg("01"), seg("10")], &t).unwrap();
        assert_eq!(prefix(&o, o.len() as usize), parse_word("01010").unwrap());
        assert_eq!(o.gaps(), &[1, 0]);
        assert!(glue_finite(&gm, &[], &t).is_err());
    }

    #[test]
    fn min_gap_one_flag() {
        let full = ShiftSystem::full(2).unwrap();
        let t = gap_table_shift(&full, 1).unwrap().with_min_gap_one(true);
        let o = glue_finite(&full, &[seg("01"), seg("1")], &t).unwrap();
        assert_eq!(o.gaps(), &[1, 1]);
    }

    #[test]
    fn stream_examples() {
        let full = ShiftSystem::full(2).unwrap();
        let t = gap_table_shift(&full, 1).unwrap();
        let src = std::iter::repeat(seg("01"));
        let mut s = GlueStream::new(full, t, src);
        let out: Vec<Symbol> = s.by_ref().take(20).map(|r| r.unwrap()).collect();
        assert_eq!(out, parse_word("01").unwrap().repeat(10));
        assert_eq!(&s.orbit().offsets()[..5], &[0, 2, 4, 6, 8]);
    }

    #[test]
    fn stream_alternating_gaps() {
        let gm = ShiftSystem::golden_mean();
        let t = gap_table_shift(&gm, 1).unwrap();
        let src = (0..10_000).map(|i| if i % 2 == 0 { seg("0") } else { seg("01") });
        let mut s = GlueStream::new(gm.clone(), t, src);
        while s.advance_block().unwrap().is_some() {}
        let o = s.orbit();
        let offs = o.offsets();
        for w in 0..offs.len() - 1 {
            let g = offs[w + 1] - offs[w] - o.segment_lengths()[w];
            assert!(g <= 1);
        }
        assert!(gm.is_admissible(&prefix(o, o.len() as usize)).unwrap());
    }

    #[test]
    fn repeated_pieces_count_exactly() {
        let gm = ShiftSystem::golden_mean();
        let t = gap_table_shift(&gm, 1).unwrap();
        let big = OrbitSegment::new(parse_word("01").unwrap(), 1_000_000_000, 1).unwrap();
        let small = OrbitSegment::new(vec![0], 3, 1).unwrap();
        let o = glue_finite(&gm, &[big, small], &t).unwrap();
        assert_eq!(o.len(), 2_000_000_003);
        let zeros = o.count_occurrences(&[0], 0, o.len()).unwrap();
        assert_eq!(zeros, 1_000_000_003);
        let pairs = o.count_occurrences(&[0, 0], 0, o.len()).unwrap();
        // "000" between the 1 of the last "01" and the wrap gives 2 + 1.
        assert_eq!(pairs, 3);
    }

    #[test]
    fn toral_glue_is_true_orbit() {
        let cat = ToralSystem::cat_map();
        let filt = BlockFiltration::constant(1.0, 0.0, 1e-3).unwrap();
        let segs = vec![
            ToralSegment { start: [0.1, 0.2], len: 5, level: 1 },
            ToralSegment { start: [0.7, 0.3], len: 4, level: 1 },
        ];
        let g = glue_finite_toral(&cat, &segs, &filt, false).unwrap();
        assert!(g.residual < 1e-10);
        let table = toral_connection_gap(&cat, 1e-3 * 0.999).unwrap();
        assert!(g.gaps.iter().all(|&x| x as u64 <= table.value));
        let k = crate::shadowing::bound_constant(&cat, 0.0).unwrap();
        assert!(g.max_correction <= k * 1e-3 * 2f64.sqrt());
    }

    proptest! {
        #[test]
        fn counts_match_materialized(
            words in prop::collection::vec((prop::collection::vec(0u8..2, 1..5), 1u64..4), 1..6),
            w in prop::collection::vec(0u8..2, 1..4),
            a in 0u64..60,
            span in 0u64..60,
        ) {
            let full = ShiftSystem::full(2).unwrap();
            let t = gap_table_shift(&full, 1).unwrap();
            let segs: Vec<_> = words.into_iter().filter_map(|(w, r)| {
                let s = OrbitSegment::new(w, r, 1).ok()?;
                s.check(&full).ok().map(|_| s)
            }).collect();
            prop_assume!(!segs.is_empty());
            let o = glue_finite(&full, &segs, &t).unwrap();
            let raw = o.materialize(0, (a + span + 4) as usize).unwrap();
            let naive = (a..a + span).filter(|&i| raw[i as usize..i as usize + w.len()] == w[..]).count() as u64;
            prop_assert_eq!(o.count_occurrences(&w, a, a + span).unwrap(), naive);
        }
    }
}
