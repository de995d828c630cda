//! Invariant and empirical measures, test-function families, Birkhoff
//! averages and the weak* metric `d̃`.
//!
//! Measures are only ever observed through integrals of test functions, so
//! every measure type implements [`Integrable`] and the metric works on any
//! pair of them.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::{
    check_torus_point, format_word, parse_word, ShiftPoint, ShiftSystem, Symbol, System,
    ToralSystem, TorusPoint, Word,
};

/// Default number of test functions for shift spaces.
pub const DEFAULT_FAMILY_SIZE: usize = 20;

/// A one-sided view of a symbol sequence `x_0, x_1, …` that can count
/// cylinder occurrences.
pub trait SymbolSequence {
    fn symbol(&self, i: u64) -> Result<Symbol>;

    /// Number of available coordinates from 0 (`None` when unbounded).
    fn available(&self) -> Option<u64>;

    /// `#{ i ∈ [start, end) : x_i … x_{i+|w|-1} = w }`.
    fn count_occurrences(&self, word: &[Symbol], start: u64, end: u64) -> Result<u64> {
        if end <= start || word.is_empty() {
            return Ok(end.saturating_sub(start));
        }
        let need = end + word.len() as u64 - 1;
        if let Some(avail) = self.available() {
            if need > avail {
                return Err(Error::DemandMoreSymbols {
                    needed: need,
                    available: avail,
                });
            }
        }
        let mut count = 0;
        for i in start..end {
            let mut hit = true;
            for (t, &s) in word.iter().enumerate() {
                if self.symbol(i + t as u64)? != s {
                    hit = false;
                    break;
                }
            }
            count += hit as u64;
        }
        Ok(count)
    }
}

impl SymbolSequence for ShiftPoint {
    fn symbol(&self, i: u64) -> Result<Symbol> {
        self.coordinate(i as i64)
    }

    fn available(&self) -> Option<u64> {
        self.forward_len()
    }

    fn count_occurrences(&self, word: &[Symbol], start: u64, end: u64) -> Result<u64> {
        match self {
            ShiftPoint::Periodic { cycle, phase } => {
                if end <= start {
                    return Ok(0);
                }
                let p = cycle.len() as u64;
                let hits: Vec<bool> = (0..p)
                    .map(|i| {
                        word.iter().enumerate().all(|(t, &s)| {
                            cycle[((*phase as u64 + i + t as u64) % p) as usize] == s
                        })
                    })
                    .collect();
                let full = hits.iter().filter(|&&h| h).count() as u64;
                let upto = |n: u64| {
                    let q = n / p;
                    let r = (n % p) as usize;
                    q * full + hits[..r].iter().filter(|&&h| h).count() as u64
                };
                Ok(upto(end) - upto(start))
            }
            ShiftPoint::Window { symbols, origin } => {
                let avail = symbols.len().saturating_sub(*origin) as u64;
                if end <= start {
                    return Ok(0);
                }
                let need = end + word.len().max(1) as u64 - 1;
                if need > avail {
                    return Err(Error::DemandMoreSymbols {
                        needed: need,
                        available: avail,
                    });
                }
                let s = &symbols[*origin..];
                Ok((start as usize..end as usize)
                    .filter(|&i| s[i..i + word.len()] == *word)
                    .count() as u64)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trig {
    Cos,
    Sin,
}

/// A continuous test function on a shift space or the torus.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TestFunction {
    /// Indicator of the cylinder `{x : x_0 … x_{m-1} = word}`.
    Cylinder(Word),
    /// `cos` or `sin` of `2π⟨k, x⟩`.
    Character { k: [i64; 2], trig: Trig },
}

impl TestFunction {
    pub fn cylinder(word: &str) -> Result<Self> {
        Ok(TestFunction::Cylinder(parse_word(word)?))
    }

    pub fn id(&self) -> String {
        match self {
            TestFunction::Cylinder(w) => format!("[{}]", format_word(w)),
            TestFunction::Character { k, trig } => {
                let t = match trig {
                    Trig::Cos => "cos",
                    Trig::Sin => "sin",
                };
                format!("{t}({},{})", k[0], k[1])
            }
        }
    }

    /// Number of leading coordinates the function reads (1 for characters).
    pub fn locality(&self) -> usize {
        match self {
            TestFunction::Cylinder(w) => w.len(),
            TestFunction::Character { .. } => 1,
        }
    }

    /// Sup norm.
    pub fn norm(&self) -> f64 {
        1.0
    }

    pub fn eval_word(&self, window: &[Symbol]) -> Result<f64> {
        match self {
            TestFunction::Cylinder(w) => {
                if window.len() < w.len() {
                    return Err(Error::DemandMoreSymbols {
                        needed: w.len() as u64,
                        available: window.len() as u64,
                    });
                }
                Ok(if window[..w.len()] == **w { 1.0 } else { 0.0 })
            }
            TestFunction::Character { .. } => Err(Error::Precondition(
                "torus character evaluated on a symbol sequence".into(),
            )),
        }
    }

    pub fn eval_torus(&self, x: TorusPoint) -> Result<f64> {
        match self {
            TestFunction::Character { k, trig } => {
                let phase =
                    std::f64::consts::TAU * (k[0] as f64 * x[0] + k[1] as f64 * x[1]);
                Ok(match trig {
                    Trig::Cos => phase.cos(),
                    Trig::Sin => phase.sin(),
                })
            }
            TestFunction::Cylinder(_) => Err(Error::Precondition(
                "cylinder indicator evaluated on a torus point".into(),
            )),
        }
    }

    fn check_shift(&self, sys: &ShiftSystem) -> Result<&[Symbol]> {
        match self {
            TestFunction::Cylinder(w) => {
                sys.check_symbols(w)?;
                Ok(w)
            }
            _ => Err(Error::Precondition(format!("{} is not a shift function", self.id()))),
        }
    }
}

/// The ordered family `φ_1, φ_2, …` with weights `2^{-j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionFamily {
    entries: Vec<TestFunction>,
}

impl TestFunctionFamily {
    /// The first `count` cylinder indicators over an `alphabet`-letter
    /// alphabet, by length and then lexicographically.
    pub fn cylinders(alphabet: usize, count: usize) -> Self {
        let mut entries = Vec::with_capacity(count);
        let mut len = 1;
        while entries.len() < count {
            let total = (alphabet as u64).saturating_pow(len as u32);
            for idx in 0..total {
                if entries.len() == count {
                    break;
                }
                let mut word = vec![0; len];
                let mut v = idx;
                for slot in word.iter_mut().rev() {
                    *slot = (v % alphabet as u64) as Symbol;
                    v /= alphabet as u64;
                }
                entries.push(TestFunction::Cylinder(word));
            }
            len += 1;
        }
        TestFunctionFamily { entries }
    }

    /// The first `count` characters `cos, sin (2π⟨k,x⟩)` for `k` in the
    /// half-plane `k_1 > 0 or (k_1 = 0, k_2 > 0)`, by max-norm of `k` and then
    /// lexicographically, cosine first.
    pub fn characters(count: usize) -> Self {
        let mut entries = Vec::with_capacity(count);
        let mut r: i64 = 1;
        while entries.len() < count {
            for k1 in 0..=r {
                for k2 in -r..=r {
                    if k1.abs().max(k2.abs()) != r || (k1 == 0 && k2 <= 0) {
                        continue;
                    }
                    for trig in [Trig::Cos, Trig::Sin] {
                        if entries.len() < count {
                            entries.push(TestFunction::Character { k: [k1, k2], trig });
                        }
                    }
                }
            }
            r += 1;
        }
        TestFunctionFamily { entries }
    }

    pub fn for_system(system: &System, count: usize) -> Self {
        match system {
            System::Shift(s) => Self::cylinders(s.alphabet_size(), count),
            System::Toral(_) => Self::characters(count),
        }
    }

    pub fn from_functions(entries: Vec<TestFunction>) -> Self {
        TestFunctionFamily { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The `j`-th function, 1-indexed.
    pub fn get(&self, j: usize) -> &TestFunction {
        &self.entries[j - 1]
    }

    pub fn functions(&self) -> &[TestFunction] {
        &self.entries
    }

    pub fn truncate(&self, count: usize) -> Self {
        TestFunctionFamily {
            entries: self.entries[..count.min(self.entries.len())].to_vec(),
        }
    }

    pub fn max_locality(&self) -> usize {
        self.entries.iter().map(TestFunction::locality).max().unwrap_or(0)
    }
}

/// Anything with computable integrals of test functions.
pub trait Integrable {
    fn integrate(&self, phi: &TestFunction) -> Result<f64>;

    /// Integrals of the first `count` functions of `family`.
    fn integrals(&self, family: &TestFunctionFamily, count: usize) -> Result<Vec<f64>> {
        family.functions()[..count.min(family.len())]
            .iter()
            .map(|phi| self.integrate(phi))
            .collect()
    }
}

/// Invariant measure equidistributed on a periodic orbit of a subshift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodicMeasure {
    cycle: Word,
}

impl PeriodicMeasure {
    pub fn new(system: &ShiftSystem, cycle: Word) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::config("cycle", "periodic cycle must be nonempty"));
        }
        if !system.is_admissible_cycle(&cycle)? {
            let mut closed = cycle.clone();
            closed.push(cycle[0]);
            return Err(system
                .first_violation(&closed)
                .expect("non-closing cycle has a violation"));
        }
        Ok(PeriodicMeasure { cycle })
    }

    pub fn parse(system: &ShiftSystem, cycle: &str) -> Result<Self> {
        Self::new(system, parse_word(cycle)?)
    }

    pub fn cycle(&self) -> &[Symbol] {
        &self.cycle
    }

    pub fn period(&self) -> usize {
        self.cycle.len()
    }

    /// Number of `i ∈ [0, p)` where the cyclic word starting at `i` begins with `w`.
    pub fn cyclic_count(&self, w: &[Symbol]) -> u64 {
        let p = self.cycle.len();
        (0..p)
            .filter(|&i| w.iter().enumerate().all(|(t, &s)| self.cycle[(i + t) % p] == s))
            .count() as u64
    }
}

impl Integrable for PeriodicMeasure {
    fn integrate(&self, phi: &TestFunction) -> Result<f64> {
        match phi {
            TestFunction::Cylinder(w) => Ok(self.cyclic_count(w) as f64 / self.period() as f64),
            _ => Err(Error::Precondition(format!("{} is not a shift function", phi.id()))),
        }
    }
}

/// Finite convex combination `Σ θ_i μ_i` of periodic measures.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexCombination {
    components: Vec<PeriodicMeasure>,
    weights: Vec<f64>,
}

impl ConvexCombination {
    /// Builds the combination; zero-weight components are dropped.
    pub fn new(components: Vec<PeriodicMeasure>, weights: Vec<f64>) -> Result<Self> {
        if components.len() != weights.len() || components.is_empty() {
            return Err(Error::config(
                "weights",
                "need one weight per component and at least one component",
            ));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::config("weights", "weights must be finite and ≥ 0"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::config("weights", format!("weights sum to {total}, not 1")));
        }
        let (components, weights) = components
            .into_iter()
            .zip(weights)
            .filter(|(_, w)| *w > 0.0)
            .unzip();
        Ok(ConvexCombination {
            components,
            weights,
        })
    }

    pub fn single(component: PeriodicMeasure) -> Self {
        ConvexCombination {
            components: vec![component],
            weights: vec![1.0],
        }
    }

    pub fn components(&self) -> &[PeriodicMeasure] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(1-t)·self + t·other`, merging identical components.
    pub fn interpolate(&self, other: &ConvexCombination, t: f64) -> Result<Self> {
        let mut comps: Vec<PeriodicMeasure> = Vec::new();
        let mut ws: Vec<f64> = Vec::new();
        let scaled = self
            .components
            .iter()
            .zip(self.weights.iter().map(|w| w * (1.0 - t)))
            .chain(other.components.iter().zip(other.weights.iter().map(|w| w * t)));
        for (c, w) in scaled {
            match comps.iter().position(|x| x == c) {
                Some(i) => ws[i] += w,
                None => {
                    comps.push(c.clone());
                    ws.push(w);
                }
            }
        }
        let total: f64 = ws.iter().sum();
        ws.iter_mut().for_each(|w| *w /= total);
        Self::new(comps, ws)
    }
}

impl Integrable for ConvexCombination {
    fn integrate(&self, phi: &TestFunction) -> Result<f64> {
        let mut acc = 0.0;
        for (c, w) in self.components.iter().zip(&self.weights) {
            acc += w * c.integrate(phi)?;
        }
        Ok(acc)
    }
}

/// Time average `(1/(N-start)) Σ_{start ≤ j < N} δ_{σ^j x}` along a symbol
/// sequence.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalMeasure<'a, S: SymbolSequence + ?Sized> {
    pub sequence: &'a S,
    pub start: u64,
    pub end: u64,
}

impl<'a, S: SymbolSequence + ?Sized> EmpiricalMeasure<'a, S> {
    pub fn new(sequence: &'a S, start: u64, end: u64) -> Result<Self> {
        if end <= start {
            return Err(Error::Precondition(format!(
                "empirical window [{start}, {end}) is empty"
            )));
        }
        Ok(EmpiricalMeasure {
            sequence,
            start,
            end,
        })
    }

    pub fn prefix(sequence: &'a S, n: u64) -> Result<Self> {
        Self::new(sequence, 0, n)
    }
}

impl<S: SymbolSequence + ?Sized> Integrable for EmpiricalMeasure<'_, S> {
    fn integrate(&self, phi: &TestFunction) -> Result<f64> {
        match phi {
            TestFunction::Cylinder(w) => {
                let c = self.sequence.count_occurrences(w, self.start, self.end)?;
                Ok(c as f64 / (self.end - self.start) as f64)
            }
            _ => Err(Error::Precondition(format!("{} is not a shift function", phi.id()))),
        }
    }
}

/// Invariant measure on a periodic orbit of a toral automorphism.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPeriodicMeasure {
    points: Vec<TorusPoint>,
}

impl TorusPeriodicMeasure {
    /// Accepts the orbit `x, f x, …, f^{p-1} x` with `f^p x = x` within 1e-10.
    pub fn new(system: &ToralSystem, points: Vec<TorusPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::config("points", "periodic orbit must be nonempty"));
        }
        for (i, &x) in points.iter().enumerate() {
            check_torus_point(x)?;
            let next = points[(i + 1) % points.len()];
            let err = system.distance(system.step_unchecked(x), next);
            if err > 1e-10 {
                return Err(Error::config(
                    "points",
                    format!("not a periodic orbit: step {i} misses by {err:.3e}"),
                ));
            }
        }
        Ok(TorusPeriodicMeasure { points })
    }

    /// The orbit of `x` closed after `period` steps.
    pub fn from_point(system: &ToralSystem, x: TorusPoint, period: usize) -> Result<Self> {
        let mut points = Vec::with_capacity(period);
        let mut y = x;
        for _ in 0..period {
            points.push(y);
            y = system.step(y)?;
        }
        Self::new(system, points)
    }

    pub fn points(&self) -> &[TorusPoint] {
        &self.points
    }
}

impl Integrable for TorusPeriodicMeasure {
    fn integrate(&self, phi: &TestFunction) -> Result<f64> {
        let mut acc = 0.0;
        for &x in &self.points {
            acc += phi.eval_torus(x)?;
        }
        Ok(acc / self.points.len() as f64)
    }
}

/// Time average along a floating-point toral orbit over `[start, end)`.
#[derive(Debug, Clone)]
pub struct TorusEmpiricalMeasure<'a> {
    pub system: &'a ToralSystem,
    pub point: TorusPoint,
    pub start: u64,
    pub end: u64,
}

impl Integrable for TorusEmpiricalMeasure<'_> {
    fn integrate(&self, phi: &TestFunction) -> Result<f64> {
        if self.end <= self.start {
            return Err(Error::Precondition("empty empirical window".into()));
        }
        let mut x = self.point;
        check_torus_point(x)?;
        for _ in 0..self.start {
            x = self.system.step_unchecked(x);
        }
        let mut acc = 0.0;
        for _ in self.start..self.end {
            acc += phi.eval_torus(x)?;
            x = self.system.step_unchecked(x);
        }
        Ok(acc / (self.end - self.start) as f64)
    }
}

/// `(1/N) Σ_{i<N} φ(σ^i x)` along a subshift point.
pub fn birkhoff_average_shift(
    system: &ShiftSystem,
    x: &ShiftPoint,
    n: u64,
    phi: &TestFunction,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("N must be ≥ 1".into()));
    }
    let w = phi.check_shift(system)?;
    match x {
        ShiftPoint::Periodic { cycle, .. } => {
            if !system.is_admissible_cycle(cycle)? {
                return Err(Error::Precondition("periodic point is not admissible".into()));
            }
        }
        ShiftPoint::Window { symbols, origin } => {
            let need = (n as usize + w.len()).saturating_sub(1);
            let avail = symbols.len().saturating_sub(*origin);
            if need > avail {
                return Err(Error::DemandMoreSymbols {
                    needed: need as u64,
                    available: avail as u64,
                });
            }
            let used = &symbols[*origin..*origin + need];
            system.check_symbols(used)?;
            if let Some(e) = system.first_violation(used) {
                return Err(e);
            }
        }
    }
    EmpiricalMeasure::prefix(x, n)?.integrate(phi)
}

/// `(1/N) Σ_{i<N} φ(f^i x)` along a toral orbit.
pub fn birkhoff_average_torus(
    system: &ToralSystem,
    x: TorusPoint,
    n: u64,
    phi: &TestFunction,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("N must be ≥ 1".into()));
    }
    TorusEmpiricalMeasure {
        system,
        point: x,
        start: 0,
        end: n,
    }
    .integrate(phi)
}

/// Truncated weak* distance with its certified tail bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakStar {
    pub value: f64,
    pub truncation_bound: f64,
}

impl WeakStar {
    pub fn upper(&self) -> f64 {
        self.value + self.truncation_bound
    }
}

/// `Σ_{j ≤ J} 2^{-j} |∫φ_j dμ − ∫φ_j dν| / ‖φ_j‖` and the tail bound `2^{-J+1}`.
pub fn weak_star_distance<A, B>(
    mu: &A,
    nu: &B,
    family: &TestFunctionFamily,
    count: usize,
) -> Result<WeakStar>
where
    A: Integrable + ?Sized,
    B: Integrable + ?Sized,
{
    let a = mu.integrals(family, count)?;
    let b = nu.integrals(family, count)?;
    weak_star_from_integrals(&a, &b, family, count)
}

/// The weak* distance from precomputed integral vectors.
pub fn weak_star_from_integrals(
    a: &[f64],
    b: &[f64],
    family: &TestFunctionFamily,
    count: usize,
) -> Result<WeakStar> {
    if count == 0 {
        return Err(Error::Precondition("J must be ≥ 1".into()));
    }
    if count > family.len() || a.len() < count || b.len() < count {
        return Err(Error::Precondition(format!(
            "J = {count} exceeds the available test functions"
        )));
    }
    let mut value = 0.0;
    let mut weight = 1.0;
    for j in 0..count {
        weight *= 0.5;
        value += weight * (a[j] - b[j]).abs() / family.functions()[j].norm();
    }
    Ok(WeakStar {
        value,
        truncation_bound: 0.5f64.powi(count as i32 - 1),
    })
}

/// Upper bound for `sup{|φ(y) − φ(z)| : d(y, z) ≤ ε}`.
pub fn oscillation_modulus(system: &System, phi: &TestFunction, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::Precondition("ε must be > 0".into()));
    }
    match (system, phi) {
        (System::Shift(s), TestFunction::Cylinder(w)) => {
            let m = w.len().max(1) as i32;
            Ok(if epsilon < s.metric_base().powi(m - 1) { 0.0 } else { 1.0 })
        }
        (System::Toral(_), TestFunction::Character { k, .. }) => {
            let l1 = (k[0].abs() + k[1].abs()) as f64;
            Ok((std::f64::consts::TAU * l1 * epsilon).min(2.0))
        }
        _ => Err(Error::Precondition(format!(
            "{} does not live on this system",
            phi.id()
        ))),
    }
}

/// Result of comparing an average over an index set with the full average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowGap {
    pub gap: f64,
    pub bound: f64,
}

fn normalize_ranges(ranges: &[Range<u64>]) -> Result<(u64, u64)> {
    let mut prev_end = 0;
    let mut size = 0;
    for (i, r) in ranges.iter().enumerate() {
        if r.start >= r.end || (i > 0 && r.start < prev_end) {
            return Err(Error::Precondition(
                "index set must be nonempty, sorted, disjoint ranges".into(),
            ));
        }
        size += r.end - r.start;
        prev_end = r.end;
    }
    if size == 0 {
        return Err(Error::Precondition("index set A is empty".into()));
    }
    Ok((size, prev_end - 1))
}

fn finish_gap(sum_a: f64, size: u64, sum_all: f64, max_a: u64, norm: f64) -> Result<WindowGap> {
    let gap = (sum_a / size as f64 - sum_all / (max_a + 1) as f64).abs();
    let bound = 2.0 * (max_a + 1 - size) as f64 / size as f64 * norm;
    if gap > bound + 1e-12 {
        return Err(Error::invariant(
            "windowed average gap",
            format!("gap {gap:.3e} exceeds bound {bound:.3e}"),
        ));
    }
    Ok(WindowGap { gap, bound })
}

/// Compares the average of `φ` over `A` (sorted disjoint ranges) with its
/// average over `[0, max A]`, asserting `gap ≤ 2(max A + 1 − #A)/#A · ‖φ‖`.
pub fn windowed_average_gap<S: SymbolSequence + ?Sized>(
    x: &S,
    a: &[Range<u64>],
    phi: &TestFunction,
) -> Result<WindowGap> {
    let (size, max_a) = normalize_ranges(a)?;
    let w = match phi {
        TestFunction::Cylinder(w) => w,
        _ => return Err(Error::Precondition(format!("{} is not a shift function", phi.id()))),
    };
    let mut sum_a = 0u64;
    for r in a {
        sum_a += x.count_occurrences(w, r.start, r.end)?;
    }
    let sum_all = x.count_occurrences(w, 0, max_a + 1)?;
    finish_gap(sum_a as f64, size, sum_all as f64, max_a, phi.norm())
}

/// Toral version of [`windowed_average_gap`].
pub fn windowed_average_gap_torus(
    system: &ToralSystem,
    x: TorusPoint,
    a: &[Range<u64>],
    phi: &TestFunction,
) -> Result<WindowGap> {
    let (size, max_a) = normalize_ranges(a)?;
    check_torus_point(x)?;
    let mut y = x;
    let (mut sum_a, mut sum_all) = (0.0, 0.0);
    let mut ranges = a.iter().peekable();
    for i in 0..=max_a {
        let v = phi.eval_torus(y)?;
        sum_all += v;
        while ranges.peek().is_some_and(|r| r.end <= i) {
            ranges.next();
        }
        if ranges.peek().is_some_and(|r| r.contains(&i)) {
            sum_a += v;
        }
        y = system.step_unchecked(y);
    }
    finish_gap(sum_a, size, sum_all, max_a, phi.norm())
}

/// Structured-text form of a shift measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureSpec {
    Periodic(String),
    Convex(Vec<WeightedCycle>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedCycle {
    pub w: f64,
    pub periodic: String,
}

impl MeasureSpec {
    pub fn build(&self, system: &ShiftSystem) -> Result<ConvexCombination> {
        match self {
            MeasureSpec::Periodic(c) => {
                Ok(ConvexCombination::single(PeriodicMeasure::parse(system, c)?))
            }
            MeasureSpec::Convex(parts) => {
                let comps = parts
                    .iter()
                    .map(|p| PeriodicMeasure::parse(system, &p.periodic))
                    .collect::<Result<_>>()?;
                ConvexCombination::new(comps, parts.iter().map(|p| p.w).collect())
            }
        }
    }

    pub fn from_measure(m: &ConvexCombination) -> Self {
        if m.components().len() == 1 {
            return MeasureSpec::Periodic(format_word(m.components()[0].cycle()));
        }
        MeasureSpec::Convex(
            m.components()
                .iter()
                .zip(m.weights())
                .map(|(c, &w)| WeightedCycle {
                    w,
                    periodic: format_word(c.cycle()),
                })
                .collect(),
        )
    }
}
