//! Compiling an invariant measure into a periodic orbit segment.
//!
//! A convex combination of periodic measures is grouped into cells with
//! nearly equal limit averages, the cell weights are rounded to rationals
//! `s_j / s`, recurrence times are matched to a common multiple, and the
//! resulting blocks are glued into one periodic carrier whose cyclic
//! averages are checked against the target on every test function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{
    ConvexCombination, EmpiricalMeasure, Integrable, PeriodicMeasure, SymbolSequence,
    TestFunction,
};
use crate::specification::{glue_finite, GapTable, GluedOrbit, OrbitSegment};
use crate::systems::{ShiftPoint, ShiftSystem, Word};

/// Default horizon standing in for Birkhoff limits of non-periodic samples.
pub const DEFAULT_HORIZON: u64 = 10_000;

/// Total carrier length cap for the recurrence-time growth loop.
pub const MAX_CARRIER_LEN: u64 = 1 << 30;

/// Cells of equal binned limit values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelPartition {
    /// Sample indices per cell, in order of first appearance.
    pub cells: Vec<Vec<usize>>,
    /// First sample of each cell.
    pub representatives: Vec<usize>,
    /// Limit values of each representative, one per test function.
    pub values: Vec<Vec<f64>>,
    /// Bin width per test function.
    pub widths: Vec<f64>,
}

impl LevelPartition {
    pub fn count(&self) -> usize {
        self.cells.len()
    }
}

/// Bins value vectors into boxes of width `ε‖ξ‖/(16‖F‖)` per coordinate,
/// anchored at `−‖F‖` so that refining the samples never merges cells.
pub fn partition_values(
    values: &[Vec<f64>],
    functions: &[TestFunction],
    epsilon: f64,
) -> Result<LevelPartition> {
    if values.is_empty() {
        return Err(Error::Precondition("empty sample set".into()));
    }
    if functions.is_empty() {
        return Err(Error::Precondition("empty test-function set".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::config("epsilon", "must be > 0"));
    }
    let f_norm = functions.iter().map(TestFunction::norm).fold(0.0, f64::max);
    let widths: Vec<f64> = functions
        .iter()
        .map(|f| epsilon * f.norm() / (16.0 * f_norm))
        .collect();
    let mut keys: Vec<Vec<i64>> = Vec::new();
    let mut cells: Vec<Vec<usize>> = Vec::new();
    for (i, v) in values.iter().enumerate() {
        let key: Vec<i64> = v
            .iter()
            .zip(&widths)
            .map(|(x, w)| ((x + f_norm) / w).floor() as i64)
            .collect();
        match keys.iter().position(|k| *k == key) {
            Some(c) => cells[c].push(i),
            None => {
                keys.push(key);
                cells.push(vec![i]);
            }
        }
    }
    let representatives: Vec<usize> = cells.iter().map(|c| c[0]).collect();
    Ok(LevelPartition {
        values: representatives.iter().map(|&r| values[r].clone()).collect(),
        representatives,
        cells,
        widths,
    })
}

/// Partitions sample points by their horizon-`H` Birkhoff averages.
pub fn partition_by_levels(
    system: &ShiftSystem,
    samples: &[ShiftPoint],
    functions: &[TestFunction],
    epsilon: f64,
    horizon: u64,
) -> Result<LevelPartition> {
    if horizon == 0 {
        return Err(Error::config("horizon", "must be ≥ 1"));
    }
    let values = samples
        .iter()
        .map(|x| {
            functions
                .iter()
                .map(|f| crate::measures::birkhoff_average_shift(system, x, horizon, f))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    partition_values(&values, functions, epsilon)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceTimes {
    pub times: Vec<u64>,
    /// `Σ_j Σ_{i≠j} |T_i − T_j| / Σ_j T_j`.
    pub ratio: f64,
}

fn spread_ratio(times: &[u64]) -> f64 {
    let total: u64 = times.iter().sum();
    let mut spread = 0u128;
    for &a in times {
        for &b in times {
            spread += a.abs_diff(b) as u128;
        }
    }
    spread as f64 / total as f64
}

/// Return times `T_j ≥ T`, each a multiple of period `j`, with spread
/// ratio at most `γ`. A common multiple is used whenever the lcm is small
/// enough, giving ratio 0.
pub fn match_recurrence_times(periods: &[u64], gamma: f64, t: u64) -> Result<RecurrenceTimes> {
    if periods.is_empty() || periods.contains(&0) {
        return Err(Error::Precondition("periods must be nonempty and ≥ 1".into()));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::config("gamma", "must lie in (0, 1)"));
    }
    let t = t.max(1);
    let lcm = periods.iter().try_fold(1u64, |acc, &p| {
        (acc / gcd(acc, p)).checked_mul(p).filter(|&l| l <= 1 << 40)
    });
    if let Some(l) = lcm {
        let target = t.div_ceil(l) * l;
        return Ok(RecurrenceTimes {
            times: vec![target; periods.len()],
            ratio: 0.0,
        });
    }
    let mut target = t;
    loop {
        let times: Vec<u64> = periods.iter().map(|&p| target.div_ceil(p) * p).collect();
        let ratio = spread_ratio(&times);
        if ratio <= gamma {
            return Ok(RecurrenceTimes { times, ratio });
        }
        target = target
            .checked_mul(2)
            .ok_or_else(|| Error::invariant("recurrence times", "target overflow"))?;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalWeights {
    pub s: u64,
    pub counts: Vec<u64>,
    pub max_error: f64,
}

/// Largest-remainder rounding of `θ` to `s_j / s` for a given `s`; ties go
/// to the lower index.
pub fn largest_remainder(theta: &[f64], s: u64) -> Vec<u64> {
    let mut counts: Vec<u64> = theta.iter().map(|&w| (w * s as f64).floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..theta.len()).collect();
    let rem = |j: usize| theta[j] * s as f64 - counts[j] as f64;
    let rems: Vec<f64> = (0..theta.len()).map(rem).collect();
    order.sort_by(|&a, &b| rems[b].total_cmp(&rems[a]).then(a.cmp(&b)));
    for &j in order.iter().take(s.saturating_sub(assigned) as usize) {
        counts[j] += 1;
    }
    counts
}

/// Smallest `s` whose largest-remainder rounding satisfies
/// `|θ_j − s_j/s| < ζ/(2 b ‖F‖)` for every `j`.
pub fn rational_weights(theta: &[f64], zeta: f64, b: usize, f_norm: f64) -> Result<RationalWeights> {
    const MAX_S: u64 = 1 << 32;
    if theta.is_empty() || theta.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::Precondition("weights must be positive".into()));
    }
    let total: f64 = theta.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!("weights sum to {total}, not 1")));
    }
    if !(zeta > 0.0 && f_norm > 0.0) || b == 0 {
        return Err(Error::config("zeta", "ζ, b and ‖F‖ must be positive"));
    }
    let tol = zeta / (2.0 * b as f64 * f_norm);
    let mut s = 1u64;
    while s <= MAX_S {
        let counts = largest_remainder(theta, s);
        let max_error = theta
            .iter()
            .zip(&counts)
            .map(|(&w, &c)| (w - c as f64 / s as f64).abs())
            .fold(0.0, f64::max);
        if max_error < tol {
            debug_assert_eq!(counts.iter().sum::<u64>(), s);
            return Ok(RationalWeights {
                s,
                counts,
                max_error,
            });
        }
        s += 1;
    }
    Err(Error::ToleranceInfeasible {
        residual: f64::NAN,
        tolerance: tol,
        dominating: "rational weight denominator".into(),
    })
}

/// Record of the achieved accuracy on each test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Guarantee {
    pub zeta: f64,
    pub functions: Vec<String>,
    pub target: Vec<f64>,
    pub achieved: Vec<f64>,
    pub errors: Vec<f64>,
    pub max_error: f64,
    pub s: u64,
    pub counts: Vec<u64>,
    pub periods: Vec<u64>,
    pub times: Vec<u64>,
    pub bridge_length: u64,
    pub total_length: u64,
}

/// Blocks for one measure, glued into a periodic carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledSegments {
    pub segments: Vec<OrbitSegment>,
    pub orbit: GluedOrbit,
    pub guarantee: Guarantee,
}

/// Cyclic averages of `functions` over one period of `orbit`.
pub fn cyclic_averages(orbit: &GluedOrbit, functions: &[TestFunction]) -> Result<Vec<f64>> {
    let len = orbit.len();
    let emp = EmpiricalMeasure::new(orbit, 0, len)?;
    functions.iter().map(|f| emp.integrate(f)).collect()
}

/// Emits segments whose glued periodic orbit reproduces `ν` within `ζ` on
/// every function of `functions`, doubling recurrence times until the
/// check passes.
pub fn compile_measure(
    system: &ShiftSystem,
    nu: &ConvexCombination,
    zeta: f64,
    functions: &[TestFunction],
    table: &GapTable,
) -> Result<CompiledSegments> {
    if !(zeta > 0.0) {
        return Err(Error::config("zeta", "must be > 0"));
    }
    if functions.is_empty() {
        return Err(Error::Precondition("empty test-function set".into()));
    }
    let target: Vec<f64> = functions
        .iter()
        .map(|f| nu.integrate(f))
        .collect::<Result<_>>()?;

    let comps = nu.components();
    let values: Vec<Vec<f64>> = comps
        .iter()
        .map(|c| functions.iter().map(|f| c.integrate(f)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let part = partition_values(&values, functions, zeta / 3.0)?;
    let reps: Vec<&PeriodicMeasure> = part.representatives.iter().map(|&r| &comps[r]).collect();
    let theta: Vec<f64> = part
        .cells
        .iter()
        .map(|cell| cell.iter().map(|&i| nu.weights()[i]).sum())
        .collect();
    let theta_sum: f64 = theta.iter().sum();
    let theta: Vec<f64> = theta.iter().map(|w| w / theta_sum).collect();
    let f_norm = functions.iter().map(TestFunction::norm).fold(0.0, f64::max);
    let weights = rational_weights(&theta, zeta / 3.0, part.count(), f_norm)?;

    let periods: Vec<u64> = reps.iter().map(|c| c.period() as u64).collect();
    let mut t = *periods.iter().max().expect("nonempty");
    loop {
        let times = match_recurrence_times(&periods, 0.5, t)?;
        let segments: Vec<OrbitSegment> = reps
            .iter()
            .zip(&times.times)
            .zip(&weights.counts)
            .filter(|(_, &s)| s > 0)
            .map(|((c, &tj), &sj)| {
                OrbitSegment::new(c.cycle().to_vec(), sj * tj / c.period() as u64, 1)
            })
            .collect::<Result<_>>()?;
        let orbit = glue_finite(system, &segments, table)?;
        let achieved = cyclic_averages(&orbit, functions)?;
        let errors: Vec<f64> = achieved.iter().zip(&target).map(|(a, b)| (a - b).abs()).collect();
        let max_error = errors.iter().copied().fold(0.0, f64::max);
        let bridge_length: u64 = orbit.gaps().iter().sum();
        if max_error < zeta {
            let guarantee = Guarantee {
                zeta,
                functions: functions.iter().map(TestFunction::id).collect(),
                target,
                achieved,
                errors,
                max_error,
                s: weights.s,
                counts: weights.counts.clone(),
                periods: periods.clone(),
                times: times.times,
                bridge_length,
                total_length: orbit.len(),
            };
            return Ok(CompiledSegments {
                segments,
                orbit,
                guarantee,
            });
        }
        if orbit.len() * 2 > MAX_CARRIER_LEN {
            let weight_term = weights.max_error * part.count() as f64 * f_norm;
            let dominating = if weight_term >= max_error / 2.0 {
                format!("rational weights ({weight_term:.3e})")
            } else {
                format!(
                    "bridges and junctions ({} of {} symbols)",
                    bridge_length,
                    orbit.len()
                )
            };
            return Err(Error::ToleranceInfeasible {
                residual: max_error,
                tolerance: zeta,
                dominating,
            });
        }
        t *= 2;
    }
}

/// One periodic carrier word `x_n` of period `p_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Carrier {
    pub word: Word,
    pub guarantee: Guarantee,
}

impl Carrier {
    pub fn period(&self) -> u64 {
        self.word.len() as u64
    }

    /// `(1/(m p)) Σ_{h<mp} ξ(σ^{h mod p} x)` for the periodic point `x`.
    pub fn repetition_average(&self, phi: &TestFunction, m: u64) -> Result<f64> {
        let x = ShiftPoint::periodic(self.word.clone());
        EmpiricalMeasure::prefix(&x, m * self.period())?.integrate(phi)
    }
}

/// Flattens compiled blocks into one carrier word (the wrap bridge is
/// already part of the glued period).
pub fn simplify_to_cycle(compiled: &CompiledSegments) -> Result<Carrier> {
    let word = compiled
        .orbit
        .materialize(0, compiled.orbit.len() as usize)?;
    Ok(Carrier {
        word,
        guarantee: compiled.guarantee.clone(),
    })
}

/// Compiles and flattens in one step.
pub fn compile_carrier(
    system: &ShiftSystem,
    nu: &ConvexCombination,
    zeta: f64,
    functions: &[TestFunction],
    table: &GapTable,
) -> Result<Carrier> {
    simplify_to_cycle(&compile_measure(system, nu, zeta, functions, table)?)
}

/// Recomputes the achieved averages of a carrier from its raw symbols.
pub fn recheck_carrier(carrier: &Carrier, functions: &[TestFunction]) -> Result<Vec<f64>> {
    let x = ShiftPoint::periodic(carrier.word.clone());
    functions
        .iter()
        .map(|f| {
            let c = x.count_occurrences(
                match f {
                    TestFunction::Cylinder(w) => w,
                    _ => return Err(Error::Precondition("shift functions only".into())),
                },
                0,
                carrier.period(),
            )?;
            Ok(c as f64 / carrier.period() as f64)
        })
        .collect()
}
