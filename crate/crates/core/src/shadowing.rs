//! Shadowing of pseudo-orbits.
//!
//! For a hyperbolic toral automorphism the shadowing correction is linear in
//! the jump sequence and splits along the eigen-directions: stable
//! components are propagated forward, unstable components backward. Finite
//! pseudo-orbits get an exact true orbit from the truncated sums, periodic
//! ones from the closed-form geometric series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::{
    check_torus_point, lift_centered, reduce_mod1, BlockFiltration, JumpBudget, ShiftSystem,
    Symbol, ToralSystem, TorusPoint, Word,
};

/// A finite or periodic pseudo-orbit with block levels `s_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoOrbit<P> {
    points: Vec<P>,
    levels: Vec<u32>,
    periodic: bool,
}

impl<P> PseudoOrbit<P> {
    pub fn new(points: Vec<P>, levels: Vec<u32>, periodic: bool) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Precondition("pseudo-orbit is empty".into()));
        }
        if points.len() != levels.len() {
            return Err(Error::Precondition(format!(
                "{} points but {} levels",
                points.len(),
                levels.len()
            )));
        }
        if let Some(i) = levels.iter().position(|&s| s == 0) {
            return Err(Error::Precondition(format!("level at index {i} must be ≥ 1")));
        }
        let mut pairs: Vec<(usize, usize)> = (1..levels.len()).map(|i| (i - 1, i)).collect();
        if periodic && levels.len() > 1 {
            pairs.push((levels.len() - 1, 0));
        }
        for (a, b) in pairs {
            if levels[a].abs_diff(levels[b]) > 1 {
                return Err(Error::Precondition(format!(
                    "levels jump from {} to {} at index {b}",
                    levels[a], levels[b]
                )));
            }
        }
        Ok(PseudoOrbit {
            points,
            levels,
            periodic,
        })
    }

    /// All points at level 1.
    pub fn at_level_one(points: Vec<P>, periodic: bool) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1; n], periodic)
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index pairs `(n, n+1)` whose jump is constrained.
    fn steps(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.points.len();
        let count = if self.periodic { n } else { n - 1 };
        (0..count).map(move |i| (i, (i + 1) % n))
    }
}

impl PseudoOrbit<TorusPoint> {
    /// Lifted errors `e_n = L x_n − x_{n+1}` in `[−1/2, 1/2)²`.
    pub fn errors(&self, system: &ToralSystem) -> Vec<[f64; 2]> {
        self.steps()
            .map(|(a, b)| {
                let lx = system.apply_linear(self.points[a]);
                let y = self.points[b];
                [lift_centered(lx[0] - y[0]), lift_centered(lx[1] - y[1])]
            })
            .collect()
    }

    /// Jumps `d(f x_n, x_{n+1})` in the torus metric.
    pub fn jumps(&self, system: &ToralSystem) -> Vec<f64> {
        self.errors(system)
            .iter()
            .map(|e| e[0].abs().max(e[1].abs()))
            .collect()
    }

    pub fn check_budget(&self, system: &ToralSystem, filtration: &BlockFiltration) -> Result<()> {
        for (i, j) in self.jumps(system).into_iter().enumerate() {
            let budget = filtration.delta_k(self.levels[i]);
            if j > budget {
                return Err(Error::Precondition(format!(
                    "jump {j:.3e} at index {i} exceeds budget δ_{} = {budget:.3e}",
                    self.levels[i]
                )));
            }
        }
        Ok(())
    }
}

/// `C_s e^ε/(1 − e^{−λ+ε}) + C_u/(1 − e^{−μ+ε})`; at `ε = 0` this is the
/// factor between the largest Euclidean jump and the largest correction.
pub fn bound_constant(system: &ToralSystem, epsilon: f64) -> Result<f64> {
    let (cs, cu) = system.projection_norms();
    if epsilon >= system.lambda().min(system.mu()) {
        return Err(Error::config(
            "epsilon",
            format!("must be below the hyperbolicity rates, got {epsilon}"),
        ));
    }
    Ok(cs * epsilon.exp() / (1.0 - (-system.lambda() + epsilon).exp())
        + cu / (1.0 - (-system.mu() + epsilon).exp()))
}

/// A filtration whose jump budgets guarantee `η ε_{s_n}`-shadowing:
/// `δ_k = η ε_k / (√2 K_ε)`.
pub fn sufficient_filtration(
    system: &ToralSystem,
    eta: f64,
    epsilon0: f64,
    epsilon: f64,
) -> Result<BlockFiltration> {
    if !(eta > 0.0) {
        return Err(Error::config("eta", "must be > 0"));
    }
    let k = bound_constant(system, epsilon)?;
    let first = eta * epsilon0 * (-epsilon).exp() / (std::f64::consts::SQRT_2 * k);
    let f = BlockFiltration {
        epsilon,
        epsilon0,
        budget: JumpBudget::Geometric {
            first,
            rate: epsilon,
        },
    };
    f.validate()?;
    Ok(f)
}

/// Output of [`shadow_toral`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToralShadow {
    pub points: Vec<TorusPoint>,
    pub corrections: Vec<[f64; 2]>,
    /// `sup_n d(f y_n, y_{n+1})`.
    pub residual: f64,
    /// `sup_n |w_n|` (Euclidean).
    pub max_correction: f64,
    /// `K · sup_n |e_n|` (Euclidean), a bound for `max_correction`.
    pub correction_bound: f64,
}

/// Shadows a toral pseudo-orbit by a true orbit `y_n = x_n + w_n`.
pub fn shadow_toral(
    system: &ToralSystem,
    orbit: &PseudoOrbit<TorusPoint>,
    filtration: &BlockFiltration,
) -> Result<ToralShadow> {
    for &x in orbit.points() {
        check_torus_point(x)?;
    }
    orbit.check_budget(system, filtration)?;
    let errors = orbit.errors(system);
    let corrections = corrections_for(system, &errors, orbit.len(), orbit.is_periodic());

    let points: Vec<TorusPoint> = orbit
        .points()
        .iter()
        .zip(&corrections)
        .map(|(x, w)| [reduce_mod1(x[0] + w[0]), reduce_mod1(x[1] + w[1])])
        .collect();
    let residual = orbit
        .steps()
        .map(|(a, b)| system.distance(system.step_unchecked(points[a]), points[b]))
        .fold(0.0, f64::max);
    let euclid = |v: &[f64; 2]| v[0].hypot(v[1]);
    let max_correction = corrections.iter().map(euclid).fold(0.0, f64::max);
    let max_error = errors.iter().map(euclid).fold(0.0, f64::max);
    let correction_bound = bound_constant(system, 0.0)? * max_error;
    Ok(ToralShadow {
        points,
        corrections,
        residual,
        max_correction,
        correction_bound,
    })
}

/// The linear correction `w` solving `w_{n+1} = L w_n + e_n`.
pub fn corrections_for(
    system: &ToralSystem,
    errors: &[[f64; 2]],
    len: usize,
    periodic: bool,
) -> Vec<[f64; 2]> {
    let (ss, su) = (system.stable_eigenvalue(), system.unstable_eigenvalue());
    let (eu, es): (Vec<f64>, Vec<f64>) =
        errors.iter().map(|&e| system.eigen_coordinates(e)).unzip();
    let mut a = vec![0.0; len];
    let mut b = vec![0.0; len];
    if periodic {
        let p = len;
        // Closed-form starting values of the periodic sums.
        let (ds, du) = (1.0 - ss.powi(p as i32), 1.0 - su.powi(-(p as i32)));
        let mut acc_s = 0.0;
        let mut acc_u = 0.0;
        let mut ps = 1.0;
        let mut pu = 1.0 / su;
        for r in 0..p {
            acc_s += ps * es[(2 * p - 1 - r) % p];
            acc_u += pu * eu[(p - 1 + r) % p];
            ps *= ss;
            pu /= su;
        }
        a[0] = acc_s / ds;
        b[p - 1] = -acc_u / du;
        for n in 0..p - 1 {
            a[n + 1] = ss * a[n] + es[n];
        }
        for n in (0..p - 1).rev() {
            b[n] = (b[n + 1] - eu[n]) / su;
        }
    } else {
        for n in 0..len - 1 {
            a[n + 1] = ss * a[n] + es[n];
        }
        for n in (0..len - 1).rev() {
            b[n] = (b[n + 1] - eu[n]) / su;
        }
    }
    (0..len).map(|n| system.from_eigen(b[n], a[n])).collect()
}

/// One entry of a shadowing verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowEntry {
    pub index: usize,
    pub distance: f64,
    pub allowed: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowReport {
    pub entries: Vec<ShadowEntry>,
    pub max_ratio: f64,
    pub failures: Vec<usize>,
    /// `sup_n d(f y_n, y_{n+1})` of the candidate itself.
    pub orbit_residual: f64,
    pub pass: bool,
}

/// Compares a candidate orbit `y_n` with the pseudo-orbit: passes iff
/// `d(y_n, x_n) ≤ η ε_{s_n}` at every index.
pub fn verify_shadowing(
    system: &ToralSystem,
    candidate: &[TorusPoint],
    orbit: &PseudoOrbit<TorusPoint>,
    eta: f64,
    filtration: &BlockFiltration,
) -> Result<ShadowReport> {
    if candidate.len() != orbit.len() {
        return Err(Error::Precondition(format!(
            "candidate has {} points, pseudo-orbit {}",
            candidate.len(),
            orbit.len()
        )));
    }
    let mut entries = Vec::with_capacity(candidate.len());
    let mut failures = Vec::new();
    let mut max_ratio: f64 = 0.0;
    for (index, (&y, &x)) in candidate.iter().zip(orbit.points()).enumerate() {
        let distance = system.distance(y, x);
        let allowed = eta * filtration.epsilon_k(orbit.levels()[index]);
        let ratio = distance / allowed;
        if ratio > 1.0 {
            failures.push(index);
        }
        max_ratio = max_ratio.max(ratio);
        entries.push(ShadowEntry {
            index,
            distance,
            allowed,
            ratio,
        });
    }
    let orbit_residual = orbit
        .steps()
        .map(|(a, b)| system.distance(system.step_unchecked(candidate[a]), candidate[b]))
        .fold(0.0, f64::max);
    Ok(ShadowReport {
        pass: failures.is_empty(),
        entries,
        max_ratio,
        failures,
        orbit_residual,
    })
}

/// Concatenation of admissible segments joined by shortest bridges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicShadow {
    pub symbols: Word,
    /// Start of each segment in `symbols`.
    pub offsets: Vec<usize>,
    /// Bridge after each segment (the last one closes the cycle when periodic).
    pub bridges: Vec<Word>,
}

/// Joins segments with [`ShiftSystem::connect`] bridges; in periodic mode
/// the wrap junction is bridged too and `symbols` is one full period.
pub fn shadow_symbolic(
    system: &ShiftSystem,
    segments: &[Word],
    periodic: bool,
    min_gap_one: bool,
) -> Result<SymbolicShadow> {
    if segments.is_empty() {
        return Err(Error::Precondition("no segments to glue".into()));
    }
    for seg in segments {
        if seg.is_empty() {
            return Err(Error::Precondition("segments must be nonempty".into()));
        }
        system.check_symbols(seg)?;
        if let Some(e) = system.first_violation(seg) {
            return Err(e);
        }
    }
    let min = usize::from(min_gap_one);
    let mut symbols = Vec::new();
    let mut offsets = Vec::with_capacity(segments.len());
    let mut bridges = Vec::with_capacity(segments.len());
    for (i, seg) in segments.iter().enumerate() {
        offsets.push(symbols.len());
        symbols.extend_from_slice(seg);
        let next: Option<Symbol> = match segments.get(i + 1) {
            Some(n) => Some(n[0]),
            None if periodic => Some(segments[0][0]),
            None => None,
        };
        if let Some(n) = next {
            let bridge = system.connect_min(seg[seg.len() - 1], n, min);
            symbols.extend_from_slice(&bridge);
            bridges.push(bridge);
        }
    }
    let check = if periodic {
        system.is_admissible_cycle(&symbols)?
    } else {
        system.is_admissible(&symbols)?
    };
    if !check {
        return Err(Error::invariant("bridged concatenation", "junction is inadmissible"));
    }
    Ok(SymbolicShadow {
        symbols,
        offsets,
        bridges,
    })
}
