//! Concrete hyperbolic systems: subshifts of finite type and linear toral
//! automorphisms, plus the block filtration data model.
//!
//! A subshift point is a bi-infinite sequence. It is held either as a
//! periodic cycle (exactly known at every coordinate) or as a finite
//! materialized window; every operation states the coordinates it reads and
//! fails with [`Error::DemandMoreSymbols`] when the window runs out.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Symbol = u8;
pub type Word = Vec<Symbol>;

const DIGITS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";

/// Parses a word written with one character per symbol (`0-9`, then `a-z`).
pub fn parse_word(text: &str) -> Result<Word> {
    text.bytes()
        .map(|c| {
            DIGITS
                .iter()
                .position(|&d| d == c.to_ascii_lowercase())
                .map(|p| p as Symbol)
                .ok_or_else(|| Error::Parse(format!("invalid symbol character {:?}", c as char)))
        })
        .collect()
}

pub fn format_word(word: &[Symbol]) -> String {
    word.iter().map(|&s| DIGITS[s as usize] as char).collect()
}

/// A metric value, flagged when the comparison window ran out before a
/// disagreement was found (the value is then an upper bound).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distance {
    pub value: f64,
    pub truncated: bool,
}

/// Subshift of finite type given by a 0/1 transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSystem {
    alphabet: usize,
    allowed: Vec<bool>,
    metric_base: f64,
}

impl ShiftSystem {
    /// Builds a subshift from its transition matrix, rejecting reducible
    /// matrices.
    pub fn new(transitions: &[Vec<bool>]) -> Result<Self> {
        let alphabet = transitions.len();
        if !(2..=DIGITS.len()).contains(&alphabet) {
            return Err(Error::config(
                "alphabet",
                format!("alphabet size must be in 2..={}, got {alphabet}", DIGITS.len()),
            ));
        }
        let mut allowed = Vec::with_capacity(alphabet * alphabet);
        for (i, row) in transitions.iter().enumerate() {
            if row.len() != alphabet {
                return Err(Error::config(
                    "transitions",
                    format!("row {i} has {} entries, expected {alphabet}", row.len()),
                ));
            }
            allowed.extend_from_slice(row);
        }
        let sys = ShiftSystem {
            alphabet,
            allowed,
            metric_base: 0.5,
        };
        sys.check_irreducible()?;
        Ok(sys)
    }

    pub fn full(alphabet: usize) -> Result<Self> {
        Self::new(&vec![vec![true; alphabet]; alphabet])
    }

    /// The golden-mean shift on `{0,1}`: the word `11` is forbidden.
    pub fn golden_mean() -> Self {
        Self::from_forbidden(2, &["11"]).expect("golden-mean shift is irreducible")
    }

    /// Builds a subshift on `alphabet` symbols by forbidding length-2 words.
    pub fn from_forbidden<S: AsRef<str>>(alphabet: usize, forbidden: &[S]) -> Result<Self> {
        let mut rows = vec![vec![true; alphabet]; alphabet];
        for f in forbidden {
            let w = parse_word(f.as_ref())?;
            if w.len() != 2 {
                return Err(Error::config(
                    "forbidden",
                    format!("forbidden words must have length 2, got {:?}", f.as_ref()),
                ));
            }
            for &s in &w {
                if s as usize >= alphabet {
                    return Err(Error::SymbolOutOfRange { symbol: s, alphabet });
                }
            }
            rows[w[0] as usize][w[1] as usize] = false;
        }
        Self::new(&rows)
    }

    pub fn with_metric_base(mut self, base: f64) -> Result<Self> {
        if !(base > 0.0 && base < 1.0) {
            return Err(Error::config("metric_base", format!("must lie in (0,1), got {base}")));
        }
        self.metric_base = base;
        Ok(self)
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet
    }

    pub fn metric_base(&self) -> f64 {
        self.metric_base
    }

    #[inline]
    pub fn allows(&self, from: Symbol, to: Symbol) -> bool {
        self.allowed[from as usize * self.alphabet + to as usize]
    }

    pub fn transition_rows(&self) -> Vec<Vec<bool>> {
        self.allowed.chunks(self.alphabet).map(|r| r.to_vec()).collect()
    }

    fn check_irreducible(&self) -> Result<()> {
        let n = self.alphabet;
        for a in 0..n {
            let mut seen = vec![false; n];
            let mut stack = vec![a];
            while let Some(x) = stack.pop() {
                for y in 0..n {
                    if self.allowed[x * n + y] && !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
            if let Some(b) = seen.iter().position(|s| !s) {
                return Err(Error::NotIrreducible {
                    from: a as Symbol,
                    to: b as Symbol,
                });
            }
        }
        Ok(())
    }

    pub fn check_symbols(&self, word: &[Symbol]) -> Result<()> {
        match word.iter().find(|&&s| s as usize >= self.alphabet) {
            Some(&symbol) => Err(Error::SymbolOutOfRange {
                symbol,
                alphabet: self.alphabet,
            }),
            None => Ok(()),
        }
    }

    /// True iff every adjacent pair of `word` is a permitted transition.
    pub fn is_admissible(&self, word: &[Symbol]) -> Result<bool> {
        self.check_symbols(word)?;
        Ok(word.windows(2).all(|p| self.allows(p[0], p[1])))
    }

    pub(crate) fn first_violation(&self, word: &[Symbol]) -> Option<Error> {
        word.windows(2).enumerate().find_map(|(i, p)| {
            (!self.allows(p[0], p[1])).then_some(Error::Inadmissible {
                position: i,
                from: p[0],
                to: p[1],
            })
        })
    }

    /// True iff the cyclic word closes up: admissible and last → first legal.
    pub fn is_admissible_cycle(&self, cycle: &[Symbol]) -> Result<bool> {
        if cycle.is_empty() {
            return Ok(false);
        }
        Ok(self.is_admissible(cycle)? && self.allows(cycle[cycle.len() - 1], cycle[0]))
    }

    /// `reach[len][x]`: some walk of exactly `len` edges leads from `x` to `target`.
    fn exact_reach(&self, target: Symbol, max_len: usize) -> Vec<Vec<bool>> {
        let n = self.alphabet;
        let mut reach = Vec::with_capacity(max_len + 1);
        let mut layer = vec![false; n];
        layer[target as usize] = true;
        reach.push(layer);
        for len in 1..=max_len {
            let prev = &reach[len - 1];
            let layer: Vec<bool> = (0..n)
                .map(|x| (0..n).any(|y| self.allowed[x * n + y] && prev[y]))
                .collect();
            reach.push(layer);
        }
        reach
    }

    /// Shortest word `w` such that `a·w·b` is admissible; ties broken by the
    /// lexicographically smallest word.
    pub fn connect(&self, a: Symbol, b: Symbol) -> Word {
        self.connect_min(a, b, 0)
    }

    /// Shortest word of length at least `min_len` with `a·w·b` admissible.
    pub fn connect_min(&self, a: Symbol, b: Symbol, min_len: usize) -> Word {
        let n = self.alphabet;
        let max_edges = min_len + 1 + n * n + n;
        let reach = self.exact_reach(b, max_edges);
        let edges = (min_len + 1..=max_edges)
            .find(|&k| reach[k][a as usize])
            .expect("irreducible subshift connects every pair of symbols");
        let mut word = Vec::with_capacity(edges - 1);
        let mut cur = a;
        for step in 1..edges {
            let next = (0..n as Symbol)
                .find(|&c| self.allows(cur, c) && reach[edges - step][c as usize])
                .expect("exact-length reachability table is consistent");
            word.push(next);
            cur = next;
        }
        word
    }

    /// Length of the shortest walk with at least one edge from `a` to `b`.
    pub fn min_walk(&self, a: Symbol, b: Symbol) -> usize {
        self.connect_min(a, b, 0).len() + 1
    }

    /// Applies the left shift.
    pub fn step(&self, point: &ShiftPoint) -> Result<ShiftPoint> {
        match point {
            ShiftPoint::Periodic { cycle, phase } => {
                if !self.is_admissible_cycle(cycle)? {
                    return Err(self
                        .first_violation(&[cycle.as_slice(), &cycle[..1]].concat())
                        .unwrap_or_else(|| Error::Precondition("empty cycle".into())));
                }
                Ok(ShiftPoint::Periodic {
                    cycle: cycle.clone(),
                    phase: (phase + 1) % cycle.len(),
                })
            }
            ShiftPoint::Window { symbols, origin } => {
                self.check_symbols(symbols)?;
                if let Some(err) = self.first_violation(symbols) {
                    return Err(err);
                }
                if origin + 1 >= symbols.len() {
                    return Err(Error::DemandMoreSymbols {
                        needed: *origin as u64 + 2,
                        available: symbols.len() as u64,
                    });
                }
                Ok(ShiftPoint::Window {
                    symbols: symbols.clone(),
                    origin: origin + 1,
                })
            }
        }
    }

    /// `base^k` where `k` is the smallest `|i| ≤ window` with `x_i ≠ y_i`.
    /// Agreement on the whole window returns `base^window`, flagged truncated.
    pub fn distance(&self, x: &ShiftPoint, y: &ShiftPoint, window: usize) -> Result<Distance> {
        for k in 0..=window as i64 {
            for i in [k, -k] {
                let (a, b) = (x.coordinate(i)?, y.coordinate(i)?);
                if a != b {
                    return Ok(Distance {
                        value: self.metric_base.powi(k as i32),
                        truncated: false,
                    });
                }
            }
        }
        Ok(Distance {
            value: self.metric_base.powi(window as i32),
            truncated: true,
        })
    }
}

/// A point of a subshift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShiftPoint {
    /// `x_i = cycle[(phase + i) mod p]` for every integer `i`.
    Periodic { cycle: Word, phase: usize },
    /// `x_i = symbols[origin + i]` where that index exists.
    Window { symbols: Word, origin: usize },
}

impl ShiftPoint {
    pub fn periodic(cycle: Word) -> Self {
        ShiftPoint::Periodic { cycle, phase: 0 }
    }

    pub fn coordinate(&self, i: i64) -> Result<Symbol> {
        match self {
            ShiftPoint::Periodic { cycle, phase } => {
                let p = cycle.len() as i64;
                Ok(cycle[(*phase as i64 + i).rem_euclid(p) as usize])
            }
            ShiftPoint::Window { symbols, origin } => {
                let idx = *origin as i64 + i;
                if idx < 0 || idx >= symbols.len() as i64 {
                    Err(Error::DemandMoreSymbols {
                        needed: (idx.unsigned_abs()) + 1,
                        available: symbols.len() as u64,
                    })
                } else {
                    Ok(symbols[idx as usize])
                }
            }
        }
    }

    /// Coordinates `0..len`.
    pub fn forward(&self, len: usize) -> Result<Word> {
        (0..len as i64).map(|i| self.coordinate(i)).collect()
    }

    /// How many coordinates from 0 onward are available (`None` = infinite).
    pub fn forward_len(&self) -> Option<u64> {
        match self {
            ShiftPoint::Periodic { .. } => None,
            ShiftPoint::Window { symbols, origin } => {
                Some(symbols.len().saturating_sub(*origin) as u64)
            }
        }
    }
}

pub type TorusPoint = [f64; 2];

#[inline]
pub fn reduce_mod1(v: f64) -> f64 {
    let r = v - v.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Representative of `v` modulo 1 in `[-1/2, 1/2)`.
#[inline]
pub fn lift_centered(v: f64) -> f64 {
    let r = v - v.round();
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// A hyperbolic linear automorphism `x ↦ Lx mod 1` of the 2-torus.
#[derive(Debug, Clone, PartialEq)]
pub struct ToralSystem {
    matrix: [[i64; 2]; 2],
    sigma_s: f64,
    sigma_u: f64,
    stable: [f64; 2],
    unstable: [f64; 2],
    /// Rows of the inverse eigenbasis: `e = eig[0]·e * v_u + eig[1]·e * v_s`.
    eig_inv: [[f64; 2]; 2],
}

impl ToralSystem {
    pub fn new(matrix: [[i64; 2]; 2]) -> Result<Self> {
        let [[a, b], [c, d]] = matrix;
        let det = a * d - b * c;
        if det.abs() != 1 {
            return Err(Error::config("matrix", format!("determinant must be ±1, got {det}")));
        }
        let tr = (a + d) as f64;
        let disc = tr * tr - 4.0 * det as f64;
        if disc <= 0.0 {
            return Err(Error::config("matrix", "eigenvalues are not real and distinct"));
        }
        let sq = disc.sqrt();
        let (e1, e2) = ((tr + sq) / 2.0, (tr - sq) / 2.0);
        let (sigma_u, sigma_s) = if e1.abs() > e2.abs() { (e1, e2) } else { (e2, e1) };
        if (sigma_u.abs() - 1.0).abs() < 1e-12 || (sigma_s.abs() - 1.0).abs() < 1e-12 {
            return Err(Error::config("matrix", "an eigenvalue has modulus 1"));
        }
        // Recompute the small eigenvalue from the determinant to avoid cancellation.
        let sigma_s = det as f64 / sigma_u;
        let unstable = eigenvector(matrix, sigma_u);
        let stable = eigenvector(matrix, sigma_s);
        let det_e = unstable[0] * stable[1] - stable[0] * unstable[1];
        let eig_inv = [
            [stable[1] / det_e, -stable[0] / det_e],
            [-unstable[1] / det_e, unstable[0] / det_e],
        ];
        let sys = ToralSystem {
            matrix,
            sigma_s,
            sigma_u,
            stable,
            unstable,
            eig_inv,
        };
        sys.check_invariants()?;
        Ok(sys)
    }

    /// Arnold's cat map `[[2,1],[1,1]]`.
    pub fn cat_map() -> Self {
        Self::new([[2, 1], [1, 1]]).expect("cat map is hyperbolic")
    }

    fn check_invariants(&self) -> Result<()> {
        for (v, s, name) in [
            (self.stable, self.sigma_s, "stable"),
            (self.unstable, self.sigma_u, "unstable"),
        ] {
            let lv = self.apply_linear(v);
            let res = ((lv[0] - s * v[0]).powi(2) + (lv[1] - s * v[1]).powi(2)).sqrt();
            if res > 1e-12 {
                return Err(Error::invariant(
                    "eigen-direction",
                    format!("{name} direction residual {res:.3e}"),
                ));
            }
        }
        if ((-self.lambda()).exp() - self.sigma_s.abs()).abs() > 1e-12
            || (self.mu().exp() - self.sigma_u.abs()).abs() > 1e-12 * self.sigma_u.abs()
        {
            return Err(Error::invariant("eigen-rates", "rates disagree with eigenvalues"));
        }
        Ok(())
    }

    pub fn matrix(&self) -> [[i64; 2]; 2] {
        self.matrix
    }

    /// Log of the stable contraction rate.
    pub fn lambda(&self) -> f64 {
        -self.sigma_s.abs().ln()
    }

    /// Log of the unstable expansion rate.
    pub fn mu(&self) -> f64 {
        self.sigma_u.abs().ln()
    }

    pub fn stable_eigenvalue(&self) -> f64 {
        self.sigma_s
    }

    pub fn unstable_eigenvalue(&self) -> f64 {
        self.sigma_u
    }

    pub fn stable_direction(&self) -> [f64; 2] {
        self.stable
    }

    pub fn unstable_direction(&self) -> [f64; 2] {
        self.unstable
    }

    #[inline]
    pub fn apply_linear(&self, v: [f64; 2]) -> [f64; 2] {
        let [[a, b], [c, d]] = self.matrix;
        [
            a as f64 * v[0] + b as f64 * v[1],
            c as f64 * v[0] + d as f64 * v[1],
        ]
    }

    /// Coordinates `(u, s)` of `v` in the eigenbasis `v = u·v_u + s·v_s`.
    #[inline]
    pub fn eigen_coordinates(&self, v: [f64; 2]) -> (f64, f64) {
        let m = &self.eig_inv;
        (
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        )
    }

    #[inline]
    pub fn from_eigen(&self, u: f64, s: f64) -> [f64; 2] {
        [
            u * self.unstable[0] + s * self.stable[0],
            u * self.unstable[1] + s * self.stable[1],
        ]
    }

    /// Euclidean operator norms of the spectral projections `(C_s, C_u)`.
    pub fn projection_norms(&self) -> (f64, f64) {
        let row_norm = |r: [f64; 2]| (r[0] * r[0] + r[1] * r[1]).sqrt();
        // P_u = v_u ⊗ eig_inv[0], |v_u| = 1.
        (row_norm(self.eig_inv[1]), row_norm(self.eig_inv[0]))
    }

    pub fn step(&self, x: TorusPoint) -> Result<TorusPoint> {
        check_torus_point(x)?;
        Ok(self.step_unchecked(x))
    }

    #[inline]
    pub fn step_unchecked(&self, x: TorusPoint) -> TorusPoint {
        let y = self.apply_linear(x);
        [reduce_mod1(y[0]), reduce_mod1(y[1])]
    }

    /// Sup-distance on the torus, minimized over integer translates.
    pub fn distance(&self, x: TorusPoint, y: TorusPoint) -> f64 {
        torus_distance(x, y)
    }
}

pub fn torus_distance(x: TorusPoint, y: TorusPoint) -> f64 {
    (0..2)
        .map(|i| lift_centered(x[i] - y[i]).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn check_torus_point(x: TorusPoint) -> Result<()> {
    if x.iter().all(|c| (0.0..1.0).contains(c)) {
        Ok(())
    } else {
        Err(Error::Precondition(format!("torus coordinates must lie in [0,1), got {x:?}")))
    }
}

fn eigenvector(m: [[i64; 2]; 2], sigma: f64) -> [f64; 2] {
    let [[a, b], [c, d]] = m;
    let cand1 = [b as f64, sigma - a as f64];
    let cand2 = [sigma - d as f64, c as f64];
    let n1 = (cand1[0].powi(2) + cand1[1].powi(2)).sqrt();
    let n2 = (cand2[0].powi(2) + cand2[1].powi(2)).sqrt();
    let (v, n) = if n1 >= n2 { (cand1, n1) } else { (cand2, n2) };
    let mut v = [v[0] / n, v[1] / n];
    // Sign convention: first nonzero coordinate positive.
    if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
        v = [-v[0], -v[1]];
    }
    v
}

/// Either concrete system, as loaded from configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum System {
    Shift(ShiftSystem),
    Toral(ToralSystem),
}

/// Structured-text description of a system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SystemConfig {
    Shift {
        alphabet: usize,
        #[serde(default)]
        forbidden: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        metric_base: Option<f64>,
    },
    Toral {
        matrix: [[i64; 2]; 2],
    },
}

impl SystemConfig {
    pub fn build(&self) -> Result<System> {
        match self {
            SystemConfig::Shift {
                alphabet,
                forbidden,
                metric_base,
            } => {
                let mut sys = ShiftSystem::from_forbidden(*alphabet, forbidden)?;
                if let Some(b) = metric_base {
                    sys = sys.with_metric_base(*b)?;
                }
                Ok(System::Shift(sys))
            }
            SystemConfig::Toral { matrix } => Ok(System::Toral(ToralSystem::new(*matrix)?)),
        }
    }
}

/// Per-level jump budgets `δ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpBudget {
    Constant(f64),
    /// `δ_k = first · e^{-rate (k-1)}`.
    Geometric { first: f64, rate: f64 },
}

/// Nested blocks `Λ_1 ⊆ Λ_2 ⊆ …` with sizes `ε_k = ε_0 e^{-εk}` and jump
/// budgets `δ_k`. For uniformly hyperbolic systems every block is the whole
/// space, so membership and the monotonicity properties hold trivially.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockFiltration {
    pub epsilon: f64,
    pub epsilon0: f64,
    pub budget: JumpBudget,
}

impl BlockFiltration {
    pub fn constant(epsilon0: f64, epsilon: f64, delta: f64) -> Result<Self> {
        let f = BlockFiltration {
            epsilon,
            epsilon0,
            budget: JumpBudget::Constant(delta),
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config("epsilon", "must be ≥ 0"));
        }
        if !(self.epsilon0 > 0.0 && self.epsilon0.is_finite()) {
            return Err(Error::config("epsilon0", "must be > 0"));
        }
        let ok = match self.budget {
            JumpBudget::Constant(d) => d > 0.0,
            JumpBudget::Geometric { first, rate } => first > 0.0 && rate >= 0.0,
        };
        if !ok {
            return Err(Error::config("delta", "jump budgets must be positive"));
        }
        Ok(())
    }

    pub fn epsilon_k(&self, k: u32) -> f64 {
        self.epsilon0 * (-self.epsilon * k as f64).exp()
    }

    pub fn delta_k(&self, k: u32) -> f64 {
        match self.budget {
            JumpBudget::Constant(d) => d,
            JumpBudget::Geometric { first, rate } => {
                first * (-rate * (k.max(1) - 1) as f64).exp()
            }
        }
    }

    /// Block membership; every level is the whole space.
    pub fn contains<P>(&self, _level: u32, _point: &P) -> bool {
        true
    }

    /// Checks nesting, two-sided image monotonicity and the `ε_k` sequence
    /// for levels `1..=max_level`.
    pub fn check(&self, max_level: u32) -> Result<()> {
        self.validate()?;
        for k in 1..max_level {
            let (a, b) = (self.epsilon_k(k), self.epsilon_k(k + 1));
            let ok = if self.epsilon > 0.0 { b < a } else { b == a };
            if !ok {
                return Err(Error::invariant(
                    "epsilon_k monotonicity",
                    format!("ε_{k} = {a}, ε_{} = {b}", k + 1),
                ));
            }
            if self.delta_k(k + 1) > self.delta_k(k) {
                return Err(Error::invariant("delta_k monotonicity", format!("level {k}")));
            }
        }
        Ok(())
    }
}
