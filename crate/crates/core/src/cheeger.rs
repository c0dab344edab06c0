//! Cheeger-type isoperimetric constants of finite symmetric forms.
//!
//! A form is a symmetric jump measure `J` with zero diagonal together with
//! its reversible distribution `π`. The constants are infima over subsets
//! `A` of ratios built from the boundary flux `J(A × A^c)` and `π(A)`;
//! kernels may first be reweighted as `J^{(α)} = J / r^α`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::chain::FiniteChain;
use crate::error::Error;
use crate::Result;

/// Largest state count searched exhaustively.
pub const EXHAUSTIVE_CAP: usize = 22;

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricKernel {
    pi: Vec<f64>,
    /// Row-major `m × m`.
    j: Vec<f64>,
}

impl SymmetricKernel {
    /// Validates symmetry (1e-12 relative), zero diagonal, non-negativity,
    /// and that `π` is a positive probability vector (sum within 1e-9).
    pub fn new(pi: Vec<f64>, j: Vec<Vec<f64>>) -> Result<Self> {
        let m = pi.len();
        if m < 2 {
            return Err(Error::domain("a kernel needs at least two states"));
        }
        if j.len() != m {
            return Err(Error::LengthMismatch { expected: m, got: j.len() });
        }
        if let Some(bad) = pi.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::domain(format!("pi[{bad}] = {} is not positive", pi[bad])));
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("pi sums to {total}, not 1")));
        }
        let mut flat = Vec::with_capacity(m * m);
        for (x, row) in j.iter().enumerate() {
            if row.len() != m {
                return Err(Error::LengthMismatch { expected: m, got: row.len() });
            }
            for (y, &v) in row.iter().enumerate() {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::domain(format!("J[{x}][{y}] = {v} must be finite and non-negative")));
                }
                if x == y && v != 0.0 {
                    return Err(Error::domain(format!("J[{x}][{x}] = {v}; the diagonal must be zero")));
                }
                let w = j[y][x];
                if (v - w).abs() > 1e-12 * v.abs().max(w.abs()) {
                    return Err(Error::domain(format!("J is not symmetric at ({x}, {y}): {v} vs {w}")));
                }
            }
            flat.extend_from_slice(row);
        }
        Ok(SymmetricKernel { pi, j: flat })
    }

    pub fn size(&self) -> usize {
        self.pi.len()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn j(&self, x: usize, y: usize) -> f64 {
        self.j[x * self.size() + y]
    }

    /// Total jump rate `q(x) = Σ_y J(x,y) / π_x`.
    pub fn q(&self, x: usize) -> f64 {
        let m = self.size();
        self.j[x * m..(x + 1) * m].iter().sum::<f64>() / self.pi[x]
    }

    /// `sup_x q(x)`.
    pub fn max_rate(&self) -> f64 {
        (0..self.size()).map(|x| self.q(x)).fold(0.0, f64::max)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.j.chunks(self.size()).map(|r| r.to_vec()).collect()
    }
}

/// `J(i, i+1) = π_i b_i`.
pub fn kernel_from_chain(chain: &FiniteChain) -> SymmetricKernel {
    let m = chain.size();
    let pi = chain.pi().to_vec();
    let mut j = vec![0.0; m * m];
    for i in 0..m - 1 {
        let v = pi[i] * chain.birth()[i];
        j[i * m + i + 1] = v;
        j[(i + 1) * m + i] = v;
    }
    SymmetricKernel { pi, j }
}

/// `r(x,y) = max(q(x), q(y))`, row-major.
pub fn default_r(kernel: &SymmetricKernel) -> Vec<f64> {
    let m = kernel.size();
    let q: Vec<f64> = (0..m).map(|x| kernel.q(x)).collect();
    let mut r = vec![0.0; m * m];
    for x in 0..m {
        for y in 0..m {
            r[x * m + y] = q[x].max(q[y]);
        }
    }
    r
}

/// `J^{(α)}(x,y) = J(x,y) / r(x,y)^α` (0 where `r = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaKernel {
    pub alpha: f64,
    pi: Vec<f64>,
    j: Vec<f64>,
}

impl AlphaKernel {
    /// `r` is row-major `m × m`, symmetric and non-negative.
    pub fn new(kernel: &SymmetricKernel, r: &[f64], alpha: f64) -> Result<Self> {
        let m = kernel.size();
        if r.len() != m * m {
            return Err(Error::LengthMismatch { expected: m * m, got: r.len() });
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::domain(format!("alpha must be >= 0, got {alpha}")));
        }
        for x in 0..m {
            for y in 0..m {
                let v = r[x * m + y];
                if !(v.is_finite() && v >= 0.0) || v != r[y * m + x] {
                    return Err(Error::domain(format!("weight r must be symmetric and non-negative at ({x}, {y})")));
                }
            }
        }
        let j = kernel
            .j
            .iter()
            .zip(r)
            .map(|(&j, &r)| {
                if alpha == 0.0 {
                    j
                } else if r > 0.0 {
                    j / libm::pow(r, alpha)
                } else {
                    0.0
                }
            })
            .collect();
        Ok(AlphaKernel { alpha, pi: kernel.pi.clone(), j })
    }

    pub fn with_default_r(kernel: &SymmetricKernel, alpha: f64) -> Result<Self> {
        Self::new(kernel, &default_r(kernel), alpha)
    }

    /// `J^{(0)} = J`.
    pub fn plain(kernel: &SymmetricKernel) -> Self {
        AlphaKernel { alpha: 0.0, pi: kernel.pi.clone(), j: kernel.j.clone() }
    }

    pub fn size(&self) -> usize {
        self.pi.len()
    }

    pub fn j(&self, x: usize, y: usize) -> f64 {
        self.j[x * self.size() + y]
    }

    /// `max_x Σ_y J(x,y) / π_x`; at most 1 for `α = 1` with the default weight.
    pub fn row_mass(&self) -> f64 {
        let m = self.size();
        (0..m)
            .map(|x| self.j[x * m..(x + 1) * m].iter().sum::<f64>() / self.pi[x])
            .fold(0.0, f64::max)
    }
}

/// The ratio being minimised over subsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    /// `J(A×A^c) / (π(A) ∧ π(A^c))` over proper subsets.
    Poincare,
    /// `J(A×A^c) / [π(A) ∧ π(A^c)]^e` with `e = (2q-3)/(2q-2)`.
    Nash { exponent: f64 },
    /// `J(A×A^c) / (π(A) √(log(e + 1/π(A))))` over `0 < π(A) <= level`.
    LogSobolevLevel { level: f64 },
    /// `(J(A×A^c) + δ π(A)) / (π(A) √(1 - log π(A)))` over non-empty `A`.
    LogSobolevShift { delta: f64 },
}

impl Functional {
    fn proper_only(self) -> bool {
        matches!(self, Functional::Poincare | Functional::Nash { .. })
    }

    /// `None` when `A` is outside the family.
    fn value(self, cut: f64, pa: f64, empty: bool, full: bool) -> Option<f64> {
        if empty || (full && self.proper_only()) {
            return None;
        }
        let cut = cut.max(0.0);
        match self {
            Functional::Poincare => Some(cut / pa.min(1.0 - pa)),
            Functional::Nash { exponent } => Some(cut / libm::pow(pa.min(1.0 - pa), exponent)),
            Functional::LogSobolevLevel { level } => (pa <= level * (1.0 + 1e-12))
                .then(|| cut / (pa * libm::sqrt(libm::log(core::f64::consts::E + 1.0 / pa)))),
            Functional::LogSobolevShift { delta } => {
                let pa = pa.min(1.0);
                Some((cut + delta * pa) / (pa * libm::sqrt(1.0 - libm::log(pa))))
            }
        }
    }
}

/// `(2q - 3) / (2q - 2)` for `q > 1`.
pub fn nash_exponent(q: f64) -> Result<f64> {
    if !(q > 1.0) {
        return Err(Error::domain(format!("Nash parameter q must exceed 1, got {q}")));
    }
    if q.is_infinite() {
        return Ok(1.0);
    }
    Ok((2.0 * q - 3.0) / (2.0 * q - 2.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutValue {
    /// The infimum (`+∞` for an empty family).
    pub value: f64,
    /// Exhaustive result; `false` marks a heuristic upper bound.
    pub exact: bool,
    /// A minimising subset.
    pub argmin: Vec<bool>,
}

impl CutValue {
    pub fn empty_family(&self) -> bool {
        self.value == f64::INFINITY
    }

    fn none(m: usize, exact: bool) -> Self {
        CutValue { value: f64::INFINITY, exact, argmin: vec![false; m] }
    }

    /// Smaller of two partial results.
    pub fn merge(self, other: CutValue) -> CutValue {
        let exact = self.exact && other.exact;
        let mut best = if other.value < self.value { other } else { self };
        best.exact = exact;
        best
    }
}

/// Search configuration for the constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub cap: usize,
    pub seed: u64,
    /// Annealing moves per restart, per state.
    pub moves_per_state: usize,
    pub restarts: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { cap: EXHAUSTIVE_CAP, seed: 0, moves_per_state: 4000, restarts: 8 }
    }
}

/// Incrementally maintained subset with its cut flux and mass.
struct Cut<'a> {
    k: &'a AlphaKernel,
    inside: Vec<bool>,
    count: usize,
    flux: f64,
    mass: f64,
}

impl<'a> Cut<'a> {
    fn new(k: &'a AlphaKernel, inside: Vec<bool>) -> Self {
        let count = inside.iter().filter(|b| **b).count();
        let mut cut = Cut { k, inside, count, flux: 0.0, mass: 0.0 };
        cut.resync();
        cut
    }

    /// Recomputes flux and mass from scratch, clearing incremental drift.
    fn resync(&mut self) {
        let (k, m) = (self.k, self.k.size());
        self.flux = 0.0;
        self.mass = 0.0;
        for x in (0..m).filter(|&x| self.inside[x]) {
            self.mass += k.pi[x];
            self.flux += (0..m).filter(|&y| !self.inside[y]).map(|y| k.j(x, y)).sum::<f64>();
        }
    }

    /// Change in flux if `x` were toggled.
    fn delta(&self, x: usize) -> f64 {
        let m = self.k.size();
        let row = &self.k.j[x * m..(x + 1) * m];
        let (mut same, mut other) = (0.0, 0.0);
        for (y, &w) in row.iter().enumerate() {
            if y != x {
                if self.inside[y] == self.inside[x] {
                    same += w;
                } else {
                    other += w;
                }
            }
        }
        same - other
    }

    fn toggle(&mut self, x: usize) {
        self.flux += self.delta(x);
        if self.inside[x] {
            self.mass -= self.k.pi[x];
            self.count -= 1;
        } else {
            self.mass += self.k.pi[x];
            self.count += 1;
        }
        self.inside[x] = !self.inside[x];
    }

    fn value(&self, f: Functional) -> Option<f64> {
        let m = self.k.size();
        f.value(self.flux, self.mass, self.count == 0, self.count == m)
    }
}

/// Exhaustive inf over the subsets whose membership of the top `prefix_bits`
/// states is given by the bits of `prefix`; the `2^prefix_bits` parts
/// partition the search for parallel evaluation.
pub fn exhaustive_part(k: &AlphaKernel, f: Functional, prefix_bits: usize, prefix: u64) -> Result<CutValue> {
    let m = k.size();
    if m > 63 || prefix_bits > m || (prefix_bits < 64 && prefix >> prefix_bits != 0) {
        return Err(Error::domain("prefix does not fit the state space"));
    }
    let low = m - prefix_bits;
    let mut inside = vec![false; m];
    for b in 0..prefix_bits {
        inside[low + b] = (prefix >> b) & 1 == 1;
    }
    let mut cut = Cut::new(k, inside);
    let mut best = CutValue::none(m, true);
    let mut consider = |cut: &Cut| {
        if let Some(v) = cut.value(f) {
            if v < best.value {
                best.value = v;
                best.argmin.clone_from(&cut.inside);
            }
        }
    };
    consider(&cut);
    // reflected Gray code: step s toggles bit trailing_zeros(s)
    for s in 1u64..(1u64 << low) {
        cut.toggle(s.trailing_zeros() as usize);
        if s % 1024 == 0 {
            cut.resync();
        }
        consider(&cut);
    }
    Ok(finalize(k, f, best))
}

/// Re-evaluates the minimiser from scratch so the reported value carries no drift.
fn finalize(k: &AlphaKernel, f: Functional, mut best: CutValue) -> CutValue {
    if best.value.is_finite() {
        if let Some(v) = Cut::new(k, best.argmin.clone()).value(f) {
            best.value = v;
        }
    }
    best
}

/// Exhaustive inf over all subsets.
pub fn exhaustive(k: &AlphaKernel, f: Functional) -> Result<CutValue> {
    exhaustive_part(k, f, 0, 0)
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Simulated-annealing search; the result is an upper bound on the inf.
/// Interval cuts `{i..j}` and random subsets seed the restarts.
pub fn heuristic(k: &AlphaKernel, f: Functional, opts: &SearchOptions) -> CutValue {
    let m = k.size();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = CutValue::none(m, false);
    let record = |cut: &Cut, best: &mut CutValue| {
        if let Some(v) = cut.value(f) {
            if v < best.value {
                best.value = v;
                best.argmin.clone_from(&cut.inside);
            }
        }
    };
    for i in 0..m {
        let mut cut = Cut::new(k, (0..m).map(|x| x == i).collect());
        record(&cut, &mut best);
        for x in i + 1..m {
            cut.toggle(x);
            record(&cut, &mut best);
        }
    }
    let moves = opts.moves_per_state * m;
    for restart in 0..opts.restarts {
        let start: Vec<bool> = if restart == 0 && best.value.is_finite() {
            best.argmin.clone()
        } else {
            (0..m).map(|_| rng.next_u64() & 1 == 1).collect()
        };
        let mut cut = Cut::new(k, start);
        let mut cur = cut.value(f);
        let t0 = if best.value.is_finite() && best.value > 0.0 { best.value } else { 1.0 };
        for step in 0..moves {
            let temp = t0 * libm::pow(1e-4, step as f64 / moves as f64);
            let x = (rng.next_u64() % m as u64) as usize;
            cut.toggle(x);
            let next = cut.value(f);
            let accept = match (cur, next) {
                (_, None) => false,
                (None, Some(_)) => true,
                (Some(c), Some(n)) => n <= c || uniform(&mut rng) < libm::exp(-(n - c) / temp),
            };
            if accept {
                cur = next;
                record(&cut, &mut best);
            } else {
                cut.toggle(x);
            }
            if step % 1024 == 1023 {
                cut.resync();
                cur = cut.value(f);
            }
        }
    }
    // greedy polish of the best subset
    if best.value.is_finite() {
        let mut cut = Cut::new(k, best.argmin.clone());
        loop {
            let mut improved = false;
            for x in 0..m {
                cut.toggle(x);
                match cut.value(f) {
                    Some(v) if v < best.value => {
                        best.value = v;
                        best.argmin.clone_from(&cut.inside);
                        improved = true;
                    }
                    _ => cut.toggle(x),
                }
            }
            if !improved {
                break;
            }
        }
    }
    finalize(k, f, best)
}

/// Exhaustive within `opts.cap`, heuristic beyond.
pub fn constant(k: &AlphaKernel, f: Functional, opts: &SearchOptions) -> Result<CutValue> {
    if k.size() <= opts.cap.min(63) {
        exhaustive(k, f)
    } else {
        Ok(heuristic(k, f, opts))
    }
}

pub fn cheeger_poincare(k: &AlphaKernel) -> Result<CutValue> {
    constant(k, Functional::Poincare, &SearchOptions::default())
}

pub fn cheeger_logsobolev_r(k: &AlphaKernel, level: f64) -> Result<CutValue> {
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::domain(format!("level must lie in (0, 1], got {level}")));
    }
    constant(k, Functional::LogSobolevLevel { level }, &SearchOptions::default())
}

pub fn cheeger_logsobolev_delta(k: &AlphaKernel, delta: f64) -> Result<CutValue> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::domain(format!("delta must be >= 0, got {delta}")));
    }
    constant(k, Functional::LogSobolevShift { delta }, &SearchOptions::default())
}

pub fn cheeger_nash(k: &AlphaKernel, q: f64) -> Result<CutValue> {
    let exponent = nash_exponent(q)?;
    constant(k, Functional::Nash { exponent }, &SearchOptions::default())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LawlerSokal {
    /// The Poincaré-type constant at `α = 0`.
    pub k: CutValue,
    /// `sup_x q(x)`.
    pub max_rate: f64,
    /// `k² / (2M)`.
    pub bound: f64,
}

/// `λ_1 >= k² / (2M)`.
pub fn lawler_sokal_bound(kernel: &SymmetricKernel) -> Result<LawlerSokal> {
    lawler_sokal_with(kernel, &SearchOptions::default())
}

pub fn lawler_sokal_with(kernel: &SymmetricKernel, opts: &SearchOptions) -> Result<LawlerSokal> {
    let k = constant(&AlphaKernel::plain(kernel), Functional::Poincare, opts)?;
    let max_rate = kernel.max_rate();
    let bound = k.value * k.value / (2.0 * max_rate);
    Ok(LawlerSokal { k, max_rate, bound })
}
