//! Two-sided spectral gap bounds from the dual variational formula.
//!
//! For an increasing test function `f` with `f_0 = 0` and `f̄ = f - π(f)`,
//! `I_i(f) = (μ_i b_i (f_{i+1} - f_i))^{-1} Σ_{j>i} μ_j f̄_j`. Any strictly
//! increasing `f` gives `λ_1 >= 1 / sup_i I_i(f)`; any `f` that is strictly
//! increasing up to a plateau `k` and constant afterwards gives
//! `λ_1 <= 1 / min_{i<k} I_i(f)`.
//!
//! Infinite chains are handled on a segment `{0..H}` where the μ-mass beyond
//! `H` is negligible and enclosed by a geometric certificate. The sup of
//! `I_i` over indices past the accurately evaluable range is certified by the
//! shape of the sequence on a trailing window (see [`TailCertificate`]).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::chain::{eventual_sup, truncate, ChainSpec, FiniteChain, StateBound};
use crate::enclosure::Enclosure;
use crate::error::Error;
use crate::Result;

/// The segment ends at the first `H` with `μ_H < 1e-80 μ[0,H]`.
const TAIL_LN_RATIO: f64 = -184.206_807_439_523_6;
const MIN_SEGMENT: usize = 32;
/// `I_i` counts as accurately evaluated while its tail slack is below this fraction.
const TAIL_REL_WIDTH: f64 = 1e-9;
/// Outward allowance for floating-point rounding on emitted bounds.
const ROUND: f64 = 1e-13;

/// How values past the supplied ones continue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extension {
    /// Constant increments.
    Linear,
    /// Increments multiplied by `g >= 1` per step.
    Geometric(f64),
    /// Constant after the last value.
    Plateau,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionClass {
    /// Strictly increasing up to a plateau level `k`, constant afterwards.
    Plateau,
    /// Strictly increasing everywhere.
    Increasing,
}

/// A test function `f_0 = 0 < f_1 < ...`, given by values on an initial
/// segment and an extension rule.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionDiscrete {
    values: Vec<f64>,
    extension: Extension,
}

fn check_increasing(values: &[f64]) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::domain("a test function needs at least two values"));
    }
    if values[0] != 0.0 {
        return Err(Error::domain(format!("test function must start at f_0 = 0, got {}", values[0])));
    }
    for i in 1..values.len() {
        if !(values[i].is_finite() && values[i] > values[i - 1]) {
            return Err(Error::domain(format!(
                "test function not strictly increasing at index {i} ({} -> {})",
                values[i - 1],
                values[i]
            )));
        }
    }
    Ok(())
}

impl TestFunctionDiscrete {
    /// Strictly increasing function continued with its last increment.
    pub fn increasing(values: Vec<f64>) -> Result<Self> {
        check_increasing(&values)?;
        Ok(TestFunctionDiscrete { values, extension: Extension::Linear })
    }

    /// Strictly increasing function whose increments grow by `g` past the last value.
    pub fn increasing_geometric(values: Vec<f64>, g: f64) -> Result<Self> {
        check_increasing(&values)?;
        if !(g.is_finite() && g >= 1.0) {
            return Err(Error::domain(format!("growth factor must be >= 1, got {g}")));
        }
        Ok(TestFunctionDiscrete { values, extension: Extension::Geometric(g) })
    }

    /// `f_i = f_{min(i,k)}`, strictly increasing on `[0,k]`. Values past `k` are ignored.
    pub fn plateau(mut values: Vec<f64>, k: usize) -> Result<Self> {
        if k == 0 || values.len() <= k {
            return Err(Error::domain(format!("plateau level {k} needs values f_0..f_{k}")));
        }
        values.truncate(k + 1);
        check_increasing(&values)?;
        Ok(TestFunctionDiscrete { values, extension: Extension::Plateau })
    }

    /// `f_i = i` (or `min(i, k)`).
    pub fn identity(len: usize) -> Self {
        TestFunctionDiscrete { values: (0..len.max(2)).map(|i| i as f64).collect(), extension: Extension::Linear }
    }

    pub fn class(&self) -> FunctionClass {
        match self.extension {
            Extension::Plateau => FunctionClass::Plateau,
            _ => FunctionClass::Increasing,
        }
    }

    pub fn plateau_level(&self) -> Option<usize> {
        (self.extension == Extension::Plateau).then(|| self.values.len() - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    /// `f_i` including the extension.
    pub fn value(&self, i: usize) -> f64 {
        let k = self.values.len() - 1;
        if i <= k {
            return self.values[i];
        }
        let last = self.values[k];
        let d = last - self.values[k - 1];
        let m = (i - k) as f64;
        match self.extension {
            Extension::Plateau => last,
            Extension::Linear => last + m * d,
            Extension::Geometric(1.0) => last + m * d,
            Extension::Geometric(g) => last + d * g * (libm::pow(g, m) - 1.0) / (g - 1.0),
        }
    }
}

/// Where an emitted bound came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// `(4δ)^{-1}` or `μ/δ`.
    Explicit,
    /// The seed `√φ` of the iteration.
    Seed,
    /// The `n`-th iterate (the seed is iterate 1).
    Iterate(usize),
    /// A caller-supplied test function.
    TestFunction,
    /// No finite bound certified (lower 0 or upper infinity).
    Trivial,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Explicit => write!(f, "explicit-delta"),
            Source::Seed => write!(f, "seed"),
            Source::Iterate(n) => write!(f, "iterate-{n}"),
            Source::TestFunction => write!(f, "test-function"),
            Source::Trivial => write!(f, "trivial"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapBracket {
    pub lower: f64,
    pub upper: f64,
    pub lower_source: Source,
    pub upper_source: Source,
    /// Last state index of the evaluation segment.
    pub horizon: usize,
}

impl GapBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lower - tol && x <= self.upper + tol
    }
}

/// How the sup of `I_i` past the evaluated range was bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailCertificate {
    /// Finite chain: every index evaluated.
    Exact,
    /// Nonincreasing on the trailing window.
    Monotone,
    /// Increasing with geometrically shrinking increments.
    Geometric,
    /// Increasing with increments decaying faster than `i^{-p}`, `p > 1`.
    PowerLaw,
    /// Constant to 1e-12 on the trailing window (bound inflated by 1e-9).
    Stationary,
    /// No certificate; the lower bound degrades to 0.
    Uncertified,
}

impl TailCertificate {
    pub fn as_str(self) -> &'static str {
        match self {
            TailCertificate::Exact => "exact",
            TailCertificate::Monotone => "monotone",
            TailCertificate::Geometric => "geometric",
            TailCertificate::PowerLaw => "power-law",
            TailCertificate::Stationary => "stationary",
            TailCertificate::Uncertified => "uncertified",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifiedBound {
    pub value: f64,
    /// Last index at which `I_i` was evaluated to full accuracy.
    pub evaluated: usize,
    pub tail: TailCertificate,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + libm::log1p(libm::exp(lo - hi))
}

/// The chain restricted to `{0..h}` with scaled weights and tail certificates.
#[derive(Debug, Clone)]
struct Segment {
    h: usize,
    finite: bool,
    /// `b_0..b_h` (`b_h = 0` on a finite chain).
    b: Vec<f64>,
    /// `a_0..a_h` with `a_0 = 0`.
    a: Vec<f64>,
    /// `μ_j / μ_ref`.
    w: Vec<f64>,
    /// `ln μ_ref` (with `μ_0 = 1`).
    ln_ref: f64,
    /// `sup_{j>=h} b_j / a_{j+1}` (0 on a finite chain).
    rho: f64,
    /// `sup_{j>h} 1/a_j` (0 on a finite chain).
    inv_a: f64,
}

impl Segment {
    fn new(spec: &ChainSpec, horizon: usize) -> Result<Self> {
        match spec.bound() {
            StateBound::Finite(n) => Self::from_chain(&truncate(spec, n)?),
            StateBound::Infinite => Self::infinite(spec, horizon),
        }
    }

    fn from_chain(chain: &FiniteChain) -> Result<Self> {
        let ln_pi = chain.ln_pi();
        let top = ln_pi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = ln_pi.iter().map(|l| libm::exp(l - top)).collect();
        if w.iter().any(|x| !(*x > f64::MIN_POSITIVE)) {
            return Err(Error::uncertified("stationary weights span more than the double-precision range"));
        }
        Ok(Segment {
            h: chain.size() - 1,
            finite: true,
            b: chain.birth().to_vec(),
            a: chain.death().to_vec(),
            w,
            ln_ref: top - ln_pi[0],
            rho: 0.0,
            inv_a: 0.0,
        })
    }

    fn infinite(spec: &ChainSpec, horizon: usize) -> Result<Self> {
        let cap = horizon.max(MIN_SEGMENT);
        let mut b = Vec::new();
        let mut a = vec![0.0];
        let mut ln_mu = vec![0.0];
        let mut ln_sum = 0.0;
        let mut h = cap;
        for i in 1..=cap {
            b.push(spec.birth(i - 1)?);
            a.push(spec.death(i)?);
            let l = ln_mu[i - 1] + libm::log(b[i - 1]) - libm::log(a[i]);
            ln_mu.push(l);
            ln_sum = log_add(ln_sum, l);
            if i >= MIN_SEGMENT && l - ln_sum < TAIL_LN_RATIO {
                h = i;
                break;
            }
        }
        let ratio_limit = spec.ratio_asymptotic().map(|r| r.limit());
        if ratio_limit.is_some_and(|l| l >= 1.0) {
            return Err(Error::uncertified("μ-ratio tends to a limit >= 1; the weights are not summable geometrically"));
        }
        let inv_a_limit = spec.asymptotics().map(|(_, a)| a.recip().limit());
        loop {
            while a.len() <= h {
                let i = a.len();
                b.push(spec.birth(i - 1)?);
                a.push(spec.death(i)?);
                ln_mu.push(ln_mu[i - 1] + libm::log(b[i - 1]) - libm::log(a[i]));
            }
            let lo = (h / 2).max(h.saturating_sub(256)).max(1);
            let mut ratios = Vec::with_capacity(h - lo + 1);
            let mut inv = Vec::with_capacity(h - lo + 2);
            for j in lo..=h {
                let bj = if j < h { b[j] } else { spec.birth(j)? };
                let a_next = if j < h { a[j + 1] } else { spec.death(j + 1)? };
                ratios.push(bj / a_next);
                inv.push(1.0 / a_next);
            }
            let rho = eventual_sup(&ratios, ratio_limit).filter(|r| *r < 1.0);
            let inv_a = eventual_sup(&inv, inv_a_limit);
            if let (Some(rho), Some(inv_a)) = (rho, inv_a) {
                b.truncate(h);
                b.push(spec.birth(h)?);
                a.truncate(h + 1);
                ln_mu.truncate(h + 1);
                let top = ln_mu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let w = ln_mu.iter().map(|l| libm::exp(l - top)).collect();
                return Ok(Segment { h, finite: false, b, a, w, ln_ref: top, rho, inv_a });
            }
            if h >= cap {
                return Err(Error::uncertified(format!(
                    "no geometric certificate for the μ-tail up to horizon {cap}"
                )));
            }
            h = (2 * h).min(cap);
        }
    }

    /// Enclosure of the total mass `μ[0,∞)` (with `μ_0 = 1`).
    fn total_mass(&self) -> Enclosure {
        let s: f64 = self.w.iter().sum();
        let tail = self.tail_mass();
        Enclosure::new(s, s + tail).scale(libm::exp(self.ln_ref)).widen_rel(ROUND)
    }

    /// Upper bound of the scaled mass beyond `h`.
    fn tail_mass(&self) -> f64 {
        if self.finite {
            0.0
        } else {
            self.w[self.h] * self.rho / (1.0 - self.rho)
        }
    }
}

/// A test function restricted to a segment, with its continuation past `h`.
#[derive(Debug, Clone)]
struct SegmentFunction {
    f: Vec<f64>,
    /// Increment at `h` and its growth factor past `h` (1 = linear, 0 = plateau).
    delta: f64,
    growth: f64,
}

impl SegmentFunction {
    fn restrict(seg: &Segment, tf: &TestFunctionDiscrete) -> Self {
        let f: Vec<f64> = (0..=seg.h).map(|i| tf.value(i)).collect();
        let h = seg.h;
        let delta = if h >= 1 { f[h] - f[h - 1] } else { 0.0 };
        let growth = match tf.extension {
            Extension::Plateau if tf.values.len() - 1 <= h => 0.0,
            Extension::Plateau | Extension::Linear => 1.0,
            Extension::Geometric(g) => g,
        };
        SegmentFunction { f, delta, growth }
    }

    /// Upper bound of `Σ_{j>h} μ_j (f_j - shift)` (scaled) when `f_h >= shift`.
    fn tail_moment(&self, seg: &Segment, shift: f64) -> Result<f64> {
        if seg.finite {
            return Ok(0.0);
        }
        let r = seg.rho;
        let base = self.f[seg.h] - shift;
        let geo = r / (1.0 - r);
        let inc = if self.growth == 0.0 {
            0.0
        } else if self.growth == 1.0 {
            self.delta * r / ((1.0 - r) * (1.0 - r))
        } else {
            let g = self.growth;
            if g * r >= 1.0 {
                return Err(Error::uncertified(format!(
                    "test-function growth {g} too fast for the μ-tail ratio {r}"
                )));
            }
            self.delta * g / (g - 1.0) * (g * r / (1.0 - g * r) - geo)
        };
        Ok(seg.w[seg.h] * (base * geo + inc))
    }
}

/// `I_i` enclosures on a segment.
#[derive(Debug, Clone)]
struct Evaluation {
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Midpoint of `Σ_{j>i} μ_j f̄_j` (scaled).
    t_mid: Vec<f64>,
    /// Last index with full accuracy.
    accurate: usize,
}

fn evaluate(seg: &Segment, sf: &SegmentFunction, last: usize) -> Result<Evaluation> {
    let h = seg.h;
    let f = &sf.f;
    let w = &seg.w;
    // π(f) from enclosed numerator and denominator
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..=h {
        num += w[j] * f[j];
        den += w[j];
    }
    let tm = seg.tail_mass();
    let tf = sf.tail_moment(seg, 0.0)?;
    let mean = Enclosure::new(num / (den + tm), (num + tf) / den).widen_rel(ROUND);
    if !(mean.hi.is_finite()) {
        return Err(Error::uncertified("the mean of the test function is not enclosed"));
    }

    // beyond-h contribution of f - c, for c at either end of the mean enclosure
    let beyond = |c: f64| -> Result<Enclosure> {
        if seg.finite {
            return Ok(Enclosure::point(0.0));
        }
        if f[h] >= c {
            Ok(Enclosure::new(0.0, sf.tail_moment(seg, c)?))
        } else {
            Ok(Enclosure::new((f[h] - c) * tm, sf.tail_moment(seg, 0.0)?))
        }
    };
    let b_lo_c = beyond(mean.hi)?;
    let b_hi_c = beyond(mean.lo)?;

    let last = last.min(h.saturating_sub(1));
    // suffix sums of w_j (f_j - c) for j > i, and prefix sums for j <= i
    let mut suf_hi = vec![0.0; h + 2];
    let mut suf_lo = vec![0.0; h + 2];
    let mut suf_abs = vec![0.0; h + 2];
    for j in (0..=h).rev() {
        suf_hi[j] = suf_hi[j + 1] + w[j] * (f[j] - mean.lo);
        suf_lo[j] = suf_lo[j + 1] + w[j] * (f[j] - mean.hi);
        suf_abs[j] = suf_abs[j + 1] + w[j] * (f[j] + mean.hi);
    }
    let mut lo = Vec::with_capacity(last + 1);
    let mut hi = Vec::with_capacity(last + 1);
    let mut t_mid = Vec::with_capacity(last + 1);
    let mut accurate = 0;
    let mut still_accurate = true;
    let (mut pre_lo, mut pre_hi, mut pre_abs) = (0.0, 0.0, 0.0);
    for i in 0..=last {
        pre_lo += w[i] * (mean.lo - f[i]);
        pre_hi += w[i] * (mean.hi - f[i]);
        pre_abs += w[i] * (f[i] + mean.hi);
        let fw_slack = ROUND * pre_abs;
        let forward = Enclosure::new(pre_lo - fw_slack, pre_hi + fw_slack);
        let bw_slack = ROUND * suf_abs[i + 1];
        let backward = Enclosure::new(suf_lo[i + 1] + b_lo_c.lo - bw_slack, suf_hi[i + 1] + b_hi_c.hi + bw_slack);
        let t = {
            let l = forward.lo.max(backward.lo);
            let u = forward.hi.min(backward.hi);
            if l <= u {
                Enclosure::new(l, u)
            } else if f[i] < mean.mid() {
                forward
            } else {
                backward
            }
        };
        let step = f[i + 1] - f[i];
        let den = w[i] * seg.b[i] * step;
        if !(step > 0.0) {
            return Err(Error::domain(format!("test function has a non-increasing step at index {i}")));
        }
        let t_lo = t.lo.max(0.0);
        lo.push(t_lo / den);
        hi.push(t.hi / den);
        t_mid.push(0.5 * (t_lo + t.hi.max(t_lo)));
        if still_accurate && t.width() <= TAIL_REL_WIDTH * t_lo && t_lo > 0.0 {
            accurate = i;
        } else if !seg.finite && i > 0 {
            still_accurate = false;
        }
    }
    if seg.finite {
        accurate = last;
    }
    Ok(Evaluation { lo, hi, t_mid, accurate })
}

/// Bound on `sup_{i > end}` of a sequence from its trailing `window`, where
/// the window's first entry sits at index `start`.
fn tail_sup(window: &[f64], start: usize) -> Option<(f64, TailCertificate)> {
    let n = window.len();
    let last = *window.last()?;
    if n < 4 || !last.is_finite() {
        return None;
    }
    let slack = |x: f64| 1e-13 * x.abs();
    if window.windows(2).all(|p| p[1] <= p[0] + slack(p[0])) {
        return Some((last, TailCertificate::Monotone));
    }
    let d: Vec<f64> = window.windows(2).map(|p| p[1] - p[0]).collect();
    if d.iter().all(|x| *x > 0.0) {
        let ratios: Vec<f64> = d.windows(2).map(|p| p[1] / p[0]).collect();
        if let Some(r) = eventual_sup(&ratios, None).filter(|r| *r < 1.0) {
            return Some((last + d[d.len() - 1] * r / (1.0 - r), TailCertificate::Geometric));
        }
        // increments d_i at index i = start + k; local exponents ln(d_i/d_{i+1}) / ln((i+1)/i)
        if start >= 1 {
            let p = d
                .windows(2)
                .enumerate()
                .map(|(k, q)| {
                    let i = (start + k) as f64;
                    libm::log(q[0] / q[1]) / libm::log((i + 1.0) / i)
                })
                .fold(f64::INFINITY, f64::min);
            if p > 1.0 + 1e-3 {
                let i_last = (start + d.len() - 1) as f64;
                return Some((last + d[d.len() - 1] * i_last / (p - 1.0), TailCertificate::PowerLaw));
            }
        }
    }
    let max = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = window.iter().copied().fold(f64::INFINITY, f64::min);
    if max - min <= 1e-12 * max.abs() {
        return Some((max * (1.0 + 1e-9), TailCertificate::Stationary));
    }
    None
}

fn lower_from_evaluation(seg: &Segment, ev: &Evaluation) -> CertifiedBound {
    let end = ev.accurate;
    let seen = ev.hi[..=end].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if seg.finite {
        return CertifiedBound { value: 1.0 / seen * (1.0 - ROUND), evaluated: end, tail: TailCertificate::Exact };
    }
    let start = (end / 2).max(end.saturating_sub(256));
    match tail_sup(&ev.hi[start..=end], start) {
        Some((bound, tail)) => {
            CertifiedBound { value: (1.0 / seen.max(bound)) * (1.0 - ROUND), evaluated: end, tail }
        }
        None => CertifiedBound { value: 0.0, evaluated: end, tail: TailCertificate::Uncertified },
    }
}

fn upper_from_evaluation(ev: &Evaluation, k: usize) -> Result<f64> {
    if k > ev.accurate + 1 {
        return Err(Error::uncertified(format!(
            "plateau level {k} lies past the accurately evaluable range (last index {})",
            ev.accurate
        )));
    }
    let min = ev.lo[..k].iter().copied().fold(f64::INFINITY, f64::min);
    Ok(if min > 0.0 { (1.0 / min) * (1.0 + ROUND) } else { f64::INFINITY })
}

/// Enclosure of `I_i(f̄)`.
pub fn i_operator(spec: &ChainSpec, f: &TestFunctionDiscrete, i: usize, horizon: usize) -> Result<Enclosure> {
    let seg = Segment::new(spec, horizon)?;
    if i >= seg.h {
        return Err(Error::domain(format!("index {i} outside the evaluation segment 0..{}", seg.h)));
    }
    if f.value(i + 1) <= f.value(i) {
        return Err(Error::domain(format!("test function has a zero step at index {i}")));
    }
    let sf = SegmentFunction::restrict(&seg, f);
    let ev = evaluate(&seg, &sf, i)?;
    Ok(Enclosure::new(ev.lo[i], ev.hi[i]))
}

/// `λ_1 >= inf_i I_i(f̄)^{-1}` for a strictly increasing `f`.
pub fn lower_bound_from_test(spec: &ChainSpec, f: &TestFunctionDiscrete, horizon: usize) -> Result<CertifiedBound> {
    if f.class() != FunctionClass::Increasing {
        return Err(Error::domain("lower bounds need a strictly increasing test function"));
    }
    let seg = Segment::new(spec, horizon)?;
    let sf = SegmentFunction::restrict(&seg, f);
    let ev = evaluate(&seg, &sf, seg.h)?;
    Ok(lower_from_evaluation(&seg, &ev))
}

/// `λ_1 <= sup_{i>=0} I_i(f̄)^{-1}` for a plateau test function. The sup runs
/// over `i < k` (past the plateau `I_i` is infinite) and must include `i = 0`.
pub fn upper_bound_from_test(spec: &ChainSpec, f: &TestFunctionDiscrete, horizon: usize) -> Result<f64> {
    let k = f
        .plateau_level()
        .ok_or_else(|| Error::domain("upper bounds need a test function with a plateau"))?;
    let seg = Segment::new(spec, horizon)?;
    if k > seg.h {
        return Err(Error::domain(format!("plateau level {k} exceeds the last state {}", seg.h)));
    }
    let sf = SegmentFunction::restrict(&seg, f);
    let ev = evaluate(&seg, &sf, k - 1)?;
    upper_from_evaluation(&ev, k)
}

/// `P_i = φ_i μ[i,∞)` for `i = 1..=h` via `Z_i = φ_i μ_{i-1} b_{i-1} / a_i`
/// and `Y_i = μ[i,∞)/μ_i`, plus a bound on `sup_{i>h} P_i`.
fn delta_on(seg: &Segment) -> Enclosure {
    let h = seg.h;
    if h == 0 {
        return Enclosure::point(0.0);
    }
    let ratio = |j: usize| seg.b[j] / seg.a[j + 1];
    let (mut y_lo, mut y_hi) = if seg.finite { (1.0, 1.0) } else { (1.0, 1.0 / (1.0 - seg.rho)) };
    let mut ys = vec![(0.0, 0.0); h + 1];
    ys[h] = (y_lo, y_hi);
    for i in (1..h).rev() {
        let r = ratio(i);
        y_lo = 1.0 + r * y_lo;
        y_hi = 1.0 + r * y_hi;
        ys[i] = (y_lo, y_hi);
    }
    let mut z = 1.0 / seg.a[1];
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for (i, y) in ys.iter().enumerate().skip(1) {
        if i > 1 {
            z = 1.0 / seg.a[i] + ratio(i - 1) * z;
        }
        lo = lo.max(z * y.0);
        hi = hi.max(z * y.1);
    }
    if !seg.finite {
        let m = z.max(seg.inv_a / (1.0 - seg.rho));
        hi = hi.max(m / (1.0 - seg.rho));
    }
    Enclosure::new(lo, hi).widen_rel(ROUND)
}

/// `δ = sup_{i>=1} Σ_{j<=i-1}(μ_j b_j)^{-1} μ[i,∞)` as an enclosure.
pub fn delta_constant(spec: &ChainSpec, horizon: usize) -> Result<Enclosure> {
    Ok(delta_on(&Segment::new(spec, horizon)?))
}

/// δ of a finite chain (no tail to enclose).
pub fn delta_finite(chain: &FiniteChain) -> f64 {
    let seg = Segment {
        h: chain.size() - 1,
        finite: true,
        b: chain.birth().to_vec(),
        a: chain.death().to_vec(),
        w: Vec::new(),
        ln_ref: 0.0,
        rho: 0.0,
        inv_a: 0.0,
    };
    delta_on(&seg).mid()
}

/// `[(4δ)^{-1}, μ/δ]`.
pub fn explicit_bounds(spec: &ChainSpec, horizon: usize) -> Result<GapBracket> {
    let seg = Segment::new(spec, horizon)?;
    Ok(explicit_on(&seg))
}

fn explicit_on(seg: &Segment) -> GapBracket {
    let delta = delta_on(seg);
    let mass = seg.total_mass();
    GapBracket {
        lower: 1.0 / (4.0 * delta.hi),
        upper: mass.hi / delta.lo,
        lower_source: Source::Explicit,
        upper_source: Source::Explicit,
        horizon: seg.h,
    }
}

/// Output of [`approx_sequence`].
#[derive(Debug, Clone, PartialEq)]
pub struct Approximation {
    /// One bracket per iteration; lower bounds nondecreasing, upper nonincreasing.
    pub brackets: Vec<GapBracket>,
    pub delta: Enclosure,
    /// Raw lower bound certified from the seed `√φ`.
    pub seed_lower: CertifiedBound,
    /// Whether the seed bound reaches `(4δ)^{-1}` (it must, up to rounding).
    pub seed_dominates_delta: bool,
}

/// Seed `f_i = √φ_i`, `φ_i = Σ_{j<i} (μ_j b_j)^{-1}`, in scaled units.
fn seed(seg: &Segment) -> Result<Vec<f64>> {
    let mut phi = vec![0.0; seg.h + 1];
    for i in 1..=seg.h {
        phi[i] = phi[i - 1] + 1.0 / (seg.w[i - 1] * seg.b[i - 1]);
    }
    let top = phi[seg.h];
    if !top.is_finite() {
        return Err(Error::uncertified("seed function overflows on the evaluation segment"));
    }
    Ok(phi.iter().map(|p| libm::sqrt(p / top)).collect())
}

/// Continuation past `h`: geometric with the observed increment growth,
/// clamped so the tail stays summable.
fn continuation(seg: &Segment, f: Vec<f64>) -> SegmentFunction {
    let h = seg.h;
    let delta = f[h] - f[h - 1];
    let growth = if seg.finite {
        1.0
    } else {
        let prev = f[h - 1] - f[h - 2];
        let g = if prev > 0.0 { delta / prev } else { 1.0 };
        g.min(0.5 + 0.5 / seg.rho).max(1.0)
    };
    SegmentFunction { f, delta, growth }
}

/// One step `Δf'_j = u_j Σ_{k>j} μ_k f̄_k`, i.e. `Δf'_j = I_j(f) Δf_j`.
fn iterate(f: &[f64], ev: &Evaluation) -> Vec<f64> {
    let n = f.len() - 1;
    let mut steps = Vec::with_capacity(n);
    let mut last_ratio = 1.0;
    for j in 0..n {
        let d = f[j + 1] - f[j];
        let ratio = if j < ev.t_mid.len() { 0.5 * (ev.lo[j] + ev.hi[j]) } else { f64::NAN };
        let r = if ratio.is_finite() && ratio > 0.0 && j <= ev.accurate.max(1) {
            last_ratio = ratio;
            ratio
        } else {
            last_ratio
        };
        steps.push(d * r);
    }
    let mut g = vec![0.0; n + 1];
    for j in 0..n {
        g[j + 1] = g[j] + steps[j];
    }
    let top = g[n];
    g.iter().map(|x| x / top).collect()
}

/// Plateau levels `{1, 2, 4, ...}` up to `kmax`, plus `kmax` itself.
fn plateau_grid(kmax: usize) -> Vec<usize> {
    let mut ks = Vec::new();
    let mut k = 1;
    while k < kmax {
        ks.push(k);
        k *= 2;
    }
    ks.push(kmax.max(1));
    ks
}

fn best_upper(seg: &Segment, f: &[f64], ev: &Evaluation) -> f64 {
    let kmax = if seg.finite { seg.h } else { ev.accurate + 1 };
    let mut best = f64::INFINITY;
    for k in plateau_grid(kmax) {
        let mut g: Vec<f64> = f.to_vec();
        g[k + 1..].fill(f[k]);
        let sf = SegmentFunction { f: g, delta: 0.0, growth: 0.0 };
        if let Ok(pev) = evaluate(seg, &sf, k - 1) {
            let min = pev.lo[..k].iter().copied().fold(f64::INFINITY, f64::min);
            if min > 0.0 {
                best = best.min((1.0 / min) * (1.0 + ROUND));
            }
        }
    }
    best
}

/// Certified brackets from the iteration seeded at `√φ`; each bracket is
/// the running best of the explicit δ bracket and the bounds certified from
/// every iterate so far.
pub fn approx_sequence(spec: &ChainSpec, n_iters: usize, horizon: usize) -> Result<Approximation> {
    if n_iters == 0 {
        return Err(Error::domain("at least one iteration is needed"));
    }
    let seg = Segment::new(spec, horizon)?;
    if seg.h < 2 && !seg.finite {
        return Err(Error::uncertified("evaluation segment too short"));
    }
    let explicit = explicit_on(&seg);
    let delta = delta_on(&seg);
    let mut f = seed(&seg)?;
    let mut brackets = Vec::with_capacity(n_iters);
    let mut current = explicit;
    let mut seed_lower = None;
    for n in 1..=n_iters {
        let sf = if seg.finite {
            SegmentFunction { f: f.clone(), delta: 0.0, growth: 1.0 }
        } else {
            continuation(&seg, f.clone())
        };
        let ev = evaluate(&seg, &sf, seg.h)?;
        let lower = lower_from_evaluation(&seg, &ev);
        let source = if n == 1 { Source::Seed } else { Source::Iterate(n) };
        if n == 1 {
            seed_lower = Some(lower);
        }
        if lower.value > current.lower {
            current.lower = lower.value;
            current.lower_source = source;
        }
        let upper = best_upper(&seg, &f, &ev);
        if upper < current.upper {
            current.upper = upper;
            current.upper_source = source;
        }
        brackets.push(current);
        if n < n_iters {
            f = iterate(&f, &ev);
        }
    }
    let seed_lower = seed_lower.expect("at least one iteration");
    let seed_dominates_delta = seed_lower.value >= explicit.lower * (1.0 - 1e-9);
    Ok(Approximation { brackets, delta, seed_lower, seed_dominates_delta })
}

/// Maximizes the certified lower bound over increasing functions on a finite
/// chain by multiplicative coordinate updates `Δf_j <- I_j(f) Δf_j`, tracking
/// the plateau-free upper bound `1/min_i I_i` alongside. Stops when the
/// bracket is narrower than `rel_tol` relative or after `max_sweeps`.
pub fn dual_ascent(chain: &FiniteChain, max_sweeps: usize, rel_tol: f64) -> Result<GapBracket> {
    let seg = Segment::from_chain(chain)?;
    let mut f = seed(&seg)?;
    let mut best = GapBracket {
        lower: 0.0,
        upper: f64::INFINITY,
        lower_source: Source::Trivial,
        upper_source: Source::Trivial,
        horizon: seg.h,
    };
    for sweep in 1..=max_sweeps.max(1) {
        let sf = SegmentFunction { f: f.clone(), delta: 0.0, growth: 1.0 };
        let ev = evaluate(&seg, &sf, seg.h)?;
        let lower = lower_from_evaluation(&seg, &ev).value;
        let min = ev.lo.iter().copied().fold(f64::INFINITY, f64::min);
        let upper = if min > 0.0 { (1.0 / min) * (1.0 + ROUND) } else { f64::INFINITY };
        if lower > best.lower {
            best.lower = lower;
            best.lower_source = Source::Iterate(sweep);
        }
        if upper < best.upper {
            best.upper = upper;
            best.upper_source = Source::Iterate(sweep);
        }
        if best.width() <= rel_tol * best.upper {
            break;
        }
        f = iterate(&f, &ev);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::spectral_gap_exact;
    use proptest::prelude::*;

    fn spec(b: &str, a: &str) -> ChainSpec {
        ChainSpec::from_exprs(b, a).unwrap()
    }

    fn two_state() -> ChainSpec {
        ChainSpec::from_arrays(vec![3.0], vec![2.0]).unwrap()
    }

    // independent oracle: geometric-chain gap (√a - √b)^2
    fn geometric_gap(b: f64, a: f64) -> f64 {
        (a.sqrt() - b.sqrt()).powi(2)
    }

    #[test]
    fn i_operator_examples() {
        let s = spec("1", "2");
        let f = TestFunctionDiscrete::identity(10);
        let i0 = i_operator(&s, &f, 0, 10_000).unwrap();
        assert!(i0.contains(1.0, 1e-12), "{i0}");
        // I_i = i + 1 in closed form for this pair
        let i5 = i_operator(&s, &f, 5, 10_000).unwrap();
        assert!(i5.contains(6.0, 1e-10), "{i5}");

        let three = ChainSpec::from_arrays(vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        let f = TestFunctionDiscrete::increasing(vec![0.0, 1.0, 2.0]).unwrap();
        // π uniform, mean 1, I_1 = μ_2 (2-1) / (μ_1 b_1 (2-1)) = 1
        let i1 = i_operator(&three, &f, 1, 10).unwrap();
        assert!(i1.contains(1.0, 1e-14), "{i1}");
        // I_0 = (0 + 1) / 1 = 1 as well: (μ_1 (1-1) + μ_2 (2-1)) / (μ_0 b_0)
        let i0 = i_operator(&three, &f, 0, 10).unwrap();
        assert!(i0.contains(1.0, 1e-14), "{i0}");
    }

    #[test]
    fn zero_steps_are_rejected() {
        assert!(TestFunctionDiscrete::increasing(vec![0.0, 1.0, 1.0, 2.0]).is_err());
        assert!(TestFunctionDiscrete::increasing(vec![1.0, 2.0]).is_err());
        let f = TestFunctionDiscrete::plateau(vec![0.0, 1.0], 1).unwrap();
        assert!(i_operator(&spec("1", "2"), &f, 1, 1000).is_err());
    }

    #[test]
    fn linear_model_lower_bound_is_sharp() {
        let s = spec("i+1", "2*i");
        let lb = lower_bound_from_test(&s, &TestFunctionDiscrete::identity(4), 100_000).unwrap();
        assert!(lb.value <= 1.0 && lb.value > 1.0 - 1e-3, "{lb:?}");
        assert_ne!(lb.tail, TailCertificate::Uncertified);
    }

    #[test]
    fn linear_test_function_on_geometric_chain_gives_nothing() {
        // I_i = i + 1 is unbounded, so the infimum of its reciprocal is 0
        let lb = lower_bound_from_test(&spec("1", "2"), &TestFunctionDiscrete::identity(4), 10_000).unwrap();
        assert_eq!(lb.value, 0.0);
    }

    #[test]
    fn upper_bound_examples() {
        let f = TestFunctionDiscrete::plateau(vec![0.0, 1.0], 1).unwrap();
        let ub = upper_bound_from_test(&two_state(), &f, 10).unwrap();
        assert!((ub - 5.0).abs() < 1e-11, "{ub}");
        let f = TestFunctionDiscrete::plateau((0..6).map(|i| i as f64).collect(), 5).unwrap();
        let ub = upper_bound_from_test(&spec("1", "2"), &f, 10_000).unwrap();
        assert!(ub.is_finite() && ub >= geometric_gap(1.0, 2.0) - 1e-12, "{ub}");
    }

    #[test]
    fn delta_examples() {
        let d = delta_constant(&spec("1", "2"), 10_000).unwrap();
        assert!(d.contains(2.0, 1e-12), "{d}");
        for (b, a) in [(1.0, 3.0), (0.5, 4.0), (2.0, 2.5)] {
            let d = delta_constant(&spec(&format!("{b}"), &format!("{a}")), 100_000).unwrap();
            let want = a / ((a - b) * (a - b));
            assert!(d.contains(want, 1e-9 * want), "{d} vs {want}");
        }
        let d = delta_constant(&two_state(), 10).unwrap();
        assert!(d.contains(0.5, 1e-14));
    }

    #[test]
    fn explicit_bracket_examples() {
        let e = explicit_bounds(&spec("1", "2"), 10_000).unwrap();
        assert!((e.lower - 0.125).abs() < 1e-12 && (e.upper - 1.0).abs() < 1e-9, "{e:?}");
        assert!(e.contains(geometric_gap(1.0, 2.0), 0.0));
        let e = explicit_bounds(&two_state(), 10).unwrap();
        assert!((e.lower - 0.5).abs() < 1e-12 && (e.upper - 5.0).abs() < 1e-12);
        let e = explicit_bounds(&spec("i+1", "2*i+3"), 100_000).unwrap();
        assert!(e.contains(2.0, 0.0), "{e:?}");
    }

    #[test]
    fn approximation_examples() {
        let a = approx_sequence(&spec("1", "2"), 5, 100_000).unwrap();
        let gap = geometric_gap(1.0, 2.0);
        for w in a.brackets.windows(2) {
            assert!(w[1].width() <= w[0].width());
        }
        assert!(a.brackets.last().unwrap().contains(gap, 1e-12));
        assert!(a.seed_dominates_delta);

        let a = approx_sequence(&spec("i+1", "2*i"), 1, 100_000).unwrap();
        assert!(a.seed_dominates_delta, "{:?} vs {}", a.seed_lower, 1.0 / (4.0 * a.delta.hi));

        let a = approx_sequence(&two_state(), 2, 10).unwrap();
        let last = a.brackets.last().unwrap();
        assert!((last.lower - 5.0).abs() < 1e-9 && (last.upper - 5.0).abs() < 1e-9, "{last:?}");
    }

    #[test]
    fn ascent_reaches_the_gap() {
        let chain = FiniteChain::new(&[1.0, 0.3, 2.0, 5.0], &[0.7, 1.1, 0.2, 3.0]).unwrap();
        let gap = spectral_gap_exact(&chain).unwrap();
        let br = dual_ascent(&chain, 5000, 1e-12).unwrap();
        assert!((br.lower - gap).abs() < 1e-6 && (br.upper - gap).abs() < 1e-6, "{br:?} vs {gap}");
        assert!(br.lower <= gap * (1.0 + 1e-12) && br.upper >= gap * (1.0 - 1e-12));
    }

    #[test]
    fn delta_finite_matches_enclosure() {
        let chain = FiniteChain::new(&[1.0, 0.3, 2.0], &[0.7, 1.1, 0.2]).unwrap();
        let d = delta_constant(&chain.to_spec(), 10).unwrap();
        assert!(d.contains(delta_finite(&chain), 0.0));
    }

    fn finite_chain() -> impl Strategy<Value = FiniteChain> {
        (1usize..12).prop_flat_map(|n| {
            (prop::collection::vec(0.1f64..10.0, n), prop::collection::vec(0.1f64..10.0, n))
                .prop_map(|(b, a)| FiniteChain::new(&b, &a).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn brackets_contain_the_gap(chain in finite_chain()) {
            let gap = spectral_gap_exact(&chain).unwrap();
            let s = chain.to_spec();
            let e = explicit_bounds(&s, 10).unwrap();
            prop_assert!(e.contains(gap, 1e-10 * gap), "{:?} vs {}", e, gap);
            let a = approx_sequence(&s, 4, 10).unwrap();
            for b in &a.brackets {
                prop_assert!(b.contains(gap, 1e-10 * gap), "{:?} vs {}", b, gap);
            }
        }

        #[test]
        fn bounds_scale_with_rates(chain in finite_chain(), c in 0.1f64..20.0) {
            let s = chain.to_spec();
            let sc = s.scaled(c).unwrap();
            let (d1, d2) = (delta_constant(&s, 10).unwrap(), delta_constant(&sc, 10).unwrap());
            prop_assert!((d1.mid() / c - d2.mid()).abs() <= 1e-10 * d2.mid());
            let (e1, e2) = (explicit_bounds(&s, 10).unwrap(), explicit_bounds(&sc, 10).unwrap());
            prop_assert!((e1.lower * c - e2.lower).abs() <= 1e-10 * e2.lower);
            prop_assert!((e1.upper * c - e2.upper).abs() <= 1e-10 * e2.upper);
        }
    }
}
