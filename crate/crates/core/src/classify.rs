//! Ergodicity classification of birth-death chains by the explicit series
//! criteria, with implication-consistency enforcement across the ladder.
//!
//! Notation: `u_n = 1/(μ_n b_n)`, `S_n = μ[0,n]`, `T_n = μ[n,∞)`,
//! `U_n = Σ_{j<=n-1} u_j`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::chain::{eventual_sup, mu_weights, ChainSpec, StateBound};
use crate::enclosure::Enclosure;
use crate::error::Error;
use crate::expr::{Leading, RateExpr};
use crate::growth::{Growth, Theta};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    fn and(self, o: Verdict) -> Verdict {
        match (self, o) {
            (Verdict::Fails, _) | (_, Verdict::Fails) => Verdict::Fails,
            (Verdict::Holds, Verdict::Holds) => Verdict::Holds,
            _ => Verdict::Inconclusive,
        }
    }
}

/// How a verdict was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Finite state space: every series is a finite sum.
    Finite,
    /// Decided from the growth classes of closed-form rates.
    ClosedFamily,
    /// Decided numerically via eventual monotonicity on the probe window.
    RatioMonotone,
    None,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Finite => "finite",
            Method::ClosedFamily => "closed-family",
            Method::RatioMonotone => "ratio-monotone",
            Method::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeriesValue {
    Converges(Enclosure),
    Diverges,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesVerdict {
    pub value: SeriesValue,
    pub horizon: usize,
    pub method: Method,
}

impl SeriesVerdict {
    pub fn finite(v: f64) -> Self {
        SeriesVerdict { value: SeriesValue::Converges(Enclosure::point(v)), horizon: 0, method: Method::Finite }
    }

    fn inconclusive(horizon: usize) -> Self {
        SeriesVerdict { value: SeriesValue::Inconclusive, horizon, method: Method::None }
    }

    /// Verdict of "the series/sup is finite".
    pub fn converges_verdict(&self) -> Verdict {
        match self.value {
            SeriesValue::Converges(_) => Verdict::Holds,
            SeriesValue::Diverges => Verdict::Fails,
            SeriesValue::Inconclusive => Verdict::Inconclusive,
        }
    }

    /// Verdict of "the series/sup is infinite".
    pub fn diverges_verdict(&self) -> Verdict {
        match self.value {
            SeriesValue::Converges(_) => Verdict::Fails,
            SeriesValue::Diverges => Verdict::Holds,
            SeriesValue::Inconclusive => Verdict::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Sum,
    Sup,
    Limsup,
}

const ESCAPE_LN: f64 = 690.0;

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + libm::log1p(libm::exp(lo - hi))
}

fn window_start(n: usize) -> usize {
    (n / 2).max(n.saturating_sub(256))
}

/// Numeric decision on log-terms `ln t_0..ln t_N` (entries may be `-inf`).
///
/// `power` is the known polynomial exponent of the terms (for an integral
/// tail bound) when available.
fn numeric_series(ln_t: &[f64], mode: Mode, power: Option<f64>) -> SeriesVerdict {
    let n = ln_t.len().saturating_sub(1);
    if ln_t.len() < 8 {
        return SeriesVerdict::inconclusive(n);
    }
    let lo = window_start(n);
    let win = &ln_t[lo..];
    if win.iter().any(|x| !x.is_finite()) {
        return SeriesVerdict::inconclusive(n);
    }
    let done = |value| SeriesVerdict { value, horizon: n, method: Method::RatioMonotone };
    let nondecreasing = win.windows(2).all(|w| w[1] >= w[0] - 1e-13 * w[0].abs());
    let nonincreasing = win.windows(2).all(|w| w[1] <= w[0] + 1e-13 * w[0].abs());
    let last = win[win.len() - 1];
    match mode {
        Mode::Sum => {
            if nondecreasing {
                return done(SeriesValue::Diverges);
            }
            let partial = ln_t.iter().fold(f64::NEG_INFINITY, |acc, &x| log_add(acc, x));
            let ratios: Vec<f64> = win.windows(2).map(|w| libm::exp(w[1] - w[0])).collect();
            if let Some(rho) = eventual_sup(&ratios, None).filter(|r| *r < 1.0) {
                let tail = last + libm::log(rho / (1.0 - rho));
                return done(SeriesValue::Converges(Enclosure::new(
                    libm::exp(partial),
                    libm::exp(log_add(partial, tail)),
                )));
            }
            if let Some(p) = power.filter(|p| *p < -1.0) {
                // t_j <= t_N (j/N)^p when j^{-p} t_j is nonincreasing
                let scaled: Vec<f64> = (lo..=n).map(|j| ln_t[j] - p * libm::log(j as f64)).collect();
                let ok = scaled.windows(2).all(|w| w[1] <= w[0] + 1e-13 * w[0].abs());
                if ok && n > 0 {
                    let tail = last + libm::log(n as f64 / (-p - 1.0));
                    return done(SeriesValue::Converges(Enclosure::new(
                        libm::exp(partial),
                        libm::exp(log_add(partial, tail)),
                    )));
                }
            }
            SeriesVerdict::inconclusive(n)
        }
        Mode::Sup => {
            let max = ln_t.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
            if nonincreasing {
                let v = libm::exp(max);
                return done(SeriesValue::Converges(Enclosure::new(v, v)));
            }
            if nondecreasing && last > ESCAPE_LN {
                return done(SeriesValue::Diverges);
            }
            SeriesVerdict::inconclusive(n)
        }
        Mode::Limsup => {
            if nonincreasing {
                let ratios: Vec<f64> = win.windows(2).map(|w| libm::exp(w[1] - w[0])).collect();
                let to_zero = eventual_sup(&ratios, None).is_some_and(|r| r < 1.0);
                let hi = if to_zero { 0.0 } else { libm::exp(last) };
                return done(SeriesValue::Converges(Enclosure::new(0.0, hi)));
            }
            if nondecreasing && last > ESCAPE_LN {
                return done(SeriesValue::Diverges);
            }
            SeriesVerdict::inconclusive(n)
        }
    }
}

/// Decides `Σ_n t_n`, `sup_n t_n`, or `limsup_n t_n` for a closed-form term
/// (indices `n >= 0`).
pub fn series_limit(term: &RateExpr, mode: Mode, horizon: usize) -> Result<SeriesVerdict> {
    let mut ln_t = Vec::new();
    for n in 0..=horizon {
        let v = term.eval(n as f64);
        if v == f64::INFINITY {
            break;
        }
        if !(v >= 0.0) {
            return Err(Error::domain(format!("series term at n={n} is {v}; terms must be non-negative")));
        }
        ln_t.push(libm::log(v));
    }
    let asym = term.asymptotic();
    let (class, power) = match asym {
        Some(Leading::Term(a)) if a.coef > 0.0 => (Some(Theta::from_asym(&a)), Some(a.pow)),
        Some(Leading::Zero) => {
            let zero = Enclosure::point(0.0);
            return Ok(SeriesVerdict {
                value: SeriesValue::Converges(if mode == Mode::Sum {
                    Enclosure::point(libm::exp(ln_t.iter().fold(f64::NEG_INFINITY, |a, &x| log_add(a, x))))
                } else {
                    zero
                }),
                horizon,
                method: Method::ClosedFamily,
            });
        }
        _ => (None, None),
    };
    let numeric = numeric_series(&ln_t, mode, power.filter(|_| class.is_some_and(|c| c.n1 == 0.0)));
    let Some(class) = class else { return Ok(numeric) };
    let finite = match mode {
        Mode::Sum => class.summable(),
        Mode::Sup | Mode::Limsup => class.bounded(),
    };
    let value = if !finite {
        SeriesValue::Diverges
    } else if let SeriesValue::Converges(e) = numeric.value {
        SeriesValue::Converges(e)
    } else {
        // finite by class; numeric enclosure unavailable within the horizon
        let seen = ln_t.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let lo = if mode == Mode::Sum {
            libm::exp(ln_t.iter().fold(f64::NEG_INFINITY, |a, &x| log_add(a, x)))
        } else if mode == Mode::Limsup {
            0.0
        } else {
            libm::exp(seen)
        };
        let hi = match (mode, asym) {
            (Mode::Limsup, Some(Leading::Term(a))) if class.trend() != Ordering::Greater => a.limit(),
            _ => f64::INFINITY,
        };
        SeriesValue::Converges(Enclosure::new(lo, hi.max(lo)))
    };
    Ok(SeriesVerdict { value, horizon: ln_t.len().saturating_sub(1), method: Method::ClosedFamily })
}

/// The eight criteria rows, in ladder order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Uniqueness,
    Recurrence,
    Ergodicity,
    ExponentialErgodicity,
    DiscreteSpectrum,
    LogSobolev,
    StrongErgodicity,
    Nash,
}

impl Criterion {
    pub const ALL: [Criterion; 8] = [
        Criterion::Uniqueness,
        Criterion::Recurrence,
        Criterion::Ergodicity,
        Criterion::ExponentialErgodicity,
        Criterion::DiscreteSpectrum,
        Criterion::LogSobolev,
        Criterion::StrongErgodicity,
        Criterion::Nash,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Uniqueness => "uniqueness",
            Criterion::Recurrence => "recurrence",
            Criterion::Ergodicity => "ergodicity",
            Criterion::ExponentialErgodicity => "exponential ergodicity",
            Criterion::DiscreteSpectrum => "discrete spectrum",
            Criterion::LogSobolev => "log-Sobolev",
            Criterion::StrongErgodicity => "strong ergodicity",
            Criterion::Nash => "Nash",
        }
    }

    /// Properties decided by the row (two rows decide a pair of equivalent properties).
    pub fn properties(self) -> &'static [&'static str] {
        match self {
            Criterion::Uniqueness => &["uniqueness"],
            Criterion::Recurrence => &["recurrence"],
            Criterion::Ergodicity => &["ergodicity"],
            Criterion::ExponentialErgodicity => &["exponential ergodicity", "L2-exponential convergence"],
            Criterion::DiscreteSpectrum => &["discrete spectrum"],
            Criterion::LogSobolev => &["log-Sobolev inequality"],
            Criterion::StrongErgodicity => &["strong ergodicity", "L1-exponential convergence"],
            Criterion::Nash => &["Nash inequality"],
        }
    }

    fn index(self) -> usize {
        Criterion::ALL.iter().position(|c| *c == self).expect("listed")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub criterion: Criterion,
    pub verdict: Verdict,
    /// The evaluated quantity on the probe range (partial sum, sup, or last term).
    pub quantity: Option<f64>,
    pub method: Method,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub rows: Vec<Row>,
    pub q_param: f64,
    pub horizon: usize,
    /// Consistency violations found (each downgraded a verdict).
    pub diagnostics: Vec<String>,
    /// `(Σ u_n μ[n+1,N], Σ μ_n U_n)` on the truncation at `N`, in log form.
    pub fubini_ln: Option<(f64, f64)>,
    /// `(δ from the dual-variational code path, sup μ[n,N] U_n direct)` on a truncation.
    pub delta_check: Option<(f64, f64)>,
}

impl ClassificationReport {
    pub fn verdict(&self, c: Criterion) -> Verdict {
        self.rows[c.index()].verdict
    }

    pub fn row(&self, c: Criterion) -> &Row {
        &self.rows[c.index()]
    }

    /// The ten properties with their verdicts.
    pub fn properties(&self) -> Vec<(&'static str, Verdict)> {
        self.rows
            .iter()
            .flat_map(|r| r.criterion.properties().iter().map(move |p| (*p, r.verdict)))
            .collect()
    }
}

/// Growth classes of the criterion ingredients for closed-form rates.
#[derive(Debug, Clone, Copy)]
struct Symbolic {
    mu: Theta,
    u: Theta,
    s: Option<Theta>,
    t: Growth,
    uu: Option<Theta>,
}

fn symbolic(spec: &ChainSpec) -> Option<Symbolic> {
    let (b, a) = spec.asymptotics()?;
    let r = b.shifted_back().mul(&a.recip());
    if !(r.coef > 0.0 && r.geo > 0.0) {
        return None;
    }
    let mu = Theta::of_product(&r);
    let u = mu.mul(&Theta::from_asym(&b)).inv();
    Some(Symbolic {
        mu,
        u,
        s: mu.partial_sum(),
        t: mu.tail_sum(),
        uu: u.partial_sum().map(|p| p.shift_back()),
    })
}

/// Log-space arrays of the criterion ingredients on `0..=n`.
#[derive(Debug, Clone)]
struct Numeric {
    n: usize,
    ln_mu: Vec<f64>,
    ln_u: Vec<f64>,
    ln_s: Vec<f64>,
    /// `ln U_n` (`U_0 = 0`).
    ln_uu: Vec<f64>,
    /// `ln` upper enclosure of `T_n`, when the tail is certified (or the chain ends at `n`).
    ln_t_hi: Option<Vec<f64>>,
}

fn numeric(spec: &ChainSpec, horizon: usize) -> Result<Numeric> {
    let cap = match spec.bound() {
        StateBound::Finite(n) => n.min(horizon),
        StateBound::Infinite => horizon,
    };
    // overflowing rates cap the probe range
    let mut n = cap;
    for i in 0..=cap {
        let bad = |e: &Error| matches!(e, Error::InvalidRate { value, .. } if *value == f64::INFINITY);
        let b_ok = if spec.is_finite() && Some(i) == bound_of(spec) {
            Ok(1.0)
        } else {
            spec.birth(i)
        };
        let a_ok = if i >= 1 { spec.death(i) } else { Ok(1.0) };
        match (b_ok, a_ok) {
            (Ok(_), Ok(_)) => {}
            (Err(e), _) | (_, Err(e)) if bad(&e) => {
                n = i.saturating_sub(1);
                break;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    let n = n.max(1).min(cap);
    let mu = mu_weights(spec, n)?;
    let ln_mu = mu.ln_mu_all().to_vec();
    let chain_ends = spec.is_finite() && bound_of(spec) == Some(n);
    let mut ln_u = Vec::with_capacity(n + 1);
    for (i, lm) in ln_mu.iter().enumerate().take(n + 1) {
        if chain_ends && i == n {
            ln_u.push(f64::INFINITY);
        } else {
            ln_u.push(-lm - libm::log(spec.birth(i)?));
        }
    }
    let ln_s: Vec<f64> = (0..=n).map(|k| mu.ln_partial(k)).collect();
    let mut ln_uu = Vec::with_capacity(n + 1);
    ln_uu.push(f64::NEG_INFINITY);
    for i in 1..=n {
        ln_uu.push(log_add(ln_uu[i - 1], ln_u[i - 1]));
    }
    let ln_t_hi = mu.ln_beyond().map(|(_, hi)| {
        let mut t = alloc::vec![0.0; n + 1];
        let mut acc = hi;
        for i in (0..=n).rev() {
            acc = log_add(acc, ln_mu[i]);
            t[i] = acc;
        }
        t
    });
    Ok(Numeric { n, ln_mu, ln_u, ln_s, ln_uu, ln_t_hi })
}

fn bound_of(spec: &ChainSpec) -> Option<usize> {
    match spec.bound() {
        StateBound::Finite(n) => Some(n),
        StateBound::Infinite => None,
    }
}

/// Ingredient store shared by the rows and the non-explosion check.
pub struct Quantities {
    finite: bool,
    sym: Option<Symbolic>,
    num: Numeric,
}

/// Probe range used for reported quantities when classes decide the verdict.
const EVIDENCE_HORIZON: usize = 2000;

impl Quantities {
    pub fn new(spec: &ChainSpec, horizon: usize) -> Result<Self> {
        let sym = symbolic(spec);
        let probe = if sym.is_some() { horizon.min(EVIDENCE_HORIZON) } else { horizon };
        let num = numeric(spec, probe.max(8))?;
        Ok(Quantities { finite: spec.is_finite(), sym, num })
    }

    fn series(&self, ln_t: &[f64], class: Option<Option<Theta>>, mode: Mode) -> SeriesVerdict {
        let n = self.num.n;
        if self.finite {
            let v = match mode {
                Mode::Sum => ln_t.iter().fold(f64::NEG_INFINITY, |a, &x| log_add(a, x)),
                _ => ln_t.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x)),
            };
            return SeriesVerdict { value: SeriesValue::Converges(Enclosure::point(libm::exp(v))), horizon: n, method: Method::Finite };
        }
        match class {
            Some(Some(c)) => {
                let finite = match mode {
                    Mode::Sum => c.summable(),
                    Mode::Sup => c.bounded(),
                    Mode::Limsup => c.vanishes(),
                };
                let value = if finite {
                    let probe = match mode {
                        Mode::Sum => ln_t.iter().fold(f64::NEG_INFINITY, |a, &x| log_add(a, x)),
                        Mode::Sup => ln_t.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x)),
                        Mode::Limsup => *ln_t.last().unwrap_or(&f64::NEG_INFINITY),
                    };
                    SeriesValue::Converges(Enclosure::point(libm::exp(probe)))
                } else {
                    SeriesValue::Diverges
                };
                SeriesVerdict { value, horizon: n, method: Method::ClosedFamily }
            }
            Some(None) => SeriesVerdict::inconclusive(n),
            None => numeric_series(ln_t, mode, None),
        }
    }

    fn class<F: FnOnce(&Symbolic) -> Option<Theta>>(&self, f: F) -> Option<Option<Theta>> {
        self.sym.as_ref().map(f)
    }

    /// `Σ u_n μ[0,n]` (its divergence is the uniqueness condition).
    pub fn uniqueness_series(&self) -> SeriesVerdict {
        let num = &self.num;
        let terms: Vec<f64> = (0..self.term_end()).map(|i| num.ln_u[i] + num.ln_s[i]).collect();
        self.series(&terms, self.class(|s| s.s.map(|c| s.u.mul(&c))), Mode::Sum)
    }

    /// `Σ u_n`.
    pub fn recurrence_series(&self) -> SeriesVerdict {
        let terms = &self.num.ln_u[..self.term_end()];
        self.series(terms, self.class(|s| Some(s.u)), Mode::Sum)
    }

    /// `Σ μ_n`.
    pub fn mass_series(&self) -> SeriesVerdict {
        self.series(&self.num.ln_mu, self.class(|s| Some(s.mu)), Mode::Sum)
    }

    /// Terms `u_n` are defined for `n < N` on a chain ending at `N`.
    fn term_end(&self) -> usize {
        if self.finite {
            self.num.n
        } else {
            self.num.n + 1
        }
    }

    fn t_class(&self) -> Option<Option<Theta>> {
        self.class(|s| match s.t {
            Growth::Class(c) => Some(c),
            Growth::Infinite => None,
        })
    }

    /// Row quantity `ln(g(T_n) U_n)` for `n = 1..=N`, when `T` is certified.
    fn t_terms(&self, g: impl Fn(f64) -> Option<f64>) -> Option<Vec<f64>> {
        let t = self.num.ln_t_hi.as_ref()?;
        Some((1..=self.num.n).filter_map(|n| g(t[n]).map(|lg| lg + self.num.ln_uu[n])).collect())
    }
}

fn row(criterion: Criterion, star: Verdict, own: SeriesVerdict, finite_is_good: bool, quantity_ok: bool) -> Row {
    let own_verdict = if finite_is_good { own.converges_verdict() } else { own.diverges_verdict() };
    let quantity = match own.value {
        SeriesValue::Converges(e) if quantity_ok => Some(e.hi),
        _ => None,
    };
    Row { criterion, verdict: star.and(own_verdict), quantity, method: own.method, horizon: own.horizon }
}

/// Evaluates every criterion row for `spec`. Nash needs `q_param > 2`.
pub fn classify_chain(spec: &ChainSpec, q_param: f64, horizon: usize) -> Result<ClassificationReport> {
    if !(q_param > 2.0) || !q_param.is_finite() {
        return Err(Error::domain(
            "Nash criterion needs q > 2; the range 1 < q <= 2 is not covered by the criterion",
        ));
    }
    let q = Quantities::new(spec, horizon)?;
    let n = q.num.n;
    let mut rows = Vec::with_capacity(8);

    // on a finite space the process is non-explosive and recurrent outright
    let uniq = q.uniqueness_series();
    let star = if q.finite { Verdict::Holds } else { uniq.diverges_verdict() };
    rows.push(Row { criterion: Criterion::Uniqueness, verdict: star, quantity: None, method: uniq.method, horizon: uniq.horizon });

    let rec = q.recurrence_series();
    let rec_verdict = if q.finite { Verdict::Holds } else { rec.diverges_verdict() };
    rows.push(Row { criterion: Criterion::Recurrence, verdict: rec_verdict, quantity: None, method: rec.method, horizon: rec.horizon });

    let mass = q.mass_series();
    rows.push(row(Criterion::Ergodicity, star, mass, true, true));
    let mass_fails = mass.converges_verdict() == Verdict::Fails;

    let t_class = q.t_class();
    let t_rows = |terms: Option<Vec<f64>>, class: Option<Option<Theta>>, mode: Mode| -> SeriesVerdict {
        if mass_fails {
            return SeriesVerdict { value: SeriesValue::Diverges, horizon: n, method: mass.method };
        }
        match terms {
            Some(t) => q.series(&t, class, mode),
            None => match class {
                // class decides even without a numeric tail certificate
                Some(Some(_)) => q.series(&[], class, mode),
                _ => SeriesVerdict::inconclusive(n),
            },
        }
    };
    let uu = q.sym.and_then(|s| s.uu);
    let combine = |f: &dyn Fn(Theta, Theta) -> Option<Theta>| -> Option<Option<Theta>> {
        t_class.map(|tc| match (tc, uu) {
            (Some(t), Some(u)) => f(t, u),
            _ => None,
        })
    };

    let exp_terms = q.t_terms(Some);
    let exp = t_rows(exp_terms.clone(), combine(&|t, u| Some(t.mul(&u))), Mode::Sup);
    rows.push(row(Criterion::ExponentialErgodicity, star, exp, true, true));

    let disc = if q.finite {
        SeriesVerdict { value: SeriesValue::Converges(Enclosure::point(0.0)), horizon: n, method: Method::Finite }
    } else {
        t_rows(exp_terms, combine(&|t, u| Some(t.mul(&u))), Mode::Limsup)
    };
    rows.push(row(Criterion::DiscreteSpectrum, star, disc, true, true));

    let ls_terms = q.t_terms(|lt| if lt < 0.0 { Some(lt + libm::log(-lt)) } else { None });
    let ls = t_rows(ls_terms, combine(&|t, u| t.log_inv().map(|l| t.mul(&l).mul(&u))), Mode::Sup);
    rows.push(row(Criterion::LogSobolev, star, ls, true, true));

    // strong ergodicity: Σ_n μ_n U_n (the Fubini-equivalent form Σ u_n T_{n+1} is checked below)
    let strong_terms: Vec<f64> = (1..=n).map(|i| q.num.ln_mu[i] + q.num.ln_uu[i]).collect();
    let strong_class = q.class(|s| s.uu.map(|u| s.mu.mul(&u)));
    let alt_class = q.class(|s| match s.t {
        Growth::Class(t) => Some(s.u.mul(&t.shift_forward())),
        Growth::Infinite => None,
    });
    let mut diagnostics = Vec::new();
    let strong = if mass_fails {
        SeriesVerdict { value: SeriesValue::Diverges, horizon: n, method: mass.method }
    } else {
        q.series(&strong_terms, strong_class, Mode::Sum)
    };
    if let (Some(Some(a)), Some(Some(b))) = (strong_class, alt_class) {
        if a.summable() != b.summable() {
            diagnostics.push(String::from("strong ergodicity: the two equivalent series forms disagree"));
        }
    }
    rows.push(row(Criterion::StrongErgodicity, star, strong, true, true));

    let kappa = (q_param - 2.0) / (q_param - 1.0);
    let nash_terms = q.t_terms(|lt| Some(kappa * lt));
    let nash = t_rows(nash_terms, combine(&|t, u| Some(t.powf(kappa).mul(&u))), Mode::Sup);
    rows.push(row(Criterion::Nash, star, nash, true, true));

    let fubini_ln = fubini_check(&q.num, q.finite);
    if let Some((a, b)) = fubini_ln {
        if a.is_finite() && b.is_finite() && (a - b).abs() > 1e-10 * a.abs().max(1.0) {
            diagnostics.push(format!("Fubini identity off: ln values {a} vs {b}"));
        }
    }
    let delta_check = delta_crosscheck(spec, horizon)?;
    if let Some((a, b)) = delta_check {
        if (a - b).abs() > 1e-12 * a.abs().max(b.abs()) {
            diagnostics.push(format!("delta mismatch between code paths: {a} vs {b}"));
        }
    }
    if diagnostics.iter().any(|d| d.starts_with("strong")) {
        rows[Criterion::StrongErgodicity.index()].verdict = Verdict::Inconclusive;
    }
    enforce_consistency(&mut rows, &mut diagnostics);
    Ok(ClassificationReport { rows, q_param, horizon: n, diagnostics, fubini_ln, delta_check })
}

/// `(ln Σ_{n<N} u_n μ[n+1,N], ln Σ_{m=1}^{N} μ_m U_m)` on the probe truncation.
fn fubini_check(num: &Numeric, finite: bool) -> Option<(f64, f64)> {
    let n = num.n.min(EVIDENCE_HORIZON);
    if n < 1 {
        return None;
    }
    let _ = finite;
    // suffix sums μ[k,n]
    let mut suffix = alloc::vec![f64::NEG_INFINITY; n + 2];
    for k in (0..=n).rev() {
        suffix[k] = log_add(suffix[k + 1], num.ln_mu[k]);
    }
    let lhs = (0..n).fold(f64::NEG_INFINITY, |acc, k| log_add(acc, num.ln_u[k] + suffix[k + 1]));
    let rhs = (1..=n).fold(f64::NEG_INFINITY, |acc, m| log_add(acc, num.ln_mu[m] + num.ln_uu[m]));
    Some((lhs, rhs))
}

/// δ on a truncation by two independent code paths.
fn delta_crosscheck(spec: &ChainSpec, horizon: usize) -> Result<Option<(f64, f64)>> {
    let n = match spec.bound() {
        StateBound::Finite(n) => n,
        StateBound::Infinite => horizon.clamp(1, 200),
    };
    let chain = match crate::chain::truncate(spec, n) {
        Ok(c) => c,
        Err(Error::InvalidRate { value, .. }) if value == f64::INFINITY => return Ok(None),
        Err(e) => return Err(e),
    };
    let direct = exp_ergodicity_sup(&chain);
    let dual = crate::dualgap::delta_finite(&chain);
    if direct.is_finite() && dual.is_finite() {
        Ok(Some((dual, direct)))
    } else {
        Ok(None)
    }
}

/// `sup_{n>=1} μ[n,N] Σ_{j<=n-1} (μ_j b_j)^{-1}` evaluated literally in log space.
pub fn exp_ergodicity_sup(chain: &crate::chain::FiniteChain) -> f64 {
    let ln_pi = chain.ln_pi();
    let b = chain.birth();
    let n = chain.size() - 1;
    let mut suffix = alloc::vec![f64::NEG_INFINITY; n + 2];
    for k in (0..=n).rev() {
        suffix[k] = log_add(suffix[k + 1], ln_pi[k]);
    }
    let mut ln_uu = f64::NEG_INFINITY;
    let mut best = f64::NEG_INFINITY;
    for k in 1..=n {
        ln_uu = log_add(ln_uu, -ln_pi[k - 1] - libm::log(b[k - 1]));
        best = best.max(suffix[k] + ln_uu);
    }
    libm::exp(best)
}

/// Pairs `(stronger, weaker)`: a decided "holds" on the left forces "holds"
/// on the right. The ladder order supplies all pairs except
/// strong-ergodicity vs log-Sobolev.
fn implications() -> Vec<(Criterion, Criterion, &'static str)> {
    let mut out = Vec::new();
    for (j, &hi) in Criterion::ALL.iter().enumerate() {
        for &lo in &Criterion::ALL[..j] {
            if hi == Criterion::StrongErgodicity && lo == Criterion::LogSobolev {
                continue;
            }
            out.push((hi, lo, "ladder"));
        }
    }
    out
}

const DIAGRAM: [(Criterion, Criterion); 5] = [
    (Criterion::Nash, Criterion::LogSobolev),
    (Criterion::Nash, Criterion::StrongErgodicity),
    (Criterion::LogSobolev, Criterion::ExponentialErgodicity),
    (Criterion::StrongErgodicity, Criterion::ExponentialErgodicity),
    (Criterion::ExponentialErgodicity, Criterion::Ergodicity),
];

fn enforce_consistency(rows: &mut [Row], diagnostics: &mut Vec<String>) {
    let mut pairs = implications();
    pairs.extend(DIAGRAM.iter().map(|&(a, b)| (a, b, "diagram")));
    for (strong, weak, source) in pairs {
        let (s, w) = (rows[strong.index()].verdict, rows[weak.index()].verdict);
        if s == Verdict::Holds && w == Verdict::Fails {
            diagnostics.push(format!(
                "{source}: {} holds but {} fails; {} downgraded to inconclusive",
                strong.name(),
                weak.name(),
                weak.name()
            ));
            rows[weak.index()].verdict = Verdict::Inconclusive;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use Verdict::{Fails as F, Holds as H};

    fn verdicts(b: &str, a: &str) -> Vec<Verdict> {
        let spec = ChainSpec::from_exprs(b, a).unwrap();
        let r = classify_chain(&spec, 3.0, 100_000).unwrap();
        assert!(r.diagnostics.is_empty(), "{:?}", r.diagnostics);
        r.rows.iter().map(|r| r.verdict).collect()
    }

    #[test]
    fn geometric_chain() {
        assert_eq!(verdicts("1", "2"), vec![H, H, H, H, F, F, F, F]);
    }

    #[test]
    fn factorial_chain() {
        // the Nash quantity grows like (n-1)!/n, so that row fails
        assert_eq!(verdicts("1", "i^2"), vec![H, H, H, H, H, H, H, F]);
    }

    #[test]
    fn null_recurrent_transient_explosive() {
        assert_eq!(verdicts("1", "1"), vec![H, H, F, F, F, F, F, F]);
        assert_eq!(verdicts("2", "1"), vec![H, F, F, F, F, F, F, F]);
        assert_eq!(verdicts("2^i", "1"), vec![F, F, F, F, F, F, F, F]);
    }

    #[test]
    fn uniqueness_with_quadratic_rates() {
        assert_eq!(verdicts("max(1, i^2)", "i^2")[0], H);
    }

    #[test]
    fn harmonic_tail_is_not_ergodic() {
        let v = verdicts("1", "(i+2)/(i+1)");
        assert_eq!(v[2], F);
        assert_eq!(v[3], F);
    }

    #[test]
    fn exp_row_quantity_is_delta() {
        let spec = ChainSpec::from_exprs("1", "2").unwrap();
        let r = classify_chain(&spec, 3.0, 1000).unwrap();
        let q = r.row(Criterion::ExponentialErgodicity).quantity.unwrap();
        assert!((q - 2.0).abs() < 1e-9, "{q}");
        let (a, b) = r.delta_check.unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn finite_chains_hold_everywhere() {
        let spec = ChainSpec::from_arrays(vec![1.0, 2.0, 3.0], vec![0.5, 1.0, 2.0]).unwrap();
        let r = classify_chain(&spec, 3.0, 10).unwrap();
        assert!(r.rows.iter().all(|r| r.verdict == H && r.method == Method::Finite), "{r:?}");
        let (a, b) = r.fubini_ln.unwrap();
        assert!((a - b).abs() < 1e-12);
        assert_eq!(r.properties().len(), 10);
    }

    #[test]
    fn nash_needs_q_above_two() {
        let spec = ChainSpec::from_exprs("1", "2").unwrap();
        assert!(classify_chain(&spec, 2.0, 100).is_err());
        assert!(classify_chain(&spec, 1.5, 100).is_err());
    }

    #[test]
    fn series_examples() {
        let s = series_limit(&RateExpr::parse("2^(-i)").unwrap(), Mode::Sum, 2000).unwrap();
        match s.value {
            SeriesValue::Converges(e) => assert!(e.contains(2.0, 1e-12), "{e}"),
            v => panic!("{v:?}"),
        }
        let s = series_limit(&RateExpr::parse("1").unwrap(), Mode::Sum, 2000).unwrap();
        assert_eq!(s.value, SeriesValue::Diverges);
        // harmonic-type term outside the closed family: no decision
        let s = series_limit(&RateExpr::parse("1/(i+1) + 1/(i+1)^1.5").unwrap(), Mode::Sum, 5000).unwrap();
        assert_eq!(s.value, SeriesValue::Inconclusive);
        let s = series_limit(&RateExpr::parse("1/(i+1)^2").unwrap(), Mode::Sum, 5000).unwrap();
        match s.value {
            SeriesValue::Converges(e) => assert!(e.contains(core::f64::consts::PI.powi(2) / 6.0, 1e-12), "{e}"),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn numeric_fallback_decides_clear_cases() {
        // terms 2^{-n} with no closed form recognised: ratio certificate applies
        let ln: Vec<f64> = (0..200).map(|n| -(n as f64) * core::f64::consts::LN_2).collect();
        let s = numeric_series(&ln, Mode::Sum, None);
        assert!(matches!(s.value, SeriesValue::Converges(e) if e.contains(2.0, 1e-12)));
        let ln: Vec<f64> = (0..200).map(|n| (n as f64).ln_1p()).collect();
        assert_eq!(numeric_series(&ln, Mode::Sum, None).value, SeriesValue::Diverges);
    }

    #[test]
    fn scale_changes_no_verdict() {
        for (b, a) in [("1", "2"), ("1", "i^2"), ("2", "1")] {
            let s = ChainSpec::from_exprs(b, a).unwrap();
            let r1 = classify_chain(&s, 3.0, 1000).unwrap();
            let r2 = classify_chain(&s.scaled(7.5).unwrap(), 3.0, 1000).unwrap();
            let v1: Vec<_> = r1.rows.iter().map(|r| r.verdict).collect();
            let v2: Vec<_> = r2.rows.iter().map(|r| r.verdict).collect();
            assert_eq!(v1, v2);
        }
    }
}
