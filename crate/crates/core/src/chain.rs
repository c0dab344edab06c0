//! Birth-death chains: rate specifications, μ-weights, truncations.

use alloc::format;
use alloc::vec::Vec;

use crate::enclosure::Enclosure;
use crate::expr::{Asym, Leading, RateExpr};
use crate::{Error, Result};

/// A rate sequence: closed form in `i`, or explicit values.
#[derive(Debug, Clone, PartialEq)]
pub enum Rates {
    Expr(RateExpr),
    /// Birth arrays hold `b_0..b_{n-1}`, death arrays hold `a_1..a_n`.
    Values(Vec<f64>),
}

/// Last state index `n`, or an unbounded state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateBound {
    Finite(usize),
    Infinite,
}

/// Birth rates `b_i` (`0 <= i < n`) and death rates `a_i` (`1 <= i <= n`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    birth: Rates,
    death: Rates,
    bound: StateBound,
}

impl ChainSpec {
    pub fn new(birth: Rates, death: Rates, bound: StateBound) -> Result<Self> {
        for r in [&birth, &death] {
            if let Rates::Values(v) = r {
                match bound {
                    StateBound::Infinite => {
                        return Err(Error::domain("rate arrays require a finite state count"))
                    }
                    StateBound::Finite(n) if v.len() != n => {
                        return Err(Error::LengthMismatch { expected: n, got: v.len() })
                    }
                    StateBound::Finite(_) => {}
                }
            }
        }
        if bound == StateBound::Finite(0) {
            return Err(Error::domain("a chain needs at least two states"));
        }
        let spec = ChainSpec { birth, death, bound };
        if let StateBound::Finite(n) = bound {
            for i in 0..n {
                spec.birth(i)?;
                spec.death(i + 1)?;
            }
        }
        Ok(spec)
    }

    /// Infinite chain from two expressions.
    pub fn from_exprs(birth: &str, death: &str) -> Result<Self> {
        Self::new(
            Rates::Expr(RateExpr::parse(birth)?),
            Rates::Expr(RateExpr::parse(death)?),
            StateBound::Infinite,
        )
    }

    /// Finite chain from `b_0..b_{n-1}` and `a_1..a_n`.
    pub fn from_arrays(birth: Vec<f64>, death: Vec<f64>) -> Result<Self> {
        let n = birth.len();
        Self::new(Rates::Values(birth), Rates::Values(death), StateBound::Finite(n))
    }

    pub fn bound(&self) -> StateBound {
        self.bound
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.bound, StateBound::Finite(_))
    }

    pub fn birth_rates(&self) -> &Rates {
        &self.birth
    }

    pub fn death_rates(&self) -> &Rates {
        &self.death
    }

    fn check_index(&self, i: usize, lo: usize, which: &'static str) -> Result<()> {
        let ok = i >= lo
            && match self.bound {
                StateBound::Finite(n) => (which == "birth" && i < n) || (which == "death" && i <= n),
                StateBound::Infinite => true,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("{which} rate index {i} outside the state space")))
        }
    }

    fn rate(r: &Rates, i: usize, offset: usize, which: &'static str) -> Result<f64> {
        let v = match r {
            Rates::Expr(e) => e.eval(i as f64),
            Rates::Values(v) => v[i - offset],
        };
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(Error::InvalidRate { which, index: i, value: v })
        }
    }

    /// `b_i`, validated finite and positive.
    pub fn birth(&self, i: usize) -> Result<f64> {
        self.check_index(i, 0, "birth")?;
        Self::rate(&self.birth, i, 0, "birth")
    }

    /// `a_i` for `i >= 1`, validated finite and positive.
    pub fn death(&self, i: usize) -> Result<f64> {
        self.check_index(i, 1, "death")?;
        Self::rate(&self.death, i, 1, "death")
    }

    /// Multiplies every rate by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::domain("scale factor must be finite and positive"));
        }
        let s = |r: &Rates| match r {
            Rates::Expr(e) => Rates::Expr(e.scaled(c)),
            Rates::Values(v) => Rates::Values(v.iter().map(|x| x * c).collect()),
        };
        Self::new(s(&self.birth), s(&self.death), self.bound)
    }

    /// Leading asymptotics of `(b_i, a_i)` when both are closed forms.
    pub fn asymptotics(&self) -> Option<(Asym, Asym)> {
        match (&self.birth, &self.death, self.bound) {
            (Rates::Expr(b), Rates::Expr(a), StateBound::Infinite) => {
                match (b.asymptotic()?, a.asymptotic()?) {
                    (Leading::Term(x), Leading::Term(y)) if x.coef > 0.0 && y.coef > 0.0 => Some((x, y)),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// Asymptotics of the μ ratio `μ_{j+1}/μ_j = b_j / a_{j+1}`.
    pub fn ratio_asymptotic(&self) -> Option<Asym> {
        let (b, a) = self.asymptotics()?;
        Some(b.mul(&a.shifted_forward().recip()))
    }
}

/// Sup of a sequence beyond the end of `window`, certified by eventual
/// monotonicity on the window. `limit` is the known limit, if any.
pub(crate) fn eventual_sup(window: &[f64], limit: Option<f64>) -> Option<f64> {
    let last = *window.last()?;
    if window.len() < 2 || !last.is_finite() {
        return None;
    }
    let slack = |x: f64| 1e-13 * x.abs();
    let nonincreasing = window.windows(2).all(|w| w[1] <= w[0] + slack(w[0]));
    let nondecreasing = window.windows(2).all(|w| w[1] >= w[0] - slack(w[0]));
    match limit {
        Some(l) if nondecreasing && l.is_finite() && l >= last - slack(last) => Some(l.max(last)),
        Some(l) if nonincreasing && l <= last + slack(last) => Some(last),
        None if nonincreasing => Some(last),
        _ => None,
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + libm::log1p(libm::exp(lo - hi))
}

/// Geometric tail certificate: `μ_{j+1}/μ_j <= rho < 1` for every `j >= horizon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCert {
    pub horizon: usize,
    pub rho: f64,
}

/// μ-weights `μ_0 = 1, μ_i = μ_{i-1} b_{i-1}/a_i`, held in log form.
#[derive(Debug, Clone, PartialEq)]
pub struct MuWeights {
    ln_mu: Vec<f64>,
    ln_partial: Vec<f64>,
    /// `ln` of a lower/upper enclosure of the mass beyond the last index.
    ln_beyond: Option<(f64, f64)>,
    cert: Option<TailCert>,
}

/// Computes `μ_0..μ_n`. The tail beyond `n` is exact for finite chains and
/// certified geometrically for infinite ones when the ratio `b_j/a_{j+1}` is
/// eventually monotone and below one.
pub fn mu_weights(spec: &ChainSpec, n: usize) -> Result<MuWeights> {
    if let StateBound::Finite(bound) = spec.bound {
        if n > bound {
            return Err(Error::domain(format!("index {n} exceeds the state bound {bound}")));
        }
    }
    let mut ln_mu = Vec::with_capacity(n + 1);
    let mut ln_partial = Vec::with_capacity(n + 1);
    ln_mu.push(0.0);
    ln_partial.push(0.0);
    for i in 1..=n {
        let v = ln_mu[i - 1] + libm::log(spec.birth(i - 1)?) - libm::log(spec.death(i)?);
        ln_mu.push(v);
        ln_partial.push(log_add(ln_partial[i - 1], v));
    }
    let (ln_beyond, cert) = match spec.bound {
        StateBound::Finite(bound) => {
            let mut acc = f64::NEG_INFINITY;
            let mut cur = ln_mu[n];
            for i in n + 1..=bound {
                cur += libm::log(spec.birth(i - 1)?) - libm::log(spec.death(i)?);
                acc = log_add(acc, cur);
            }
            (Some((acc, acc)), None)
        }
        StateBound::Infinite => match geometric_cert(spec, n)? {
            Some(cert) => {
                let hi = ln_mu[n] + libm::log(cert.rho / (1.0 - cert.rho));
                (Some((f64::NEG_INFINITY, hi)), Some(cert))
            }
            None => (None, None),
        },
    };
    Ok(MuWeights { ln_mu, ln_partial, ln_beyond, cert })
}

fn geometric_cert(spec: &ChainSpec, n: usize) -> Result<Option<TailCert>> {
    let lo = (n / 2).max(n.saturating_sub(64)).max(1).min(n);
    let mut window = Vec::with_capacity(n - lo + 1);
    for j in lo..=n {
        window.push(spec.birth(j)? / spec.death(j + 1)?);
    }
    let limit = match spec.ratio_asymptotic() {
        Some(a) => {
            let l = a.limit();
            if l >= 1.0 {
                return Ok(None);
            }
            Some(l)
        }
        None => None,
    };
    Ok(eventual_sup(&window, limit)
        .filter(|&rho| rho < 1.0)
        .map(|rho| TailCert { horizon: n, rho }))
}

impl MuWeights {
    /// Index of the last computed weight.
    pub fn last(&self) -> usize {
        self.ln_mu.len() - 1
    }

    pub fn ln_mu(&self, i: usize) -> f64 {
        self.ln_mu[i]
    }

    pub fn mu(&self, i: usize) -> f64 {
        libm::exp(self.ln_mu[i])
    }

    pub fn ln_mu_all(&self) -> &[f64] {
        &self.ln_mu
    }

    /// `ln μ[0,k]`.
    pub fn ln_partial(&self, k: usize) -> f64 {
        self.ln_partial[k]
    }

    /// `μ[0,k]`.
    pub fn partial(&self, k: usize) -> f64 {
        libm::exp(self.ln_partial[k])
    }

    pub fn cert(&self) -> Option<TailCert> {
        self.cert
    }

    /// Log-enclosure of the mass strictly beyond the last index.
    pub fn ln_beyond(&self) -> Option<(f64, f64)> {
        self.ln_beyond
    }

    /// Enclosure of `μ[k,∞)` (for finite chains, `μ[k,n]`).
    pub fn tail_from(&self, k: usize) -> Option<Enclosure> {
        let (blo, bhi) = self.ln_beyond?;
        let n = self.last();
        let head = if k > n {
            f64::NEG_INFINITY
        } else {
            let mut acc = f64::NEG_INFINITY;
            for i in (k..=n).rev() {
                acc = log_add(acc, self.ln_mu[i]);
            }
            acc
        };
        Some(Enclosure::new(libm::exp(log_add(head, blo)), libm::exp(log_add(head, bhi))))
    }

    /// Enclosure of the total mass `μ = μ[0,∞)`.
    pub fn total(&self) -> Option<Enclosure> {
        self.tail_from(0)
    }
}

/// A chain on `{0..N}` with reflecting boundary (`b_N = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteChain {
    /// `b_0..b_N` with `b_N = 0`.
    birth: Vec<f64>,
    /// `a_0..a_N` with `a_0 = 0`.
    death: Vec<f64>,
    pi: Vec<f64>,
    ln_pi: Vec<f64>,
}

impl FiniteChain {
    /// Builds from `b_0..b_{N-1}` and `a_1..a_N`.
    pub fn new(birth: &[f64], death: &[f64]) -> Result<Self> {
        if birth.len() != death.len() {
            return Err(Error::LengthMismatch { expected: birth.len(), got: death.len() });
        }
        if birth.is_empty() {
            return Err(Error::domain("a chain needs at least two states"));
        }
        for (i, &b) in birth.iter().enumerate() {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::InvalidRate { which: "birth", index: i, value: b });
            }
        }
        for (i, &a) in death.iter().enumerate() {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::InvalidRate { which: "death", index: i + 1, value: a });
            }
        }
        let n = birth.len();
        let mut b = birth.to_vec();
        b.push(0.0);
        let mut a = Vec::with_capacity(n + 1);
        a.push(0.0);
        a.extend_from_slice(death);

        // ln μ locates the mode; π is then built by one-step ratios outward
        // from it, so neighbouring entries satisfy detailed balance to a few ulps.
        let mut ln_mu = Vec::with_capacity(n + 1);
        ln_mu.push(0.0);
        for i in 1..=n {
            ln_mu.push(ln_mu[i - 1] + libm::log(b[i - 1]) - libm::log(a[i]));
        }
        let mode = (0..=n).fold(0, |m, i| if ln_mu[i] > ln_mu[m] { i } else { m });
        let mut pi = alloc::vec![0.0; n + 1];
        pi[mode] = 1.0;
        for i in mode..n {
            pi[i + 1] = pi[i] * b[i] / a[i + 1];
        }
        for i in (1..=mode).rev() {
            pi[i - 1] = pi[i] * a[i] / b[i - 1];
        }
        let z: f64 = pi.iter().sum();
        for p in pi.iter_mut() {
            *p /= z;
        }
        let mut ln_z = f64::NEG_INFINITY;
        for &l in &ln_mu {
            ln_z = log_add(ln_z, l);
        }
        let ln_pi = ln_mu.iter().map(|l| l - ln_z).collect();
        Ok(FiniteChain { birth: b, death: a, pi, ln_pi })
    }

    /// Number of states `N + 1`.
    pub fn size(&self) -> usize {
        self.pi.len()
    }

    /// `b_0..b_N` (reflecting: `b_N = 0`).
    pub fn birth(&self) -> &[f64] {
        &self.birth
    }

    /// `a_0..a_N` (`a_0 = 0`).
    pub fn death(&self) -> &[f64] {
        &self.death
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn ln_pi(&self) -> &[f64] {
        &self.ln_pi
    }

    /// The chain as a finite [`ChainSpec`].
    pub fn to_spec(&self) -> ChainSpec {
        let n = self.size() - 1;
        ChainSpec {
            birth: Rates::Values(self.birth[..n].to_vec()),
            death: Rates::Values(self.death[1..].to_vec()),
            bound: StateBound::Finite(n),
        }
    }

    /// `(Qf)_i = b_i (f_{i+1} - f_i) + a_i (f_{i-1} - f_i)`.
    pub fn apply_generator(&self, f: &[f64]) -> Vec<f64> {
        let n = self.size();
        (0..n)
            .map(|i| {
                let up = if i + 1 < n { self.birth[i] * (f[i + 1] - f[i]) } else { 0.0 };
                let down = if i > 0 { self.death[i] * (f[i - 1] - f[i]) } else { 0.0 };
                up + down
            })
            .collect()
    }

    /// `max_i |π_i b_i - π_{i+1} a_{i+1}| / max_i π_i b_i`.
    pub fn detailed_balance_residual(&self) -> f64 {
        let n = self.size() - 1;
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..n {
            let l = self.pi[i] * self.birth[i];
            let r = self.pi[i + 1] * self.death[i + 1];
            worst = worst.max((l - r).abs());
            scale = scale.max(l);
        }
        worst / scale
    }
}

/// Reflecting truncation of `spec` to `{0..n}`.
pub fn truncate(spec: &ChainSpec, n: usize) -> Result<FiniteChain> {
    if n == 0 {
        return Err(Error::domain("truncation level must be at least 1"));
    }
    if let StateBound::Finite(bound) = spec.bound {
        if n > bound {
            return Err(Error::domain(format!("truncation {n} exceeds the state bound {bound}")));
        }
    }
    let mut b = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    for i in 0..n {
        b.push(spec.birth(i)?);
        a.push(spec.death(i + 1)?);
    }
    FiniteChain::new(&b, &a)
}

/// Non-explosion check: the series `Σ_k (b_k μ_k)^{-1} μ[0,k]` must diverge,
/// and (second clause) `μ` is reported separately.
#[derive(Debug, Clone, PartialEq)]
pub struct NonExplosion {
    pub verdict: crate::classify::Verdict,
    pub mu_finite: crate::classify::Verdict,
    pub series: crate::classify::SeriesVerdict,
}

pub fn check_nonexplosion(spec: &ChainSpec, horizon: usize) -> Result<NonExplosion> {
    use crate::classify::{self, Verdict};
    if spec.is_finite() {
        let series = classify::SeriesVerdict::finite(0.0);
        return Ok(NonExplosion { verdict: Verdict::Holds, mu_finite: Verdict::Holds, series });
    }
    let q = classify::Quantities::new(spec, horizon)?;
    let series = q.uniqueness_series();
    let verdict = series.diverges_verdict();
    let mu_finite = q.mass_series().converges_verdict();
    Ok(NonExplosion { verdict, mu_finite, series })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn geometric_weights() {
        let spec = ChainSpec::from_exprs("1", "2").unwrap();
        let mu = mu_weights(&spec, 60).unwrap();
        assert_eq!(mu.mu(0), 1.0);
        for i in 0..=60 {
            assert!((mu.mu(i) - 0.5f64.powi(i as i32)).abs() < 1e-15);
        }
        let total = mu.total().unwrap();
        assert!(total.contains(2.0, 1e-14), "{total}");
        assert!(total.width() < 1e-15);
    }

    #[test]
    fn linear_model_first_weight() {
        let spec = ChainSpec::from_exprs("i+1", "2*i").unwrap();
        let mu = mu_weights(&spec, 5).unwrap();
        assert!((mu.mu(1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn factorial_weights_do_not_overflow() {
        let spec = ChainSpec::from_exprs("1", "i^2").unwrap();
        let mu = mu_weights(&spec, 400).unwrap();
        // ln μ_n = -2 ln n!
        let ln_fact: f64 = (1..=400).map(|k| (k as f64).ln()).sum();
        assert!((mu.ln_mu(400) + 2.0 * ln_fact).abs() < 1e-9);
        assert!(mu.cert().is_some());
    }

    #[test]
    fn no_certificate_without_decay() {
        let spec = ChainSpec::from_exprs("1", "1").unwrap();
        assert!(mu_weights(&spec, 100).unwrap().tail_from(0).is_none());
        let spec = ChainSpec::from_exprs("1", "(i+2)/(i+1)").unwrap();
        assert!(mu_weights(&spec, 100).unwrap().tail_from(0).is_none());
    }

    #[test]
    fn truncation_examples() {
        let spec = ChainSpec::from_exprs("1", "2").unwrap();
        let c = truncate(&spec, 1).unwrap();
        assert!((c.pi()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.pi()[1] - 1.0 / 3.0).abs() < 1e-15);

        let spec = ChainSpec::from_exprs("i+1", "2*i+3").unwrap();
        let mu = mu_weights(&spec, 3).unwrap();
        let want = [1.0, 1.0 / 5.0, 2.0 / 35.0, 2.0 / 105.0];
        for (i, w) in want.iter().enumerate() {
            assert!((mu.mu(i) - w).abs() < 1e-15);
        }
        let c = truncate(&spec, 3).unwrap();
        let z: f64 = want.iter().sum();
        for (i, w) in want.iter().enumerate() {
            assert!((c.pi()[i] - w / z).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_truncation_of_finite_spec() {
        let spec = ChainSpec::from_arrays(vec![1.0, 2.0], vec![3.0, 4.0]).unwrap();
        let c = truncate(&spec, 2).unwrap();
        assert_eq!(c.birth(), &[1.0, 2.0, 0.0]);
        assert_eq!(c.death(), &[0.0, 3.0, 4.0]);
        assert!(truncate(&spec, 3).is_err());
        assert_eq!(c.to_spec(), spec);
    }

    #[test]
    fn rejects_bad_rates() {
        assert!(matches!(
            ChainSpec::from_arrays(vec![1.0, -1.0], vec![1.0, 1.0]),
            Err(Error::InvalidRate { which: "birth", index: 1, .. })
        ));
        assert!(ChainSpec::from_arrays(vec![1.0], vec![1.0, 2.0]).is_err());
        let spec = ChainSpec::from_exprs("1 - i", "1").unwrap();
        assert!(mu_weights(&spec, 3).is_err());
        assert!(FiniteChain::new(&[1.0], &[f64::NAN]).is_err());
    }

    #[test]
    fn nonexplosion_examples() {
        use crate::classify::Verdict;
        let geo = ChainSpec::from_exprs("1", "2").unwrap();
        let r = check_nonexplosion(&geo, 100_000).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert_eq!(r.mu_finite, Verdict::Holds);
        let exp = ChainSpec::from_exprs("2^i", "1").unwrap();
        assert_eq!(check_nonexplosion(&exp, 100_000).unwrap().verdict, Verdict::Fails);
        let fin = ChainSpec::from_arrays(vec![1.0], vec![1.0]).unwrap();
        assert_eq!(check_nonexplosion(&fin, 10).unwrap().verdict, Verdict::Holds);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn rates(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (
            proptest::collection::vec(1e-3f64..1e3, n),
            proptest::collection::vec(1e-3f64..1e3, n),
        )
    }

    proptest! {
        #[test]
        fn detailed_balance((b, a) in (1usize..40).prop_flat_map(rates)) {
            let c = FiniteChain::new(&b, &a).unwrap();
            prop_assert!(c.detailed_balance_residual() <= 1e-14);
            let s: f64 = c.pi().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-13);
            let ones = vec![1.0; c.size()];
            prop_assert!(c.apply_generator(&ones).iter().all(|&x| x == 0.0));
        }

        #[test]
        fn mu_scale_covariant((b, a) in (1usize..30).prop_flat_map(rates), c in 1e-3f64..1e3) {
            let spec = ChainSpec::from_arrays(b, a).unwrap();
            let n = match spec.bound() { StateBound::Finite(n) => n, _ => unreachable!() };
            let m1 = mu_weights(&spec, n).unwrap();
            let m2 = mu_weights(&spec.scaled(c).unwrap(), n).unwrap();
            for i in 0..=n {
                prop_assert!((m1.ln_mu(i) - m2.ln_mu(i)).abs() <= 1e-12 * (1.0 + m1.ln_mu(i).abs()));
            }
        }

        #[test]
        fn partial_sums_increase((b, a) in (1usize..30).prop_flat_map(rates)) {
            let spec = ChainSpec::from_arrays(b, a).unwrap();
            let n = match spec.bound() { StateBound::Finite(n) => n, _ => unreachable!() };
            let m = mu_weights(&spec, n).unwrap();
            for k in 1..=n {
                prop_assert!(m.ln_partial(k) > m.ln_partial(k - 1));
            }
        }
    }
}
