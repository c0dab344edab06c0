//! Exact oracle for finite chains: spectrum by Sturm bisection, quadratic
//! functionals, and the semigroup by uniformization.

use alloc::vec;
use alloc::vec::Vec;

use crate::chain::{truncate, ChainSpec, FiniteChain};
use crate::{Error, Result};

/// Eigenvalues `λ_0 <= λ_1 <= ...` of `-Q` (a prefix of the spectrum).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// Bisection stopping width used for every eigenvalue.
    pub tolerance: f64,
}

/// Symmetrized generator `S = Δ^{1/2}(-Q)Δ^{-1/2}`: diagonal and squared
/// off-diagonal `b_i a_{i+1}` (the off-diagonal itself is `-√(b_i a_{i+1})`).
struct Tridiag {
    diag: Vec<f64>,
    off_sq: Vec<f64>,
}

impl Tridiag {
    fn of(chain: &FiniteChain) -> Self {
        let b = chain.birth();
        let a = chain.death();
        let n = chain.size();
        let diag = (0..n).map(|i| a[i] + b[i]).collect();
        let off_sq = (0..n - 1).map(|i| b[i] * a[i + 1]).collect();
        Tridiag { diag, off_sq }
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += libm::sqrt(self.off_sq[i - 1]);
            }
            if i + 1 < n {
                r += libm::sqrt(self.off_sq[i]);
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x` (negative LDLᵀ pivots).
    fn count_below(&self, x: f64, pivmin: f64) -> usize {
        let mut count = 0;
        let mut d = self.diag[0] - x;
        for i in 0..self.diag.len() {
            if i > 0 {
                d = (self.diag[i] - x) - self.off_sq[i - 1] / d;
            }
            if d.abs() < pivmin {
                d = -pivmin;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }
}

const ABS_TOL: f64 = 1e-13;

/// The `count` smallest eigenvalues of `-Q`.
pub fn spectrum(chain: &FiniteChain, count: usize) -> Result<Spectrum> {
    let n = chain.size();
    if n < 2 {
        return Err(Error::domain("spectrum needs at least two states"));
    }
    if count > n {
        return Err(Error::domain("more eigenvalues requested than states"));
    }
    let t = Tridiag::of(chain);
    let (glo, ghi) = t.gershgorin();
    let scale = glo.abs().max(ghi.abs()).max(f64::MIN_POSITIVE);
    let pivmin = f64::MIN_POSITIVE.max(scale * 1e-300);
    let tolerance = ABS_TOL.max(4.0 * f64::EPSILON * scale);
    let mut values = Vec::with_capacity(count);
    let mut floor = glo;
    for k in 0..count {
        let (mut lo, mut hi) = (floor, ghi);
        while hi - lo > tolerance {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if t.count_below(mid, pivmin) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let v = 0.5 * (lo + hi);
        values.push(v);
        floor = lo;
    }
    Ok(Spectrum { values, tolerance })
}

/// `λ_1` of the finite chain.
pub fn spectral_gap_exact(chain: &FiniteChain) -> Result<f64> {
    Ok(spectrum(chain, 2)?.values[1])
}

/// Eigenfunction of `-Q` for eigenvalue index `k`, normalized to unit
/// `L²(π)` norm, together with the residual `max_i |(-Q g - λ g)_i| / (λ max|g|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub lambda: f64,
    pub g: Vec<f64>,
    pub residual: f64,
}

pub fn eigenpair(chain: &FiniteChain, k: usize) -> Result<Eigenpair> {
    let n = chain.size();
    let spec = spectrum(chain, k + 1)?;
    let lambda = spec.values[k];
    let t = Tridiag::of(chain);
    let offs: Vec<f64> = t.off_sq.iter().map(|x| -libm::sqrt(*x)).collect();
    let shift = lambda + spec.tolerance.max(1e-12 * lambda.abs());
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * libm::sin(i as f64 + 1.0)).collect();
    for _ in 0..6 {
        v = thomas(&t.diag, &offs, shift, &v);
        let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    let ln_pi = chain.ln_pi();
    let mut g: Vec<f64> = (0..n).map(|i| v[i] * libm::exp(-0.5 * ln_pi[i])).collect();
    // L²(π) normalization and a sign convention (increasing at the left end)
    let norm = libm::sqrt(g.iter().zip(chain.pi()).map(|(x, p)| p * x * x).sum::<f64>());
    let sign = if g[n - 1] >= g[0] { 1.0 } else { -1.0 };
    for x in g.iter_mut() {
        *x *= sign / norm;
    }
    let qg = chain.apply_generator(&g);
    let gmax = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let res = qg.iter().zip(&g).fold(0.0f64, |m, (q, x)| m.max((-q - lambda * x).abs()));
    let residual = res / (lambda.abs().max(1.0) * gmax);
    Ok(Eigenpair { lambda, g, residual })
}

/// Solves `(T - σ I) x = rhs` for symmetric tridiagonal `T`.
fn thomas(diag: &[f64], off: &[f64], sigma: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let tiny = 1e-300;
    let mut denom = diag[0] - sigma;
    if denom.abs() < tiny {
        denom = tiny;
    }
    if n > 1 {
        c[0] = off[0] / denom;
    }
    d[0] = rhs[0] / denom;
    for i in 1..n {
        let mut m = (diag[i] - sigma) - off[i - 1] * c[i - 1];
        if m.abs() < tiny {
            m = tiny;
        }
        if i + 1 < n {
            c[i] = off[i] / m;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

fn check_len(chain: &FiniteChain, f: &[f64]) -> Result<()> {
    if f.len() != chain.size() {
        return Err(Error::LengthMismatch { expected: chain.size(), got: f.len() });
    }
    Ok(())
}

/// `π(f)`.
pub fn mean(chain: &FiniteChain, f: &[f64]) -> Result<f64> {
    check_len(chain, f)?;
    Ok(chain.pi().iter().zip(f).map(|(p, x)| p * x).sum())
}

/// `D(f) = Σ_i π_i b_i (f_{i+1} - f_i)²`.
pub fn dirichlet(chain: &FiniteChain, f: &[f64]) -> Result<f64> {
    check_len(chain, f)?;
    let (pi, b) = (chain.pi(), chain.birth());
    Ok((0..f.len() - 1).map(|i| pi[i] * b[i] * (f[i + 1] - f[i]) * (f[i + 1] - f[i])).sum())
}

/// `Var(f) = π(f²) - π(f)²`, evaluated in centred form.
pub fn variance(chain: &FiniteChain, f: &[f64]) -> Result<f64> {
    let m = mean(chain, f)?;
    Ok(chain.pi().iter().zip(f).map(|(p, x)| p * (x - m) * (x - m)).sum())
}

/// `Ent(f) = π(f log f) - π(f) log π(f)` for `f >= 0`, with `0 log 0 = 0`.
pub fn entropy(chain: &FiniteChain, f: &[f64]) -> Result<f64> {
    check_len(chain, f)?;
    if let Some(i) = f.iter().position(|x| !(*x >= 0.0)) {
        return Err(Error::domain(alloc::format!("entropy needs f >= 0 (entry {i} is {})", f[i])));
    }
    let m = mean(chain, f)?;
    if m == 0.0 {
        return Ok(0.0);
    }
    // π(f log(f/m)) is the same quantity and avoids cancellation
    let v: f64 = chain
        .pi()
        .iter()
        .zip(f)
        .map(|(p, &x)| if x > 0.0 { p * x * libm::log(x / m) } else { 0.0 })
        .sum();
    Ok(v.max(0.0))
}

/// `P_t f` by uniformization, `P_t = Σ_m Pois(Λt; m) Π^m` with `Π = I + Q/Λ`.
///
/// The sum is applied in the telescoped form `f + Σ_{m>=1} W_m (Π^m f - Π^{m-1} f)`
/// with `W_m` the Poisson upper tail, so constants are preserved exactly.
pub fn evolve(chain: &FiniteChain, f: &[f64], t: f64) -> Result<Vec<f64>> {
    check_len(chain, f)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::domain("time must be finite and non-negative"));
    }
    if t == 0.0 {
        return Ok(f.to_vec());
    }
    let big_lambda = chain
        .birth()
        .iter()
        .zip(chain.death())
        .fold(0.0f64, |m, (b, a)| m.max(a + b));
    let rate = big_lambda * t;
    let m_max = (rate + 12.0 * libm::sqrt(rate) + 40.0) as usize;
    let ln_rate = libm::log(rate);
    let pmf: Vec<f64> = (0..=m_max)
        .map(|m| libm::exp(-rate + m as f64 * ln_rate - libm::lgamma(m as f64 + 1.0)))
        .collect();
    let mut upper = vec![0.0; m_max + 2];
    for m in (0..=m_max).rev() {
        upper[m] = upper[m + 1] + pmf[m];
    }
    let mut out = f.to_vec();
    let mut cur = f.to_vec();
    // remaining weight Σ_{j>m} W_j = E[(X - m)^+]
    let mut remaining: f64 = upper[1..].iter().sum();
    for m in 1..=m_max {
        let qf = chain.apply_generator(&cur);
        let w = upper[m] / upper[0];
        for i in 0..cur.len() {
            let step = qf[i] / big_lambda;
            cur[i] += step;
            out[i] += w * step;
        }
        remaining -= upper[m];
        if remaining / upper[0] <= 1e-13 && w <= 1e-13 {
            break;
        }
    }
    Ok(out)
}

/// Negated least-squares slope of `ln(values)` against `times`.
pub fn decay_rate_fit(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::LengthMismatch { expected: times.len(), got: values.len() });
    }
    if times.len() < 3 {
        return Err(Error::domain("decay fit needs at least three samples"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::domain("times must be finite and strictly increasing"));
    }
    if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::domain("values must be finite and positive"));
    }
    let n = times.len() as f64;
    let tm = times.iter().sum::<f64>() / n;
    let ys: Vec<f64> = values.iter().map(|v| libm::log(*v)).collect();
    let ym = ys.iter().sum::<f64>() / n;
    let sxy: f64 = times.iter().zip(&ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let sxx: f64 = times.iter().map(|t| (t - tm) * (t - tm)).sum();
    Ok(-sxy / sxx)
}

/// One sample of the semigroup decay of a function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySample {
    pub t: f64,
    pub variance: f64,
    /// `Ent(P_t f)` when `f >= 0`.
    pub entropy: Option<f64>,
    /// `Var(f) exp(-2 λ_1 t)`.
    pub bound: f64,
}

/// `Var(P_t f)` and `Ent(P_t f)` at the given times, next to the spectral bound.
pub fn decay_profile(chain: &FiniteChain, f: &[f64], times: &[f64]) -> Result<Vec<DecaySample>> {
    check_len(chain, f)?;
    let gap = spectral_gap_exact(chain)?;
    let v0 = variance(chain, f)?;
    let nonneg = f.iter().all(|x| *x >= 0.0);
    times
        .iter()
        .map(|&t| {
            let g = evolve(chain, f, t)?;
            let entropy = if nonneg { Some(entropy(chain, &g)?) } else { None };
            Ok(DecaySample { t, variance: variance(chain, &g)?, entropy, bound: v0 * libm::exp(-2.0 * gap * t) })
        })
        .collect()
}

/// `λ_1` on a truncation ladder with an extrapolated limit estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Ladder {
    pub sizes: Vec<usize>,
    pub gaps: Vec<f64>,
    /// Aitken extrapolation of the last three rungs (falls back to the last rung).
    pub extrapolated: f64,
    /// `|λ_1(N_last) - λ_1(N_prev)|`, the reported ladder tolerance.
    pub spread: f64,
}

impl Ladder {
    pub fn last(&self) -> f64 {
        *self.gaps.last().expect("ladder is non-empty")
    }
}

/// Truncation ladder at the given strictly increasing sizes.
pub fn gap_ladder(spec: &ChainSpec, sizes: &[usize]) -> Result<Ladder> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("ladder sizes must be non-empty and strictly increasing"));
    }
    let mut gaps = Vec::with_capacity(sizes.len());
    for &n in sizes {
        gaps.push(spectral_gap_exact(&truncate(spec, n)?)?);
    }
    let k = gaps.len();
    let last = gaps[k - 1];
    let spread = if k >= 2 { (last - gaps[k - 2]).abs() } else { 0.0 };
    let extrapolated = if k >= 3 {
        let (x1, x2, x3) = (gaps[k - 3], gaps[k - 2], last);
        let d1 = x2 - x1;
        let d2 = x3 - x2;
        let denom = d2 - d1;
        let r = if d1 != 0.0 { d2 / d1 } else { 0.0 };
        if denom.abs() > 1e-14 * last.abs().max(1.0) && r > 0.0 && r < 1.0 {
            x3 - d2 * d2 / denom
        } else {
            x3
        }
    } else {
        last
    };
    Ok(Ladder { sizes: sizes.to_vec(), gaps, extrapolated, spread })
}

/// Ladder `N/4, N/2, N`.
pub fn doubling_ladder(spec: &ChainSpec, n: usize) -> Result<Ladder> {
    let sizes: Vec<usize> = [n / 4, n / 2, n].into_iter().filter(|&s| s >= 1).collect();
    let mut dedup = sizes.clone();
    dedup.dedup();
    gap_ladder(spec, &dedup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ChainSpec;

    fn chain(b: &[f64], a: &[f64]) -> FiniteChain {
        FiniteChain::new(b, a).unwrap()
    }

    fn three_state(b0: f64, b1: f64, a1: f64, a2: f64) -> f64 {
        0.5 * (a1 + a2 + b0 + b1 - ((a1 - a2 + b0 - b1).powi(2) + 4.0 * a1 * b1).sqrt())
    }

    #[test]
    fn closed_form_small_chains() {
        let c = chain(&[3.0], &[2.0]);
        let s = spectrum(&c, 2).unwrap();
        assert!(s.values[0].abs() < 1e-12);
        assert!((s.values[1] - 5.0).abs() < 1e-12);
        assert!((spectral_gap_exact(&chain(&[1.0, 1.0], &[1.0, 1.0])).unwrap() - 1.0).abs() < 1e-12);
        // λ² - 10λ + 18 = 0 for b = (1, 2), a = (3, 4)
        let c = chain(&[1.0, 2.0], &[3.0, 4.0]);
        let want = (10.0 - 28f64.sqrt()) / 2.0;
        assert!((spectral_gap_exact(&c).unwrap() - want).abs() < 1e-12);
        assert!((three_state(1.0, 2.0, 3.0, 4.0) - want).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_requests() {
        let c = chain(&[1.0], &[1.0]);
        assert!(spectrum(&c, 3).is_err());
    }

    #[test]
    fn functionals() {
        let c = chain(&[1.0], &[2.0]);
        assert!((dirichlet(&c, &[0.0, 1.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(dirichlet(&c, &[4.0, 4.0]).unwrap(), 0.0);
        assert!(dirichlet(&c, &[1.0]).is_err());

        let sym = chain(&[1.0], &[1.0]);
        assert!((variance(&sym, &[0.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(variance(&sym, &[3.0, 3.0]).unwrap(), 0.0);
        assert_eq!(entropy(&sym, &[3.0, 3.0]).unwrap(), 0.0);
        let e = core::f64::consts::E;
        let want = e / 2.0 - (1.0 + e) / 2.0 * ((1.0 + e) / 2.0).ln();
        assert!((entropy(&sym, &[1.0, e]).unwrap() - want).abs() < 1e-15);
        assert!(entropy(&sym, &[-1.0, 1.0]).is_err());
        assert_eq!(entropy(&sym, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn two_state_semigroup_is_one_mode() {
        let c = chain(&[3.0], &[2.0]);
        let f = [0.3, -1.7];
        let v0 = variance(&c, &f).unwrap();
        assert_eq!(evolve(&c, &f, 0.0).unwrap(), f.to_vec());
        for t in [0.01, 0.1, 0.5, 1.0] {
            let v = variance(&c, &evolve(&c, &f, t).unwrap()).unwrap();
            assert!((v - v0 * (-10.0 * t).exp()).abs() < 1e-10, "t={t}");
        }
        assert!(evolve(&c, &f, -1.0).is_err());
    }

    #[test]
    fn constants_preserved_exactly() {
        let c = chain(&[1.0, 2.5, 0.3], &[0.7, 4.0, 1.1]);
        let f = [2.5; 4];
        assert_eq!(evolve(&c, &f, 3.7).unwrap(), f.to_vec());
    }

    #[test]
    fn decay_fit_examples() {
        let t = [0.0f64, 1.0, 2.0];
        let v: Vec<f64> = t.iter().map(|t| (-2.0 * t).exp()).collect();
        assert!((decay_rate_fit(&t, &v).unwrap() - 2.0).abs() < 1e-14);
        let t = [0.0f64, 2.0, 4.0];
        let v: Vec<f64> = t.iter().map(|t| 5.0 * (-0.5 * t).exp()).collect();
        assert!((decay_rate_fit(&t, &v).unwrap() - 0.5).abs() < 1e-14);
        assert!(decay_rate_fit(&[0.0, 1.0], &[1.0, 1.0]).is_err());
        assert!(decay_rate_fit(&[0.0, 1.0, 1.0], &[1.0, 1.0, 1.0]).is_err());
        assert!(decay_rate_fit(&[0.0, 1.0, 2.0], &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn eigenpair_residual_small() {
        let c = chain(&[1.0, 2.0, 0.5, 3.0], &[2.0, 1.0, 4.0, 0.7]);
        let ep = eigenpair(&c, 1).unwrap();
        assert!(ep.residual < 1e-10, "{}", ep.residual);
        assert!(mean(&c, &ep.g).unwrap().abs() < 1e-10);
        let rq = dirichlet(&c, &ep.g).unwrap() / variance(&c, &ep.g).unwrap();
        assert!((rq - ep.lambda).abs() < 1e-10);
    }

    #[test]
    fn table_rows_converge() {
        for (b, a, want) in [("i+1", "2*i", 1.0), ("i+1", "2*i+3", 2.0), ("i+1", "2*i+4+sqrt(2)", 3.0)] {
            let spec = ChainSpec::from_exprs(b, a).unwrap();
            let gap = spectral_gap_exact(&truncate(&spec, 2000).unwrap()).unwrap();
            assert!((gap - want).abs() < 1e-2, "{b},{a}: {gap}");
        }
    }
}
