//! Acceptance suite: one pass/fail line per criterion.
//!
//! Failures listed in `DOCUMENTED` stay visible as FAIL lines but do not
//! fail the run; any other failure exits non-zero.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use ergogap_core::chain::truncate;
use ergogap_core::cheeger::{exhaustive, heuristic, kernel_from_chain, lawler_sokal_bound, AlphaKernel, Functional, SearchOptions};
use ergogap_core::classify::{classify_chain, Verdict};
use ergogap_core::dualgap::{approx_sequence, dual_ascent, explicit_bounds};
use ergogap_core::exact::{decay_profile, decay_rate_fit, eigenpair, gap_ladder, spectral_gap_exact};
use ergogap_core::geometry::{
    delta_geometric, dominance_audit, standard_grid, xi1_from_test, xi1_representative, ContinuousTestFunction, Formula,
    GeometrySpec,
};
use ergogap_core::{ChainSpec, FiniteChain};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_chain(rng: &mut StdRng, states: usize, lo: f64, hi: f64) -> FiniteChain {
    let b: Vec<f64> = (0..states - 1).map(|_| rng.random_range(lo..hi)).collect();
    let a: Vec<f64> = (0..states - 1).map(|_| rng.random_range(lo..hi)).collect();
    FiniteChain::new(&b, &a).unwrap()
}

/// Oracle λ_1 for a corpus entry and the tolerance it is trusted to.
fn oracle(spec: &ChainSpec) -> (f64, f64) {
    if spec.is_finite() {
        let n = match spec.bound() {
            ergogap_core::StateBound::Finite(n) => n,
            ergogap_core::StateBound::Infinite => unreachable!(),
        };
        (spectral_gap_exact(&truncate(spec, n).unwrap()).unwrap(), 1e-12)
    } else {
        let l = gap_ladder(spec, &[1000, 2000, 4000]).unwrap();
        (l.last(), 1e-3)
    }
}

/// Geometric, polynomial, factorial families and random finite chains (50 entries).
fn corpus() -> Vec<(String, ChainSpec)> {
    let mut out = Vec::new();
    for (b, a) in [("1", "2"), ("1", "3"), ("0.5", "2"), ("2", "3"), ("1", "1.5"), ("3", "10"), ("0.2", "1"), ("1", "4"), ("5", "6"), ("1", "9")] {
        out.push((format!("geometric b={b} a={a}"), ChainSpec::from_exprs(b, a).unwrap()));
    }
    for (b, a) in [
        ("i+0.5", "2*i"),
        ("i+1", "2*i"),
        ("i+2", "2*i"),
        ("i+1", "2*i+3"),
        ("i+1", "2*i+4+sqrt(2)"),
        ("1", "i"),
        ("2", "i"),
        ("i+1", "3*i"),
        ("0.5*i+1", "i+1"),
        ("i+1", "4*i+1"),
    ] {
        out.push((format!("polynomial b={b} a={a}"), ChainSpec::from_exprs(b, a).unwrap()));
    }
    for (b, a) in [("1", "i^2"), ("2", "i^2"), ("1", "i^1.5"), ("i+1", "i^2+i"), ("1", "i^3"), ("3", "i^2"), ("1", "2*i^2"), ("0.5", "i^2"), ("i", "i^3"), ("1", "i^2+1")]
    {
        let b = if b == "i" { "i+1" } else { b };
        out.push((format!("factorial b={b} a={a}"), ChainSpec::from_exprs(b, a).unwrap()));
    }
    let mut rng = StdRng::seed_from_u64(20_250_301);
    for k in 0..20 {
        let states = rng.random_range(2..=30);
        let b: Vec<f64> = (0..states - 1).map(|_| rng.random_range(0.1..10.0)).collect();
        let a: Vec<f64> = (0..states - 1).map(|_| rng.random_range(0.1..10.0)).collect();
        out.push((format!("random finite #{k} ({states} states)"), ChainSpec::from_arrays(b, a).unwrap()));
    }
    out
}

const HORIZON: usize = 100_000;

fn closed_form_spectra() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (b0, a1) = (rng.random_range(0.1..10.0), rng.random_range(0.1..10.0));
        let two = spectral_gap_exact(&FiniteChain::new(&[b0], &[a1]).unwrap()).unwrap();
        worst = worst.max((two - (a1 + b0)).abs());
        let (b0, b1, a1, a2) = (
            rng.random_range(0.1..10.0),
            rng.random_range(0.1..10.0),
            rng.random_range(0.1..10.0),
            rng.random_range(0.1..10.0),
        );
        let three = spectral_gap_exact(&FiniteChain::new(&[b0, b1], &[a1, a2]).unwrap()).unwrap();
        let formula = 0.5 * (a1 + a2 + b0 + b1 - ((a1 - a2 + b0 - b1).powi(2) + 4.0 * a1 * b1).sqrt());
        worst = worst.max((three - formula).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-12 && secs < 1.0, format!("max deviation {worst:.2e} over 2000 draws, {secs:.3} s"))
}

fn table_reproduction() -> Outcome {
    let start = Instant::now();
    let rows = [("i+0.5", "2*i", 1.0), ("i+1", "2*i", 1.0), ("i+2", "2*i", 1.0), ("i+1", "2*i+3", 2.0), ("i+1", "2*i+4+sqrt(2)", 3.0)];
    let mut gaps = Vec::new();
    let mut worst: f64 = 0.0;
    for (b, a, want) in rows {
        let g = spectral_gap_exact(&truncate(&ChainSpec::from_exprs(b, a).unwrap(), 4000).unwrap()).unwrap();
        worst = worst.max((g - want).abs());
        gaps.push(g);
    }
    let spread = gaps[..3].iter().cloned().fold(f64::NEG_INFINITY, f64::max) - gaps[..3].iter().cloned().fold(f64::INFINITY, f64::min);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-2 && spread <= 1e-3 && secs < 30.0,
        format!("gaps at N=4000 {gaps:.6?}, max deviation {worst:.2e}, c-spread {spread:.2e}, {secs:.2} s"),
    )
}

fn explicit_bracket(corpus: &[(String, ChainSpec)]) -> Outcome {
    let mut violations = Vec::new();
    let mut errors = Vec::new();
    for (name, spec) in corpus {
        let (gap, tol) = oracle(spec);
        match explicit_bounds(spec, HORIZON) {
            Ok(b) if b.lower <= gap + tol && gap <= b.upper + tol => {}
            Ok(b) => violations.push(format!("{name}: [{}, {}] vs {gap}", b.lower, b.upper)),
            Err(e) => errors.push(format!("{name}: {e}")),
        }
    }
    outcome(
        violations.is_empty() && errors.is_empty(),
        format!("{} chains, {} violations {:?}, {} errors {:?}", corpus.len(), violations.len(), violations, errors.len(), errors),
    )
}

fn ascent_sharpness() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let mut worst_lo: f64 = 0.0;
    let mut worst_hi: f64 = 0.0;
    let mut order_violations = 0;
    for _ in 0..200 {
        let states = rng.random_range(2..=6);
        let chain = random_chain(&mut rng, states, 0.1, 10.0);
        let gap = spectral_gap_exact(&chain).unwrap();
        let b = dual_ascent(&chain, 20_000, 1e-10).unwrap();
        if b.lower > gap * (1.0 + 1e-12) || b.upper < gap * (1.0 - 1e-12) {
            order_violations += 1;
        }
        worst_lo = worst_lo.max((gap - b.lower) / gap);
        worst_hi = worst_hi.max((b.upper - gap) / gap);
    }
    outcome(
        worst_lo <= 1e-6 && worst_hi <= 1e-6 && order_violations == 0,
        format!("200 chains: lower gap {worst_lo:.2e}, upper gap {worst_hi:.2e} (relative), {order_violations} ordering violations"),
    )
}

fn approximation_procedure(corpus: &[(String, ChainSpec)]) -> Outcome {
    let mut problems = Vec::new();
    for (name, spec) in corpus {
        let (gap, tol) = oracle(spec);
        let a = match approx_sequence(spec, 8, HORIZON) {
            Ok(a) => a,
            Err(e) => {
                problems.push(format!("{name}: {e}"));
                continue;
            }
        };
        let widths: Vec<f64> = a.brackets.iter().map(|b| b.width()).collect();
        if widths.windows(2).any(|w| w[1] > w[0]) {
            problems.push(format!("{name}: widths increase {widths:?}"));
        }
        let explicit_lower = 1.0 / (4.0 * a.delta.hi);
        if a.seed_lower.value < explicit_lower * (1.0 - 1e-9) {
            problems.push(format!("{name}: seed bound {} below (4δ)^-1 = {explicit_lower}", a.seed_lower.value));
        }
        if a.brackets.iter().any(|b| !b.contains(gap, tol)) {
            problems.push(format!("{name}: bracket misses oracle {gap}"));
        }
    }
    outcome(problems.is_empty(), format!("{} chains, {} problems {:?}", corpus.len(), problems.len(), problems))
}

fn geometry_sharpness() -> Outcome {
    let mut worst_sphere: f64 = 0.0;
    for d in 2..=9 {
        let d = d as f64;
        let s = GeometrySpec::new(d, PI, d - 1.0).unwrap();
        for f in [Formula::RicciDimension, Formula::CosinePower] {
            worst_sphere = worst_sphere.max((f.evaluate(&s).unwrap() - d).abs());
        }
    }
    let mut worst_circle: f64 = 0.0;
    for d in [1.5, 2.0, 3.0, 5.0, 8.0, 20.0] {
        let s = GeometrySpec::new(d, PI, 0.0).unwrap();
        for f in [Formula::Diameter, Formula::DiameterCurvature, Formula::DiameterHalfCurvature] {
            worst_circle = worst_circle.max((f.evaluate(&s).unwrap() - 1.0).abs());
        }
    }
    outcome(
        worst_sphere <= 1e-10 && worst_circle <= 1e-12,
        format!("sphere family deviation {worst_sphere:.2e}, circle family deviation {worst_circle:.2e}"),
    )
}

fn dominance() -> Outcome {
    let a = dominance_audit(&standard_grid());
    outcome(
        a.violations.is_empty(),
        format!("{} points, {} comparisons, {} violations {:?}", a.points, a.comparisons, a.violations.len(), a.violations),
    )
}

fn xi_bracket() -> Outcome {
    let mut failures = Vec::new();
    let (mut checked, mut skipped) = (0, 0);
    for s in standard_grid() {
        if !s.cosine_admissible() {
            skipped += 1;
            continue;
        }
        let delta = delta_geometric(&s).unwrap();
        let (lo, hi) = (1.0 / delta.hi, 4.0 / delta.lo);
        let mut tests = vec![("representative", xi1_representative(&s).unwrap())];
        if s.curvature <= 0.0 {
            tests.push(("beta-family", xi1_from_test(&s, &ContinuousTestFunction::CoshBeta).unwrap()));
        }
        for (name, x) in tests {
            checked += 1;
            let tol = (x.nominal - x.value) + 1e-12 * x.nominal;
            if x.nominal < lo - tol || x.nominal > hi + tol {
                failures.push(format!(
                    "(d={}, D={:.4}, K={}) {name}: {:.6} outside [{lo:.6}, {hi:.6}]",
                    s.dim, s.diameter, s.curvature, x.nominal
                ));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{checked} evaluations, {skipped} grid points outside the cosine domain, {} outside {:?}", failures.len(), failures),
    )
}

fn cheeger_certificate() -> Outcome {
    let mut rng = StdRng::seed_from_u64(9);
    let mut violations = 0;
    let mut min_ratio = f64::INFINITY;
    for _ in 0..500 {
        let states = rng.random_range(2..=12);
        let chain = random_chain(&mut rng, states, 0.1, 10.0);
        let gap = spectral_gap_exact(&chain).unwrap();
        let ls = lawler_sokal_bound(&kernel_from_chain(&chain)).unwrap();
        if gap < ls.bound - 1e-12 {
            violations += 1;
        }
        min_ratio = min_ratio.min(gap / ls.bound);
    }
    let mut disagreements = Vec::new();
    for seed in 0..40u64 {
        let states = rng.random_range(2..=14);
        let chain = random_chain(&mut rng, states, 0.1, 10.0);
        let k = AlphaKernel::plain(&kernel_from_chain(&chain));
        let e = exhaustive(&k, Functional::Poincare).unwrap();
        let h = heuristic(&k, Functional::Poincare, &SearchOptions { seed, ..SearchOptions::default() });
        if (h.value - e.value).abs() > 1e-12 * e.value {
            disagreements.push(format!("{states} states: exhaustive {} heuristic {}", e.value, h.value));
        }
    }
    outcome(
        violations == 0 && disagreements.is_empty(),
        format!(
            "500 chains: {violations} violations (min λ1/bound {min_ratio:.3}); 40 cut searches: {} heuristic/exhaustive disagreements {:?}",
            disagreements.len(),
            disagreements
        ),
    )
}

fn classifier_ladder() -> Outcome {
    use Verdict::{Fails as F, Holds as H};
    // property order: uniqueness, recurrence, ergodicity, exponential ergodicity,
    // L2-exponential convergence, discrete spectrum, log-Sobolev, strong ergodicity,
    // L1-exponential convergence, Nash(3)
    let table: [(&str, &str, [Verdict; 10]); 5] = [
        ("1", "2", [H, H, H, H, H, F, F, F, F, F]),
        ("1", "i^2", [H; 10]),
        ("1", "1", [H, H, F, F, F, F, F, F, F, F]),
        ("2", "1", [H, F, F, F, F, F, F, F, F, F]),
        ("2^i", "1", [F; 10]),
    ];
    // Nash => log-Sobolev, Nash => strong, log-Sobolev => exponential,
    // strong => exponential, exponential => ergodicity (indices into the list above)
    let implications = [(9, 6), (9, 7), (6, 3), (7, 3), (3, 2)];
    let mut mismatches = Vec::new();
    let mut contradictions = Vec::new();
    for (b, a, want) in table {
        let r = classify_chain(&ChainSpec::from_exprs(b, a).unwrap(), 3.0, HORIZON).unwrap();
        let got: Vec<Verdict> = r.properties().into_iter().map(|p| p.1).collect();
        for (k, (g, w)) in got.iter().zip(want).enumerate() {
            if *g != w {
                mismatches.push(format!("(b={b}, a={a}) {}: got {}, table {}", r.properties()[k].0, g.as_str(), w.as_str()));
            }
        }
        for (s, w) in implications {
            if got[s] == H && got[w] == F {
                contradictions.push(format!("(b={b}, a={a}) {s}=>{w}"));
            }
        }
        contradictions.extend(r.diagnostics.iter().filter(|d| d.contains("downgraded")).cloned());
    }
    outcome(
        mismatches.is_empty() && contradictions.is_empty(),
        format!("{} verdict mismatches {:?}, {} contradictions {:?}", mismatches.len(), mismatches, contradictions.len(), contradictions),
    )
}

fn semigroup_decay() -> Outcome {
    let mut rng = StdRng::seed_from_u64(11);
    let mut worst_below: f64 = 0.0;
    let mut worst_eigen: f64 = 0.0;
    for _ in 0..30 {
        let states = rng.random_range(2..=10);
        let chain = random_chain(&mut rng, states, 0.1, 10.0);
        let gap = spectral_gap_exact(&chain).unwrap();
        let horizon = 4.0 / (2.0 * gap);
        let times: Vec<f64> = (0..=20).map(|k| horizon * k as f64 / 20.0).collect();
        let f: Vec<f64> = (0..states).map(|_| rng.random_range(-1.0..1.0)).collect();
        let rate = fit(&chain, &f, &times);
        worst_below = worst_below.max(2.0 * gap - rate);
        let g = eigenpair(&chain, 1).unwrap().g;
        let rate = fit(&chain, &g, &times);
        worst_eigen = worst_eigen.max((rate - 2.0 * gap).abs());
    }
    // two-state chain b=3, a=2: λ_1 = 5
    let two = FiniteChain::new(&[3.0], &[2.0]).unwrap();
    let times: Vec<f64> = (0..=10).map(|k| 0.05 * k as f64).collect();
    let two_rate = fit(&two, &[0.0, 1.0], &times);
    outcome(
        worst_below <= 1e-6 && worst_eigen <= 1e-6 && (two_rate - 10.0).abs() <= 1e-6,
        format!("max shortfall below 2λ1 {worst_below:.2e}, eigenfunction deviation {worst_eigen:.2e}, two-state rate {two_rate:.9}"),
    )
}

fn fit(chain: &FiniteChain, f: &[f64], times: &[f64]) -> f64 {
    let samples = decay_profile(chain, f, times).unwrap();
    let v: Vec<f64> = samples.iter().map(|s| s.variance).collect();
    decay_rate_fit(times, &v).unwrap()
}

/// Criteria whose reference values are contradicted by a direct calculation.
const DOCUMENTED: &[(usize, &str)] = &[(
    10,
    "the reference table has Nash(3) holding for b=1, a=i^2, but the criterion quantity \
     mu[n,inf)^(1/2) * sum_(j<n) (j!)^2 grows like (n-1)!/n",
)];

fn main() -> ExitCode {
    let corpus = corpus();
    type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("closed-form spectra", Box::new(closed_form_spectra)),
        ("truncation table", Box::new(table_reproduction)),
        ("explicit delta bracket", Box::new(|| explicit_bracket(&corpus))),
        ("ascent sharpness", Box::new(ascent_sharpness)),
        ("approximation procedure", Box::new(|| approximation_procedure(&corpus))),
        ("geometry sharpness", Box::new(geometry_sharpness)),
        ("dominance audit", Box::new(dominance)),
        ("variational bracket", Box::new(xi_bracket)),
        ("cheeger certificate", Box::new(cheeger_certificate)),
        ("classifier ladder", Box::new(classifier_ladder)),
        ("semigroup decay", Box::new(semigroup_decay)),
    ];
    let (mut failed, mut unexpected) = (0, 0);
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let note = DOCUMENTED.iter().find(|d| d.0 == k + 1).map(|d| d.1);
        if !o.pass {
            failed += 1;
            if note.is_none() {
                unexpected += 1;
            }
        }
        println!("[{}] {:>2}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
        if let (false, Some(note)) = (o.pass, note) {
            println!("           documented discrepancy: {note}");
        }
    }
    println!("{} of {} criteria passed, {} unexpected failures", criteria.len() - failed, criteria.len(), unexpected);
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
