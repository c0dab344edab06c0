//! The five subcommands. Each returns a [`Report`]; rendering lives in `main`.

use ergogap_core::cheeger::{
    self, AlphaKernel, CutValue, Functional, SearchOptions, SymmetricKernel, EXHAUSTIVE_CAP,
};
use ergogap_core::chain::truncate;
use ergogap_core::classify::classify_chain;
use ergogap_core::dualgap::{approx_sequence, explicit_bounds, GapBracket};
use ergogap_core::exact::{decay_profile, decay_rate_fit, eigenpair, gap_ladder, spectral_gap_exact, Ladder};
use ergogap_core::geometry::{
    all_bounds, dominance_audit, standard_grid, xi1_from_test, xi1_representative, ContinuousTestFunction,
    Formula, GeometrySpec,
};
use ergogap_core::{ChainSpec, FiniteChain, StateBound};

use crate::input::{self, KernelSource};
use crate::table::{Cell, Table};
use crate::{CliError, Config, FunctionChoice};

pub struct Report {
    pub command: &'static str,
    pub table: Table,
    /// Summary lines shown under the table.
    pub notes: Vec<(String, Cell)>,
    /// Set when a self-check failed; the report is still printed.
    pub invariant: Option<String>,
}

impl Report {
    fn new(command: &'static str, table: Table) -> Self {
        Report { command, table, notes: Vec::new(), invariant: None }
    }

    fn note(&mut self, key: &str, value: impl Into<Cell>) {
        self.notes.push((key.to_string(), value.into()));
    }

    fn violate(&mut self, msg: String) {
        self.invariant.get_or_insert(msg);
    }
}

const GAP_ITERATIONS: usize = 8;
const DEFAULT_HORIZON: usize = 100_000;
const DEFAULT_LADDER: [usize; 4] = [250, 500, 1000, 2000];
const DEFAULT_TRUNCATION: usize = 20;

fn require_input(cfg: &Config) -> Result<String, CliError> {
    let path = cfg.input.as_ref().ok_or_else(|| CliError::Input("--input is required".into()))?;
    input::read(path)
}

/// A finite chain from a spec: itself when finite, else its truncation.
fn finite_chain(spec: &ChainSpec, cfg: &Config) -> Result<FiniteChain, CliError> {
    let n = match spec.bound() {
        StateBound::Finite(n) => n,
        StateBound::Infinite => cfg.horizon.unwrap_or(DEFAULT_TRUNCATION),
    };
    Ok(truncate(spec, n)?)
}

/// Maps `f` over `items` on at most `threads` scoped threads, preserving order.
pub fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(f).collect();
    }
    let f = &f;
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                s.spawn(move || {
                    items.iter().enumerate().skip(t).step_by(threads).map(|(i, x)| (i, f(x))).collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every slot filled")).collect()
}

pub fn gap(cfg: &Config) -> Result<Report, CliError> {
    let spec = input::parse_chain(&require_input(cfg)?)?;
    let horizon = cfg.horizon.unwrap_or(DEFAULT_HORIZON);
    let explicit = explicit_bounds(&spec, horizon)?;
    let approx = approx_sequence(&spec, GAP_ITERATIONS, horizon)?;

    let sizes: Vec<usize> = match (&cfg.ladder, spec.bound()) {
        (Some(l), _) => l.clone(),
        (None, StateBound::Finite(n)) => vec![n],
        (None, StateBound::Infinite) => DEFAULT_LADDER.to_vec(),
    };
    let ladder = gap_ladder(&spec, &sizes)?;

    let mut t = Table::new(&["stage", "n", "lower", "upper", "lower_source", "upper_source", "tolerance"]);
    let bracket_row = |stage: &str, n: usize, b: &GapBracket| {
        vec![
            Cell::from(stage),
            Cell::from(n),
            Cell::from(b.lower),
            Cell::from(b.upper),
            Cell::from(b.lower_source.to_string()),
            Cell::from(b.upper_source.to_string()),
            Cell::Empty,
        ]
    };
    t.push(bracket_row("explicit", 0, &explicit));
    for (k, b) in approx.brackets.iter().enumerate() {
        t.push(bracket_row("iteration", k + 1, b));
    }
    push_ladder(&mut t, &ladder, spec.is_finite());

    let mut r = Report::new("gap", t);
    r.note("delta_lower", approx.delta.lo);
    r.note("delta_upper", approx.delta.hi);
    r.note("seed_lower", approx.seed_lower.value);
    r.note("tail_certificate", approx.seed_lower.tail.as_str());
    r.note("evaluation_horizon", explicit.horizon);
    r.note("oracle", ladder.last());
    if !spec.is_finite() {
        r.note("oracle_extrapolated", ladder.extrapolated);
        r.note("oracle_spread", ladder.spread);
    }

    // the certified brackets must nest and, on a finite chain, hold the exact gap
    for w in approx.brackets.windows(2) {
        if w[1].lower < w[0].lower || w[1].upper > w[0].upper {
            r.violate(format!("brackets do not nest: {:?} then {:?}", w[0], w[1]));
        }
    }
    if spec.is_finite() {
        let exact = ladder.last();
        let tol = 1e-9 * exact.abs().max(1.0);
        for b in std::iter::once(&explicit).chain(&approx.brackets) {
            if !b.contains(exact, tol) {
                r.violate(format!("bracket [{}, {}] misses the exact gap {exact}", b.lower, b.upper));
            }
        }
    }
    Ok(r)
}

fn push_ladder(t: &mut Table, ladder: &Ladder, finite: bool) {
    for (k, (&n, &g)) in ladder.sizes.iter().zip(&ladder.gaps).enumerate() {
        let tol = if k == 0 || finite { Cell::Empty } else { Cell::from((g - ladder.gaps[k - 1]).abs()) };
        t.push(vec![
            Cell::from("oracle"),
            Cell::from(n),
            Cell::from(g),
            Cell::from(g),
            Cell::from("truncation"),
            Cell::from("truncation"),
            tol,
        ]);
    }
}

struct GeometryRow {
    spec: GeometrySpec,
    values: Vec<Option<f64>>,
    xi_representative: Option<f64>,
    xi_family: Option<f64>,
    xi_bracket: Option<(f64, f64)>,
    best: Option<(String, f64)>,
}

fn geometry_row(spec: &GeometrySpec) -> Result<GeometryRow, CliError> {
    let report = all_bounds(spec, true)?;
    let values: Vec<Option<f64>> = Formula::all().map(|f| report.value(f)).collect();
    let usable = spec.dim > 1.0 && spec.cosine_admissible();
    let xi_representative = if usable { xi1_representative(spec).ok().map(|x| x.value) } else { None };
    let family =
        if spec.curvature > 0.0 { ContinuousTestFunction::SinGamma } else { ContinuousTestFunction::CoshBeta };
    let xi_family = if usable { xi1_from_test(spec, &family).ok().map(|x| x.value) } else { None };
    let xi_bracket = report.xi_bracket.map(|e| (e.lo, e.hi));

    let mut candidates: Vec<(String, f64)> =
        report.best.map(|(f, v)| (f.column().to_string(), v)).into_iter().collect();
    candidates.extend(xi_representative.map(|v| ("xi_representative".to_string(), v)));
    candidates.extend(xi_family.map(|v| (format!("xi_{}", family.name().replace('-', "_")), v)));
    candidates.extend(xi_bracket.map(|(lo, _)| ("xi_delta_lower".to_string(), lo)));
    let best = candidates.into_iter().fold(None, |acc: Option<(String, f64)>, c| match acc {
        Some(ref a) if a.1 >= c.1 => acc,
        _ => Some(c),
    });
    Ok(GeometryRow { spec: *spec, values, xi_representative, xi_family, xi_bracket, best })
}

pub fn geometry(cfg: &Config) -> Result<Report, CliError> {
    let points = match (&cfg.input, &cfg.grid) {
        (Some(_), Some(_)) => return Err(CliError::Input("give either --input or a grid, not both".into())),
        (Some(p), None) => input::parse_geometry(&input::read(p)?)?,
        (None, Some([dims, diams, curvs])) => {
            let mut pts = Vec::with_capacity(dims.len() * diams.len() * curvs.len());
            for &d in dims {
                for &dd in diams {
                    for &k in curvs {
                        pts.push(GeometrySpec::new(d, dd, k)?);
                    }
                }
            }
            pts
        }
        (None, None) => standard_grid(),
    };
    let rows = par_map(&points, cfg.threads, geometry_row).into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut columns = vec!["dimension", "diameter", "curvature"];
    columns.extend(Formula::all().map(Formula::column));
    columns.extend([
        "xi_representative",
        "xi_test_family",
        "xi_delta_lower",
        "xi_delta_upper",
        "best_lower_bound",
        "best_source",
        "applicable",
    ]);
    let mut t = Table::new(&columns);
    for row in &rows {
        let mut cells = vec![Cell::from(row.spec.dim), Cell::from(row.spec.diameter), Cell::from(row.spec.curvature)];
        cells.extend(row.values.iter().map(|v| Cell::from(*v)));
        cells.push(Cell::from(row.xi_representative));
        cells.push(Cell::from(row.xi_family));
        cells.push(Cell::from(row.xi_bracket.map(|b| b.0)));
        cells.push(Cell::from(row.xi_bracket.map(|b| b.1)));
        cells.push(Cell::from(row.best.as_ref().map(|b| b.1)));
        cells.push(row.best.as_ref().map_or(Cell::Empty, |b| Cell::from(b.0.clone())));
        let applicable: Vec<&str> =
            Formula::all().zip(&row.values).filter(|(_, v)| v.is_some()).map(|(f, _)| f.column()).collect();
        cells.push(Cell::from(applicable.join("|")));
        t.push(cells);
    }

    let mut r = Report::new("geometry", t);
    if cfg.audit {
        let audit = dominance_audit(&points);
        r.note("audit_points", audit.points);
        r.note("audit_comparisons", audit.comparisons);
        r.note("audit_violations", audit.violations.len());
        if let Some(v) = audit.violations.first() {
            r.violate(format!(
                "{} = {} falls below {} = {} at (d={}, D={}, K={})",
                v.dominant.column(),
                v.dominant_value,
                v.dominated.column(),
                v.dominated_value,
                v.spec.dim,
                v.spec.diameter,
                v.spec.curvature
            ));
        }
    }
    Ok(r)
}

pub fn classify(cfg: &Config) -> Result<Report, CliError> {
    let spec = input::parse_chain(&require_input(cfg)?)?;
    let report = classify_chain(&spec, cfg.q, cfg.horizon.unwrap_or(DEFAULT_HORIZON))?;
    let mut t = Table::new(&["property", "verdict", "quantity", "method", "horizon"]);
    for row in &report.rows {
        for p in row.criterion.properties() {
            t.push(vec![
                Cell::from(*p),
                Cell::from(row.verdict.as_str()),
                Cell::from(row.quantity),
                Cell::from(row.method.as_str()),
                Cell::from(row.horizon),
            ]);
        }
    }
    let mut r = Report::new("classify", t);
    r.note("nash_q", report.q_param);
    if let Some(d) = report.diagnostics.first() {
        r.violate(format!("contradictory verdicts: {d}"));
    }
    Ok(r)
}

/// Prefix bits of the exhaustive split. Fixed, so that tie-breaking between
/// equal-valued subsets (and hence the last digits) never depends on the thread count.
const SPLIT_BITS: usize = 4;

/// Exhaustive search split into prefix parts across threads, heuristic past the cap.
fn search(k: &AlphaKernel, f: Functional, cfg: &Config) -> Result<CutValue, CliError> {
    let opts = SearchOptions { seed: cfg.seed, ..SearchOptions::default() };
    let m = k.size();
    if m > opts.cap || m < 12 {
        return Ok(cheeger::constant(k, f, &opts)?);
    }
    let bits = SPLIT_BITS;
    let prefixes: Vec<u64> = (0..1u64 << bits).collect();
    let parts = par_map(&prefixes, cfg.threads, |&p| cheeger::exhaustive_part(k, f, bits, p));
    let mut best: Option<CutValue> = None;
    for part in parts {
        let part = part?;
        best = Some(match best {
            Some(b) => b.merge(part),
            None => part,
        });
    }
    Ok(best.expect("at least one part"))
}

const ALPHAS: [f64; 3] = [0.0, 0.5, 1.0];
const LEVELS: [f64; 3] = [0.1, 0.25, 0.5];
const SHIFTS: [f64; 3] = [0.0, 1.0, 10.0];

pub fn cheeger(cfg: &Config) -> Result<Report, CliError> {
    let (kernel, chain): (SymmetricKernel, Option<FiniteChain>) =
        match input::parse_kernel_or_chain(&require_input(cfg)?)? {
            KernelSource::Kernel(k) => (k, None),
            KernelSource::Chain(spec) => {
                let c = finite_chain(&spec, cfg)?;
                (cheeger::kernel_from_chain(&c), Some(c))
            }
        };
    let nash = cheeger::nash_exponent(cfg.q)?;
    let mut families: Vec<(&str, Option<f64>, Functional)> = vec![
        ("poincare", None, Functional::Poincare),
        ("nash", Some(cfg.q), Functional::Nash { exponent: nash }),
    ];
    families.extend(LEVELS.iter().map(|&l| ("log_sobolev_level", Some(l), Functional::LogSobolevLevel { level: l })));
    families.extend(SHIFTS.iter().map(|&d| ("log_sobolev_shift", Some(d), Functional::LogSobolevShift { delta: d })));

    let marker = |c: &CutValue| if c.exact { "exhaustive" } else { "heuristic" };
    let mut t = Table::new(&["alpha", "constant", "parameter", "value", "search"]);
    for alpha in ALPHAS {
        let k = AlphaKernel::with_default_r(&kernel, alpha)?;
        for &(name, param, f) in &families {
            let c = search(&k, f, cfg)?;
            t.push(vec![Cell::from(alpha), Cell::from(name), Cell::from(param), Cell::from(c.value), Cell::from(marker(&c))]);
        }
    }

    let k0 = search(&AlphaKernel::plain(&kernel), Functional::Poincare, cfg)?;
    let max_rate = kernel.max_rate();
    let bound = k0.value * k0.value / (2.0 * max_rate);
    t.push(vec![Cell::from(0.0), Cell::from("lawler_sokal_bound"), Cell::Empty, Cell::from(bound), Cell::from(marker(&k0))]);

    let mut r = Report::new("cheeger", t);
    r.note("states", kernel.size());
    r.note("max_rate", max_rate);
    r.note("exhaustive_cap", EXHAUSTIVE_CAP);
    if let Some(c) = chain {
        let gap = spectral_gap_exact(&c)?;
        r.note("spectral_gap", gap);
        // a heuristic k overestimates the inf, so only the exhaustive bound is binding
        if k0.exact && bound > gap * (1.0 + 1e-9) {
            r.violate(format!("bound {bound} exceeds the spectral gap {gap}"));
        }
    }
    Ok(r)
}

const SAMPLES: usize = 21;

pub fn semigroup(cfg: &Config) -> Result<Report, CliError> {
    let spec = input::parse_chain(&require_input(cfg)?)?;
    let chain = finite_chain(&spec, cfg)?;
    let gap = spectral_gap_exact(&chain)?;
    let f: Vec<f64> = match cfg.function {
        FunctionChoice::Identity => (0..chain.size()).map(|i| i as f64).collect(),
        FunctionChoice::Eigenfunction => eigenpair(&chain, 1)?.g,
        FunctionChoice::Constant => vec![1.0; chain.size()],
    };
    let horizon = 2.0 / gap;
    let times: Vec<f64> = (0..SAMPLES).map(|k| horizon * k as f64 / (SAMPLES - 1) as f64).collect();
    let samples = decay_profile(&chain, &f, &times)?;

    let mut t = Table::new(&["t", "variance", "entropy", "variance_bound"]);
    for s in &samples {
        t.push(vec![Cell::from(s.t), Cell::from(s.variance), Cell::from(s.entropy), Cell::from(s.bound)]);
    }
    let mut r = Report::new("semigroup", t);
    r.note("spectral_gap", gap);
    r.note("two_gap", 2.0 * gap);

    let variances: Vec<f64> = samples.iter().map(|s| s.variance).collect();
    let v0 = variances[0];
    if v0 <= 1e-300 {
        r.note("fitted_rate", "n/a (f is constant)");
        return Ok(r);
    }
    // drop samples that have decayed into rounding noise
    let keep: Vec<usize> = (0..samples.len()).filter(|&k| variances[k] > 1e-13 * v0).collect();
    let ts: Vec<f64> = keep.iter().map(|&k| times[k]).collect();
    let vs: Vec<f64> = keep.iter().map(|&k| variances[k]).collect();
    let rate = decay_rate_fit(&ts, &vs)?;
    r.note("fitted_rate", rate);
    if rate < 2.0 * gap - 1e-6 {
        r.violate(format!("fitted rate {rate} is below twice the gap {}", 2.0 * gap));
    }
    Ok(r)
}
