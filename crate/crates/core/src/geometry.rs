//! Lower bounds for the first nonzero eigenvalue of the Laplacian on a
//! compact Riemannian manifold with dimension `d`, diameter `D` and Ricci
//! curvature bounded below by `K`.
//!
//! Besides the closed-form estimates this evaluates the variational
//! lower bound `ξ(f) = inf_r 4 f(r) / (∫_0^r C^{-1}(s) ∫_s^D C(u) f(u) du ds)`
//! by quadrature, where `C(r) = cosh^{d-1}(γ r)` for `K <= 0` and
//! `cos^{d-1}(γ r)` for `K > 0`, with `γ = ½ √(|K|/(d-1))`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use crate::enclosure::Enclosure;
use crate::error::Error;
use crate::quad::adaptive_simpson;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometrySpec {
    pub dim: f64,
    pub diameter: f64,
    pub curvature: f64,
}

impl GeometrySpec {
    pub fn new(dim: f64, diameter: f64, curvature: f64) -> Result<Self> {
        if !(dim.is_finite() && dim >= 1.0) {
            return Err(Error::domain(format!("dimension must be >= 1, got {dim}")));
        }
        if !(diameter.is_finite() && diameter > 0.0) {
            return Err(Error::domain(format!("diameter must be positive, got {diameter}")));
        }
        if !curvature.is_finite() {
            return Err(Error::domain("curvature bound must be finite"));
        }
        Ok(GeometrySpec { dim, diameter, curvature })
    }

    /// `½ √(|K|/(d-1))`, the rate inside `C` (infinite for `d = 1`, `K != 0`).
    pub fn gamma(&self) -> f64 {
        if self.curvature == 0.0 {
            0.0
        } else {
            0.5 * libm::sqrt(self.curvature.abs() / (self.dim - 1.0))
        }
    }

    /// `D √(|K|(d-1)) / 2`.
    pub fn alpha(&self) -> f64 {
        self.diameter * libm::sqrt(self.curvature.abs() * (self.dim - 1.0)) / 2.0
    }

    /// `D √(|K| max(d-1, 2)) / 2`.
    pub fn alpha_prime(&self) -> f64 {
        self.diameter * libm::sqrt(self.curvature.abs() * (self.dim - 1.0).max(2.0)) / 2.0
    }

    /// For `K > 0` the cosine weight stays non-negative on `[0, D]`
    /// (equivalently `D <= π √((d-1)/K)`, the largest possible diameter).
    pub fn cosine_admissible(&self) -> bool {
        self.curvature <= 0.0 || self.gamma() * self.diameter <= FRAC_PI_2 * (1.0 + 1e-14)
    }
}

/// `C(r)`: `cosh^{d-1}(γ r)` for `K <= 0`, `cos^{d-1}(γ r)` for `K > 0`.
pub fn c_function(spec: &GeometrySpec, r: f64) -> Result<f64> {
    if spec.dim <= 1.0 {
        return Err(Error::domain("the weight C needs d > 1"));
    }
    if !(0.0..=spec.diameter * (1.0 + 1e-14)).contains(&r) {
        return Err(Error::domain(format!("r = {r} outside [0, {}]", spec.diameter)));
    }
    let x = spec.gamma() * r;
    if spec.curvature > 0.0 && x > FRAC_PI_2 * (1.0 + 1e-14) {
        return Err(Error::domain(format!("cosine argument {x} passes π/2")));
    }
    Ok(weight(spec, r))
}

/// `C(r)` without validation (clamped at the cosine root).
fn weight(spec: &GeometrySpec, r: f64) -> f64 {
    let x = spec.gamma() * r;
    let e = spec.dim - 1.0;
    if spec.curvature > 0.0 {
        libm::pow(libm::cos(x.min(FRAC_PI_2)).max(0.0), e)
    } else {
        libm::pow(libm::cosh(x), e)
    }
}

/// The closed-form estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formula {
    /// `d K / (d-1)`, `K >= 0`.
    RicciDimension,
    /// `d {∫_0^{π/2} cos^{d-1} / ∫_0^{D/2} cos^{d-1}}^{2/d}`, `K = d-1`.
    SphereIntegral,
    /// `π² / (2D²)`, `K >= 0`.
    HalfDiameter,
    /// `π² / D²`, `K >= 0`.
    Diameter,
    /// `1 / (D² (d-1) exp(1 + √(1 + 16α²)))`, `K <= 0`.
    AlphaExponential,
    /// `π²/D² + K`, `K <= 0`.
    DiameterCurvature,
    /// `π²/D² e^{-α}`, `d >= 5`, `K <= 0`.
    DiameterExpAlpha,
    /// `π²/(2D²) e^{-α'}`, `2 <= d <= 4`, `K <= 0`.
    HalfDiameterExpAlphaPrime,
    /// `dK/(d-1) {1 - cos^d(γD)}^{-1}`, `K > 0`.
    CosinePower,
    /// `π²/D² √(1 - 2D²K/π⁴) cosh^{1-d}(γD)`, `K <= 0`.
    HyperbolicCosine,
    /// `π²/D² + K/2`.
    DiameterHalfCurvature,
}

impl Formula {
    pub const CLASSICAL: [Formula; 8] = [
        Formula::RicciDimension,
        Formula::SphereIntegral,
        Formula::HalfDiameter,
        Formula::Diameter,
        Formula::AlphaExponential,
        Formula::DiameterCurvature,
        Formula::DiameterExpAlpha,
        Formula::HalfDiameterExpAlphaPrime,
    ];

    pub const IMPROVED: [Formula; 3] =
        [Formula::CosinePower, Formula::HyperbolicCosine, Formula::DiameterHalfCurvature];

    pub fn all() -> impl Iterator<Item = Formula> {
        Formula::CLASSICAL.into_iter().chain(Formula::IMPROVED)
    }

    /// Column name in tabular output.
    pub fn column(self) -> &'static str {
        match self {
            Formula::RicciDimension => "ricci_dimension",
            Formula::SphereIntegral => "sphere_integral_ratio",
            Formula::HalfDiameter => "half_pi_sq_over_diam_sq",
            Formula::Diameter => "pi_sq_over_diam_sq",
            Formula::AlphaExponential => "alpha_exponential",
            Formula::DiameterCurvature => "diam_plus_curvature",
            Formula::DiameterExpAlpha => "diam_exp_alpha",
            Formula::HalfDiameterExpAlphaPrime => "half_diam_exp_alpha_prime",
            Formula::CosinePower => "cosine_power",
            Formula::HyperbolicCosine => "hyperbolic_cosine",
            Formula::DiameterHalfCurvature => "diam_plus_half_curvature",
        }
    }

    /// The value, or `None` outside the formula's stated conditions.
    pub fn evaluate(self, s: &GeometrySpec) -> Option<f64> {
        let (d, dd, k) = (s.dim, s.diameter, s.curvature);
        let pd = PI * PI / (dd * dd);
        match self {
            Formula::RicciDimension => (k >= 0.0 && d > 1.0).then(|| d / (d - 1.0) * k),
            Formula::SphereIntegral => {
                let on_sphere = d > 1.0 && k > 0.0 && (k - (d - 1.0)).abs() <= 1e-12 * k;
                (on_sphere && dd <= PI * (1.0 + 1e-14)).then(|| {
                    let c = |t: f64| libm::pow(libm::cos(t), d - 1.0);
                    let full = adaptive_simpson(c, 0.0, FRAC_PI_2, 1e-14, 1e-14).value;
                    let part = adaptive_simpson(c, 0.0, (dd / 2.0).min(FRAC_PI_2), 1e-14, 1e-14).value;
                    d * libm::pow(full / part, 2.0 / d)
                })
            }
            Formula::HalfDiameter => (k >= 0.0).then(|| pd / 2.0),
            Formula::Diameter => (k >= 0.0).then_some(pd),
            Formula::AlphaExponential => (k <= 0.0 && d > 1.0).then(|| {
                let a = s.alpha();
                1.0 / (dd * dd * (d - 1.0) * libm::exp(1.0 + libm::sqrt(1.0 + 16.0 * a * a)))
            }),
            Formula::DiameterCurvature => (k <= 0.0).then_some(pd + k),
            Formula::DiameterExpAlpha => (k <= 0.0 && d >= 5.0).then(|| pd * libm::exp(-s.alpha())),
            Formula::HalfDiameterExpAlphaPrime => {
                (k <= 0.0 && (2.0..=4.0).contains(&d)).then(|| pd / 2.0 * libm::exp(-s.alpha_prime()))
            }
            Formula::CosinePower => (k > 0.0 && d > 1.0 && s.cosine_admissible()).then(|| {
                let c = libm::cos((s.gamma() * dd).min(FRAC_PI_2)).max(0.0);
                d * k / (d - 1.0) / (1.0 - libm::pow(c, d))
            }),
            Formula::HyperbolicCosine => (k <= 0.0 && d > 1.0).then(|| {
                pd * libm::sqrt(1.0 - 2.0 * dd * dd * k / (PI * PI * PI * PI)) * libm::pow(libm::cosh(s.gamma() * dd), 1.0 - d)
            }),
            Formula::DiameterHalfCurvature => Some(pd + k / 2.0),
        }
    }
}

/// Test functions for the variational bound.
#[derive(Debug, Clone, PartialEq)]
pub enum ContinuousTestFunction {
    /// `sin(γ r)`, for `K > 0`.
    SinGamma,
    /// `cosh^{1-d}(γ r) sin(β r)`, `β = π/(2D)`, for `K <= 0`.
    CoshBeta,
    /// `√(∫_0^r C^{-1})`.
    Representative,
    /// `f ≡ 1`.
    Constant,
    /// Piecewise-linear interpolation of `(r, f)` points covering `[0, D]`.
    Grid(Vec<(f64, f64)>),
}

impl ContinuousTestFunction {
    pub fn name(&self) -> &'static str {
        match self {
            ContinuousTestFunction::SinGamma => "sin-gamma",
            ContinuousTestFunction::CoshBeta => "cosh-beta",
            ContinuousTestFunction::Representative => "representative",
            ContinuousTestFunction::Constant => "constant",
            ContinuousTestFunction::Grid(_) => "grid",
        }
    }
}

/// A certified value of the variational bound for one test function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiValue {
    /// Nominal inf reduced by the quadrature error bound.
    pub value: f64,
    pub nominal: f64,
    /// Where the inf was found.
    pub argmin: f64,
    /// Accumulated quadrature error bound on the denominator at `argmin`.
    pub quad_error: f64,
}

const PANELS: usize = 1024;
const PANEL_ABS: f64 = 1e-15;
const PANEL_REL: f64 = 1e-13;

/// 8-point Gauss-Legendre on `[a, b]`, with the 4-point rule as an error estimate.
fn gauss<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    const X8: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
    const W8: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];
    const X4: [f64; 2] = [0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const W4: [f64; 2] = [0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    let s8: f64 = X8.iter().zip(W8).map(|(x, w)| w * (f(m - h * x) + f(m + h * x))).sum();
    let s4: f64 = X4.iter().zip(W4).map(|(x, w)| w * (f(m - h * x) + f(m + h * x))).sum();
    (h * s8, (h * (s8 - s4)).abs())
}

/// One panel: Gauss-Legendre when its error estimate meets the tolerance,
/// adaptive Simpson otherwise (near the singular ends of the weight).
fn panel_quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> (f64, f64) {
    let (v, e) = gauss(&f, a, b);
    if v.is_finite() && e <= PANEL_ABS.max(PANEL_REL * v.abs()) {
        return (v, e);
    }
    let q = adaptive_simpson(f, a, b, PANEL_ABS, PANEL_REL);
    (q.value, q.error)
}

/// Cumulative integrals on a uniform panel grid, for one test function.
struct Profile<'a> {
    spec: &'a GeometrySpec,
    f: &'a ContinuousTestFunction,
    h: f64,
    /// Last usable right end (the weight may vanish at `D`).
    top: f64,
    /// `Φ(r_k) = ∫_0^{r_k} C^{-1}` and its error.
    phi: Vec<(f64, f64)>,
    /// `G(r_k) = ∫_{r_k}^D C f`.
    g: Vec<(f64, f64)>,
    /// `J(r_k) = ∫_0^{r_k} Φ C f`.
    j: Vec<(f64, f64)>,
}

impl<'a> Profile<'a> {
    fn new(spec: &'a GeometrySpec, f: &'a ContinuousTestFunction) -> Result<Self> {
        if spec.dim <= 1.0 {
            return Err(Error::domain("the variational bound needs d > 1"));
        }
        if !spec.cosine_admissible() {
            return Err(Error::domain("cosine weight changes sign on [0, D]"));
        }
        if let ContinuousTestFunction::Grid(pts) = f {
            check_grid(pts, spec.diameter)?;
        }
        let dd = spec.diameter;
        let h = dd / PANELS as f64;
        let eps = 1e-9 * dd;
        let mut p = Profile {
            spec,
            f,
            h,
            top: dd - eps,
            phi: Vec::with_capacity(PANELS + 1),
            g: alloc::vec![(0.0, 0.0); PANELS + 1],
            j: Vec::with_capacity(PANELS),
        };
        p.phi.push((0.0, 0.0));
        for k in 1..PANELS {
            let q = panel_quad(|s| 1.0 / weight(spec, s), (k - 1) as f64 * h, k as f64 * h);
            let prev = p.phi[k - 1];
            p.phi.push((prev.0 + q.0, prev.1 + q.1));
        }
        for k in (0..PANELS).rev() {
            let b = if k + 1 == PANELS { dd } else { (k + 1) as f64 * h };
            let q = panel_quad(|s| p.cf(s), k as f64 * h, b);
            let next = p.g[k + 1];
            p.g[k] = (next.0 + q.0, next.1 + q.1);
        }
        p.j.push((0.0, 0.0));
        for k in 1..PANELS {
            let a = (k - 1) as f64 * h;
            let q = panel_quad(|s| p.phi_at(s) * p.cf(s), a, k as f64 * h);
            let prev = p.j[k - 1];
            p.j.push((prev.0 + q.0, prev.1 + q.1));
        }
        Ok(p)
    }

    fn panel(&self, r: f64) -> usize {
        ((r / self.h) as usize).min(PANELS - 1).min(self.phi.len() - 1)
    }

    fn phi_at(&self, s: f64) -> f64 {
        let k = self.panel(s);
        let a = k as f64 * self.h;
        self.phi[k].0 + gauss(&|x| 1.0 / weight(self.spec, x), a, s).0
    }

    fn f_at(&self, r: f64) -> f64 {
        let s = self.spec;
        match self.f {
            ContinuousTestFunction::SinGamma => libm::sin(s.gamma() * r),
            ContinuousTestFunction::CoshBeta => {
                libm::sin(PI / (2.0 * s.diameter) * r) / weight(s, r)
            }
            ContinuousTestFunction::Representative => libm::sqrt(self.phi_at(r.min(self.top))),
            ContinuousTestFunction::Constant => 1.0,
            ContinuousTestFunction::Grid(pts) => interpolate(pts, r),
        }
    }

    /// `C f`, taken as 0 where the weight vanishes.
    fn cf(&self, s: f64) -> f64 {
        let c = weight(self.spec, s);
        if c == 0.0 {
            0.0
        } else {
            c * self.f_at(s)
        }
    }

    /// `(Φ, G, J)` at `r` with their error bounds.
    fn at(&self, r: f64) -> [(f64, f64); 3] {
        let k = self.panel(r);
        let a = k as f64 * self.h;
        let (pv, pe) = gauss(&|x| 1.0 / weight(self.spec, x), a, r);
        let phi = (self.phi[k].0 + pv, self.phi[k].1 + pe);
        let b = ((k + 1) as f64 * self.h).min(self.spec.diameter);
        let qg = adaptive_simpson(|s| self.cf(s), r, b, PANEL_ABS, PANEL_REL);
        let g = (self.g[(k + 1).min(PANELS)].0 + qg.value, self.g[(k + 1).min(PANELS)].1 + qg.error);
        let qj = adaptive_simpson(|s| self.phi_at(s) * self.cf(s), a, r, PANEL_ABS, PANEL_REL);
        let j = (self.j[k].0 + qj.value, self.j[k].1 + qj.error);
        [phi, g, j]
    }

    /// `(4 f / H, 4 f / (H + err), err)` at `r`.
    fn xi(&self, r: f64) -> (f64, f64, f64) {
        let [phi, g, j] = self.at(r);
        let hh = phi.0 * g.0 + j.0;
        let err = phi.1 * g.0 + phi.0 * g.1 + j.1 + 1e-15 * hh;
        let f = self.f_at(r);
        (4.0 * f / hh, 4.0 * f / (hh + err), err)
    }

    /// `Φ(r) ∫_r^D C` (for `f ≡ 1`), with its error.
    fn delta(&self, r: f64) -> (f64, f64) {
        let [phi, g, _] = self.at(r);
        (phi.0 * g.0, phi.1 * g.0 + phi.0 * g.1 + 1e-15 * phi.0 * g.0)
    }

    /// Scan points `ε, r_1, .., r_{M-1}, D - ε`.
    fn scan_points(&self) -> Vec<f64> {
        let mut pts = Vec::with_capacity(PANELS + 1);
        pts.push(1e-9 * self.spec.diameter);
        pts.extend((1..PANELS).map(|k| k as f64 * self.h));
        pts.push(self.top);
        pts
    }
}

fn check_grid(pts: &[(f64, f64)], diameter: f64) -> Result<()> {
    if pts.len() < 2 {
        return Err(Error::domain("grid test function needs at least two points"));
    }
    if pts.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::domain("grid abscissae must be strictly increasing"));
    }
    if pts[0].0 > 0.0 || pts[pts.len() - 1].0 < diameter {
        return Err(Error::domain("grid must cover [0, D]"));
    }
    let n = pts.len();
    for (i, &(r, f)) in pts.iter().enumerate() {
        let interior = i > 0 && i + 1 < n;
        if !f.is_finite() || f < 0.0 || (interior && r > 0.0 && r < diameter && f <= 0.0) {
            return Err(Error::domain(format!("test function must be positive inside (0, D); f({r}) = {f}")));
        }
    }
    Ok(())
}

fn interpolate(pts: &[(f64, f64)], r: f64) -> f64 {
    let i = pts.partition_point(|p| p.0 <= r).clamp(1, pts.len() - 1);
    let (x0, y0) = pts[i - 1];
    let (x1, y1) = pts[i];
    y0 + (y1 - y0) * (r - x0) / (x1 - x0)
}

/// Golden-section search for the minimum of `g` on `[a, b]`.
fn golden<G: Fn(f64) -> f64>(g: G, mut a: f64, mut b: f64) -> f64 {
    let inv = 0.618_033_988_749_894_9;
    let mut c = b - inv * (b - a);
    let mut d = a + inv * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..60 {
        if (b - a).abs() <= 1e-13 * (a.abs() + b.abs()) {
            break;
        }
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv * (b - a);
            gd = g(d);
        }
    }
    if gc < gd {
        c
    } else {
        d
    }
}

/// Index of the smallest value and the refinement bracket around it.
fn refine<G: Fn(f64) -> f64>(pts: &[f64], vals: &[f64], g: G) -> f64 {
    let k = (0..vals.len()).fold(0, |m, i| if vals[i] < vals[m] { i } else { m });
    let a = pts[k.saturating_sub(1)];
    let b = pts[(k + 1).min(pts.len() - 1)];
    let r = golden(&g, a, b);
    if g(r) < vals[k] {
        r
    } else {
        pts[k]
    }
}

/// The variational lower bound for one test function, certified against
/// quadrature error (the inf over `r` uses a 1024-point scan refined by golden section).
pub fn xi1_from_test(spec: &GeometrySpec, f: &ContinuousTestFunction) -> Result<XiValue> {
    match f {
        ContinuousTestFunction::SinGamma if spec.curvature <= 0.0 => {
            return Err(Error::domain("the sin(γr) test function needs K > 0"))
        }
        ContinuousTestFunction::CoshBeta if spec.curvature > 0.0 => {
            return Err(Error::domain("the cosh-beta test function needs K <= 0"))
        }
        _ => {}
    }
    let p = Profile::new(spec, f)?;
    let pts = p.scan_points();
    let vals: Vec<f64> = (0..pts.len())
        .map(|i| {
            let r = pts[i];
            if i == 0 || i + 1 == pts.len() {
                return p.xi(r).0;
            }
            let hh = p.phi[i].0 * p.g[i].0 + p.j[i].0;
            4.0 * p.f_at(r) / hh
        })
        .collect();
    if vals.iter().any(|v| v.is_nan() || *v < 0.0) {
        return Err(Error::domain(format!("{} test function vanishes or changes sign inside (0, D)", f.name())));
    }
    let r = refine(&pts, &vals, |r| p.xi(r).0);
    let (nominal, value, err) = p.xi(r);
    Ok(XiValue { value, nominal, argmin: r, quad_error: err })
}

pub fn xi1_representative(spec: &GeometrySpec) -> Result<XiValue> {
    xi1_from_test(spec, &ContinuousTestFunction::Representative)
}

/// `δ = sup_r (∫_0^r C^{-1})(∫_r^D C)` as an enclosure (nominal sup widened
/// by the quadrature error bound).
pub fn delta_geometric(spec: &GeometrySpec) -> Result<Enclosure> {
    let p = Profile::new(spec, &ContinuousTestFunction::Constant)?;
    let pts = p.scan_points();
    let vals: Vec<f64> = pts.iter().map(|&r| -p.delta(r).0).collect();
    let r = refine(&pts, &vals, |r| -p.delta(r).0);
    let (v, e) = p.delta(r);
    Ok(Enclosure::new(v - e, v + e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub spec: GeometrySpec,
    /// Every formula with its value, `None` when not applicable.
    pub entries: Vec<(Formula, Option<f64>)>,
    /// Largest applicable entry.
    pub best: Option<(Formula, f64)>,
    /// δ enclosure and the bracket `[1/δ_hi, 4/δ_lo]` for the variational bound.
    pub delta: Option<Enclosure>,
    pub xi_bracket: Option<Enclosure>,
}

impl BoundReport {
    pub fn value(&self, f: Formula) -> Option<f64> {
        self.entries.iter().find(|e| e.0 == f).and_then(|e| e.1)
    }

    /// Formulas attaining the best value to 1e-12 relative.
    pub fn sharp_set(&self) -> Vec<Formula> {
        let Some((_, best)) = self.best else { return Vec::new() };
        self.entries
            .iter()
            .filter_map(|&(f, v)| v.filter(|v| (best - v).abs() <= 1e-12 * best.abs()).map(|_| f))
            .collect()
    }
}

fn report(spec: &GeometrySpec, formulas: &[Formula], with_delta: bool) -> Result<BoundReport> {
    let entries: Vec<(Formula, Option<f64>)> = formulas.iter().map(|&f| (f, f.evaluate(spec))).collect();
    let best = entries
        .iter()
        .filter_map(|&(f, v)| v.map(|v| (f, v)))
        .fold(None, |acc: Option<(Formula, f64)>, (f, v)| match acc {
            Some((_, b)) if b >= v => acc,
            _ => Some((f, v)),
        });
    let delta = if with_delta && spec.dim > 1.0 && spec.cosine_admissible() {
        Some(delta_geometric(spec)?)
    } else {
        None
    };
    let xi_bracket = delta.map(|d| Enclosure::new(1.0 / d.hi, 4.0 / d.lo));
    Ok(BoundReport { spec: *spec, entries, best, delta, xi_bracket })
}

/// The eight classical estimates.
pub fn classical_bounds(spec: &GeometrySpec) -> BoundReport {
    report(spec, &Formula::CLASSICAL, false).expect("no quadrature without delta")
}

/// The three improved closed forms plus the δ bracket for the variational bound.
pub fn improved_bounds(spec: &GeometrySpec) -> Result<BoundReport> {
    report(spec, &Formula::IMPROVED, true)
}

/// All eleven closed forms, optionally with the δ bracket.
pub fn all_bounds(spec: &GeometrySpec, with_delta: bool) -> Result<BoundReport> {
    let all: Vec<Formula> = Formula::all().collect();
    report(spec, &all, with_delta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub spec: GeometrySpec,
    pub dominant: Formula,
    pub dominant_value: f64,
    pub dominated: Formula,
    pub dominated_value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditReport {
    pub points: usize,
    /// Number of pairwise comparisons made.
    pub comparisons: usize,
    pub violations: Vec<Violation>,
}

const DOMINANCES: [(Formula, [Formula; 2]); 3] = [
    (Formula::CosinePower, [Formula::RicciDimension, Formula::SphereIntegral]),
    (Formula::HyperbolicCosine, [Formula::DiameterExpAlpha, Formula::HalfDiameterExpAlphaPrime]),
    (Formula::DiameterHalfCurvature, [Formula::HalfDiameter, Formula::DiameterCurvature]),
];

/// Checks that each improved estimate dominates the classical ones it
/// replaces, wherever both apply (relative slack 1e-12).
pub fn dominance_audit(grid: &[GeometrySpec]) -> AuditReport {
    let mut out = AuditReport { points: grid.len(), ..AuditReport::default() };
    for spec in grid {
        for (dominant, dominated) in DOMINANCES {
            let Some(top) = dominant.evaluate(spec) else { continue };
            for f in dominated {
                let Some(v) = f.evaluate(spec) else { continue };
                out.comparisons += 1;
                if top < v - 1e-12 * v.abs() {
                    out.violations.push(Violation {
                        spec: *spec,
                        dominant,
                        dominant_value: top,
                        dominated: f,
                        dominated_value: v,
                    });
                }
            }
        }
    }
    out
}

/// `{2,3,5,8} × {0.5, 1, π} × {-2, -0.5, 0, 0.5, 2}`.
pub fn standard_grid() -> Vec<GeometrySpec> {
    let mut g = Vec::with_capacity(60);
    for d in [2.0, 3.0, 5.0, 8.0] {
        for dd in [0.5, 1.0, PI] {
            for k in [-2.0, -0.5, 0.0, 0.5, 2.0] {
                g.push(GeometrySpec { dim: d, diameter: dd, curvature: k });
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(d: f64, dd: f64, k: f64) -> GeometrySpec {
        GeometrySpec::new(d, dd, k).unwrap()
    }

    #[test]
    fn weight_examples() {
        assert_eq!(c_function(&g(3.0, 2.0, 0.0), 1.3).unwrap(), 1.0);
        let c = c_function(&g(2.0, 3.0, -1.0), 2.0).unwrap();
        assert!((c - 1.0f64.cosh()).abs() < 1e-15);
        assert_eq!(c_function(&g(3.0, 2.0, 2.0), 0.0).unwrap(), 1.0);
        assert!(c_function(&g(1.0, 2.0, 0.0), 1.0).is_err());
        // γ = 1 for d=2, K=4; cos argument passes π/2 before r = 2
        assert!(c_function(&g(2.0, 2.0, 4.0), 1.9).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let s2 = g(2.0, PI, 1.0);
        assert!((Formula::RicciDimension.evaluate(&s2).unwrap() - 2.0).abs() < 1e-15);
        assert!((Formula::CosinePower.evaluate(&s2).unwrap() - 2.0).abs() < 1e-12);
        assert!((Formula::SphereIntegral.evaluate(&s2).unwrap() - 2.0).abs() < 1e-12);
        let flat = g(2.0, PI, 0.0);
        assert!((Formula::HalfDiameter.evaluate(&flat).unwrap() - 0.5).abs() < 1e-15);
        assert!((Formula::Diameter.evaluate(&flat).unwrap() - 1.0).abs() < 1e-15);
        assert!((Formula::DiameterCurvature.evaluate(&flat).unwrap() - 1.0).abs() < 1e-15);
        assert!((Formula::DiameterHalfCurvature.evaluate(&flat).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(Formula::CosinePower.evaluate(&flat), None);
        let h5 = g(5.0, 1.0, -1.0);
        assert!((h5.alpha() - 1.0).abs() < 1e-15);
        let v = Formula::DiameterExpAlpha.evaluate(&h5).unwrap();
        assert!((v - PI * PI * (-1.0f64).exp()).abs() < 1e-12 && (v - 3.6308).abs() < 1e-4);
        assert!(Formula::HyperbolicCosine.evaluate(&h5).unwrap() >= v);
        assert_eq!(Formula::HalfDiameterExpAlphaPrime.evaluate(&h5), None);
    }

    #[test]
    fn half_curvature_is_linear_in_k() {
        for k in [-3.0, -0.5, 0.0, 0.7, 2.0] {
            let v = Formula::DiameterHalfCurvature.evaluate(&g(3.0, 1.5, k)).unwrap();
            assert_eq!(v, PI * PI / 2.25 + k / 2.0);
        }
    }

    #[test]
    fn constant_test_function_gives_eight_over_d_squared() {
        let s = g(3.0, 2.0, 0.0);
        let x = xi1_from_test(&s, &ContinuousTestFunction::Constant).unwrap();
        assert!((x.nominal - 2.0).abs() < 1e-7, "{x:?}");
        assert!(x.value <= x.nominal);
    }

    #[test]
    fn beta_family_at_zero_curvature() {
        let s = g(4.0, 1.5, 0.0);
        let x = xi1_from_test(&s, &ContinuousTestFunction::CoshBeta).unwrap();
        assert!((x.nominal - PI * PI / 2.25).abs() < 1e-9, "{x:?}");
    }

    #[test]
    fn sine_family_reaches_cosine_power_bound() {
        let s = g(3.0, 2.0, 1.0);
        let x = xi1_from_test(&s, &ContinuousTestFunction::SinGamma).unwrap();
        let closed = Formula::CosinePower.evaluate(&s).unwrap();
        assert!((x.nominal - closed).abs() < 1e-6 * closed, "{x:?} vs {closed}");
    }

    #[test]
    fn delta_bracket_flat_case() {
        let dd = 1.7;
        let d = delta_geometric(&g(2.0, dd, 0.0)).unwrap();
        assert!(d.contains(dd * dd / 4.0, 1e-12), "{d}");
        let rep = xi1_representative(&g(2.0, dd, 0.0)).unwrap();
        assert!(rep.value >= 4.0 / (dd * dd) - 1e-9);
        assert!(rep.value <= 16.0 / (dd * dd));
    }

    #[test]
    fn representative_in_bracket_negative_curvature() {
        let s = g(2.0, 1.0, -1.0);
        let d = delta_geometric(&s).unwrap();
        let rep = xi1_representative(&s).unwrap();
        assert!(rep.value >= 1.0 / d.hi - rep.quad_error && rep.nominal <= 4.0 / d.lo, "{rep:?} {d}");
    }

    #[test]
    fn audit_on_standard_grid() {
        let grid = standard_grid();
        assert_eq!(grid.len(), 60);
        let a = dominance_audit(&grid);
        assert!(a.violations.is_empty(), "{:?}", a.violations);
        assert!(a.comparisons > 40);
    }

    #[test]
    fn bounds_decrease_in_diameter() {
        for (d, k) in [(2.0, -1.0), (3.0, 0.0), (5.0, 0.5), (4.0, -0.3)] {
            let mut prev: Vec<Option<f64>> = Vec::new();
            for dd in [0.3, 0.6, 1.0, 1.7, 2.5] {
                let s = g(d, dd, k);
                let cur: Vec<Option<f64>> = Formula::all().map(|f| f.evaluate(&s)).collect();
                for (p, c) in prev.iter().zip(&cur) {
                    if let (Some(p), Some(c)) = (p, c) {
                        assert!(c <= &(p * (1.0 + 1e-12)), "{d} {k} {dd}");
                    }
                }
                prev = cur;
            }
        }
    }
}
