//! Adaptive Simpson quadrature with an accumulated error estimate.

use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Sum of the local `|S_2 - S_1| / 15` estimates over accepted panels.
    pub error: f64,
    /// False when the depth cap was hit on some panel.
    pub converged: bool,
}

const MAX_DEPTH: u32 = 48;

/// `∫_a^b f` to `max(abs_tol, rel_tol |∫|)`, split proportionally over panels.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Quadrature {
    if a == b {
        return Quadrature { value: 0.0, error: 0.0, converged: true };
    }
    // the coarse estimate sizes the relative tolerance; steep integrands can
    // overshoot it badly, so repeat while the result says it was too loose
    let mut scale = coarse(&f, a, b).abs();
    let mut q = pass(&f, a, b, abs_tol.max(rel_tol * scale));
    for _ in 0..4 {
        if !(q.value.abs() < 0.5 * scale) || rel_tol * q.value.abs() <= abs_tol {
            break;
        }
        scale = q.value.abs();
        q = pass(&f, a, b, abs_tol.max(rel_tol * scale));
    }
    q
}

const PANELS: usize = 16;

fn coarse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|k| {
            let x0 = a + k as f64 * h;
            let x1 = if k + 1 == PANELS { b } else { x0 + h };
            (x1 - x0) / 6.0 * (f(x0) + 4.0 * f(0.5 * (x0 + x1)) + f(x1))
        })
        .sum()
}

fn pass<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Quadrature {
    let h = (b - a) / PANELS as f64;
    let mut stack: Vec<(f64, f64, f64, f64, f64, f64, u32)> = Vec::with_capacity(64);
    for k in (0..PANELS).rev() {
        let x0 = a + k as f64 * h;
        let x1 = if k + 1 == PANELS { b } else { x0 + h };
        let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
        stack.push((x0, x1, f0, fm, f1, (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1), 0));
    }
    let width = (b - a).abs();
    let mut value = 0.0;
    let mut error = 0.0;
    let mut converged = true;
    while let Some((x0, x1, f0, fm, f1, whole, depth)) = stack.pop() {
        let m = 0.5 * (x0 + x1);
        let (lm, rm) = (0.5 * (x0 + m), 0.5 * (m + x1));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - x0) / 6.0 * (f0 + 4.0 * flm + fm);
        let right = (x1 - m) / 6.0 * (fm + 4.0 * frm + f1);
        let diff = left + right - whole;
        // floor at rounding level so steep panels cannot stall on an unreachable share
        let local_tol = (tol * (x1 - x0).abs() / width).max(16.0 * f64::EPSILON * (left + right).abs());
        if diff.abs() <= 15.0 * local_tol || depth >= MAX_DEPTH || !diff.is_finite() {
            if depth >= MAX_DEPTH || !diff.is_finite() {
                converged = false;
            }
            value += left + right + diff / 15.0;
            error += diff.abs() / 15.0;
        } else {
            stack.push((m, x1, fm, frm, f1, right, depth + 1));
            stack.push((x0, m, f0, flm, fm, left, depth + 1));
        }
    }
    Quadrature { value, error, converged }
}
