use core::fmt;
use core::ops::{Add, Mul};

/// Closed interval `[lo, hi]` known to contain a quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enclosure {
    pub lo: f64,
    pub hi: f64,
}

impl Enclosure {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan(), "inverted enclosure [{lo}, {hi}]");
        Enclosure { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Enclosure { lo: v, hi: v }
    }

    pub fn mid(&self) -> f64 {
        if self.hi.is_infinite() {
            self.hi
        } else {
            0.5 * (self.lo + self.hi)
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    /// Widen outward by a relative amount (round-off allowance).
    pub fn widen_rel(&self, rel: f64) -> Self {
        Enclosure { lo: self.lo - rel * self.lo.abs(), hi: self.hi + rel * self.hi.abs() }
    }

    /// `1/x` for a strictly positive enclosure.
    pub fn recip(&self) -> Self {
        Enclosure { lo: 1.0 / self.hi, hi: 1.0 / self.lo }
    }

    pub fn scale(&self, c: f64) -> Self {
        if c >= 0.0 {
            Enclosure { lo: self.lo * c, hi: self.hi * c }
        } else {
            Enclosure { lo: self.hi * c, hi: self.lo * c }
        }
    }

    pub fn hull(&self, o: &Enclosure) -> Self {
        Enclosure { lo: self.lo.min(o.lo), hi: self.hi.max(o.hi) }
    }
}

impl Add for Enclosure {
    type Output = Enclosure;
    fn add(self, o: Enclosure) -> Enclosure {
        Enclosure { lo: self.lo + o.lo, hi: self.hi + o.hi }
    }
}

/// Product of two non-negative enclosures.
impl Mul for Enclosure {
    type Output = Enclosure;
    fn mul(self, o: Enclosure) -> Enclosure {
        debug_assert!(self.lo >= 0.0 && o.lo >= 0.0);
        Enclosure { lo: self.lo * o.lo, hi: self.hi * o.hi }
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.12e}, {:.12e}]", self.lo, self.hi)
    }
}
