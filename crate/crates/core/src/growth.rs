//! Growth classes `Θ(x_n)` of positive sequences, used to decide the series
//! and sup conditions of the ergodicity criteria exactly for closed-form rates.
//!
//! A class is `exp(n2·n² + nlogn·n ln n + n1·n) · n^pow · (ln n)^logpow`
//! up to bounded positive factors.

use core::cmp::Ordering;

use crate::expr::Asym;

const TOL: f64 = 1e-9;

fn sign(x: f64) -> Ordering {
    if x > TOL {
        Ordering::Greater
    } else if x < -TOL {
        Ordering::Less
    } else {
        Ordering::Equal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Theta {
    pub n2: f64,
    pub nlogn: f64,
    pub n1: f64,
    pub pow: f64,
    pub logpow: f64,
}

/// Result of a tail summation: a class, or divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth {
    Class(Theta),
    Infinite,
}

impl Theta {
    pub const ONE: Theta = Theta { n2: 0.0, nlogn: 0.0, n1: 0.0, pow: 0.0, logpow: 0.0 };

    pub fn from_asym(a: &Asym) -> Theta {
        Theta { n1: libm::log(a.geo), pow: a.pow, ..Theta::ONE }
    }

    /// Class of `μ_n = Π_{i<=n} r_i` for a ratio `r_i ~ C G^i i^P (1 + S/i)`.
    pub fn of_product(r: &Asym) -> Theta {
        let lg = libm::log(r.geo);
        Theta {
            n2: lg / 2.0,
            nlogn: r.pow,
            n1: libm::log(r.coef) + lg / 2.0 - r.pow,
            pow: r.pow / 2.0 + r.sub,
            logpow: 0.0,
        }
    }

    pub fn mul(&self, o: &Theta) -> Theta {
        Theta {
            n2: self.n2 + o.n2,
            nlogn: self.nlogn + o.nlogn,
            n1: self.n1 + o.n1,
            pow: self.pow + o.pow,
            logpow: self.logpow + o.logpow,
        }
    }

    pub fn inv(&self) -> Theta {
        self.powf(-1.0)
    }

    pub fn powf(&self, k: f64) -> Theta {
        Theta {
            n2: self.n2 * k,
            nlogn: self.nlogn * k,
            n1: self.n1 * k,
            pow: self.pow * k,
            logpow: self.logpow * k,
        }
    }

    /// Eventual behaviour: `Greater` = unbounded, `Less` = tends to zero,
    /// `Equal` = bounded above and below.
    pub fn trend(&self) -> Ordering {
        [self.n2, self.nlogn, self.n1, self.pow, self.logpow]
            .into_iter()
            .map(sign)
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    }

    pub fn bounded(&self) -> bool {
        self.trend() != Ordering::Greater
    }

    pub fn vanishes(&self) -> bool {
        self.trend() == Ordering::Less
    }

    /// Super-polynomial part sign (geometric or faster).
    fn fast(&self) -> Ordering {
        [self.n2, self.nlogn, self.n1]
            .into_iter()
            .map(sign)
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    }

    /// Class of the partial sums `Σ_{j<=n} x_j`; `None` when outside the family
    /// (the `ln ln n` borderline).
    pub fn partial_sum(&self) -> Option<Theta> {
        match self.fast() {
            Ordering::Greater => Some(*self),
            Ordering::Less => Some(Theta::ONE),
            Ordering::Equal => match sign(self.pow + 1.0) {
                Ordering::Greater => Some(Theta { pow: self.pow + 1.0, logpow: self.logpow, ..Theta::ONE }),
                Ordering::Less => Some(Theta::ONE),
                Ordering::Equal => match sign(self.logpow + 1.0) {
                    Ordering::Greater => Some(Theta { logpow: self.logpow + 1.0, ..Theta::ONE }),
                    Ordering::Less => Some(Theta::ONE),
                    Ordering::Equal => None,
                },
            },
        }
    }

    /// Class of the tails `Σ_{j>=n} x_j`.
    pub fn tail_sum(&self) -> Growth {
        match self.fast() {
            Ordering::Less => Growth::Class(*self),
            Ordering::Greater => Growth::Infinite,
            Ordering::Equal => match sign(self.pow + 1.0) {
                Ordering::Less => Growth::Class(Theta { pow: self.pow + 1.0, logpow: self.logpow, ..Theta::ONE }),
                Ordering::Greater => Growth::Infinite,
                Ordering::Equal => match sign(self.logpow + 1.0) {
                    Ordering::Less => Growth::Class(Theta { logpow: self.logpow + 1.0, ..Theta::ONE }),
                    _ => Growth::Infinite,
                },
            },
        }
    }

    pub fn summable(&self) -> bool {
        self.tail_sum() != Growth::Infinite
    }

    /// Class of `x_{n-1}`.
    pub fn shift_back(&self) -> Theta {
        self.mul(&Theta { n1: -2.0 * self.n2, pow: -self.nlogn, ..Theta::ONE })
    }

    /// Class of `x_{n+1}`.
    pub fn shift_forward(&self) -> Theta {
        self.mul(&Theta { n1: 2.0 * self.n2, pow: self.nlogn, ..Theta::ONE })
    }

    /// Class of `ln(1/x_n)` for a sequence tending to zero.
    pub fn log_inv(&self) -> Option<Theta> {
        if sign(self.n2) == Ordering::Less {
            Some(Theta { pow: 2.0, ..Theta::ONE })
        } else if sign(self.n2) == Ordering::Equal && sign(self.nlogn) == Ordering::Less {
            Some(Theta { pow: 1.0, logpow: 1.0, ..Theta::ONE })
        } else if self.fast() == Ordering::Less {
            Some(Theta { pow: 1.0, ..Theta::ONE })
        } else if self.fast() == Ordering::Equal && sign(self.pow) == Ordering::Less {
            Some(Theta { logpow: 1.0, ..Theta::ONE })
        } else {
            None
        }
    }

    /// `ln` of the class representative at `n` (constant factor set to 1).
    pub fn ln_at(&self, n: f64) -> f64 {
        let ln = libm::log(n);
        self.n2 * n * n + self.nlogn * n * ln + self.n1 * n + self.pow * ln + self.logpow * libm::log(ln)
    }
}
