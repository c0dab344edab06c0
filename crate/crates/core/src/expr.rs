//! Closed-form rate expressions over the state index `i`.
//!
//! Grammar (standard precedence, `^` binds tighter than unary minus and is
//! right-associative):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'i' | 'pi' | 'e' | func '(' args ')' | '(' expr ')'
//! func   := 'sqrt' | 'min' | 'max'
//! ```

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use thiserror::Error;

/// Parse failure, with the byte offset of the offending token.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character {ch:?} at byte {offset}")]
    UnexpectedChar { ch: char, offset: usize },
    #[error("unexpected token at byte {offset}: expected {expected}")]
    Unexpected { offset: usize, expected: &'static str },
    #[error("unknown identifier {name:?} at byte {offset}")]
    UnknownIdent { name: String, offset: usize },
    #[error("malformed number at byte {offset}")]
    BadNumber { offset: usize },
    #[error("function {name} takes {expected} argument(s), got {got} (byte {offset})")]
    Arity { name: &'static str, expected: usize, got: usize, offset: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Min,
    Max,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Sqrt => 1,
            Func::Min | Func::Max => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Pi,
    E,
    Index,
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// A parsed rate expression `f(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateExpr {
    root: Node,
}

impl RateExpr {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let tokens = lex(text)?;
        if tokens.is_empty() {
            return Err(ParseError::Empty);
        }
        let mut p = Parser { tokens: &tokens, pos: 0, end: text.len() };
        let root = p.expr()?;
        if p.pos != tokens.len() {
            return Err(ParseError::Unexpected {
                offset: tokens[p.pos].offset,
                expected: "end of input",
            });
        }
        Ok(RateExpr { root })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Evaluates at index `i`. No positivity or finiteness checks here.
    pub fn eval(&self, i: f64) -> f64 {
        eval_node(&self.root, i)
    }

    /// True when the expression does not reference `i`.
    pub fn is_constant(&self) -> bool {
        !mentions_index(&self.root)
    }

    /// `c * self`, used for rate rescaling.
    pub fn scaled(&self, c: f64) -> RateExpr {
        RateExpr { root: Node::Bin(BinOp::Mul, Box::new(Node::Num(c)), Box::new(self.root.clone())) }
    }

    /// Leading-order behaviour as `i -> inf`, if the expression falls in the
    /// recognised polynomial/geometric family.
    pub fn asymptotic(&self) -> Option<Leading> {
        leading(&self.root)
    }
}

impl fmt::Display for RateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}

fn write_node(n: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match n {
        Node::Num(v) => write!(f, "{v}"),
        Node::Pi => f.write_str("pi"),
        Node::E => f.write_str("e"),
        Node::Index => f.write_str("i"),
        Node::Neg(x) => {
            f.write_str("(-")?;
            write_node(x, f)?;
            f.write_str(")")
        }
        Node::Bin(op, l, r) => {
            let sym = match op {
                BinOp::Add => " + ",
                BinOp::Sub => " - ",
                BinOp::Mul => " * ",
                BinOp::Div => " / ",
                BinOp::Pow => " ^ ",
            };
            f.write_str("(")?;
            write_node(l, f)?;
            f.write_str(sym)?;
            write_node(r, f)?;
            f.write_str(")")
        }
        Node::Call(func, args) => {
            f.write_str(func.name())?;
            f.write_str("(")?;
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    f.write_str(", ")?;
                }
                write_node(a, f)?;
            }
            f.write_str(")")
        }
    }
}

fn eval_node(n: &Node, i: f64) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Pi => core::f64::consts::PI,
        Node::E => core::f64::consts::E,
        Node::Index => i,
        Node::Neg(x) => -eval_node(x, i),
        Node::Bin(op, l, r) => {
            let (a, b) = (eval_node(l, i), eval_node(r, i));
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow => libm::pow(a, b),
            }
        }
        Node::Call(func, args) => match func {
            Func::Sqrt => libm::sqrt(eval_node(&args[0], i)),
            Func::Min => eval_node(&args[0], i).min(eval_node(&args[1], i)),
            Func::Max => eval_node(&args[0], i).max(eval_node(&args[1], i)),
        },
    }
}

fn mentions_index(n: &Node) -> bool {
    match n {
        Node::Index => true,
        Node::Num(_) | Node::Pi | Node::E => false,
        Node::Neg(x) => mentions_index(x),
        Node::Bin(_, l, r) => mentions_index(l) || mentions_index(r),
        Node::Call(_, args) => args.iter().any(mentions_index),
    }
}

// ---------------------------------------------------------------- lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let c = bytes[pos];
        let start = pos;
        let simple = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                pos += 1;
                continue;
            }
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token { tok, offset: start });
            pos += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while pos < bytes.len() && (bytes[pos].is_ascii_digit() || bytes[pos] == b'.') {
                pos += 1;
            }
            // exponent only when digits follow, so "2*e" and "2e" stay distinct
            if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
                let mut q = pos + 1;
                if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                    q += 1;
                }
                if q < bytes.len() && bytes[q].is_ascii_digit() {
                    while q < bytes.len() && bytes[q].is_ascii_digit() {
                        q += 1;
                    }
                    pos = q;
                }
            }
            let v: f64 = text[start..pos]
                .parse()
                .map_err(|_| ParseError::BadNumber { offset: start })?;
            if !v.is_finite() {
                return Err(ParseError::BadNumber { offset: start });
            }
            out.push(Token { tok: Tok::Num(v), offset: start });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                pos += 1;
            }
            out.push(Token { tok: Tok::Ident(text[start..pos].to_string()), offset: start });
            continue;
        }
        let ch = text[start..].chars().next().unwrap_or('?');
        return Err(ParseError::UnexpectedChar { ch, offset: start });
    }
    Ok(out)
}

// --------------------------------------------------------------- parser

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.offset)
    }

    fn expect(&mut self, want: Tok, expected: &'static str) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ParseError::Unexpected { offset: self.offset(), expected })
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let offset = self.offset();
        let tok = match self.tokens.get(self.pos) {
            Some(t) => t.tok.clone(),
            None => return Err(ParseError::Unexpected { offset, expected: "operand" }),
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "i" => Ok(Node::Index),
                "pi" => Ok(Node::Pi),
                "e" => Ok(Node::E),
                "sqrt" => self.call(Func::Sqrt, offset),
                "min" => self.call(Func::Min, offset),
                "max" => self.call(Func::Max, offset),
                _ => Err(ParseError::UnknownIdent { name, offset }),
            },
            _ => Err(ParseError::Unexpected { offset, expected: "operand" }),
        }
    }

    fn call(&mut self, func: Func, offset: usize) -> Result<Node, ParseError> {
        self.expect(Tok::LParen, "'('")?;
        let mut args = Vec::new();
        if self.peek() != Some(&Tok::RParen) {
            loop {
                args.push(self.expr()?);
                if self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "')'")?;
        if args.len() != func.arity() {
            return Err(ParseError::Arity {
                name: func.name(),
                expected: func.arity(),
                got: args.len(),
                offset,
            });
        }
        Ok(Node::Call(func, args))
    }
}

// ---------------------------------------------------------- asymptotics

const ASYM_TOL: f64 = 1e-10;

/// `coef * geo^i * i^pow * (1 + sub/i + o(1/i))` as `i -> inf`.
///
/// The `sub` coefficient is tracked so that ratio tests of the Gauss/Raabe
/// kind can be decided on the weights built from the rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Asym {
    pub coef: f64,
    pub geo: f64,
    pub pow: f64,
    pub sub: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Leading {
    Zero,
    Term(Asym),
}

impl Asym {
    pub fn constant(c: f64) -> Self {
        Asym { coef: c, geo: 1.0, pow: 0.0, sub: 0.0 }
    }

    /// `lim_{i->inf}` of the represented sequence (may be infinite).
    pub fn limit(&self) -> f64 {
        let scale = match dominance(self.geo, self.pow) {
            Ordering::Greater => f64::INFINITY,
            Ordering::Less => 0.0,
            Ordering::Equal => 1.0,
        };
        if scale == 0.0 {
            0.0
        } else {
            self.coef * scale
        }
    }

    /// Behaviour of the shifted sequence `x_{i-1}` in the same form.
    pub fn shifted_back(&self) -> Asym {
        Asym {
            coef: self.coef / self.geo,
            geo: self.geo,
            pow: self.pow,
            sub: self.sub - self.pow,
        }
    }

    /// Behaviour of `x_{i+1}`.
    pub fn shifted_forward(&self) -> Asym {
        Asym {
            coef: self.coef * self.geo,
            geo: self.geo,
            pow: self.pow,
            sub: self.sub + self.pow,
        }
    }

    pub fn mul(&self, o: &Asym) -> Asym {
        Asym {
            coef: self.coef * o.coef,
            geo: self.geo * o.geo,
            pow: self.pow + o.pow,
            sub: self.sub + o.sub,
        }
    }

    pub fn recip(&self) -> Asym {
        Asym { coef: 1.0 / self.coef, geo: 1.0 / self.geo, pow: -self.pow, sub: -self.sub }
    }

    fn powf(&self, k: f64) -> Option<Asym> {
        if self.coef <= 0.0 && libm::round(k) != k {
            return None;
        }
        Some(Asym {
            coef: libm::pow(self.coef, k),
            geo: libm::pow(self.geo, k),
            pow: self.pow * k,
            sub: self.sub * k,
        })
    }
}

/// Sign of `geo^i i^pow` growth: Greater = to infinity, Less = to zero.
fn dominance(geo: f64, pow: f64) -> Ordering {
    let lg = libm::log(geo);
    if lg > ASYM_TOL {
        Ordering::Greater
    } else if lg < -ASYM_TOL {
        Ordering::Less
    } else if pow > ASYM_TOL {
        Ordering::Greater
    } else if pow < -ASYM_TOL {
        Ordering::Less
    } else {
        Ordering::Equal
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= ASYM_TOL * (1.0 + a.abs().max(b.abs()))
}

fn add_leading(x: Leading, y: Leading) -> Option<Leading> {
    let (a, b) = match (x, y) {
        (Leading::Zero, v) | (v, Leading::Zero) => return Some(v),
        (Leading::Term(a), Leading::Term(b)) => (a, b),
    };
    let ratio_geo = a.geo / b.geo;
    match dominance(ratio_geo, a.pow - b.pow) {
        Ordering::Equal => {
            let c = a.coef + b.coef;
            if c.abs() <= ASYM_TOL * a.coef.abs().max(b.coef.abs()) {
                return None;
            }
            let sub = (a.coef * a.sub + b.coef * b.sub) / c;
            Some(Leading::Term(Asym { coef: c, geo: a.geo, pow: a.pow, sub }))
        }
        ord => {
            let (big, small) = if ord == Ordering::Greater { (a, b) } else { (b, a) };
            if !close(big.geo, small.geo) {
                return Some(Leading::Term(big));
            }
            let gap = big.pow - small.pow;
            if close(gap, 1.0) {
                let mut t = big;
                t.sub += small.coef / big.coef;
                Some(Leading::Term(t))
            } else if gap > 1.0 {
                Some(Leading::Term(big))
            } else {
                // correction of order i^{-gap} with gap < 1 is outside the form
                None
            }
        }
    }
}

fn neg(x: Leading) -> Leading {
    match x {
        Leading::Zero => Leading::Zero,
        Leading::Term(mut a) => {
            a.coef = -a.coef;
            Leading::Term(a)
        }
    }
}

/// Eventual ordering of two sequences.
fn eventual_cmp(x: Leading, y: Leading) -> Option<Ordering> {
    if x == y {
        return Some(Ordering::Equal);
    }
    match add_leading(x, neg(y)) {
        Some(Leading::Zero) => Some(Ordering::Equal),
        Some(Leading::Term(d)) => d.coef.partial_cmp(&0.0),
        None => {
            // same leading term; decide on the 1/i correction
            let (Leading::Term(a), Leading::Term(b)) = (x, y) else { return None };
            if close(a.sub, b.sub) {
                return None;
            }
            (a.coef * (a.sub - b.sub)).partial_cmp(&0.0)
        }
    }
}

fn leading(n: &Node) -> Option<Leading> {
    match n {
        Node::Num(v) => Some(if *v == 0.0 { Leading::Zero } else { Leading::Term(Asym::constant(*v)) }),
        Node::Pi => Some(Leading::Term(Asym::constant(core::f64::consts::PI))),
        Node::E => Some(Leading::Term(Asym::constant(core::f64::consts::E))),
        Node::Index => Some(Leading::Term(Asym { coef: 1.0, geo: 1.0, pow: 1.0, sub: 0.0 })),
        Node::Neg(x) => leading(x).map(neg),
        Node::Bin(op, l, r) => {
            let (a, b) = (leading(l)?, leading(r)?);
            match op {
                BinOp::Add => add_leading(a, b),
                BinOp::Sub => add_leading(a, neg(b)),
                BinOp::Mul => match (a, b) {
                    (Leading::Zero, _) | (_, Leading::Zero) => Some(Leading::Zero),
                    (Leading::Term(x), Leading::Term(y)) => Some(Leading::Term(x.mul(&y))),
                },
                BinOp::Div => match (a, b) {
                    (_, Leading::Zero) => None,
                    (Leading::Zero, _) => Some(Leading::Zero),
                    (Leading::Term(x), Leading::Term(y)) => Some(Leading::Term(x.mul(&y.recip()))),
                },
                BinOp::Pow => pow_leading(l, r, a, b),
            }
        }
        Node::Call(func, args) => match func {
            Func::Sqrt => match leading(&args[0])? {
                Leading::Zero => Some(Leading::Zero),
                Leading::Term(x) => x.powf(0.5).map(Leading::Term),
            },
            Func::Min | Func::Max => {
                let (a, b) = (leading(&args[0])?, leading(&args[1])?);
                let ord = eventual_cmp(a, b)?;
                let pick_a = match func {
                    Func::Max => ord != Ordering::Less,
                    _ => ord != Ordering::Greater,
                };
                Some(if pick_a { a } else { b })
            }
        },
    }
}

fn pow_leading(l: &Node, r: &Node, base: Leading, exp: Leading) -> Option<Leading> {
    if !mentions_index(r) {
        let k = eval_node(r, 0.0);
        return match base {
            Leading::Zero => (k > 0.0).then_some(Leading::Zero),
            Leading::Term(x) => x.powf(k).map(Leading::Term),
        };
    }
    if mentions_index(l) {
        return None;
    }
    // constant base, exponent must be exactly affine in i
    let c = eval_node(l, 0.0);
    if c <= 0.0 {
        return None;
    }
    if let Leading::Term(e) = exp {
        if dominance(e.geo, e.pow - 1.0) == Ordering::Greater {
            return None;
        }
    }
    let beta = eval_node(r, 0.0);
    let alpha = eval_node(r, 1.0) - beta;
    for k in [2.0, 3.0, 7.0, 20.0, 100.0] {
        if !close(eval_node(r, k), alpha * k + beta) {
            return None;
        }
    }
    Some(Leading::Term(Asym {
        coef: libm::pow(c, beta),
        geo: libm::pow(c, alpha),
        pow: 0.0,
        sub: 0.0,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn ev(s: &str, i: f64) -> f64 {
        RateExpr::parse(s).unwrap().eval(i)
    }

    #[test]
    fn evaluates_examples() {
        assert_eq!(ev("i+1", 4.0), 5.0);
        assert!((ev("2*i+4+sqrt(2)", 0.0) - (4.0 + core::f64::consts::SQRT_2)).abs() < 1e-15);
        assert_eq!(ev("i^2", 3.0), 9.0);
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        assert_eq!(ev("-2^2", 0.0), -4.0);
        assert_eq!(ev("min(i, 3) + max(1, i)", 5.0), 8.0);
        assert!((ev("pi*e", 0.0) - core::f64::consts::PI * core::f64::consts::E).abs() < 1e-15);
        assert_eq!(ev("1.5e2 / 3", 0.0), 50.0);
    }

    #[test]
    fn reports_errors_with_offsets() {
        assert_eq!(RateExpr::parse("  ").unwrap_err(), ParseError::Empty);
        assert!(matches!(
            RateExpr::parse("i + foo").unwrap_err(),
            ParseError::UnknownIdent { offset: 4, .. }
        ));
        assert!(matches!(
            RateExpr::parse("i + ").unwrap_err(),
            ParseError::Unexpected { offset: 4, .. }
        ));
        assert!(matches!(RateExpr::parse("(i").unwrap_err(), ParseError::Unexpected { .. }));
        assert!(matches!(RateExpr::parse("i $ 2").unwrap_err(), ParseError::UnexpectedChar { offset: 2, .. }));
        assert!(matches!(RateExpr::parse("min(1)").unwrap_err(), ParseError::Arity { .. }));
        assert!(matches!(RateExpr::parse("2e").unwrap_err(), ParseError::Unexpected { .. }));
        assert!(matches!(RateExpr::parse("1..2").unwrap_err(), ParseError::BadNumber { .. }));
    }

    #[test]
    fn printing_is_stable() {
        for s in ["i+1", "2*i+4+sqrt(2)", "-i^2/(3-i)", "max(1, i^2)", "2^(i/2)", "pi*e"] {
            let once = format!("{}", RateExpr::parse(s).unwrap());
            let twice = format!("{}", RateExpr::parse(&once).unwrap());
            assert_eq!(once, twice);
        }
    }

    fn asym(s: &str) -> Asym {
        match RateExpr::parse(s).unwrap().asymptotic() {
            Some(Leading::Term(a)) => a,
            other => panic!("{s}: {other:?}"),
        }
    }

    #[test]
    fn asymptotic_forms() {
        let a = asym("2*i+3");
        assert_eq!((a.coef, a.geo, a.pow), (2.0, 1.0, 1.0));
        assert!((a.sub - 1.5).abs() < 1e-12);
        let a = asym("(i+2)/(i+1)");
        assert!((a.coef - 1.0).abs() < 1e-12 && a.pow.abs() < 1e-12 && (a.sub - 1.0).abs() < 1e-12);
        let a = asym("2^i");
        assert!((a.geo - 2.0).abs() < 1e-12 && (a.coef - 1.0).abs() < 1e-12);
        let a = asym("max(1, i^2)");
        assert_eq!(a.pow, 2.0);
        let a = asym("sqrt(i^3 + i^2)");
        assert!((a.pow - 1.5).abs() < 1e-12 && (a.sub - 0.5).abs() < 1e-12);
        assert!(RateExpr::parse("i - i").unwrap().asymptotic().is_none());
        assert!(RateExpr::parse("i^i").unwrap().asymptotic().is_none());
        assert!(RateExpr::parse("i + sqrt(i)").unwrap().asymptotic().is_none());
    }

    #[test]
    fn asymptotic_limits() {
        assert_eq!(asym("1/i").limit(), 0.0);
        assert_eq!(asym("3").limit(), 3.0);
        assert_eq!(asym("i").limit(), f64::INFINITY);
        assert!((asym("(i+1)/(2*i+5)").limit() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn shifted_back_matches_direct() {
        // (i-1)^2 + 3 = i^2 - 2i + 4
        let direct = asym("(i-1)^2+3");
        let shifted = asym("i^2+3").shifted_back();
        assert!((direct.sub - shifted.sub).abs() < 1e-12);
        assert!((direct.coef - shifted.coef).abs() < 1e-12);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use alloc::format;
    use proptest::prelude::*;

    fn arb_node() -> impl Strategy<Value = Node> {
        let leaf = prop_oneof![
            (0u32..1000).prop_map(|v| Node::Num(f64::from(v) / 8.0)),
            Just(Node::Index),
            Just(Node::Pi),
            Just(Node::E),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|x| Node::Neg(Box::new(x))),
                (inner.clone(), inner.clone(), 0usize..5).prop_map(|(l, r, k)| {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow][k];
                    Node::Bin(op, Box::new(l), Box::new(r))
                }),
                inner.clone().prop_map(|x| Node::Call(Func::Sqrt, alloc::vec![x])),
                (inner.clone(), inner).prop_map(|(a, b)| Node::Call(Func::Max, alloc::vec![a, b])),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_roundtrip(node in arb_node()) {
            let e = RateExpr { root: node };
            let printed = format!("{e}");
            let back = RateExpr::parse(&printed).unwrap();
            prop_assert_eq!(&back, &e);
            prop_assert_eq!(format!("{back}"), printed);
        }
    }
}
