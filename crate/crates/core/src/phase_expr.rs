//! Phase expressions such as `"pi/8"`, `"3*pi/2 - 0.25"` or `"phi1 + pi"`.
//!
//! Grammar: numbers, `pi`, the variables `phi1` and `phi2`, binary `+ - * /`,
//! unary minus and parentheses. Constant sub-expressions are folded exactly
//! as `a + b·π` with rational `a`, `b`, so `"pi/8"` always evaluates to the
//! same double. Anything that leaves that form (π², overflow) falls back to
//! floating point.

use crate::error::{Error, Result};
use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Zero};
use std::f64::consts::PI;
use std::fmt;

type Q = Ratio<i64>;

/// A constant in `a + b·π` form, or a plain double when that form is lost.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Constant {
    PiRational { a: Q, b: Q },
    Float(f64),
}

fn q_to_f64(q: Q) -> f64 {
    let n = *q.numer() as f64;
    let d = *q.denom() as f64;
    n / d
}

impl Constant {
    pub fn rational(a: Q) -> Self {
        Constant::PiRational { a, b: Q::zero() }
    }

    pub fn pi() -> Self {
        Constant::PiRational {
            a: Q::zero(),
            b: Q::from_integer(1),
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Constant::PiRational { a, b } => {
                let pi_part = if b.is_zero() {
                    0.0
                } else {
                    (*b.numer() as f64 * PI) / *b.denom() as f64
                };
                if a.is_zero() {
                    pi_part
                } else {
                    q_to_f64(a) + pi_part
                }
            }
            Constant::Float(x) => x,
        }
    }

    fn parts(&self) -> Option<(Q, Q)> {
        match *self {
            Constant::PiRational { a, b } => Some((a, b)),
            Constant::Float(_) => None,
        }
    }

    fn combine(self, other: Constant, op: BinOp) -> Constant {
        let exact = self.parts().zip(other.parts()).and_then(|((a, b), (c, d))| match op {
            BinOp::Add => Some((a.checked_add(&c)?, b.checked_add(&d)?)),
            BinOp::Sub => Some((a.checked_sub(&c)?, b.checked_sub(&d)?)),
            BinOp::Mul => {
                if b.is_zero() {
                    Some((a.checked_mul(&c)?, a.checked_mul(&d)?))
                } else if d.is_zero() {
                    Some((a.checked_mul(&c)?, b.checked_mul(&c)?))
                } else {
                    None
                }
            }
            BinOp::Div => {
                if d.is_zero() && !c.is_zero() {
                    Some((a.checked_div(&c)?, b.checked_div(&c)?))
                } else if c.is_zero() && !d.is_zero() && a.is_zero() {
                    Some((b.checked_div(&d)?, Q::zero()))
                } else {
                    None
                }
            }
        });
        match exact {
            Some((a, b)) => Constant::PiRational { a, b },
            None => Constant::Float(op.apply(self.value(), other.value())),
        }
    }

    fn negate(self) -> Constant {
        match self {
            Constant::PiRational { a, b } => Constant::PiRational { a: -a, b: -b },
            Constant::Float(x) => Constant::Float(-x),
        }
    }

    /// Reinterpret a value given in degrees as radians.
    pub fn degrees_to_radians(self) -> Constant {
        let factor = Constant::PiRational {
            a: Q::zero(),
            b: Q::new(1, 180),
        };
        self.combine(factor, BinOp::Mul)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn apply(self, x: f64, y: f64) -> f64 {
        match self {
            BinOp::Add => x + y,
            BinOp::Sub => x - y,
            BinOp::Mul => x * y,
            BinOp::Div => x / y,
        }
    }

    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variable {
    Phi1,
    Phi2,
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Const(Constant),
    Var(Variable),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
}

impl Node {
    fn eval(&self, phi1: f64, phi2: f64) -> f64 {
        match self {
            Node::Const(c) => c.value(),
            Node::Var(Variable::Phi1) => phi1,
            Node::Var(Variable::Phi2) => phi2,
            Node::Neg(x) => -x.eval(phi1, phi2),
            Node::Bin(op, l, r) => op.apply(l.eval(phi1, phi2), r.eval(phi1, phi2)),
        }
    }

    fn uses(&self, v: Variable) -> bool {
        match self {
            Node::Const(_) => false,
            Node::Var(w) => *w == v,
            Node::Neg(x) => x.uses(v),
            Node::Bin(_, l, r) => l.uses(v) || r.uses(v),
        }
    }
}

/// A parsed phase expression.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseExpr {
    root: Node,
}

impl PhaseExpr {
    pub fn parse(text: &str) -> Result<PhaseExpr> {
        let tokens = lex(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(expr_error(text, "unexpected trailing input"));
        }
        Ok(PhaseExpr { root })
    }

    pub fn constant(c: Constant) -> PhaseExpr {
        PhaseExpr { root: Node::Const(c) }
    }

    /// The folded constant, if the expression has no variables.
    pub fn as_constant(&self) -> Option<Constant> {
        match self.root {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn uses(&self, v: Variable) -> bool {
        self.root.uses(v)
    }

    pub fn eval(&self, phi1: f64, phi2: f64) -> f64 {
        self.root.eval(phi1, phi2)
    }
}

/// Evaluate a constant expression to radians.
pub fn eval_constant(text: &str) -> Result<f64> {
    constant_of(text).map(|c| c.value())
}

/// Parse an expression that must not mention `phi1`/`phi2`.
pub fn constant_of(text: &str) -> Result<Constant> {
    PhaseExpr::parse(text)?
        .as_constant()
        .ok_or_else(|| expr_error(text, "expected a constant, found a phase variable"))
}

fn expr_error(text: &str, message: &str) -> Error {
    Error::InvalidArgument(format!("bad phase expression {text:?}: {message}"))
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Number(Constant),
    Ident(String),
    Op(char),
    Open,
    Close,
}

fn parse_number(lit: &str) -> Option<Constant> {
    let (mantissa, exponent) = match lit.find(['e', 'E']) {
        Some(i) => (&lit[..i], lit[i + 1..].parse::<i32>().ok()?),
        None => (lit, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let float = || lit.parse::<f64>().ok().map(Constant::Float);
    let digits: String = format!("{int_part}{frac_part}");
    let Ok(m) = digits.parse::<i64>() else {
        return float();
    };
    let scale = exponent - frac_part.len() as i32;
    let ten = Q::from_integer(10);
    let mut q = Q::from_integer(m);
    for _ in 0..scale.unsigned_abs() {
        let next = if scale > 0 { q.checked_mul(&ten) } else { q.checked_div(&ten) };
        match next {
            Some(n) => q = n,
            None => return float(),
        }
    }
    Some(Constant::rational(q))
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let n = parse_number(&lit).ok_or_else(|| expr_error(text, &format!("bad number {lit:?}")))?;
            out.push(Token::Number(n));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' => Token::Op(c),
                '\u{2212}' => Token::Op('-'),
                '(' => Token::Open,
                ')' => Token::Close,
                _ => return Err(expr_error(text, &format!("unexpected character {c:?}"))),
            };
            out.push(tok);
            i += 1;
        }
    }
    if out.is_empty() {
        return Err(expr_error(text, "empty expression"));
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

fn fold(op: BinOp, l: Node, r: Node) -> Node {
    match (&l, &r) {
        (Node::Const(a), Node::Const(b)) => Node::Const(a.combine(*b, op)),
        _ => Node::Bin(op, Box::new(l), Box::new(r)),
    }
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn error(&self, message: &str) -> Error {
        Error::InvalidArgument(format!("bad phase expression at token {}: {message}", self.pos + 1))
    }

    fn expr(&mut self) -> Result<Node> {
        let mut node = self.term()?;
        while let Some(Token::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            node = fold(op, node, rhs);
        }
        Ok(node)
    }

    fn term(&mut self) -> Result<Node> {
        let mut node = self.unary()?;
        while let Some(Token::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            if op == BinOp::Div && rhs == Node::Const(Constant::rational(Q::zero())) {
                return Err(self.error("division by zero"));
            }
            node = fold(op, node, rhs);
        }
        Ok(node)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(Token::Op('-')) => {
                self.pos += 1;
                Ok(match self.unary()? {
                    Node::Const(c) => Node::Const(c.negate()),
                    other => Node::Neg(Box::new(other)),
                })
            }
            Some(Token::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Node> {
        let tok = self.peek().cloned().ok_or_else(|| self.error("unexpected end"))?;
        self.pos += 1;
        match tok {
            Token::Number(c) => Ok(Node::Const(c)),
            Token::Ident(name) => match name.as_str() {
                "pi" | "PI" | "Pi" => Ok(Node::Const(Constant::pi())),
                "phi1" => Ok(Node::Var(Variable::Phi1)),
                "phi2" => Ok(Node::Var(Variable::Phi2)),
                _ => Err(self.error(&format!("unknown name {name:?}"))),
            },
            Token::Open => {
                let inner = self.expr()?;
                match self.peek() {
                    Some(Token::Close) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(self.error("missing ')'")),
                }
            }
            Token::Op(c) => Err(self.error(&format!("unexpected operator {c}"))),
            Token::Close => Err(self.error("unexpected ')'")),
        }
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::PiRational { a, b } => {
                let pi_term = |f: &mut fmt::Formatter<'_>, b: Q| match (*b.numer(), *b.denom()) {
                    (1, 1) => write!(f, "pi"),
                    (n, 1) => write!(f, "{n}*pi"),
                    (1, d) => write!(f, "pi/{d}"),
                    (n, d) => write!(f, "{n}*pi/{d}"),
                };
                match (a.is_zero(), b.is_zero()) {
                    (_, true) => write!(f, "{a}"),
                    (true, false) => pi_term(f, *b),
                    (false, false) => {
                        write!(f, "{a} + ")?;
                        pi_term(f, *b)
                    }
                }
            }
            Constant::Float(x) => write!(f, "{x}"),
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) => write!(f, "({c})"),
            Node::Var(Variable::Phi1) => f.write_str("phi1"),
            Node::Var(Variable::Phi2) => f.write_str("phi2"),
            Node::Neg(x) => write!(f, "-({x})"),
            Node::Bin(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
        }
    }
}

impl fmt::Display for PhaseExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, TAU};

    #[test]
    fn pi_fractions_hit_library_constants() {
        assert_eq!(eval_constant("pi/8").unwrap(), FRAC_PI_8);
        assert_eq!(eval_constant("pi / 2").unwrap(), FRAC_PI_2);
        assert_eq!(eval_constant("2*pi").unwrap(), TAU);
        assert_eq!(eval_constant("pi").unwrap(), PI);
        assert_eq!(eval_constant("-pi").unwrap(), -PI);
    }

    #[test]
    fn exact_folding() {
        // 15π/8 reached two ways gives the same double
        let a = eval_constant("15*pi/8").unwrap();
        let b = eval_constant("2*pi - pi/8").unwrap();
        let c = eval_constant("(pi/8)*15").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(
            constant_of("pi/4 + pi/4").unwrap(),
            Constant::PiRational {
                a: Q::zero(),
                b: Q::new(1, 2)
            }
        );
        assert_eq!(eval_constant("0.1 + 0.2").unwrap(), 0.3);
        assert_eq!(eval_constant("1e-3").unwrap(), 0.001);
        assert_eq!(eval_constant("2.5e1").unwrap(), 25.0);
        assert_eq!(eval_constant("(3*pi)/(2*pi)").unwrap(), 1.5);
    }

    #[test]
    fn float_fallback() {
        let v = eval_constant("pi*pi").unwrap();
        assert_eq!(v, PI * PI);
        let big = eval_constant("123456789012345678901234567890").unwrap();
        assert!((big - 1.2345678901234568e29).abs() < 1e14);
    }

    #[test]
    fn degrees() {
        let c = constant_of("90").unwrap().degrees_to_radians();
        assert_eq!(c.value(), FRAC_PI_2);
        let c = constant_of("22.5").unwrap().degrees_to_radians();
        assert_eq!(c.value(), FRAC_PI_8);
    }

    #[test]
    fn variables() {
        let e = PhaseExpr::parse("phi1 + pi/2").unwrap();
        assert!(e.uses(Variable::Phi1));
        assert!(!e.uses(Variable::Phi2));
        assert_eq!(e.eval(1.0, 0.0), 1.0 + FRAC_PI_2);
        let e = PhaseExpr::parse("-(phi2 - phi1) * 2").unwrap();
        assert_eq!(e.eval(1.0, 3.0), -4.0);
        assert!(constant_of("phi1").is_err());
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "pi/", "2**pi", "(pi", "pi)", "tau", "1/0", "3 $ 4", "1..2", "."] {
            assert!(PhaseExpr::parse(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn display_of_constants() {
        assert_eq!(constant_of("3*pi/2").unwrap().to_string(), "3*pi/2");
        assert_eq!(constant_of("1/2 + pi").unwrap().to_string(), "1/2 + pi");
        assert_eq!(constant_of("0.25").unwrap().to_string(), "1/4");
    }
}
