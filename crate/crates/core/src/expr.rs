//! Arithmetic expressions over complex numbers in the variables `t` and `z`.
//!
//! Grammar (usual precedence, `^` right associative):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := ("-" | "+") unary | power
//! power   := primary ("^" unary)?
//! primary := NUMBER ["i"] | "i" | "pi" | "t" | "z" | IDENT "(" args ")" | "(" expr ")"
//! ```
//!
//! Functions: `exp sin cos sqrt ln`, `gaussian(center, width)` (in `z`),
//! `gaussian(x, center, width)`, `bump(center, halfwidth)` (in `z`) and
//! `bump(x, center, halfwidth)`. The bump is `exp(1 - 1/(1 - s²))` for
//! `|s| < 1`, `s = (x - center)/halfwidth`, and exactly zero elsewhere.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
    Ln,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(C64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    /// `body` where `|Re s| < 1`, zero elsewhere.
    Masked { s: Box<Expr>, body: Box<Expr> },
}

fn num(re: f64) -> Expr {
    Expr::Num(C64::new(re, 0.0))
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Parse(format!("unexpected trailing input in `{src}`")));
        }
        Ok(e)
    }

    pub fn constant(v: C64) -> Expr {
        Expr::Num(v)
    }

    pub fn as_constant(&self) -> Option<C64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == C64::new(0.0, 0.0))
    }

    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(var),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.depends_on(var) || b.depends_on(var)
            }
            Expr::Masked { s, body } => s.depends_on(var) || body.depends_on(var),
        }
    }

    pub fn eval(&self, t: f64, z: f64) -> C64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::T) => C64::new(t, 0.0),
            Expr::Var(Var::Z) => C64::new(z, 0.0),
            Expr::Neg(a) => -a.eval(t, z),
            Expr::Add(a, b) => a.eval(t, z) + b.eval(t, z),
            Expr::Sub(a, b) => a.eval(t, z) - b.eval(t, z),
            Expr::Mul(a, b) => a.eval(t, z) * b.eval(t, z),
            Expr::Div(a, b) => a.eval(t, z) / b.eval(t, z),
            Expr::Pow(a, b) => {
                let base = a.eval(t, z);
                let ex = b.eval(t, z);
                if ex.im == 0.0 && ex.re.fract() == 0.0 && ex.re.abs() < 64.0 {
                    base.powi(ex.re as i32)
                } else if base.im == 0.0 && base.re >= 0.0 && ex.im == 0.0 {
                    C64::new(base.re.powf(ex.re), 0.0)
                } else {
                    base.powc(ex)
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval(t, z);
                match f {
                    Func::Exp => x.exp(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Sqrt => x.sqrt(),
                    Func::Ln => x.ln(),
                }
            }
            Expr::Masked { s, body } => {
                if s.eval(t, z).re.abs() < 1.0 {
                    body.eval(t, z)
                } else {
                    C64::new(0.0, 0.0)
                }
            }
        }
    }

    pub fn eval_real(&self, t: f64, z: f64) -> f64 {
        self.eval(t, z).re
    }

    /// Symbolic partial derivative.
    pub fn diff(&self, var: Var) -> Expr {
        if !self.depends_on(var) {
            return num(0.0);
        }
        match self {
            Expr::Num(_) => num(0.0),
            Expr::Var(v) => num(if *v == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.diff(var)),
            Expr::Add(a, b) => add(a.diff(var), b.diff(var)),
            Expr::Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Expr::Mul(a, b) => add(
                mul(a.diff(var), (**b).clone()),
                mul((**a).clone(), b.diff(var)),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.diff(var), (**b).clone()),
                    mul((**a).clone(), b.diff(var)),
                ),
                pow((**b).clone(), num(2.0)),
            ),
            Expr::Pow(a, b) => {
                if let Some(p) = b.as_constant() {
                    mul(
                        mul(Expr::Num(p), pow((**a).clone(), Expr::Num(p - 1.0))),
                        a.diff(var),
                    )
                } else {
                    // d(a^b) = a^b (b' ln a + b a'/a)
                    mul(
                        self.clone(),
                        add(
                            mul(b.diff(var), call(Func::Ln, (**a).clone())),
                            div(mul((**b).clone(), a.diff(var)), (**a).clone()),
                        ),
                    )
                }
            }
            Expr::Call(f, a) => {
                let inner = a.diff(var);
                let outer = match f {
                    Func::Exp => self.clone(),
                    Func::Sin => call(Func::Cos, (**a).clone()),
                    Func::Cos => neg(call(Func::Sin, (**a).clone())),
                    Func::Sqrt => div(num(0.5), self.clone()),
                    Func::Ln => div(num(1.0), (**a).clone()),
                };
                mul(outer, inner)
            }
            Expr::Masked { s, body } => {
                let d = body.diff(var);
                if d.is_zero() {
                    d
                } else {
                    Expr::Masked {
                        s: s.clone(),
                        body: Box::new(d),
                    }
                }
            }
        }
    }

    /// `order`-fold derivative in `var`.
    pub fn diff_n(&self, var: Var, order: usize) -> Expr {
        (0..order).fold(self.clone(), |e, _| e.diff(var))
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        _ if a.is_zero() => b,
        _ if b.is_zero() => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        _ if b.is_zero() => a,
        _ if a.is_zero() => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    let one = C64::new(1.0, 0.0);
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        _ if a.is_zero() || b.is_zero() => num(0.0),
        (Expr::Num(x), _) if *x == one => b,
        (_, Expr::Num(y)) if *y == one => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x / y),
        _ if a.is_zero() => num(0.0),
        (_, Expr::Num(y)) if *y == C64::new(1.0, 0.0) => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Expr::Num(p)) if *p == C64::new(1.0, 0.0) => a,
        (_, Expr::Num(p)) if *p == C64::new(0.0, 0.0) => num(1.0),
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

fn gaussian(x: Expr, center: Expr, width: Expr) -> Expr {
    // exp(-(x - c)^2 / (2 w^2))
    let d = sub(x, center);
    call(
        Func::Exp,
        neg(div(pow(d, num(2.0)), mul(num(2.0), pow(width, num(2.0))))),
    )
}

fn bump(x: Expr, center: Expr, halfwidth: Expr) -> Expr {
    let s = div(sub(x, center), halfwidth);
    let body = call(
        Func::Exp,
        sub(num(1.0), div(num(1.0), sub(num(1.0), pow(s.clone(), num(2.0))))),
    );
    Expr::Masked {
        s: Box::new(s),
        body: Box::new(body),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text
                .parse()
                .map_err(|_| Error::Parse(format!("bad number `{text}`")))?;
            let imaginary = i < chars.len()
                && chars[i] == 'i'
                && !(i + 1 < chars.len() && (chars[i + 1].is_alphanumeric() || chars[i + 1] == '_'));
            if imaginary {
                i += 1;
                out.push(Tok::Imag(v));
            } else {
                out.push(Tok::Num(v));
            }
        } else if ch.is_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^(),".contains(ch) {
            out.push(Tok::Op(ch));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character `{ch}`")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Tok::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Parse(format!("expected `{op}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' { add(lhs, rhs) } else { sub(lhs, rhs) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' { mul(lhs, rhs) } else { div(lhs, rhs) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(neg(self.unary()?))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let ex = self.unary()?;
            return Ok(pow(base, ex));
        }
        Ok(base)
    }

    fn args(&mut self) -> Result<Vec<Expr>> {
        self.expect('(')?;
        let mut args = vec![self.expr()?];
        while self.peek_op() == Some(',') {
            self.pos += 1;
            args.push(self.expr()?);
        }
        self.expect(')')?;
        Ok(args)
    }

    fn primary(&mut self) -> Result<Expr> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| Error::Parse("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(num(v)),
            Tok::Imag(v) => Ok(Expr::Num(C64::new(0.0, v))),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Op(c) => Err(Error::Parse(format!("unexpected `{c}`"))),
            Tok::Ident(name) => match name.as_str() {
                "i" => Ok(Expr::Num(C64::new(0.0, 1.0))),
                "pi" => Ok(num(std::f64::consts::PI)),
                "t" => Ok(Expr::Var(Var::T)),
                "z" => Ok(Expr::Var(Var::Z)),
                "exp" | "sin" | "cos" | "sqrt" | "ln" => {
                    let f = match name.as_str() {
                        "exp" => Func::Exp,
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        "sqrt" => Func::Sqrt,
                        _ => Func::Ln,
                    };
                    let mut a = self.args()?;
                    if a.len() != 1 {
                        return Err(Error::Parse(format!("`{name}` takes one argument")));
                    }
                    Ok(call(f, a.remove(0)))
                }
                "gaussian" | "bump" => {
                    let mut a = self.args()?;
                    let (x, c, w) = match a.len() {
                        2 => {
                            let w = a.pop().unwrap();
                            let c = a.pop().unwrap();
                            (Expr::Var(Var::Z), c, w)
                        }
                        3 => {
                            let w = a.pop().unwrap();
                            let c = a.pop().unwrap();
                            (a.pop().unwrap(), c, w)
                        }
                        _ => return Err(Error::Parse(format!("`{name}` takes 2 or 3 arguments"))),
                    };
                    Ok(if name == "gaussian" { gaussian(x, c, w) } else { bump(x, c, w) })
                }
                other => Err(Error::Parse(format!("unknown identifier `{other}`"))),
            },
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if v.im == 0.0 => write!(f, "{}", v.re),
            Expr::Num(v) => write!(f, "({}+{}i)", v.re, v.im),
            Expr::Var(Var::T) => write!(f, "t"),
            Expr::Var(Var::Z) => write!(f, "z"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a}+{b})"),
            Expr::Sub(a, b) => write!(f, "({a}-{b})"),
            Expr::Mul(a, b) => write!(f, "({a}*{b})"),
            Expr::Div(a, b) => write!(f, "({a}/{b})"),
            Expr::Pow(a, b) => write!(f, "({a}^{b})"),
            Expr::Call(func, a) => {
                let name = match func {
                    Func::Exp => "exp",
                    Func::Sin => "sin",
                    Func::Cos => "cos",
                    Func::Sqrt => "sqrt",
                    Func::Ln => "ln",
                };
                write!(f, "{name}({a})")
            }
            Expr::Masked { s, body } => write!(f, "mask({s}; {body})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(src: &str, t: f64, z: f64) -> C64 {
        Expr::parse(src).unwrap().eval(t, z)
    }

    #[test]
    fn literals_and_precedence() {
        assert_eq!(ev("1+2*3", 0.0, 0.0), C64::new(7.0, 0.0));
        assert_eq!(ev("2^3^2", 0.0, 0.0), C64::new(512.0, 0.0));
        assert_eq!(ev("-2^2", 0.0, 0.0), C64::new(-4.0, 0.0));
        assert_eq!(ev("1.5+0.25i", 0.0, 0.0), C64::new(1.5, 0.25));
        assert_eq!(ev("i*i", 0.0, 0.0), C64::new(-1.0, 0.0));
        assert_eq!(ev("2e-1*z + t", 2.0, 5.0), C64::new(3.0, 0.0));
    }

    #[test]
    fn gaussian_and_bump() {
        let g = ev("gaussian(1, 0.5)", 0.0, 1.5);
        assert!((g.re - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(ev("bump(t, 1, 0.5)", 1.0, 0.0), C64::new(1.0, 0.0));
        assert_eq!(ev("bump(1, 0.5)", 0.0, 1.5), C64::new(0.0, 0.0));
        assert_eq!(ev("bump(1, 0.5)", 0.0, 0.2), C64::new(0.0, 0.0));
    }

    #[test]
    fn errors() {
        assert!(Expr::parse("1+").is_err());
        assert!(Expr::parse("foo(1)").is_err());
        assert!(Expr::parse("(1").is_err());
        assert!(Expr::parse("1 2").is_err());
        assert!(Expr::parse("gaussian(1)").is_err());
    }

    #[test]
    fn symbolic_derivative_of_gaussian() {
        let e = Expr::parse("gaussian(0.3, 0.2)").unwrap();
        let d = e.diff(Var::Z);
        let z = 0.1;
        let exact = -(z - 0.3) / 0.04 * (-(z - 0.3f64).powi(2) / 0.08).exp();
        assert!((d.eval(0.0, z).re - exact).abs() < 1e-13);
        assert!(e.diff(Var::T).is_zero());
    }

    proptest! {
        #[test]
        fn symbolic_matches_central_differences(z in -0.8f64..0.8, t in 0.0f64..1.0) {
            let e = Expr::parse("exp(t)*sin(2*z) + bump(z, 0, 1)*(1+2i) + z^3/(2+t) + sqrt(1+z^2)").unwrap();
            let h = 1e-5;
            for var in [Var::T, Var::Z] {
                let d = e.diff(var).eval(t, z);
                let (dt, dz) = if var == Var::T { (h, 0.0) } else { (0.0, h) };
                let fd = (e.eval(t + dt, z + dz) - e.eval(t - dt, z - dz)) / (2.0 * h);
                prop_assert!((d - fd).norm() < 1e-6 * (1.0 + d.norm()));
            }
        }
    }
}
