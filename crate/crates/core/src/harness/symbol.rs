use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::{Smoothness, SymbolFn};

#[derive(Clone, Debug)]
enum Node {
    Const(Complex64),
    Coord(usize),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Pow(Box<Node>, u32),
    Conj(Box<Node>),
    Abs2(Box<Node>),
    /// `exp(1 − 1/(1 − |z|²/R²))` inside `|z| < R`.
    Bump(f64),
}

/// Value with its Wirtinger derivatives `∂_j` and `∂̄_j`.
struct Jet {
    v: Complex64,
    dz: Vec<Complex64>,
    dzb: Vec<Complex64>,
}

impl Jet {
    fn constant(v: Complex64, d: usize) -> Self {
        Jet { v, dz: vec![Complex64::new(0.0, 0.0); d], dzb: vec![Complex64::new(0.0, 0.0); d] }
    }
}

impl Node {
    fn holomorphic(&self) -> bool {
        match self {
            Node::Const(_) | Node::Coord(_) => true,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => a.holomorphic() && b.holomorphic(),
            Node::Neg(a) | Node::Pow(a, _) => a.holomorphic(),
            Node::Conj(_) | Node::Abs2(_) | Node::Bump(_) => false,
        }
    }

    fn eval(&self, z: &[Complex64]) -> Complex64 {
        match self {
            Node::Const(c) => *c,
            Node::Coord(j) => z[*j],
            Node::Add(a, b) => a.eval(z) + b.eval(z),
            Node::Sub(a, b) => a.eval(z) - b.eval(z),
            Node::Mul(a, b) => a.eval(z) * b.eval(z),
            Node::Neg(a) => -a.eval(z),
            Node::Pow(a, k) => a.eval(z).powu(*k),
            Node::Conj(a) => a.eval(z).conj(),
            Node::Abs2(a) => Complex64::new(a.eval(z).norm_sqr(), 0.0),
            Node::Bump(r) => Complex64::new(bump_profile(z, *r).0, 0.0),
        }
    }

    fn jet(&self, z: &[Complex64]) -> Jet {
        let d = z.len();
        match self {
            Node::Const(c) => Jet::constant(*c, d),
            Node::Coord(j) => {
                let mut out = Jet::constant(z[*j], d);
                out.dz[*j] = Complex64::new(1.0, 0.0);
                out
            }
            Node::Add(a, b) | Node::Sub(a, b) => {
                let s = if matches!(self, Node::Add(..)) { 1.0 } else { -1.0 };
                let (x, y) = (a.jet(z), b.jet(z));
                Jet {
                    v: x.v + y.v * s,
                    dz: x.dz.iter().zip(&y.dz).map(|(p, q)| p + q * s).collect(),
                    dzb: x.dzb.iter().zip(&y.dzb).map(|(p, q)| p + q * s).collect(),
                }
            }
            Node::Mul(a, b) => {
                let (x, y) = (a.jet(z), b.jet(z));
                Jet {
                    v: x.v * y.v,
                    dz: x.dz.iter().zip(&y.dz).map(|(p, q)| p * y.v + x.v * q).collect(),
                    dzb: x.dzb.iter().zip(&y.dzb).map(|(p, q)| p * y.v + x.v * q).collect(),
                }
            }
            Node::Neg(a) => {
                let x = a.jet(z);
                Jet { v: -x.v, dz: x.dz.iter().map(|p| -p).collect(), dzb: x.dzb.iter().map(|p| -p).collect() }
            }
            Node::Pow(a, k) => {
                let x = a.jet(z);
                if *k == 0 {
                    return Jet::constant(Complex64::new(1.0, 0.0), d);
                }
                let f = x.v.powu(k - 1) * (*k as f64);
                Jet { v: x.v.powu(*k), dz: x.dz.iter().map(|p| p * f).collect(), dzb: x.dzb.iter().map(|p| p * f).collect() }
            }
            Node::Conj(a) => {
                let x = a.jet(z);
                Jet { v: x.v.conj(), dz: x.dzb.iter().map(|p| p.conj()).collect(), dzb: x.dz.iter().map(|p| p.conj()).collect() }
            }
            Node::Abs2(a) => {
                // f · conj(f)
                let x = a.jet(z);
                let fc = x.v.conj();
                let dz = (0..d).map(|k| x.dz[k] * fc + x.v * x.dzb[k].conj()).collect();
                let dzb = (0..d).map(|k| x.dzb[k] * fc + x.v * x.dz[k].conj()).collect();
                Jet { v: Complex64::new(x.v.norm_sqr(), 0.0), dz, dzb }
            }
            Node::Bump(r) => {
                let (v, dv) = bump_profile(z, *r);
                Jet { v: Complex64::new(v, 0.0), dz: z.iter().map(|c| c.conj() * dv).collect(), dzb: z.iter().map(|c| c * dv).collect() }
            }
        }
    }
}

/// Bump value and its derivative with respect to `|z|²`.
fn bump_profile(z: &[Complex64], r: f64) -> (f64, f64) {
    let r2 = r * r;
    let s: f64 = z.iter().map(|c| c.norm_sqr()).sum::<f64>() / r2;
    if s >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - s;
    let v = (1.0 - 1.0 / q).exp();
    (v, -v / (q * q * r2))
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, at: usize, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { position: at, message: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += self.src[self.pos..].chars().next().unwrap().len_utf8();
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            self.err(self.pos, format!("expected '{c}'"))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some('-') => {
                    self.pos += 1;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some('/') => return self.err(self.pos, "division is not supported"),
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek() == Some('-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            let digits: String = self.src[start..].chars().take_while(|c| c.is_ascii_digit()).collect();
            if digits.is_empty() {
                return self.err(start, "expected a non-negative integer exponent");
            }
            self.pos += digits.len();
            let k: u32 = match digits.parse() {
                Ok(k) if k <= 64 => k,
                _ => return self.err(start, "exponent too large"),
            };
            return Ok(Node::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let mut len = rest.chars().take_while(|c| c.is_ascii_digit() || *c == '.').count();
        // exponent part
        let tail = &rest[len..];
        if tail.starts_with(['e', 'E']) {
            let after = &tail[1..];
            let sign = usize::from(after.starts_with(['+', '-']));
            let digits = after[sign..].chars().take_while(|c| c.is_ascii_digit()).count();
            if digits > 0 {
                len += 1 + sign + digits;
            }
        }
        match rest[..len].parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos += len;
                Ok(v)
            }
            _ => self.err(start, "malformed number"),
        }
    }

    fn atom(&mut self) -> Result<Node> {
        let start = match self.peek() {
            Some(_) => self.pos,
            None => return self.err(self.pos, "unexpected end of expression"),
        };
        let c = self.src[start..].chars().next().unwrap();
        if c == '(' {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(')')?;
            return Ok(e);
        }
        if c.is_ascii_digit() || c == '.' {
            return Ok(Node::Const(Complex64::new(self.number()?, 0.0)));
        }
        if c.is_ascii_alphabetic() {
            let word: String = self.src[start..].chars().take_while(|c| c.is_ascii_alphanumeric() || *c == '_').collect();
            self.pos += word.len();
            return match word.as_str() {
                "i" => Ok(Node::Const(Complex64::new(0.0, 1.0))),
                "conj" | "abs2" => {
                    self.expect('(')?;
                    let inner = self.expr()?;
                    self.expect(')')?;
                    Ok(if word == "conj" { Node::Conj(Box::new(inner)) } else { Node::Abs2(Box::new(inner)) })
                }
                "bump" => {
                    self.expect('(')?;
                    let at = self.pos;
                    let r = self.number()?;
                    if !(r > 0.0) {
                        return self.err(at, "bump radius must be positive");
                    }
                    self.expect(')')?;
                    Ok(Node::Bump(r))
                }
                w if w.starts_with('z') && w.len() > 1 && w[1..].chars().all(|c| c.is_ascii_digit()) => {
                    let j: usize = w[1..].parse().unwrap_or(0);
                    if j == 0 || j > self.dim {
                        return self.err(start, format!("coordinate {w} out of range for dimension {}", self.dim));
                    }
                    Ok(Node::Coord(j - 1))
                }
                _ => self.err(start, format!("unknown identifier {word:?}")),
            };
        }
        self.err(start, format!("unexpected character {c:?}"))
    }
}

/// Parses a symbol over `z1..zd`, `conj(·)`, `abs2(·)`, `bump(R)`, `i`, real
/// constants, `+ - *` and integer powers `^k`. Symbols are smooth, so
/// `∂̄` is attached analytically.
pub fn parse_symbol(expr: &str, dim: usize) -> Result<SymbolFn> {
    let mut p = Parser { src: expr, pos: 0, dim };
    let ast = p.expr()?;
    p.skip_ws();
    if p.pos != expr.len() {
        return p.err(p.pos, "unexpected trailing input");
    }
    let ast = Arc::new(ast);
    let holo = ast.holomorphic();
    let (ev, dv) = (ast.clone(), ast);
    let s = SymbolFn::new(expr.trim(), Smoothness::C1, move |z| ev.eval(z)).with_dbar(move |z| dv.jet(z).dzb);
    Ok(if holo { s.holomorphic() } else { s })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn examples() {
        let z = [c(0.3, -0.2), c(0.1, 0.4)];
        let s = parse_symbol("conj(z1)", 2).unwrap();
        assert!(!s.holomorphic);
        assert_eq!(s.dbar(&z).unwrap(), vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let s = parse_symbol("z1*conj(z2)", 2).unwrap();
        assert_eq!(s.dbar(&z).unwrap(), vec![c(0.0, 0.0), z[0]]);
        let s = parse_symbol("abs2(z1)", 2).unwrap();
        assert_eq!(s.dbar(&z).unwrap(), vec![z[0], c(0.0, 0.0)]);
        assert!((s.eval(&z).re - 0.13).abs() < 1e-15);
    }

    #[test]
    fn holomorphic_detection_and_powers() {
        let s = parse_symbol("2*z1^3 - i*z2 + 0.5", 2).unwrap();
        assert!(s.holomorphic);
        let z = [c(0.2, 0.1), c(-0.3, 0.0)];
        let want = z[0].powu(3) * 2.0 - c(0.0, 1.0) * z[1] + 0.5;
        assert!((s.eval(&z) - want).norm() < 1e-15);
    }

    #[test]
    fn analytic_dbar_matches_differences() {
        let samples = vec![vec![c(0.2, 0.1), c(-0.3, 0.25)], vec![c(-0.1, 0.3), c(0.05, -0.2)]];
        for e in ["conj(z1)^2*z2 + abs2(z2 - 0.1)", "conj(z1*z2 + 1)", "bump(0.7) + abs2(conj(z1))*3e-1", "-(z1*conj(z1))^2"] {
            let s = parse_symbol(e, 2).unwrap();
            assert!(s.dbar_consistency(&samples) < 1e-5, "{e}");
        }
    }

    #[test]
    fn errors_carry_positions() {
        match parse_symbol("z1 / z2", 2) {
            Err(Error::Parse { position, message }) => {
                assert_eq!(position, 3);
                assert!(message.contains("division"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_symbol("z3", 2), Err(Error::Parse { position: 0, .. })));
        assert!(matches!(parse_symbol("conj(z1", 1), Err(Error::Parse { position: 7, .. })));
        assert!(matches!(parse_symbol("z1 +", 1), Err(Error::Parse { position: 4, .. })));
        assert!(matches!(parse_symbol("z1 z1", 1), Err(Error::Parse { position: 3, .. })));
        assert!(matches!(parse_symbol("sin(z1)", 1), Err(Error::Parse { position: 0, .. })));
    }
}
