//! Arithmetic over the variables `d` (dimension) and `i` (1-based
//! coordinate index), used for per-coordinate parameter formulas such as
//! `2*sqrt(d-i+1)`. Every number is an `f64`.
//!
//! Supported: `+ - * / ^` (right-associative `^`), unary minus, parentheses,
//! and the functions `sqrt ln exp abs floor ceil min max mod`.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        if c.is_whitespace() {
            k += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_digit() || chars[k] == '.') {
                k += 1;
            }
            // exponent suffix such as 1e-5
            if k < chars.len() && (chars[k] == 'e' || chars[k] == 'E') {
                let mut j = k + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    k = j;
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            let text: String = chars[start..k].iter().collect();
            let v = text
                .parse()
                .map_err(|_| Error::Format(format!("bad number {text:?} in {src:?}")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_') {
                k += 1;
            }
            out.push(Tok::Ident(chars[start..k].iter().collect()));
        } else if "+-*/^(),".contains(c) {
            out.push(Tok::Op(c));
            k += 1;
        } else {
            return Err(Error::Format(format!("unexpected {c:?} in {src:?}")));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
enum Node {
    Num(f64),
    Var(String),
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(String, Vec<Node>),
}

struct Parser<'a> {
    toks: &'a [Tok],
    pos: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn err(&self, what: &str) -> Error {
        Error::Format(format!("{what} in expression {:?}", self.src))
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op(c)) if *c == '+' || *c == '-' => *c,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op(c)) if *c == '*' || *c == '/' => *c,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Node::Bin('^', Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if !self.eat('(') {
                    return Ok(Node::Var(name));
                }
                let mut args = vec![self.expr()?];
                while self.eat(',') {
                    args.push(self.expr()?);
                }
                if !self.eat(')') {
                    return Err(self.err("missing `)`"));
                }
                Ok(Node::Call(name, args))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("missing `)`"));
                }
                Ok(inner)
            }
            _ => Err(self.err("expected a number, variable or `(`")),
        }
    }
}

/// A parsed formula, evaluated once per coordinate.
#[derive(Clone, Debug)]
pub struct Formula {
    src: String,
    root: Node,
}

impl Formula {
    pub fn parse(src: &str) -> Result<Self> {
        let toks = tokenize(src)?;
        let mut p = Parser {
            toks: &toks,
            pos: 0,
            src,
        };
        let root = p.expr()?;
        if p.pos != toks.len() {
            return Err(p.err("trailing input"));
        }
        let f = Formula {
            src: src.to_string(),
            root,
        };
        // surface unknown names and arities at parse time
        f.eval(1.0, 1.0)?;
        Ok(f)
    }

    pub fn eval(&self, d: f64, i: f64) -> Result<f64> {
        eval(&self.root, d, i, &self.src)
    }

    /// Values at `i = 1..=d`.
    pub fn vector(&self, d: usize) -> Result<Vec<f64>> {
        (1..=d).map(|i| self.eval(d as f64, i as f64)).collect()
    }
}

fn eval(node: &Node, d: f64, i: f64, src: &str) -> Result<f64> {
    let bad = |m: String| Error::Format(format!("{m} in expression {src:?}"));
    Ok(match node {
        Node::Num(v) => *v,
        Node::Var(name) => match name.as_str() {
            "d" => d,
            "i" => i,
            other => return Err(bad(format!("unknown variable `{other}`"))),
        },
        Node::Neg(a) => -eval(a, d, i, src)?,
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, d, i, src)?, eval(b, d, i, src)?);
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                '/' => a / b,
                _ => a.powf(b),
            }
        }
        Node::Call(name, args) => {
            let v: Vec<f64> = args
                .iter()
                .map(|a| eval(a, d, i, src))
                .collect::<Result<_>>()?;
            let unary = |f: fn(f64) -> f64| -> Result<f64> {
                match v.as_slice() {
                    [x] => Ok(f(*x)),
                    _ => Err(bad(format!("`{name}` takes one argument"))),
                }
            };
            let binary = |f: fn(f64, f64) -> f64| -> Result<f64> {
                match v.as_slice() {
                    [x, y] => Ok(f(*x, *y)),
                    _ => Err(bad(format!("`{name}` takes two arguments"))),
                }
            };
            match name.as_str() {
                "sqrt" => unary(f64::sqrt)?,
                "ln" => unary(f64::ln)?,
                "exp" => unary(f64::exp)?,
                "abs" => unary(f64::abs)?,
                "floor" => unary(f64::floor)?,
                "ceil" => unary(f64::ceil)?,
                "min" => binary(f64::min)?,
                "max" => binary(f64::max)?,
                "mod" => binary(f64::rem_euclid)?,
                other => return Err(bad(format!("unknown function `{other}`"))),
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(src: &str, d: f64, i: f64) -> f64 {
        Formula::parse(src).unwrap().eval(d, i).unwrap()
    }

    #[test]
    fn formulas() {
        assert_eq!(at("2*sqrt(d-i+1)", 100.0, 1.0), 20.0);
        assert_eq!(at("2*sqrt(d-i+1)", 100.0, 100.0), 2.0);
        assert_eq!(at("i/2", 10.0, 3.0), 1.5);
        assert_eq!(at("1/4", 1.0, 1.0), 0.25);
        assert_eq!(at("2^3^2", 1.0, 1.0), 512.0);
        assert_eq!(at("-2^2", 1.0, 1.0), -4.0);
        assert_eq!(at("-i", 5.0, 3.0), -3.0);
        assert_eq!(at("1e-5 + 2.5E2", 1.0, 1.0), 250.00001);
        assert_eq!(at("(11-ceil(10*i/d))^2", 20.0, 3.0), 81.0);
        assert_eq!(at("mod(i-1, 3) + max(1, min(2, 5))", 9.0, 5.0), 3.0);
        assert_eq!(Formula::parse("i").unwrap().vector(3).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn rejects_garbage() {
        for src in ["", "2*", "(1", "x+1", "foo(1)", "sqrt(1,2)", "1 2", "3 $ 4"] {
            assert!(Formula::parse(src).is_err(), "{src}");
        }
    }
}
