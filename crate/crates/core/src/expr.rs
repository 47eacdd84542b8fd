//! Arithmetic expression language for user-defined vector fields.
//!
//! Expressions are built from the variables `x`, `y`, `z`, named constants,
//! numeric literals, the operators `+ - * / ^` (with unary minus), parentheses
//! and the functions `sin`, `cos`, `exp`, `sqrt`. `^` is right-associative.

use std::collections::HashMap;
use std::fmt;

/// Position of a token in the source text, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Parse error with source location.
#[derive(Debug, Clone, thiserror::Error)]
#[error("parse error at {pos}: {msg}")]
pub struct ParseError {
    pub pos: Pos,
    pub msg: String,
}

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
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    pos: Pos,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '+' | '-' | '*' | '/' | '^' | '(' | ')' => {
                chars.next();
                col += 1;
                let tok = match c {
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '^' => Tok::Caret,
                    '(' => Tok::LParen,
                    _ => Tok::RParen,
                };
                out.push(Spanned { tok, pos });
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() || d == '.' {
                        s.push(d);
                        chars.next();
                        col += 1;
                    } else if (d == 'e' || d == 'E')
                        && !s.is_empty()
                        && s.chars().all(|k| k.is_ascii_digit() || k == '.')
                    {
                        // exponent part, optionally signed
                        s.push(d);
                        chars.next();
                        col += 1;
                        if let Some(&sg) = chars.peek() {
                            if sg == '+' || sg == '-' {
                                s.push(sg);
                                chars.next();
                                col += 1;
                            }
                        }
                    } else {
                        break;
                    }
                }
                let v: f64 = s
                    .parse()
                    .map_err(|_| ParseError { pos, msg: format!("bad number literal `{s}`") })?;
                out.push(Spanned { tok: Tok::Num(v), pos });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        s.push(d);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                out.push(Spanned { tok: Tok::Ident(s), pos });
            }
            other => {
                return Err(ParseError { pos, msg: format!("unexpected character `{other}`") });
            }
        }
    }
    Ok(out)
}

/// A compiled scalar expression over (x, y, z) and named constants.
#[derive(Debug, Clone)]
pub enum Expr {
    Const(f64),
    Var(u8), // 0 = x, 1 = y, 2 = z
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Sqrt(Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: f64, y: f64, z: f64) -> f64 {
        match self {
            Expr::Const(v) => *v,
            Expr::Var(0) => x,
            Expr::Var(1) => y,
            Expr::Var(_) => z,
            Expr::Neg(a) => -a.eval(x, y, z),
            Expr::Add(a, b) => a.eval(x, y, z) + b.eval(x, y, z),
            Expr::Sub(a, b) => a.eval(x, y, z) - b.eval(x, y, z),
            Expr::Mul(a, b) => a.eval(x, y, z) * b.eval(x, y, z),
            Expr::Div(a, b) => a.eval(x, y, z) / b.eval(x, y, z),
            Expr::Pow(a, b) => a.eval(x, y, z).powf(b.eval(x, y, z)),
            Expr::Sin(a) => a.eval(x, y, z).sin(),
            Expr::Cos(a) => a.eval(x, y, z).cos(),
            Expr::Exp(a) => a.eval(x, y, z).exp(),
            Expr::Sqrt(a) => a.eval(x, y, z).sqrt(),
        }
    }
}

struct Parser<'a> {
    toks: &'a [Spanned],
    at: usize,
    consts: &'a HashMap<String, f64>,
    end: Pos,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|s| &s.tok)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.at).map(|s| s.pos).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<&Spanned> {
        let s = self.toks.get(self.at);
        self.at += 1;
        s
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError { pos: self.pos(), msg: msg.into() }
    }

    // precedence climbing: + - (1), * / (2), unary minus (3), ^ (4, right)
    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.atom()?;
        loop {
            let (op, bp) = match self.peek() {
                Some(Tok::Plus) => (Tok::Plus, 1),
                Some(Tok::Minus) => (Tok::Minus, 1),
                Some(Tok::Star) => (Tok::Star, 2),
                Some(Tok::Slash) => (Tok::Slash, 2),
                Some(Tok::Caret) => (Tok::Caret, 4),
                _ => break,
            };
            if bp < min_bp {
                break;
            }
            self.bump();
            // right-associative for ^, left for the rest
            let rhs = if op == Tok::Caret { self.expr(bp)? } else { self.expr(bp + 1)? };
            lhs = match op {
                Tok::Plus => Expr::Add(Box::new(lhs), Box::new(rhs)),
                Tok::Minus => Expr::Sub(Box::new(lhs), Box::new(rhs)),
                Tok::Star => Expr::Mul(Box::new(lhs), Box::new(rhs)),
                Tok::Slash => Expr::Div(Box::new(lhs), Box::new(rhs)),
                _ => Expr::Pow(Box::new(lhs), Box::new(rhs)),
            };
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.bump().map(|s| s.tok.clone()) {
            Some(Tok::Num(v)) => Ok(Expr::Const(v)),
            Some(Tok::Minus) => {
                let inner = self.expr(3)?;
                Ok(Expr::Neg(Box::new(inner)))
            }
            Some(Tok::LParen) => {
                let inner = self.expr(0)?;
                match self.bump().map(|s| s.tok.clone()) {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(ParseError { pos, msg: "unclosed parenthesis".into() }),
                }
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "x" => Ok(Expr::Var(0)),
                "y" => Ok(Expr::Var(1)),
                "z" => Ok(Expr::Var(2)),
                "sin" | "cos" | "exp" | "sqrt" => {
                    match self.bump().map(|s| s.tok.clone()) {
                        Some(Tok::LParen) => {}
                        _ => {
                            return Err(ParseError {
                                pos,
                                msg: format!("function `{name}` requires parentheses"),
                            })
                        }
                    }
                    let arg = Box::new(self.expr(0)?);
                    match self.bump().map(|s| s.tok.clone()) {
                        Some(Tok::RParen) => {}
                        _ => return Err(ParseError { pos, msg: "unclosed parenthesis".into() }),
                    }
                    Ok(match name.as_str() {
                        "sin" => Expr::Sin(arg),
                        "cos" => Expr::Cos(arg),
                        "exp" => Expr::Exp(arg),
                        _ => Expr::Sqrt(arg),
                    })
                }
                "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                other => {
                    if let Some(&v) = self.consts.get(other) {
                        Ok(Expr::Const(v))
                    } else {
                        Err(ParseError { pos, msg: format!("unknown identifier `{other}`") })
                    }
                }
            },
            _ => Err(ParseError { pos, msg: "expected expression".into() }),
        }
    }
}

/// Parse a single expression with the given named constants.
pub fn parse(src: &str, consts: &HashMap<String, f64>) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let last_line = src.lines().count().max(1) as u32;
    let end = Pos { line: last_line, col: src.lines().last().map(|l| l.len() + 1).unwrap_or(1) as u32 };
    let mut p = Parser { toks: &toks, at: 0, consts, end };
    let e = p.expr(0)?;
    if p.at != toks.len() {
        return Err(p.err("trailing input after expression"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, x: f64, y: f64, z: f64) -> f64 {
        parse(src, &HashMap::new()).unwrap().eval(x, y, z)
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(eval("1 + 2 * 3", 0.0, 0.0, 0.0), 7.0);
        assert_eq!(eval("(1 + 2) * 3", 0.0, 0.0, 0.0), 9.0);
        assert_eq!(eval("2 ^ 3 ^ 2", 0.0, 0.0, 0.0), 512.0); // right-assoc
        assert_eq!(eval("-x^2", 2.0, 0.0, 0.0), -4.0);
        assert_eq!(eval("6 / 3 / 2", 0.0, 0.0, 0.0), 1.0); // left-assoc
    }

    #[test]
    fn functions_and_constants() {
        let mut consts = HashMap::new();
        consts.insert("c".to_string(), -1.5);
        let e = parse("c * z + sin(pi * x)", &consts).unwrap();
        assert!((e.eval(0.5, 0.0, 2.0) - (-3.0 + 1.0)).abs() < 1e-15);
        assert!((eval("sqrt(x^2 + y^2)", 3.0, 4.0, 0.0) - 5.0).abs() < 1e-15);
        assert!((eval("exp(x) * cos(y)", 1.0, 0.0, 0.0) - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn cylinder_component() {
        // the limit-cycle field's first component
        let e = parse("x * (1 - (x^2 + y^2)) - y", &HashMap::new()).unwrap();
        assert_eq!(e.eval(1.0, 0.0, 0.0), 0.0);
        assert_eq!(e.eval(0.0, 1.0, 0.0), -1.0);
    }

    #[test]
    fn scientific_notation() {
        assert!((eval("1.5e-3 + 2E2", 0.0, 0.0, 0.0) - 200.0015).abs() < 1e-12);
    }

    #[test]
    fn errors_carry_position() {
        let err = parse("x + ", &HashMap::new()).unwrap_err();
        assert_eq!(err.pos.line, 1);
        let err = parse("x +\n y * $", &HashMap::new()).unwrap_err();
        assert_eq!(err.pos.line, 2);
        assert!(err.msg.contains("unexpected character"));
        let err = parse("foo + 1", &HashMap::new()).unwrap_err();
        assert!(err.msg.contains("unknown identifier"));
        let err = parse("sin x", &HashMap::new()).unwrap_err();
        assert!(err.msg.contains("parentheses"));
    }
}
