//! Region predicates over `(x1, x2)` used to seed initial directions.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! region  := or
//! or      := and ("or" and)*
//! and     := unary (("&" | "&&" | "and" | ",") unary)*
//! unary   := ("!" | "not") unary | "(" region ")" | "{" region "}" | cmp | const
//! cmp     := expr ("<" | "<=" | ">" | ">=") expr
//! expr    := term (("+" | "-") term)*
//! term    := factor (("*" | "/") factor)*
//! factor  := "-" factor | power
//! power   := primary ("^" factor)?
//! primary := number | "x1" | "x2" | "|x|" | "|" expr "|" | "(" expr ")"
//! const   := "all" | "Omega" | "Ω" | "empty" | "∅"
//! ```
//!
//! The special region `complement` stands for `Ω \ Ω₁` when used as Ω₂.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{LmmError, Result};

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Num(f64),
    X1,
    X2,
    Norm,
    Abs(Box<Expr>),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
}

impl Expr {
    fn eval(&self, x: [f64; 2]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::X1 => x[0],
            Expr::X2 => x[1],
            Expr::Norm => x[0].hypot(x[1]),
            Expr::Abs(e) => e.eval(x).abs(),
            Expr::Neg(e) => -e.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => {
                let base = a.eval(x);
                match b.as_ref() {
                    Expr::Num(p) if p.fract() == 0.0 && p.abs() < 64.0 => base.powi(*p as i32),
                    e => base.powf(e.eval(x)),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
enum Pred {
    Const(bool),
    Cmp(Expr, CmpOp, Expr),
    Not(Box<Pred>),
    And(Vec<Pred>),
    Or(Vec<Pred>),
    Complement,
}

impl Pred {
    fn eval(&self, x: [f64; 2]) -> bool {
        match self {
            Pred::Const(b) => *b,
            Pred::Cmp(a, op, b) => {
                let (a, b) = (a.eval(x), b.eval(x));
                match op {
                    CmpOp::Lt => a < b,
                    CmpOp::Le => a <= b,
                    CmpOp::Gt => a > b,
                    CmpOp::Ge => a >= b,
                }
            }
            Pred::Not(p) => !p.eval(x),
            Pred::And(ps) => ps.iter().all(|p| p.eval(x)),
            Pred::Or(ps) => ps.iter().any(|p| p.eval(x)),
            Pred::Complement => false,
        }
    }
}

/// A parsed region predicate that keeps its source text.
#[derive(Clone, PartialEq)]
pub struct Region {
    source: String,
    pred: Pred,
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Region({:?})", self.source)
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Region {
    pub fn parse(source: &str) -> Result<Self> {
        let tokens = tokenize(source)?;
        let mut parser = Parser { tokens, pos: 0 };
        let pred = parser.region()?;
        if parser.pos != parser.tokens.len() {
            return Err(LmmError::Region(format!(
                "unexpected `{}` in `{source}`",
                parser.tokens[parser.pos]
            )));
        }
        if matches!(pred, Pred::Complement) || !contains_complement(&pred) {
            Ok(Self {
                source: source.trim().to_string(),
                pred,
            })
        } else {
            Err(LmmError::Region(
                "`complement` cannot be combined with other predicates".into(),
            ))
        }
    }

    /// The whole domain.
    pub fn all() -> Self {
        Self {
            source: "all".into(),
            pred: Pred::Const(true),
        }
    }

    pub fn empty() -> Self {
        Self {
            source: "empty".into(),
            pred: Pred::Const(false),
        }
    }

    pub fn complement() -> Self {
        Self {
            source: "complement".into(),
            pred: Pred::Complement,
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// `true` for the `complement` placeholder.
    pub fn is_complement(&self) -> bool {
        matches!(self.pred, Pred::Complement)
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.pred.eval(x)
    }
}

fn contains_complement(p: &Pred) -> bool {
    match p {
        Pred::Complement => true,
        Pred::Not(q) => contains_complement(q),
        Pred::And(ps) | Pred::Or(ps) => ps.iter().any(contains_complement),
        _ => false,
    }
}

impl Serialize for Region {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Region {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Region::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "{v}"),
            Tok::Ident(s) => f.write_str(s),
            Tok::Sym(s) => f.write_str(s),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src
        .chars()
        .map(|c| match c {
            '₁' => '1',
            '₂' => '2',
            c => c,
        })
        .collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        match c {
            c if c.is_whitespace() => i += 1,
            '0'..='9' | '.' => {
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
                let text: String = chars[start..i].iter().collect();
                let v = text
                    .parse()
                    .map_err(|_| LmmError::Region(format!("bad number `{text}`")))?;
                out.push(Tok::Num(v));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') && chars[i] != '²' {
                    i += 1;
                }
                let ident: String = chars[start..i].iter().collect();
                match ident.as_str() {
                    "Ω" => out.push(Tok::Ident("all".into())),
                    _ => out.push(Tok::Ident(ident)),
                }
            }
            '∅' => {
                out.push(Tok::Ident("empty".into()));
                i += 1;
            }
            '²' => {
                out.push(Tok::Sym("^"));
                out.push(Tok::Num(2.0));
                i += 1;
            }
            '<' | '>' | '≤' | '≥' => {
                let sym = match (c, next) {
                    ('<', Some('=')) => "<=",
                    ('>', Some('=')) => ">=",
                    ('≤', _) => "<=",
                    ('≥', _) => ">=",
                    ('<', _) => "<",
                    _ => ">",
                };
                i += if sym.len() == 2 && (c == '<' || c == '>') { 2 } else { 1 };
                out.push(Tok::Sym(sym));
            }
            '&' => {
                i += if next == Some('&') { 2 } else { 1 };
                out.push(Tok::Sym("&"));
            }
            '+' | '-' | '*' | '/' | '^' | '(' | ')' | '|' | '!' | ',' | '{' | '}' => {
                let sym = match c {
                    '+' => "+",
                    '-' => "-",
                    '*' => "*",
                    '/' => "/",
                    '^' => "^",
                    '(' => "(",
                    ')' => ")",
                    '|' => "|",
                    '!' => "!",
                    ',' => "&",
                    '{' => "{",
                    _ => "}",
                };
                out.push(Tok::Sym(sym));
                i += 1;
            }
            other => {
                return Err(LmmError::Region(format!(
                    "unexpected character `{other}` in `{src}`"
                )))
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_ident(&mut self, name: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == name) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: &str) -> Result<()> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{sym}`")))
        }
    }

    fn error(&self, msg: &str) -> LmmError {
        match self.peek() {
            Some(t) => LmmError::Region(format!("{msg}, found `{t}`")),
            None => LmmError::Region(format!("{msg}, found end of input")),
        }
    }

    fn region(&mut self) -> Result<Pred> {
        let mut terms = vec![self.and()?];
        while self.eat_ident("or") {
            terms.push(self.and()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Pred::Or(terms)
        })
    }

    fn and(&mut self) -> Result<Pred> {
        let mut terms = vec![self.unary()?];
        while self.eat_sym("&") || self.eat_ident("and") {
            terms.push(self.unary()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Pred::And(terms)
        })
    }

    fn unary(&mut self) -> Result<Pred> {
        if self.eat_sym("!") || self.eat_ident("not") {
            return Ok(Pred::Not(Box::new(self.unary()?)));
        }
        for (name, value) in [("all", true), ("Omega", true), ("empty", false), ("none", false)] {
            if self.eat_ident(name) {
                return Ok(Pred::Const(value));
            }
        }
        if self.eat_ident("complement") {
            return Ok(Pred::Complement);
        }
        if self.eat_sym("{") {
            let p = self.region()?;
            self.expect_sym("}")?;
            return Ok(p);
        }
        // `(` may open a predicate or an arithmetic expression
        let save = self.pos;
        match self.comparison() {
            Ok(p) => Ok(p),
            Err(cmp_err) => {
                self.pos = save;
                if self.eat_sym("(") {
                    let p = self.region()?;
                    self.expect_sym(")")?;
                    Ok(p)
                } else {
                    Err(cmp_err)
                }
            }
        }
    }

    fn comparison(&mut self) -> Result<Pred> {
        let lhs = self.expr()?;
        let op = if self.eat_sym("<") {
            CmpOp::Lt
        } else if self.eat_sym("<=") {
            CmpOp::Le
        } else if self.eat_sym(">") {
            CmpOp::Gt
        } else if self.eat_sym(">=") {
            CmpOp::Ge
        } else {
            return Err(self.error("expected a comparison"));
        };
        let rhs = self.expr()?;
        Ok(Pred::Cmp(lhs, op, rhs))
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_sym("+") {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat_sym("-") {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat_sym("*") {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat_sym("/") {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat_sym("-") {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.primary()?;
        if self.eat_sym("^") {
            let exp = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "x1" => Ok(Expr::X1),
                    "x2" => Ok(Expr::X2),
                    _ => {
                        self.pos -= 1;
                        Err(self.error("unknown identifier"))
                    }
                }
            }
            Some(Tok::Sym("|")) => {
                self.pos += 1;
                if self.eat_ident("x") {
                    self.expect_sym("|")?;
                    return Ok(Expr::Norm);
                }
                let inner = self.expr()?;
                self.expect_sym("|")?;
                Ok(Expr::Abs(Box::new(inner)))
            }
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_sym(")")?;
                Ok(inner)
            }
            _ => Err(self.error("expected a number, variable or `(`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Region {
        Region::parse(s).unwrap_or_else(|e| panic!("{s}: {e}"))
    }

    #[test]
    fn table_regions() {
        assert!(r("x1>0 & x2>0").contains([0.1, 0.2]));
        assert!(!r("x1>0 & x2>0").contains([0.1, -0.2]));
        assert!(r("{x1<0, x2>0}").contains([-0.1, 0.2]));
        assert!(r("|x|^2>0.25").contains([0.5, 0.1]));
        assert!(!r("|x|^2>0.25").contains([0.1, 0.1]));
        assert!(r("(x1-2)^2+x2^2<1").contains([2.5, 0.0]));
        assert!(!r("(x1-2)^2+x2^2<1").contains([0.5, 0.0]));
        assert!(r("|x1|>0.2").contains([-0.3, 0.9]));
        assert!(r("|x1+x2|>0.3").contains([0.3, 0.1]));
        assert!(r("x1*x2>0").contains([-0.3, -0.1]));
        assert!(r("|x1|>|x2|").contains([0.3, -0.1]));
        assert!(r("x1^2+x2^2>0.25").contains([0.4, 0.4]));
        assert!(r("x₁-x₂>0").contains([0.4, 0.1]));
        assert!(r("(x1+1)²+x2²<0.5").contains([-1.0, 0.6]));
    }

    #[test]
    fn logic_and_constants() {
        assert!(r("all").contains([9.0, 9.0]));
        assert!(r("Ω").contains([0.0, 0.0]));
        assert!(!r("empty").contains([0.0, 0.0]));
        assert!(!r("∅").contains([0.0, 0.0]));
        assert!(r("x1>0 or x2>0").contains([-1.0, 1.0]));
        assert!(r("!(x1>0)").contains([-1.0, 1.0]));
        assert!(r("not (x1>0 and x2>0)").contains([1.0, -1.0]));
        assert!(r("((x1-1)*2 > 0)").contains([1.5, 0.0]));
        assert!(r("-x1^2 > -1").contains([0.5, 0.0]));
        assert!(r("x1 >= 1e-1").contains([0.1, 0.0]));
        assert!(r("complement").is_complement());
    }

    #[test]
    fn parse_errors() {
        for bad in ["", "x1", "x1 > ", "y > 0", "x1 > 0 &", "|x1 > 0", "x1 > 0)", "complement & x1>0"] {
            assert!(Region::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn source_round_trip() {
        let region = r("  |x1+x2| > 0.3 ");
        assert_eq!(region.to_string(), "|x1+x2| > 0.3");
        assert_eq!(Region::parse(region.source()).unwrap(), region);
        let json = serde_json::to_string(&region).unwrap();
        let back: Region = serde_json::from_str(&json).unwrap();
        assert_eq!(back, region);
    }
}
