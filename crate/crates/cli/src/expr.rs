//! Expression grammar for chart objects:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := '-'* primary ('^' natural)?
//! primary := rational | identifier | '(' expr ')'
//! ```
//!
//! `d_<name>` is the coordinate vector field along `<name>`, `d<name>` the
//! coordinate differential; a bare declared name is the coordinate function.
//! Rationals are integer or `p/q` tokens. `*` between two forms is the wedge
//! product. Whitespace is insignificant.

#[cfg(test)]
use engel_core::Chart;
use engel_core::{wedge, wedge_power, ChartRef, ExtForm, PolyScalar, Rational, VectorField};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(PolyScalar),
    Vector(VectorField),
    Form(ExtForm),
}

#[derive(Debug)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

type PResult<T> = std::result::Result<T, ParseError>;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn err<T>(line: usize, col: usize, message: impl Into<String>) -> PResult<T> {
    Err(ParseError {
        line,
        col,
        message: message.into(),
    })
}

fn lex(src: &str) -> PResult<Vec<Spanned>> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);
        let step = |i: &mut usize, col: &mut usize| {
            *i += 1;
            *col += 1;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => step(&mut i, &mut col),
            '+' => {
                out.push(Spanned { tok: Tok::Plus, line: tline, col: tcol });
                step(&mut i, &mut col);
            }
            '-' => {
                out.push(Spanned { tok: Tok::Minus, line: tline, col: tcol });
                step(&mut i, &mut col);
            }
            '*' => {
                out.push(Spanned { tok: Tok::Star, line: tline, col: tcol });
                step(&mut i, &mut col);
            }
            '^' => {
                out.push(Spanned { tok: Tok::Caret, line: tline, col: tcol });
                step(&mut i, &mut col);
            }
            '(' => {
                out.push(Spanned { tok: Tok::LParen, line: tline, col: tcol });
                step(&mut i, &mut col);
            }
            ')' => {
                out.push(Spanned { tok: Tok::RParen, line: tline, col: tcol });
                step(&mut i, &mut col);
            }
            c if c.is_ascii_digit() => {
                let mut num = String::new();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    num.push(chars[i]);
                    step(&mut i, &mut col);
                }
                let mut den = String::new();
                if i < chars.len() && chars[i] == '/' {
                    step(&mut i, &mut col);
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        den.push(chars[i]);
                        step(&mut i, &mut col);
                    }
                    if den.is_empty() {
                        return err(line, col, "expected denominator digits after '/'");
                    }
                }
                let n: BigInt = num.parse().unwrap();
                let d: BigInt = if den.is_empty() {
                    BigInt::one()
                } else {
                    den.parse().unwrap()
                };
                if d.is_zero() {
                    return err(tline, tcol, "zero denominator");
                }
                out.push(Spanned {
                    tok: Tok::Num(Rational::new(n, d)),
                    line: tline,
                    col: tcol,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut name = String::new();
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_')
                {
                    name.push(chars[i]);
                    step(&mut i, &mut col);
                }
                out.push(Spanned {
                    tok: Tok::Ident(name),
                    line: tline,
                    col: tcol,
                });
            }
            other => return err(tline, tcol, format!("unexpected character '{other}'")),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    chart: &'a ChartRef,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn end_pos(&self) -> (usize, usize) {
        self.toks
            .last()
            .map(|t| (t.line, t.col + 1))
            .unwrap_or((1, 1))
    }

    fn expr(&mut self) -> PResult<Value> {
        let mut acc = self.term()?;
        while let Some(t) = self.peek() {
            match t.tok {
                Tok::Plus => {
                    let (l, c) = (t.line, t.col);
                    self.bump();
                    let rhs = self.term()?;
                    acc = add_values(acc, rhs, l, c)?;
                }
                Tok::Minus => {
                    let (l, c) = (t.line, t.col);
                    self.bump();
                    let rhs = self.term()?;
                    acc = add_values(acc, neg_value(rhs), l, c)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> PResult<Value> {
        let mut acc = self.factor()?;
        while let Some(t) = self.peek() {
            match t.tok {
                Tok::Star => {
                    let (l, c) = (t.line, t.col);
                    self.bump();
                    let rhs = self.factor()?;
                    acc = mul_values(acc, rhs, l, c)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> PResult<Value> {
        if let Some(t) = self.peek() {
            if t.tok == Tok::Minus {
                self.bump();
                let inner = self.factor()?;
                return Ok(neg_value(inner));
            }
        }
        let base = self.primary()?;
        if let Some(t) = self.peek() {
            if t.tok == Tok::Caret {
                let (l, c) = (t.line, t.col);
                self.bump();
                let Some(e) = self.bump() else {
                    let (el, ec) = self.end_pos();
                    return err(el, ec, "expected exponent");
                };
                let Tok::Num(n) = &e.tok else {
                    return err(e.line, e.col, "exponent must be a natural number");
                };
                if !n.is_integer() || n.is_negative() {
                    return err(e.line, e.col, "exponent must be a natural number");
                }
                let p: u32 = n
                    .to_integer()
                    .try_into()
                    .map_err(|_| ParseError {
                        line: e.line,
                        col: e.col,
                        message: "exponent too large".into(),
                    })?;
                return pow_value(base, p, l, c);
            }
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<Value> {
        let Some(t) = self.bump() else {
            let (l, c) = self.end_pos();
            return err(l, c, "unexpected end of input");
        };
        match t.tok {
            Tok::Num(n) => Ok(Value::Scalar(PolyScalar::constant(self.chart, n))),
            Tok::Ident(name) => self.resolve(&name, t.line, t.col),
            Tok::LParen => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(Spanned { tok: Tok::RParen, .. }) => Ok(inner),
                    Some(u) => err(u.line, u.col, "expected ')'"),
                    None => {
                        let (l, c) = self.end_pos();
                        err(l, c, "expected ')'")
                    }
                }
            }
            _ => err(t.line, t.col, "expected a value"),
        }
    }

    fn resolve(&self, name: &str, line: usize, col: usize) -> PResult<Value> {
        if let Ok(i) = self.chart.index_of(name) {
            return Ok(Value::Scalar(PolyScalar::var(self.chart, i)));
        }
        if let Some(rest) = name.strip_prefix("d_") {
            if let Ok(i) = self.chart.index_of(rest) {
                return Ok(Value::Vector(VectorField::coordinate(self.chart, i)));
            }
        }
        if let Some(rest) = name.strip_prefix('d') {
            if let Ok(i) = self.chart.index_of(rest) {
                return Ok(Value::Form(ExtForm::d_coord(self.chart, i)));
            }
        }
        err(line, col, format!("unknown identifier '{name}'"))
    }
}

fn add_values(a: Value, b: Value, line: usize, col: usize) -> PResult<Value> {
    let bad = |l, c| err(l, c, "cannot add values of different kinds");
    match (a, b) {
        (Value::Scalar(x), Value::Scalar(y)) => x
            .checked_add(&y)
            .map(Value::Scalar)
            .map_err(|e| degree_err(e, line, col)),
        (Value::Vector(x), Value::Vector(y)) => x
            .add(&y)
            .map(Value::Vector)
            .map_err(|e| degree_err(e, line, col)),
        (Value::Form(x), Value::Form(y)) => x
            .add(&y)
            .map(Value::Form)
            .map_err(|e| degree_err(e, line, col)),
        _ => bad(line, col),
    }
}

fn neg_value(v: Value) -> Value {
    match v {
        Value::Scalar(x) => Value::Scalar(-&x),
        Value::Vector(x) => Value::Vector(x.neg()),
        Value::Form(x) => Value::Form(x.neg()),
    }
}

fn mul_values(a: Value, b: Value, line: usize, col: usize) -> PResult<Value> {
    match (a, b) {
        (Value::Scalar(x), Value::Scalar(y)) => x
            .checked_mul(&y)
            .map(Value::Scalar)
            .map_err(|e| degree_err(e, line, col)),
        (Value::Scalar(x), Value::Vector(y)) | (Value::Vector(y), Value::Scalar(x)) => y
            .scale_poly(&x)
            .map(Value::Vector)
            .map_err(|e| degree_err(e, line, col)),
        (Value::Scalar(x), Value::Form(y)) | (Value::Form(y), Value::Scalar(x)) => y
            .scale_poly(&x)
            .map(Value::Form)
            .map_err(|e| degree_err(e, line, col)),
        (Value::Form(x), Value::Form(y)) => wedge(&x, &y)
            .map(Value::Form)
            .map_err(|e| degree_err(e, line, col)),
        _ => err(line, col, "cannot multiply vector fields"),
    }
}

fn pow_value(base: Value, p: u32, line: usize, col: usize) -> PResult<Value> {
    match base {
        Value::Scalar(x) => x
            .pow(p)
            .map(Value::Scalar)
            .map_err(|e| degree_err(e, line, col)),
        Value::Form(x) => wedge_power(&x, p as usize)
            .map(Value::Form)
            .map_err(|e| degree_err(e, line, col)),
        Value::Vector(_) => err(line, col, "cannot exponentiate a vector field"),
    }
}

fn degree_err(e: engel_core::Error, line: usize, col: usize) -> ParseError {
    ParseError {
        line,
        col,
        message: e.to_string(),
    }
}

pub fn parse(src: &str, chart: &ChartRef) -> PResult<Value> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return err(1, 1, "empty expression");
    }
    let mut p = Parser {
        toks,
        pos: 0,
        chart,
    };
    let v = p.expr()?;
    if let Some(t) = p.peek() {
        return err(t.line, t.col, "trailing input");
    }
    Ok(v)
}

pub fn parse_vector_field(src: &str, chart: &ChartRef) -> PResult<VectorField> {
    match parse(src, chart)? {
        Value::Vector(v) => Ok(v),
        _ => err(1, 1, "expression is not a vector field"),
    }
}

pub fn parse_one_form(src: &str, chart: &ChartRef) -> PResult<ExtForm> {
    match parse(src, chart)? {
        Value::Form(f) if f.degree() == 1 => Ok(f),
        _ => err(1, 1, "expression is not a 1-form"),
    }
}

// ---------------------------------------------------------------------------
// printer (round-trips through the parser)
// ---------------------------------------------------------------------------

fn print_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn print_poly(p: &PolyScalar) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let chart = p.chart().clone();
    let mut parts: Vec<(bool, String)> = Vec::new();
    for (exps, coeff) in p.terms() {
        let mut factors: Vec<String> = Vec::new();
        let abs = coeff.abs();
        if !abs.is_one() || exps.iter().all(|&e| e == 0) {
            factors.push(print_rational(&abs));
        }
        for (i, &e) in exps.iter().enumerate() {
            match e {
                0 => {}
                1 => factors.push(chart.name(i).to_string()),
                _ => factors.push(format!("{}^{}", chart.name(i), e)),
            }
        }
        parts.push((coeff.is_negative(), factors.join("*")));
    }
    let mut out = String::new();
    for (i, (neg, body)) in parts.iter().enumerate() {
        if i == 0 {
            if *neg {
                out.push('-');
            }
        } else {
            out.push_str(if *neg { " - " } else { " + " });
        }
        out.push_str(body);
    }
    out
}

pub fn print_vector_field(v: &VectorField) -> String {
    let chart = v.chart().clone();
    let mut parts = Vec::new();
    for (i, c) in v.components().iter().enumerate() {
        if !c.is_zero() {
            parts.push(format!("({})*d_{}", print_poly(c), chart.name(i)));
        }
    }
    if parts.is_empty() {
        return format!("0*d_{}", chart.name(0));
    }
    parts.join(" + ")
}

pub fn print_form(f: &ExtForm) -> String {
    let chart = f.chart().clone();
    if f.degree() == 0 {
        let c = f.coefficient(&[]);
        return format!("({})", print_poly(&c));
    }
    let mut parts = Vec::new();
    for (idx, coeff) in f.terms() {
        if coeff.is_zero() {
            continue;
        }
        let basis: Vec<String> = idx.iter().map(|&i| format!("d{}", chart.name(i))).collect();
        parts.push(format!("({})*{}", print_poly(coeff), basis.join("*")));
    }
    if parts.is_empty() {
        let basis: Vec<String> = (0..f.degree()).map(|i| format!("d{}", chart.name(i))).collect();
        return format!("0*{}", basis.join("*"));
    }
    parts.join(" + ")
}

#[cfg(test)]
pub fn print_value(v: &Value) -> String {
    match v {
        Value::Scalar(p) => print_poly(p),
        Value::Vector(x) => print_vector_field(x),
        Value::Form(f) => print_form(f),
    }
}
