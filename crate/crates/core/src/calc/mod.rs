//! Restricted expression language behind the `execute_code` tool.
//!
//! Closed grammar, bounded evaluation, no side effects. Statistics are the
//! same functions the lookup tools use, so both views agree exactly.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::TimeSeriesRecord;
use crate::series::{fmt_num, stats};

pub const MAX_OPERATIONS: u64 = 1_000_000;
pub const MAX_DEPTH: usize = 64;
pub const MAX_SOURCE_LEN: usize = 4096;

/// Shown to agents in the tool description and in unsupported-construct errors.
pub const GRAMMAR_HELP: &str = "one expression built from: numbers; + - * / (also × ÷) and ^; \
comparisons < <= > >= == !=; parentheses; vector literals [a, b, ...]; \
series(ch, start, end) or series(ch) for a channel slice (ch = index or \"name\", inclusive indices); \
functions min, max, mean, std (population), sum, abs, diff, len. \
Example: mean(diff(series(0, 0, 9)))";

const FUNCTIONS: [&str; 9] = ["series", "min", "max", "mean", "std", "sum", "abs", "diff", "len"];

#[derive(Debug, Clone, PartialEq)]
pub enum CalcError {
    Parse { position: usize, message: String },
    Unsupported { position: usize, construct: String },
    Range(String),
    Type(String),
    Undefined(String),
    Budget,
    TooDeep,
}

impl fmt::Display for CalcError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalcError::Parse { position, message } => {
                write!(f, "parse error at position {position}: {message}")
            }
            CalcError::Unsupported {
                position,
                construct,
            } => write!(
                f,
                "unsupported construct {construct:?} at position {position}; allowed grammar: {GRAMMAR_HELP}"
            ),
            CalcError::Range(m) => write!(f, "range error: {m}"),
            CalcError::Type(m) => write!(f, "type error: {m}"),
            CalcError::Undefined(m) => write!(f, "undefined: {m}"),
            CalcError::Budget => write!(
                f,
                "operation budget exceeded ({MAX_OPERATIONS} primitive operations); evaluation truncated"
            ),
            CalcError::TooDeep => write!(f, "expression nested deeper than {MAX_DEPTH} levels"),
        }
    }
}

impl std::error::Error for CalcError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Text(String),
    List(Vec<Expr>),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call {
        name: String,
        args: Vec<Expr>,
        source: String,
    },
}

/// A parsed expression together with its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct CalcExpression {
    pub source: String,
    pub tree: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CalcValue {
    Scalar(f64),
    Vector(Vec<f64>),
    Bool(bool),
}

impl fmt::Display for CalcValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalcValue::Scalar(v) => f.write_str(&fmt_cell(*v)),
            CalcValue::Bool(b) => write!(f, "{b}"),
            CalcValue::Vector(v) => {
                f.write_str("[")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str(&fmt_cell(*x))?;
                }
                f.write_str("]")
            }
        }
    }
}

fn fmt_cell(v: f64) -> String {
    if v.is_nan() {
        "missing".to_string()
    } else {
        fmt_num(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalcOutcome {
    pub value: CalcValue,
    pub trace: Vec<String>,
}

impl CalcOutcome {
    pub fn render(&self) -> String {
        let mut out = format!("result: {}", self.value);
        if !self.trace.is_empty() {
            out.push_str("\ntrace:");
            for t in &self.trace {
                out.push_str("\n  ");
                out.push_str(t);
            }
        }
        crate::series::bound_text(&out)
    }
}

// ---- lexer ----

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Str(String),
    Op(BinOp),
    Minus,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    End,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, CalcError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
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
            let v: f64 = text.parse().map_err(|_| CalcError::Parse {
                position: start,
                message: format!("malformed number {text:?}"),
            })?;
            if !v.is_finite() {
                return Err(CalcError::Parse {
                    position: start,
                    message: format!("number {text:?} is out of range"),
                });
            }
            out.push((start, Tok::Num(v)));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((start, Tok::Ident(chars[start..i].iter().collect())));
            continue;
        }
        if c == '"' || c == '\'' {
            i += 1;
            while i < chars.len() && chars[i] != c {
                i += 1;
            }
            if i >= chars.len() {
                return Err(CalcError::Parse {
                    position: start,
                    message: "unterminated string".into(),
                });
            }
            out.push((start, Tok::Str(chars[start + 1..i].iter().collect())));
            i += 1;
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, width) = match (c, next) {
            ('<', Some('=')) => (Tok::Op(BinOp::Le), 2),
            ('>', Some('=')) => (Tok::Op(BinOp::Ge), 2),
            ('=', Some('=')) => (Tok::Op(BinOp::Eq), 2),
            ('!', Some('=')) => (Tok::Op(BinOp::Ne), 2),
            ('*', Some('*')) => (Tok::Op(BinOp::Pow), 2),
            ('<', _) => (Tok::Op(BinOp::Lt), 1),
            ('>', _) => (Tok::Op(BinOp::Gt), 1),
            ('+', _) => (Tok::Op(BinOp::Add), 1),
            ('-' | '−', _) => (Tok::Minus, 1),
            ('*' | '×', _) => (Tok::Op(BinOp::Mul), 1),
            ('/' | '÷', _) => (Tok::Op(BinOp::Div), 1),
            ('^', _) => (Tok::Op(BinOp::Pow), 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('[', _) => (Tok::LBracket, 1),
            (']', _) => (Tok::RBracket, 1),
            (',', _) => (Tok::Comma, 1),
            ('=' | ';' | ':' | '{' | '}', _) => {
                return Err(CalcError::Unsupported {
                    position: start,
                    construct: c.to_string(),
                })
            }
            _ => {
                return Err(CalcError::Parse {
                    position: start,
                    message: format!("unexpected character {c:?}"),
                })
            }
        };
        out.push((start, tok));
        i += width;
    }
    out.push((chars.len(), Tok::End));
    Ok(out)
}

// ---- parser ----

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    chars: Vec<char>,
    depth: usize,
    _src: &'a str,
}

pub fn parse(source: &str) -> Result<CalcExpression, CalcError> {
    if source.chars().count() > MAX_SOURCE_LEN {
        return Err(CalcError::Parse {
            position: MAX_SOURCE_LEN,
            message: format!("expression longer than {MAX_SOURCE_LEN} characters"),
        });
    }
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
        chars: source.chars().collect(),
        depth: 0,
        _src: source,
    };
    if p.peek() == &Tok::End {
        return Err(CalcError::Parse {
            position: 0,
            message: "empty expression".into(),
        });
    }
    let tree = p.comparison()?;
    if p.peek() != &Tok::End {
        return Err(p.unexpected("end of expression"));
    }
    Ok(CalcExpression {
        source: source.to_string(),
        tree,
    })
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn at(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> CalcError {
        let found = match self.peek() {
            Tok::End => "end of input".to_string(),
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("name {s:?}"),
            Tok::Str(s) => format!("string {s:?}"),
            t => format!("{t:?}").to_lowercase(),
        };
        CalcError::Parse {
            position: self.at(),
            message: format!("expected {wanted}, found {found}"),
        }
    }

    fn enter(&mut self) -> Result<(), CalcError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(CalcError::TooDeep);
        }
        Ok(())
    }

    fn comparison(&mut self) -> Result<Expr, CalcError> {
        self.enter()?;
        let lhs = self.additive()?;
        let out = match self.peek() {
            Tok::Op(op @ (BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne)) => {
                let op = *op;
                self.bump();
                let rhs = self.additive()?;
                Expr::Binary(op, Box::new(lhs), Box::new(rhs))
            }
            _ => lhs,
        };
        self.depth -= 1;
        Ok(out)
    }

    fn additive(&mut self) -> Result<Expr, CalcError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op(BinOp::Add) => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, CalcError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op(op @ (BinOp::Mul | BinOp::Div)) => *op,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, CalcError> {
        if self.peek() == &Tok::Minus {
            self.bump();
            self.enter()?;
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, CalcError> {
        let base = self.primary()?;
        if self.peek() == &Tok::Op(BinOp::Pow) {
            self.bump();
            self.enter()?;
            let exp = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, CalcError> {
        let start = self.at();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Number(v)),
            Tok::Str(s) => Ok(Expr::Text(s)),
            Tok::LParen => {
                let e = self.comparison()?;
                if self.bump() != Tok::RParen {
                    self.pos -= 1;
                    return Err(self.unexpected("')'"));
                }
                Ok(e)
            }
            Tok::LBracket => {
                self.enter()?;
                let items = self.list(Tok::RBracket, "']'")?;
                self.depth -= 1;
                Ok(Expr::List(items))
            }
            Tok::Ident(name) => {
                let lower = name.to_ascii_lowercase();
                if !FUNCTIONS.contains(&lower.as_str()) {
                    return Err(CalcError::Unsupported {
                        position: start,
                        construct: name,
                    });
                }
                if self.peek() != &Tok::LParen {
                    return Err(self.unexpected(&format!("'(' after {lower}")));
                }
                self.bump();
                self.enter()?;
                let args = self.list(Tok::RParen, "')'")?;
                self.depth -= 1;
                let end = self.toks[self.pos - 1].0 + 1;
                let source: String = self.chars[start..end.min(self.chars.len())].iter().collect();
                Ok(Expr::Call {
                    name: lower,
                    args,
                    source,
                })
            }
            _ => {
                self.pos = self.pos.saturating_sub(1);
                if self.toks[self.pos].0 != start {
                    self.pos += 1;
                }
                Err(self.unexpected("a number, function call, '(' or '['"))
            }
        }
    }

    fn list(&mut self, close: Tok, close_name: &str) -> Result<Vec<Expr>, CalcError> {
        let mut items = Vec::new();
        if self.peek() == &close {
            self.bump();
            return Ok(items);
        }
        loop {
            items.push(self.comparison()?);
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                t if *t == close => {
                    self.bump();
                    return Ok(items);
                }
                _ => return Err(self.unexpected(&format!("',' or {close_name}"))),
            }
        }
    }
}

// ---- evaluation ----

struct Eval<'a> {
    series: &'a TimeSeriesRecord,
    ops: u64,
    trace: Vec<String>,
}

/// Parses and evaluates `source` against `series`.
pub fn execute(source: &str, series: &TimeSeriesRecord) -> Result<CalcOutcome, CalcError> {
    let expr = parse(source)?;
    evaluate(&expr, series)
}

pub fn evaluate(expr: &CalcExpression, series: &TimeSeriesRecord) -> Result<CalcOutcome, CalcError> {
    let mut ev = Eval {
        series,
        ops: 0,
        trace: Vec::new(),
    };
    let value = ev.eval(&expr.tree)?;
    Ok(CalcOutcome {
        value,
        trace: ev.trace,
    })
}

/// Tool entry point: result text or error text, never a panic.
pub fn run_tool(source: &str, series: &TimeSeriesRecord) -> Result<String, CalcError> {
    execute(source, series).map(|o| o.render())
}

impl Eval<'_> {
    fn charge(&mut self, n: usize) -> Result<(), CalcError> {
        self.ops = self.ops.saturating_add(n.max(1) as u64);
        if self.ops > MAX_OPERATIONS {
            return Err(CalcError::Budget);
        }
        Ok(())
    }

    fn eval(&mut self, e: &Expr) -> Result<CalcValue, CalcError> {
        self.charge(1)?;
        match e {
            Expr::Number(v) => Ok(CalcValue::Scalar(*v)),
            Expr::Text(s) => Err(CalcError::Type(format!(
                "string {s:?} is only allowed as a channel name inside series()"
            ))),
            Expr::List(items) => {
                let mut out = Vec::with_capacity(items.len());
                for it in items {
                    match self.eval(it)? {
                        CalcValue::Scalar(v) => out.push(v),
                        CalcValue::Vector(v) => {
                            self.charge(v.len())?;
                            out.extend(v)
                        }
                        CalcValue::Bool(_) => {
                            return Err(CalcError::Type("vector literals hold numbers only".into()))
                        }
                    }
                }
                Ok(CalcValue::Vector(out))
            }
            Expr::Neg(inner) => {
                let v = self.eval(inner)?;
                self.map(v, |x| -x)
            }
            Expr::Binary(op, a, b) => {
                let a = self.eval(a)?;
                let b = self.eval(b)?;
                self.binary(*op, a, b)
            }
            Expr::Call { name, args, source } => self.call(name, args, source),
        }
    }

    fn map(&mut self, v: CalcValue, f: impl Fn(f64) -> f64) -> Result<CalcValue, CalcError> {
        match v {
            CalcValue::Scalar(x) => Ok(CalcValue::Scalar(f(x))),
            CalcValue::Vector(xs) => {
                self.charge(xs.len())?;
                Ok(CalcValue::Vector(xs.into_iter().map(f).collect()))
            }
            CalcValue::Bool(_) => Err(CalcError::Type("arithmetic on a comparison result".into())),
        }
    }

    fn binary(&mut self, op: BinOp, a: CalcValue, b: CalcValue) -> Result<CalcValue, CalcError> {
        let (xs, ys, vector) = match (a, b) {
            (CalcValue::Bool(_), _) | (_, CalcValue::Bool(_)) => {
                return Err(CalcError::Type("arithmetic on a comparison result".into()))
            }
            (CalcValue::Scalar(x), CalcValue::Scalar(y)) => (vec![x], vec![y], false),
            (CalcValue::Vector(x), CalcValue::Scalar(y)) => {
                let n = x.len();
                (x, vec![y; n], true)
            }
            (CalcValue::Scalar(x), CalcValue::Vector(y)) => {
                let n = y.len();
                (vec![x; n], y, true)
            }
            (CalcValue::Vector(x), CalcValue::Vector(y)) => {
                if x.len() != y.len() {
                    return Err(CalcError::Type(format!(
                        "vector lengths differ ({} vs {})",
                        x.len(),
                        y.len()
                    )));
                }
                (x, y, true)
            }
        };
        self.charge(xs.len())?;
        let cmp = matches!(
            op,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        );
        if cmp {
            if vector {
                return Err(CalcError::Type(
                    "comparisons apply to scalars; aggregate vectors first".into(),
                ));
            }
            let (x, y) = (xs[0], ys[0]);
            return Ok(CalcValue::Bool(match op {
                BinOp::Lt => x < y,
                BinOp::Le => x <= y,
                BinOp::Gt => x > y,
                BinOp::Ge => x >= y,
                BinOp::Eq => x == y,
                _ => x != y,
            }));
        }
        let mut out = Vec::with_capacity(xs.len());
        for (x, y) in xs.into_iter().zip(ys) {
            let r = match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y == 0.0 {
                        return Err(CalcError::Undefined("division by zero".into()));
                    }
                    x / y
                }
                _ => x.powf(y),
            };
            if r.is_infinite() || (r.is_nan() && !x.is_nan() && !y.is_nan()) {
                return Err(CalcError::Undefined(format!(
                    "result of {} is not a finite number",
                    fmt_cell(x)
                )));
            }
            out.push(r);
        }
        Ok(if vector {
            CalcValue::Vector(out)
        } else {
            CalcValue::Scalar(out[0])
        })
    }

    fn call(&mut self, name: &str, args: &[Expr], source: &str) -> Result<CalcValue, CalcError> {
        if name == "series" {
            return self.series_call(args, source);
        }
        let mut vals = Vec::with_capacity(args.len());
        for a in args {
            vals.push(self.eval(a)?);
        }
        let value = match name {
            "abs" => {
                let [v] = one(name, vals)?;
                self.map(v, f64::abs)?
            }
            "diff" => {
                let [v] = one(name, vals)?;
                let xs = vector_arg(name, v)?;
                self.charge(xs.len())?;
                CalcValue::Vector(xs.windows(2).map(|w| w[1] - w[0]).collect())
            }
            "len" => {
                let [v] = one(name, vals)?;
                CalcValue::Scalar(vector_arg(name, v)?.len() as f64)
            }
            "sum" => {
                let xs = self.flatten(name, vals)?;
                CalcValue::Scalar(stats::sum(&xs))
            }
            "mean" | "std" | "min" | "max" => {
                let xs = self.flatten(name, vals)?;
                let r = match name {
                    "mean" => stats::mean(&xs),
                    "std" => stats::std(&xs),
                    "min" => stats::min(&xs),
                    _ => stats::max(&xs),
                };
                CalcValue::Scalar(r.ok_or_else(|| {
                    CalcError::Undefined(format!("{name} of no observed values"))
                })?)
            }
            other => {
                return Err(CalcError::Unsupported {
                    position: 0,
                    construct: other.to_string(),
                })
            }
        };
        if name != "abs" && name != "diff" {
            self.trace.push(format!("{source} = {value}"));
        }
        Ok(value)
    }

    /// Aggregates take one vector or several scalars.
    fn flatten(&mut self, name: &str, vals: Vec<CalcValue>) -> Result<Vec<f64>, CalcError> {
        if vals.is_empty() {
            return Err(CalcError::Type(format!("{name} needs at least one argument")));
        }
        let mut out = Vec::new();
        for v in vals {
            match v {
                CalcValue::Scalar(x) => out.push(x),
                CalcValue::Vector(xs) => out.extend(xs),
                CalcValue::Bool(_) => {
                    return Err(CalcError::Type(format!("{name} of a comparison result")))
                }
            }
        }
        self.charge(out.len())?;
        Ok(out)
    }

    fn series_call(&mut self, args: &[Expr], source: &str) -> Result<CalcValue, CalcError> {
        if args.len() != 1 && args.len() != 3 {
            return Err(CalcError::Type(
                "series takes (ch) or (ch, start, end)".into(),
            ));
        }
        let s = self.series;
        let ch = match &args[0] {
            Expr::Text(name) => s.resolve_channel(name),
            other => match self.eval(other)? {
                CalcValue::Scalar(v) if v >= 0.0 && v.fract() == 0.0 && (v as usize) < s.dim() => {
                    Some(v as usize)
                }
                _ => None,
            },
        }
        .ok_or_else(|| {
            let names: Vec<String> = (0..s.dim())
                .map(|i| format!("{i}={}", s.channel_name(i)))
                .collect();
            CalcError::Range(format!("no such channel; valid channels are {}", names.join(", ")))
        })?;
        let t = s.len();
        let (start, end) = if args.len() == 3 {
            (self.index_arg(&args[1], t)?, self.index_arg(&args[2], t)?)
        } else {
            (0, t.saturating_sub(1))
        };
        if start > end || end >= t {
            return Err(CalcError::Range(format!(
                "need 0 <= start <= end <= {}, got start={start}, end={end}",
                t.saturating_sub(1)
            )));
        }
        let slice = s.channels[ch][start..=end].to_vec();
        self.charge(slice.len())?;
        self.trace.push(format!(
            "{source} -> {} values of {}",
            slice.len(),
            s.channel_name(ch)
        ));
        Ok(CalcValue::Vector(slice))
    }

    fn index_arg(&mut self, e: &Expr, t: usize) -> Result<usize, CalcError> {
        if let Expr::Text(label) = e {
            return self.series.index_of_timestamp(label).ok_or_else(|| {
                CalcError::Range(format!("{label:?} is not a timestamp of this series"))
            });
        }
        match self.eval(e)? {
            CalcValue::Scalar(v) if v >= 0.0 && v.fract() == 0.0 && v < t as f64 => Ok(v as usize),
            CalcValue::Scalar(v) => Err(CalcError::Range(format!(
                "index {} is outside 0..={}",
                fmt_cell(v),
                t.saturating_sub(1)
            ))),
            _ => Err(CalcError::Type("series indices must be scalars".into())),
        }
    }
}

fn one(name: &str, vals: Vec<CalcValue>) -> Result<[CalcValue; 1], CalcError> {
    <[CalcValue; 1]>::try_from(vals)
        .map_err(|_| CalcError::Type(format!("{name} takes exactly one argument")))
}

fn vector_arg(name: &str, v: CalcValue) -> Result<Vec<f64>, CalcError> {
    match v {
        CalcValue::Vector(xs) => Ok(xs),
        _ => Err(CalcError::Type(format!("{name} needs a vector argument"))),
    }
}
