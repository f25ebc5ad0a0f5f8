//! Scalar coefficient functions of one variable.
//!
//! An [`Expr`] is a small immutable syntax tree over a distinguished variable
//! (rendered as `x` unless parsed with another name), named real parameters,
//! the four arithmetic operators, `^`, unary minus and the functions
//! `sqrt`, `exp`, `ln`, `sin`, `cos` and `abs`. Expressions can be parsed,
//! rendered back into the same grammar, evaluated under a set of
//! [`Bindings`] and differentiated exactly.

mod diff;
mod parse;
mod simplify;

use std::collections::BTreeMap;
use std::fmt;

pub use parse::ParseError;

/// Location of a node in the source text (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Num(f64),
    Var,
    Param(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Expression tree. Equality is structural and ignores source spans.
#[derive(Debug, Clone)]
pub struct Expr {
    kind: ExprKind,
    span: Option<Span>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

/// Values for the named parameters of an expression.
pub type Bindings = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("parameter `{0}` is not bound")]
    Unbound(String),
    #[error("{what} in `{subexpr}` at x = {x}{}", .span.map(|s| format!(" ({s})")).unwrap_or_default())]
    Domain { what: &'static str, subexpr: String, x: f64, span: Option<Span> },
}

impl Expr {
    pub(crate) fn new(kind: ExprKind) -> Expr {
        Expr { kind, span: None }
    }

    pub(crate) fn with_span(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span: Some(span) }
    }

    pub fn kind(&self) -> &ExprKind {
        &self.kind
    }

    pub fn span(&self) -> Option<Span> {
        self.span
    }

    pub fn num(v: f64) -> Expr {
        Expr::new(ExprKind::Num(v))
    }

    pub fn var() -> Expr {
        Expr::new(ExprKind::Var)
    }

    pub fn param(name: &str) -> Expr {
        Expr::new(ExprKind::Param(name.to_string()))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::new(ExprKind::Call(f, Box::new(arg)))
    }

    pub fn sqrt(self) -> Expr {
        Expr::call(Func::Sqrt, self)
    }

    pub fn exp(self) -> Expr {
        Expr::call(Func::Exp, self)
    }

    pub fn ln(self) -> Expr {
        Expr::call(Func::Ln, self)
    }

    pub fn pow(self, exponent: Expr) -> Expr {
        Expr::binary(BinOp::Pow, self, exponent)
    }

    pub fn powi(self, exponent: i32) -> Expr {
        self.pow(Expr::num(exponent as f64))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)))
    }

    /// Parse text in the expression grammar with `x` as the variable.
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        parse::parse(text, "x")
    }

    /// Parse text treating `variable` as the independent variable.
    pub fn parse_in(text: &str, variable: &str) -> Result<Expr, ParseError> {
        parse::parse(text, variable)
    }

    pub fn as_num(&self) -> Option<f64> {
        match self.kind {
            ExprKind::Num(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num() == Some(0.0)
    }

    /// True when the expression mentions the variable.
    pub fn depends_on_var(&self) -> bool {
        match &self.kind {
            ExprKind::Var => true,
            ExprKind::Num(_) | ExprKind::Param(_) => false,
            ExprKind::Neg(e) | ExprKind::Call(_, e) => e.depends_on_var(),
            ExprKind::Binary(_, l, r) => l.depends_on_var() || r.depends_on_var(),
        }
    }

    /// Names of all parameters, sorted and deduplicated.
    pub fn parameters(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match &e.kind {
                ExprKind::Param(p) => out.push(p.clone()),
                ExprKind::Num(_) | ExprKind::Var => {}
                ExprKind::Neg(a) | ExprKind::Call(_, a) => walk(a, out),
                ExprKind::Binary(_, l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// Replace every occurrence of the variable by `value`.
    pub fn substitute(&self, value: &Expr) -> Expr {
        let kind = match &self.kind {
            ExprKind::Var => return value.clone(),
            ExprKind::Num(_) | ExprKind::Param(_) => return self.clone(),
            ExprKind::Neg(a) => ExprKind::Neg(Box::new(a.substitute(value))),
            ExprKind::Call(f, a) => ExprKind::Call(*f, Box::new(a.substitute(value))),
            ExprKind::Binary(op, l, r) => {
                ExprKind::Binary(*op, Box::new(l.substitute(value)), Box::new(r.substitute(value)))
            }
        };
        Expr { kind, span: self.span }
    }

    /// Replace parameters that have a binding by their numeric value.
    pub fn bind(&self, params: &Bindings) -> Expr {
        let kind = match &self.kind {
            ExprKind::Param(p) => match params.get(p) {
                Some(v) => ExprKind::Num(*v),
                None => return self.clone(),
            },
            ExprKind::Num(_) | ExprKind::Var => return self.clone(),
            ExprKind::Neg(a) => ExprKind::Neg(Box::new(a.bind(params))),
            ExprKind::Call(f, a) => ExprKind::Call(*f, Box::new(a.bind(params))),
            ExprKind::Binary(op, l, r) => ExprKind::Binary(*op, Box::new(l.bind(params)), Box::new(r.bind(params))),
        };
        Expr { kind, span: self.span }
    }

    /// Evaluate at `x`. Domain violations are reported with the offending
    /// subexpression.
    pub fn eval(&self, x: f64, params: &Bindings) -> Result<f64, EvalError> {
        let domain = |what: &'static str| EvalError::Domain { what, subexpr: self.to_string(), x, span: self.span };
        Ok(match &self.kind {
            ExprKind::Num(v) => *v,
            ExprKind::Var => x,
            ExprKind::Param(p) => *params.get(p).ok_or_else(|| EvalError::Unbound(p.clone()))?,
            ExprKind::Neg(a) => -a.eval(x, params)?,
            ExprKind::Call(f, a) => {
                let v = a.eval(x, params)?;
                match f {
                    Func::Sqrt if v < 0.0 => return Err(domain("square root of a negative value")),
                    Func::Sqrt => v.sqrt(),
                    Func::Exp => v.exp(),
                    Func::Ln if v <= 0.0 => return Err(domain("logarithm of a non-positive value")),
                    Func::Ln => v.ln(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Abs => v.abs(),
                }
            }
            ExprKind::Binary(op, l, r) => {
                let a = l.eval(x, params)?;
                match op {
                    BinOp::Pow => {
                        if let Some(k) = integer_literal(r) {
                            if a == 0.0 && k < 0 {
                                return Err(domain("division by zero"));
                            }
                            a.powi(k)
                        } else {
                            let b = r.eval(x, params)?;
                            if a <= 0.0 {
                                return Err(domain("non-integer power of a non-positive base"));
                            }
                            a.powf(b)
                        }
                    }
                    _ => {
                        let b = r.eval(x, params)?;
                        match op {
                            BinOp::Add => a + b,
                            BinOp::Sub => a - b,
                            BinOp::Mul => a * b,
                            BinOp::Div if b == 0.0 => return Err(domain("division by zero")),
                            BinOp::Div => a / b,
                            BinOp::Pow => unreachable!(),
                        }
                    }
                }
            }
        })
    }

    fn precedence(&self) -> u8 {
        match &self.kind {
            ExprKind::Num(v) if v.is_sign_negative() => 3,
            ExprKind::Binary(op, _, _) => op.precedence(),
            ExprKind::Neg(_) => 3,
            _ => 5,
        }
    }

    /// Exact derivative of the given order, constant-folded.
    pub fn differentiate(&self, order: usize) -> Result<Expr, DiffError> {
        if order == 0 {
            return Err(DiffError::ZeroOrder);
        }
        let mut d = self.clone();
        for _ in 0..order {
            d = diff::derivative(&d).simplify();
        }
        Ok(d)
    }

    /// Shorthand for the first derivative.
    pub fn d(&self) -> Expr {
        diff::derivative(self).simplify()
    }

    pub fn simplify(&self) -> Expr {
        simplify::simplify(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiffError {
    #[error("derivative order must be positive")]
    ZeroOrder,
}

/// Integer value of a literal exponent, the only case where a non-positive
/// base is admitted.
fn integer_literal(e: &Expr) -> Option<i32> {
    let v = match &e.kind {
        ExprKind::Num(v) => *v,
        ExprKind::Neg(inner) => -inner.as_num()?,
        _ => return None,
    };
    (v.fract() == 0.0 && v.abs() <= i32::MAX as f64).then_some(v as i32)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Num(v) => write!(f, "{v}"),
            ExprKind::Var => write!(f, "x"),
            ExprKind::Param(p) => write!(f, "{p}"),
            ExprKind::Neg(a) => {
                if a.precedence() <= 3 {
                    write!(f, "-({a})")
                } else {
                    write!(f, "-{a}")
                }
            }
            ExprKind::Call(func, a) => write!(f, "{}({a})", func.name()),
            ExprKind::Binary(op, l, r) => {
                let p = op.precedence();
                // The base of ^ binds tighter than unary minus, so a negative
                // base always needs parentheses; right operands are parenthesised at
                // equal precedence so re-parsing preserves the evaluation order
                // bit for bit.
                let left_paren = if *op == BinOp::Pow { l.precedence() <= p } else { l.precedence() < p };
                let right_paren =
                    if *op == BinOp::Pow { r.precedence() < 5 } else { r.precedence() <= p || r.precedence() == 3 };
                if left_paren {
                    write!(f, "({l})")?;
                } else {
                    write!(f, "{l}")?;
                }
                write!(f, "{}", op.symbol())?;
                if right_paren {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
        }
    }
}

macro_rules! impl_op {
    ($tr:ident, $method:ident, $op:expr) => {
        impl std::ops::$tr for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, self, rhs)
            }
        }
        impl std::ops::$tr<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::binary($op, self, Expr::num(rhs))
            }
        }
        impl std::ops::$tr<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, Expr::num(self), rhs)
            }
        }
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::binary($op, self.clone(), rhs.clone())
            }
        }
    };
}

impl_op!(Add, add, BinOp::Add);
impl_op!(Sub, sub, BinOp::Sub);
impl_op!(Mul, mul, BinOp::Mul);
impl_op!(Div, div, BinOp::Div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::new(ExprKind::Neg(Box::new(self)))
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Expr, ParseError> {
        Expr::parse(s)
    }
}
