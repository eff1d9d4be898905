//! Component expressions for metrics and one-forms.
//!
//! The grammar covers coordinates `x1..xn`, numeric literals, `+ - * / ^`
//! with integer exponents, unary minus, and `sin cos exp log sqrt`. Precedence
//! from tightest: `^` (right-associative), unary minus, `* /`, `+ -`.
//!
//! ```
//! use matsumoto::expr::{eval_jet, parse_expression};
//!
//! let e = parse_expression("x1^2", 1).unwrap();
//! let j = eval_jet(&e, &[3.0], &[vec![1.0]], 2).unwrap();
//! assert_eq!((j.value, j.first(0), j.second(0, 0)), (9.0, 6.0, 2.0));
//! ```

mod parse;

use std::fmt;

use thiserror::Error;

use crate::number::{Jet, Number};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier '{name}' at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable x{index} at offset {offset} exceeds dimension {dim}")]
    VariableOutOfRange {
        index: usize,
        dim: usize,
        offset: usize,
    },
    #[error("domain error at offset {offset}: {message}")]
    Domain { offset: usize, message: String },
    #[error("expected {expected} coordinates, got {got}")]
    PointDimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

/// Parsed expression. Equality ignores source offsets.
#[derive(Debug, Clone)]
pub struct Expr {
    node: Node,
    offset: usize,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        use Node::*;
        match (&self.node, &other.node) {
            (Const(a), Const(b)) => a.to_bits() == b.to_bits(),
            (Var(a), Var(b)) => a == b,
            (Neg(a), Neg(b)) => a == b,
            (Add(a, b), Add(c, d))
            | (Sub(a, b), Sub(c, d))
            | (Mul(a, b), Mul(c, d))
            | (Div(a, b), Div(c, d)) => a == c && b == d,
            (Pow(a, m), Pow(b, k)) => a == b && m == k,
            (Call(f, a), Call(g, b)) => f == g && a == b,
            _ => false,
        }
    }
}

/// Which identifiers name variables.
#[derive(Debug, Clone, Copy)]
enum VarSet {
    Coordinates(usize),
    Slope,
}

impl VarSet {
    fn resolve(&self, name: &str, offset: usize) -> Result<usize, ExprError> {
        match self {
            VarSet::Slope if name == "s" => Ok(0),
            VarSet::Coordinates(dim) => {
                let digits = name.strip_prefix('x').filter(|d| {
                    !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()) && !d.starts_with('0')
                });
                match digits.and_then(|d| d.parse::<usize>().ok()) {
                    Some(index) if index <= *dim => Ok(index - 1),
                    Some(index) => Err(ExprError::VariableOutOfRange {
                        index,
                        dim: *dim,
                        offset,
                    }),
                    None => Err(ExprError::UnknownIdentifier {
                        name: name.to_string(),
                        offset,
                    }),
                }
            }
            VarSet::Slope => Err(ExprError::UnknownIdentifier {
                name: name.to_string(),
                offset,
            }),
        }
    }
}

/// Parse an expression in the coordinates `x1..x{dim}`.
pub fn parse_expression(src: &str, dim: usize) -> Result<Expr, ExprError> {
    parse::Parser::new(src, VarSet::Coordinates(dim))?.parse_all()
}

/// Parse an expression in the single variable `s`, used for profile functions.
pub fn parse_profile(src: &str) -> Result<Expr, ExprError> {
    parse::Parser::new(src, VarSet::Slope)?.parse_all()
}

impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr {
            node: Node::Const(v),
            offset: 0,
        }
    }

    /// Evaluate with any scalar type; `vars[k]` stands for variable `k`.
    pub fn eval<T: Number>(&self, vars: &[T]) -> Result<T, ExprError> {
        let like = |c: f64| vars[0].constant_like(c);
        Ok(match &self.node {
            Node::Const(c) => like(*c),
            Node::Var(k) => vars[*k].clone(),
            Node::Neg(a) => -a.eval(vars)?,
            Node::Add(a, b) => a.eval(vars)? + b.eval(vars)?,
            Node::Sub(a, b) => a.eval(vars)? - b.eval(vars)?,
            Node::Mul(a, b) => a.eval(vars)? * b.eval(vars)?,
            Node::Div(a, b) => {
                let den = b.eval(vars)?;
                if den.value() == 0.0 {
                    return Err(self.domain("division by zero"));
                }
                a.eval(vars)?.div(&den)
            }
            Node::Pow(a, k) => {
                let base = a.eval(vars)?;
                if *k < 0 && base.value() == 0.0 {
                    return Err(self.domain("zero raised to a negative power"));
                }
                let p = base.powi(k.unsigned_abs());
                if *k < 0 {
                    p.recip()
                } else {
                    p
                }
            }
            Node::Call(f, a) => {
                let u = a.eval(vars)?;
                let v = u.value();
                let derivs = match f {
                    Func::Sin => [v.sin(), v.cos(), -v.sin(), -v.cos(), v.sin()],
                    Func::Cos => [v.cos(), -v.sin(), -v.cos(), v.sin(), v.cos()],
                    Func::Exp => [v.exp(); 5],
                    Func::Log => {
                        if v <= 0.0 {
                            return Err(self.domain("log of a nonpositive value"));
                        }
                        let r = 1.0 / v;
                        [v.ln(), r, -r * r, 2.0 * r * r * r, -6.0 * r.powi(4)]
                    }
                    Func::Sqrt => {
                        if v < 0.0 || (v == 0.0 && !u.is_plain()) {
                            return Err(self.domain("sqrt of a nonpositive value"));
                        }
                        return Ok(u.sqrt());
                    }
                };
                u.compose(&derivs)
            }
        })
    }

    fn domain(&self, message: &str) -> ExprError {
        ExprError::Domain {
            offset: self.offset,
            message: message.to_string(),
        }
    }

    /// Largest variable index used plus one.
    pub fn arity(&self) -> usize {
        match &self.node {
            Node::Const(_) => 0,
            Node::Var(k) => k + 1,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.arity(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.arity().max(b.arity())
            }
        }
    }
}

impl fmt::Display for Expr {
    // Fully parenthesized output; reparsing yields an equal tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Node::Const(c) => write!(f, "{c:?}"),
            Node::Var(k) => write!(f, "x{}", k + 1),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Pow(a, k) => write!(f, "({a}^({k}))"),
            Node::Call(g, a) => write!(f, "{}({a})", g.name()),
        }
    }
}

/// Value and directional partials of an expression at a point.
///
/// `first` is indexed by direction; `second` is stored once per unordered
/// pair of directions, so `second(u, v)` and `second(v, u)` read one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct JetValue {
    pub value: f64,
    pub order: u8,
    jet: Jet,
}

impl JetValue {
    pub fn directions(&self) -> usize {
        self.jet.nvars()
    }

    /// First partial along direction `d`; 0 when order is 0.
    pub fn first(&self, d: usize) -> f64 {
        if self.order >= 1 {
            self.jet.first(d)
        } else {
            0.0
        }
    }

    /// Mixed second partial along directions `d` and `e`; 0 when order < 2.
    pub fn second(&self, d: usize, e: usize) -> f64 {
        if self.order >= 2 {
            self.jet.second(d, e)
        } else {
            0.0
        }
    }
}

/// Evaluate `e` at `point` with partials along `directions` up to `order`.
pub fn eval_jet(
    e: &Expr,
    point: &[f64],
    directions: &[Vec<f64>],
    order: u8,
) -> Result<JetValue, ExprError> {
    if e.arity() > point.len() {
        return Err(ExprError::PointDimension {
            expected: e.arity(),
            got: point.len(),
        });
    }
    for d in directions {
        if d.len() != point.len() {
            return Err(ExprError::PointDimension {
                expected: point.len(),
                got: d.len(),
            });
        }
    }
    let nd = if order == 0 { 0 } else { directions.len() };
    let vars: Vec<Jet> = if point.is_empty() {
        vec![Jet::constant(0.0, nd)]
    } else {
        (0..point.len())
            .map(|k| Jet::linear(point[k], (0..nd).map(|d| directions[d][k]).collect()))
            .collect()
    };
    let jet = e.eval(&vars)?;
    Ok(JetValue {
        value: jet.value(),
        order: order.min(2),
        jet,
    })
}
