//! Closed-form scalar expressions in the time variable `t` and spatial
//! variables `x1..xn`.
//!
//! Expressions are plain trees; evaluation walks the tree, differentiation is
//! symbolic. The only rewriting ever applied is constant folding plus the
//! unit laws (`u*1`, `u+0`, `u^1`, ...) that keep derivatives readable.
//! Parsing never rewrites, so printing and re-parsing reproduces a tree
//! exactly.

mod parse;

use crate::{Error, Result};
use std::fmt;

/// Built-in unary functions. `log` is the natural logarithm and `sign` maps
/// 0 to 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Tanh,
    Sign,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Tanh => "tanh",
            Func::Sign => "sign",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            Func::Tanh => v.tanh(),
            Func::Sign => {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Expression tree node. Spatial variables are stored zero-based; the surface
/// syntax `x1` maps to `Var(0)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Time,
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A point (t, x) at which expressions are evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoint {
    pub t: f64,
    pub x: Vec<f64>,
}

impl EvalPoint {
    pub fn new(t: f64, x: Vec<f64>) -> Self {
        EvalPoint { t, x }
    }
}

/// Differentiation variable: time or one of the spatial coordinates
/// (zero-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffVar {
    Time,
    Spatial(usize),
}

/// An expression together with the spatial dimension it was declared
/// against. Every `Var` index in the tree is strictly below `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    node: Node,
    dim: usize,
}

impl Expression {
    /// Parse `src` as an expression over `t, x1..x{dim}`. Grammar:
    ///
    /// ```text
    /// expr   := term (("+" | "-") term)*
    /// term   := factor (("*" | "/") factor)*
    /// factor := atom ("^" factor)?
    /// atom   := number | "t" | "x" digits | func "(" expr ")" | "(" expr ")" | "-" atom
    /// ```
    ///
    /// `pi` and `e` parse as numeric literals. A unary minus in front of a
    /// bare number folds into the literal, so negative constants round-trip.
    pub fn parse(src: &str, dim: usize) -> Result<Self> {
        let node = parse::parse(src, dim)?;
        Ok(Expression { node, dim })
    }

    pub fn from_node(node: Node, dim: usize) -> Result<Self> {
        check_indices(&node, dim)?;
        Ok(Expression { node, dim })
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Constant literal of the given dimension.
    pub fn constant(value: f64, dim: usize) -> Self {
        Expression { node: Node::Num(value), dim }
    }

    /// The variable `t`.
    pub fn time(dim: usize) -> Self {
        Expression { node: Node::Time, dim }
    }

    /// The variable `x{index+1}`.
    pub fn spatial(index: usize, dim: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::Dimension { index: index + 1, dim });
        }
        Ok(Expression { node: Node::Var(index), dim })
    }

    pub fn evaluate(&self, p: &EvalPoint) -> Result<f64> {
        self.eval(p.t, &p.x)
    }

    /// Evaluate at time `t` and state `x`. `x.len()` must equal the declared
    /// dimension. Domain violations (log of a non-positive value, division
    /// by zero, any non-finite intermediate) surface as `Error::Eval`.
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "evaluation point has dimension {}, expression expects {}",
                x.len(),
                self.dim
            )));
        }
        eval_node(&self.node, t, x)
    }

    /// Symbolic derivative with respect to `var`. The result is folded with
    /// the unit laws so simple rules come out in the shape one would write by
    /// hand (`d/dx1 x1^2` is `2*x1`).
    pub fn differentiate(&self, var: DiffVar) -> Expression {
        let node = fold(diff_node(&self.node, var));
        Expression { node, dim: self.dim }
    }

    /// True if the tree mentions `t` anywhere.
    pub fn references_time(&self) -> bool {
        references_time(&self.node)
    }

    /// Simultaneously substitute `t_repl` for `t` (when given) and
    /// `x_repl[i]` for `x{i+1}`. All replacements must share one dimension,
    /// which becomes the dimension of the result. There must be exactly one
    /// replacement per spatial variable of `self`.
    pub fn substitute(&self, t_repl: Option<&Expression>, x_repl: &[Expression]) -> Result<Expression> {
        if x_repl.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "substitution provides {} spatial replacements, expression expects {}",
                x_repl.len(),
                self.dim
            )));
        }
        let new_dim = if let Some(tr) = t_repl {
            tr.dim
        } else if let Some(first) = x_repl.first() {
            first.dim
        } else {
            self.dim
        };
        if let Some(tr) = t_repl {
            if tr.dim != new_dim {
                return Err(Error::InvalidInput("substitution dimensions disagree".into()));
            }
        }
        for r in x_repl {
            if r.dim != new_dim {
                return Err(Error::InvalidInput("substitution dimensions disagree".into()));
            }
        }
        let node = fold(subst_node(&self.node, t_repl.map(|e| &e.node), x_repl));
        Ok(Expression { node, dim: new_dim })
    }
}

fn check_indices(node: &Node, dim: usize) -> Result<()> {
    match node {
        Node::Num(_) | Node::Time => Ok(()),
        Node::Var(i) => {
            if *i < dim {
                Ok(())
            } else {
                Err(Error::Dimension { index: *i + 1, dim })
            }
        }
        Node::Neg(a) | Node::Call(_, a) => check_indices(a, dim),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            check_indices(a, dim)?;
            check_indices(b, dim)
        }
    }
}

fn references_time(node: &Node) -> bool {
    match node {
        Node::Time => true,
        Node::Num(_) | Node::Var(_) => false,
        Node::Neg(a) | Node::Call(_, a) => references_time(a),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            references_time(a) || references_time(b)
        }
    }
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Eval(format!("non-finite result in {what}")))
    }
}

fn eval_node(node: &Node, t: f64, x: &[f64]) -> Result<f64> {
    match node {
        Node::Num(v) => Ok(*v),
        Node::Time => Ok(t),
        Node::Var(i) => Ok(x[*i]),
        Node::Neg(a) => Ok(-eval_node(a, t, x)?),
        Node::Add(a, b) => finite(eval_node(a, t, x)? + eval_node(b, t, x)?, "addition"),
        Node::Sub(a, b) => finite(eval_node(a, t, x)? - eval_node(b, t, x)?, "subtraction"),
        Node::Mul(a, b) => finite(eval_node(a, t, x)? * eval_node(b, t, x)?, "multiplication"),
        Node::Div(a, b) => {
            let den = eval_node(b, t, x)?;
            if den == 0.0 {
                return Err(Error::Eval("division by zero".into()));
            }
            finite(eval_node(a, t, x)? / den, "division")
        }
        Node::Pow(a, b) => {
            let base = eval_node(a, t, x)?;
            let ex = eval_node(b, t, x)?;
            let v = base.powf(ex);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Eval(format!("power {base}^{ex} is not finite")))
            }
        }
        Node::Call(f, a) => {
            let arg = eval_node(a, t, x)?;
            if *f == Func::Log && arg <= 0.0 {
                return Err(Error::Eval(format!("log of non-positive value {arg}")));
            }
            let v = f.apply(arg);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Eval(format!("{}({arg}) is not finite", f.name())))
            }
        }
    }
}

fn diff_node(node: &Node, var: DiffVar) -> Node {
    use Node::*;
    match node {
        Num(_) => Num(0.0),
        Time => Num(if var == DiffVar::Time { 1.0 } else { 0.0 }),
        Var(i) => Num(if var == DiffVar::Spatial(*i) { 1.0 } else { 0.0 }),
        Neg(a) => Neg(Box::new(diff_node(a, var))),
        Add(a, b) => Add(Box::new(diff_node(a, var)), Box::new(diff_node(b, var))),
        Sub(a, b) => Sub(Box::new(diff_node(a, var)), Box::new(diff_node(b, var))),
        Mul(a, b) => {
            let da = diff_node(a, var);
            let db = diff_node(b, var);
            Add(
                Box::new(Mul(Box::new(da), b.clone())),
                Box::new(Mul(a.clone(), Box::new(db))),
            )
        }
        Div(a, b) => {
            let da = diff_node(a, var);
            let db = diff_node(b, var);
            // (a'b - ab') / b^2
            Div(
                Box::new(Sub(
                    Box::new(Mul(Box::new(da), b.clone())),
                    Box::new(Mul(a.clone(), Box::new(db))),
                )),
                Box::new(Pow(b.clone(), Box::new(Num(2.0)))),
            )
        }
        Pow(a, b) => {
            if let Num(c) = **b {
                // constant exponent: c * a^(c-1) * a'
                let da = diff_node(a, var);
                Mul(
                    Box::new(Mul(
                        Box::new(Num(c)),
                        Box::new(Pow(a.clone(), Box::new(Num(c - 1.0)))),
                    )),
                    Box::new(da),
                )
            } else {
                // a^b * (b' log a + b a'/a)
                let da = diff_node(a, var);
                let db = diff_node(b, var);
                Mul(
                    Box::new(Pow(a.clone(), b.clone())),
                    Box::new(Add(
                        Box::new(Mul(Box::new(db), Box::new(Call(Func::Log, a.clone())))),
                        Box::new(Div(Box::new(Mul(b.clone(), Box::new(da))), a.clone())),
                    )),
                )
            }
        }
        Call(f, a) => {
            let da = diff_node(a, var);
            let outer = match f {
                Func::Sin => Call(Func::Cos, a.clone()),
                Func::Cos => Neg(Box::new(Call(Func::Sin, a.clone()))),
                Func::Tan => Div(
                    Box::new(Num(1.0)),
                    Box::new(Pow(Box::new(Call(Func::Cos, a.clone())), Box::new(Num(2.0)))),
                ),
                Func::Exp => Call(Func::Exp, a.clone()),
                Func::Log => Div(Box::new(Num(1.0)), a.clone()),
                Func::Sqrt => Div(
                    Box::new(Num(1.0)),
                    Box::new(Mul(Box::new(Num(2.0)), Box::new(Call(Func::Sqrt, a.clone())))),
                ),
                Func::Abs => Call(Func::Sign, a.clone()),
                Func::Tanh => Sub(
                    Box::new(Num(1.0)),
                    Box::new(Pow(Box::new(Call(Func::Tanh, a.clone())), Box::new(Num(2.0)))),
                ),
                // derivative of the sign step is 0 away from the jump
                Func::Sign => Num(0.0),
            };
            Mul(Box::new(outer), Box::new(da))
        }
    }
}

fn subst_node(node: &Node, t_repl: Option<&Node>, x_repl: &[Expression]) -> Node {
    match node {
        Node::Num(v) => Node::Num(*v),
        Node::Time => t_repl.cloned().unwrap_or(Node::Time),
        Node::Var(i) => x_repl[*i].node.clone(),
        Node::Neg(a) => Node::Neg(Box::new(subst_node(a, t_repl, x_repl))),
        Node::Call(f, a) => Node::Call(*f, Box::new(subst_node(a, t_repl, x_repl))),
        Node::Add(a, b) => Node::Add(
            Box::new(subst_node(a, t_repl, x_repl)),
            Box::new(subst_node(b, t_repl, x_repl)),
        ),
        Node::Sub(a, b) => Node::Sub(
            Box::new(subst_node(a, t_repl, x_repl)),
            Box::new(subst_node(b, t_repl, x_repl)),
        ),
        Node::Mul(a, b) => Node::Mul(
            Box::new(subst_node(a, t_repl, x_repl)),
            Box::new(subst_node(b, t_repl, x_repl)),
        ),
        Node::Div(a, b) => Node::Div(
            Box::new(subst_node(a, t_repl, x_repl)),
            Box::new(subst_node(b, t_repl, x_repl)),
        ),
        Node::Pow(a, b) => Node::Pow(
            Box::new(subst_node(a, t_repl, x_repl)),
            Box::new(subst_node(b, t_repl, x_repl)),
        ),
    }
}

fn is_num(node: &Node, v: f64) -> bool {
    matches!(node, Node::Num(c) if *c == v)
}

/// Bottom-up constant folding plus unit laws. Constant subtrees collapse only
/// when the folded value is finite, so expressions like `1/0` keep their
/// shape and still fail at evaluation time. `0*u -> 0` is applied even though
/// it widens the domain (the standard trade for readable derivatives).
pub(crate) fn fold(node: Node) -> Node {
    use Node::*;
    let node = match node {
        Neg(a) => Neg(Box::new(fold(*a))),
        Call(f, a) => Call(f, Box::new(fold(*a))),
        Add(a, b) => Add(Box::new(fold(*a)), Box::new(fold(*b))),
        Sub(a, b) => Sub(Box::new(fold(*a)), Box::new(fold(*b))),
        Mul(a, b) => Mul(Box::new(fold(*a)), Box::new(fold(*b))),
        Div(a, b) => Div(Box::new(fold(*a)), Box::new(fold(*b))),
        Pow(a, b) => Pow(Box::new(fold(*a)), Box::new(fold(*b))),
        other => other,
    };
    match node {
        Neg(a) => match *a {
            Num(v) => Num(-v),
            Neg(inner) => *inner,
            other => Neg(Box::new(other)),
        },
        Add(a, b) => {
            if let (Num(x), Num(y)) = (&*a, &*b) {
                let v = x + y;
                if v.is_finite() {
                    return Num(v);
                }
            }
            if is_num(&a, 0.0) {
                *b
            } else if is_num(&b, 0.0) {
                *a
            } else {
                Add(a, b)
            }
        }
        Sub(a, b) => {
            if let (Num(x), Num(y)) = (&*a, &*b) {
                let v = x - y;
                if v.is_finite() {
                    return Num(v);
                }
            }
            if is_num(&b, 0.0) {
                *a
            } else if is_num(&a, 0.0) {
                fold(Neg(b))
            } else {
                Sub(a, b)
            }
        }
        Mul(a, b) => {
            if let (Num(x), Num(y)) = (&*a, &*b) {
                let v = x * y;
                if v.is_finite() {
                    return Num(v);
                }
            }
            if is_num(&a, 0.0) || is_num(&b, 0.0) {
                Num(0.0)
            } else if is_num(&a, 1.0) {
                *b
            } else if is_num(&b, 1.0) {
                *a
            } else {
                Mul(a, b)
            }
        }
        Div(a, b) => {
            if let (Num(x), Num(y)) = (&*a, &*b) {
                if *y != 0.0 {
                    let v = x / y;
                    if v.is_finite() {
                        return Num(v);
                    }
                }
            }
            if is_num(&b, 1.0) {
                *a
            } else {
                Div(a, b)
            }
        }
        Pow(a, b) => {
            if let (Num(x), Num(y)) = (&*a, &*b) {
                let v = x.powf(*y);
                if v.is_finite() {
                    return Num(v);
                }
            }
            if is_num(&b, 1.0) {
                *a
            } else if is_num(&b, 0.0) {
                Num(1.0)
            } else {
                Pow(a, b)
            }
        }
        Call(f, a) => {
            if let Num(x) = *a {
                let v = f.apply(x);
                if v.is_finite() && !(f == Func::Log && x <= 0.0) {
                    return Num(v);
                }
                return Call(f, Box::new(Num(x)));
            }
            Call(f, a)
        }
        other => other,
    }
}

// Printing uses minimal parentheses that still round-trip under the grammar.
// Precedence levels: Add/Sub = 1, Mul/Div = 2, Neg = 3, Pow = 4, atoms = 5.
// Pow is right-associative; Sub/Div need parens around a right child of the
// same level.
fn prec(node: &Node) -> u8 {
    match node {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(..) => 3,
        Node::Pow(..) => 4,
        Node::Num(v) if *v < 0.0 => 3,
        _ => 5,
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, min_prec: u8) -> fmt::Result {
    let p = prec(node);
    let parens = p < min_prec;
    if parens {
        write!(f, "(")?;
    }
    match node {
        Node::Num(v) => write!(f, "{v}")?,
        Node::Time => write!(f, "t")?,
        Node::Var(i) => write!(f, "x{}", i + 1)?,
        Node::Neg(a) => {
            // the grammar nests "-" inside the base of "^", so a negated
            // power must keep its parentheses: "-a^b" re-parses as (-a)^b
            write!(f, "-")?;
            write_node(f, a, 5)?;
        }
        Node::Add(a, b) => {
            write_node(f, a, 1)?;
            write!(f, "+")?;
            write_node(f, b, 2)?;
        }
        Node::Sub(a, b) => {
            write_node(f, a, 1)?;
            write!(f, "-")?;
            write_node(f, b, 2)?;
        }
        Node::Mul(a, b) => {
            write_node(f, a, 2)?;
            write!(f, "*")?;
            write_node(f, b, 3)?;
        }
        Node::Div(a, b) => {
            write_node(f, a, 2)?;
            write!(f, "/")?;
            write_node(f, b, 3)?;
        }
        Node::Pow(a, b) => {
            write_node(f, a, 5)?;
            write!(f, "^")?;
            write_node(f, b, 4)?;
        }
        Node::Call(fun, a) => {
            write!(f, "{}(", fun.name())?;
            write_node(f, a, 0)?;
            write!(f, ")")?;
        }
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.node, 0)
    }
}

#[cfg(test)]
mod tests;
