//! Fundamental-equation expressions: AST, parser, and generic evaluation.
//!
//! The DSL covers `+ - * / ^`, unary minus, parentheses, numeric literals
//! (with scientific notation), variable names and the functions `ln`, `exp`
//! and `sqrt`. Evaluation is generic over [`Ring`], so the same expression
//! can be evaluated on reals or on jets to obtain its derivatives.

mod parse;
mod system;

use std::fmt;

pub use parse::parse;
pub use system::{load_system, Constraint, PotentialClass, SystemDefinition};

use crate::error::{Error, Result};
use crate::jets::Ring;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Ln,
    Exp,
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
            BinaryOp::Pow => 4,
        }
    }
}

/// Precedence of a unary minus; sits between `*` and `^`.
const NEG_PRECEDENCE: u8 = 3;
const ATOM_PRECEDENCE: u8 = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Constant(f64),
    Variable(String),
    Unary(UnaryOp, Box<Expression>),
    Binary(BinaryOp, Box<Expression>, Box<Expression>),
}

/// Variable bindings for evaluation: parallel slices of names and values.
#[derive(Debug, Clone, Copy)]
pub struct Bindings<'a, T> {
    names: &'a [String],
    values: &'a [T],
}

impl<'a, T> Bindings<'a, T> {
    pub fn new(names: &'a [String], values: &'a [T]) -> Self {
        assert_eq!(names.len(), values.len(), "names and values differ in length");
        Bindings { names, values }
    }

    fn get(&self, name: &str) -> Option<&'a T> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|pos| &self.values[pos])
    }
}

impl Expression {
    pub fn constant(c: f64) -> Self {
        Expression::Constant(c)
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expression::Variable(name.into())
    }

    pub fn unary(op: UnaryOp, child: Expression) -> Self {
        Expression::Unary(op, Box::new(child))
    }

    pub fn binary(op: BinaryOp, lhs: Expression, rhs: Expression) -> Self {
        Expression::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn add(self, rhs: Expression) -> Self {
        Expression::binary(BinaryOp::Add, self, rhs)
    }

    pub fn sub(self, rhs: Expression) -> Self {
        Expression::binary(BinaryOp::Sub, self, rhs)
    }

    pub fn mul(self, rhs: Expression) -> Self {
        Expression::binary(BinaryOp::Mul, self, rhs)
    }

    pub fn div(self, rhs: Expression) -> Self {
        Expression::binary(BinaryOp::Div, self, rhs)
    }

    pub fn pow(self, rhs: Expression) -> Self {
        Expression::binary(BinaryOp::Pow, self, rhs)
    }

    pub fn neg(self) -> Self {
        Expression::unary(UnaryOp::Neg, self)
    }

    pub fn ln(self) -> Self {
        Expression::unary(UnaryOp::Ln, self)
    }

    /// Names of all variables referenced, in first-occurrence order.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut Vec<String>) {
        match self {
            Expression::Constant(_) => {}
            Expression::Variable(name) => {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
            Expression::Unary(_, child) => child.collect_variables(out),
            Expression::Binary(_, lhs, rhs) => {
                lhs.collect_variables(out);
                rhs.collect_variables(out);
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expression::Constant(_) => true,
            Expression::Variable(_) => false,
            Expression::Unary(_, child) => child.is_constant(),
            Expression::Binary(_, lhs, rhs) => lhs.is_constant() && rhs.is_constant(),
        }
    }

    pub fn evaluate<T: Ring>(&self, bindings: &Bindings<'_, T>) -> Result<T> {
        match self {
            Expression::Constant(c) => Ok(T::from_f64(*c)),
            Expression::Variable(name) => bindings
                .get(name)
                .cloned()
                .ok_or_else(|| Error::UnboundVariable(name.clone())),
            Expression::Unary(op, child) => {
                let x = child.evaluate(bindings)?;
                match op {
                    UnaryOp::Neg => Ok(x.negate()),
                    UnaryOp::Ln => x.ln(),
                    UnaryOp::Exp => Ok(x.exp()),
                    UnaryOp::Sqrt => x.sqrt(),
                }
            }
            Expression::Binary(op, lhs, rhs) => {
                if *op == BinaryOp::Pow {
                    return self.evaluate_pow(lhs, rhs, bindings);
                }
                let a = lhs.evaluate(bindings)?;
                let b = rhs.evaluate(bindings)?;
                match op {
                    BinaryOp::Add => Ok(a.plus(&b)),
                    BinaryOp::Sub => Ok(a.minus(&b)),
                    BinaryOp::Mul => Ok(a.times(&b)),
                    BinaryOp::Div => a.divide(&b),
                    BinaryOp::Pow => unreachable!(),
                }
            }
        }
    }

    /// Integer constant exponents take the repeated-multiplication path (any
    /// base); other constant exponents need a positive base; variable
    /// exponents go through `exp(y ln x)`.
    fn evaluate_pow<T: Ring>(
        &self,
        base: &Expression,
        exponent: &Expression,
        bindings: &Bindings<'_, T>,
    ) -> Result<T> {
        let b = base.evaluate(bindings)?;
        if exponent.is_constant() {
            let p = exponent.evaluate::<f64>(&Bindings::new(&[], &[]))?;
            if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
                return b.powi(p as i32);
            }
            return b.powf(p);
        }
        let e = exponent.evaluate(bindings)?;
        Ok(e.times(&b.ln()?).exp())
    }

    /// Convenience: evaluate on reals with named values.
    pub fn eval_f64(&self, names: &[String], values: &[f64]) -> Result<f64> {
        self.evaluate(&Bindings::new(names, values))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expression::Constant(_) | Expression::Variable(_) => ATOM_PRECEDENCE,
            Expression::Unary(UnaryOp::Neg, _) => NEG_PRECEDENCE,
            Expression::Unary(_, _) => ATOM_PRECEDENCE,
            Expression::Binary(op, _, _) => op.precedence(),
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expression, parenthesize: bool) -> fmt::Result {
    if parenthesize {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Prints with the minimal parentheses needed to re-parse to the same tree.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Constant(c) => {
                let text = if c.fract() == 0.0 && c.abs() < 1e15 {
                    format!("{c}")
                } else {
                    format!("{c:?}")
                };
                if c.is_sign_negative() {
                    write!(f, "({text})")
                } else {
                    f.write_str(&text)
                }
            }
            Expression::Variable(name) => f.write_str(name),
            Expression::Unary(UnaryOp::Neg, child) => {
                f.write_str("-")?;
                // `-a^b` already parses as `-(a^b)`, so only looser operators need parens.
                write_operand(f, child, child.precedence() < NEG_PRECEDENCE)
            }
            Expression::Unary(op, child) => {
                let name = match op {
                    UnaryOp::Ln => "ln",
                    UnaryOp::Exp => "exp",
                    UnaryOp::Sqrt => "sqrt",
                    UnaryOp::Neg => unreachable!(),
                };
                write!(f, "{name}({child})")
            }
            Expression::Binary(op, lhs, rhs) => {
                let p = op.precedence();
                let (left_parens, right_parens) = if *op == BinaryOp::Pow {
                    // right-associative; the exponent slot also accepts a bare unary minus
                    (lhs.precedence() <= p, rhs.precedence() < NEG_PRECEDENCE)
                } else {
                    (lhs.precedence() < p, rhs.precedence() <= p)
                };
                write_operand(f, lhs, left_parens)?;
                write!(f, "{}", op.symbol())?;
                write_operand(f, rhs, right_parens)
            }
        }
    }
}
