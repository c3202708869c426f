//! Closed-form scalar expressions used by scenario files.
//!
//! An [`Expression`] is parsed once and is immutable afterwards. For hot loops
//! it can be compiled against a fixed variable order into a [`Compiled`]
//! program, which evaluates from a slice of slot values without hashing.

mod lexer;
mod parser;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("missing binding for variable `{0}`")]
    MissingBinding(String),
    #[error("domain error: {0}")]
    Domain(String),
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
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Min,
    Max,
    Pow,
    Bump,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "pow" => Func::Pow,
            "bump" => Func::Bump,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
            Func::Bump => "bump",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max | Func::Pow => 2,
            _ => 1,
        }
    }
}

/// Smooth compactly supported cutoff: `exp(1 - 1/(1 - s^2))` on `|s| < 1`, zero elsewhere.
pub fn bump(s: f64) -> f64 {
    let s2 = s * s;
    if s2 < 1.0 {
        (1.0 - 1.0 / (1.0 - s2)).exp()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Number(f64),
    Var(String),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl Node {
    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Node::Number(_) => {}
            Node::Var(name) => {
                out.insert(name.clone());
            }
            Node::Neg(inner) => inner.collect_vars(out),
            Node::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Node::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }
}

/// Fully parenthesised rendering; reparsing it yields the same tree.
impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Number(v) => write!(f, "{v:?}"),
            Node::Var(name) => f.write_str(name),
            Node::Neg(inner) => write!(f, "(-{inner})"),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    source: String,
    ast: Node,
    free_vars: BTreeSet<String>,
}

impl Expression {
    pub fn parse(source: &str) -> Result<Expression, ExprError> {
        if source.trim().is_empty() {
            return Err(ExprError::Syntax {
                offset: 0,
                message: "empty expression".into(),
            });
        }
        let tokens = lexer::tokenize(source)?;
        let ast = parser::Parser::new(tokens).parse_complete()?;
        let mut free_vars = BTreeSet::new();
        ast.collect_vars(&mut free_vars);
        Ok(Expression {
            source: source.to_string(),
            ast,
            free_vars,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Node {
        &self.ast
    }

    pub fn free_vars(&self) -> &BTreeSet<String> {
        &self.free_vars
    }

    /// Canonical, fully parenthesised source text.
    pub fn print(&self) -> String {
        self.ast.to_string()
    }

    pub fn evaluate(&self, bindings: &HashMap<String, f64>) -> Result<f64, ExprError> {
        let slots: Vec<&str> = self.free_vars.iter().map(String::as_str).collect();
        let mut values = Vec::with_capacity(slots.len());
        for name in &slots {
            let v = bindings
                .get(*name)
                .ok_or_else(|| ExprError::MissingBinding(name.to_string()))?;
            values.push(*v);
        }
        self.compile(&slots)?.eval(&values)
    }

    /// Compiles against a slot order; every free variable must appear in `slots`.
    pub fn compile(&self, slots: &[&str]) -> Result<Compiled, ExprError> {
        let mut code = Vec::new();
        emit(&self.ast, slots, &mut code)?;
        let mut depth = 0usize;
        let mut max_depth = 0usize;
        for ins in &code {
            match ins {
                Instr::Const(_) | Instr::Load(_) => depth += 1,
                Instr::Neg | Instr::Call1(_) => {}
                Instr::Bin(_) | Instr::Call2(_) => depth -= 1,
            }
            max_depth = max_depth.max(depth);
        }
        Ok(Compiled {
            code,
            max_depth,
            arity: slots.len(),
        })
    }
}

impl std::str::FromStr for Expression {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expression::parse(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Instr {
    Const(f64),
    Load(usize),
    Neg,
    Bin(BinOp),
    Call1(Func),
    Call2(Func),
}

fn emit(node: &Node, slots: &[&str], code: &mut Vec<Instr>) -> Result<(), ExprError> {
    match node {
        Node::Number(v) => code.push(Instr::Const(*v)),
        Node::Var(name) => {
            let idx = slots
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| ExprError::MissingBinding(name.clone()))?;
            code.push(Instr::Load(idx));
        }
        Node::Neg(inner) => {
            emit(inner, slots, code)?;
            code.push(Instr::Neg);
        }
        Node::Binary(op, a, b) => {
            emit(a, slots, code)?;
            emit(b, slots, code)?;
            code.push(Instr::Bin(*op));
        }
        Node::Call(func, args) => {
            for a in args {
                emit(a, slots, code)?;
            }
            code.push(if func.arity() == 1 {
                Instr::Call1(*func)
            } else {
                Instr::Call2(*func)
            });
        }
    }
    Ok(())
}

/// Stack program for an [`Expression`] with a fixed variable order.
#[derive(Debug, Clone)]
pub struct Compiled {
    code: Vec<Instr>,
    max_depth: usize,
    arity: usize,
}

const INLINE_STACK: usize = 32;

impl Compiled {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, slots: &[f64]) -> Result<f64, ExprError> {
        if slots.len() < self.arity {
            return Err(ExprError::MissingBinding(format!("slot {}", slots.len())));
        }
        if self.max_depth <= INLINE_STACK {
            let mut stack = [0.0f64; INLINE_STACK];
            self.run(slots, &mut stack)
        } else {
            let mut stack = vec![0.0; self.max_depth];
            self.run(slots, &mut stack)
        }
    }

    fn run(&self, slots: &[f64], stack: &mut [f64]) -> Result<f64, ExprError> {
        let mut sp = 0usize;
        for ins in &self.code {
            match *ins {
                Instr::Const(v) => {
                    stack[sp] = v;
                    sp += 1;
                }
                Instr::Load(i) => {
                    stack[sp] = slots[i];
                    sp += 1;
                }
                Instr::Neg => stack[sp - 1] = -stack[sp - 1],
                Instr::Bin(op) => {
                    let b = stack[sp - 1];
                    let a = stack[sp - 2];
                    sp -= 1;
                    stack[sp - 1] = apply_bin(op, a, b)?;
                }
                Instr::Call1(func) => stack[sp - 1] = apply_unary(func, stack[sp - 1])?,
                Instr::Call2(func) => {
                    let b = stack[sp - 1];
                    let a = stack[sp - 2];
                    sp -= 1;
                    stack[sp - 1] = apply_binary_func(func, a, b)?;
                }
            }
        }
        Ok(stack[0])
    }
}

fn finite(v: f64, what: impl FnOnce() -> String) -> Result<f64, ExprError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ExprError::Domain(what()))
    }
}

fn apply_bin(op: BinOp, a: f64, b: f64) -> Result<f64, ExprError> {
    match op {
        BinOp::Add => finite(a + b, || format!("{a} + {b} overflows")),
        BinOp::Sub => finite(a - b, || format!("{a} - {b} overflows")),
        BinOp::Mul => finite(a * b, || format!("{a} * {b} is not finite")),
        BinOp::Div => {
            if b == 0.0 {
                Err(ExprError::Domain(format!("division of {a} by zero")))
            } else {
                finite(a / b, || format!("{a} / {b} is not finite"))
            }
        }
        BinOp::Pow => power(a, b),
    }
}

fn power(a: f64, b: f64) -> Result<f64, ExprError> {
    finite(a.powf(b), || format!("{a} ^ {b} is undefined"))
}

fn apply_unary(func: Func, x: f64) -> Result<f64, ExprError> {
    match func {
        Func::Sin => Ok(x.sin()),
        Func::Cos => Ok(x.cos()),
        Func::Exp => finite(x.exp(), || format!("exp({x}) overflows")),
        Func::Log => {
            if x > 0.0 {
                Ok(x.ln())
            } else {
                Err(ExprError::Domain(format!("log of nonpositive value {x}")))
            }
        }
        Func::Sqrt => {
            if x >= 0.0 {
                Ok(x.sqrt())
            } else {
                Err(ExprError::Domain(format!("sqrt of negative value {x}")))
            }
        }
        Func::Abs => Ok(x.abs()),
        Func::Bump => Ok(bump(x)),
        Func::Min | Func::Max | Func::Pow => unreachable!("binary function in unary slot"),
    }
}

fn apply_binary_func(func: Func, a: f64, b: f64) -> Result<f64, ExprError> {
    match func {
        Func::Min => Ok(a.min(b)),
        Func::Max => Ok(a.max(b)),
        Func::Pow => power(a, b),
        _ => unreachable!("unary function in binary slot"),
    }
}
