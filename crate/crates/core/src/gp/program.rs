use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this magnitude, division, log and inverse take their safe branch.
pub const PROTECTION_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Function {
    Add,
    Sub,
    Mul,
    Div,
    Sqrt,
    Log,
    Abs,
    Neg,
    Inv,
    Max,
    Min,
}

impl Function {
    pub const ALL: [Function; 11] = [
        Function::Add,
        Function::Sub,
        Function::Mul,
        Function::Div,
        Function::Sqrt,
        Function::Log,
        Function::Abs,
        Function::Neg,
        Function::Inv,
        Function::Max,
        Function::Min,
    ];

    pub fn arity(self) -> usize {
        match self {
            Function::Add | Function::Sub | Function::Mul | Function::Div | Function::Max | Function::Min => 2,
            Function::Sqrt | Function::Log | Function::Abs | Function::Neg | Function::Inv => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Function::Add => "add",
            Function::Sub => "sub",
            Function::Mul => "mul",
            Function::Div => "div",
            Function::Sqrt => "sqrt",
            Function::Log => "log",
            Function::Abs => "abs",
            Function::Neg => "neg",
            Function::Inv => "inv",
            Function::Max => "max",
            Function::Min => "min",
        }
    }

    pub fn apply1(self, a: f64) -> f64 {
        match self {
            Function::Sqrt => a.abs().sqrt(),
            Function::Log => {
                if a.abs() < PROTECTION_THRESHOLD {
                    0.0
                } else {
                    a.abs().ln()
                }
            }
            Function::Abs => a.abs(),
            Function::Neg => -a,
            Function::Inv => {
                if a.abs() < PROTECTION_THRESHOLD {
                    1.0
                } else {
                    1.0 / a
                }
            }
            _ => unreachable!("{} is not unary", self.name()),
        }
    }

    pub fn apply2(self, a: f64, b: f64) -> f64 {
        match self {
            Function::Add => a + b,
            Function::Sub => a - b,
            Function::Mul => a * b,
            Function::Div => {
                if b.abs() < PROTECTION_THRESHOLD {
                    1.0
                } else {
                    a / b
                }
            }
            Function::Max => a.max(b),
            Function::Min => a.min(b),
            _ => unreachable!("{} is not binary", self.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gene {
    Func(Function),
    Feature(usize),
    Const(f64),
}

impl Gene {
    pub fn arity(&self) -> usize {
        match self {
            Gene::Func(f) => f.arity(),
            _ => 0,
        }
    }
}

/// Expression tree stored in prefix order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpProgram {
    pub nodes: Vec<Gene>,
}

impl GpProgram {
    /// Fails unless `nodes` forms exactly one well-formed prefix expression.
    pub fn new(nodes: Vec<Gene>) -> Result<Self> {
        let mut open = 1usize;
        for (i, g) in nodes.iter().enumerate() {
            if open == 0 {
                return Err(Error::InvalidParam(format!("trailing node at {i}")));
            }
            open = open - 1 + g.arity();
        }
        if open != 0 || nodes.is_empty() {
            return Err(Error::InvalidParam("incomplete program".into()));
        }
        Ok(GpProgram { nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// One past the last node of the subtree rooted at `start`.
    pub fn subtree_end(&self, start: usize) -> usize {
        let mut open = 1usize;
        let mut i = start;
        while open > 0 {
            open = open - 1 + self.nodes[i].arity();
            i += 1;
        }
        i
    }

    /// Depth of every node (root = 0).
    pub fn node_depths(&self) -> Vec<usize> {
        let mut depths = Vec::with_capacity(self.nodes.len());
        let mut stack: Vec<(usize, usize)> = Vec::new(); // (depth, children left)
        for g in &self.nodes {
            let d = stack.last().map_or(0, |(d, _)| d + 1);
            depths.push(d);
            if let Some(top) = stack.last_mut() {
                top.1 -= 1;
            }
            if g.arity() > 0 {
                stack.push((d, g.arity()));
            }
            while stack.last().is_some_and(|(_, left)| *left == 0) {
                stack.pop();
            }
        }
        depths
    }

    pub fn depth(&self) -> usize {
        self.node_depths().into_iter().max().unwrap_or(0)
    }

    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|g| match g {
                Gene::Feature(i) => Some(*i),
                _ => None,
            })
            .max()
    }

    /// Evaluates on one feature vector. Protected operators keep this total
    /// for finite inputs apart from float overflow.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if let Some(m) = self.max_feature() {
            if m >= x.len() {
                return Err(Error::UnknownFeature {
                    index: m,
                    available: x.len(),
                });
            }
        }
        let mut stack: Vec<f64> = Vec::with_capacity(self.nodes.len());
        for g in self.nodes.iter().rev() {
            let v = match *g {
                Gene::Const(c) => c,
                Gene::Feature(i) => x[i],
                Gene::Func(f) if f.arity() == 1 => {
                    let a = stack.pop().expect("well-formed program");
                    f.apply1(a)
                }
                Gene::Func(f) => {
                    let a = stack.pop().expect("well-formed program");
                    let b = stack.pop().expect("well-formed program");
                    f.apply2(a, b)
                }
            };
            stack.push(v);
        }
        Ok(stack[0])
    }

    /// Evaluates on column-major data, one output per row.
    pub fn evaluate_columns(&self, columns: &[Vec<f64>], n_rows: usize) -> Vec<f64> {
        let mut stack: Vec<Vec<f64>> = Vec::new();
        for g in self.nodes.iter().rev() {
            let v = match *g {
                Gene::Const(c) => vec![c; n_rows],
                Gene::Feature(i) => columns[i].clone(),
                Gene::Func(f) if f.arity() == 1 => {
                    let mut a = stack.pop().expect("well-formed program");
                    a.iter_mut().for_each(|v| *v = f.apply1(*v));
                    a
                }
                Gene::Func(f) => {
                    let mut a = stack.pop().expect("well-formed program");
                    let b = stack.pop().expect("well-formed program");
                    a.iter_mut().zip(&b).for_each(|(v, w)| *v = f.apply2(*v, *w));
                    a
                }
            };
            stack.push(v);
        }
        stack.pop().expect("well-formed program")
    }

    pub fn to_sexpr(&self) -> String {
        let mut out = String::new();
        self.write_sexpr(0, &mut out);
        out
    }

    fn write_sexpr(&self, at: usize, out: &mut String) -> usize {
        match self.nodes[at] {
            Gene::Const(c) => {
                let _ = write!(out, "{c}");
                at + 1
            }
            Gene::Feature(i) => {
                let _ = write!(out, "x{i}");
                at + 1
            }
            Gene::Func(f) => {
                let _ = write!(out, "({}", f.name());
                let mut next = at + 1;
                for _ in 0..f.arity() {
                    out.push(' ');
                    next = self.write_sexpr(next, out);
                }
                out.push(')');
                next
            }
        }
    }

    pub fn to_infix(&self) -> String {
        let mut out = String::new();
        self.write_infix(0, &mut out);
        out
    }

    fn write_infix(&self, at: usize, out: &mut String) -> usize {
        match self.nodes[at] {
            Gene::Const(c) => {
                let _ = write!(out, "{c}");
                at + 1
            }
            Gene::Feature(i) => {
                let _ = write!(out, "x{i}");
                at + 1
            }
            Gene::Func(f) => {
                let op = match f {
                    Function::Add => Some(" + "),
                    Function::Sub => Some(" - "),
                    Function::Mul => Some(" * "),
                    Function::Div => Some(" / "),
                    _ => None,
                };
                match (op, f.arity()) {
                    (Some(op), _) => {
                        out.push('(');
                        let next = self.write_infix(at + 1, out);
                        out.push_str(op);
                        let next = self.write_infix(next, out);
                        out.push(')');
                        next
                    }
                    (None, 1) => {
                        let _ = write!(out, "{}(", f.name());
                        let next = self.write_infix(at + 1, out);
                        out.push(')');
                        next
                    }
                    (None, _) => {
                        let _ = write!(out, "{}(", f.name());
                        let next = self.write_infix(at + 1, out);
                        out.push_str(", ");
                        let next = self.write_infix(next, out);
                        out.push(')');
                        next
                    }
                }
            }
        }
    }
}
