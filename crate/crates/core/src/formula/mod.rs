//! STL formulas in positive normal form, stored as a post-order arena.

mod parser;
mod predicate;

use std::collections::BTreeSet;
use std::fmt;

pub use parser::{parse_formula, parse_formula_with, ParseOptions};
pub use predicate::{Predicate, PredicateFn, RegionHint};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormulaError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("temporal interval [{a},{b}] needs a < b")]
    BadInterval { a: f64, b: f64 },
    #[error("bound {value} s is not a whole number of {dt} s steps")]
    FractionalBound { value: f64, dt: f64 },
    #[error("{0} needs at least two operands")]
    Arity(&'static str),
    #[error("invalid predicate: {0}")]
    Predicate(String),
    #[error("definition `{0}` refers to itself")]
    RecursiveDefinition(String),
}

/// Syntax tree used to build a [`Formula`]. May contain negations; they are
/// pushed onto predicates when the formula is constructed.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    True,
    False,
    Pred(Predicate),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Globally(usize, usize, Box<Expr>),
    Finally(usize, usize, Box<Expr>),
}

impl Expr {
    pub fn pred(p: Predicate) -> Expr {
        Expr::Pred(p)
    }
    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }
    pub fn and(children: Vec<Expr>) -> Expr {
        Expr::And(children)
    }
    pub fn or(children: Vec<Expr>) -> Expr {
        Expr::Or(children)
    }
    pub fn globally(a: usize, b: usize, e: Expr) -> Expr {
        Expr::Globally(a, b, Box::new(e))
    }
    pub fn finally(a: usize, b: usize, e: Expr) -> Expr {
        Expr::Finally(a, b, Box::new(e))
    }

    /// Positive normal form: negation only ever reaches predicates, where it
    /// flips `(h, threshold)`.
    fn push_negation(self, negate: bool) -> Expr {
        match self {
            Expr::True if negate => Expr::False,
            Expr::False if negate => Expr::True,
            Expr::True | Expr::False => self,
            Expr::Pred(p) if negate => Expr::Pred(p.negate()),
            Expr::Pred(p) => Expr::Pred(p),
            Expr::Not(e) => e.push_negation(!negate),
            Expr::And(cs) => {
                let cs = cs.into_iter().map(|c| c.push_negation(negate)).collect();
                if negate {
                    Expr::Or(cs)
                } else {
                    Expr::And(cs)
                }
            }
            Expr::Or(cs) => {
                let cs = cs.into_iter().map(|c| c.push_negation(negate)).collect();
                if negate {
                    Expr::And(cs)
                } else {
                    Expr::Or(cs)
                }
            }
            Expr::Globally(a, b, e) => {
                let e = Box::new(e.push_negation(negate));
                if negate {
                    Expr::Finally(a, b, e)
                } else {
                    Expr::Globally(a, b, e)
                }
            }
            Expr::Finally(a, b, e) => {
                let e = Box::new(e.push_negation(negate));
                if negate {
                    Expr::Globally(a, b, e)
                } else {
                    Expr::Finally(a, b, e)
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    True,
    False,
    Pred(Predicate),
    And(Vec<NodeId>),
    Or(Vec<NodeId>),
    Globally { a: usize, b: usize, child: NodeId },
    Finally { a: usize, b: usize, child: NodeId },
}

impl Node {
    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::And(cs) | Node::Or(cs) => cs,
            Node::Globally { child, .. } | Node::Finally { child, .. } => {
                std::slice::from_ref(child)
            }
            _ => &[],
        }
    }

    pub fn is_temporal(&self) -> bool {
        matches!(self, Node::Globally { .. } | Node::Finally { .. })
    }
}

/// An immutable STL formula. Node ids are post-order indices; the root is the
/// last node.
#[derive(Clone, Debug, PartialEq)]
pub struct Formula {
    nodes: Vec<Node>,
    horizons: Vec<usize>,
}

impl Formula {
    /// Builds a formula from an expression, eliminating negations.
    ///
    /// Unlike the parser, a degenerate window `a == b` is accepted here.
    pub fn new(expr: Expr) -> Result<Formula, FormulaError> {
        let expr = expr.push_negation(false);
        let mut f = Formula {
            nodes: Vec::new(),
            horizons: Vec::new(),
        };
        f.lower(expr)?;
        Ok(f)
    }

    fn lower(&mut self, e: Expr) -> Result<NodeId, FormulaError> {
        let (node, h) = match e {
            Expr::True => (Node::True, 0),
            Expr::False => (Node::False, 0),
            Expr::Pred(p) => {
                p.validate().map_err(FormulaError::Predicate)?;
                (Node::Pred(p), 0)
            }
            Expr::Not(_) => unreachable!("negations removed before lowering"),
            Expr::And(cs) | Expr::Or(cs) if cs.len() < 2 => {
                return Err(FormulaError::Arity("conjunction/disjunction"))
            }
            Expr::And(cs) => {
                let ids = cs
                    .into_iter()
                    .map(|c| self.lower(c))
                    .collect::<Result<Vec<_>, _>>()?;
                let h = ids.iter().map(|&i| self.horizons[i]).max().unwrap_or(0);
                (Node::And(ids), h)
            }
            Expr::Or(cs) => {
                let ids = cs
                    .into_iter()
                    .map(|c| self.lower(c))
                    .collect::<Result<Vec<_>, _>>()?;
                let h = ids.iter().map(|&i| self.horizons[i]).max().unwrap_or(0);
                (Node::Or(ids), h)
            }
            Expr::Globally(a, b, _) | Expr::Finally(a, b, _) if a > b => {
                return Err(FormulaError::BadInterval {
                    a: a as f64,
                    b: b as f64,
                })
            }
            Expr::Globally(a, b, c) => {
                let child = self.lower(*c)?;
                (Node::Globally { a, b, child }, b + self.horizons[child])
            }
            Expr::Finally(a, b, c) => {
                let child = self.lower(*c)?;
                (Node::Finally { a, b, child }, b + self.horizons[child])
            }
        };
        self.nodes.push(node);
        self.horizons.push(h);
        Ok(self.nodes.len() - 1)
    }

    pub fn root(&self) -> NodeId {
        self.nodes.len() - 1
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Number of AST nodes, `|φ|`.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `‖φ‖`: steps needed before the formula's value is fully determined.
    pub fn horizon(&self) -> usize {
        self.horizons[self.root()]
    }

    pub fn node_horizon(&self, id: NodeId) -> usize {
        self.horizons[id]
    }

    pub fn predicates(&self) -> impl Iterator<Item = (NodeId, &Predicate)> {
        self.nodes.iter().enumerate().filter_map(|(i, n)| match n {
            Node::Pred(p) => Some((i, p)),
            _ => None,
        })
    }

    /// Largest state dimension demanded by any predicate.
    pub fn min_state_dim(&self) -> usize {
        self.predicates()
            .map(|(_, p)| p.min_dim())
            .max()
            .unwrap_or(0)
    }

    /// Predicates whose value at step `t` (relative to the formula start) can
    /// change the robustness. Empty when `t` is past the horizon.
    pub fn active_predicates(&self, t: usize) -> Vec<(NodeId, &Predicate)> {
        let mut out = BTreeSet::new();
        if t <= self.horizon() {
            self.collect_active(self.root(), t, &mut out);
        }
        out.into_iter()
            .map(|id| match &self.nodes[id] {
                Node::Pred(p) => (id, p),
                _ => unreachable!(),
            })
            .collect()
    }

    fn collect_active(&self, id: NodeId, t: usize, out: &mut BTreeSet<NodeId>) {
        if t > self.horizons[id] {
            return;
        }
        match &self.nodes[id] {
            Node::True | Node::False => {}
            Node::Pred(_) => {
                if t == 0 {
                    out.insert(id);
                }
            }
            Node::And(cs) | Node::Or(cs) => {
                for &c in cs {
                    self.collect_active(c, t, out);
                }
            }
            Node::Globally { a, b, child } | Node::Finally { a, b, child } => {
                for tau in *a..=(*b).min(t) {
                    self.collect_active(*child, t - tau, out);
                }
            }
        }
    }

    /// Text of the subformula rooted at `id`, in parser syntax.
    pub fn subformula_text(&self, id: NodeId) -> String {
        let mut s = String::new();
        self.write_node(id, &mut s).expect("writing to a String");
        s
    }

    fn write_node(&self, id: NodeId, w: &mut impl fmt::Write) -> fmt::Result {
        match &self.nodes[id] {
            Node::True => w.write_str("true"),
            Node::False => w.write_str("false"),
            Node::Pred(p) => {
                if p.negated {
                    w.write_char('!')?;
                }
                w.write_str(&p.id)
            }
            Node::And(cs) | Node::Or(cs) => {
                let sep = if matches!(self.nodes[id], Node::And(_)) {
                    " & "
                } else {
                    " | "
                };
                for (i, &c) in cs.iter().enumerate() {
                    if i > 0 {
                        w.write_str(sep)?;
                    }
                    let group = matches!(self.nodes[c], Node::And(_) | Node::Or(_));
                    if group {
                        w.write_char('(')?;
                    }
                    self.write_node(c, w)?;
                    if group {
                        w.write_char(')')?;
                    }
                }
                Ok(())
            }
            Node::Globally { a, b, child } | Node::Finally { a, b, child } => {
                let op = if matches!(self.nodes[id], Node::Globally { .. }) {
                    'G'
                } else {
                    'F'
                };
                write!(w, "{op}[{a},{b}](")?;
                self.write_node(*child, w)?;
                w.write_char(')')
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_node(self.root(), f)
    }
}
