//! Expression DAGs describing an evaluation order, and the recursive
//! cofactor expansions used by the predicates.

use std::collections::HashMap;

use num_bigint::BigInt;

use super::{combine, hadamard_cap, PrecisionConfig, RoundedBound};
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Leaf {
        slot: usize,
    },
    /// `cap`, when present, is a bound on the exact value of this node that
    /// is tighter than the one the calculus would derive.
    Binary {
        op: BinOp,
        lhs: NodeId,
        rhs: NodeId,
        cap: Option<Dyadic>,
    },
}

/// Nodes are stored children-first, so a single forward pass evaluates the
/// scheme. Shared subexpressions (the minors of a cofactor expansion) appear
/// once and are evaluated once.
#[derive(Clone, Debug)]
pub struct EvalScheme {
    nodes: Vec<Node>,
    root: NodeId,
    negate_root: bool,
    slots: Vec<RoundedBound>,
    order: usize,
}

impl EvalScheme {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Whether the scheme's value is the negation of the root node's value.
    pub fn negate_root(&self) -> bool {
        self.negate_root
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn leaf_bound(&self, slot: usize) -> &RoundedBound {
        &self.slots[slot]
    }

    /// Order of the determinant the scheme evaluates (0 if not a determinant).
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of add, subtract and multiply nodes.
    pub fn op_count(&self) -> u64 {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Binary { .. }))
            .count() as u64
    }

    pub(crate) fn propagate(
        &self,
        cfg: &PrecisionConfig,
        leaf: impl Fn(usize) -> RoundedBound,
    ) -> Vec<RoundedBound> {
        let mut out: Vec<RoundedBound> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let rb = match node {
                Node::Leaf { slot } => leaf(*slot),
                Node::Binary { op, lhs, rhs, cap } => {
                    combine(*op, &out[*lhs], &out[*rhs], cap.as_ref(), cfg)
                }
            };
            out.push(rb);
        }
        out
    }

    /// Evaluate with `arith`; `inputs[slot]` feeds every leaf of that slot.
    pub fn evaluate<A: Arithmetic>(&self, arith: &A, inputs: &[A::Value]) -> A::Value {
        let mut scratch = Vec::with_capacity(self.nodes.len());
        self.evaluate_with(arith, inputs, &mut scratch)
    }

    /// As [`evaluate`](Self::evaluate), reusing `scratch` between calls.
    pub fn evaluate_with<A: Arithmetic>(
        &self,
        arith: &A,
        inputs: &[A::Value],
        scratch: &mut Vec<A::Value>,
    ) -> A::Value {
        assert_eq!(inputs.len(), self.slots.len(), "input count must match slot count");
        scratch.clear();
        for node in &self.nodes {
            let v = match node {
                Node::Leaf { slot } => inputs[*slot].clone(),
                Node::Binary { op, lhs, rhs, .. } => {
                    let (a, b) = (&scratch[*lhs], &scratch[*rhs]);
                    match op {
                        BinOp::Add => arith.add(a, b),
                        BinOp::Sub => arith.sub(a, b),
                        BinOp::Mul => arith.mul(a, b),
                    }
                }
            };
            scratch.push(v);
        }
        let r = &scratch[self.root];
        if self.negate_root {
            arith.neg(r)
        } else {
            r.clone()
        }
    }
}

/// Incremental construction of an [`EvalScheme`]. Leaves are deduplicated by
/// slot.
#[derive(Debug, Default)]
pub struct SchemeBuilder {
    nodes: Vec<Node>,
    leaves: HashMap<usize, NodeId>,
}

impl SchemeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn leaf(&mut self, slot: usize) -> NodeId {
        if let Some(&id) = self.leaves.get(&slot) {
            return id;
        }
        self.nodes.push(Node::Leaf { slot });
        let id = self.nodes.len() - 1;
        self.leaves.insert(slot, id);
        id
    }

    pub fn binary(&mut self, op: BinOp, lhs: NodeId, rhs: NodeId, cap: Option<Dyadic>) -> NodeId {
        assert!(lhs < self.nodes.len() && rhs < self.nodes.len(), "operand not yet built");
        self.nodes.push(Node::Binary { op, lhs, rhs, cap });
        self.nodes.len() - 1
    }

    /// `slots[i]` is the input bound for slot `i`; every leaf must refer to
    /// an existing slot.
    pub fn finish(
        self,
        root: NodeId,
        negate_root: bool,
        slots: Vec<RoundedBound>,
        order: usize,
    ) -> Result<EvalScheme> {
        if root >= self.nodes.len() {
            return Err(Error::InvalidScheme(format!("root {root} does not exist")));
        }
        for node in &self.nodes {
            match node {
                Node::Leaf { slot } if *slot >= slots.len() => {
                    return Err(Error::InvalidScheme(format!("leaf slot {slot} has no bound")));
                }
                Node::Binary { cap: Some(c), .. } if !c.is_positive() => {
                    return Err(Error::InvalidScheme(format!("non-positive cap {c}")));
                }
                _ => {}
            }
        }
        Ok(EvalScheme {
            nodes: self.nodes,
            root,
            negate_root,
            slots,
            order,
        })
    }
}

/// Number of leading terms in the left operand when `n` cofactor terms are
/// summed. Up to eight terms the grouping is fixed, e.g. five terms are
/// summed as `((t0 + t1) + t2) + (t3 + t4)`.
fn split(n: usize) -> usize {
    match n {
        2 => 1,
        3 => 2,
        4 => 2,
        5 => 3,
        6 => 4,
        7 => 4,
        8 => 4,
        _ => n.div_ceil(2),
    }
}

/// A node together with a pending sign: the represented value is `-node`
/// when `negated` is set.
#[derive(Clone, Copy)]
struct Signed {
    node: NodeId,
    negated: bool,
}

struct Expander<'a> {
    b: &'a mut SchemeBuilder,
    width: usize,
    leaf_magnitude: Dyadic,
    memo: HashMap<u32, Signed>,
}

impl Expander<'_> {
    fn entry(&mut self, row: usize, col: usize) -> NodeId {
        self.b.leaf(row * self.width + col)
    }

    fn cap(&self, k: usize) -> Dyadic {
        let mut c = hadamard_cap(k).value;
        for _ in 0..k {
            c = c * &self.leaf_magnitude;
        }
        c
    }

    /// Determinant of the minor on `rows` and columns `0..rows.len()`,
    /// expanded along its last column.
    fn minor(&mut self, rows: &[usize]) -> Signed {
        let k = rows.len();
        if k == 1 {
            return Signed {
                node: self.entry(rows[0], 0),
                negated: false,
            };
        }
        let mask = rows.iter().fold(0u32, |m, &r| m | 1 << r);
        if let Some(&s) = self.memo.get(&mask) {
            return s;
        }
        let column: Vec<NodeId> = rows.iter().map(|&r| self.entry(r, k - 1)).collect();
        let cap = self.cap(k);
        let s = self.expand(rows, &column, Some(cap));
        self.memo.insert(mask, s);
        s
    }

    /// `sum_j (-1)^(j+k-1) column[j] * minor(rows without j)`.
    fn expand(&mut self, rows: &[usize], column: &[NodeId], cap: Option<Dyadic>) -> Signed {
        let k = rows.len();
        let mut terms = Vec::with_capacity(k);
        for j in 0..k {
            let rest: Vec<usize> = rows.iter().copied().filter(|&r| r != rows[j]).collect();
            let m = self.minor(&rest);
            let node = self.b.binary(BinOp::Mul, column[j], m.node, None);
            terms.push(Signed {
                node,
                negated: ((j + k - 1) % 2 == 1) != m.negated,
            });
        }
        self.sum(&terms, cap)
    }

    fn sum(&mut self, terms: &[Signed], cap: Option<Dyadic>) -> Signed {
        if terms.len() == 1 {
            return terms[0];
        }
        let l = split(terms.len());
        let a = self.sum(&terms[..l], None);
        let c = self.sum(&terms[l..], None);
        match (a.negated, c.negated) {
            (x, y) if x == y => Signed {
                node: self.b.binary(BinOp::Add, a.node, c.node, cap),
                negated: x,
            },
            (false, _) => Signed {
                node: self.b.binary(BinOp::Sub, a.node, c.node, cap),
                negated: false,
            },
            (true, _) => Signed {
                node: self.b.binary(BinOp::Sub, c.node, a.node, cap),
                negated: false,
            },
        }
    }
}

/// Cofactor expansion of a `delta x delta` determinant along its last
/// column, recursively, with each minor shared between the terms that use
/// it. Slot `r * delta + c` holds entry `(r, c)`, and every slot gets the
/// bound `leaf`.
///
/// The magnitude of every minor sum is capped by the determinant bound for
/// its order (scaled by the leaf magnitude), before the rounding term of that
/// sum is taken.
pub fn det_expansion_scheme(delta: usize, leaf: RoundedBound) -> Result<EvalScheme> {
    if !(2..=8).contains(&delta) {
        return Err(Error::UnsupportedDimension {
            delta,
            reason: "determinant schemes are provided for orders 2 to 8",
        });
    }
    build_det(delta, leaf)
}

pub(crate) fn build_det(delta: usize, leaf: RoundedBound) -> Result<EvalScheme> {
    let mut b = SchemeBuilder::new();
    let mut ex = Expander {
        b: &mut b,
        width: delta,
        leaf_magnitude: leaf.magnitude().clone(),
        memo: HashMap::new(),
    };
    let rows: Vec<usize> = (0..delta).collect();
    let root = ex.minor(&rows);
    b.finish(root.node, root.negated, vec![leaf; delta * delta], delta)
}

/// The lifted insphere determinant for `delta + 1` points: rows are
/// `(x_r, |x_r|^2)`, slot `r * delta + c` holds coordinate `c` of point `r`.
///
/// The squared norms are computed inside the scheme as balanced sums of
/// rounded squares, and the expansion runs along the norm column. Coordinate
/// minors carry determinant caps; the final sum does not.
pub fn insphere_scheme(delta: usize, leaf: RoundedBound) -> Result<EvalScheme> {
    if !(1..=7).contains(&delta) {
        return Err(Error::UnsupportedDimension {
            delta,
            reason: "insphere schemes are provided for dimensions 1 to 7",
        });
    }
    let n = delta + 1;
    let mut b = SchemeBuilder::new();
    let mut ex = Expander {
        b: &mut b,
        width: delta,
        leaf_magnitude: leaf.magnitude().clone(),
        memo: HashMap::new(),
    };
    let mut norms = Vec::with_capacity(n);
    for r in 0..n {
        let squares: Vec<Signed> = (0..delta)
            .map(|c| {
                let x = ex.entry(r, c);
                Signed {
                    node: ex.b.binary(BinOp::Mul, x, x, None),
                    negated: false,
                }
            })
            .collect();
        norms.push(ex.sum(&squares, None).node);
    }
    let rows: Vec<usize> = (0..n).collect();
    let root = ex.expand(&rows, &norms, None);
    b.finish(root.node, root.negated, vec![leaf; n * delta], n)
}

/// Operations on the values a scheme is evaluated over.
pub trait Arithmetic {
    type Value: Clone;
    fn add(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn sub(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn mul(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn neg(&self, a: &Self::Value) -> Self::Value;
}

/// Hardware double precision.
#[derive(Clone, Copy, Debug, Default)]
pub struct NativeF64;

impl Arithmetic for NativeF64 {
    type Value = f64;
    fn add(&self, a: &f64, b: &f64) -> f64 {
        a + b
    }
    fn sub(&self, a: &f64, b: &f64) -> f64 {
        a - b
    }
    fn mul(&self, a: &f64, b: &f64) -> f64 {
        a * b
    }
    fn neg(&self, a: &f64) -> f64 {
        -a
    }
}

/// Exact integer arithmetic.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactArith;

impl Arithmetic for ExactArith {
    type Value = BigInt;
    fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a + b
    }
    fn sub(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a - b
    }
    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a * b
    }
    fn neg(&self, a: &BigInt) -> BigInt {
        -a
    }
}
