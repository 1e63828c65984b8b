//! Policy-tree parameterization.
//!
//! A depth-`M` policy tree over `|O|` observations is stored breadth-first:
//! the root is node 0 and the child of node `n` along observation `o` is
//! `n * |O| + o + 1`. Each node owns a contiguous block of `D` action
//! components in the flat parameter vector, so `theta[D*n .. D*n + D]` is the
//! action at node `n`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pomdp::ProblemSpec;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("tree with depth {depth} and {observations} observations overflows the index range")]
    Overflow { depth: usize, observations: usize },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("node {node} is a leaf and has no children")]
    LeafDescent { node: usize },
    #[error("observation {observation} out of range for {count} observations")]
    ObservationOutOfRange { observation: usize, count: usize },
    #[error("node {node} out of range for a tree of {count} nodes")]
    NodeOutOfRange { node: usize, count: usize },
    #[error("expected {expected} parameter components, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

/// Number of nodes in a complete tree of the given depth, i.e.
/// `(1 - |O|^(M+1)) / (1 - |O|)`, or `M + 1` for a single observation.
pub fn node_count(depth: usize, observations: usize) -> Result<usize, TreeError> {
    if observations == 0 {
        return Err(TreeError::NonPositive("observation_count"));
    }
    let overflow = TreeError::Overflow { depth, observations };
    if observations == 1 {
        return depth.checked_add(1).ok_or(overflow);
    }
    let levels = u32::try_from(depth).ok().and_then(|d| d.checked_add(1)).ok_or(overflow.clone())?;
    let power = observations.checked_pow(levels).ok_or(overflow)?;
    Ok((power - 1) / (observations - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeIndex(pub usize);

impl NodeIndex {
    pub const ROOT: NodeIndex = NodeIndex(0);

    pub fn index(self) -> usize {
        self.0
    }
}

/// Shape of a complete policy tree and of its parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyTreeShape {
    depth: usize,
    observation_count: usize,
    action_dim: usize,
    node_count: usize,
    internal_count: usize,
    parameter_dim: usize,
}

impl PolicyTreeShape {
    pub fn new(depth: usize, observation_count: usize, action_dim: usize) -> Result<Self, TreeError> {
        if depth == 0 {
            return Err(TreeError::NonPositive("depth"));
        }
        if action_dim == 0 {
            return Err(TreeError::NonPositive("action_dim"));
        }
        let nodes = node_count(depth, observation_count)?;
        let internal = node_count(depth - 1, observation_count)?;
        // Node slots are stored as u32.
        let parameter_dim = nodes
            .checked_mul(action_dim)
            .filter(|_| nodes < u32::MAX as usize)
            .ok_or(TreeError::Overflow { depth, observations: observation_count })?;
        Ok(Self {
            depth,
            observation_count,
            action_dim,
            node_count: nodes,
            internal_count: internal,
            parameter_dim,
        })
    }

    pub fn for_problem(depth: usize, spec: &ProblemSpec) -> Result<Self, TreeError> {
        Self::new(depth, spec.observation_count, spec.action_dim)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn observation_count(&self) -> usize {
        self.observation_count
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Nodes above the leaf level.
    pub fn internal_count(&self) -> usize {
        self.internal_count
    }

    pub fn parameter_dim(&self) -> usize {
        self.parameter_dim
    }

    pub fn is_leaf(&self, node: NodeIndex) -> bool {
        node.0 >= self.internal_count
    }

    /// The child reached from `node` along `observation`.
    pub fn child(&self, node: NodeIndex, observation: usize) -> Result<NodeIndex, TreeError> {
        if node.0 >= self.node_count {
            return Err(TreeError::NodeOutOfRange { node: node.0, count: self.node_count });
        }
        if self.is_leaf(node) {
            return Err(TreeError::LeafDescent { node: node.0 });
        }
        if observation >= self.observation_count {
            return Err(TreeError::ObservationOutOfRange { observation, count: self.observation_count });
        }
        Ok(self.child_unchecked(node, observation))
    }

    /// [`Self::child`] without the contract checks, for the evaluation loop.
    #[inline]
    pub fn child_unchecked(&self, node: NodeIndex, observation: usize) -> NodeIndex {
        debug_assert!(!self.is_leaf(node) && observation < self.observation_count);
        NodeIndex(node.0 * self.observation_count + observation + 1)
    }

    pub fn parent(&self, node: NodeIndex) -> Option<NodeIndex> {
        (node.0 > 0).then(|| NodeIndex((node.0 - 1) / self.observation_count))
    }

    /// Depth of `node`, the root being at depth 0.
    pub fn depth_of(&self, node: NodeIndex) -> usize {
        let mut depth = 0;
        let mut cur = node;
        while let Some(p) = self.parent(cur) {
            depth += 1;
            cur = p;
        }
        depth
    }

    /// Component range of `node`'s action block.
    #[inline]
    pub fn block_range(&self, node: NodeIndex) -> std::ops::Range<usize> {
        let start = node.0 * self.action_dim;
        start..start + self.action_dim
    }
}

// Claimed blocks start as NaN under `cfg(test)`, so filling a block
// incompletely, or reading through a stale slot, poisons every value
// downstream and fails loudly.
const CLAIM_FILL: f64 = if cfg!(test) { f64::NAN } else { 0.0 };

const ABSENT: u32 = u32::MAX;

/// Action storage for a policy tree with a per-node presence mask.
///
/// Present blocks are stored contiguously in the order they were assigned;
/// `slots[node]` is a block's position in that storage, or `ABSENT`. A lazily
/// sampled vector therefore costs memory and time proportional to the nodes
/// actually visited, plus one slot per node.
#[derive(Debug, Clone)]
pub struct PolicyParameterVector {
    shape: PolicyTreeShape,
    slots: Vec<u32>,
    values: Vec<f64>,
}

impl PolicyParameterVector {
    /// A vector with every node absent.
    pub fn empty(shape: PolicyTreeShape) -> Self {
        Self { shape, slots: vec![ABSENT; shape.node_count()], values: Vec::new() }
    }

    /// A fully present vector.
    pub fn from_full(shape: PolicyTreeShape, values: Vec<f64>) -> Result<Self, TreeError> {
        if values.len() != shape.parameter_dim() {
            return Err(TreeError::DimensionMismatch { expected: shape.parameter_dim(), actual: values.len() });
        }
        Ok(Self { shape, slots: (0..shape.node_count() as u32).collect(), values })
    }

    pub fn shape(&self) -> &PolicyTreeShape {
        &self.shape
    }

    #[inline]
    pub fn is_present(&self, node: NodeIndex) -> bool {
        self.slots[node.0] != ABSENT
    }

    #[inline]
    fn block(&self, slot: u32) -> &[f64] {
        let d = self.shape.action_dim();
        let start = slot as usize * d;
        &self.values[start..start + d]
    }

    /// The action at `node`, or `None` if it has not been assigned.
    #[inline]
    pub fn action_block(&self, node: NodeIndex) -> Option<&[f64]> {
        match self.slots[node.0] {
            ABSENT => None,
            slot => Some(self.block(slot)),
        }
    }

    /// Assigns the action at `node` and marks it present.
    pub fn set_block(&mut self, node: NodeIndex, action: &[f64]) {
        assert_eq!(action.len(), self.shape.action_dim(), "action block length");
        self.claim_block(node).copy_from_slice(action);
    }

    /// Mutable access to the block at `node`, allocating it if absent; the
    /// node is marked present.
    pub(crate) fn claim_block(&mut self, node: NodeIndex) -> &mut [f64] {
        let d = self.shape.action_dim();
        if self.slots[node.0] == ABSENT {
            self.slots[node.0] = (self.values.len() / d) as u32;
            self.values.resize(self.values.len() + d, CLAIM_FILL);
        }
        let start = self.slots[node.0] as usize * d;
        &mut self.values[start..start + d]
    }

    pub fn present_node_count(&self) -> usize {
        self.values.len() / self.shape.action_dim()
    }

    pub fn is_complete(&self) -> bool {
        self.present_node_count() == self.shape.node_count()
    }

    /// Component `i`, if its node is present.
    #[inline]
    pub fn component(&self, i: usize) -> Option<f64> {
        let d = self.shape.action_dim();
        match self.slots[i / d] {
            ABSENT => None,
            slot => Some(self.values[slot as usize * d + i % d]),
        }
    }

    /// `(index, value)` of every present component, in index order.
    pub fn present_components(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let d = self.shape.action_dim();
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, &s)| s != ABSENT)
            .flat_map(move |(n, &s)| self.block(s).iter().enumerate().map(move |(j, &v)| (n * d + j, v)))
    }

    /// All components of a complete vector, in index order.
    pub fn full_values(&self) -> Option<Vec<f64>> {
        self.is_complete().then(|| self.present_components().map(|(_, v)| v).collect())
    }
}

/// Equal shape, equal presence mask and equal present components, regardless
/// of the order in which blocks were assigned.
impl PartialEq for PolicyParameterVector {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape
            && self.slots.len() == other.slots.len()
            && (0..self.slots.len()).all(|n| self.action_block(NodeIndex(n)) == other.action_block(NodeIndex(n)))
    }
}

/// The root action of mean `mu`, clamped into the action box.
pub fn root_action(mu: &[f64], spec: &ProblemSpec) -> Vec<f64> {
    spec.clamped(&mu[..spec.action_dim])
}
