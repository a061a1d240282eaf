use crate::error::{Error, Result};

/// How state and input coordinates are grouped into nodes.
///
/// Node `i` owns the state slice `state_range(i)` and the input slice
/// `input_range(i)`. Networks use uniform blocks (`n` states, `m` inputs
/// per node); the power-grid model mixes 2-state generators and 1-state
/// buses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeLayout {
    state_offsets: Vec<usize>,
    input_offsets: Vec<usize>,
    state_owner: Vec<usize>,
}

impl NodeLayout {
    pub fn uniform(node_count: usize, n: usize, m: usize) -> Self {
        Self::from_sizes(&vec![n; node_count], &vec![m; node_count]).expect("equal lengths")
    }

    pub fn from_sizes(state_sizes: &[usize], input_sizes: &[usize]) -> Result<Self> {
        if state_sizes.len() != input_sizes.len() {
            return Err(Error::dims("NodeLayout", state_sizes.len(), input_sizes.len()));
        }
        let offsets = |sizes: &[usize]| {
            let mut o = Vec::with_capacity(sizes.len() + 1);
            o.push(0);
            for s in sizes {
                o.push(o.last().unwrap() + s);
            }
            o
        };
        let state_offsets = offsets(state_sizes);
        let input_offsets = offsets(input_sizes);
        let state_owner = state_sizes
            .iter()
            .enumerate()
            .flat_map(|(i, &s)| std::iter::repeat(i).take(s))
            .collect();
        Ok(NodeLayout {
            state_offsets,
            input_offsets,
            state_owner,
        })
    }

    pub fn node_count(&self) -> usize {
        self.state_offsets.len() - 1
    }

    pub fn state_dim(&self) -> usize {
        *self.state_offsets.last().unwrap()
    }

    pub fn input_dim(&self) -> usize {
        *self.input_offsets.last().unwrap()
    }

    pub fn state_range(&self, node: usize) -> std::ops::Range<usize> {
        self.state_offsets[node]..self.state_offsets[node + 1]
    }

    pub fn input_range(&self, node: usize) -> std::ops::Range<usize> {
        self.input_offsets[node]..self.input_offsets[node + 1]
    }

    /// Node owning state coordinate `idx`.
    pub fn state_node(&self, idx: usize) -> usize {
        self.state_owner[idx]
    }

    /// Rows of node `node` in a node-major sequence over `f` steps.
    pub fn sequence_range(&self, node: usize, f: usize) -> std::ops::Range<usize> {
        f * self.input_offsets[node]..f * self.input_offsets[node + 1]
    }
}

/// Orderings of an `f`-step input sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SequenceOrder {
    /// `col(u(0), u(1), ..., u(f-1))`.
    TimeMajor,
    /// `col(ubar_1, ..., ubar_N)` with `ubar_i = col(u_i(0), ..., u_i(f-1))`.
    NodeMajor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InputSequence {
    pub order: SequenceOrder,
    pub values: Vec<f64>,
}

impl InputSequence {
    pub fn time_major(values: Vec<f64>) -> Self {
        InputSequence {
            order: SequenceOrder::TimeMajor,
            values,
        }
    }

    pub fn node_major(values: Vec<f64>) -> Self {
        InputSequence {
            order: SequenceOrder::NodeMajor,
            values,
        }
    }

    pub fn zeros(len: usize, order: SequenceOrder) -> Self {
        InputSequence {
            order,
            values: vec![0.0; len],
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_order(&self, order: SequenceOrder, perm: &PermutationMap) -> Result<InputSequence> {
        if self.values.len() != perm.len() {
            return Err(Error::dims("InputSequence", perm.len(), self.values.len()));
        }
        let values = match (self.order, order) {
            (a, b) if a == b => self.values.clone(),
            (SequenceOrder::TimeMajor, SequenceOrder::NodeMajor) => perm.apply(&self.values),
            _ => perm.apply_inverse(&self.values),
        };
        Ok(InputSequence { order, values })
    }

    /// Input `u(k)` of step `k` from a time-major sequence of width `width`.
    pub fn step(&self, k: usize, width: usize) -> &[f64] {
        debug_assert_eq!(self.order, SequenceOrder::TimeMajor);
        &self.values[k * width..(k + 1) * width]
    }
}

/// Bijection between time-major and node-major positions of an `f`-step
/// input sequence: `(k, i, c) -> (i, k, c)`.
///
/// The sequence has length `N f m`, so the map acts on that length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationMap {
    // forward[time_major_index] = node_major_index
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl PermutationMap {
    pub fn for_layout(layout: &NodeLayout, f: usize) -> Self {
        let width = layout.input_dim();
        let mut forward = vec![0usize; width * f];
        for k in 0..f {
            for i in 0..layout.node_count() {
                let range = layout.input_range(i);
                let m_i = range.len();
                for (c, col) in range.clone().enumerate() {
                    forward[k * width + col] = f * range.start + k * m_i + c;
                }
            }
        }
        let mut inverse = vec![0usize; forward.len()];
        for (t, &nm) in forward.iter().enumerate() {
            inverse[nm] = t;
        }
        PermutationMap { forward, inverse }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// Node-major position of time-major position `t`.
    pub fn node_major_index(&self, t: usize) -> usize {
        self.forward[t]
    }

    pub fn time_major_index(&self, nm: usize) -> usize {
        self.inverse[nm]
    }

    /// Time-major vector to node-major.
    pub fn apply(&self, time_major: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.forward.len()];
        for (t, &v) in time_major.iter().enumerate() {
            out[self.forward[t]] = v;
        }
        out
    }

    /// Node-major vector to time-major.
    pub fn apply_inverse(&self, node_major: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.inverse.len()];
        for (nm, &v) in node_major.iter().enumerate() {
            out[self.inverse[nm]] = v;
        }
        out
    }

    /// Row order that turns time-major rows into node-major rows.
    pub fn node_major_row_order(&self) -> &[usize] {
        &self.inverse
    }
}

/// Permutation for `node_count` nodes with `m` inputs each over `f` steps.
pub fn permutation_map(node_count: usize, m: usize, f: usize) -> PermutationMap {
    PermutationMap::for_layout(&NodeLayout::uniform(node_count, 1, m), f)
}
