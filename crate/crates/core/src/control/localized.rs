//! Localized controller built from a sparse approximate inverse of the Gramian.
//!
//! With `X ~ W_f^{-1}` confined to a sparse pattern, the input sequence of
//! node `i` is
//!
//! ```text
//! ubar_i = sum_{j in N1(i)} Q_ij xd_j - sum_{j in N2(i)} R_ij x0_j,
//! Q = K^T X,   R = K^T X A^f,
//! ```
//!
//! where `K` is the node-major controllability matrix and the state
//! information neighbourhoods `N1(i)`, `N2(i)` are the nodes whose blocks
//! `Q_ij`, `R_ij` have Frobenius norm above a threshold `delta`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::network::Graph;
use crate::sparse::{fill_in, spai, spgemm, write_matrix_market, SparseMatrix, SparsityPattern};

use super::layout::{InputSequence, NodeLayout};
use super::problem::{apriori_pattern, gramian_from_blocks, ControlProblem};

/// Dense block `M_ij` of a node-partitioned matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub col_node: usize,
    /// Row-major, `rows x cols` where rows are node `i`'s sequence entries.
    pub values: Vec<f64>,
    pub norm: f64,
}

/// Per-node blocks of one of the gain matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockRows {
    rows: Vec<Vec<Block>>,
}

impl BlockRows {
    fn from_matrix(m: &SparseMatrix, layout: &NodeLayout, f: usize) -> Self {
        let rows = (0..layout.node_count())
            .map(|i| {
                let seq = layout.sequence_range(i, f);
                let height = seq.len();
                let mut blocks: Vec<Block> = Vec::new();
                let mut slot_of = std::collections::HashMap::new();
                for (local_r, r) in seq.enumerate() {
                    let (cols, vals) = m.row(r);
                    for (&c, &v) in cols.iter().zip(vals) {
                        let j = layout.state_node(c);
                        let width = layout.state_range(j).len();
                        let slot = *slot_of.entry(j).or_insert_with(|| {
                            blocks.push(Block {
                                col_node: j,
                                values: vec![0.0; height * width],
                                norm: 0.0,
                            });
                            blocks.len() - 1
                        });
                        let local_c = c - layout.state_range(j).start;
                        blocks[slot].values[local_r * width + local_c] = v;
                    }
                }
                for b in &mut blocks {
                    b.norm = b.values.iter().map(|v| v * v).sum::<f64>().sqrt();
                }
                blocks.sort_by_key(|b| b.col_node);
                blocks
            })
            .collect();
        BlockRows { rows }
    }

    pub fn node(&self, i: usize) -> &[Block] {
        &self.rows[i]
    }

    fn members_above(&self, delta: f64) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|blocks| blocks.iter().filter(|b| b.norm > delta).map(|b| b.col_node).collect())
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct LocalizedController {
    pub q: usize,
    pub f: usize,
    pub layout: NodeLayout,
    pub q_matrix: SparseMatrix,
    pub r_matrix: SparseMatrix,
    pub delta: f64,
    /// `N1(i)`: nodes whose desired states enter node `i`'s inputs.
    pub sins_desired: Vec<Vec<usize>>,
    /// `N2(i)`: nodes whose initial states enter node `i`'s inputs.
    pub sins_initial: Vec<Vec<usize>>,
    /// Fill-in (percent) of the sparse approximate inverse.
    pub x_fill_in: f64,
    /// Columns of the inverse solved in the minimum-norm sense.
    pub rank_deficient_columns: usize,
    q_blocks: BlockRows,
    r_blocks: BlockRows,
}

/// Localized controller with the a-priori pattern of order `q`.
pub fn build_localized(p: &ControlProblem, q: usize) -> Result<LocalizedController> {
    let pattern = apriori_pattern(p, q)?;
    build_localized_with_pattern(p, q, &pattern)
}

/// Localized controller for an explicit pattern of `X`.
pub fn build_localized_with_pattern(
    p: &ControlProblem,
    q: usize,
    pattern: &SparsityPattern,
) -> Result<LocalizedController> {
    let blocks = p.krylov_blocks()?;
    let w = gramian_from_blocks(&blocks)?;
    let x = spai(&w, pattern)?;

    let ordered: Vec<&SparseMatrix> = blocks.iter().rev().collect();
    let k_t = SparseMatrix::hstack(&ordered)?.transpose();
    let k_t_node_major = k_t.select_rows(p.permutation().node_major_row_order());

    let q_matrix = spgemm(&k_t_node_major, &x.inverse)?;
    let r_matrix = spgemm(&q_matrix, &p.horizon_power()?)?;
    let q_blocks = BlockRows::from_matrix(&q_matrix, &p.layout, p.f);
    let r_blocks = BlockRows::from_matrix(&r_matrix, &p.layout, p.f);
    Ok(LocalizedController {
        q,
        f: p.f,
        layout: p.layout.clone(),
        delta: 0.0,
        sins_desired: q_blocks.members_above(0.0),
        sins_initial: r_blocks.members_above(0.0),
        x_fill_in: fill_in(&x.inverse),
        rank_deficient_columns: x.rank_deficient_count(),
        q_matrix,
        r_matrix,
        q_blocks,
        r_blocks,
    })
}

impl LocalizedController {
    pub fn q_blocks(&self) -> &BlockRows {
        &self.q_blocks
    }

    pub fn r_blocks(&self) -> &BlockRows {
        &self.r_blocks
    }

    pub fn node_count(&self) -> usize {
        self.layout.node_count()
    }

    pub fn sequence_len(&self) -> usize {
        self.f * self.layout.input_dim()
    }

    /// Recomputes the neighbourhoods under block-norm threshold `delta`;
    /// gain values are unchanged.
    pub fn effective_sins(&self, delta: f64) -> Result<LocalizedController> {
        if !(delta >= 0.0) {
            return Err(Error::Precondition(format!("delta must be >= 0, got {delta}")));
        }
        let mut out = self.clone();
        out.delta = delta;
        out.sins_desired = self.q_blocks.members_above(delta);
        out.sins_initial = self.r_blocks.members_above(delta);
        Ok(out)
    }

    /// Node-major input sequence assembled only from neighbourhood blocks.
    pub fn apply(&self, x0: &[f64], xd: &[f64]) -> Result<InputSequence> {
        let dim = self.layout.state_dim();
        if x0.len() != dim || xd.len() != dim {
            return Err(Error::dims("apply_localized", dim, x0.len().max(xd.len())));
        }
        let mut out = vec![0.0; self.sequence_len()];
        for i in 0..self.node_count() {
            let seq = self.layout.sequence_range(i, self.f);
            let target = &mut out[seq];
            accumulate(target, self.q_blocks.node(i), &self.sins_desired[i], xd, &self.layout, 1.0);
            accumulate(target, self.r_blocks.node(i), &self.sins_initial[i], x0, &self.layout, -1.0);
        }
        Ok(InputSequence::node_major(out))
    }

    pub fn sin_sizes_desired(&self) -> Vec<usize> {
        self.sins_desired.iter().map(Vec::len).collect()
    }

    pub fn sin_sizes_initial(&self) -> Vec<usize> {
        self.sins_initial.iter().map(Vec::len).collect()
    }

    pub fn q_fill_in(&self) -> f64 {
        fill_in(&self.q_matrix)
    }

    pub fn r_fill_in(&self) -> f64 {
        fill_in(&self.r_matrix)
    }

    /// One line per node: `i: N1 members ; N2 members`.
    pub fn sin_listing(&self) -> String {
        let mut s = String::from("# node: desired-state SIN ; initial-state SIN\n");
        for i in 0..self.node_count() {
            let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
            writeln!(s, "{i}: {} ; {}", join(&self.sins_desired[i]), join(&self.sins_initial[i])).unwrap();
        }
        s
    }

    /// Writes `Q.mtx`, `R.mtx` and `sins.txt` into `dir`.
    pub fn export(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        write_matrix_market(dir.join("Q.mtx"), &self.q_matrix)?;
        write_matrix_market(dir.join("R.mtx"), &self.r_matrix)?;
        fs::write(dir.join("sins.txt"), self.sin_listing())?;
        Ok(())
    }

    /// Neighbourhood members farther than the graph-distance bounds
    /// `2q + f - 1` (desired) and `2(q + f) - 1` (initial).
    pub fn distance_violations(&self, g: &Graph) -> Result<SinViolations> {
        if g.node_count() != self.node_count() {
            return Err(Error::dims("distance_violations", self.node_count(), g.node_count()));
        }
        let bound_q = 2 * self.q + self.f - 1;
        let bound_r = 2 * (self.q + self.f) - 1;
        let mut out = SinViolations::default();
        for i in 0..self.node_count() {
            let d = g.bfs_distances(i)?;
            out.desired.extend(self.sins_desired[i].iter().filter(|&&j| d[j] > bound_q).map(|&j| (i, j)));
            out.initial.extend(self.sins_initial[i].iter().filter(|&&j| d[j] > bound_r).map(|&j| (i, j)));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SinViolations {
    pub desired: Vec<(usize, usize)>,
    pub initial: Vec<(usize, usize)>,
}

impl SinViolations {
    pub fn count(&self) -> usize {
        self.desired.len() + self.initial.len()
    }
}

fn accumulate(target: &mut [f64], blocks: &[Block], members: &[usize], x: &[f64], layout: &NodeLayout, sign: f64) {
    let height = target.len();
    for &j in members {
        let Ok(k) = blocks.binary_search_by_key(&j, |b| b.col_node) else {
            continue;
        };
        let block = &blocks[k];
        let xs = &x[layout.state_range(j)];
        let width = xs.len();
        for r in 0..height {
            let row = &block.values[r * width..(r + 1) * width];
            target[r] += sign * row.iter().zip(xs).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

/// [`LocalizedController::apply`] as a free function.
pub fn apply_localized(c: &LocalizedController, x0: &[f64], xd: &[f64]) -> Result<InputSequence> {
    c.apply(x0, xd)
}

/// [`LocalizedController::effective_sins`] as a free function.
pub fn effective_sins(c: &LocalizedController, delta: f64) -> Result<LocalizedController> {
    c.effective_sins(delta)
}
