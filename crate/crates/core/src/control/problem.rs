use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sparse::{
    cg_solve, condition_number, fill_in, spgemm, ConditionMode, SparseMatrix, SparsityPattern,
};

use super::layout::{InputSequence, NodeLayout, PermutationMap, SequenceOrder};

/// Default relative tolerance of the centralized conjugate-gradient solve.
pub const DEFAULT_CG_TOLERANCE: f64 = 1e-10;

/// One control task: drive `x(k+1) = A x(k) + B u(k)` from `x0` to `xd`
/// in `f` steps.
#[derive(Clone, Debug)]
pub struct ControlProblem {
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub f: usize,
    pub x0: Vec<f64>,
    pub xd: Vec<f64>,
    pub layout: NodeLayout,
}

impl ControlProblem {
    pub fn new(
        a: SparseMatrix,
        b: SparseMatrix,
        f: usize,
        x0: Vec<f64>,
        xd: Vec<f64>,
        layout: NodeLayout,
    ) -> Result<Self> {
        let dim = layout.state_dim();
        if f == 0 {
            return Err(Error::Precondition("horizon f must be at least 1".into()));
        }
        if a.shape() != (dim, dim) {
            return Err(Error::dims("ControlProblem A", format!("{dim}x{dim}"), format!("{:?}", a.shape())));
        }
        if b.shape() != (dim, layout.input_dim()) {
            return Err(Error::dims(
                "ControlProblem B",
                format!("{dim}x{}", layout.input_dim()),
                format!("{:?}", b.shape()),
            ));
        }
        if x0.len() != dim || xd.len() != dim {
            return Err(Error::dims("ControlProblem states", dim, x0.len().max(xd.len())));
        }
        Ok(ControlProblem {
            a,
            b,
            f,
            x0,
            xd,
            layout,
        })
    }

    /// Problem with `n` states and `m` inputs on every node.
    pub fn uniform(
        a: SparseMatrix,
        b: SparseMatrix,
        f: usize,
        x0: Vec<f64>,
        xd: Vec<f64>,
        n: usize,
        m: usize,
    ) -> Result<Self> {
        if n == 0 || a.rows() % n != 0 {
            return Err(Error::Precondition(format!(
                "state dimension {} is not a multiple of n = {n}",
                a.rows()
            )));
        }
        let layout = NodeLayout::uniform(a.rows() / n, n, m);
        Self::new(a, b, f, x0, xd, layout)
    }

    pub fn state_dim(&self) -> usize {
        self.layout.state_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.layout.input_dim()
    }

    pub fn sequence_len(&self) -> usize {
        self.f * self.input_dim()
    }

    pub fn permutation(&self) -> PermutationMap {
        PermutationMap::for_layout(&self.layout, self.f)
    }

    /// Same system with different end points.
    pub fn with_states(&self, x0: Vec<f64>, xd: Vec<f64>) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), self.f, x0, xd, self.layout.clone())
    }

    /// `A^f x` by repeated products.
    pub fn free_response(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut cur = x.to_vec();
        let mut next = vec![0.0; cur.len()];
        if cur.len() != self.state_dim() {
            return Err(Error::dims("free_response", self.state_dim(), cur.len()));
        }
        for _ in 0..self.f {
            self.a.matvec_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// `A^f` as a sparse matrix.
    pub fn horizon_power(&self) -> Result<SparseMatrix> {
        self.a.pow(self.f)
    }

    /// `[B, AB, ..., A^{f-1} B]` as separate blocks (index `j` holds `A^j B`).
    pub fn krylov_blocks(&self) -> Result<Vec<SparseMatrix>> {
        let mut blocks = Vec::with_capacity(self.f);
        blocks.push(self.b.clone());
        for j in 1..self.f {
            let next = spgemm(&self.a, &blocks[j - 1])?;
            blocks.push(next);
        }
        Ok(blocks)
    }
}

/// `x(f)` obtained by stepping the dynamics under `u`.
pub fn propagate(p: &ControlProblem, u: &InputSequence) -> Result<Vec<f64>> {
    if u.values.len() != p.sequence_len() {
        return Err(Error::dims("propagate", p.sequence_len(), u.values.len()));
    }
    let u = u.to_order(SequenceOrder::TimeMajor, &p.permutation())?;
    let width = p.input_dim();
    let mut x = p.x0.clone();
    let mut ax = vec![0.0; x.len()];
    let mut bu = vec![0.0; x.len()];
    for k in 0..p.f {
        p.a.matvec_into(&x, &mut ax);
        p.b.matvec_into(u.step(k, width), &mut bu);
        for i in 0..x.len() {
            x[i] = ax[i] + bu[i];
        }
    }
    Ok(x)
}

/// `K_f = [A^{f-1} B ... A B  B]` with time-major columns.
pub fn controllability_matrix(p: &ControlProblem) -> Result<SparseMatrix> {
    let blocks = p.krylov_blocks()?;
    let ordered: Vec<&SparseMatrix> = blocks.iter().rev().collect();
    SparseMatrix::hstack(&ordered)
}

/// `K_f P^T`: the controllability matrix with node-major columns.
pub fn node_major_controllability(p: &ControlProblem) -> Result<SparseMatrix> {
    let k = controllability_matrix(p)?;
    let perm = p.permutation();
    Ok(k.transpose().select_rows(perm.node_major_row_order()).transpose())
}

/// Controllability Gramian `W_f = sum_{j<f} A^j B B^T (A^T)^j`.
pub fn gramian(p: &ControlProblem) -> Result<SparseMatrix> {
    gramian_from_blocks(&p.krylov_blocks()?)
}

pub(crate) fn gramian_from_blocks(blocks: &[SparseMatrix]) -> Result<SparseMatrix> {
    let mut w: Option<SparseMatrix> = None;
    for m in blocks {
        let term = spgemm(m, &m.transpose())?;
        w = Some(match w {
            None => term,
            Some(acc) => acc.add(&term)?,
        });
    }
    w.ok_or_else(|| Error::Precondition("empty horizon".into()))
}

/// Structural pattern of `I + sum_{l<=q} A^l B B^T (A^T)^l`.
pub fn apriori_pattern(p: &ControlProblem, q: usize) -> Result<SparsityPattern> {
    let pa = SparsityPattern::from(&p.a);
    let pat = pa.transpose();
    let pb = SparsityPattern::from(&p.b);
    let mut term = pb.product(&pb.transpose())?;
    let mut acc = SparsityPattern::identity(p.state_dim()).union(&term)?;
    for _ in 0..q {
        term = pa.product(&term)?.product(&pat)?;
        acc = acc.union(&term)?;
    }
    Ok(acc)
}

/// Minimum-energy input `ubar = K^T W^{-1} (xd - A^f x0)`, node-major,
/// with `W^{-1}` applied by conjugate gradient.
pub fn centralized_control(p: &ControlProblem, tol: f64) -> Result<InputSequence> {
    let blocks = p.krylov_blocks()?;
    let w = gramian_from_blocks(&blocks)?;
    let ordered: Vec<&SparseMatrix> = blocks.iter().rev().collect();
    let k = SparseMatrix::hstack(&ordered)?;
    let target: Vec<f64> = {
        let free = p.free_response(&p.x0)?;
        p.xd.iter().zip(&free).map(|(d, f)| d - f).collect()
    };
    let max_iters = 20 * p.state_dim() + 1000;
    let y = cg_solve(&w, &target, tol, max_iters)?;
    let time_major = k.transpose().matvec(&y)?;
    Ok(InputSequence::node_major(p.permutation().apply(&time_major)))
}

/// `||xd - x(f)|| / ||xd - x0||` under input `u`.
pub fn control_error(p: &ControlProblem, u: &InputSequence) -> Result<f64> {
    let denom = distance(&p.xd, &p.x0);
    if denom == 0.0 {
        return Err(Error::UndefinedError);
    }
    let xf = propagate(p, u)?;
    Ok(distance(&p.xd, &xf) / denom)
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Largest state dimension accepted by [`controllability_index`].
pub const DENSE_RANK_LIMIT: usize = 2000;

/// Smallest `f <= max_f` with `rank K_f = Nn`.
pub fn controllability_index(p: &ControlProblem, max_f: usize) -> Result<usize> {
    let dim = p.state_dim();
    if dim > DENSE_RANK_LIMIT {
        return Err(Error::TooLarge {
            dim,
            limit: DENSE_RANK_LIMIT,
        });
    }
    let a = p.a.to_dense();
    let mut block = p.b.to_dense();
    let mut k = DMatrix::<f64>::zeros(dim, 0);
    let mut rank = 0;
    for f in 1..=max_f {
        let cols = k.ncols();
        k = k.resize_horizontally(cols + block.ncols(), 0.0);
        k.columns_mut(cols, block.ncols()).copy_from(&block);
        rank = numerical_rank(&k);
        if rank == dim {
            return Ok(f);
        }
        block = &a * &block;
    }
    Err(Error::NotControllable { max_f, rank, dim })
}

pub(crate) fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().fold(0.0f64, |a, v| a.max(*v));
    let threshold = smax * m.nrows().max(m.ncols()) as f64 * f64::EPSILON;
    sv.iter().filter(|s| **s > threshold).count()
}

/// Gramian with its condition number and fill-in.
#[derive(Clone, Debug)]
pub struct GramianReport {
    pub w: SparseMatrix,
    /// `f64::INFINITY` when the Gramian is singular.
    pub kappa: f64,
    pub fill_in_percent: f64,
    /// Controllability index, when requested.
    pub nu: Option<usize>,
}

pub fn gramian_report(p: &ControlProblem, mode: ConditionMode, nu_max_f: Option<usize>) -> Result<GramianReport> {
    let w = gramian(p)?;
    let kappa = match condition_number(&w, mode) {
        Ok(k) => k,
        Err(Error::NotPositiveDefinite { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let nu = match nu_max_f {
        Some(max_f) => controllability_index(p, max_f).ok(),
        None => None,
    };
    Ok(GramianReport {
        fill_in_percent: fill_in(&w),
        w,
        kappa,
        nu,
    })
}
