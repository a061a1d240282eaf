//! Localization of the inverse Gramian: ordered entry magnitudes, row
//! envelopes and the off-diagonal decay bound for banded SPD matrices,
//!
//! ```text
//! |z_ij| <= c * lambda^|i-j|,
//! c      = ||W^{-1}||_2 * max{1, (sqrt(k) + 1)^2 / (2k)},
//! lambda = ((sqrt(k) - 1) / (sqrt(k) + 1))^(2/beta),
//! ```
//!
//! where `k` is the condition number and `beta` the total band width
//! (`w_ij = 0` for `|i - j| > beta / 2`).

use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::control::{gramian, ControlProblem};
use crate::error::{Error, Result};
use crate::network::{build_coupling, build_input_matrix, CouplingSpec, Graph, InputPreset, InputSpec};
use crate::sparse::{extreme_eigenvalues, fill_in, ConditionMode, SparseMatrix, SpectrumBounds};

/// Largest dimension for which dense inverses are formed.
pub const DENSE_INVERSE_LIMIT: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayBound {
    pub c: f64,
    pub lambda: f64,
    /// Total band width, twice the largest `|i - j|` of a stored entry.
    pub beta: usize,
    pub kappa: f64,
}

impl DecayBound {
    /// Bound on `|z_ij|` at offset `|i - j| = distance`.
    pub fn at(&self, distance: usize) -> f64 {
        if distance == 0 {
            self.c
        } else {
            self.c * self.lambda.powf(distance as f64)
        }
    }

    /// Bound from the extreme eigenvalues and the half band width.
    pub fn from_spectrum(spectrum: SpectrumBounds, half_bandwidth: usize) -> Result<Self> {
        if !(spectrum.min > 0.0) || !(spectrum.max >= spectrum.min) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: spectrum.min,
            });
        }
        let kappa = spectrum.condition_number();
        let sk = kappa.sqrt();
        let c = (1.0 / spectrum.min) * f64::max(1.0, (sk + 1.0).powi(2) / (2.0 * kappa));
        let beta = 2 * half_bandwidth;
        let ratio = (sk - 1.0) / (sk + 1.0);
        let lambda = if beta == 0 || ratio <= 0.0 {
            0.0
        } else {
            ratio.powf(2.0 / beta as f64)
        };
        Ok(DecayBound {
            c,
            lambda,
            beta,
            kappa,
        })
    }
}

/// All entry magnitudes of a dense matrix in descending order.
pub fn ordered_magnitudes_dense(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.iter().map(|x| x.abs()).collect();
    v.sort_unstable_by(|a, b| b.total_cmp(a));
    v
}

/// All `rows * cols` entry magnitudes in descending order; entries outside
/// the stored pattern contribute zeros.
pub fn ordered_magnitudes(m: &SparseMatrix) -> Vec<f64> {
    let total = m.rows() * m.cols();
    let mut v: Vec<f64> = m.values().iter().map(|x| x.abs()).collect();
    v.sort_unstable_by(|a, b| b.total_cmp(a));
    v.resize(total, 0.0);
    v
}

/// Largest `|i - j|` over stored nonzeros.
pub fn bandwidth(m: &SparseMatrix) -> usize {
    m.iter()
        .filter(|&(_, _, v)| v != 0.0)
        .map(|(r, c, _)| r.abs_diff(c))
        .max()
        .unwrap_or(0)
}

pub fn demko_bound(w: &SparseMatrix, mode: ConditionMode) -> Result<DecayBound> {
    let spectrum = extreme_eigenvalues(w, mode)?;
    DecayBound::from_spectrum(spectrum, bandwidth(w))
}

/// Dense inverse of a symmetric positive definite matrix via Cholesky.
pub fn dense_inverse(w: &SparseMatrix) -> Result<DMatrix<f64>> {
    let n = w.rows();
    if !w.is_square() {
        return Err(Error::dims("dense_inverse", n, w.cols()));
    }
    if n > DENSE_INVERSE_LIMIT {
        return Err(Error::TooLarge {
            dim: n,
            limit: DENSE_INVERSE_LIMIT,
        });
    }
    let chol = w.to_dense().cholesky().ok_or(Error::NotPositiveDefinite {
        min_eigenvalue: f64::NAN,
    })?;
    Ok(chol.inverse())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundViolation {
    pub i: usize,
    pub j: usize,
    pub bound: f64,
    pub actual: f64,
}

/// Entries of `inverse` exceeding `bound`. The comparison allows an
/// absolute slack of `dim * eps * max|z|` for rounding in the computed inverse.
pub fn audit_bound(inverse: &DMatrix<f64>, bound: &DecayBound) -> Vec<BoundViolation> {
    let n = inverse.nrows();
    let zmax = inverse.amax();
    let slack = n as f64 * f64::EPSILON * zmax;
    let mut out = Vec::new();
    for j in 0..inverse.ncols() {
        for i in 0..n {
            let actual = inverse[(i, j)].abs();
            let b = bound.at(i.abs_diff(j));
            if actual > b + slack {
                out.push(BoundViolation { i, j, bound: b, actual });
            }
        }
    }
    out
}

/// `|z_{row, j}|` for every column `j`.
pub fn row_envelope(inverse: &DMatrix<f64>, row: usize) -> Result<Vec<f64>> {
    if row >= inverse.nrows() {
        return Err(Error::Precondition(format!(
            "row {row} out of range for {} rows",
            inverse.nrows()
        )));
    }
    Ok(inverse.row(row).iter().map(|v| v.abs()).collect())
}

/// Maxima of `envelope` over bins of `|j - center|` of width `bin_width`;
/// entry `b` covers offsets `b * bin_width .. (b + 1) * bin_width`.
pub fn binned_maxima(envelope: &[f64], center: usize, bin_width: usize) -> Vec<f64> {
    let width = bin_width.max(1);
    let mut out: Vec<f64> = Vec::new();
    for (j, &v) in envelope.iter().enumerate() {
        let bin = j.abs_diff(center) / width;
        if out.len() <= bin {
            out.resize(bin + 1, 0.0);
        }
        out[bin] = out[bin].max(v);
    }
    out
}

/// Localization data for one Gramian.
#[derive(Clone, Debug)]
pub struct LocalizationReport {
    pub kappa: f64,
    pub fill_in_percent: f64,
    pub bandwidth: usize,
    pub bound: DecayBound,
    /// Descending magnitudes of all entries of `W^{-1}`.
    pub ordered: Vec<f64>,
    pub middle_row: usize,
    pub envelope: Vec<f64>,
    pub violations: Vec<BoundViolation>,
}

impl LocalizationReport {
    /// Fraction of entries (in `[0, 1]`) that are at least `threshold`.
    pub fn fraction_above(&self, threshold: f64) -> f64 {
        let count = self.ordered.partition_point(|v| *v >= threshold);
        count as f64 / self.ordered.len().max(1) as f64
    }
}

/// Dense localization analysis of `W_f` for `p`.
pub fn localization_report(p: &ControlProblem) -> Result<LocalizationReport> {
    let w = gramian(p)?;
    let n = w.rows();
    if n > DENSE_INVERSE_LIMIT {
        return Err(Error::TooLarge {
            dim: n,
            limit: DENSE_INVERSE_LIMIT,
        });
    }
    let bound = demko_bound(&w, ConditionMode::Exact)?;
    let inverse = dense_inverse(&w)?;
    let middle_row = n / 2;
    Ok(LocalizationReport {
        kappa: bound.kappa,
        fill_in_percent: fill_in(&w),
        bandwidth: bandwidth(&w),
        ordered: ordered_magnitudes_dense(&inverse),
        envelope: row_envelope(&inverse, middle_row)?,
        violations: audit_bound(&inverse, &bound),
        middle_row,
        bound,
    })
}

/// [`localization_report`] for the three input presets on one network,
/// all sharing the coupling matrix.
pub fn preset_localization(
    g: &Graph,
    coupling: &CouplingSpec,
    f: usize,
) -> Result<Vec<(InputPreset, LocalizationReport)>> {
    let a = build_coupling(g, coupling)?;
    let n = coupling.n;
    let dim = a.rows();
    [InputPreset::B1, InputPreset::B2, InputPreset::B3]
        .into_par_iter()
        .map(|preset| {
            let b = build_input_matrix(g.node_count(), n, &InputSpec::all_nodes(g.node_count(), n, preset))?;
            let p = ControlProblem::uniform(a.clone(), b, f, vec![0.0; dim], vec![0.0; dim], n, n)?;
            Ok((preset, localization_report(&p)?))
        })
        .collect()
}

/// `rank,magnitude` rows.
pub fn write_ordered_csv(path: impl AsRef<Path>, ordered: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["rank", "magnitude"])?;
    for (k, v) in ordered.iter().enumerate() {
        w.write_record([k.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `column,magnitude` rows.
pub fn write_envelope_csv(path: impl AsRef<Path>, envelope: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["column", "magnitude"])?;
    for (k, v) in envelope.iter().enumerate() {
        w.write_record([k.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `i,j,bound,actual` rows; only the header when the audit is clean.
pub fn write_violations_csv(path: impl AsRef<Path>, violations: &[BoundViolation]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["i", "j", "bound", "actual"])?;
    for v in violations {
        w.write_record([v.i.to_string(), v.j.to_string(), v.bound.to_string(), v.actual.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::gen_lattice;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tridiag(n: usize, d: f64, o: f64) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, d));
            if i + 1 < n {
                t.push((i, i + 1, o));
                t.push((i + 1, i, o));
            }
        }
        SparseMatrix::from_triplets(n, n, t).unwrap()
    }

    /// Random SPD matrix with half band width `hb`: `M M^T + shift I` with banded `M`.
    fn random_banded_spd(n: usize, hb: usize, seed: u64) -> SparseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = hb / 2;
        let mut t = Vec::new();
        for i in 0..n {
            for j in i.saturating_sub(half)..=(i + hb - half).min(n - 1) {
                t.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
        let m = SparseMatrix::from_triplets(n, n, t).unwrap();
        let mmt = crate::sparse::spgemm(&m, &m.transpose()).unwrap();
        mmt.add(&SparseMatrix::identity(n).scale(rng.gen_range(0.01..1.0))).unwrap()
    }

    #[test]
    fn ordered_magnitude_examples() {
        let id = ordered_magnitudes(&SparseMatrix::identity(3));
        assert_eq!(id, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let d = ordered_magnitudes(&SparseMatrix::from_diagonal(&[3.0, -1.0, 2.0]));
        assert_eq!(&d[..4], &[3.0, 2.0, 1.0, 0.0]);

        let w = random_banded_spd(12, 2, 3);
        let inv = dense_inverse(&w).unwrap();
        let mut oracle: Vec<f64> = inv.iter().map(|v| v.abs()).collect();
        oracle.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_eq!(ordered_magnitudes_dense(&inv), oracle);
        assert_eq!(ordered_magnitudes(&SparseMatrix::from_dense(&inv)), oracle);
    }

    proptest! {
        #[test]
        fn ordered_is_permutation_of_magnitudes(vals in proptest::collection::vec(-5.0f64..5.0, 16)) {
            let m = DMatrix::from_vec(4, 4, vals.clone());
            let ordered = ordered_magnitudes_dense(&m);
            let mut bits: Vec<u64> = vals.iter().map(|v| v.abs().to_bits()).collect();
            let mut got: Vec<u64> = ordered.iter().map(|v| v.to_bits()).collect();
            bits.sort_unstable();
            got.sort_unstable();
            prop_assert_eq!(bits, got);
            prop_assert!(ordered.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn bandwidth_examples() {
        assert_eq!(bandwidth(&SparseMatrix::identity(5)), 0);
        assert_eq!(bandwidth(&tridiag(6, 2.0, -1.0)), 1);

        // Row-major lattice: structural oracle from graph distances.
        let g = gen_lattice(6, 5).unwrap();
        let (n, f) = (2, 3);
        let p = crate::scenario::network_problem(
            &g,
            &CouplingSpec::new(n, 1),
            &InputSpec::all_nodes(30, n, InputPreset::B1),
            f,
            2,
        )
        .unwrap();
        let w = gramian(&p).unwrap();
        let mut oracle = 0;
        for i in 0..30 {
            let d = g.bfs_distances(i).unwrap();
            for j in 0..30 {
                if d[j] <= 2 * (f - 1) && j >= i {
                    oracle = oracle.max(n * (j - i) + n - 1);
                }
            }
        }
        assert_eq!(bandwidth(&w), oracle);
    }

    #[test]
    fn demko_scaled_identity() {
        let b = demko_bound(&SparseMatrix::identity(4).scale(2.5), ConditionMode::Exact).unwrap();
        assert_eq!(b.kappa, 1.0);
        assert_eq!(b.lambda, 0.0);
        assert_eq!(b.at(1), 0.0);
        let inv = dense_inverse(&SparseMatrix::identity(4).scale(2.5)).unwrap();
        assert!(audit_bound(&inv, &b).is_empty());
    }

    #[test]
    fn demko_tridiagonal_against_dense_inverse() {
        let w = tridiag(10, 2.0, -1.0);
        let b = demko_bound(&w, ConditionMode::Exact).unwrap();
        assert_eq!(b.beta, 2);
        assert!(b.lambda > 0.0 && b.lambda < 1.0);
        let inv = w.to_dense().try_inverse().unwrap();
        assert!(audit_bound(&inv, &b).is_empty());
    }

    #[test]
    fn demko_rejects_indefinite() {
        assert!(demko_bound(&tridiag(4, 0.0, 1.0), ConditionMode::Exact).is_err());
    }

    #[test]
    fn demko_random_banded() {
        for seed in 0..10 {
            let n = 20 + 7 * seed as usize;
            let w = random_banded_spd(n, 1 + seed as usize % 4, seed);
            let b = demko_bound(&w, ConditionMode::Exact).unwrap();
            let inv = dense_inverse(&w).unwrap();
            assert!(audit_bound(&inv, &b).is_empty(), "seed {seed}");
        }
    }

    #[test]
    fn lambda_increases_with_kappa() {
        for hb in [1, 3, 10] {
            let mut prev = -1.0;
            for k in [1.0, 1.5, 2.0, 5.0, 10.0, 1e2, 1e4, 1e8] {
                let b = DecayBound::from_spectrum(SpectrumBounds { min: 1.0, max: k }, hb).unwrap();
                assert!(b.lambda > prev || (k == 1.0 && b.lambda == 0.0));
                assert!(b.lambda < 1.0);
                prev = b.lambda;
            }
        }
    }

    #[test]
    fn envelope_examples() {
        let id = DMatrix::<f64>::identity(5, 5);
        assert_eq!(row_envelope(&id, 2).unwrap(), vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(row_envelope(&id, 5).is_err());

        let w = tridiag(9, 3.0, -1.0);
        let inv = dense_inverse(&w).unwrap();
        let env = row_envelope(&inv, 4).unwrap();
        for k in 0..4 {
            assert!((env[4 - k] - env[4 + k]).abs() < 1e-14);
        }
        assert_eq!(binned_maxima(&[1.0, 5.0, 2.0, 4.0, 3.0], 2, 1), vec![2.0, 5.0, 3.0]);
    }

    #[test]
    fn lattice_envelope_decays_in_bins() {
        let g = gen_lattice(9, 9).unwrap();
        let reports = preset_localization(&g, &CouplingSpec::new(3, 4), 3).unwrap();
        let (_, r) = &reports[0];
        assert!(r.violations.is_empty());
        let bins = binned_maxima(&r.envelope, r.middle_row, 3 * 9);
        assert!(bins.windows(2).all(|w| w[1] <= w[0]), "{bins:?}");
        assert!(r.fill_in_percent > 0.0);
    }

    #[test]
    fn csv_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.csv");
        write_violations_csv(&path, &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "i,j,bound,actual\n");
        write_ordered_csv(dir.path().join("o.csv"), &[2.0, 1.0]).unwrap();
        let text = std::fs::read_to_string(dir.path().join("o.csv")).unwrap();
        assert_eq!(text, "rank,magnitude\n0,2\n1,1\n");
    }
}
