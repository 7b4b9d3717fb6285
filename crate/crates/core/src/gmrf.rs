//! Gaussian Markov random field numerics: sparse Cholesky factorization,
//! log-density evaluation, solves, and constrained sampling.
//!
//! Factorization is up-looking over the elimination tree (row `i` of the
//! lower factor is obtained by a sparse triangular solve against the rows
//! already built). No fill-reducing permutation is applied; callers order
//! their latent blocks so that densely coupled coordinates come last, which
//! keeps fill low at the scales this crate targets.
//!
//! Intrinsic (rank-deficient) precisions are factored after adding a small
//! diagonal jitter and made identifiable by explicit sum-to-zero constraints,
//! applied by conditioning: `x* = x - Q⁻¹Aᵀ(AQ⁻¹Aᵀ)⁻¹(Ax)`.

use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::precision::PrecisionMatrix;
use crate::rng::fill_standard_normal;

/// Relative diagonal jitter applied when factoring intrinsic matrices.
pub const INTRINSIC_JITTER: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum GmrfError {
    #[error("matrix is not positive definite: pivot {pivot} at row {row} (beyond jitter {jitter})")]
    Indefinite { row: usize, pivot: f64, jitter: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("constraint system A·Q⁻¹·Aᵀ is singular at pivot {0}")]
    SingularConstraint(usize),
    #[error("constraint row {row} references index {index} outside dimension {dim}")]
    ConstraintOutOfBounds { row: usize, index: usize, dim: usize },
    #[error("constraint has no rows")]
    EmptyConstraint,
}

/// Hard linear constraints `A x = 0` with sparse rows.
#[derive(Clone, Debug)]
pub struct LinearConstraint {
    dim: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl LinearConstraint {
    pub fn new(dim: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self, GmrfError> {
        if rows.is_empty() {
            return Err(GmrfError::EmptyConstraint);
        }
        for (r, row) in rows.iter().enumerate() {
            for &(index, _) in row {
                if index >= dim {
                    return Err(GmrfError::ConstraintOutOfBounds { row: r, index, dim });
                }
            }
        }
        Ok(LinearConstraint { dim, rows })
    }

    /// One sum-to-zero row over the given indices.
    pub fn sum_to_zero(dim: usize, indices: &[usize]) -> Result<Self, GmrfError> {
        Self::new(dim, alloc::vec![indices.iter().map(|&i| (i, 1.0)).collect()])
    }

    /// Sum-to-zero rows for several index groups (one row per group).
    pub fn sum_to_zero_groups(dim: usize, groups: &[Vec<usize>]) -> Result<Self, GmrfError> {
        Self::new(
            dim,
            groups
                .iter()
                .map(|g| g.iter().map(|&i| (i, 1.0)).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    /// A x
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(i, c)| c * x[i]).sum())
            .collect()
    }
}

/// Lower-triangular sparse Cholesky factor `L L^T = Q + jitter·I`.
///
/// Rows and columns of the strictly lower part are both kept so forward and
/// backward substitution each stream through contiguous memory.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    n: usize,
    row_ptr: Vec<usize>,
    row_col: Vec<usize>,
    row_val: Vec<f64>,
    col_ptr: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    diag: Vec<f64>,
    jitter_applied: f64,
    half_log_det: f64,
}

/// Factor `Q + ε·mean(diag(Q))·I` with `ε = 1e-8` when `Q` is intrinsic and
/// `ε = 0` otherwise.
pub fn factorize(q: &PrecisionMatrix) -> Result<CholeskyFactor, GmrfError> {
    let jitter = if q.is_intrinsic() {
        INTRINSIC_JITTER * q.mean_diag()
    } else {
        0.0
    };
    factorize_with_jitter(q, jitter)
}

/// Jitter for an intrinsic matrix with a floor for all-zero rows (isolated
/// units contribute nothing to the mean diagonal but still need a positive
/// pivot; their sum-to-zero constraint pins them afterwards).
pub fn floored_intrinsic_jitter(q: &PrecisionMatrix) -> f64 {
    let md = q.mean_diag();
    INTRINSIC_JITTER * if md > 0.0 { md } else { 1.0 }
}

/// Factor an intrinsic matrix with the floored jitter; the variant used when
/// drawing from or conditioning on intrinsic fields that may contain
/// isolated units.
pub fn factorize_intrinsic(q: &PrecisionMatrix) -> Result<CholeskyFactor, GmrfError> {
    factorize_with_jitter(q, floored_intrinsic_jitter(q))
}

/// Factor `Q + jitter·I` for an explicitly chosen absolute jitter.
pub fn factorize_with_jitter(
    q: &PrecisionMatrix,
    jitter: f64,
) -> Result<CholeskyFactor, GmrfError> {
    let (n, row_ptr, col_idx, values) = q.raw_csr();
    factorize_csr(n, row_ptr, col_idx, values, jitter)
}

/// Factor a raw CSR symmetric matrix; used by the inference engine, which
/// reassembles posterior precision values every Newton iteration.
pub(crate) fn factorize_csr(
    n: usize,
    q_row_ptr: &[usize],
    q_col_idx: &[usize],
    q_values: &[f64],
    jitter: f64,
) -> Result<CholeskyFactor, GmrfError> {
    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0usize);
    let mut row_col: Vec<usize> = Vec::new();
    let mut row_val: Vec<f64> = Vec::new();
    let mut diag = alloc::vec![0.0; n];

    // elimination tree and per-row visitation marks
    let mut parent = alloc::vec![usize::MAX; n];
    let mut mark = alloc::vec![usize::MAX; n];
    let mut pattern: Vec<usize> = Vec::new();
    let mut x = alloc::vec![0.0; n];

    for i in 0..n {
        pattern.clear();
        mark[i] = i;
        let r = q_row_ptr[i]..q_row_ptr[i + 1];
        let (cols, vals) = (&q_col_idx[r.clone()], &q_values[r]);
        let mut diag_val = jitter;
        for (&k0, &v) in cols.iter().zip(vals) {
            if k0 > i {
                continue;
            }
            if k0 == i {
                diag_val += v;
                continue;
            }
            x[k0] += v;
            // walk toward the root of the elimination tree
            let mut k = k0;
            while k < i && mark[k] != i {
                mark[k] = i;
                pattern.push(k);
                k = parent[k];
            }
        }
        pattern.sort_unstable();

        // sparse forward solve L[0..i,0..i] · y = Q[i, 0..i]
        for &j in &pattern {
            let mut xj = x[j];
            for (&k, &ljk) in row_col[row_ptr[j]..row_ptr[j + 1]]
                .iter()
                .zip(&row_val[row_ptr[j]..row_ptr[j + 1]])
            {
                xj -= ljk * x[k];
            }
            x[j] = xj / diag[j];
        }

        let mut d = diag_val;
        for &j in &pattern {
            d -= x[j] * x[j];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(GmrfError::Indefinite {
                row: i,
                pivot: d,
                jitter,
            });
        }
        diag[i] = libm::sqrt(d);

        for &j in &pattern {
            row_col.push(j);
            row_val.push(x[j]);
            if parent[j] == usize::MAX {
                parent[j] = i;
            }
            x[j] = 0.0;
        }
        row_ptr.push(row_col.len());
    }

    // column-compressed mirror of the strictly lower part
    let nnz = row_col.len();
    let mut col_counts = alloc::vec![0usize; n + 1];
    for &c in &row_col {
        col_counts[c + 1] += 1;
    }
    for i in 0..n {
        col_counts[i + 1] += col_counts[i];
    }
    let col_ptr = col_counts.clone();
    let mut cursor = col_counts;
    let mut col_row = alloc::vec![0usize; nnz];
    let mut col_val = alloc::vec![0.0; nnz];
    for i in 0..n {
        for (&c, &v) in row_col[row_ptr[i]..row_ptr[i + 1]]
            .iter()
            .zip(&row_val[row_ptr[i]..row_ptr[i + 1]])
        {
            let slot = cursor[c];
            col_row[slot] = i;
            col_val[slot] = v;
            cursor[c] += 1;
        }
    }

    let half_log_det = diag.iter().map(|d| libm::log(*d)).sum();

    Ok(CholeskyFactor {
        n,
        row_ptr,
        row_col,
        row_val,
        col_ptr,
        col_row,
        col_val,
        diag,
        jitter_applied: jitter,
        half_log_det,
    })
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn jitter_applied(&self) -> f64 {
        self.jitter_applied
    }

    /// `log|Q + jitter·I| / 2 = Σ log L[i][i]`
    pub fn half_log_det(&self) -> f64 {
        self.half_log_det
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Strictly-lower entries of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.row_col[r.clone()], &self.row_val[r])
    }

    /// Forward substitution `L y = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Result<Vec<f64>, GmrfError> {
        self.check_dim(b.len())?;
        let mut y = b.to_vec();
        for i in 0..self.n {
            let mut acc = y[i];
            for (&k, &v) in self.row_cols(i) {
                acc -= v * y[k];
            }
            y[i] = acc / self.diag[i];
        }
        Ok(y)
    }

    /// Backward substitution `Lᵀ x = y`.
    pub fn solve_lower_transpose(&self, y: &[f64]) -> Result<Vec<f64>, GmrfError> {
        self.check_dim(y.len())?;
        let mut x = y.to_vec();
        for i in (0..self.n).rev() {
            let mut acc = x[i];
            let r = self.col_ptr[i]..self.col_ptr[i + 1];
            for (&k, &v) in self.col_row[r.clone()].iter().zip(&self.col_val[r]) {
                acc -= v * x[k];
            }
            x[i] = acc / self.diag[i];
        }
        Ok(x)
    }

    /// `x = Q⁻¹ b` for the jittered `Q`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, GmrfError> {
        let y = self.solve_lower(b)?;
        self.solve_lower_transpose(&y)
    }

    /// `w = Lᵀ v`.
    pub fn mul_lower_transpose(&self, v: &[f64]) -> Result<Vec<f64>, GmrfError> {
        self.check_dim(v.len())?;
        let mut w = alloc::vec![0.0; self.n];
        for j in 0..self.n {
            let mut acc = self.diag[j] * v[j];
            let r = self.col_ptr[j]..self.col_ptr[j + 1];
            for (&i, &l) in self.col_row[r.clone()].iter().zip(&self.col_val[r]) {
                acc += l * v[i];
            }
            w[j] = acc;
        }
        Ok(w)
    }

    /// Reconstruct the jittered matrix densely (oracle/debugging helper).
    pub fn reconstruct_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut l = alloc::vec![alloc::vec![0.0; n]; n];
        for i in 0..n {
            l[i][i] = self.diag[i];
            for (&j, &v) in self.row_cols(i) {
                l[i][j] = v;
            }
        }
        let mut q = alloc::vec![alloc::vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..=i.min(j) {
                    acc += l[i][k] * l[j][k];
                }
                q[i][j] = acc;
            }
        }
        q
    }

    fn row_cols(&self, i: usize) -> impl Iterator<Item = (&usize, &f64)> {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.row_col[r.clone()].iter().zip(&self.row_val[r])
    }

    fn check_dim(&self, got: usize) -> Result<(), GmrfError> {
        if got != self.n {
            return Err(GmrfError::DimensionMismatch {
                expected: self.n,
                got,
            });
        }
        Ok(())
    }
}

/// Gaussian log-density `-(n/2)·log 2π + Σ log L[i][i] - ½(x-μ)ᵀQ(x-μ)`,
/// using the jittered `Q` consistently with the factor.
pub fn log_density(x: &[f64], mean: &[f64], factor: &CholeskyFactor) -> Result<f64, GmrfError> {
    if x.len() != factor.dim() || mean.len() != factor.dim() {
        return Err(GmrfError::DimensionMismatch {
            expected: factor.dim(),
            got: if x.len() != factor.dim() {
                x.len()
            } else {
                mean.len()
            },
        });
    }
    let v: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let w = factor.mul_lower_transpose(&v)?;
    let quad: f64 = w.iter().map(|t| t * t).sum();
    let n = factor.dim() as f64;
    Ok(-0.5 * n * libm::log(2.0 * core::f64::consts::PI) + factor.half_log_det() - 0.5 * quad)
}

/// Pre-solved machinery for repeatedly conditioning draws on `A x = 0`.
///
/// Holds `V = Q⁻¹Aᵀ` and a dense factor of `S = A·V`, so each corrected draw
/// costs one small back-solve rather than `k` sparse solves.
#[derive(Clone, Debug)]
pub struct ConstraintCorrection {
    v_cols: Vec<Vec<f64>>,
    s_chol: DenseChol,
}

impl ConstraintCorrection {
    pub fn prepare(
        factor: &CholeskyFactor,
        constraint: &LinearConstraint,
    ) -> Result<Self, GmrfError> {
        if constraint.dim() != factor.dim() {
            return Err(GmrfError::DimensionMismatch {
                expected: factor.dim(),
                got: constraint.dim(),
            });
        }
        let k = constraint.n_rows();
        let mut v_cols = Vec::with_capacity(k);
        for row in constraint.rows() {
            let mut rhs = alloc::vec![0.0; factor.dim()];
            for &(i, c) in row {
                rhs[i] += c;
            }
            v_cols.push(factor.solve(&rhs)?);
        }
        let mut s = alloc::vec![alloc::vec![0.0; k]; k];
        for (a, row) in constraint.rows().iter().enumerate() {
            for b in 0..k {
                s[a][b] = row.iter().map(|&(i, c)| c * v_cols[b][i]).sum();
            }
        }
        let s_chol = DenseChol::new(&s).map_err(GmrfError::SingularConstraint)?;
        Ok(ConstraintCorrection { v_cols, s_chol })
    }

    pub fn n_rows(&self) -> usize {
        self.v_cols.len()
    }

    /// `log|A·Q⁻¹·Aᵀ|`
    pub fn log_det_s(&self) -> f64 {
        self.s_chol.log_det()
    }

    /// In-place conditioning `x ← x - V·S⁻¹·(A x)`.
    pub fn apply(&self, constraint: &LinearConstraint, x: &mut [f64]) {
        let residual = constraint.apply(x);
        let w = self.s_chol.solve(&residual);
        for (col, wi) in self.v_cols.iter().zip(&w) {
            for (xi, vi) in x.iter_mut().zip(col) {
                *xi -= wi * vi;
            }
        }
    }

    /// Variance reduction `(V·S⁻¹·Vᵀ)[i][i]` for marginal variances under the
    /// constraint.
    pub fn variance_reduction(&self, i: usize) -> f64 {
        let vi: Vec<f64> = self.v_cols.iter().map(|col| col[i]).collect();
        let w = self.s_chol.solve(&vi);
        vi.iter().zip(&w).map(|(a, b)| a * b).sum()
    }
}

/// Draw `x ~ N(0, Q⁻¹)` by back-substitution on standard normals; when a
/// constraint is given the draw is conditioned onto `A x = 0`.
pub fn sample<R: Rng>(
    factor: &CholeskyFactor,
    constraint: Option<&LinearConstraint>,
    rng: &mut R,
) -> Result<Vec<f64>, GmrfError> {
    let mut z = alloc::vec![0.0; factor.dim()];
    fill_standard_normal(rng, &mut z);
    let mut x = factor.solve_lower_transpose(&z)?;
    if let Some(c) = constraint {
        let correction = ConstraintCorrection::prepare(factor, c)?;
        correction.apply(c, &mut x);
    }
    Ok(x)
}

/// `Q⁻¹ b` — alias over [`CholeskyFactor::solve`] matching the module-level
/// naming of the other operations.
pub fn solve(factor: &CholeskyFactor, b: &[f64]) -> Result<Vec<f64>, GmrfError> {
    factor.solve(b)
}

/// Minimal dense Cholesky for the small constraint systems.
#[derive(Clone, Debug)]
struct DenseChol {
    n: usize,
    l: Vec<f64>, // row-major lower triangle, full n×n storage
}

impl DenseChol {
    /// Returns `Err(row)` when a pivot falls below the singularity threshold.
    fn new(a: &[Vec<f64>]) -> Result<Self, usize> {
        let n = a.len();
        let scale = (0..n).map(|i| a[i][i].abs()).fold(1.0f64, f64::max);
        let mut l = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut acc = a[i][j];
                for k in 0..j {
                    acc -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(acc > 1e-12 * scale) || !acc.is_finite() {
                        return Err(i);
                    }
                    l[i * n + i] = libm::sqrt(acc);
                } else {
                    l[i * n + j] = acc / l[j * n + j];
                }
            }
        }
        Ok(DenseChol { n, l })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[i * n + k] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self.l[k * n + i] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        y
    }

    fn log_det(&self) -> f64 {
        (0..self.n)
            .map(|i| 2.0 * libm::log(self.l[i * self.n + i]))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;
    use crate::precision::build_distance_precision;
    use crate::rng::stream;

    fn identity(n: usize) -> PrecisionMatrix {
        PrecisionMatrix::scaled_identity(n, 1.0)
    }

    #[test]
    fn factorize_identity_is_identity() {
        let f = factorize(&identity(3)).unwrap();
        assert_eq!(f.jitter_applied(), 0.0);
        for i in 0..3 {
            assert_eq!(f.diag()[i], 1.0);
            assert!(f.row(i).0.is_empty());
        }
    }

    #[test]
    fn factorize_intrinsic_fixture_reconstructs_jittered_input() {
        let net = parse_network(
            "node_id,x,y\na,,\nb,,\nc,,\n",
            "from_node,to_node,length_m\na,b,10\na,c,30\n",
        )
        .unwrap();
        let q = build_distance_precision(&net).unwrap();
        let f = factorize(&q).unwrap();
        let expected_jitter = 1e-8 * q.mean_diag();
        assert!((f.jitter_applied() - expected_jitter).abs() < 1e-20);
        let rec = f.reconstruct_dense();
        for i in 0..3 {
            for j in 0..3 {
                let want = q.get(i, j) + if i == j { expected_jitter } else { 0.0 };
                assert!(
                    (rec[i][j] - want).abs() < 1e-12,
                    "({i},{j}): {} vs {want}",
                    rec[i][j]
                );
            }
        }
    }

    #[test]
    fn factorize_indefinite_errors() {
        let q = PrecisionMatrix::from_triplets(
            2,
            [(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)],
            None,
            false,
        )
        .unwrap();
        assert!(matches!(
            factorize(&q).unwrap_err(),
            GmrfError::Indefinite { .. }
        ));
    }

    #[test]
    fn solve_identity_returns_rhs() {
        let f = factorize(&identity(4)).unwrap();
        let b = [1.0, -2.0, 3.5, 0.0];
        assert_eq!(solve(&f, &b).unwrap(), b.to_vec());
    }

    #[test]
    fn solve_diagonal() {
        let q =
            PrecisionMatrix::from_triplets(2, [(0, 0, 2.0), (1, 1, 4.0)], None, false).unwrap();
        let f = factorize(&q).unwrap();
        let x = solve(&f, &[2.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn solve_residual_on_random_spd() {
        // SPD built as a diagonally dominant tridiagonal matrix
        let n = 8;
        let mut triplets = Vec::new();
        for i in 0..n {
            triplets.push((i, i, 4.0 + i as f64 * 0.1));
            if i + 1 < n {
                triplets.push((i, i + 1, -1.0));
                triplets.push((i + 1, i, -1.0));
            }
        }
        let q = PrecisionMatrix::from_triplets(n, triplets, None, false).unwrap();
        let f = factorize(&q).unwrap();
        let mut rng = stream(3, "solve-test", 0);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let x = solve(&f, &b).unwrap();
        let qx = q.mul_vec(&x);
        let resid = qx
            .iter()
            .zip(&b)
            .map(|(a, c)| (a - c).abs())
            .fold(0.0f64, f64::max);
        assert!(resid < 1e-8, "residual {resid}");
    }

    #[test]
    fn solve_dimension_mismatch() {
        let f = factorize(&identity(3)).unwrap();
        assert!(matches!(
            solve(&f, &[1.0]).unwrap_err(),
            GmrfError::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn log_density_standard_bivariate_at_mean() {
        let f = factorize(&identity(2)).unwrap();
        let v = log_density(&[0.0, 0.0], &[0.0, 0.0], &f).unwrap();
        let expected = -libm::log(2.0 * core::f64::consts::PI);
        assert!((v - expected).abs() < 1e-14);
    }

    #[test]
    fn log_density_unit_offset() {
        let f = factorize(&identity(2)).unwrap();
        let v = log_density(&[1.0, 0.0], &[0.0, 0.0], &f).unwrap();
        let expected = -libm::log(2.0 * core::f64::consts::PI) - 0.5;
        assert!((v - expected).abs() < 1e-14);
    }

    #[test]
    fn log_density_dimension_mismatch() {
        let f = factorize(&identity(2)).unwrap();
        assert!(log_density(&[0.0], &[0.0, 0.0], &f).is_err());
    }

    #[test]
    fn sample_sum_to_zero_is_exact() {
        let f = factorize(&identity(2)).unwrap();
        let c = LinearConstraint::sum_to_zero(2, &[0, 1]).unwrap();
        let mut rng = stream(11, "constrained", 0);
        for _ in 0..100 {
            let x = sample(&f, Some(&c), &mut rng).unwrap();
            assert!((x[0] + x[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn sample_variance_quarter() {
        let q =
            PrecisionMatrix::from_triplets(2, [(0, 0, 4.0), (1, 1, 4.0)], None, false).unwrap();
        let f = factorize(&q).unwrap();
        let mut rng = stream(5, "variance", 0);
        let n = 100_000;
        let mut sums = [0.0f64; 2];
        let mut sq = [0.0f64; 2];
        for _ in 0..n {
            let x = sample(&f, None, &mut rng).unwrap();
            for d in 0..2 {
                sums[d] += x[d];
                sq[d] += x[d] * x[d];
            }
        }
        for d in 0..2 {
            let mean = sums[d] / n as f64;
            let var = sq[d] / n as f64 - mean * mean;
            assert!((var - 0.25).abs() < 0.01, "var[{d}] = {var}");
        }
    }

    #[test]
    fn sample_fixed_seed_repeats_bit_identically() {
        let f = factorize(&identity(5)).unwrap();
        let mut a = stream(7, "repeat", 0);
        let mut b = stream(7, "repeat", 0);
        let xa = sample(&f, None, &mut a).unwrap();
        let xb = sample(&f, None, &mut b).unwrap();
        assert_eq!(xa, xb);
    }

    #[test]
    fn duplicate_constraint_rows_are_singular() {
        let f = factorize(&identity(3)).unwrap();
        let c = LinearConstraint::new(
            3,
            alloc::vec![
                alloc::vec![(0, 1.0), (1, 1.0)],
                alloc::vec![(0, 1.0), (1, 1.0)],
            ],
        )
        .unwrap();
        let mut rng = stream(1, "singular", 0);
        assert!(matches!(
            sample(&f, Some(&c), &mut rng).unwrap_err(),
            GmrfError::SingularConstraint(_)
        ));
    }
}
