//! Dense complex linear algebra and Lie-algebra utilities.
//!
//! All numeric modules build on the types here. Rank decisions are made
//! through singular values with an explicit tolerance policy: borderline
//! ranks abort with [`NumLinError::RankAmbiguous`] instead of silently
//! choosing a side, so that downstream certificates stay reproducible.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::ops::{Deref, DerefMut};

pub type C64 = Complex64;

#[derive(Debug, Clone, thiserror::Error)]
pub enum NumLinError {
    #[error("rank ambiguous: singular value {value:e} within a factor of 10 of cutoff {cutoff:e}")]
    RankAmbiguous { value: f64, cutoff: f64 },
    #[error("matrix not diagonalizable within tolerance (eigenbasis condition {cond:e})")]
    NotDiagonalizable { cond: f64 },
    #[error("eigenvalue {re}{im:+}i within {dist:e} of the negative real axis; no principal logarithm")]
    BranchCut { re: f64, im: f64, dist: f64 },
    #[error("ambient dimensions differ: {left} vs {right}")]
    AmbientMismatch { left: usize, right: usize },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },
    #[error("columns not orthonormal: residual {residual:e} exceeds {bound:e}")]
    NotOrthonormal { residual: f64, bound: f64 },
    #[error("invalid tolerances: {0}")]
    BadTolerances(String),
    #[error("matrix is singular, cannot invert")]
    Singular,
}

/// Tolerance policy shared by every floating-point computation in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative singular-value cutoff for rank decisions.
    pub rank_rel: f64,
    /// Orthonormality residual bound for subspace bases.
    pub orth: f64,
    /// Minimum phi-separation required by set-disjointness certificates.
    pub cert_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank_rel: 1e-9,
            orth: 1e-10,
            cert_margin: 1e-3,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), NumLinError> {
        if !(self.rank_rel > 0.0 && self.orth > 0.0 && self.cert_margin > 0.0) {
            return Err(NumLinError::BadTolerances(
                "all tolerances must be strictly positive".into(),
            ));
        }
        if self.rank_rel >= 1.0 {
            return Err(NumLinError::BadTolerances("rank_rel must be < 1".into()));
        }
        Ok(())
    }
}

/// Dense complex matrix in double precision.
///
/// Thin wrapper around a column-major `DMatrix<Complex64>`; serialization
/// uses the row-major `{rows, cols, re[], im[]}` wire format.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(pub DMatrix<C64>);

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        ComplexMatrix(DMatrix::identity(n, n))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        ComplexMatrix(DMatrix::from_fn(rows, cols, f))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        ComplexMatrix(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn rows_count(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols_count(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.0.nrows() == self.0.ncols()
    }

    pub fn check_finite(&self) -> Result<(), NumLinError> {
        for j in 0..self.0.ncols() {
            for i in 0..self.0.nrows() {
                let v = self.0[(i, j)];
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(NumLinError::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.0
            .clone()
            .singular_values()
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }

    pub fn adjoint_m(&self) -> ComplexMatrix {
        ComplexMatrix(self.0.adjoint())
    }

    pub fn transpose_m(&self) -> ComplexMatrix {
        ComplexMatrix(self.0.transpose())
    }

    /// Relative distance to the nearest scalar multiple of the identity.
    pub fn distance_from_scalar(&self) -> f64 {
        let n = self.0.nrows();
        let c = self.0.trace() / C64::new(n as f64, 0.0);
        let mut dev = self.0.clone();
        for i in 0..n {
            dev[(i, i)] -= c;
        }
        dev.norm() / self.0.norm().max(f64::MIN_POSITIVE)
    }

    pub fn try_inverse_m(&self) -> Result<ComplexMatrix, NumLinError> {
        self.0
            .clone()
            .try_inverse()
            .map(ComplexMatrix)
            .ok_or(NumLinError::Singular)
    }
}

impl Deref for ComplexMatrix {
    type Target = DMatrix<C64>;
    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

impl DerefMut for ComplexMatrix {
    fn deref_mut(&mut self) -> &mut Self::Target {
        &mut self.0
    }
}

impl From<DMatrix<C64>> for ComplexMatrix {
    fn from(m: DMatrix<C64>) -> Self {
        ComplexMatrix(m)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixWire {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let (r, c) = (self.0.nrows(), self.0.ncols());
        let mut re = Vec::with_capacity(r * c);
        let mut im = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                re.push(self.0[(i, j)].re);
                im.push(self.0[(i, j)].im);
            }
        }
        MatrixWire {
            rows: r,
            cols: c,
            re,
            im,
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let w = MatrixWire::deserialize(de)?;
        if w.rows == 0 || w.cols == 0 {
            return Err(D::Error::custom("matrix dimensions must be positive"));
        }
        if w.re.len() != w.rows * w.cols || w.im.len() != w.rows * w.cols {
            return Err(D::Error::custom("entry count does not match dimensions"));
        }
        let m = DMatrix::from_fn(w.rows, w.cols, |i, j| {
            C64::new(w.re[i * w.cols + j], w.im[i * w.cols + j])
        });
        let m = ComplexMatrix(m);
        m.check_finite()
            .map_err(|e| D::Error::custom(e.to_string()))?;
        Ok(m)
    }
}

/// Number of singular values above `rank_rel` times the largest one.
///
/// Returns 0 for the zero matrix. Errors with `RankAmbiguous` when a
/// singular value sits within a factor of 10 of the cutoff on either side.
pub fn rank_with_tol(m: &ComplexMatrix, tol: &Tolerances) -> Result<usize, NumLinError> {
    m.check_finite()?;
    let sv = m.0.clone().singular_values();
    rank_from_singular_values(sv.as_slice(), tol)
}

pub(crate) fn rank_from_singular_values(sv: &[f64], tol: &Tolerances) -> Result<usize, NumLinError> {
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(0);
    }
    let cutoff = tol.rank_rel * smax;
    for &s in sv {
        if s > cutoff / 10.0 && s < cutoff * 10.0 {
            return Err(NumLinError::RankAmbiguous { value: s, cutoff });
        }
    }
    Ok(sv.iter().filter(|&&s| s > cutoff).count())
}

/// A linear subspace given by an orthonormal column basis in `C^ambient_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceBasis {
    ambient_dim: usize,
    basis: ComplexMatrix,
}

impl SubspaceBasis {
    /// Wraps columns that are already orthonormal to within `tol.orth`.
    pub fn new(basis: ComplexMatrix, tol: &Tolerances) -> Result<Self, NumLinError> {
        basis.check_finite()?;
        let k = basis.cols_count();
        let ambient = basis.rows_count();
        if k > ambient {
            return Err(NumLinError::AmbientMismatch {
                left: ambient,
                right: k,
            });
        }
        let gram = basis.0.adjoint() * &basis.0;
        let residual = (&gram - DMatrix::<C64>::identity(k, k)).norm();
        if residual > tol.orth {
            return Err(NumLinError::NotOrthonormal {
                residual,
                bound: tol.orth,
            });
        }
        Ok(SubspaceBasis {
            ambient_dim: ambient,
            basis,
        })
    }

    /// Orthonormal basis of the column span of an arbitrary matrix.
    pub fn from_span(span: &ComplexMatrix, tol: &Tolerances) -> Result<Self, NumLinError> {
        span.check_finite()?;
        let svd = span.0.clone().svd(true, false);
        let rank = rank_from_singular_values(svd.singular_values.as_slice(), tol)?;
        let u = svd.u.expect("svd requested u");
        let basis = ComplexMatrix(u.columns(0, rank).into_owned());
        SubspaceBasis::new(basis, tol)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.cols_count()
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }
}

/// Dimension of the intersection of two subspaces of the same ambient space,
/// computed as `k_A + k_B - rank([A | B])`.
pub fn intersect_dim(
    a: &SubspaceBasis,
    b: &SubspaceBasis,
    tol: &Tolerances,
) -> Result<usize, NumLinError> {
    if a.ambient_dim != b.ambient_dim {
        return Err(NumLinError::AmbientMismatch {
            left: a.ambient_dim,
            right: b.ambient_dim,
        });
    }
    let (ka, kb) = (a.dim(), b.dim());
    let mut stacked = DMatrix::<C64>::zeros(a.ambient_dim, ka + kb);
    stacked.columns_mut(0, ka).copy_from(&a.basis.0);
    stacked.columns_mut(ka, kb).copy_from(&b.basis.0);
    let r = rank_with_tol(&ComplexMatrix(stacked), tol)?;
    Ok(ka + kb - r)
}

fn flatten(m: &DMatrix<C64>) -> Vec<C64> {
    let (r, c) = (m.nrows(), m.ncols());
    let mut v = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            v.push(m[(i, j)]);
        }
    }
    v
}

fn unflatten(v: &[C64], n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |i, j| v[i * n + j])
}

fn bracket(x: &DMatrix<C64>, y: &DMatrix<C64>) -> DMatrix<C64> {
    x * y - y * x
}

/// Orthonormal basis (trace pairing) of the smallest bracket-closed subspace
/// containing the generators.
///
/// Repeated `[X,Y]`-adjunction followed by rank truncation; the dimension is
/// non-decreasing and bounded by n^2, so the loop terminates.
pub fn lie_closure(
    generators: &[ComplexMatrix],
    tol: &Tolerances,
) -> Result<Vec<ComplexMatrix>, NumLinError> {
    if generators.is_empty() {
        return Ok(Vec::new());
    }
    let n = generators[0].rows_count();
    for g in generators {
        if !g.is_square() {
            return Err(NumLinError::NotSquare {
                rows: g.rows_count(),
                cols: g.cols_count(),
            });
        }
        if g.rows_count() != n {
            return Err(NumLinError::AmbientMismatch {
                left: n,
                right: g.rows_count(),
            });
        }
        g.check_finite()?;
    }

    let mut basis = span_rows(
        &generators.iter().map(|g| flatten(&g.0)).collect::<Vec<_>>(),
        n * n,
        tol,
    )?;
    let max_iter = n * n + 1;
    for _ in 0..max_iter {
        let dim = basis.len();
        if dim == 0 {
            return Ok(Vec::new());
        }
        let mats: Vec<DMatrix<C64>> = basis.iter().map(|v| unflatten(v, n)).collect();
        let mut rows = basis.clone();
        for i in 0..dim {
            for j in (i + 1)..dim {
                rows.push(flatten(&bracket(&mats[i], &mats[j])));
            }
        }
        let new_basis = span_rows(&rows, n * n, tol)?;
        if new_basis.len() == dim {
            return Ok(new_basis.iter().map(|v| ComplexMatrix(unflatten(v, n))).collect());
        }
        basis = new_basis;
    }
    // dimension strictly increases every round, so this is unreachable
    Ok(basis.iter().map(|v| ComplexMatrix(unflatten(v, n))).collect())
}

/// Orthonormal row span via SVD; rows are vectors of length `len`.
fn span_rows(rows: &[Vec<C64>], len: usize, tol: &Tolerances) -> Result<Vec<Vec<C64>>, NumLinError> {
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    let m = DMatrix::from_fn(rows.len(), len, |i, j| rows[i][j]);
    let svd = m.svd(false, true);
    let rank = rank_from_singular_values(svd.singular_values.as_slice(), tol)?;
    let vt = svd.v_t.expect("svd requested v_t");
    Ok((0..rank).map(|i| vt.row(i).iter().cloned().collect()).collect())
}

/// Matrix exponential by Pade(13) with scaling and squaring.
pub fn matrix_exp(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.rows_count();
    assert!(m.is_square(), "matrix_exp needs a square matrix");
    let a = &m.0;
    let norm = a
        .column_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    const THETA13: f64 = 5.371920351148152;
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let a = a.map(|v| v / C64::new(2f64.powi(squarings as i32), 0.0));

    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let id = DMatrix::<C64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u = &a
        * (&a6 * (a6.map(|v| v * B[13]) + a4.map(|v| v * B[11]) + a2.map(|v| v * B[9]))
            + a6.map(|v| v * B[7])
            + a4.map(|v| v * B[5])
            + a2.map(|v| v * B[3])
            + id.map(|v| v * B[1]));
    let v = &a6 * (a6.map(|x| x * B[12]) + a4.map(|x| x * B[10]) + a2.map(|x| x * B[8]))
        + a6.map(|x| x * B[6])
        + a4.map(|x| x * B[4])
        + a2.map(|x| x * B[2])
        + id.map(|x| x * B[0]);
    let denom = &v - &u;
    let numer = &v + &u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .expect("Pade denominator is invertible for scaled input");
    for _ in 0..squarings {
        r = &r * &r;
    }
    ComplexMatrix(r)
}

/// Eigenvalues of a square complex matrix (Schur diagonal).
pub fn eigenvalues(m: &ComplexMatrix) -> Vec<C64> {
    let n = m.rows_count();
    let t = m.0.clone().schur().unpack().1;
    (0..n).map(|i| t[(i, i)]).collect()
}

/// Eigendecomposition g = V diag(lambda) V^-1 for a diagonalizable matrix.
///
/// Eigenvalues are clustered, each eigenspace comes from an SVD null space of
/// `g - lambda I`, and the assembled eigenbasis is rejected when its condition
/// number exceeds `1/rank_rel`.
pub fn eigen_decomposition(
    g: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<(ComplexMatrix, Vec<C64>), NumLinError> {
    if !g.is_square() {
        return Err(NumLinError::NotSquare {
            rows: g.rows_count(),
            cols: g.cols_count(),
        });
    }
    g.check_finite()?;
    let n = g.rows_count();
    let eigs = eigenvalues(g);
    let scale = eigs.iter().map(|l| l.norm()).fold(0.0, f64::max).max(1.0);
    let cluster_tol = 1e-8 * scale;

    // greedy clustering of nearby eigenvalues
    let mut clusters: Vec<(C64, usize)> = Vec::new();
    for &l in &eigs {
        match clusters
            .iter_mut()
            .find(|(rep, _)| (*rep - l).norm() <= cluster_tol)
        {
            Some((rep, count)) => {
                *rep = (*rep * C64::new(*count as f64, 0.0) + l) / C64::new((*count + 1) as f64, 0.0);
                *count += 1;
            }
            None => clusters.push((l, 1)),
        }
    }

    let mut v = DMatrix::<C64>::zeros(n, n);
    let mut lambdas = Vec::with_capacity(n);
    let mut col = 0;
    for &(rep, mult) in &clusters {
        let mut shifted = g.0.clone();
        for i in 0..n {
            shifted[(i, i)] -= rep;
        }
        let svd = shifted.svd(false, true);
        let sv = svd.singular_values;
        let vt = svd.v_t.expect("svd requested v_t");
        let null_tol = (g.op_norm().max(1.0)) * 1e-10 + 10.0 * cluster_tol;
        let null_dim = sv.iter().filter(|&&s| s <= null_tol).count();
        if null_dim != mult {
            return Err(NumLinError::NotDiagonalizable {
                cond: f64::INFINITY,
            });
        }
        // null vectors are the last rows of V^T, conjugated
        for k in 0..mult {
            let row = vt.row(n - 1 - k);
            for i in 0..n {
                v[(i, col)] = row[i].conj();
            }
            lambdas.push(rep);
            col += 1;
        }
    }
    debug_assert_eq!(col, n);

    let sv = v.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond > 1.0 / tol.rank_rel {
        return Err(NumLinError::NotDiagonalizable { cond });
    }
    Ok((ComplexMatrix(v), lambdas))
}

/// Principal matrix logarithm of a diagonalizable matrix.
///
/// Requires every eigenvalue to stay clear of the closed negative real axis.
pub fn matrix_log_semisimple(
    g: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<ComplexMatrix, NumLinError> {
    let (v, lambdas) = eigen_decomposition(g, tol)?;
    for l in &lambdas {
        let d = dist_to_negative_axis(*l);
        if d < 1e-6 {
            return Err(NumLinError::BranchCut {
                re: l.re,
                im: l.im,
                dist: d,
            });
        }
    }
    let vinv = v.try_inverse_m()?;
    let n = g.rows_count();
    let logd = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            lambdas[i].ln()
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(ComplexMatrix(&v.0 * logd * &vinv.0))
}

/// Distance from a point to the closed negative real axis `{x <= 0}`.
pub fn dist_to_negative_axis(l: C64) -> f64 {
    if l.re <= 0.0 {
        l.im.abs()
    } else {
        l.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rank_identity_3x3() {
        let tol = Tolerances::default();
        assert_eq!(rank_with_tol(&ComplexMatrix::identity(3), &tol).unwrap(), 3);
    }

    #[test]
    fn rank_zero_2x4() {
        let tol = Tolerances::default();
        assert_eq!(rank_with_tol(&ComplexMatrix::zeros(2, 4), &tol).unwrap(), 0);
    }

    #[test]
    fn rank_tiny_singular_value() {
        let tol = Tolerances::default();
        let m = ComplexMatrix::from_real_diag(&[1.0, 1e-15]);
        assert_eq!(rank_with_tol(&m, &tol).unwrap(), 1);
    }

    #[test]
    fn rank_ambiguous_near_cutoff() {
        let tol = Tolerances::default();
        let m = ComplexMatrix::from_real_diag(&[1.0, 1e-9]);
        assert!(matches!(
            rank_with_tol(&m, &tol),
            Err(NumLinError::RankAmbiguous { .. })
        ));
    }

    fn span_of(cols: &[Vec<C64>]) -> SubspaceBasis {
        let tol = Tolerances::default();
        let n = cols[0].len();
        let m = ComplexMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        SubspaceBasis::from_span(&m, &tol).unwrap()
    }

    fn e(i: usize, n: usize) -> Vec<C64> {
        (0..n)
            .map(|k| if k == i { c(1.0, 0.0) } else { c(0.0, 0.0) })
            .collect()
    }

    #[test]
    fn intersect_disjoint_planes() {
        let tol = Tolerances::default();
        let a = span_of(&[e(0, 4), e(1, 4)]);
        let b = span_of(&[e(2, 4), e(3, 4)]);
        assert_eq!(intersect_dim(&a, &b, &tol).unwrap(), 0);
    }

    #[test]
    fn intersect_shared_line() {
        let tol = Tolerances::default();
        let a = span_of(&[e(0, 4), e(1, 4)]);
        let b = span_of(&[e(1, 4), e(2, 4)]);
        assert_eq!(intersect_dim(&a, &b, &tol).unwrap(), 1);
    }

    #[test]
    fn intersect_skew_lines() {
        let tol = Tolerances::default();
        let a = span_of(&[e(0, 2)]);
        let b = span_of(&[vec![c(1.0, 0.0), c(1.0, 0.0)]]);
        assert_eq!(intersect_dim(&a, &b, &tol).unwrap(), 0);
    }

    #[test]
    fn closure_of_sl2_pair() {
        let tol = Tolerances::default();
        let e12 = ComplexMatrix::from_fn(2, 2, |i, j| {
            if (i, j) == (0, 1) {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let e21 = e12.transpose_m();
        let basis = lie_closure(&[e12, e21], &tol).unwrap();
        assert_eq!(basis.len(), 3);
    }

    #[test]
    fn closure_of_single_diagonal() {
        let tol = Tolerances::default();
        let d = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
        assert_eq!(lie_closure(&[d], &tol).unwrap().len(), 1);
    }

    #[test]
    fn closure_of_two_conjugate_involutions_in_sl4() {
        // Two conjugates of diag(-1,-1,1,1) never generate all of sl4: the
        // eigenprojector pair (P, Q) leaves the eigenspaces of (P-Q)^2
        // invariant, splitting C^4 into two 2-dim blocks, so the closure is
        // sl2 + sl2 of dimension 6 for every invertible f.
        let tol = Tolerances::default();
        let xi0 = ComplexMatrix::from_real_diag(&[-1.0, -1.0, 1.0, 1.0]);
        let f = ComplexMatrix::from_fn(4, 4, |i, j| {
            c(
                ((3 * i + 5 * j + 1) as f64 * 0.377).sin(),
                ((2 * i + 7 * j + 3) as f64 * 0.593).cos() * 0.4,
            )
        });
        let finv = f.try_inverse_m().unwrap();
        let ad = ComplexMatrix(&f.0 * &xi0.0 * &finv.0);
        let basis = lie_closure(&[xi0.clone(), ad.clone()], &tol).unwrap();
        assert_eq!(basis.len(), 6);

        // a third generic conjugate breaks the common splitting and fills sl4
        let h = ComplexMatrix::from_fn(4, 4, |i, j| {
            c(
                ((5 * i + 2 * j + 2) as f64 * 0.711).sin(),
                ((i + 3 * j + 1) as f64 * 0.413).cos() * 0.7,
            )
        });
        let hinv = h.try_inverse_m().unwrap();
        let ad2 = ComplexMatrix(&h.0 * &xi0.0 * &hinv.0);
        let basis3 = lie_closure(&[xi0, ad, ad2], &tol).unwrap();
        assert_eq!(basis3.len(), 15);
    }

    #[test]
    fn closure_brackets_stay_inside() {
        let tol = Tolerances::default();
        let e12 = ComplexMatrix::from_fn(2, 2, |i, j| {
            if (i, j) == (0, 1) {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let e21 = e12.transpose_m();
        let basis = lie_closure(&[e12, e21], &tol).unwrap();
        for x in &basis {
            for y in &basis {
                let br = bracket(&x.0, &y.0);
                // project onto the span and measure the residual
                let mut res = flatten(&br);
                for b in &basis {
                    let bf = flatten(&b.0);
                    let coeff: C64 = bf.iter().zip(&res).map(|(a, r)| a.conj() * r).sum();
                    for (r, a) in res.iter_mut().zip(&bf) {
                        *r -= coeff * a;
                    }
                }
                let norm: f64 = res.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                assert!(norm < 1e-7, "bracket residual {norm}");
            }
        }
    }

    #[test]
    fn log_of_identity_is_zero() {
        let tol = Tolerances::default();
        let l = matrix_log_semisimple(&ComplexMatrix::identity(3), &tol).unwrap();
        assert!(l.norm() < 1e-12);
    }

    #[test]
    fn log_of_diagonal() {
        let tol = Tolerances::default();
        let g = ComplexMatrix::from_real_diag(&[2.0, 0.5]);
        let l = matrix_log_semisimple(&g, &tol).unwrap();
        assert!((l.0[(0, 0)].re - 2f64.ln()).abs() < 1e-12);
        assert!((l.0[(1, 1)].re + 2f64.ln()).abs() < 1e-12);
        assert!(l.0[(0, 1)].norm() < 1e-12 && l.0[(1, 0)].norm() < 1e-12);
    }

    #[test]
    fn log_of_jordan_block_fails() {
        let tol = Tolerances::default();
        let g = ComplexMatrix::from_fn(2, 2, |i, j| {
            if i == j || (i, j) == (0, 1) {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        assert!(matches!(
            matrix_log_semisimple(&g, &tol),
            Err(NumLinError::NotDiagonalizable { .. })
        ));
    }

    #[test]
    fn log_branch_cut_detected() {
        let tol = Tolerances::default();
        let g = ComplexMatrix::from_real_diag(&[-1.0, 2.0]);
        assert!(matches!(
            matrix_log_semisimple(&g, &tol),
            Err(NumLinError::BranchCut { .. })
        ));
    }

    #[test]
    fn exp_log_roundtrip_spot() {
        let tol = Tolerances::default();
        let g = ComplexMatrix::from_fn(3, 3, |i, j| {
            c(
                if i == j { 2.0 + i as f64 } else { 0.1 },
                0.05 * (i as f64 - j as f64),
            )
        });
        let l = matrix_log_semisimple(&g, &tol).unwrap();
        let back = matrix_exp(&l);
        assert!((&back.0 - &g.0).norm() < 1e-10);
    }

    #[test]
    fn matrix_serde_roundtrip() {
        let m = ComplexMatrix::from_fn(2, 3, |i, j| c(i as f64, j as f64));
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"rows\":2") && s.contains("\"cols\":3"));
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
    }
}
