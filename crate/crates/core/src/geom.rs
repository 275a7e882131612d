//! Concrete matrix models of the four target manifolds with their
//! phi-functions, C*-actions, and (for the isotropic Grassmannian) the
//! twistor fibration.
//!
//! Vector models (projective space, quadrics) work in the coordinates in
//! which the defining form has its standard block shape and the coordinate
//! split `[z : w]` makes `phi = |w|^2 / (|z|^2 + |w|^2)`. The isotropic
//! Grassmannian works internally in identity-form coordinates, where
//! isotropy of a plane V means `V` is Hermitian-orthogonal to its conjugate
//! and the twistor map reduces to a projector formula.

use crate::numlin::{
    intersect_dim, matrix_exp, rank_with_tol, ComplexMatrix, NumLinError, SubspaceBasis,
    Tolerances, C64,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, thiserror::Error)]
pub enum GeomError {
    #[error("point does not satisfy the model equations (residual {residual:e})")]
    InvalidPoint { residual: f64 },
    #[error("matrix does not preserve the model form (residual {residual:e})")]
    FormViolation { residual: f64 },
    #[error("twistor image is not real (residual {residual:e}); plane is not isotropic or in the wrong component")]
    RealityViolated { residual: f64 },
    #[error("stereographic chart at the anchor is ill-conditioned (condition {cond:e})")]
    AnchorSingularity { cond: f64 },
    #[error("operation needs a {expected} point, got a {got} point")]
    WrongPointKind {
        expected: &'static str,
        got: &'static str,
    },
    #[error("operation is not defined on the {0} model")]
    WrongModel(&'static str),
    #[error("model parameter out of range: {0}")]
    BadParameter(String),
    #[error(transparent)]
    NumLin(#[from] NumLinError),
}

/// Which homogeneous rational manifold is modeled; `n` follows the ambient
/// conventions below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "n")]
pub enum ModelVariant {
    /// P_{2n+1}, ambient C^{2n+2}, n >= 0.
    #[serde(rename = "P")]
    ProjOdd(usize),
    /// Q_{2n-2} in P_{2n-1}, ambient C^{2n}, n >= 2.
    #[serde(rename = "Qeven")]
    QuadricEven(usize),
    /// Q_{2n-1} in P_{2n}, ambient C^{2n+1}, n >= 1.
    #[serde(rename = "Qodd")]
    QuadricOdd(usize),
    /// Isotropic (n+1)-planes in C^{2n+2} (one component), n >= 1.
    #[serde(rename = "IGr")]
    IsotropicGrass(usize),
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelVariant::ProjOdd(n) => write!(f, "P:{n}"),
            ModelVariant::QuadricEven(n) => write!(f, "Qeven:{n}"),
            ModelVariant::QuadricOdd(n) => write!(f, "Qodd:{n}"),
            ModelVariant::IsotropicGrass(n) => write!(f, "IGr:{n}"),
        }
    }
}

impl FromStr for ModelVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (name, n) = s
            .split_once(':')
            .ok_or_else(|| format!("expected NAME:N, got {s:?}"))?;
        let n: usize = n.parse().map_err(|_| format!("bad parameter in {s:?}"))?;
        match name {
            "P" => Ok(ModelVariant::ProjOdd(n)),
            "Qeven" => Ok(ModelVariant::QuadricEven(n)),
            "Qodd" => Ok(ModelVariant::QuadricOdd(n)),
            "IGr" => Ok(ModelVariant::IsotropicGrass(n)),
            _ => Err(format!("unknown model {name:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointKind {
    HomogeneousVector,
    IsotropicSubspace,
}

/// A concrete matrix model of one of the four manifolds.
#[derive(Debug, Clone)]
pub struct FlagModel {
    pub variant: ModelVariant,
    pub ambient_dim: usize,
    /// Defining bilinear form in the standard block coordinates (absent for P_{2n+1}).
    pub form_matrix: Option<ComplexMatrix>,
    pub complex_dimension: usize,
    pub point_kind: PointKind,
    /// Basis change from the block coordinates to identity-form coordinates
    /// (isotropic Grassmannian only): `x_id = T x_block` with `T^t T = S`.
    to_identity: Option<ComplexMatrix>,
}

impl Serialize for FlagModel {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        self.variant.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for FlagModel {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let v = ModelVariant::deserialize(de)?;
        make_model(v).map_err(serde::de::Error::custom)
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn antidiag_pairing(n: usize) -> DMatrix<C64> {
    // [[0, I_n], [I_n, 0]]
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        if i + n == j || j + n == i {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// Builds the model with its exact form matrix and, for the isotropic
/// Grassmannian, the internal identity-coordinate basis change.
pub fn make_model(variant: ModelVariant) -> Result<FlagModel, GeomError> {
    match variant {
        ModelVariant::ProjOdd(n) => Ok(FlagModel {
            variant,
            ambient_dim: 2 * n + 2,
            form_matrix: None,
            complex_dimension: 2 * n + 1,
            point_kind: PointKind::HomogeneousVector,
            to_identity: None,
        }),
        ModelVariant::QuadricEven(n) => {
            if n < 2 {
                return Err(GeomError::BadParameter(format!(
                    "QuadricEven needs n >= 2, got {n}"
                )));
            }
            Ok(FlagModel {
                variant,
                ambient_dim: 2 * n,
                form_matrix: Some(ComplexMatrix(antidiag_pairing(n))),
                complex_dimension: 2 * n - 2,
                point_kind: PointKind::HomogeneousVector,
                to_identity: None,
            })
        }
        ModelVariant::QuadricOdd(n) => {
            if n < 1 {
                return Err(GeomError::BadParameter(format!(
                    "QuadricOdd needs n >= 1, got {n}"
                )));
            }
            let m = 2 * n + 1;
            let mut s = DMatrix::<C64>::zeros(m, m);
            s[(0, 0)] = c(1.0, 0.0);
            for k in 0..n {
                s[(1 + k, 1 + n + k)] = c(1.0, 0.0);
                s[(1 + n + k, 1 + k)] = c(1.0, 0.0);
            }
            Ok(FlagModel {
                variant,
                ambient_dim: m,
                form_matrix: Some(ComplexMatrix(s)),
                complex_dimension: 2 * n - 1,
                point_kind: PointKind::HomogeneousVector,
                to_identity: None,
            })
        }
        ModelVariant::IsotropicGrass(n) => {
            if n < 1 {
                return Err(GeomError::BadParameter(format!(
                    "IsotropicGrass needs n >= 1, got {n}"
                )));
            }
            let m = 2 * n + 2;
            let mut s = DMatrix::<C64>::zeros(m, m);
            s[(0, 0)] = c(1.0, 0.0);
            s[(1, 1)] = c(1.0, 0.0);
            for k in 0..n {
                s[(2 + k, 2 + n + k)] = c(1.0, 0.0);
                s[(2 + n + k, 2 + k)] = c(1.0, 0.0);
            }
            // identity coordinates (u1, u2, a_1, b_1, ..., a_n, b_n)
            let inv_sqrt2 = 1.0 / 2f64.sqrt();
            let mut t = DMatrix::<C64>::zeros(m, m);
            t[(0, 0)] = c(1.0, 0.0);
            t[(1, 1)] = c(1.0, 0.0);
            for j in 0..n {
                let (zj, wj) = (2 + j, 2 + n + j);
                t[(2 + 2 * j, zj)] = c(inv_sqrt2, 0.0);
                t[(2 + 2 * j, wj)] = c(inv_sqrt2, 0.0);
                t[(3 + 2 * j, zj)] = c(0.0, inv_sqrt2);
                t[(3 + 2 * j, wj)] = c(0.0, -inv_sqrt2);
            }
            Ok(FlagModel {
                variant,
                ambient_dim: m,
                form_matrix: Some(ComplexMatrix(s)),
                complex_dimension: n * (n + 1) / 2,
                point_kind: PointKind::IsotropicSubspace,
                to_identity: Some(ComplexMatrix(t)),
            })
        }
    }
}

impl FlagModel {
    pub fn n(&self) -> usize {
        match self.variant {
            ModelVariant::ProjOdd(n)
            | ModelVariant::QuadricEven(n)
            | ModelVariant::QuadricOdd(n)
            | ModelVariant::IsotropicGrass(n) => n,
        }
    }

    /// Bilinear form matrix in the internal coordinates: the block form for
    /// vector models, the identity for the isotropic Grassmannian.
    pub fn internal_form(&self) -> Option<DMatrix<C64>> {
        match self.variant {
            ModelVariant::ProjOdd(_) => None,
            ModelVariant::QuadricEven(_) | ModelVariant::QuadricOdd(_) => {
                self.form_matrix.as_ref().map(|s| s.0.clone())
            }
            ModelVariant::IsotropicGrass(_) => {
                Some(DMatrix::identity(self.ambient_dim, self.ambient_dim))
            }
        }
    }

    /// Index ranges of the `z` and `w` coordinate blocks (vector models).
    fn zw_split(&self) -> Option<(std::ops::Range<usize>, std::ops::Range<usize>)> {
        match self.variant {
            ModelVariant::ProjOdd(n) => Some((0..n + 1, n + 1..2 * n + 2)),
            ModelVariant::QuadricEven(n) => Some((0..n, n..2 * n)),
            ModelVariant::QuadricOdd(n) => Some((1..n + 1, n + 1..2 * n + 1)),
            ModelVariant::IsotropicGrass(_) => None,
        }
    }

    pub fn basis_change_to_identity(&self) -> Option<&ComplexMatrix> {
        self.to_identity.as_ref()
    }

    /// Residual of the defining equations at a point (0 for valid points).
    pub fn membership_residual(&self, x: &ModelPoint) -> f64 {
        match (self.variant, x) {
            (ModelVariant::ProjOdd(_), ModelPoint::Vector(v)) => (v.0.norm() - 1.0).abs(),
            (
                ModelVariant::QuadricEven(_) | ModelVariant::QuadricOdd(_),
                ModelPoint::Vector(v),
            ) => {
                let s = self.form_matrix.as_ref().unwrap();
                let q: C64 = (v.0.transpose() * &s.0 * &v.0.column(0).into_owned())[(0, 0)];
                q.norm() + (v.0.norm() - 1.0).abs()
            }
            (ModelVariant::IsotropicGrass(_), ModelPoint::Subspace(b)) => {
                let m = b.basis();
                let iso = (m.0.transpose() * &m.0).norm();
                let k = b.dim();
                let orth = (m.0.adjoint() * &m.0 - DMatrix::<C64>::identity(k, k)).norm();
                iso + orth
            }
            _ => f64::INFINITY,
        }
    }
}

/// A point of the model: a unit homogeneous coordinate vector, or an
/// isotropic subspace in identity-form coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelPoint {
    /// Column vector, unit norm, first significant coordinate real positive.
    Vector(ComplexMatrix),
    Subspace(SubspaceBasis),
}

impl ModelPoint {
    fn kind_name(&self) -> &'static str {
        match self {
            ModelPoint::Vector(_) => "homogeneous-vector",
            ModelPoint::Subspace(_) => "isotropic-subspace",
        }
    }

    pub fn as_vector(&self) -> Result<&ComplexMatrix, GeomError> {
        match self {
            ModelPoint::Vector(v) => Ok(v),
            other => Err(GeomError::WrongPointKind {
                expected: "homogeneous-vector",
                got: other.kind_name(),
            }),
        }
    }

    pub fn as_subspace(&self) -> Result<&SubspaceBasis, GeomError> {
        match self {
            ModelPoint::Subspace(b) => Ok(b),
            other => Err(GeomError::WrongPointKind {
                expected: "isotropic-subspace",
                got: other.kind_name(),
            }),
        }
    }

    /// Validates the model membership residual against 1e-10 and, for the
    /// isotropic Grassmannian, the connected-component constraint.
    pub fn validate(&self, model: &FlagModel, tol: &Tolerances) -> Result<(), GeomError> {
        let residual = model.membership_residual(self);
        if residual > 1e-10 {
            return Err(GeomError::InvalidPoint { residual });
        }
        if let (ModelVariant::IsotropicGrass(_), ModelPoint::Subspace(b)) = (model.variant, self) {
            let reference = reference_subspace(model, tol)?;
            if component_parity(b, &reference, tol)? != Parity::Same {
                return Err(GeomError::InvalidPoint { residual: 1.0 });
            }
        }
        Ok(())
    }
}

/// Normalizes a homogeneous vector to the canonical unit representative:
/// unit norm, first coordinate of significant modulus made real positive.
pub fn canonical_vector(v: DVector<C64>) -> ModelPoint {
    let norm = v.norm();
    assert!(norm > 0.0, "cannot canonicalize the zero vector");
    let mut v = v / c(norm, 0.0);
    let i = v
        .iter()
        .position(|x| x.norm() > 1e-9)
        .expect("unit vector has a significant coordinate");
    let phase = v[i] / c(v[i].norm(), 0.0);
    v *= phase.conj();
    let m = DMatrix::from_fn(v.len(), 1, |r, _| v[r]);
    ModelPoint::Vector(ComplexMatrix(m))
}

/// A form-preserving automorphism representative, normalized to unit
/// determinant magnitude. Isotropic-Grassmannian automorphisms are stored in
/// the identity-form coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Automorphism {
    pub matrix: ComplexMatrix,
}

impl Automorphism {
    pub fn new(model: &FlagModel, matrix: ComplexMatrix) -> Result<Self, GeomError> {
        let m = model.ambient_dim;
        if matrix.rows_count() != m || matrix.cols_count() != m {
            return Err(GeomError::BadParameter(format!(
                "automorphism must be {m}x{m}"
            )));
        }
        matrix.check_finite()?;
        let det = matrix.0.clone().lu().determinant();
        if det.norm() < 1e-300 {
            return Err(GeomError::NumLin(NumLinError::Singular));
        }
        let scale = det.norm().powf(-1.0 / m as f64);
        let matrix = ComplexMatrix(matrix.0.map(|x| x * scale));
        if let Some(s) = model.internal_form() {
            let residual = (matrix.0.transpose() * &s * &matrix.0 - &s).norm() / s.norm();
            if residual > 1e-9 {
                return Err(GeomError::FormViolation { residual });
            }
        }
        Ok(Automorphism { matrix })
    }

    pub fn identity(model: &FlagModel) -> Self {
        Automorphism {
            matrix: ComplexMatrix::identity(model.ambient_dim),
        }
    }

    /// Inverse through the form when available (S g^t S), LU otherwise.
    pub fn inverse(&self, model: &FlagModel) -> Result<Automorphism, GeomError> {
        let inv = match model.internal_form() {
            Some(s) => ComplexMatrix(&s * self.matrix.0.transpose() * &s),
            None => self.matrix.try_inverse_m()?,
        };
        Ok(Automorphism { matrix: inv })
    }

    pub fn compose(&self, other: &Automorphism) -> Automorphism {
        Automorphism {
            matrix: ComplexMatrix(&self.matrix.0 * &other.matrix.0),
        }
    }

    /// Applies the automorphism to a model point, restoring the canonical
    /// representation (unit vector, or orthonormal isotropy-corrected basis).
    pub fn apply(&self, _model: &FlagModel, x: &ModelPoint) -> Result<ModelPoint, GeomError> {
        match x {
            ModelPoint::Vector(v) => {
                let img = &self.matrix.0 * v.0.column(0).into_owned();
                Ok(canonical_vector(img))
            }
            ModelPoint::Subspace(b) => {
                let img = &self.matrix.0 * &b.basis().0;
                Ok(ModelPoint::Subspace(restore_isotropic_basis(&img)?))
            }
        }
    }

    /// Projective distance to another automorphism: Frobenius distance after
    /// optimal phase alignment, relative to the norms.
    pub fn projective_distance(&self, other: &Automorphism) -> f64 {
        let a = &self.matrix.0;
        let b = &other.matrix.0;
        let inner: C64 = b.iter().zip(a.iter()).map(|(y, x)| y.conj() * x).sum();
        if inner.norm() == 0.0 {
            return 1.0;
        }
        let phase = inner / c(inner.norm(), 0.0);
        (a - b.map(|y| y * phase)).norm() / a.norm().max(b.norm())
    }
}

/// Re-orthonormalizes the columns and removes first-order isotropy drift:
/// for orthonormal B with small S = B^t B, the update B - conj(B) S / 2
/// cancels S because B^t conj(B) = I.
fn restore_isotropic_basis(m: &DMatrix<C64>) -> Result<SubspaceBasis, GeomError> {
    let mut q = thin_q(m)?;
    for _ in 0..2 {
        let s = q.transpose() * &q;
        if s.norm() < 1e-15 {
            break;
        }
        let correction = q.map(|x| x.conj()) * s.map(|x| x * 0.5);
        q -= correction;
        q = thin_q(&q)?;
    }
    let tol = Tolerances::default();
    Ok(SubspaceBasis::new(ComplexMatrix(q), &tol)?)
}

fn thin_q(m: &DMatrix<C64>) -> Result<DMatrix<C64>, GeomError> {
    let k = m.ncols();
    let qr = m.clone().qr();
    let q = qr.q();
    let r = qr.r();
    for i in 0..k {
        if r[(i, i)].norm() < 1e-12 {
            return Err(GeomError::InvalidPoint { residual: 1.0 });
        }
    }
    Ok(q)
}

/// The C*-subgroup fixing both cores: `lambda -> exp(log_scale * log(lambda) * xi0)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OneParamSubgroup {
    pub xi0: ComplexMatrix,
    pub log_scale: f64,
}

/// Evaluates the one-parameter subgroup at `lambda != 0`.
pub fn g_lambda(
    model: &FlagModel,
    one_param: &OneParamSubgroup,
    lambda: C64,
) -> Result<Automorphism, GeomError> {
    assert!(lambda.norm() > 0.0, "lambda must be nonzero");
    let factor = lambda.ln() * c(one_param.log_scale, 0.0);
    let exp = matrix_exp(&ComplexMatrix(one_param.xi0.0.map(|x| x * factor)));
    Automorphism::new(model, exp)
}

/// The standard Schottky pair of the model: the two core subvarieties (as
/// the linear data that cuts them out) plus the C*-generator.
///
/// For vector models the cores are the `z`- and `w`-coordinate subspaces;
/// for the isotropic Grassmannian they are the pencils of planes containing
/// one of the two torus-eigenlines, and the returned bases span those lines.
pub fn schottky_pair_core(
    model: &FlagModel,
    tol: &Tolerances,
) -> Result<(SubspaceBasis, SubspaceBasis, OneParamSubgroup), GeomError> {
    let m = model.ambient_dim;
    let coord_span = |range: std::ops::Range<usize>| -> Result<SubspaceBasis, GeomError> {
        let cols: Vec<usize> = range.collect();
        let b = ComplexMatrix::from_fn(m, cols.len(), |i, j| {
            if i == cols[j] {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        Ok(SubspaceBasis::new(b, tol)?)
    };
    match model.variant {
        ModelVariant::ProjOdd(n) => {
            let c0 = coord_span(0..n + 1)?;
            let c1 = coord_span(n + 1..2 * n + 2)?;
            let xi0 = ComplexMatrix::from_fn(m, m, |i, j| {
                if i == j && i > n {
                    c(1.0, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            });
            Ok((c0, c1, OneParamSubgroup { xi0, log_scale: 1.0 }))
        }
        ModelVariant::QuadricEven(n) => {
            let c0 = coord_span(0..n)?;
            let c1 = coord_span(n..2 * n)?;
            let xi0 = ComplexMatrix::from_fn(m, m, |i, j| {
                if i != j {
                    c(0.0, 0.0)
                } else if i < n {
                    c(-1.0, 0.0)
                } else {
                    c(1.0, 0.0)
                }
            });
            Ok((c0, c1, OneParamSubgroup { xi0, log_scale: 0.5 }))
        }
        ModelVariant::QuadricOdd(n) => {
            let c0 = coord_span(1..n + 1)?;
            let c1 = coord_span(n + 1..2 * n + 1)?;
            let xi0 = ComplexMatrix::from_fn(m, m, |i, j| {
                if i != j || i == 0 {
                    c(0.0, 0.0)
                } else if i <= n {
                    c(-1.0, 0.0)
                } else {
                    c(1.0, 0.0)
                }
            });
            Ok((c0, c1, OneParamSubgroup { xi0, log_scale: 0.5 }))
        }
        ModelVariant::IsotropicGrass(_) => {
            let inv_sqrt2 = 1.0 / 2f64.sqrt();
            let line = |sign: f64| -> Result<SubspaceBasis, GeomError> {
                let b = ComplexMatrix::from_fn(m, 1, |i, _| match i {
                    0 => c(inv_sqrt2, 0.0),
                    1 => c(0.0, sign * inv_sqrt2),
                    _ => c(0.0, 0.0),
                });
                Ok(SubspaceBasis::new(b, tol)?)
            };
            let c0 = line(1.0)?;
            let c1 = line(-1.0)?;
            // so(2)-block rotation generator with eigenvalues -1, +1 on the
            // two core lines
            let mut xi0 = ComplexMatrix::zeros(m, m);
            xi0.0[(0, 1)] = c(0.0, 1.0);
            xi0.0[(1, 0)] = c(0.0, -1.0);
            Ok((c0, c1, OneParamSubgroup { xi0, log_scale: 1.0 }))
        }
    }
}

/// Reference point of the isotropic Grassmannian (the plane spanned by the
/// core-0 line and the standard isotropic pairs), fixing the component.
pub fn reference_subspace(model: &FlagModel, tol: &Tolerances) -> Result<SubspaceBasis, GeomError> {
    if !matches!(model.variant, ModelVariant::IsotropicGrass(_)) {
        return Err(GeomError::WrongModel("non-Grassmannian"));
    }
    let n = model.n();
    let m = model.ambient_dim;
    let inv_sqrt2 = 1.0 / 2f64.sqrt();
    let b = ComplexMatrix::from_fn(m, n + 1, |i, j| {
        let (a, bb) = (2 * j, 2 * j + 1);
        if i == a {
            c(inv_sqrt2, 0.0)
        } else if i == bb {
            c(0.0, inv_sqrt2)
        } else {
            c(0.0, 0.0)
        }
    });
    Ok(SubspaceBasis::new(b, tol)?)
}

/// Twistor projection of an isotropic plane: the complex structure
/// `J = -i (2 P_V - I)` is real for isotropic V, and `J e_1` restricted to
/// the orthogonal complement of `e_1` is a point of the sphere S^{2n}.
pub fn twistor_project(model: &FlagModel, v: &ModelPoint) -> Result<Vec<f64>, GeomError> {
    if !matches!(model.variant, ModelVariant::IsotropicGrass(_)) {
        return Err(GeomError::WrongModel("non-Grassmannian"));
    }
    let b = v.as_subspace()?;
    let m = model.ambient_dim;
    // J e1 = -i (2 B (B^H e1) - e1); B^H e1 is the conjugate first row of B
    let bc = b.basis();
    let coeffs = DVector::<C64>::from_fn(bc.cols_count(), |k, _| bc.0[(0, k)].conj());
    let mut je1 = (&bc.0 * coeffs).map(|x| x * c(0.0, -2.0));
    je1[0] += c(0.0, 1.0);
    // realness and skewness checks
    let mut imag_sq = je1.iter().skip(1).map(|x| x.im * x.im).sum::<f64>();
    imag_sq += je1[0].norm_sqr();
    let residual = imag_sq.sqrt();
    if residual > 1e-8 {
        return Err(GeomError::RealityViolated { residual });
    }
    let mut out: Vec<f64> = (1..m).map(|i| je1[i].re).collect();
    let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.5) {
        return Err(GeomError::RealityViolated { residual: 1.0 - norm });
    }
    for x in out.iter_mut() {
        *x /= norm;
    }
    Ok(out)
}

/// Evaluates phi; an optional pre-move turns this into the conjugated
/// evaluator `phi_j = phi o f_j^{-1}`.
#[derive(Debug, Clone)]
pub struct PhiEvaluator {
    pub model: FlagModel,
    /// Inverse of the move f for the conjugated evaluator.
    pub inverse_move: Option<Automorphism>,
    /// Anchor sphere point for the Grassmannian chart (first sphere
    /// coordinate by construction).
    pub anchor_coordinate: usize,
}

impl PhiEvaluator {
    pub fn for_model(model: &FlagModel) -> Self {
        PhiEvaluator {
            model: model.clone(),
            inverse_move: None,
            anchor_coordinate: 0,
        }
    }

    pub fn conjugated(model: &FlagModel, mv: &Automorphism) -> Result<Self, GeomError> {
        Ok(PhiEvaluator {
            model: model.clone(),
            inverse_move: Some(mv.inverse(model)?),
            anchor_coordinate: 0,
        })
    }
}

/// phi in `[0,1]`: `|w|^2 / (|z|^2 + |w|^2)` for vector models; for the
/// isotropic Grassmannian the pullback through the twistor projection of
/// the standard exhaustion, which reduces to `(1 - <pi(V), p>) / 2`.
pub fn phi(ev: &PhiEvaluator, x: &ModelPoint) -> Result<f64, GeomError> {
    let moved;
    let x = match &ev.inverse_move {
        Some(inv) => {
            moved = inv.apply(&ev.model, x)?;
            &moved
        }
        None => x,
    };
    match ev.model.variant {
        ModelVariant::IsotropicGrass(_) => {
            let s = twistor_project(&ev.model, x)?;
            Ok(((1.0 - s[ev.anchor_coordinate]) / 2.0).clamp(0.0, 1.0))
        }
        _ => {
            let v = x.as_vector()?;
            let (zr, wr) = ev.model.zw_split().expect("vector model");
            let nz: f64 = zr.map(|i| v.0[(i, 0)].norm_sqr()).sum();
            let nw: f64 = wr.map(|i| v.0[(i, 0)].norm_sqr()).sum();
            let denom = nz + nw;
            if denom < 1e-14 {
                return Err(GeomError::InvalidPoint { residual: denom });
            }
            Ok((nw / denom).clamp(0.0, 1.0))
        }
    }
}

/// The right-hand side of the equivariance law: `t*a` with
/// `t*a = t^2 a / (1 + (t^2 - 1) a)`.
pub fn phi_flow_law(a: f64, t: f64) -> f64 {
    let t2 = t * t;
    (t2 * a) / (1.0 + (t2 - 1.0) * a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Same,
    Opposite,
}

/// Connected-component comparison of two maximal isotropic subspaces:
/// same component iff `dim(V ∩ W) ≡ dim V (mod 2)`.
pub fn component_parity(
    v: &SubspaceBasis,
    reference: &SubspaceBasis,
    tol: &Tolerances,
) -> Result<Parity, NumLinError> {
    let d = intersect_dim(v, reference, tol)?;
    if d % 2 == v.dim() % 2 {
        Ok(Parity::Same)
    } else {
        Ok(Parity::Opposite)
    }
}

/// The 2:1 covering of the odd quadric onto projective space: forget the
/// `u` coordinate.
pub fn double_cover_project(
    model: &FlagModel,
    x: &ModelPoint,
) -> Result<(FlagModel, ModelPoint), GeomError> {
    let ModelVariant::QuadricOdd(n) = model.variant else {
        return Err(GeomError::WrongModel("non-QuadricOdd"));
    };
    let v = x.as_vector()?;
    let target = make_model(ModelVariant::ProjOdd(n - 1))?;
    let img = DVector::from_fn(2 * n, |i, _| v.0[(i + 1, 0)]);
    if img.norm() < 1e-12 {
        return Err(GeomError::InvalidPoint { residual: img.norm() });
    }
    Ok((target, canonical_vector(img)))
}

/// Conjugates a real Minkowski-orthogonal matrix (form diag(-1,1,...,1))
/// into the identity-form coordinates of the isotropic Grassmannian, where
/// it acts holomorphically.
pub fn mobius_embed(model: &FlagModel, g: &ComplexMatrix) -> Result<Automorphism, GeomError> {
    if !matches!(model.variant, ModelVariant::IsotropicGrass(_)) {
        return Err(GeomError::WrongModel("non-Grassmannian"));
    }
    let m = model.ambient_dim;
    if g.rows_count() != m || g.cols_count() != m {
        return Err(GeomError::BadParameter(format!("need a {m}x{m} matrix")));
    }
    let imag: f64 = g.0.iter().map(|x| x.im * x.im).sum::<f64>().sqrt();
    if imag > 1e-9 {
        return Err(GeomError::FormViolation { residual: imag });
    }
    // g^t eta g = eta for eta = diag(-1, 1, ..., 1)
    let mut residual = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let mut val = c(0.0, 0.0);
            for k in 0..m {
                let eta = if k == 0 { -1.0 } else { 1.0 };
                val += g.0[(k, i)] * c(eta, 0.0) * g.0[(k, j)];
            }
            let target = if i != j {
                0.0
            } else if i == 0 {
                -1.0
            } else {
                1.0
            };
            residual += (val - c(target, 0.0)).norm_sqr();
        }
    }
    let residual = residual.sqrt();
    if residual > 1e-9 {
        return Err(GeomError::FormViolation { residual });
    }
    // W = diag(i, 1, ..., 1): h = W g W^{-1}
    let h = ComplexMatrix::from_fn(m, m, |i, j| {
        let mut v = g.0[(i, j)];
        if i == 0 {
            v *= c(0.0, 1.0);
        }
        if j == 0 {
            v *= c(0.0, -1.0);
        }
        v
    });
    Automorphism::new(model, h)
}

/// Minkowski boost along the first sphere axis with rapidity `chi`; embeds
/// to the torus element `g_lambda` with `lambda = exp(chi)`.
pub fn mobius_boost(model: &FlagModel, chi: f64) -> ComplexMatrix {
    let m = model.ambient_dim;
    ComplexMatrix::from_fn(m, m, |i, j| {
        if i < 2 && j < 2 {
            if i == j {
                c(chi.cosh(), 0.0)
            } else {
                c(chi.sinh(), 0.0)
            }
        } else if i == j {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// Minkowski rotation diag(1, R) for a real rotation R of the sphere
/// coordinates.
pub fn mobius_rotation(model: &FlagModel, r: &DMatrix<f64>) -> ComplexMatrix {
    let m = model.ambient_dim;
    assert_eq!(r.nrows(), m - 1);
    ComplexMatrix::from_fn(m, m, |i, j| {
        if i == 0 || j == 0 {
            if i == j {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        } else {
            c(r[(i - 1, j - 1)], 0.0)
        }
    })
}

/// Haar-like random rotation in SO(k) via QR of a Gaussian matrix.
pub fn random_rotation(k: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    loop {
        let a = DMatrix::<f64>::from_fn(k, k, |_, _| rng.sample(StandardNormal));
        let qr = a.qr();
        let mut q = qr.q();
        let r = qr.r();
        if (0..k).any(|i| r[(i, i)].abs() < 1e-9) {
            continue;
        }
        // fix column signs so the factorization is unique, then the
        // determinant to +1
        for i in 0..k {
            if r[(i, i)] < 0.0 {
                for row in 0..k {
                    q[(row, i)] = -q[(row, i)];
                }
            }
        }
        if q.determinant() < 0.0 {
            for row in 0..k {
                q[(row, 0)] = -q[(row, 0)];
            }
        }
        return q;
    }
}

fn random_complex(rng: &mut impl Rng) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// A random model point from the model-uniform proposal distribution.
pub fn random_point(model: &FlagModel, rng: &mut impl Rng) -> ModelPoint {
    match model.variant {
        ModelVariant::ProjOdd(_) => {
            let m = model.ambient_dim;
            loop {
                let v = DVector::from_fn(m, |_, _| random_complex(rng));
                if v.norm() > 1e-3 {
                    return canonical_vector(v);
                }
            }
        }
        ModelVariant::QuadricEven(n) => loop {
            let z = DVector::from_fn(n, |_, _| random_complex(rng));
            let mut w = DVector::from_fn(n, |_, _| random_complex(rng));
            let nz = z.norm_squared();
            if nz < 1e-3 {
                continue;
            }
            let q: C64 = z.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
            // remove the q(z, w) component along conj(z)
            let corr = q / c(nz, 0.0);
            for i in 0..n {
                w[i] -= corr * z[i].conj();
            }
            let v = DVector::from_fn(2 * n, |i, _| if i < n { z[i] } else { w[i - n] });
            if v.norm() > 1e-3 {
                return canonical_vector(v);
            }
        },
        ModelVariant::QuadricOdd(n) => loop {
            let z = DVector::from_fn(n, |_, _| random_complex(rng));
            let w = DVector::from_fn(n, |_, _| random_complex(rng));
            let q: C64 = z.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
            let u = (-2.0 * q).sqrt() * if rng.random::<bool>() { 1.0 } else { -1.0 };
            let v = DVector::from_fn(2 * n + 1, |i, _| {
                if i == 0 {
                    u
                } else if i <= n {
                    z[i - 1]
                } else {
                    w[i - n - 1]
                }
            });
            if v.norm() > 1e-3 {
                return canonical_vector(v);
            }
        },
        ModelVariant::IsotropicGrass(_) => {
            let tol = Tolerances::default();
            let m = model.ambient_dim;
            let reference = reference_subspace(model, &tol).expect("IGr model");
            let rot = random_rotation(m, rng);
            let rot_c = DMatrix::from_fn(m, m, |i, j| c(rot[(i, j)], 0.0));
            let img = rot_c * &reference.basis().0;
            ModelPoint::Subspace(restore_isotropic_basis(&img).expect("rotation keeps isotropy"))
        }
    }
}

/// A random form-preserving automorphism: exponential of a random element
/// of the ambient Lie algebra (or a plain invertible matrix for projective
/// space), with entries of the stated scale.
pub fn random_automorphism(
    model: &FlagModel,
    rng: &mut impl Rng,
    scale: f64,
) -> Result<Automorphism, GeomError> {
    let m = model.ambient_dim;
    match model.variant {
        ModelVariant::ProjOdd(_) => loop {
            let a = ComplexMatrix::from_fn(m, m, |_, _| random_complex(rng) * c(scale, 0.0));
            if a.0.clone().lu().determinant().norm() > 1e-6 {
                return Automorphism::new(model, a);
            }
        },
        _ => {
            let s = model.internal_form().expect("form models");
            let factor = scale / (m as f64).sqrt();
            let mut k = DMatrix::<C64>::zeros(m, m);
            for i in 0..m {
                for j in (i + 1)..m {
                    let v = random_complex(rng) * c(factor, 0.0);
                    k[(i, j)] = v;
                    k[(j, i)] = -v;
                }
            }
            let xi = &s * k; // S * skew lies in so(S) since S^2 = I
            let g = matrix_exp(&ComplexMatrix(xi));
            Automorphism::new(model, g)
        }
    }
}

/// Trace-orthonormal basis of the ambient Lie algebra acting on the model:
/// sl(m) for projective space, so(form) for the others.
pub fn ambient_algebra_basis(model: &FlagModel) -> Vec<ComplexMatrix> {
    let m = model.ambient_dim;
    match model.variant {
        ModelVariant::ProjOdd(_) => {
            let mut basis = Vec::with_capacity(m * m - 1);
            for i in 0..m {
                for j in 0..m {
                    if i != j {
                        basis.push(ComplexMatrix::from_fn(m, m, |r, cc| {
                            if (r, cc) == (i, j) {
                                c(1.0, 0.0)
                            } else {
                                c(0.0, 0.0)
                            }
                        }));
                    }
                }
            }
            // orthonormal traceless diagonals: d_k ~ e_1 + ... + e_k - k e_{k+1}
            for k in 1..m {
                let norm = ((k * k + k) as f64).sqrt();
                basis.push(ComplexMatrix::from_fn(m, m, |r, cc| {
                    if r != cc {
                        c(0.0, 0.0)
                    } else if r < k {
                        c(1.0 / norm, 0.0)
                    } else if r == k {
                        c(-(k as f64) / norm, 0.0)
                    } else {
                        c(0.0, 0.0)
                    }
                }));
            }
            basis
        }
        _ => {
            let s = model.internal_form().expect("form models");
            let inv_sqrt2 = 1.0 / 2f64.sqrt();
            let mut basis = Vec::with_capacity(m * (m - 1) / 2);
            for i in 0..m {
                for j in (i + 1)..m {
                    let mut k = DMatrix::<C64>::zeros(m, m);
                    k[(i, j)] = c(inv_sqrt2, 0.0);
                    k[(j, i)] = c(-inv_sqrt2, 0.0);
                    basis.push(ComplexMatrix(&s * k));
                }
            }
            basis
        }
    }
}

/// Bilinear pairing of two ambient vectors in the internal coordinates.
pub fn bilinear_pairing(model: &FlagModel, x: &DVector<C64>, y: &DVector<C64>) -> C64 {
    match model.internal_form() {
        Some(s) => (x.transpose() * s * y)[(0, 0)],
        None => (x.transpose() * y)[(0, 0)],
    }
}

/// Disjointness decision for two moved cores.
///
/// Vector models: the moved core subspaces intersect trivially. Isotropic
/// Grassmannian: the pencils of planes through the two moved core lines are
/// disjoint iff the bilinear pairing of the line generators does not vanish
/// (a vanishing pairing makes their span isotropic, hence extendable to a
/// common plane in the component).
pub fn cores_disjoint(
    model: &FlagModel,
    a: &SubspaceBasis,
    b: &SubspaceBasis,
    tol: &Tolerances,
) -> Result<bool, NumLinError> {
    match model.variant {
        ModelVariant::IsotropicGrass(_) => {
            let x = a.basis().0.column(0).into_owned();
            let y = b.basis().0.column(0).into_owned();
            let pairing = bilinear_pairing(model, &x, &y);
            let gauge = ComplexMatrix::from_fn(1, 1, |_, _| pairing);
            Ok(rank_with_tol(&gauge, tol)? == 1)
        }
        _ => Ok(intersect_dim(a, b, tol)? == 0),
    }
}

/// Pushes a core subspace through an automorphism, re-orthonormalizing.
pub fn move_core(
    _model: &FlagModel,
    f: &Automorphism,
    core: &SubspaceBasis,
    tol: &Tolerances,
) -> Result<SubspaceBasis, GeomError> {
    let img = &f.matrix.0 * &core.basis().0;
    Ok(SubspaceBasis::from_span(&ComplexMatrix(img), tol)?)
}

/// A point on the moved core `f(C)`: the image of a random unit combination
/// of the core basis (vector models), or a random isotropic completion of
/// the moved core line (isotropic Grassmannian).
pub fn random_core_point(
    model: &FlagModel,
    f: &Automorphism,
    core: &SubspaceBasis,
    rng: &mut impl Rng,
) -> Result<ModelPoint, GeomError> {
    match model.variant {
        ModelVariant::IsotropicGrass(_) => {
            // Sample the fiber through the unmoved core line (the line lives
            // in the first two coordinates, so the component-swapping
            // reflection in the last coordinate keeps it), then push the
            // plane through f. f is in the connected isometry group, so the
            // component is preserved.
            let n = model.n();
            let m = model.ambient_dim;
            let tol = Tolerances::default();
            let reference = reference_subspace(model, &tol)?;
            let mut cols = DMatrix::<C64>::zeros(m, n + 1);
            cols.column_mut(0).copy_from(&core.basis().0.column(0));
            loop {
                for j in 1..=n {
                    for i in 0..m {
                        cols[(i, j)] = random_complex(rng);
                    }
                }
                let Ok(b) = complete_isotropic(model, &cols) else {
                    continue;
                };
                let Ok(parity) = component_parity(&b, &reference, &tol) else {
                    continue;
                };
                let b = match parity {
                    Parity::Same => b,
                    Parity::Opposite => reflect_last_column(model, &b)?,
                };
                return f.apply(model, &ModelPoint::Subspace(b));
            }
        }
        _ => {
            let k = core.dim();
            let coeffs = DVector::from_fn(k, |_, _| random_complex(rng));
            let v = &f.matrix.0 * (&core.basis().0 * coeffs);
            if v.norm() < 1e-6 {
                return random_core_point(model, f, core, rng);
            }
            Ok(canonical_vector(v))
        }
    }
}

/// Gram-Schmidt-like completion of the first column to an isotropic plane:
/// repeatedly project each new column to be b-orthogonal to the previous
/// ones and to itself (kill its own isotropy defect along the conjugate).
fn complete_isotropic(
    model: &FlagModel,
    cols: &DMatrix<C64>,
) -> Result<SubspaceBasis, GeomError> {
    let s = model.internal_form().expect("form model");
    let m = cols.nrows();
    let k = cols.ncols();
    let mut out = DMatrix::<C64>::zeros(m, k);
    out.column_mut(0).copy_from(&cols.column(0));
    let n0 = out.column(0).norm();
    if n0 < 1e-9 {
        return Err(GeomError::InvalidPoint { residual: n0 });
    }
    let scale = 1.0 / n0;
    for i in 0..m {
        out[(i, 0)] *= c(scale, 0.0);
    }
    for j in 1..k {
        let mut v = cols.column(j).into_owned();
        for _ in 0..3 {
            // b-orthogonality to previous columns and Hermitian orthogonality
            for p in 0..j {
                let prev = out.column(p).into_owned();
                let b_prev = (&s * &prev).conjugate();
                // subtract the component that pairs with prev under b:
                // minimize |b(prev, v)| using the direction conj(S prev)
                let pairing: C64 = prev
                    .iter()
                    .zip((&s * &v).iter())
                    .map(|(a, b)| a * b)
                    .sum();
                let dir = b_prev;
                let dn = dir.norm_squared();
                if dn > 1e-18 {
                    let coeff = pairing / c(dn, 0.0);
                    v -= dir * coeff;
                }
                // Hermitian orthogonality for conditioning
                let h: C64 = prev.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                v -= prev * h;
            }
            // self-isotropy: b(v, v) = 0, corrected along conj(S v)
            let qv: C64 = v.iter().zip((&s * &v).iter()).map(|(a, b)| a * b).sum();
            let dir = (&s * &v).conjugate();
            let dn = dir.norm_squared();
            if dn > 1e-18 {
                v -= dir * (qv / c(2.0 * dn, 0.0));
            }
            let nv = v.norm();
            if nv < 1e-9 {
                return Err(GeomError::InvalidPoint { residual: nv });
            }
            v /= c(nv, 0.0);
        }
        out.column_mut(j).copy_from(&v);
    }
    restore_isotropic_with_fixed_first(&out)
}

/// Orthonormalize + isotropy-correct while keeping the span; used when the
/// first column must stay inside the plane.
fn restore_isotropic_with_fixed_first(m: &DMatrix<C64>) -> Result<SubspaceBasis, GeomError> {
    let b = restore_isotropic_basis(m)?;
    // verify the first column stayed inside the restored span
    let first = m.column(0).into_owned();
    let coeffs = b.basis().0.adjoint() * &first;
    let recon = &b.basis().0 * coeffs;
    let residual = (recon - &first).norm() / first.norm();
    if residual > 1e-6 {
        return Err(GeomError::InvalidPoint { residual });
    }
    Ok(b)
}

/// Replaces the plane by its image under the reflection in the last ambient
/// coordinate (component swap), keeping the first column direction when it
/// is not supported on that coordinate.
fn reflect_last_column(
    model: &FlagModel,
    b: &SubspaceBasis,
) -> Result<SubspaceBasis, GeomError> {
    let m = model.ambient_dim;
    let mut refl = b.basis().0.clone();
    for j in 0..refl.ncols() {
        refl[(m - 1, j)] = -refl[(m - 1, j)];
    }
    restore_isotropic_basis(&refl)
}
