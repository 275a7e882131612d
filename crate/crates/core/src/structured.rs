//! Schottky groups with structured moves: the moves are drawn from a
//! distinguished subgroup (a left matrix factor, a left isometry factor, or
//! the Mobius group of a subsphere), so that the Zariski closure of the
//! group stays small and the quotient inherits rational structure.

use crate::geom::{
    make_model, schottky_pair_core, Automorphism, FlagModel, ModelVariant,
};
use crate::numlin::{ComplexMatrix, Tolerances, C64};
use crate::schottky::{
    assemble_group, build_group, move_quality_ok, pairwise_disjoint, quality_bar, rng_stream,
    MoveSearchOptions, MoveStrategy, SchottkyError, SchottkyGroupSpec,
};
use crate::SubspaceBasis;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Kronecker product with the identity in row-major matrix coordinates:
/// the left factor acts on the rows of a `p x cols` matrix.
fn kron_with_identity(a: &DMatrix<C64>, cols: usize) -> DMatrix<C64> {
    let p = a.nrows();
    DMatrix::from_fn(p * cols, p * cols, |row, col| {
        let (i, ci) = (row / cols, row % cols);
        let (j, cj) = (col / cols, col % cols);
        if ci == cj {
            a[(i, j)]
        } else {
            c(0.0, 0.0)
        }
    })
}

fn search_moves_with(
    model: &FlagModel,
    core0: &SubspaceBasis,
    core1: &SubspaceBasis,
    r: usize,
    seed: u64,
    max_attempts: usize,
    tol: &Tolerances,
    mut gen: impl FnMut(&mut ChaCha8Rng) -> Result<Automorphism, SchottkyError>,
) -> Result<Vec<Automorphism>, SchottkyError> {
    let mut rng = rng_stream(seed, 11);
    let mut accepted = vec![Automorphism::identity(model)];
    let mut attempts = 0usize;
    while accepted.len() < r {
        attempts += 1;
        if attempts > max_attempts {
            return Err(SchottkyError::MaxAttemptsExceeded {
                attempts: max_attempts,
            });
        }
        let candidate = gen(&mut rng)?;
        let mut trial = accepted.clone();
        trial.push(candidate.clone());
        let mut cores = Vec::new();
        for (j, f) in trial.iter().enumerate() {
            cores.push((j, 0usize, crate::geom::move_core(model, f, core0, tol)?));
            cores.push((j, 1usize, crate::geom::move_core(model, f, core1, tol)?));
        }
        let ok = match pairwise_disjoint(model, &cores, tol) {
            Ok(v) => v,
            Err(crate::numlin::NumLinError::RankAmbiguous { .. }) => false,
            Err(e) => return Err(e.into()),
        };
        let bar = quality_bar(attempts, max_attempts);
        if ok && move_quality_ok(model, core0, core1, &trial, bar, &mut rng)? {
            accepted.push(candidate);
        }
    }
    Ok(accepted)
}

/// A Schottky group on `P(C^{block x cols})` whose moves are left
/// multiplications by random `block x block` matrices (`block` even). The
/// standard pair (vanishing of the lower/upper half of the rows) and its
/// torus are left multiplications as well.
pub fn left_matrix_group(
    block: usize,
    cols: usize,
    r: usize,
    seed: u64,
    margin: f64,
    tol: &Tolerances,
) -> Result<SchottkyGroupSpec, SchottkyError> {
    if block % 2 != 0 || block == 0 || cols == 0 {
        return Err(SchottkyError::BadSpec(
            "left matrix groups need an even positive block size".into(),
        ));
    }
    let ambient = block * cols;
    if ambient % 2 != 0 || ambient < 2 {
        return Err(SchottkyError::BadSpec("ambient dimension must be even".into()));
    }
    let n = ambient / 2 - 1;
    let model = make_model(ModelVariant::ProjOdd(n))?;
    let (core0, core1, one_param) = schottky_pair_core(&model, tol)?;
    let moves = search_moves_with(
        &model,
        &core0,
        &core1,
        r,
        seed,
        400,
        tol,
        |rng: &mut ChaCha8Rng| {
            loop {
                let a = DMatrix::<C64>::from_fn(block, block, |_, _| {
                    c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                });
                if a.clone().lu().determinant().norm() > 1e-3 {
                    return Ok(Automorphism::new(&model, ComplexMatrix(kron_with_identity(&a, cols)))?);
                }
            }
        },
    )?;
    assemble_group(model, core0, core1, one_param, moves, seed, margin, tol)
}

/// A Schottky group on the quadric of `4k x cols` matrices isotropic in
/// trace pairing, with moves drawn from the left isometry factor.
pub fn left_isometry_pair_group(
    k: usize,
    cols: usize,
    r: usize,
    seed: u64,
    margin: f64,
    tol: &Tolerances,
) -> Result<SchottkyGroupSpec, SchottkyError> {
    if k == 0 || cols == 0 {
        return Err(SchottkyError::BadSpec("need positive block parameters".into()));
    }
    let rows = 4 * k;
    let n = 2 * k * cols; // quadric model parameter: ambient 2n = rows * cols
    let model = make_model(ModelVariant::QuadricEven(n))?;
    let (core0, core1, one_param) = schottky_pair_core(&model, tol)?;
    // the left factor preserves the antidiagonal pairing on C^{4k}
    let s_left = DMatrix::<C64>::from_fn(rows, rows, |i, j| {
        if i + 2 * k == j || j + 2 * k == i {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let moves = search_moves_with(
        &model,
        &core0,
        &core1,
        r,
        seed,
        400,
        tol,
        |rng: &mut ChaCha8Rng| {
            let scale = 1.0 / (rows as f64).sqrt();
            let mut kskew = DMatrix::<C64>::zeros(rows, rows);
            for i in 0..rows {
                for j in (i + 1)..rows {
                    let v = c(
                        (rng.random::<f64>() - 0.5) * scale,
                        (rng.random::<f64>() - 0.5) * scale,
                    );
                    kskew[(i, j)] = v;
                    kskew[(j, i)] = -v;
                }
            }
            let xi = &s_left * kskew;
            let h = crate::numlin::matrix_exp(&ComplexMatrix(xi));
            Ok(Automorphism::new(
                &model,
                ComplexMatrix(kron_with_identity(&h.0, cols)),
            )?)
        },
    )?;
    assemble_group(model, core0, core1, one_param, moves, seed, margin, tol)
}

/// A Schottky group on the isotropic Grassmannian whose anchor pairs move
/// only inside the subsphere S^m.
pub fn subsphere_group(
    n: usize,
    m: usize,
    r: usize,
    seed: u64,
    margin: f64,
    tol: &Tolerances,
) -> Result<SchottkyGroupSpec, SchottkyError> {
    let opts = MoveSearchOptions {
        max_attempts: 400,
        strategy: MoveStrategy::MobiusOnSphere,
        subsphere_m: Some(m),
    };
    build_group(
        ModelVariant::IsotropicGrass(n),
        r,
        seed,
        Some(opts),
        margin,
        tol,
    )
}
