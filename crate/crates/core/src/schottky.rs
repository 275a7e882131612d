//! Construction and certification of Schottky groups.
//!
//! A group is specified by a model, its standard pair, moves
//! `f_1 = id, f_2, ..., f_r`, and per-generator calibration `(eps_j,
//! lambda_j)` with `|lambda_j| = (1 - eps_j)/eps_j > 1`. The generators are
//! `gamma_j = f_j g_{lambda_j} f_j^{-1}`. Core disjointness is certified by
//! exact rank computations; disjointness of the neighborhood closures and
//! the ping-pong inclusions are certified by seeded sampling with explicit
//! margins.

use crate::geom::{
    cores_disjoint, g_lambda, make_model, mobius_embed, mobius_rotation, move_core, phi,
    phi_flow_law, random_automorphism, random_core_point, random_point, random_rotation,
    reference_subspace, twistor_project, Automorphism, FlagModel, GeomError, ModelPoint,
    ModelVariant, OneParamSubgroup, PhiEvaluator,
};
use crate::numlin::{NumLinError, SubspaceBasis, Tolerances, C64};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, thiserror::Error)]
pub enum SchottkyError {
    #[error("the pair on an even quadric with n = {n} odd cannot be moved apart: translated cores always intersect")]
    ParityObstruction { n: usize },
    #[error("no admissible moves found after {attempts} attempts")]
    MaxAttemptsExceeded { attempts: usize },
    #[error("no epsilon >= 2^-20 separates the neighborhood closures (margin {margin:e})")]
    SeparationFailure { margin: f64 },
    #[error("certificate failed at check {check:?}")]
    CertificateFailed {
        check: String,
        certificate: Box<PingPongCertificate>,
    },
    #[error("fundamental-domain sampling starved (acceptance {acceptance:e})")]
    SamplingStarved { acceptance: f64 },
    #[error("invalid group specification: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    NumLin(#[from] NumLinError),
}

/// Deterministic sub-generator: one seed, independent streams.
pub(crate) fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const STREAM_MOVES: u64 = 1;
const STREAM_CALIBRATE: u64 = 2;
const STREAM_FUNDAMENTAL: u64 = 3;
const STREAM_CERT_BASE: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MoveStrategy {
    GenericMatrix,
    MobiusOnSphere,
}

/// Options of the move search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MoveSearchOptions {
    pub max_attempts: usize,
    pub strategy: MoveStrategy,
    /// Restrict Mobius moves to a subsphere S^m (isotropic Grassmannian).
    pub subsphere_m: Option<usize>,
}

impl MoveSearchOptions {
    pub fn default_for(model: &FlagModel) -> Self {
        MoveSearchOptions {
            max_attempts: 200,
            strategy: match model.variant {
                ModelVariant::IsotropicGrass(_) => MoveStrategy::MobiusOnSphere,
                _ => MoveStrategy::GenericMatrix,
            },
            subsphere_m: None,
        }
    }

    fn validate(&self, model: &FlagModel) -> Result<(), SchottkyError> {
        if let Some(m) = self.subsphere_m {
            if self.strategy != MoveStrategy::MobiusOnSphere {
                return Err(SchottkyError::BadSpec(
                    "subsphere_m needs the mobius-on-sphere strategy".into(),
                ));
            }
            let n = model.n();
            if !(1..=2 * n).contains(&m) {
                return Err(SchottkyError::BadSpec(format!(
                    "subsphere_m must lie in 1..={}, got {m}",
                    2 * n
                )));
            }
        }
        if self.strategy == MoveStrategy::MobiusOnSphere
            && !matches!(model.variant, ModelVariant::IsotropicGrass(_))
        {
            return Err(SchottkyError::BadSpec(
                "mobius-on-sphere moves exist only on the isotropic Grassmannian".into(),
            ));
        }
        Ok(())
    }
}

/// A fully calibrated Schottky group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchottkyGroupSpec {
    pub model: FlagModel,
    pub core0: SubspaceBasis,
    pub core1: SubspaceBasis,
    pub one_param: OneParamSubgroup,
    pub rank: usize,
    /// Moves f_1 = id, f_2, ..., f_r.
    pub moves: Vec<Automorphism>,
    pub epsilons: Vec<f64>,
    pub lambdas: Vec<C64>,
    pub seed: u64,
}

impl SchottkyGroupSpec {
    /// The generator `gamma_j = f_j g_{lambda_j} f_j^{-1}` (0-based index).
    pub fn generator(&self, j: usize) -> Result<Automorphism, SchottkyError> {
        let g = g_lambda(&self.model, &self.one_param, self.lambdas[j])?;
        let f = &self.moves[j];
        let finv = f.inverse(&self.model)?;
        Ok(f.compose(&g).compose(&finv))
    }

    pub fn generators(&self) -> Result<Vec<Automorphism>, SchottkyError> {
        (0..self.rank).map(|j| self.generator(j)).collect()
    }

    /// The conjugated level function `phi_j = phi o f_j^{-1}`.
    pub fn evaluator(&self, j: usize) -> Result<PhiEvaluator, SchottkyError> {
        Ok(PhiEvaluator::conjugated(&self.model, &self.moves[j])?)
    }

    /// Checks the structural invariants: calibration identity, unit first
    /// move, exact core disjointness.
    pub fn validate(&self, tol: &Tolerances) -> Result<(), SchottkyError> {
        if self.rank == 0
            || self.moves.len() != self.rank
            || self.epsilons.len() != self.rank
            || self.lambdas.len() != self.rank
        {
            return Err(SchottkyError::BadSpec(
                "rank and per-generator data lengths disagree".into(),
            ));
        }
        let id = Automorphism::identity(&self.model);
        if self.moves[0].projective_distance(&id) > 1e-12 {
            return Err(SchottkyError::BadSpec("the first move must be the identity".into()));
        }
        for j in 0..self.rank {
            let eps = self.epsilons[j];
            if !(0.0 < eps && eps < 0.5) {
                return Err(SchottkyError::BadSpec(format!(
                    "epsilon_{} = {eps} out of (0, 1/2)",
                    j + 1
                )));
            }
            let expect = (1.0 - eps) / eps;
            if (self.lambdas[j].norm() - expect).abs() > 1e-12 * expect {
                return Err(SchottkyError::BadSpec(format!(
                    "|lambda_{}| must equal (1-eps)/eps = {expect}",
                    j + 1
                )));
            }
        }
        let cores = self.moved_cores(tol)?;
        certify_core_disjointness(&self.model, &cores, tol)?;
        Ok(())
    }

    /// The 2r moved cores `f_j(C_0), f_j(C_1)` in move order.
    pub fn moved_cores(
        &self,
        tol: &Tolerances,
    ) -> Result<Vec<(usize, usize, SubspaceBasis)>, SchottkyError> {
        let mut out = Vec::with_capacity(2 * self.rank);
        for (j, f) in self.moves.iter().enumerate() {
            out.push((j, 0, move_core(&self.model, f, &self.core0, tol)?));
            out.push((j, 1, move_core(&self.model, f, &self.core1, tol)?));
        }
        Ok(out)
    }
}

fn certify_core_disjointness(
    model: &FlagModel,
    cores: &[(usize, usize, SubspaceBasis)],
    tol: &Tolerances,
) -> Result<(), SchottkyError> {
    for (a, (ja, ca, ba)) in cores.iter().enumerate() {
        for (jb, cb, bb) in cores.iter().skip(a + 1) {
            if ja == jb && ca == cb {
                continue;
            }
            if !cores_disjoint(model, ba, bb, tol)? {
                return Err(SchottkyError::BadSpec(format!(
                    "cores f_{}(C_{ca}) and f_{}(C_{cb}) intersect",
                    ja + 1,
                    jb + 1
                )));
            }
        }
    }
    Ok(())
}

/// Searches for moves f_2, ..., f_r making all 2r cores pairwise disjoint,
/// certified by exact rank computations.
///
/// On the even quadric with odd n the obstruction is decided without
/// search: translated cores always meet because their intersection
/// dimension is fixed mod 2.
pub fn find_moves(
    model: &FlagModel,
    core0: &SubspaceBasis,
    core1: &SubspaceBasis,
    r: usize,
    seed: u64,
    opts: &MoveSearchOptions,
    tol: &Tolerances,
) -> Result<Vec<Automorphism>, SchottkyError> {
    if let ModelVariant::QuadricEven(n) = model.variant {
        if n % 2 == 1 && r >= 2 {
            return Err(SchottkyError::ParityObstruction { n });
        }
    }
    opts.validate(model)?;
    if r < 2 {
        return Ok(Vec::new());
    }
    let mut rng = rng_stream(seed, STREAM_MOVES);
    let mut accepted: Vec<Automorphism> = vec![Automorphism::identity(model)];
    let mut attempts = 0usize;

    // anchors of the accepted moves on the sphere (mobius strategy)
    let mut anchors: Vec<Vec<f64>> = Vec::new();
    if opts.strategy == MoveStrategy::MobiusOnSphere {
        let p = base_anchor(model);
        anchors.push(p.clone());
        anchors.push(p.iter().map(|x| -x).collect());
    }

    while accepted.len() < r {
        attempts += 1;
        if attempts > opts.max_attempts {
            return Err(SchottkyError::MaxAttemptsExceeded {
                attempts: opts.max_attempts,
            });
        }
        let candidate = match opts.strategy {
            MoveStrategy::GenericMatrix => random_automorphism(model, &mut rng, 1.0)?,
            MoveStrategy::MobiusOnSphere => {
                let sphere_dim = model.ambient_dim - 1;
                let rot = match opts.subsphere_m {
                    None => random_rotation(sphere_dim, &mut rng),
                    Some(m) => {
                        // rotate only the first m+1 sphere coordinates
                        let small = random_rotation(m + 1, &mut rng);
                        let mut full = DMatrix::<f64>::identity(sphere_dim, sphere_dim);
                        for i in 0..=m {
                            for j in 0..=m {
                                full[(i, j)] = small[(i, j)];
                            }
                        }
                        full
                    }
                };
                mobius_embed(model, &mobius_rotation(model, &rot))?
            }
        };

        // sphere separation prefilter for Mobius moves
        let mut new_anchors = Vec::new();
        if opts.strategy == MoveStrategy::MobiusOnSphere {
            let p = base_anchor(model);
            let moved = apply_to_anchor(model, &candidate, &p)?;
            let antipode: Vec<f64> = moved.iter().map(|x| -x).collect();
            let min_sep = anchors
                .iter()
                .flat_map(|a| [sphere_angle(a, &moved), sphere_angle(a, &antipode)])
                .fold(f64::INFINITY, f64::min);
            if min_sep < 0.1 {
                continue;
            }
            new_anchors.push(moved);
            new_anchors.push(antipode);
        }

        // exact disjointness of the enlarged core family
        let mut trial = accepted.clone();
        trial.push(candidate.clone());
        let mut cores = Vec::new();
        let mut ok = true;
        for (j, f) in trial.iter().enumerate() {
            match (
                move_core(model, f, core0, tol),
                move_core(model, f, core1, tol),
            ) {
                (Ok(a), Ok(b)) => {
                    cores.push((j, 0usize, a));
                    cores.push((j, 1usize, b));
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            ok = match pairwise_disjoint(model, &cores, tol) {
                Ok(v) => v,
                Err(NumLinError::RankAmbiguous { .. }) => false,
                Err(e) => return Err(e.into()),
            };
        }
        if ok {
            let bar = quality_bar(attempts, opts.max_attempts);
            ok = move_quality_ok(model, core0, core1, &trial, bar, &mut rng)?;
        }
        if ok {
            accepted.push(candidate);
            anchors.extend(new_anchors);
        }
    }
    Ok(accepted.into_iter().skip(1).collect())
}

/// Minimum phi-distance between the newest cores and the older
/// neighborhood systems; rejects configurations whose epsilon would have to
/// be uselessly small. The bar relaxes as the search runs out of attempts;
/// even the lowest step leaves an order of magnitude over the default
/// certificate margin.
const MOVE_QUALITY_STEPS: [f64; 3] = [0.02, 0.01, 0.005];
const MOVE_QUALITY_SAMPLES: usize = 32;

pub(crate) fn quality_bar(attempt: usize, max_attempts: usize) -> f64 {
    let phase = (attempt * MOVE_QUALITY_STEPS.len()) / (max_attempts + 1);
    MOVE_QUALITY_STEPS[phase.min(MOVE_QUALITY_STEPS.len() - 1)]
}

pub(crate) fn move_quality_ok(
    model: &FlagModel,
    core0: &SubspaceBasis,
    core1: &SubspaceBasis,
    moves: &[Automorphism],
    bar: f64,
    rng: &mut ChaCha8Rng,
) -> Result<bool, SchottkyError> {
    let r = moves.len();
    let new = r - 1;
    let evaluators: Vec<PhiEvaluator> = moves
        .iter()
        .map(|f| PhiEvaluator::conjugated(model, f))
        .collect::<Result<_, _>>()?;
    for j in 0..r {
        for i in 0..r {
            if i == j || (i != new && j != new) {
                continue;
            }
            for core in [core0, core1] {
                let (lo, hi) = match model.variant {
                    ModelVariant::IsotropicGrass(_) => {
                        // Mobius moves make phi_i constant on the core
                        // fibers, so light sampling suffices here
                        let mut lo = f64::INFINITY;
                        let mut hi = f64::NEG_INFINITY;
                        for _ in 0..MOVE_QUALITY_SAMPLES {
                            let y = random_core_point(model, &moves[j], core, rng)?;
                            let v = phi(&evaluators[i], &y)?;
                            lo = lo.min(v);
                            hi = hi.max(v);
                        }
                        (lo, hi)
                    }
                    _ => {
                        // the extreme levels of a moved core can hide in thin
                        // spikes that random samples miss; climb to them
                        let fj = &moves[j];
                        let objective = |c: &DVector<C64>| -> Result<f64, SchottkyError> {
                            let v = &fj.matrix.0 * (&core.basis().0 * c);
                            Ok(phi(&evaluators[i], &crate::geom::canonical_vector(v))?)
                        };
                        (
                            extremize_on_sphere(core.dim(), &objective, false, rng)?,
                            extremize_on_sphere(core.dim(), &objective, true, rng)?,
                        )
                    }
                };
                if lo < bar || hi > 1.0 - bar {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

pub(crate) fn pairwise_disjoint(
    model: &FlagModel,
    cores: &[(usize, usize, SubspaceBasis)],
    tol: &Tolerances,
) -> Result<bool, NumLinError> {
    for (a, (ja, ca, ba)) in cores.iter().enumerate() {
        for (jb, cb, bb) in cores.iter().skip(a + 1) {
            if ja == jb && ca == cb {
                continue;
            }
            if !cores_disjoint(model, ba, bb, tol)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn base_anchor(model: &FlagModel) -> Vec<f64> {
    let mut p = vec![0.0; model.ambient_dim - 1];
    p[0] = 1.0;
    p
}

fn apply_to_anchor(
    model: &FlagModel,
    f: &Automorphism,
    _anchor: &[f64],
) -> Result<Vec<f64>, SchottkyError> {
    // the anchor is pi(reference); its image under f is pi(f . reference)
    let tol = Tolerances::default();
    let reference = reference_subspace(model, &tol)?;
    let moved = f.apply(model, &ModelPoint::Subspace(reference))?;
    Ok(twistor_project(model, &moved)?)
}

fn sphere_angle(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot.clamp(-1.0, 1.0).acos()
}

/// Moves a point along the conjugated torus to the prescribed phi_j level.
fn flow_to_level(
    group: &SchottkyGroupSpec,
    j: usize,
    x: &ModelPoint,
    current: f64,
    target: f64,
) -> Result<ModelPoint, SchottkyError> {
    let a = current.clamp(1e-15, 1.0 - 1e-15);
    let b = target.clamp(1e-15, 1.0 - 1e-15);
    let t = ((b * (1.0 - a)) / (a * (1.0 - b))).sqrt();
    let g = g_lambda(&group.model, &group.one_param, C64::new(t, 0.0))?;
    let f = &group.moves[j];
    let finv = f.inverse(&group.model)?;
    let conj = f.compose(&g).compose(&finv);
    Ok(conj.apply(&group.model, x)?)
}

/// Largest epsilon of the form 2^-k (uniform over the generators) whose
/// closed neighborhoods are sampled pairwise disjoint with the given margin.
pub fn calibrate_epsilons(
    model: &FlagModel,
    core0: &SubspaceBasis,
    core1: &SubspaceBasis,
    one_param: &OneParamSubgroup,
    moves: &[Automorphism],
    margin: f64,
    seed: u64,
    _tol: &Tolerances,
) -> Result<Vec<f64>, SchottkyError> {
    let r = moves.len();
    assert!(r >= 1, "calibration needs at least one move");
    if r == 1 {
        return Ok(vec![0.25]);
    }
    let skeleton = SchottkyGroupSpec {
        model: model.clone(),
        core0: core0.clone(),
        core1: core1.clone(),
        one_param: one_param.clone(),
        rank: r,
        moves: moves.to_vec(),
        epsilons: vec![0.25; r],
        lambdas: vec![C64::new(3.0, 0.0); r],
        seed,
    };
    let evaluators: Vec<PhiEvaluator> = (0..r)
        .map(|j| skeleton.evaluator(j))
        .collect::<Result<_, _>>()?;
    let mut rng = rng_stream(seed, STREAM_CALIBRATE);
    // sample at least as densely as a typical certificate re-check, so a
    // fresh cloud is unlikely to dip below the demanded separation
    let samples_per_set = 400;

    // The epsilon-independent part of the separation constraint is governed
    // by the extreme phi_i values over each moved core. Random sampling
    // estimates set extrema poorly (the cores have several real dimensions),
    // so the extremes are hill-climbed once up front.
    let core_extremes = moved_core_extremes(&skeleton, &evaluators, &mut rng)?;

    // demand a strictly larger separation during search and return one extra
    // halving, so certificates sampling the same sets with fresh points keep
    // the stated margin
    let demanded = 2.0 * margin;
    for k in 2..=19u32 {
        let eps = 0.5f64.powi(k as i32);
        let cores_ok = core_extremes
            .iter()
            .all(|&(lo, hi)| lo > eps + demanded && hi < 1.0 - eps - demanded);
        if !cores_ok {
            continue;
        }
        match boundary_separated(
            &skeleton,
            &evaluators,
            eps,
            demanded,
            samples_per_set,
            &mut rng,
        )? {
            None => return Ok(vec![eps / 2.0; r]),
            Some(_) => continue,
        }
    }
    Err(SchottkyError::SeparationFailure { margin })
}

/// Extreme values of `phi_i` over every moved core `f_j(C_side)`, for all
/// i != j: hill-climbed on vector models (the core is the projectivized
/// image of a coefficient sphere), densely sampled on the Grassmannian
/// (where Mobius moves make `phi_i` constant on the core fibers).
fn moved_core_extremes(
    group: &SchottkyGroupSpec,
    evaluators: &[PhiEvaluator],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(f64, f64)>, SchottkyError> {
    let r = group.rank;
    let mut out = Vec::new();
    for j in 0..r {
        for core in [&group.core0, &group.core1] {
            for (i, ev) in evaluators.iter().enumerate() {
                if i == j {
                    continue;
                }
                let (lo, hi) = match group.model.variant {
                    ModelVariant::IsotropicGrass(_) => {
                        let mut lo = f64::INFINITY;
                        let mut hi = f64::NEG_INFINITY;
                        for _ in 0..96 {
                            let y = random_core_point(&group.model, &group.moves[j], core, rng)?;
                            let v = phi(ev, &y)?;
                            lo = lo.min(v);
                            hi = hi.max(v);
                        }
                        (lo, hi)
                    }
                    _ => {
                        let objective = |c: &DVector<C64>| -> Result<f64, SchottkyError> {
                            let v = &group.moves[j].matrix.0 * (&core.basis().0 * c);
                            let p = crate::geom::canonical_vector(v);
                            Ok(phi(ev, &p)?)
                        };
                        let lo = extremize_on_sphere(core.dim(), &objective, false, rng)?;
                        let hi = extremize_on_sphere(core.dim(), &objective, true, rng)?;
                        (lo, hi)
                    }
                };
                out.push((lo, hi));
            }
        }
    }
    Ok(out)
}

/// Multi-start stochastic hill climb of a smooth objective over the unit
/// coefficient sphere in C^k; returns the best value found.
fn extremize_on_sphere(
    k: usize,
    objective: &dyn Fn(&DVector<C64>) -> Result<f64, SchottkyError>,
    maximize: bool,
    rng: &mut ChaCha8Rng,
) -> Result<f64, SchottkyError> {
    let sign = if maximize { 1.0 } else { -1.0 };
    let random_unit = |rng: &mut ChaCha8Rng| {
        loop {
            let v = DVector::from_fn(k, |_, _| {
                C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let n = v.norm();
            if n > 1e-6 {
                return v / C64::new(n, 0.0);
            }
        }
    };
    let mut best_overall = f64::NEG_INFINITY;
    // scan for good starts
    let mut starts: Vec<(f64, DVector<C64>)> = Vec::new();
    for _ in 0..48 {
        let c = random_unit(rng);
        starts.push((sign * objective(&c)?, c));
    }
    starts.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    starts.truncate(4);
    for (value, mut current) in starts {
        let mut best = value;
        let mut step = 0.3f64;
        while step > 1e-4 {
            let mut improved = false;
            for _ in 0..8 {
                let mut cand = &current
                    + DVector::from_fn(k, |_, _| {
                        C64::new(
                            (rng.random::<f64>() - 0.5) * step,
                            (rng.random::<f64>() - 0.5) * step,
                        )
                    });
                let n = cand.norm();
                if n < 1e-6 {
                    continue;
                }
                cand /= C64::new(n, 0.0);
                let v = sign * objective(&cand)?;
                if v > best {
                    best = v;
                    current = cand;
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best_overall = best_overall.max(best);
    }
    Ok(sign * best_overall)
}

/// Checks the sampled boundary rings of the neighborhoods against the
/// other level windows; returns None when separated.
fn boundary_separated(
    group: &SchottkyGroupSpec,
    evaluators: &[PhiEvaluator],
    eps: f64,
    margin: f64,
    samples_per_set: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Option<f64>, SchottkyError> {
    let clouds = neighborhood_clouds(group, eps, samples_per_set, rng)?;
    let mut worst: f64 = f64::INFINITY;
    for (j, _side, points) in &clouds {
        for x in points {
            for (i, ev) in evaluators.iter().enumerate() {
                let v = phi(ev, x)?;
                if i != *j {
                    // outside both U_i and V_i closures with margin
                    worst = worst.min(v - (eps + margin)).min((1.0 - eps - margin) - v);
                }
            }
            if worst < 0.0 {
                return Ok(Some(worst));
            }
        }
    }
    Ok(None)
}

/// Sample clouds covering each closed neighborhood: points of the moved
/// cores plus generic points flowed to the boundary level.
#[allow(clippy::type_complexity)]
fn neighborhood_clouds(
    group: &SchottkyGroupSpec,
    eps: f64,
    samples_per_set: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, usize, Vec<ModelPoint>)>, SchottkyError> {
    let r = group.rank;
    let mut clouds = Vec::with_capacity(2 * r);
    for j in 0..r {
        let ev_j = group.evaluator(j)?;
        for side in 0..2usize {
            let core = if side == 0 { &group.core0 } else { &group.core1 };
            let mut points = Vec::with_capacity(samples_per_set);
            // core points (phi_j = side)
            for _ in 0..samples_per_set / 2 {
                points.push(random_core_point(
                    &group.model,
                    &group.moves[j],
                    core,
                    rng,
                )?);
            }
            // generic points flowed to the boundary level
            let boundary = if side == 0 { eps } else { 1.0 - eps };
            while points.len() < samples_per_set {
                let x = random_point(&group.model, rng);
                let a = phi(&ev_j, &x)?;
                if a < 1e-9 || a > 1.0 - 1e-9 {
                    continue;
                }
                points.push(flow_to_level(group, j, &x, a, boundary)?);
            }
            clouds.push((j, side, points));
        }
    }
    Ok(clouds)
}

/// Builds a calibrated group on the model: standard pair, searched moves,
/// calibrated uniform epsilon, real positive lambdas.
pub fn build_group(
    variant: ModelVariant,
    r: usize,
    seed: u64,
    opts: Option<MoveSearchOptions>,
    margin: f64,
    tol: &Tolerances,
) -> Result<SchottkyGroupSpec, SchottkyError> {
    let model = make_model(variant)?;
    let (core0, core1, one_param) = crate::geom::schottky_pair_core(&model, tol)?;
    let opts = opts.unwrap_or_else(|| MoveSearchOptions::default_for(&model));
    let searched = find_moves(&model, &core0, &core1, r, seed, &opts, tol)?;
    let mut moves = vec![Automorphism::identity(&model)];
    moves.extend(searched);
    assemble_group(model, core0, core1, one_param, moves, seed, margin, tol)
}

/// Assembles and calibrates a group from explicitly given moves
/// (f_1 = id must be included). Disjointness is re-certified.
#[allow(clippy::too_many_arguments)]
pub fn assemble_group(
    model: FlagModel,
    core0: SubspaceBasis,
    core1: SubspaceBasis,
    one_param: OneParamSubgroup,
    moves: Vec<Automorphism>,
    seed: u64,
    margin: f64,
    tol: &Tolerances,
) -> Result<SchottkyGroupSpec, SchottkyError> {
    let r = moves.len();
    let epsilons = calibrate_epsilons(
        &model, &core0, &core1, &one_param, &moves, margin, seed, tol,
    )?;
    let lambdas: Vec<C64> = epsilons
        .iter()
        .map(|&e| C64::new((1.0 - e) / e, 0.0))
        .collect();
    let group = SchottkyGroupSpec {
        model,
        core0,
        core1,
        one_param,
        rank: r,
        moves,
        epsilons,
        lambdas,
        seed,
    };
    group.validate(tol)?;
    Ok(group)
}

/// A freely reduced word in the generators; letters are
/// (generator index 0-based, sign).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedWord {
    letters: Vec<(usize, i8)>,
}

impl ReducedWord {
    pub fn letters(&self) -> &[(usize, i8)] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

/// Free reduction: cancel adjacent inverse pairs.
pub fn reduce_word(letters: &[(usize, i8)]) -> ReducedWord {
    let mut out: Vec<(usize, i8)> = Vec::with_capacity(letters.len());
    for &(g, s) in letters {
        assert!(s == 1 || s == -1, "letter signs must be +1 or -1");
        if let Some(&(pg, ps)) = out.last() {
            if pg == g && ps == -s {
                out.pop();
                continue;
            }
        }
        out.push((g, s));
    }
    ReducedWord { letters: out }
}

/// The matrix of a word: product of generator matrices in letter order.
pub fn word_matrix(
    group: &SchottkyGroupSpec,
    word: &ReducedWord,
) -> Result<Automorphism, SchottkyError> {
    let gens = group.generators()?;
    let mut invs = Vec::with_capacity(gens.len());
    for g in &gens {
        invs.push(g.inverse(&group.model)?);
    }
    let mut acc = Automorphism::identity(&group.model);
    for &(g, s) in &word.letters {
        let factor = if s > 0 { &gens[g] } else { &invs[g] };
        acc = acc.compose(factor);
    }
    Ok(acc)
}

/// All reduced words of the exact length, in lexicographic letter order.
pub fn enumerate_reduced_words(rank: usize, length: usize) -> Vec<ReducedWord> {
    let mut out = Vec::new();
    let alphabet: Vec<(usize, i8)> = (0..rank)
        .flat_map(|g| [(g, 1i8), (g, -1i8)])
        .collect();
    let mut stack: Vec<Vec<(usize, i8)>> = vec![Vec::new()];
    for _ in 0..length {
        let mut next = Vec::new();
        for w in &stack {
            for &(g, s) in &alphabet {
                if let Some(&(pg, ps)) = w.last() {
                    if pg == g && ps == -s {
                        continue;
                    }
                }
                let mut ww = w.clone();
                ww.push((g, s));
                next.push(ww);
            }
        }
        stack = next;
    }
    for letters in stack {
        out.push(ReducedWord { letters });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    /// The recorded value must be at least the threshold.
    AtLeast,
    /// The recorded value must be at most the threshold.
    AtMost,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertCheck {
    pub name: String,
    pub samples: usize,
    pub worst: f64,
    pub threshold: f64,
    pub sense: Sense,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairSeparation {
    pub from: String,
    pub to: String,
    pub min_gap: f64,
}

/// Sampled evidence that the ping-pong axioms hold with stated margins.
///
/// Properness of the action is not decidable from finitely many samples;
/// the certificate evidences the inclusions the freeness and properness
/// arguments rest on, which is recorded in `properness_note`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PingPongCertificate {
    pub samples: usize,
    pub word_length: usize,
    pub margin: f64,
    pub pair_separations: Vec<PairSeparation>,
    pub checks: Vec<CertCheck>,
    pub margin_achieved: f64,
    pub verdict: Verdict,
    pub properness_note: String,
}

const EQUIVARIANCE_TOL: f64 = 1e-8;
const NONSCALAR_TOL: f64 = 1e-6;
const INCLUSION_FUZZ: f64 = 1e-9;

/// Runs every certificate check and returns the full evidence regardless of
/// the verdict.
pub fn run_certificate(
    group: &SchottkyGroupSpec,
    n_samples: usize,
    word_length: usize,
    tol: &Tolerances,
) -> Result<PingPongCertificate, SchottkyError> {
    group.validate(tol)?;
    let r = group.rank;
    let margin = tol.cert_margin;
    let evaluators: Vec<PhiEvaluator> = (0..r)
        .map(|j| group.evaluator(j))
        .collect::<Result<_, _>>()?;
    let generators = group.generators()?;
    let mut checks = Vec::new();
    let mut pair_separations = Vec::new();

    // (0) pairwise separation of the 2r closed neighborhoods
    if r >= 2 {
        let mut rng = rng_stream(group.seed, STREAM_CERT_BASE);
        let per_set = (n_samples / (2 * r)).max(24);
        let clouds = neighborhood_clouds(group, max_eps(group), per_set, &mut rng)?;
        let mut worst = f64::INFINITY;
        for (j, side, points) in &clouds {
            let from = set_name(*j, *side);
            for (i, ev) in evaluators.iter().enumerate() {
                if i == *j {
                    continue;
                }
                let eps_i = group.epsilons[i];
                let mut min_gap = f64::INFINITY;
                for x in points {
                    let v = phi(ev, x)?;
                    min_gap = min_gap.min(v - eps_i).min(1.0 - eps_i - v);
                }
                pair_separations.push(PairSeparation {
                    from: from.clone(),
                    to: format!("U{}|V{}", i + 1, i + 1),
                    min_gap,
                });
                worst = worst.min(min_gap);
            }
        }
        checks.push(CertCheck {
            name: "neighborhood-separation".into(),
            samples: per_set * 2 * r,
            worst,
            threshold: margin,
            sense: Sense::AtLeast,
            pass: worst >= margin,
        });
    }

    // (i) equivariance of phi_j under gamma_j
    {
        let worst = (0..r)
            .map(|j| -> Result<f64, SchottkyError> {
                let ev = &evaluators[j];
                let t = group.lambdas[j].norm();
                let results: Vec<f64> = (0..n_samples)
                    .into_par_iter()
                    .map(|idx| -> Result<f64, SchottkyError> {
                        let mut rng =
                            rng_stream(group.seed, STREAM_CERT_BASE + 10 + idx as u64);
                        let x = random_point(&group.model, &mut rng);
                        let a = phi(ev, &x)?;
                        let y = generators[j].apply(&group.model, &x)?;
                        let b = phi(ev, &y)?;
                        Ok((b - phi_flow_law(a, t)).abs())
                    })
                    .collect::<Result<_, _>>()?;
                Ok(results.into_iter().fold(0.0, f64::max))
            })
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(0.0, f64::max);
        checks.push(CertCheck {
            name: "flow-equivariance".into(),
            samples: n_samples * r,
            worst,
            threshold: EQUIVARIANCE_TOL,
            sense: Sense::AtMost,
            pass: worst <= EQUIVARIANCE_TOL,
        });
    }

    // (ii) gamma_j maps U_j into the complement of closure(V_j). The gap of
    // a point at level a <= eps - delta is at least delta (the flow law is
    // concave with unit slope at the boundary), so the certified margin is
    // capped by the epsilon scale.
    {
        let mut worst = f64::INFINITY;
        let mut threshold = f64::INFINITY;
        let mut pass = true;
        for j in 0..r {
            let ev = &evaluators[j];
            let eps = group.epsilons[j];
            let margin_j = margin.min(eps / 4.0);
            let top = eps - 1.01 * margin_j;
            threshold = threshold.min(margin_j);
            let gaps: Vec<f64> = (0..n_samples)
                .into_par_iter()
                .map(|idx| -> Result<f64, SchottkyError> {
                    let mut rng =
                        rng_stream(group.seed, STREAM_CERT_BASE + 100 + idx as u64);
                    let x = random_point(&group.model, &mut rng);
                    let a = phi(ev, &x)?;
                    if a < 1e-9 || a > 1.0 - 1e-9 {
                        return Ok(f64::INFINITY); // skip near-core proposals
                    }
                    let level = rng.random::<f64>() * top;
                    let y = flow_to_level(group, j, &x, a, level.max(1e-12))?;
                    let img = generators[j].apply(&group.model, &y)?;
                    let v = phi(ev, &img)?;
                    Ok((1.0 - eps) - v)
                })
                .collect::<Result<_, _>>()?;
            let worst_j = gaps.into_iter().fold(f64::INFINITY, f64::min);
            pass &= worst_j >= margin_j;
            worst = worst.min(worst_j);
        }
        checks.push(CertCheck {
            name: "pingpong-inclusion".into(),
            samples: n_samples * r,
            worst,
            threshold,
            sense: Sense::AtLeast,
            pass,
        });
    }

    // (iii) reduced words push the fundamental domain into the U/V system
    if word_length >= 1 {
        let domain_samples = (n_samples / 4).clamp(8, 256);
        let domain = fundamental_domain_sample(group, domain_samples, group.seed, tol)?;
        let mut inverses = Vec::with_capacity(r);
        for g in &generators {
            inverses.push(g.inverse(&group.model)?);
        }
        let slacks: Vec<f64> = domain
            .par_iter()
            .map(|x| -> Result<f64, SchottkyError> {
                let mut worst = f64::INFINITY;
                // depth-first over reduced words, extending on the left
                let mut stack: Vec<(usize, i8, usize, ModelPoint)> = Vec::new();
                for j in 0..r {
                    for s in [1i8, -1] {
                        let g = if s > 0 { &generators[j] } else { &inverses[j] };
                        stack.push((j, s, 1, g.apply(&group.model, x)?));
                    }
                }
                while let Some((j, s, len, y)) = stack.pop() {
                    let v = phi(&evaluators[j], &y)?;
                    let eps = group.epsilons[j];
                    let slack = if s > 0 { v - (1.0 - eps) } else { eps - v };
                    worst = worst.min(slack);
                    if len < word_length {
                        for k in 0..r {
                            for t in [1i8, -1] {
                                if k == j && t == -s {
                                    continue;
                                }
                                let g = if t > 0 { &generators[k] } else { &inverses[k] };
                                stack.push((k, t, len + 1, g.apply(&group.model, &y)?));
                            }
                        }
                    }
                }
                Ok(worst)
            })
            .collect::<Result<_, _>>()?;
        let worst = slacks.into_iter().fold(f64::INFINITY, f64::min);
        checks.push(CertCheck {
            name: "words-leave-fundamental-domain".into(),
            samples: domain_samples,
            worst,
            threshold: -INCLUSION_FUZZ,
            sense: Sense::AtLeast,
            pass: worst >= -INCLUSION_FUZZ,
        });
    }

    // (iv) word matrices are non-scalar
    {
        let mut worst = f64::INFINITY;
        let mut count = 0usize;
        let mut inverses = Vec::with_capacity(r);
        for g in &generators {
            inverses.push(g.inverse(&group.model)?);
        }
        let mut stack: Vec<(usize, i8, usize, Automorphism)> = Vec::new();
        for j in 0..r {
            for s in [1i8, -1] {
                let g = if s > 0 { &generators[j] } else { &inverses[j] };
                stack.push((j, s, 1, g.clone()));
            }
        }
        while let Some((j, s, len, m)) = stack.pop() {
            worst = worst.min(m.matrix.distance_from_scalar());
            count += 1;
            if len < word_length {
                for k in 0..r {
                    for t in [1i8, -1] {
                        if k == j && t == -s {
                            continue;
                        }
                        let g = if t > 0 { &generators[k] } else { &inverses[k] };
                        stack.push((k, t, len + 1, g.compose(&m)));
                    }
                }
            }
        }
        checks.push(CertCheck {
            name: "words-non-scalar".into(),
            samples: count,
            worst,
            threshold: NONSCALAR_TOL,
            sense: Sense::AtLeast,
            pass: worst >= NONSCALAR_TOL,
        });
    }

    let margin_achieved = checks
        .iter()
        .filter(|c| c.sense == Sense::AtLeast)
        .map(|c| c.worst)
        .fold(f64::INFINITY, f64::min);
    let verdict = if checks.iter().all(|c| c.pass) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(PingPongCertificate {
        samples: n_samples,
        word_length,
        margin,
        pair_separations,
        checks,
        margin_achieved,
        verdict,
        properness_note: "finite sampling cannot decide properness; this certificate evidences \
                          the level-set inclusions that freeness and properness rest on"
            .into(),
    })
}

fn max_eps(group: &SchottkyGroupSpec) -> f64 {
    group.epsilons.iter().cloned().fold(0.0, f64::max)
}

fn set_name(j: usize, side: usize) -> String {
    if side == 0 {
        format!("U{}", j + 1)
    } else {
        format!("V{}", j + 1)
    }
}

/// Runs the certificate and errors when any check fails.
pub fn certify_ping_pong(
    group: &SchottkyGroupSpec,
    n_samples: usize,
    word_length: usize,
    tol: &Tolerances,
) -> Result<PingPongCertificate, SchottkyError> {
    let cert = run_certificate(group, n_samples, word_length, tol)?;
    if cert.verdict == Verdict::Fail {
        let check = cert
            .checks
            .iter()
            .find(|c| !c.pass)
            .map(|c| c.name.clone())
            .unwrap_or_default();
        return Err(SchottkyError::CertificateFailed {
            check,
            certificate: Box::new(cert),
        });
    }
    Ok(cert)
}

/// Rejection-samples points of the fundamental domain: all conjugated
/// levels inside `[eps_j, 1 - eps_j]`.
pub fn fundamental_domain_sample(
    group: &SchottkyGroupSpec,
    n: usize,
    seed: u64,
    _tol: &Tolerances,
) -> Result<Vec<ModelPoint>, SchottkyError> {
    let evaluators: Vec<PhiEvaluator> = (0..group.rank)
        .map(|j| group.evaluator(j))
        .collect::<Result<_, _>>()?;
    let mut rng = rng_stream(seed, STREAM_FUNDAMENTAL);
    let mut out = Vec::with_capacity(n);
    let mut proposed = 0usize;
    let max_proposals = 10_000 + n * 10_000;
    while out.len() < n {
        if proposed >= max_proposals {
            return Err(SchottkyError::SamplingStarved {
                acceptance: out.len() as f64 / proposed as f64,
            });
        }
        proposed += 1;
        let x = random_point(&group.model, &mut rng);
        let mut ok = true;
        for (j, ev) in evaluators.iter().enumerate() {
            let v = phi(ev, &x)?;
            let eps = group.epsilons[j];
            if !(eps..=1.0 - eps).contains(&v) {
                ok = false;
                break;
            }
        }
        if ok {
            out.push(x);
        }
    }
    Ok(out)
}

/// A limit-set point cloud: the images of the 2r core base points under all
/// reduced words of the exact depth. Vector models emit homogeneous
/// coordinates, the isotropic Grassmannian emits twistor sphere coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitSetCloud {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn limit_set_sample(
    group: &SchottkyGroupSpec,
    depth: usize,
    seed: u64,
) -> Result<LimitSetCloud, SchottkyError> {
    let model = &group.model;
    let mut rng = rng_stream(seed, 4);
    let mut base_points = Vec::with_capacity(2 * group.rank);
    for j in 0..group.rank {
        for core in [&group.core0, &group.core1] {
            base_points.push(random_core_point(model, &group.moves[j], core, &mut rng)?);
        }
    }
    let words = enumerate_reduced_words(group.rank, depth);
    let mut columns = vec!["word".into(), "base".into()];
    match model.variant {
        ModelVariant::IsotropicGrass(_) => {
            for i in 0..model.ambient_dim - 1 {
                columns.push(format!("s{i}"));
            }
        }
        _ => {
            for i in 0..model.ambient_dim {
                columns.push(format!("re{i}"));
                columns.push(format!("im{i}"));
            }
        }
    }
    let mut rows = Vec::with_capacity(words.len() * base_points.len());
    for (wi, w) in words.iter().enumerate() {
        let m = word_matrix(group, w)?;
        for (bi, b) in base_points.iter().enumerate() {
            let img = m.apply(model, b)?;
            let mut row = vec![wi as f64, bi as f64];
            match &img {
                ModelPoint::Vector(v) => {
                    for i in 0..model.ambient_dim {
                        row.push(v.0[(i, 0)].re);
                        row.push(v.0[(i, 0)].im);
                    }
                }
                ModelPoint::Subspace(_) => {
                    row.extend(twistor_project(model, &img)?);
                }
            }
            rows.push(row);
        }
    }
    Ok(LimitSetCloud { columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn word_reduction_cancels_inverse_pairs() {
        let w = reduce_word(&[(0, 1), (0, -1)]);
        assert!(w.is_empty());
        let w = reduce_word(&[(0, 1), (1, 1), (1, -1), (0, 1)]);
        assert_eq!(w.letters(), &[(0, 1), (0, 1)]);
    }

    #[test]
    fn reduced_word_counts_match_formula() {
        for r in 1..=3usize {
            for l in 1..=5usize {
                let expect = 2 * r * (2 * r - 1).pow(l as u32 - 1);
                assert_eq!(enumerate_reduced_words(r, l).len(), expect);
            }
        }
    }

    #[test]
    fn parity_obstruction_is_immediate() {
        let model = make_model(ModelVariant::QuadricEven(3)).unwrap();
        let (c0, c1, _) = crate::geom::schottky_pair_core(&model, &tol()).unwrap();
        let opts = MoveSearchOptions::default_for(&model);
        let err = find_moves(&model, &c0, &c1, 2, 1, &opts, &tol()).unwrap_err();
        assert!(matches!(err, SchottkyError::ParityObstruction { n: 3 }));
    }

    #[test]
    fn build_group_p3_rank2_and_certify() {
        let group = build_group(ModelVariant::ProjOdd(1), 2, 7, None, 1e-3, &tol()).unwrap();
        assert_eq!(group.rank, 2);
        assert_eq!(group.moves.len(), 2);
        // well-separated cores calibrate at a comfortable epsilon
        assert!(group.epsilons[0] >= 0.5f64.powi(8));
        let cert = certify_ping_pong(&group, 200, 3, &tol()).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
        assert!(cert.margin_achieved >= 1e-3);
    }

    #[test]
    fn word_matrix_respects_concatenation() {
        let group = build_group(ModelVariant::ProjOdd(1), 2, 11, None, 1e-3, &tol()).unwrap();
        let w1 = reduce_word(&[(0, 1), (1, -1)]);
        let w2 = reduce_word(&[(1, -1), (0, 1)]);
        let cat = reduce_word(&[(0, 1), (1, -1), (1, -1), (0, 1)]);
        let m1 = word_matrix(&group, &w1).unwrap();
        let m2 = word_matrix(&group, &w2).unwrap();
        let mc = word_matrix(&group, &cat).unwrap();
        assert!(m1.compose(&m2).projective_distance(&mc) < 1e-9);
    }

    #[test]
    fn empty_word_is_identity() {
        let group = build_group(ModelVariant::ProjOdd(1), 2, 3, None, 1e-3, &tol()).unwrap();
        let w = reduce_word(&[(0, 1), (0, -1)]);
        let m = word_matrix(&group, &w).unwrap();
        assert!(m.projective_distance(&Automorphism::identity(&group.model)) < 1e-12);
    }

    #[test]
    fn rank1_certificate_and_trivial_epsilon() {
        let group = build_group(ModelVariant::ProjOdd(1), 1, 5, None, 1e-3, &tol()).unwrap();
        assert_eq!(group.epsilons, vec![0.25]);
        let cert = certify_ping_pong(&group, 100, 4, &tol()).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
    }

    #[test]
    fn fundamental_domain_respects_window_and_seed() {
        let group = build_group(ModelVariant::ProjOdd(1), 2, 13, None, 1e-3, &tol()).unwrap();
        let pts = fundamental_domain_sample(&group, 32, 99, &tol()).unwrap();
        assert_eq!(pts.len(), 32);
        for j in 0..group.rank {
            let ev = group.evaluator(j).unwrap();
            let eps = group.epsilons[j];
            for x in &pts {
                let v = phi(&ev, x).unwrap();
                assert!(v >= eps && v <= 1.0 - eps);
            }
        }
        // determinism
        let again = fundamental_domain_sample(&group, 32, 99, &tol()).unwrap();
        for (a, b) in pts.iter().zip(&again) {
            let (va, vb) = (a.as_vector().unwrap(), b.as_vector().unwrap());
            assert_eq!(va.0, vb.0);
        }
    }

    #[test]
    fn miscalibrated_lambda_fails_validation() {
        let mut group = build_group(ModelVariant::ProjOdd(1), 2, 21, None, 1e-3, &tol()).unwrap();
        group.lambdas[0] = C64::new(1.5, 0.0); // breaks |lambda| = (1-eps)/eps
        assert!(matches!(
            group.validate(&tol()),
            Err(SchottkyError::BadSpec(_))
        ));
    }

    #[test]
    fn deliberately_weak_lambda_fails_inclusion_check() {
        let mut group = build_group(ModelVariant::ProjOdd(1), 2, 17, None, 1e-3, &tol()).unwrap();
        // shrink lambda and epsilon consistently so validation passes but the
        // neighborhoods are far too large for the contraction
        let eps = 0.49;
        group.epsilons = vec![eps; 2];
        group.lambdas = vec![C64::new((1.0 - eps) / eps, 0.0); 2];
        let result = certify_ping_pong(&group, 100, 2, &tol());
        match result {
            Err(SchottkyError::CertificateFailed { certificate, .. }) => {
                assert_eq!(certificate.verdict, Verdict::Fail);
            }
            Err(SchottkyError::SamplingStarved { .. }) => {}
            other => panic!("expected a failed certificate, got {other:?}"),
        }
    }

    #[test]
    fn q2_block_moves_disjoint_iff_invertibility_condition() {
        // On Q2 (n = 2) the unipotent block moves with B = [[0,b],[-b,0]],
        // C = [[0,c],[-c,0]] give I + BC = (1 - bc) I; the four cores are
        // pairwise disjoint exactly when b, c != 0 and bc != 1.
        let model = make_model(ModelVariant::QuadricEven(2)).unwrap();
        let (c0, c1, _) = crate::geom::schottky_pair_core(&model, &tol()).unwrap();
        let f_bc = |b: f64, c: f64| {
            let mut m = crate::numlin::ComplexMatrix::identity(4);
            // unipotent upper block B composed with lower block C
            m.0[(0, 3)] = C64::new(b, 0.0);
            m.0[(1, 2)] = C64::new(-b, 0.0);
            let mut lower = crate::numlin::ComplexMatrix::identity(4);
            lower.0[(2, 1)] = C64::new(c, 0.0);
            lower.0[(3, 0)] = C64::new(-c, 0.0);
            Automorphism::new(&model, crate::numlin::ComplexMatrix(&m.0 * &lower.0)).unwrap()
        };
        let disjoint = |b: f64, c: f64| {
            let f = f_bc(b, c);
            let m0 = move_core(&model, &f, &c0, &tol()).unwrap();
            let m1 = move_core(&model, &f, &c1, &tol()).unwrap();
            let mut ok = true;
            for (a, x) in [(&c0, &m0), (&c0, &m1), (&c1, &m0), (&c1, &m1)] {
                ok &= cores_disjoint(&model, a, x, &tol()).unwrap();
            }
            ok
        };
        assert!(disjoint(2.0, 3.0));
        assert!(!disjoint(0.0, 3.0));
        assert!(!disjoint(2.0, 0.0));
        assert!(!disjoint(2.0, 0.5)); // bc = 1
        assert!(disjoint(-1.5, 0.25));
    }

    #[test]
    fn nearly_touching_cores_fail_calibration() {
        // an adversarial move leaving the translated cores a hair away
        let model = make_model(ModelVariant::ProjOdd(1)).unwrap();
        let (c0, c1, op) = crate::geom::schottky_pair_core(&model, &tol()).unwrap();
        let theta = 1e-6f64;
        let mut m = crate::numlin::ComplexMatrix::identity(4);
        // rotate the (z1, w1) and (z2, w2) planes by a tiny angle
        for k in 0..2 {
            m.0[(k, k)] = C64::new(theta.cos(), 0.0);
            m.0[(k, k + 2)] = C64::new(-theta.sin(), 0.0);
            m.0[(k + 2, k)] = C64::new(theta.sin(), 0.0);
            m.0[(k + 2, k + 2)] = C64::new(theta.cos(), 0.0);
        }
        let f2 = Automorphism::new(&model, m).unwrap();
        let moves = vec![Automorphism::identity(&model), f2];
        let err = calibrate_epsilons(&model, &c0, &c1, &op, &moves, 1e-3, 5, &tol()).unwrap_err();
        assert!(matches!(err, SchottkyError::SeparationFailure { .. }));
    }

    #[test]
    fn limit_set_counts_match_word_counts() {
        let group = build_group(ModelVariant::ProjOdd(1), 2, 31, None, 1e-3, &tol()).unwrap();
        let cloud = limit_set_sample(&group, 3, 1).unwrap();
        // N_3 = 4 * 3^2 = 36 words, times 2r = 4 base points
        assert_eq!(cloud.rows.len(), 36 * 4);
        let d1 = limit_set_sample(&group, 1, 1).unwrap();
        assert_eq!(d1.rows.len(), 4 * 4);
    }

    #[test]
    fn certificates_are_bit_identical_for_equal_seeds() {
        let group = build_group(ModelVariant::ProjOdd(1), 2, 37, None, 1e-3, &tol()).unwrap();
        let a = run_certificate(&group, 120, 3, &tol()).unwrap();
        let b = run_certificate(&group, 120, 3, &tol()).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn mobius_group_recovers_classical_schottky_on_the_sphere() {
        use crate::geom::{reference_subspace, twistor_project};
        let group = build_group(ModelVariant::IsotropicGrass(2), 2, 53, None, 1e-3, &tol()).unwrap();
        let model = &group.model;
        let generators = group.generators().unwrap();
        let reference = reference_subspace(model, &tol()).unwrap();
        let sphere_angle = |a: &[f64], b: &[f64]| -> f64 {
            a.iter()
                .zip(b)
                .map(|(x, y)| x * y)
                .sum::<f64>()
                .clamp(-1.0, 1.0)
                .acos()
        };
        let mut rng = rng_stream(11, 7);
        for j in 0..group.rank {
            // anchors of the moved pair on the sphere
            let fref = group.moves[j]
                .apply(model, &ModelPoint::Subspace(reference.clone()))
                .unwrap();
            let source = twistor_project(model, &fref).unwrap();
            let target: Vec<f64> = source.iter().map(|x| -x).collect();
            let eps = group.epsilons[j];
            // the phi_j-ball around the source anchor is the spherical cap of
            // angle arccos(1 - 2 eps); its gamma_j-image lands in the
            // antipodal cap
            let cap = (1.0 - 2.0 * eps).acos();
            let ev = group.evaluator(j).unwrap();
            let mut checked = 0;
            while checked < 40 {
                let x = random_point(model, &mut rng);
                let a = phi(&ev, &x).unwrap();
                if a < 1e-9 || a > 1.0 - 1e-9 {
                    continue;
                }
                let level = rng.random::<f64>() * eps * 0.9;
                let y = flow_to_level(&group, j, &x, a, level.max(1e-12)).unwrap();
                let py = twistor_project(model, &y).unwrap();
                assert!(sphere_angle(&py, &source) <= cap + 1e-6);
                let img = generators[j].apply(model, &y).unwrap();
                let pimg = twistor_project(model, &img).unwrap();
                // the source cap maps into the complement of the target cap
                assert!(
                    sphere_angle(&pimg, &target) >= cap - 1e-6,
                    "image entered the target cap"
                );
                checked += 1;
            }
        }
    }

    #[test]
    fn group_spec_serde_roundtrip_preserves_generators() {
        let group = build_group(ModelVariant::ProjOdd(1), 2, 41, None, 1e-3, &tol()).unwrap();
        let json = serde_json::to_string(&group).unwrap();
        let back: SchottkyGroupSpec = serde_json::from_str(&json).unwrap();
        back.validate(&tol()).unwrap();
        for j in 0..group.rank {
            let a = group.generator(j).unwrap();
            let b = back.generator(j).unwrap();
            assert!(a.projective_distance(&b) < 1e-12);
        }
    }
}
