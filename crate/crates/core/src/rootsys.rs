//! Exact root systems and parabolic combinatorics.
//!
//! Coordinates are rationals with denominator 1 or 2, stored as integers
//! scaled by 2, so every computation in this module is exact. Positive
//! systems follow the explicit per-type coordinate conventions used
//! throughout the classification scan in [`crate::satake`].

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum RootSysError {
    #[error("unsupported type/rank combination: {0}")]
    UnsupportedType(String),
    #[error("vector is not a root of this system")]
    NotARoot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TypeLabel {
    A,
    B,
    C,
    D,
    E6,
    E7,
    /// Present only so classification records can cite its exclusion;
    /// [`build_root_system`] rejects it.
    E8,
    F4,
    G2,
}

impl fmt::Display for TypeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeLabel::A => write!(f, "A"),
            TypeLabel::B => write!(f, "B"),
            TypeLabel::C => write!(f, "C"),
            TypeLabel::D => write!(f, "D"),
            TypeLabel::E6 => write!(f, "E6"),
            TypeLabel::E7 => write!(f, "E7"),
            TypeLabel::E8 => write!(f, "E8"),
            TypeLabel::F4 => write!(f, "F4"),
            TypeLabel::G2 => write!(f, "G2"),
        }
    }
}

/// A root vector with exact coordinates, stored as integers scaled by 2.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RootVector {
    /// Twice the coordinates of the root in the ambient basis.
    pub coords2: Vec<i64>,
}

impl RootVector {
    pub fn new(coords2: Vec<i64>) -> Self {
        RootVector { coords2 }
    }

    /// Basis vector `e_k` (1-based), doubled representation.
    fn basis(k: usize, dim: usize) -> Self {
        let mut c = vec![0i64; dim];
        c[k - 1] = 2;
        RootVector { coords2: c }
    }

    pub fn neg(&self) -> Self {
        RootVector {
            coords2: self.coords2.iter().map(|x| -x).collect(),
        }
    }

    pub fn add(&self, other: &RootVector) -> Self {
        RootVector {
            coords2: self
                .coords2
                .iter()
                .zip(&other.coords2)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &RootVector) -> Self {
        RootVector {
            coords2: self
                .coords2
                .iter()
                .zip(&other.coords2)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coords2.iter().all(|&x| x == 0)
    }

    pub fn dim(&self) -> usize {
        self.coords2.len()
    }
}

impl fmt::Display for RootVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coords2
            .iter()
            .map(|&c| {
                if c % 2 == 0 {
                    format!("{}", c / 2)
                } else {
                    format!("{}/2", c)
                }
            })
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A finite irreducible root system with a fixed positive system and the
/// expansion of every root in the simple basis precomputed.
#[derive(Debug, Clone, Serialize)]
pub struct RootSystem {
    pub type_label: TypeLabel,
    pub rank: usize,
    pub ambient_dim: usize,
    pub roots: Vec<RootVector>,
    pub positive_roots: Vec<RootVector>,
    pub simple_roots: Vec<RootVector>,
    #[serde(skip)]
    index: HashMap<RootVector, usize>,
    #[serde(skip)]
    simple_coords: Vec<Vec<i64>>,
}

impl RootSystem {
    pub fn contains(&self, v: &RootVector) -> bool {
        self.index.contains_key(v)
    }

    pub fn root_index(&self, v: &RootVector) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn is_positive(&self, v: &RootVector) -> bool {
        self.index
            .get(v)
            .map(|&i| self.simple_coords[i].iter().all(|&c| c >= 0))
            .unwrap_or(false)
    }
}

fn admissible(t: TypeLabel, rank: usize) -> Result<(), RootSysError> {
    let ok = match t {
        TypeLabel::A => rank >= 1,
        TypeLabel::B => rank >= 1,
        TypeLabel::C => rank >= 2,
        TypeLabel::D => rank >= 4,
        TypeLabel::E6 => rank == 6,
        TypeLabel::E7 => rank == 7,
        TypeLabel::E8 => false,
        TypeLabel::F4 => rank == 4,
        TypeLabel::G2 => rank == 2,
    };
    if ok {
        Ok(())
    } else {
        Err(RootSysError::UnsupportedType(format!(
            "type {t} does not admit rank {rank} (E8 and other combinations are out of scope)"
        )))
    }
}

/// Builds the root system of the given type and rank in its standard
/// coordinates, with the fixed positive system used by the classification.
pub fn build_root_system(t: TypeLabel, rank: usize) -> Result<RootSystem, RootSysError> {
    admissible(t, rank)?;
    let (ambient, roots, simple): (usize, Vec<RootVector>, Vec<RootVector>) = match t {
        TypeLabel::E8 => unreachable!("rejected by the admissibility check"),
        TypeLabel::A => {
            let dim = rank + 1;
            let mut roots = Vec::new();
            for k in 1..=dim {
                for l in (k + 1)..=dim {
                    let r = RootVector::basis(k, dim).sub(&RootVector::basis(l, dim));
                    roots.push(r.clone());
                    roots.push(r.neg());
                }
            }
            let simple = (1..=rank)
                .map(|k| RootVector::basis(k, dim).sub(&RootVector::basis(k + 1, dim)))
                .collect();
            (dim, roots, simple)
        }
        TypeLabel::B => {
            let n = rank;
            let mut roots = Vec::new();
            for k in 1..=n {
                let e = RootVector::basis(k, n);
                roots.push(e.clone());
                roots.push(e.neg());
            }
            push_pm_pairs(&mut roots, n);
            let mut simple: Vec<RootVector> = (1..n)
                .map(|k| RootVector::basis(k, n).sub(&RootVector::basis(k + 1, n)))
                .collect();
            simple.push(RootVector::basis(n, n));
            (n, roots, simple)
        }
        TypeLabel::C => {
            let n = rank;
            let mut roots = Vec::new();
            for k in 1..=n {
                let e2 = RootVector::new({
                    let mut c = vec![0i64; n];
                    c[k - 1] = 4;
                    c
                });
                roots.push(e2.clone());
                roots.push(e2.neg());
            }
            push_pm_pairs(&mut roots, n);
            let mut simple: Vec<RootVector> = (1..n)
                .map(|k| RootVector::basis(k, n).sub(&RootVector::basis(k + 1, n)))
                .collect();
            simple.push(RootVector::new({
                let mut c = vec![0i64; n];
                c[n - 1] = 4;
                c
            }));
            (n, roots, simple)
        }
        TypeLabel::D => {
            let n = rank;
            let mut roots = Vec::new();
            push_pm_pairs(&mut roots, n);
            let mut simple: Vec<RootVector> = (1..n)
                .map(|k| RootVector::basis(k, n).sub(&RootVector::basis(k + 1, n)))
                .collect();
            simple.push(RootVector::basis(n - 1, n).add(&RootVector::basis(n, n)));
            (n, roots, simple)
        }
        TypeLabel::E6 => {
            // ambient R^8, V = { x6 = x7 = -x8 }
            let mut roots = Vec::new();
            for k in 1..=5usize {
                for l in (k + 1)..=5 {
                    for (sk, sl) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                        let mut c = vec![0i64; 8];
                        c[k - 1] = 2 * sk;
                        c[l - 1] = 2 * sl;
                        roots.push(RootVector::new(c));
                    }
                }
            }
            for mask in 0..32u32 {
                let mut c = vec![0i64; 8];
                let mut prod = 1i64;
                for k in 0..5 {
                    let s = if mask & (1 << k) != 0 { -1 } else { 1 };
                    prod *= s;
                    c[k] = s;
                }
                // x6 = x7 = -x8 with the even-sign-count constraint of the
                // ambient E8 lattice forces the tail signs:
                let s6 = -prod;
                c[5] = s6;
                c[6] = s6;
                c[7] = -s6;
                roots.push(RootVector::new(c));
            }
            let simple = e_series_simple(6);
            (8, roots, simple)
        }
        TypeLabel::E7 => {
            // ambient R^8, V = { x8 = -x7 }
            let mut roots = Vec::new();
            for k in 1..=6usize {
                for l in (k + 1)..=6 {
                    for (sk, sl) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                        let mut c = vec![0i64; 8];
                        c[k - 1] = 2 * sk;
                        c[l - 1] = 2 * sl;
                        roots.push(RootVector::new(c));
                    }
                }
            }
            for s in [1i64, -1] {
                let mut c = vec![0i64; 8];
                c[6] = -2 * s;
                c[7] = 2 * s;
                roots.push(RootVector::new(c));
            }
            for mask in 0..64u32 {
                let mut c = vec![0i64; 8];
                let mut prod = 1i64;
                for k in 0..6 {
                    let s = if mask & (1 << k) != 0 { -1 } else { 1 };
                    prod *= s;
                    c[k] = s;
                }
                if prod != -1 {
                    continue;
                }
                for s7 in [1i64, -1] {
                    let mut cc = c.clone();
                    cc[6] = s7;
                    cc[7] = -s7;
                    roots.push(RootVector::new(cc));
                }
            }
            let simple = e_series_simple(7);
            (8, roots, simple)
        }
        TypeLabel::F4 => {
            let n = 4usize;
            let mut roots = Vec::new();
            for k in 1..=n {
                let e = RootVector::basis(k, n);
                roots.push(e.clone());
                roots.push(e.neg());
            }
            push_pm_pairs(&mut roots, n);
            for mask in 0..16u32 {
                let c: Vec<i64> = (0..4)
                    .map(|k| if mask & (1 << k) != 0 { -1 } else { 1 })
                    .collect();
                roots.push(RootVector::new(c));
            }
            let simple = vec![
                RootVector::new(vec![1, -1, -1, -1]),
                RootVector::basis(4, n),
                RootVector::basis(3, n).sub(&RootVector::basis(4, n)),
                RootVector::basis(2, n).sub(&RootVector::basis(3, n)),
            ];
            (n, roots, simple)
        }
        TypeLabel::G2 => {
            // hyperplane model in R^3
            let mut roots = Vec::new();
            for (k, l) in [(1usize, 2usize), (2, 3), (1, 3)] {
                let r = RootVector::basis(k, 3).sub(&RootVector::basis(l, 3));
                roots.push(r.clone());
                roots.push(r.neg());
            }
            for (k, l, m) in [(1usize, 2usize, 3usize), (2, 1, 3), (3, 1, 2)] {
                let mut c = vec![0i64; 3];
                c[k - 1] = 4;
                c[l - 1] = -2;
                c[m - 1] = -2;
                let r = RootVector::new(c);
                roots.push(r.clone());
                roots.push(r.neg());
            }
            let simple = vec![
                RootVector::new(vec![2, -2, 0]),
                RootVector::new(vec![-4, 2, 2]),
            ];
            (3, roots, simple)
        }
    };

    assemble(t, rank, ambient, roots, simple)
}

fn push_pm_pairs(roots: &mut Vec<RootVector>, n: usize) {
    for k in 1..=n {
        for l in (k + 1)..=n {
            for (sk, sl) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                let mut c = vec![0i64; n];
                c[k - 1] = 2 * sk;
                c[l - 1] = 2 * sl;
                roots.push(RootVector::new(c));
            }
        }
    }
}

fn e_series_simple(rank: usize) -> Vec<RootVector> {
    // alpha_1 = (e1 - e2 - ... - e7 + e8)/2, alpha_2 = e1 + e2,
    // alpha_j = e_{j-1} - e_{j-2} for 3 <= j <= rank
    let mut simple = Vec::with_capacity(rank);
    simple.push(RootVector::new(vec![1, -1, -1, -1, -1, -1, -1, 1]));
    simple.push(RootVector::new(vec![2, 2, 0, 0, 0, 0, 0, 0]));
    for j in 3..=rank {
        let mut c = vec![0i64; 8];
        c[j - 2] = 2;
        c[j - 3] = -2;
        simple.push(RootVector::new(c));
    }
    simple
}

fn assemble(
    t: TypeLabel,
    rank: usize,
    ambient: usize,
    roots: Vec<RootVector>,
    simple: Vec<RootVector>,
) -> Result<RootSystem, RootSysError> {
    assert_eq!(simple.len(), rank, "simple root count must equal the rank");
    let mut index = HashMap::with_capacity(roots.len());
    for (i, r) in roots.iter().enumerate() {
        assert!(!r.is_zero(), "roots are nonzero");
        let prev = index.insert(r.clone(), i);
        assert!(prev.is_none(), "duplicate root generated");
    }
    for r in &roots {
        assert!(index.contains_key(&r.neg()), "roots closed under negation");
    }

    let mut simple_coords = Vec::with_capacity(roots.len());
    for r in &roots {
        let c = solve_in_simple_basis(&simple, r).ok_or(RootSysError::NotARoot)?;
        let all_nonneg = c.iter().all(|&x| x >= 0);
        let all_nonpos = c.iter().all(|&x| x <= 0);
        assert!(
            all_nonneg || all_nonpos,
            "root coordinates must have a single sign"
        );
        simple_coords.push(c);
    }

    let positive_roots: Vec<RootVector> = roots
        .iter()
        .zip(&simple_coords)
        .filter(|(_, c)| c.iter().all(|&x| x >= 0))
        .map(|(r, _)| r.clone())
        .collect();
    assert_eq!(
        positive_roots.len() * 2,
        roots.len(),
        "positive roots are half of all roots"
    );

    Ok(RootSystem {
        type_label: t,
        rank,
        ambient_dim: ambient,
        roots,
        positive_roots,
        simple_roots: simple,
        index,
        simple_coords,
    })
}

/// Exact solve of `sum_i c_i alpha_i = v` over the rationals; returns the
/// integer coefficient vector when one exists.
fn solve_in_simple_basis(simple: &[RootVector], v: &RootVector) -> Option<Vec<i64>> {
    type Q = Ratio<i128>;
    let rank = simple.len();
    let dim = v.dim();
    // augmented system [alpha_1 ... alpha_rank | v] over doubled coordinates
    let mut m: Vec<Vec<Q>> = (0..dim)
        .map(|row| {
            let mut r: Vec<Q> = simple
                .iter()
                .map(|s| Q::from_integer(s.coords2[row] as i128))
                .collect();
            r.push(Q::from_integer(v.coords2[row] as i128));
            r
        })
        .collect();

    let mut pivot_rows = Vec::new();
    let mut row = 0;
    for col in 0..rank {
        let Some(p) = (row..dim).find(|&r| m[r][col] != Q::from_integer(0)) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col];
        for x in m[row].iter_mut() {
            *x /= inv;
        }
        for r in 0..dim {
            if r != row && m[r][col] != Q::from_integer(0) {
                let f = m[r][col];
                for c in col..=rank {
                    let sub = f * m[row][c];
                    m[r][c] -= sub;
                }
            }
        }
        pivot_rows.push((row, col));
        row += 1;
    }
    // consistency: zero rows must have zero rhs
    for r in row..dim {
        if m[r][rank] != Q::from_integer(0) {
            return None;
        }
    }
    if pivot_rows.len() != rank {
        return None;
    }
    let mut out = vec![0i64; rank];
    for &(r, c) in &pivot_rows {
        let val = m[r][rank];
        if !val.is_integer() {
            return None;
        }
        out[c] = i64::try_from(val.to_integer()).ok()?;
    }
    Some(out)
}

/// Expansion of a root in the simple basis; coefficients are integers of a
/// single sign.
pub fn simple_coordinates(rs: &RootSystem, root: &RootVector) -> Result<Vec<i64>, RootSysError> {
    rs.root_index(root)
        .map(|i| rs.simple_coords[i].clone())
        .ok_or(RootSysError::NotARoot)
}

/// The combinatorial data of the parabolic subalgebra attached to a subset
/// of simple roots: the Levi root set and the nilradical root set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParabolicSubset {
    /// Indices (0-based) into the simple system.
    pub gamma: Vec<usize>,
    pub levi_roots: Vec<RootVector>,
    pub nilradical: Vec<RootVector>,
}

/// Splits the root system along a subset of simple-root indices: the Levi
/// part is the integer span of the subset intersected with the roots, the
/// nilradical is the rest of the positive system.
pub fn parabolic(rs: &RootSystem, gamma_indices: &[usize]) -> ParabolicSubset {
    let mut gamma: Vec<usize> = gamma_indices.to_vec();
    gamma.sort_unstable();
    gamma.dedup();
    assert!(
        gamma.iter().all(|&i| i < rs.rank),
        "gamma indices must be valid simple-root indices"
    );
    let in_gamma = |i: usize| gamma.binary_search(&i).is_ok();
    let mut levi_roots = Vec::new();
    let mut nilradical = Vec::new();
    for (r, c) in rs.roots.iter().zip(&rs.simple_coords) {
        let supported = c
            .iter()
            .enumerate()
            .all(|(i, &x)| x == 0 || in_gamma(i));
        if supported {
            levi_roots.push(r.clone());
        } else if c.iter().all(|&x| x >= 0) {
            nilradical.push(r.clone());
        }
    }
    ParabolicSubset {
        gamma,
        levi_roots,
        nilradical,
    }
}
