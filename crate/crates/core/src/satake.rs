//! Real-form involutions on root systems and the minimal-orbit
//! classification scan.
//!
//! Each supported real form induces an exact involution `sigma` on the root
//! system of its complexification. The codimension of the minimal real-form
//! orbit in `G/Q_Gamma` equals the cardinality of the intersection of the
//! nilradical root set with its sigma image; the scan enumerates all `2^rank`
//! parabolic subsets per form and records that number. Forms without a second
//! conjugacy class of Cartan subalgebras never produce a compact hypersurface
//! orbit and appear as excluded records carrying the reason.

use crate::rootsys::{
    build_root_system, parabolic, simple_coordinates, RootSysError, RootSystem, RootVector,
    TypeLabel,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum SatakeError {
    #[error("unsupported real form: {0}")]
    UnsupportedRealForm(String),
    #[error("real form {form} is not compatible with {type_label}{rank}")]
    IncompatibleForm {
        form: String,
        type_label: TypeLabel,
        rank: usize,
    },
    #[error("involution is inconsistent: {0}")]
    InconsistentInvolution(String),
    #[error(transparent)]
    RootSys(#[from] RootSysError),
}

/// A non-compact real form of a simple complex Lie algebra, identified by
/// family and parameters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum RealFormSpec {
    /// su(p,q) with 1 <= p <= q, p + q = rank + 1 (type A)
    Su { p: usize, q: usize },
    /// so(p,q) with 1 <= p <= q; p + q odd is type B, even is type D
    So { p: usize, q: usize },
    /// sp(p,q) with 1 <= p <= q, p + q = rank (type C)
    Sp { p: usize, q: usize },
    /// so*(2n) (type D, rank n)
    SoStar { n: usize },
    EII,
    EIII,
    EVI,
    EVII,
    FII,
    /// split form of the ambient type; sigma is the identity
    Split,
}

impl fmt::Display for RealFormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealFormSpec::Su { p, q } => write!(f, "su({p},{q})"),
            RealFormSpec::So { p, q } => write!(f, "so({p},{q})"),
            RealFormSpec::Sp { p, q } => write!(f, "sp({p},{q})"),
            RealFormSpec::SoStar { n } => write!(f, "so*({})", 2 * n),
            RealFormSpec::EII => write!(f, "EII"),
            RealFormSpec::EIII => write!(f, "EIII"),
            RealFormSpec::EVI => write!(f, "EVI"),
            RealFormSpec::EVII => write!(f, "EVII"),
            RealFormSpec::FII => write!(f, "FII"),
            RealFormSpec::Split => write!(f, "split"),
        }
    }
}

/// The involution induced by a real form on the root system, stored as an
/// exact permutation of the roots together with the set of imaginary roots.
#[derive(Debug, Clone, Serialize)]
pub struct SigmaInvolution {
    pub form: RealFormSpec,
    /// Image root index for every root index.
    root_perm: Vec<usize>,
    /// Whether each root is imaginary (sigma(alpha) = -alpha).
    imaginary: Vec<bool>,
}

impl SigmaInvolution {
    pub fn image_index(&self, root_idx: usize) -> usize {
        self.root_perm[root_idx]
    }

    pub fn image<'a>(&self, rs: &'a RootSystem, root: &RootVector) -> Option<&'a RootVector> {
        rs.root_index(root)
            .map(|i| &rs.roots[self.root_perm[i]])
    }

    pub fn is_imaginary(&self, rs: &RootSystem, root: &RootVector) -> bool {
        rs.root_index(root).map(|i| self.imaginary[i]).unwrap_or(false)
    }
}

/// How sigma acts, before it is expanded to a root permutation.
enum SigmaAction {
    /// Signed permutation on the ambient coordinates: `e_k -> sign * e_{img}`,
    /// both stored 0-based.
    Coordinate(Vec<(usize, i64)>),
    /// Image of each simple root expressed in the simple basis.
    SimpleTable(Vec<Vec<i64>>),
    Identity,
}

fn coordinate_action(action: &[(usize, i64)], v: &RootVector) -> RootVector {
    let mut out = vec![0i64; v.dim()];
    for (k, &c) in v.coords2.iter().enumerate() {
        let (img, sign) = action[k];
        out[img] += sign * c;
    }
    RootVector::new(out)
}

fn table_action(rs: &RootSystem, table: &[Vec<i64>], v: &RootVector) -> Option<RootVector> {
    let coords = simple_coordinates(rs, v).ok()?;
    let mut out = RootVector::new(vec![0i64; rs.ambient_dim]);
    for (ci, c) in coords.iter().enumerate() {
        if *c == 0 {
            continue;
        }
        for (sj, t) in table[ci].iter().enumerate() {
            let w = c * t;
            if w == 0 {
                continue;
            }
            let alpha = &rs.simple_roots[sj];
            let scaled = RootVector::new(alpha.coords2.iter().map(|x| x * w).collect());
            out = out.add(&scaled);
        }
    }
    Some(out)
}

/// Why a real form is excluded from the computed scan.
fn exclusion_citation(t: TypeLabel, form_name: &str) -> Option<String> {
    match (t, form_name) {
        (TypeLabel::A, "sl(n,H)") => Some(
            "sl(n,H) contains only one Cartan subalgebra up to conjugation, so its minimal orbit is never a hypersurface"
                .into(),
        ),
        (TypeLabel::D, "so(1,2n-1)") => Some(
            "so(1,2n-1) contains only one conjugacy class of Cartan subalgebras, so its minimal orbit is never a hypersurface"
                .into(),
        ),
        _ => None,
    }
}

fn sigma_action_for(
    rs: &RootSystem,
    form: &RealFormSpec,
) -> Result<SigmaAction, SatakeError> {
    let incompatible = || SatakeError::IncompatibleForm {
        form: form.to_string(),
        type_label: rs.type_label,
        rank: rs.rank,
    };
    match (rs.type_label, form) {
        (TypeLabel::A, RealFormSpec::Su { p, q }) => {
            let n = rs.rank;
            if !(1 <= *p && p <= q && p + q == n + 1) {
                return Err(incompatible());
            }
            let dim = n + 1;
            let mut action = vec![(0usize, 0i64); dim];
            for k in 1..=dim {
                if k <= *p || k >= q + 1 {
                    action[k - 1] = (dim - k, -1); // e_k -> -e_{n+2-k}
                } else {
                    action[k - 1] = (k - 1, -1); // e_k -> -e_k
                }
            }
            Ok(SigmaAction::Coordinate(action))
        }
        (TypeLabel::B, RealFormSpec::So { p, q }) => {
            let n = rs.rank;
            if !(1 <= *p && p <= q && p + q == 2 * n + 1) {
                return Err(incompatible());
            }
            let mut action = vec![(0usize, 0i64); n];
            for k in 1..=n {
                action[k - 1] = (k - 1, if k <= *p { 1 } else { -1 });
            }
            Ok(SigmaAction::Coordinate(action))
        }
        (TypeLabel::C, RealFormSpec::Sp { p, q }) => {
            let n = rs.rank;
            if !(1 <= *p && p <= q && p + q == n) {
                return Err(incompatible());
            }
            let mut action = vec![(0usize, 0i64); n];
            for k in 1..=n {
                action[k - 1] = if k <= 2 * p {
                    if k % 2 == 1 {
                        (k, 1) // e_k -> e_{k+1}
                    } else {
                        (k - 2, 1) // e_k -> e_{k-1}
                    }
                } else {
                    (k - 1, -1)
                };
            }
            Ok(SigmaAction::Coordinate(action))
        }
        (TypeLabel::D, RealFormSpec::So { p, q }) => {
            let n = rs.rank;
            if !(p <= q && p + q == 2 * n) {
                return Err(incompatible());
            }
            if *p == 1 {
                return Err(SatakeError::UnsupportedRealForm(
                    exclusion_citation(TypeLabel::D, "so(1,2n-1)").unwrap(),
                ));
            }
            let mut action = vec![(0usize, 0i64); n];
            for k in 1..=n {
                action[k - 1] = (k - 1, if k <= *p { 1 } else { -1 });
            }
            Ok(SigmaAction::Coordinate(action))
        }
        (TypeLabel::D, RealFormSpec::SoStar { n }) => {
            if *n != rs.rank {
                return Err(incompatible());
            }
            let n = *n;
            let mut action = vec![(0usize, 0i64); n];
            let paired = if n % 2 == 0 { n } else { n - 1 };
            for k in 1..=paired {
                action[k - 1] = if k % 2 == 1 { (k, 1) } else { (k - 2, 1) };
            }
            if n % 2 == 1 {
                action[n - 1] = (n - 1, -1);
            }
            Ok(SigmaAction::Coordinate(action))
        }
        (TypeLabel::E6, RealFormSpec::EII) => {
            // sigma permutes the simple roots: 1<->6, 3<->5, 2 and 4 fixed
            let mut table = vec![vec![0i64; 6]; 6];
            let perm = [5usize, 1, 4, 3, 2, 0];
            for (i, &j) in perm.iter().enumerate() {
                table[i][j] = 1;
            }
            Ok(SigmaAction::SimpleTable(table))
        }
        (TypeLabel::E6, RealFormSpec::EIII) => {
            // imaginary simple roots: alpha_3, alpha_4, alpha_5
            let mut table = vec![vec![0i64; 6]; 6];
            table[0] = vec![0, 0, 1, 1, 1, 1]; // s(a1) = a6 + a3 + a4 + a5
            table[1] = vec![0, 1, 1, 2, 1, 0]; // s(a2) = a2 + a3 + 2a4 + a5
            table[2] = vec![0, 0, -1, 0, 0, 0];
            table[3] = vec![0, 0, 0, -1, 0, 0];
            table[4] = vec![0, 0, 0, 0, -1, 0];
            table[5] = vec![1, 0, 1, 1, 1, 0]; // s(a6) = a1 + a3 + a4 + a5
            Ok(SigmaAction::SimpleTable(table))
        }
        (TypeLabel::E7, RealFormSpec::EVI) => {
            // imaginary simple roots: alpha_2, alpha_5, alpha_7
            let mut table = vec![vec![0i64; 7]; 7];
            table[0][0] = 1;
            table[1][1] = -1;
            table[2][2] = 1;
            table[3] = vec![0, 1, 0, 1, 1, 0, 0]; // s(a4) = a2 + a4 + a5
            table[4][4] = -1;
            table[5] = vec![0, 0, 0, 0, 1, 1, 1]; // s(a6) = a5 + a6 + a7
            table[6][6] = -1;
            Ok(SigmaAction::SimpleTable(table))
        }
        (TypeLabel::E7, RealFormSpec::EVII) => {
            // imaginary simple roots: alpha_2 .. alpha_5
            let mut table = vec![vec![0i64; 7]; 7];
            table[0] = vec![1, 1, 2, 2, 1, 0, 0]; // s(a1) = a1 + a2 + 2a3 + 2a4 + a5
            table[1][1] = -1;
            table[2][2] = -1;
            table[3][3] = -1;
            table[4][4] = -1;
            table[5] = vec![0, 1, 1, 2, 2, 1, 0]; // s(a6) = a2 + a3 + 2a4 + 2a5 + a6
            table[6][6] = 1;
            Ok(SigmaAction::SimpleTable(table))
        }
        (TypeLabel::F4, RealFormSpec::FII) => {
            // equivalently sigma(e1) = e1, sigma(e_k) = -e_k for k >= 2
            let mut action = vec![(0usize, 0i64); 4];
            action[0] = (0, 1);
            for k in 2..=4 {
                action[k - 1] = (k - 1, -1);
            }
            Ok(SigmaAction::Coordinate(action))
        }
        (_, RealFormSpec::Split) => Ok(SigmaAction::Identity),
        _ => Err(incompatible()),
    }
}

/// Constructs the involution of a real form on the given root system and
/// verifies the involution axioms exactly.
pub fn sigma_for(rs: &RootSystem, form: &RealFormSpec) -> Result<SigmaInvolution, SatakeError> {
    let action = sigma_action_for(rs, form)?;
    let nroots = rs.roots.len();
    let mut root_perm = vec![0usize; nroots];
    for (i, r) in rs.roots.iter().enumerate() {
        let img = match &action {
            SigmaAction::Coordinate(a) => coordinate_action(a, r),
            SigmaAction::SimpleTable(t) => table_action(rs, t, r).ok_or_else(|| {
                SatakeError::InconsistentInvolution(format!("no simple expansion for {r}"))
            })?,
            SigmaAction::Identity => r.clone(),
        };
        root_perm[i] = rs.root_index(&img).ok_or_else(|| {
            SatakeError::InconsistentInvolution(format!(
                "sigma({r}) = {img} is not a root of {}{}",
                rs.type_label, rs.rank
            ))
        })?;
    }
    // sigma^2 = id on the roots
    for i in 0..nroots {
        if root_perm[root_perm[i]] != i {
            return Err(SatakeError::InconsistentInvolution(format!(
                "sigma^2 moves {}",
                rs.roots[i]
            )));
        }
    }
    let imaginary: Vec<bool> = (0..nroots)
        .map(|i| rs.roots[root_perm[i]] == rs.roots[i].neg())
        .collect();
    // sigma-order: sigma maps the non-imaginary positive roots to themselves
    for (i, r) in rs.roots.iter().enumerate() {
        if rs.is_positive(r) && !imaginary[i] && !rs.is_positive(&rs.roots[root_perm[i]]) {
            return Err(SatakeError::InconsistentInvolution(format!(
                "positive system is not a sigma-order: sigma({r}) is negative and not imaginary"
            )));
        }
    }
    Ok(SigmaInvolution {
        form: form.clone(),
        root_perm,
        imaginary,
    })
}

/// The roots of the nilradical fixed set `Gamma^n intersect sigma(Gamma^n)`;
/// its cardinality is the real codimension of the minimal orbit.
pub fn nilradical_sigma_witnesses(
    rs: &RootSystem,
    sigma: &SigmaInvolution,
    gamma_indices: &[usize],
) -> Vec<RootVector> {
    let p = parabolic(rs, gamma_indices);
    nilradical_witnesses_of(rs, sigma, &p.nilradical)
}

fn nilradical_witnesses_of(
    rs: &RootSystem,
    sigma: &SigmaInvolution,
    nilradical: &[RootVector],
) -> Vec<RootVector> {
    let nil_idx: std::collections::HashSet<usize> = nilradical
        .iter()
        .map(|r| rs.root_index(r).expect("nilradical roots belong to the system"))
        .collect();
    nilradical
        .iter()
        .filter(|r| {
            let i = rs.root_index(r).unwrap();
            nil_idx.contains(&sigma.root_perm[i])
        })
        .cloned()
        .collect()
}

/// Real codimension of the minimal real-form orbit in `G/Q_Gamma`.
pub fn minimal_orbit_codim(
    rs: &RootSystem,
    sigma: &SigmaInvolution,
    gamma_indices: &[usize],
) -> usize {
    nilradical_sigma_witnesses(rs, sigma, gamma_indices).len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Computed,
    ExcludedWithCitation,
}

/// One entry of the classification scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRecord {
    pub type_label: TypeLabel,
    pub rank: usize,
    pub real_form: String,
    /// Kept simple-root indices (1-based), empty for excluded records.
    pub gamma_indices: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub codim: Option<usize>,
    pub is_hypersurface: bool,
    pub manifold_name: String,
    pub status: RecordStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub citation: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub witnesses: Vec<String>,
}

/// Names the flag manifold `G/Q_Gamma` for maximal parabolic subsets of the
/// classical types; everything else gets a generic label.
fn manifold_name(t: TypeLabel, rank: usize, removed: &[usize]) -> String {
    if removed.len() == 1 {
        let k = removed[0]; // 1-based index of the removed simple root
        match t {
            TypeLabel::A => {
                let n = rank;
                if k == 1 || k == n {
                    format!("P_{n}")
                } else {
                    format!("Gr_{k}(C^{})", n + 1)
                }
            }
            TypeLabel::B => {
                let n = rank;
                if k == n {
                    format!("IGr_{n}(C^{})", 2 * n + 1)
                } else {
                    format!("OGr_{k}(C^{})", 2 * n + 1)
                }
            }
            TypeLabel::C => {
                let n = rank;
                if k == 1 {
                    format!("P_{}", 2 * n - 1)
                } else {
                    format!("SGr_{k}(C^{})", 2 * n)
                }
            }
            TypeLabel::D => {
                let n = rank;
                if k == 1 {
                    format!("Q_{}", 2 * n - 2)
                } else if k == n - 1 || k == n {
                    format!("IGr_{n}(C^{})^0", 2 * n)
                } else {
                    format!("OGr_{k}(C^{})", 2 * n)
                }
            }
            _ => format!("{t}{rank}/Q_(Pi minus alpha_{k})"),
        }
    } else {
        format!(
            "{t}{rank}/Q_(Pi minus {{{}}})",
            removed
                .iter()
                .map(|k| format!("alpha_{k}"))
                .collect::<Vec<_>>()
                .join(",")
        )
    }
}

/// All supported real forms of a given type and rank, in deterministic order,
/// plus the excluded families as `(display name, citation)` pairs.
fn forms_for(t: TypeLabel, rank: usize) -> (Vec<RealFormSpec>, Vec<(String, String)>) {
    let mut forms = Vec::new();
    let mut excluded = Vec::new();
    match t {
        TypeLabel::A => {
            let n = rank;
            for p in 1..=(n + 1) / 2 {
                forms.push(RealFormSpec::Su { p, q: n + 1 - p });
            }
            forms.push(RealFormSpec::Split);
            // sl(m, H) exists for n + 1 = 2m, noncompact for m >= 2
            if (n + 1) % 2 == 0 && n + 1 >= 4 {
                excluded.push((
                    format!("sl({},H)", (n + 1) / 2),
                    exclusion_citation(TypeLabel::A, "sl(n,H)").unwrap(),
                ));
            }
        }
        TypeLabel::B => {
            let n = rank;
            // so(n, n+1) with p = n is the split form
            for p in 1..=n {
                forms.push(RealFormSpec::So { p, q: 2 * n + 1 - p });
            }
        }
        TypeLabel::C => {
            let n = rank;
            for p in 1..=n / 2 {
                forms.push(RealFormSpec::Sp { p, q: n - p });
            }
            forms.push(RealFormSpec::Split); // sp(n, R)
        }
        TypeLabel::D => {
            let n = rank;
            // so(n, n) with p = n is the split form
            for p in 2..=n {
                forms.push(RealFormSpec::So { p, q: 2 * n - p });
            }
            forms.push(RealFormSpec::SoStar { n });
            excluded.push((
                format!("so(1,{})", 2 * n - 1),
                exclusion_citation(TypeLabel::D, "so(1,2n-1)").unwrap(),
            ));
        }
        TypeLabel::E6 => {
            forms.push(RealFormSpec::EII);
            forms.push(RealFormSpec::EIII);
            forms.push(RealFormSpec::Split); // EI
        }
        TypeLabel::E7 => {
            forms.push(RealFormSpec::EVI);
            forms.push(RealFormSpec::EVII);
            forms.push(RealFormSpec::Split); // EV
        }
        TypeLabel::F4 => {
            forms.push(RealFormSpec::FII);
            forms.push(RealFormSpec::Split); // FI
        }
        TypeLabel::G2 => {
            // the only non-compact real form of G2 is split
            forms.push(RealFormSpec::Split);
        }
        TypeLabel::E8 => {}
    }
    (forms, excluded)
}

/// Enumerates every supported `(type, rank <= max_rank, real form, Gamma)`
/// and records the minimal-orbit codimension; excluded forms and the E8
/// family appear as citation records.
pub fn classify_all(max_rank: usize) -> Result<Vec<ClassificationRecord>, SatakeError> {
    assert!(max_rank >= 2, "classification scan needs max_rank >= 2");
    let mut records = Vec::new();

    let mut systems: Vec<(TypeLabel, usize)> = Vec::new();
    for n in 1..=max_rank {
        systems.push((TypeLabel::A, n));
    }
    for n in 2..=max_rank {
        systems.push((TypeLabel::B, n));
    }
    for n in 2..=max_rank {
        systems.push((TypeLabel::C, n));
    }
    for n in 4..=max_rank {
        systems.push((TypeLabel::D, n));
    }
    if max_rank >= 6 {
        systems.push((TypeLabel::E6, 6));
    }
    if max_rank >= 7 {
        systems.push((TypeLabel::E7, 7));
    }
    if max_rank >= 4 {
        systems.push((TypeLabel::F4, 4));
    }
    systems.push((TypeLabel::G2, 2));

    for (t, rank) in systems {
        let rs = build_root_system(t, rank)?;
        let (forms, excluded) = forms_for(t, rank);
        for form in forms {
            let sigma = sigma_for(&rs, &form)?;
            // parallel map over the parabolic subsets, in mask order
            let mut chunk: Vec<ClassificationRecord> = (0..(1u64 << rank))
                .into_par_iter()
                .map(|mask| {
                    let gamma: Vec<usize> =
                        (0..rank).filter(|&i| mask & (1 << i) != 0).collect();
                    let witnesses = nilradical_sigma_witnesses(&rs, &sigma, &gamma);
                    let codim = witnesses.len();
                    let removed: Vec<usize> = (0..rank)
                        .filter(|&i| mask & (1 << i) == 0)
                        .map(|i| i + 1)
                        .collect();
                    ClassificationRecord {
                        type_label: t,
                        rank,
                        real_form: form.to_string(),
                        gamma_indices: gamma.iter().map(|&i| i + 1).collect(),
                        codim: Some(codim),
                        is_hypersurface: codim == 1,
                        manifold_name: manifold_name(t, rank, &removed),
                        status: RecordStatus::Computed,
                        citation: None,
                        witnesses: witnesses.iter().map(|w| w.to_string()).collect(),
                    }
                })
                .collect();
            records.append(&mut chunk);
        }
        for (name, citation) in excluded {
            records.push(ClassificationRecord {
                type_label: t,
                rank,
                real_form: name,
                gamma_indices: Vec::new(),
                codim: None,
                is_hypersurface: false,
                manifold_name: String::new(),
                status: RecordStatus::ExcludedWithCitation,
                citation: Some(citation),
                witnesses: Vec::new(),
            });
        }
    }

    if max_rank >= 8 {
        records.push(ClassificationRecord {
            type_label: TypeLabel::E8,
            rank: 8,
            real_form: "E8 (all real forms)".into(),
            gamma_indices: Vec::new(),
            codim: None,
            is_hypersurface: false,
            manifold_name: String::new(),
            status: RecordStatus::ExcludedWithCitation,
            citation: Some(
                "no real form of E8 can have a compact hypersurface orbit in any homogeneous rational manifold"
                    .into(),
            ),
            witnesses: Vec::new(),
        });
    }

    Ok(records)
}
