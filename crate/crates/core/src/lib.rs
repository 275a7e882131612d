//! Construction and certification of Schottky group actions on homogeneous
//! rational manifolds, together with the classification of minimal
//! hypersurface orbits by exact root-system computation and the invariants
//! of the quotient manifolds.

pub mod geom;
pub mod invariants;
pub mod numlin;
pub mod rootsys;
pub mod satake;
pub mod schottky;
pub mod structured;

pub use geom::{Automorphism, FlagModel, ModelPoint, ModelVariant, OneParamSubgroup, PhiEvaluator};
pub use numlin::{ComplexMatrix, SubspaceBasis, Tolerances, C64};
pub use rootsys::{ParabolicSubset, RootSystem, RootVector, TypeLabel};
pub use satake::{ClassificationRecord, RealFormSpec, SigmaInvolution};
pub use schottky::{MoveSearchOptions, PingPongCertificate, ReducedWord, SchottkyGroupSpec};
pub use invariants::{InvariantReport, LieSubalgebra};
