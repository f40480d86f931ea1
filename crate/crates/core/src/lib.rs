//! Projector charts, the canonical frame-bundle connection, Hamiltonian flows
//! and Berry holonomy on complex Grassmannians `Gr_m(C^n)`.

pub mod bundle;
pub mod dynamics;
pub mod error;
pub mod fd;
pub mod grassmann;
pub mod linalg;
pub mod selftest;

pub use bundle::{Frame, FrameTangent, GaugeElement};
pub use error::{GeomError, Result};
pub use grassmann::{BasePoint, ChartTangent, EmbeddedTangent, Projector};
pub use linalg::{ComplexMatrix, Tolerances, C64};
