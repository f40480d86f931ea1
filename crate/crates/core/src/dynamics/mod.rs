//! Hamiltonian flows on the Grassmannian and its frame bundle, horizontal
//! transport and holonomy.

pub mod holonomy;
pub mod integrate;
pub mod path;
pub mod schedule;
pub mod synthesis;

pub use holonomy::{
    berry_maps, geometric_hamiltonian, loop_holonomy, pancharatnam_oracle, phase_distance,
    wrap_phase, HolonomyResult, LatitudeLoop,
};
pub use integrate::{energy_along, horizontal_transport, integrate_frame, integrate_projector};
pub use path::{FramePath, ProjectorPath, TimeGrid};
pub use schedule::{ChartPolygon, HamiltonianSchedule, ProjectorCurve, Reversed, SmoothLoop};
pub use synthesis::{synthesize_holonomy_step, SYNTHESIS_CONSTANT};
