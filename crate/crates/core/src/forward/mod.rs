//! Measurement operators, masks, coil maps, phantoms and simulation.

pub mod coils;
pub mod mask;
pub mod model;
pub mod phantom;
pub mod simulate;

pub use coils::{generate_coil_maps, CoilMaps, CoilSupport};
pub use mask::{make_line_mask, make_point_mask, Acceleration, MaskKind, SamplingMask};
pub use model::ForwardModel;
pub use phantom::{generate_phantom, percentile, percentile_98, PhantomKind};
pub use simulate::{ground_truth_from_full, simulate_measurements, MeasurementSet, NOISELESS_GAMMA_W};
