//! Applications: Kepler orbits through the Binet equation and exact
//! spectral stepping of the linearized wave equation.

mod kepler;
mod wave;

pub use kepler::{kepler_propagate, recovered_period, KeplerSpec, OrbitSample};
pub use wave::{
    group_velocity_estimate, mode_energy, numerical_frequency, packet_centroid, synthesize,
    wave_propagate, WaveMode, WaveResult, WaveSpec,
};
