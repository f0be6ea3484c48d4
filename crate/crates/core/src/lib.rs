//! Witness of non-Gaussian entanglement built from characteristic-function
//! samples at a set of phase-space points, together with the numerical
//! machinery around it: truncated Fock states, symplectic maps, Wigner
//! negativity, point-set optimisation, loss and finite-shot simulation.

pub mod error;
pub mod families;
pub mod fock;
pub mod gaussian;
pub mod measures;
pub mod noise;
pub mod optimizer;
pub mod output;
pub mod phase_space;
pub mod points;
pub mod shot;
pub mod states;
pub mod symplectic;
pub mod witness;

pub use error::{Error, Result};
pub use fock::{DensityOperator, FockSpace, PureState, State, C64};
pub use points::PointSet;
pub use states::{make_state, StateSpec};
pub use symplectic::{GaussianFrame, SymplecticMap};
pub use witness::{WitnessMatrix, WitnessResult};
