//! Full-body motion estimation from sparse head and hand tracking signals.
//!
//! The library derives three-point tracking signals from motion sequences,
//! estimates full-body pose with alternating spatial/temporal attention over
//! joint-level tokens, trains with kinematic losses, and evaluates with a
//! motion-quality metric suite. Everything runs on the CPU at desk scale
//! against synthetic motion data.
//!
//! See the crate `examples/` directory for one runnable example per major
//! capability and `src/main.rs` for the thin CLI wrapper.

pub mod data;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod real;
pub mod runtime;
pub mod rotation;
pub mod skeleton;

pub use real::Real;
