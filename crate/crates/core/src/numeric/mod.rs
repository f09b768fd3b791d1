//! Dense vector arithmetic and labeled random streams.

mod rng;
mod vector;

pub use rng::{sample_normal, seeded_stream, RngStream};
pub use vector::{axpy, hadamard, Vector};
