//! Seeded generators for verifiable test problems, exact minima for small
//! instances, and a JSON instance file.

mod file;
mod generate;
mod minimum;

pub use file::{read_instance, write_instance, InstanceFile, INSTANCE_VERSION};
pub use generate::{
    generate, l1_regression, piecewise_max, ProblemKind, ProblemParams, ProblemSpec, SetShape,
};
pub use minimum::true_min;
