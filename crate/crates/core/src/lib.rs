//! Triangle-mesh tooling for anatomical surface models: loading and
//! welding, topology and curvature checks, planar slicing with
//! cross-section metrology, decimation and smoothing, and batch slice
//! dataset generation.

pub mod analysis;
pub mod bench;
pub mod dataset;
pub mod error;
pub mod mesh;
pub mod optimize;
pub mod primitives;
pub mod slice;

pub use error::{Error, Result};
pub use mesh::{Aabb, Mesh, TopologySummary};
