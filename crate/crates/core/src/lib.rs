pub mod angle;
pub mod combinatorics;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod numeric;
pub mod parameter;
pub mod portrait;
pub mod rays;
pub mod render;
pub mod tessellation;

pub use angle::Angle;
pub use dynamics::CubicMap;
pub use error::{Error, Result};
pub use portrait::OrbitPortrait;
