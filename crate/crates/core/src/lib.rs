//! Non-neural machinery for subject-agnostic face swapping and reenactment:
//! pose-space appearance maps with barycentric view interpolation, stepwise
//! landmark-driven reenactment planning, Poisson blending, mask operations,
//! training-loss formulas, frame curation and evaluation metrics. Neural
//! generators sit behind [`pipeline::Generator`], implemented by built-in
//! mocks or by external processes speaking the [`pipeline::wire`] protocol.

pub mod appearance;
pub mod curation;
pub mod error;
pub mod heatmaps;
pub mod image;
pub mod io;
pub mod landmarks;
pub(crate) mod linalg;
pub mod losses;
pub mod masks;
pub mod metrics;
pub mod pipeline;
pub mod poisson;
pub mod pose;
pub mod reenact;

pub use error::{Error, ProtocolError, Result};
pub use image::{Image, Label, SegMask};
pub use landmarks::{Landmark3DSet, LandmarkSet};
pub use pose::{EulerPose, PlanePoint};
