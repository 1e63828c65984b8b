//! Benchmark environments and oracle scenarios.

pub mod conttag;
pub mod geometry;
pub mod noise;
pub mod pushbox;
pub mod synthetic;
pub mod toy;

pub use conttag::{conttag_heuristic, ContTag, ContTagConfig, ContTagState};
pub use geometry::{Point, Polygon};
pub use noise::TruncatedNormal;
pub use pushbox::{pushbox_heuristic, Pushbox, PushboxConfig, PushboxState};
pub use synthetic::{SyntheticConfig, SyntheticHighDim};
pub use toy::{OneStepToy, OneStepToyConfig, TwoStateToy, TwoStateToyConfig};
