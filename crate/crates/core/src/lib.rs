#![forbid(unsafe_code)]
mod error;
pub mod rng;
pub mod image_io;
pub mod operators;
pub mod transforms;
pub mod metrics;
pub mod losses;
pub mod network;
pub mod optim;
pub mod checkpoint;
pub mod data;
pub mod train;
pub use error::{ErrorClass, SeiError, SeiResult};
pub use image_io::Image;
