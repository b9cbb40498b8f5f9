pub mod complex;
pub mod config;
pub mod error;
pub mod flatform;
pub mod forms;
pub mod frames;
pub mod pfaffian;
pub mod pseudosphere;
pub mod report;
pub mod suites;
pub mod thom;

pub use error::{Error, Result};
