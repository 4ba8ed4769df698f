pub mod catalog;
pub mod engine;
pub mod frontend;
pub mod store;
pub mod types;
pub mod wire;

pub use types::{Position, Value};
