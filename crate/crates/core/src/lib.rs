pub mod auction;
pub mod group;
pub mod harness;
mod par;
pub mod registry;
pub mod ringsig;

pub use par::is_parallel;
