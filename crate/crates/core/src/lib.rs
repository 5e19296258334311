pub mod analysis;
pub mod channel;
pub mod cli;
pub mod model;
pub mod sim;
