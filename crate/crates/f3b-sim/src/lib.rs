//! Discrete-event blockchain simulator and benchmark harness for
//! threshold-encrypted transactions.

pub mod bench;
pub mod chain;
pub mod client;
pub mod msg;
pub mod scenario;
pub mod sim;
pub mod smc;
