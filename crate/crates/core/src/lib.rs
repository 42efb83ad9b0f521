pub mod store;
pub mod phy;
pub mod intent;
pub mod nl2sql;
pub mod optimizer;
pub mod orchestrator;
pub mod lincheck;
pub mod gateway;
