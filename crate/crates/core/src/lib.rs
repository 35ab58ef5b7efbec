pub mod dias;
pub mod dynamics;
pub mod formula;
pub mod harness;
pub mod monitor;
pub mod planner;
pub mod robustness;
