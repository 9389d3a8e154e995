pub mod model;
pub mod orchestrator;
pub mod series;
pub mod calc;
pub mod chart;
pub mod prompts;
pub mod gateway;
pub mod tools;
pub mod parse;
pub mod eval;
