pub mod expr;
pub mod generator;
pub mod incidence;
pub mod model;
pub mod report;
pub mod strategies;
pub mod transform;
