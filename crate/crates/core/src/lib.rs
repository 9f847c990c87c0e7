pub mod cli;
pub mod experiment;
pub mod linalg;
pub mod lp;
pub mod polytope;
pub mod synthesis;
pub mod verification;
