//! Hyper-ideal circle patterns with prescribed intersection angles on
//! compact surfaces, found by minimizing a convex functional, and their use
//! for uniformizing compact Riemann surfaces.

pub mod branchcover;
pub mod cellcomplex;
pub mod cli;
pub mod data;
pub mod delaunay;
pub mod energy;
pub mod examples;
pub mod hypkernel;
pub mod layout;
pub mod optimizer;
pub mod pipeline;
pub mod render;
pub mod sphere;
pub mod validator;
