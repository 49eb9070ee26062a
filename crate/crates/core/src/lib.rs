pub mod cli;
pub mod constraint;
pub mod electrostatics;
pub mod error;
pub mod io;
pub mod lame;
pub mod oracles;
pub mod poly;
pub mod rational;
pub mod roots;
pub mod settings;
pub mod stieltjes;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use poly::ComplexPoly;
pub use rational::{PartialFractionDecomposition, PoleTerm, RationalFn};
pub use settings::NumericSettings;
