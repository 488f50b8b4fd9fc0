pub mod cli;
pub mod cubature;
pub mod dual;
pub mod enumeration;
pub mod error;
pub mod fit;
pub mod fooling;
pub mod generator;
pub mod io;
pub mod matrix;
pub mod numeric;
pub mod testfns;
