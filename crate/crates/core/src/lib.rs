pub mod dense;
pub mod error;
pub mod ffield;
pub mod qsgen;
pub mod sss;
pub mod hss;
pub mod bruhat;
pub mod io;
