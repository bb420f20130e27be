pub mod eval;
pub mod qedata;
pub mod render;
pub mod selftrain;
pub mod split;
pub mod validate;
