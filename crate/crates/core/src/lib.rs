//! Polar-code decoding on pruned parity-check matrices: exact BEC ML by
//! peeling and triangulation, CRC-aided belief propagation, and ordered
//! statistics post-processing.

pub mod bec;
pub mod bp_awgn;
pub mod gf2;
pub mod osd;
pub mod pcm;
pub mod polar;
pub mod sim;
