pub mod backhead;
pub mod demod;
pub mod detection;
pub mod error;
pub mod eval;
pub mod fft;
pub mod filterbank;
pub mod fusion;
pub mod geometry;
pub mod group_filter;
pub mod io;
pub mod overlay;
pub mod pipeline;
pub mod raster;
pub mod synth;
