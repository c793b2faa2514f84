//! Predictive controllers for switched plants over lossy networks: model
//! assembly, LMI verification, cone-complementarity synthesis, simulation.

pub mod cclsynth;
pub mod cli;
pub mod demo;
pub mod densela;
pub mod files;
pub mod ncsmodel;
pub mod plot;
pub mod sdp;
pub mod sim;
