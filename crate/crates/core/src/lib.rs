pub mod cam;
pub mod config;
pub mod device;
pub mod engine;
pub mod fabric;
pub mod network;
pub mod neuron;
pub mod mismatch;
pub mod power;
