//! Library surface of the experiment runner: the run-configuration format.
//! The binary in `main.rs` layers command dispatch on top.

pub mod config;
