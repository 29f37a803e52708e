#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod attacker;
pub mod channel;
pub mod engine;
pub mod instances;
pub mod lp;
pub mod math;
pub mod persuasion;
pub mod star;
pub mod workload;
