//! Thermal-array fall detection built on a biomechanical balance signal.
//!
//! Poses go through the balance engine (center of mass, base of support,
//! signed margin of balance, SB / LoB / GIS labels); the thermal simulator
//! turns pose scripts into sensor frames; motion features, presence
//! detection and a sliding-window detector turn frames and poses into fall
//! events; `stream` carries frames over the wire and runs the live service.

pub mod balance;
pub mod config;
pub mod detector;
pub mod frame;
pub mod geometry;
pub mod grid;
pub mod motion;
pub mod objectives;
pub mod pose;
pub mod scenario;
pub mod stream;
pub mod thermal;
