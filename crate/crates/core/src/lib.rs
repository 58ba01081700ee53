//! Core engine: data language, task model, induction kernel, solver
//! library, ensemble scheduler, multi-term memory and self-improvement.

pub mod cognition;
pub mod ensemble;
pub mod kernel;
pub mod memory;
pub mod solvers;
pub mod sdl;
pub mod task;
pub mod util;

pub use sdl::{Column, DataType, Dataset, SdlError, Value};
