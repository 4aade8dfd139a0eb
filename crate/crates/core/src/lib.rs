//! Mean curvature flow of disks with free boundary on a torus of revolution,
//! written as the flow of an angle function `u` over the torus cross-section.
//!
//! The pieces, bottom up:
//!
//! - [`geometry`]: profile curves of the torus and the grids laid over them.
//! - [`flow`]: the graphical equation, its ghost layer and explicit steppers.
//! - [`diagnostics`]: integrals and extrema monitored along a run.
//! - [`mms`]: closed-form oracle and manufactured-solution studies.
//! - [`config`], [`output`], [`commands`]: the `torusflow` command line.
//!
//! ```
//! use std::sync::Arc;
//! use torusflow::flow::{run_flow, GraphState, NoObserver, RunSettings, StepperConfig, Termination};
//! use torusflow::geometry::{build_grid, make_interval_profile, Resolution};
//!
//! let profile = make_interval_profile(1.0, 2.0).unwrap();
//! let grid = Arc::new(build_grid(&profile, Resolution::Interval(33)).unwrap());
//! let u0 = GraphState::from_fn(grid, |n| (std::f64::consts::PI * n.s).cos());
//! let cfg = StepperConfig { osc_tol: 1e-3, ..Default::default() };
//! let out = run_flow(u0, &cfg, &RunSettings::default(), &mut NoObserver).unwrap();
//! assert_eq!(out.termination, Termination::Converged);
//! ```

pub mod commands;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod mms;
pub mod output;

pub use error::{FlowError, GeometryError};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grids.md")]
    mod grids {}
    #[doc = include_str!("../../../book/src/equation.md")]
    mod equation {}
    #[doc = include_str!("../../../book/src/ghosts.md")]
    mod ghosts {}
    #[doc = include_str!("../../../book/src/stepping.md")]
    mod stepping {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/mms.md")]
    mod mms {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
