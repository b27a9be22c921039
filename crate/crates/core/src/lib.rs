//! Traffic-engineering benchmark toolkit.
//!
//! A [`model::Setting`] bundles a topology, a traffic matrix and a routing
//! configuration. [`solvers`] improve the routing, [`scenarios`] run solvers
//! over settings and report maximum link utilizations against the
//! multi-commodity flow lower bound of [`mcf`].

pub mod cli;
pub mod external;
pub mod fixtures;
pub mod gravity;
pub mod io;
pub mod mcf;
pub mod model;
pub mod routing;
pub mod scenarios;
pub mod solvers;

pub use model::{Demand, Edge, Node, RoutingConfiguration, Setting, Topology, TrafficMatrix};
