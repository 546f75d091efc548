//! Multizone thermal-airflow simulation and prescription checking for
//! naturally ventilated tropical dwellings.
//!
//! The engine couples three balance models on an hourly grid:
//!
//! - a nodal conduction model (`thermal`): wall layers discretised by finite
//!   differences, one well-mixed air node per zone, stepped implicitly;
//! - a pressure-network airflow model (`airflow`): zone reference pressures
//!   solved by Newton iteration on per-zone mass conservation, with power-law
//!   cracks and bidirectional large openings (neutral-plane integration);
//! - a specific-humidity balance (`moisture`) advected by the converged flows.
//!
//! On top of the simulation core sit the comfort/energy criteria (`metrics`),
//! a rule engine for tropical-dwelling quality prescriptions (`ecodom`), and a
//! scenario runner (`scenario`) driving free-float runs, conditioned runs,
//! wind studies, permeability sweeps and base-vs-improved comparisons.

pub mod airflow;
pub mod constants;
pub mod ecodom;
pub mod fixtures;
pub mod metrics;
pub mod model;
pub mod moisture;
pub mod scenario;
pub mod sim;
pub mod solar;
pub mod thermal;
pub mod weather;

pub use model::{BuildingModel, ModelError, Violation};
pub use scenario::{Scenario, ScenarioMode};
pub use sim::{SimConfig, Simulator};
pub use solar::SunPosition;
pub use weather::{WeatherRecord, WeatherSequence};
