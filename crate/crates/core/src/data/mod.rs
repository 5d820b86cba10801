//! Panel and adjacency ingestion, standardization, and exploratory
//! spatial-autocorrelation statistics.

mod adjacency;
mod explore;
mod panel;

pub use adjacency::{load_adjacency, write_adjacency, AdjacencyGraph};
pub use explore::{gearys_c, morans_i};
pub use panel::{load_panel, standardize, write_panel, PanelData, PanelSchema, Scaling};
