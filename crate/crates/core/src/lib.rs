//! Analytic torsion of local simplicial complexes as edge weights for
//! graph neural networks.
//!
//! The toolkit builds, for every edge `(x, y)` of a graph, the clique complex
//! `K_{x,y}` of the subgraph induced by the `l_sub`-hop neighborhoods of the
//! endpoints, computes the analytic torsion `T(K_{x,y})` from the spectra of
//! the Hodge Laplacians of that complex, and uses `|log T(K_{x,y})|` as an
//! edge weight inside a degree-normalized message-passing network. Two tasks
//! are supported end to end: link prediction (scored pairs, AUC/AUPR) and
//! node classification (accuracy).
//!
//! Module map:
//! - [`graph`] / [`complex`]: graphs, clique complexes, local complexes.
//! - [`spectral`]: boundary matrices, Hodge Laplacians, spectra, torsion.
//! - [`weights`]: per-edge torsion weight tables with a binary cache format.
//! - [`nn`]: message passing, task heads, manual backprop, Adam, training.
//! - [`datasets`]: edge-list/feature/label ingestion, link and node splits.
//! - [`metrics`]: AUC, AUPR, accuracy.
//! - [`experiment`]: config files, the repeat-and-average harness, reports.

mod binio;

pub mod complex;
pub mod datasets;
pub mod dense;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod metrics;
pub mod nn;
pub mod spectral;
pub mod weights;

pub use error::{Error, Result};
