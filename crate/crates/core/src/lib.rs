//! Metastability of Glauber dynamics on the complete graph with i.i.d.
//! coupling disorder: free-energy landscape, Eyring–Kramers predictions,
//! lumped-chain simulation and an exact potential-theoretic oracle.

pub mod disorder;
pub mod error;
pub mod kramers;
pub mod landscape;
pub mod magnetization;
pub mod mesodyn;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
