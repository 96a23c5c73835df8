//! Polarization dynamics over timestamped short-text corpora with repost edges.
//!
//! The content side bootstraps stance lexicons from seed hashtags and trains a
//! linear three-class stance classifier. The network side builds sliding-window
//! repost graphs and tracks two seeded communities with label propagation.
//! [`dynamics`] joins the two: switch detection, soft labels, histograms and the
//! content/network correlation.

pub mod classifier;
pub mod corpus;
pub mod dynamics;
mod error;
pub mod io;
pub mod lexicon;
pub mod netdyn;
pub mod pipeline;
pub mod rng;
pub mod synthgen;

pub use error::{Error, Result};
