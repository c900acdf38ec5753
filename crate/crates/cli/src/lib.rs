//! Library surface of the command-line toolkit: file formats, stereo
//! instance construction, and report rendering. The binary in `main.rs` is a
//! thin dispatcher over these.

pub mod formats;
pub mod reports;
pub mod stereo;

/// Bundled reference dataset: published full-scale stereo results, quoted
/// verbatim and labeled as such. Crop-scale runs are the reproduction path
/// supported in-repo.
pub const REFERENCE_RESULTS: &str = include_str!("../data/reference_results.json");
