//! Knee and knee-onset identification on lithium-ion capacity fade curves.
//!
//! The pipeline normalizes per-cycle capacity by the nominal capacity,
//! smooths it with a Savitzky–Golay filter, computes the approximated
//! curvature of the fade curve and segments that curvature with a
//! matrix-profile arc curve. The two boundaries found (knee onset, knee)
//! split life into three phases, which are then characterized with Welch
//! power spectral density estimates. Incremental-capacity analysis of
//! reference performance tests tracks the largest dQ/dV peak across aging.
//!
//! ```
//! use kneescope::dataset::CapacitySeries;
//! use kneescope::pipeline::{analyze_knee, PipelineConfig};
//!
//! let cycle: Vec<f64> = (0..400).map(|i| i as f64).collect();
//! let capacity = cycle
//!     .iter()
//!     .map(|n| 5.0 * (1.0 - 1e-4 * n - 2e-4 * ((n / 80.0).exp() - 1.0) / 10.0 + 1e-4 * (n * 0.3).sin()))
//!     .collect();
//! let series = CapacitySeries::new("demo", cycle, capacity, 5.0).unwrap();
//! let knee = analyze_knee(&series, &PipelineConfig::default()).unwrap();
//! assert!(knee.partition.onset_cycle < knee.partition.knee_cycle);
//! ```

pub mod curvature;
pub mod dataset;
pub mod error;
pub mod ica;
pub mod pipeline;
pub mod preprocess;
pub mod segmentation;
pub mod spectral;
pub mod spline;

pub use error::{Error, Result};
