//! Facial micro-expression recognition from short grayscale clips.
//!
//! The pipeline has four stages, each usable on its own:
//!
//! 1. [`ingest`] reads a clip manifest, loads onset..offset frames and maps the
//!    seven raw emotion labels onto four coarse classes.
//! 2. [`landmarks`] turns a 68-point landmark set from the onset frame into
//!    rectangular facial regions (eyebrow, eye, middle, lip, bottom) and crops
//!    every frame of a clip with the same box.
//! 3. [`features`] computes LBP-TOP block histograms over the XY, XT and YT
//!    planes and concatenates them for combined regions.
//! 4. [`models`] and [`eval`] train four classical classifiers (linear SVM,
//!    logistic regression, random forest, k-nearest-neighbours) and report
//!    accuracy, confusion matrices, one-vs-rest ROC curves and extraction cost.
//!
//! [`cli`] chains the stages through files on disk; the `fmer` binary is a thin
//! wrapper around it.
//!
//! ```
//! use fmer::features::{lbp_top, DivisionFactor};
//! use fmer::ingest::{CoarseLabel, FrameSequence};
//! use image::GrayImage;
//!
//! let frames = (0..4)
//!     .map(|t| GrayImage::from_fn(12, 12, |x, y| image::Luma([((x * 7 + y * 3 + t * 11) % 256) as u8])))
//!     .collect();
//! let seq = FrameSequence::new("clip", "sub01", CoarseLabel::Others, frames).unwrap();
//! let features = lbp_top(&seq, DivisionFactor::Five).unwrap();
//! assert_eq!(features.len(), 19200);
//! ```

pub mod cli;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod landmarks;
pub mod models;
pub mod seed;

pub use error::{Error, Result};
