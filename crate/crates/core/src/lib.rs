//! Numerical toolkit for ultradifferentiable function classes defined by
//! weight functions and weight matrices: sequence transforms, weight
//! classification, matrix construction and goodness checks, Whitney covers,
//! Gevrey-type partitions of unity, Whitney ultrajets and their extension
//! to the real line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli_report;
pub mod error;
pub mod extension_engine;
pub mod matrix_calculus;
pub mod par;
pub mod partition_of_unity;
pub mod quadrature;
pub mod seq_calculus;
pub mod trend;
pub mod ultrajets;
pub mod weight_functions;
pub mod whitney_geometry;

pub use error::{Error, Result};
