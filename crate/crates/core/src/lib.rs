//! Instance-aware algorithm selection for the maximum clique problem.

pub mod classical;
pub mod dataset;
pub mod features;
pub mod graph;
pub mod matrix;
pub mod metrics;
pub mod nn;
mod scalar;
pub mod solvers;

pub use scalar::Scalar;

pub type Matrix = matrix::DenseMatrix<f64>;
pub type Features = features::GlobalFeatures<f64>;
pub type Instance = dataset::LabeledInstance<f64>;
pub type Data = dataset::Dataset<f64>;
pub type ClassicalSelector = classical::Selector<f64>;
pub type Gat = nn::GatModel<f64>;
pub type Report = metrics::MetricReport<f64>;

pub type Matrix32 = matrix::DenseMatrix<f32>;
pub type Features32 = features::GlobalFeatures<f32>;
pub type Instance32 = dataset::LabeledInstance<f32>;
pub type Data32 = dataset::Dataset<f32>;
pub type ClassicalSelector32 = classical::Selector<f32>;
pub type Gat32 = nn::GatModel<f32>;
pub type Report32 = metrics::MetricReport<f32>;
