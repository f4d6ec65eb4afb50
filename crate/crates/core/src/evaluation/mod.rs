//! Risk and volume measurement against an oracle model, boundary volumes,
//! and the convergence experiments built on them.

pub mod boundary;
pub mod chain;
pub mod circle;
pub mod convergence;
pub mod quadrature;
pub mod risk;

pub use boundary::{bayes_boundary_1d, weighted_boundary_volume, BoundarySpec};
pub use risk::{
    classifier_risk_monte_carlo, classifier_risk_quadrature, classifier_risk_quadrature_with, misclassified_volume,
    partition_risk_quadrature, RiskForm, RiskMethod, RiskReport,
};
