//! Screening with a biased information intermediary: priors, costs, optimal
//! menus, persuasion certificates, closed forms and market statistics.

// Negated float comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod costs;
pub mod distributions;
pub mod error;
pub mod lp;
pub mod menu;
pub mod menu_solver;
pub mod numeric;
pub mod outcomes;
pub mod persuasion;
pub mod uq_closed_form;

pub use costs::CostFunction;
pub use distributions::{Atom, PosteriorDistribution, Prior, Segment};
pub use error::{CertificateCondition, Error, Result};
pub use menu::{Menu, MenuItem, MenuOutcome, Regime};
