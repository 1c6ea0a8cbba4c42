//! Exact desk-scale computations around the Witt group of finite metric
//! groups and the modular data of the sl(2) level-k categories.
//!
//! The building blocks:
//!
//! * [`group`] — finite abelian groups, subgroup closures and enumeration;
//! * [`snf`] — Smith normal form over checked integer arithmetic;
//! * [`metric`] — pre-metric groups (quadratic forms on finite abelian
//!   groups), Gauss sums, isotropic subgroups, condensation;
//! * [`witt`] — anisotropic kernels, Witt equality and orders, the pointed
//!   order-8 subgroup underlying the super-Witt comparison;
//! * [`etale`] — brute-force classification of connected etale algebras in
//!   orthogonal products of pointed forms;
//! * [`sl2`] — fusion rules, twists, dimensions and local modules for the
//!   level-k sl(2) categories;
//! * [`presentation`] — finitely presented abelian groups and the concrete
//!   presentation of the subgroup generated by the level-k Witt classes;
//! * [`selftest`] — the acceptance suite behind `wittkit selftest`.

#![forbid(unsafe_code)]

pub mod cli;
pub mod etale;
pub mod group;
pub mod metric;
pub mod parse;
pub mod presentation;
pub mod rational;
pub mod selftest;
pub mod sl2;
pub mod snf;
pub mod witt;

pub use group::{
    all_subgroups, subgroup_closure, Element, FinAbGroup, GroupError, Subgroup,
    DEFAULT_ENUMERATION_CAP, SUBGROUP_ENUMERATION_CAP,
};
pub use metric::{GaussArgument, GaussSumValue, MetricError, PreMetricGroup};
pub use parse::{parse_metric_group, ParseError};
pub use rational::{Rational, RationalMod1};
pub use snf::{smith_normal_form, SnfError, SnfResult};
pub use witt::{WittClassHandle, WittError, WittOrder};
