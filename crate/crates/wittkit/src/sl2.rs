//! Exact modular data of the level-k sl(2) categories: fusion rules, twists,
//! monodromy exponents, Frobenius-Perron dimensions, central charges, and the
//! census of local modules for the regular algebra at levels divisible by 4.
//!
//! Twists and monodromies are exact rationals (exponents of roots of unity);
//! dimensions are double-precision sine quotients.

use std::f64::consts::PI;

use thiserror::Error;

use crate::metric::{MetricError, PreMetricGroup};
use crate::rational::{Rational, RationalMod1};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Sl2Error {
    #[error("level must be >= 1, got {0}")]
    InvalidLevel(u64),
    #[error("label {label} out of range for level {k}")]
    LabelOutOfRange { k: u64, label: u64 },
    #[error("channel index {s} invalid for labels {t}, {j} at level {k}")]
    InvalidChannel { k: u64, t: u64, j: u64, s: u64 },
    #[error("level {0} is even; the pointed part is a form only at odd levels")]
    EvenLevel(u64),
    #[error("level {0} must be divisible by 4")]
    LevelNotMultipleOf4(u64),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

const MAX_LEVEL: u64 = 1 << 40;

fn check_level(k: u64) -> Result<(), Sl2Error> {
    if k == 0 || k > MAX_LEVEL {
        return Err(Sl2Error::InvalidLevel(k));
    }
    Ok(())
}

fn check_label(k: u64, j: u64) -> Result<(), Sl2Error> {
    check_level(k)?;
    if j > k {
        return Err(Sl2Error::LabelOutOfRange { k, label: j });
    }
    Ok(())
}

/// Conformal-weight exponent h_j = j(j+2)/(4(k+2)) reduced mod 1.
pub fn twist(k: u64, j: u64) -> Result<RationalMod1, Sl2Error> {
    check_label(k, j)?;
    let j = j as i128;
    let k = k as i128;
    Ok(RationalMod1::new(j * (j + 2), 4 * (k + 2)))
}

/// Fusion channels of `[i] (x) [j]`: labels `i+j-2s` for
/// `s` from `max(0, i+j-k)` to `min(i, j)`. Multiplicity-free; ascending.
pub fn fusion(k: u64, i: u64, j: u64) -> Result<Vec<u64>, Sl2Error> {
    check_label(k, i)?;
    check_label(k, j)?;
    let lo = (i + j).saturating_sub(k);
    let hi = i.min(j);
    Ok((lo..=hi).rev().map(|s| i + j - 2 * s).collect())
}

/// Exponent of the monodromy eigenvalue of `[t]` and `[j]` on the channel
/// `[t+j-2s]`: `h_{t+j-2s} - h_t - h_j` mod 1.
pub fn monodromy_eigenvalue(k: u64, t: u64, j: u64, s: u64) -> Result<RationalMod1, Sl2Error> {
    check_label(k, t)?;
    check_label(k, j)?;
    let lo = (t + j).saturating_sub(k);
    let hi = t.min(j);
    if s < lo || s > hi {
        return Err(Sl2Error::InvalidChannel { k, t, j, s });
    }
    let channel = t + j - 2 * s;
    Ok(twist(k, channel)? - twist(k, t)? - twist(k, j)?)
}

/// FPdim of the j-th simple object: sin((j+1) pi / (k+2)) / sin(pi / (k+2)).
pub fn fpdim_object(k: u64, j: u64) -> Result<f64, Sl2Error> {
    check_label(k, j)?;
    let theta = PI / (k as f64 + 2.0);
    Ok(((j as f64 + 1.0) * theta).sin() / theta.sin())
}

/// FPdim of the whole category: (k+2) / (2 sin^2(pi/(k+2))).
pub fn fpdim_category(k: u64) -> Result<f64, Sl2Error> {
    check_level(k)?;
    let theta = PI / (k as f64 + 2.0);
    Ok((k as f64 + 2.0) / (2.0 * theta.sin().powi(2)))
}

/// Additive central charge 3k/(k+2), exact.
pub fn central_charge_additive(k: u64) -> Result<Rational, Sl2Error> {
    check_level(k)?;
    Ok(Rational::new(3 * k, k + 2))
}

/// Exponent of the multiplicative central charge: 3k/(8(k+2)) mod 1.
pub fn central_charge_exponent(k: u64) -> Result<RationalMod1, Sl2Error> {
    check_level(k)?;
    Ok(RationalMod1::new(3 * k as i128, 8 * (k as i128 + 2)))
}

/// What the pointed part (generated by the invertible top label) looks like.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointedPartClass {
    /// Odd level: the pointed part is a nondegenerate Z/2 form.
    Nondegenerate,
    /// Level divisible by 4: twist of the top label is trivial.
    Tannakian,
    /// Level 2 mod 4: the pointed part is the super line.
    Super,
}

/// Classification by level mod 4, cross-checked against the twist of the top
/// label (k/4 mod 1: quarter values are nondegenerate, 0 Tannakian, 1/2 super).
pub fn classify_level(k: u64) -> Result<PointedPartClass, Sl2Error> {
    check_level(k)?;
    let by_residue = match k % 4 {
        1 | 3 => PointedPartClass::Nondegenerate,
        0 => PointedPartClass::Tannakian,
        _ => PointedPartClass::Super,
    };
    let top = twist(k, k)?;
    let by_twist = if top == RationalMod1::new(1, 4) || top == RationalMod1::new(3, 4) {
        PointedPartClass::Nondegenerate
    } else if top.is_zero() {
        PointedPartClass::Tannakian
    } else if top == RationalMod1::HALF {
        PointedPartClass::Super
    } else {
        return Err(Sl2Error::InvalidLevel(k));
    };
    debug_assert_eq!(by_residue, by_twist);
    Ok(by_residue)
}

/// The pointed part at odd level as a pre-metric group: (Z/2, q(1) = k/4 mod 1).
pub fn pointed_part_form(k: u64) -> Result<PreMetricGroup, Sl2Error> {
    check_level(k)?;
    if k % 2 == 0 {
        return Err(Sl2Error::EvenLevel(k));
    }
    Ok(crate::metric::cyclic_form(2, k as i128, 4)?)
}

/// Exact data tables for one level.
#[derive(Debug, Clone)]
pub struct Sl2Data {
    pub k: u64,
    pub twists: Vec<RationalMod1>,
    pub fpdims: Vec<f64>,
    pub central_charge: RationalMod1,
}

impl Sl2Data {
    pub fn new(k: u64) -> Result<Sl2Data, Sl2Error> {
        check_level(k)?;
        let twists = (0..=k).map(|j| twist(k, j)).collect::<Result<_, _>>()?;
        let fpdims = (0..=k)
            .map(|j| fpdim_object(k, j))
            .collect::<Result<_, _>>()?;
        Ok(Sl2Data {
            k,
            twists,
            fpdims,
            central_charge: central_charge_exponent(k)?,
        })
    }

    pub fn labels(&self) -> impl Iterator<Item = u64> {
        0..=self.k
    }
}

/// One free-module orbit `{j, k-j}` under the invertible top label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Orbit {
    pub low: u64,
    pub high: u64,
    pub local: bool,
    /// The fixed point j = k/2 splits into two simple modules.
    pub split: bool,
}

/// A simple local module: either a full orbit or half of the split fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSimple {
    pub label: String,
    pub dim: f64,
    pub twist: RationalMod1,
}

/// Census of simple local modules over the regular algebra `[0] + [k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalModuleSet {
    pub k: u64,
    pub orbits: Vec<Orbit>,
    pub simples: Vec<LocalSimple>,
}

/// Local modules for the regular algebra at `k = 0 mod 4`.
///
/// The orbit `{j, k-j}` is local iff the monodromy of the top label against
/// `[j]` on the single channel `[k-j]` is trivial. The fixed point `k/2`
/// contributes two simple modules of half the object dimension each; the
/// squared dimensions then sum to a quarter of the category dimension.
pub fn local_modules(k: u64) -> Result<LocalModuleSet, Sl2Error> {
    check_level(k)?;
    if k % 4 != 0 {
        return Err(Sl2Error::LevelNotMultipleOf4(k));
    }
    let mut orbits = Vec::new();
    let mut simples = Vec::new();
    for j in 0..=k / 2 {
        let split = j == k / 2;
        // [k] (x) [j] has the single channel [k-j] (s = j).
        let local = monodromy_eigenvalue(k, k, j, j)?.is_zero();
        orbits.push(Orbit {
            low: j,
            high: k - j,
            local,
            split,
        });
        if !local {
            continue;
        }
        let tw = twist(k, j)?;
        if split {
            let dim = fpdim_object(k, j)? / 2.0;
            simples.push(LocalSimple {
                label: format!("[{}]+", j),
                dim,
                twist: tw,
            });
            simples.push(LocalSimple {
                label: format!("[{}]-", j),
                dim,
                twist: tw,
            });
        } else {
            simples.push(LocalSimple {
                label: format!("[{}]+[{}]", j, k - j),
                dim: fpdim_object(k, j)?,
                twist: tw,
            });
        }
    }
    let set = LocalModuleSet { k, orbits, simples };
    let total: f64 = set.simples.iter().map(|s| s.dim * s.dim).sum();
    let expected = fpdim_category(k)? / 4.0;
    if (total - expected).abs() > 1e-9 * expected.max(1.0) {
        return Err(Sl2Error::Metric(MetricError::Internal(format!(
            "local module dimensions sum to {} but FPdim/4 = {}",
            total, expected
        ))));
    }
    Ok(set)
}
