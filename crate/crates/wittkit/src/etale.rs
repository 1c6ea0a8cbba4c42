//! Brute-force classification of connected etale algebras in orthogonal
//! products of pointed forms.
//!
//! In a pointed braided category the connected etale algebras are the
//! isotropic subgroups. For a product `(A1, q1) + (A2, q2)` every isotropic
//! subgroup H decomposes: intersections with the factors condense away, and
//! the residue is the graph of an anti-isometry between subgroups of the two
//! condensed factors. [`enumerate_etale`] recovers that datum for every H and
//! raises [`EtaleError::TheoremViolation`] if any H resists — which a passing
//! test corpus shows never happens.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::group::{Element, GroupError, Indexer, Subgroup, SUBGROUP_ENUMERATION_CAP};
use crate::metric::{greedy_generators, MetricError, PreMetricGroup};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EtaleError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("decomposition failed for an isotropic subgroup: {0}")]
    TheoremViolation(String),
}

impl From<GroupError> for EtaleError {
    fn from(e: GroupError) -> EtaleError {
        EtaleError::Metric(MetricError::Group(e))
    }
}

/// Decomposition datum of one connected etale algebra in a product:
/// the factor intersections, the condensed factors, and the graph of the
/// anti-isometry carried by the residue.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaleDatum {
    pub h1: Subgroup,
    pub h2: Subgroup,
    pub condensed1: PreMetricGroup,
    pub condensed2: PreMetricGroup,
    pub b1: Subgroup,
    pub b2: Subgroup,
    /// Graph of the anti-isometry b1 -> b2, sorted by source element.
    pub phi: Vec<(Element, Element)>,
}

/// Every connected etale algebra (isotropic subgroup) of the orthogonal
/// product, each with its decomposition datum. Deterministic order.
pub fn enumerate_etale(
    c1: &PreMetricGroup,
    c2: &PreMetricGroup,
    cap: u64,
) -> Result<Vec<(Subgroup, EtaleDatum)>, EtaleError> {
    let product = c1.direct_sum(c2, SUBGROUP_ENUMERATION_CAP.min(cap))?;
    let algebras = product.isotropic_subgroups()?;

    // Condensations of each factor repeat across algebras; cache per factor.
    let mut cache1 = HashMap::new();
    let mut cache2 = HashMap::new();
    let mut out = Vec::with_capacity(algebras.len());
    for h in algebras {
        let datum = decompose(c1, c2, &product, &h, cap, &mut cache1, &mut cache2)?;
        out.push((h, datum));
    }
    Ok(out)
}

type CondenseCache = HashMap<Vec<u64>, (PreMetricGroup, crate::metric::CondenseMap)>;

fn decompose(
    c1: &PreMetricGroup,
    c2: &PreMetricGroup,
    product: &PreMetricGroup,
    h: &Subgroup,
    cap: u64,
    cache1: &mut CondenseCache,
    cache2: &mut CondenseCache,
) -> Result<EtaleDatum, EtaleError> {
    let r1 = c1.group().rank();
    let r2 = c2.group().rank();
    let prod_indexer = Indexer::new(product.group());
    let idx1 = Indexer::new(c1.group());
    let idx2 = Indexer::new(c2.group());

    // Split each member of H into factor coordinates.
    let mut pairs = Vec::with_capacity(h.element_indices().len());
    for &x in h.element_indices() {
        let mut left = vec![0u64; r1];
        let mut right = vec![0u64; r2];
        for i in 0..r1 {
            left[i] = prod_indexer.digit(x, i);
        }
        for i in 0..r2 {
            right[i] = prod_indexer.digit(x, r1 + i);
        }
        pairs.push((
            idx1.index_of(&Element::from_coords(left)),
            idx2.index_of(&Element::from_coords(right)),
        ));
    }

    // Factor intersections: members living entirely in one factor.
    let h1_idx: Vec<u64> = pairs.iter().filter(|&&(_, b)| b == 0).map(|&(a, _)| a).collect();
    let h2_idx: Vec<u64> = pairs.iter().filter(|&&(a, _)| a == 0).map(|&(_, b)| b).collect();
    let h1 = sorted_subgroup(c1, &idx1, h1_idx);
    let h2 = sorted_subgroup(c2, &idx2, h2_idx);

    // Both intersections are isotropic (restriction of q to a factor).
    for &a in h1.element_indices() {
        if c1.q_numerator(a) != 0 {
            return Err(EtaleError::TheoremViolation(
                "intersection with the first factor is not isotropic".into(),
            ));
        }
    }
    for &b in h2.element_indices() {
        if c2.q_numerator(b) != 0 {
            return Err(EtaleError::TheoremViolation(
                "intersection with the second factor is not isotropic".into(),
            ));
        }
    }

    let (condensed1, map1) = cached_condense(c1, &h1, cap, cache1)?;
    let (condensed2, map2) = cached_condense(c2, &h2, cap, cache2)?;

    // Project the residue into the product of the condensed factors.
    let mut residue: Vec<(u64, u64)> = Vec::new();
    for &(a, b) in &pairs {
        let pa = map1.project(a).ok_or_else(|| {
            EtaleError::TheoremViolation("member is not orthogonal to the first intersection".into())
        })?;
        let pb = map2.project(b).ok_or_else(|| {
            EtaleError::TheoremViolation("member is not orthogonal to the second intersection".into())
        })?;
        residue.push((pa, pb));
    }
    residue.sort_unstable();
    residue.dedup();

    // The projection kernel is exactly h1 x h2.
    if residue.len() as u64 * h1.order() * h2.order() != h.order() {
        return Err(EtaleError::TheoremViolation(format!(
            "residue size {} != |H| / (|h1| |h2|) = {} / {}",
            residue.len(),
            h.order(),
            h1.order() * h2.order()
        )));
    }

    // The residue is the graph of a bijection: both projections are injective.
    let mut graph: BTreeMap<u64, u64> = BTreeMap::new();
    let mut image: Vec<u64> = Vec::new();
    for &(a, b) in &residue {
        if graph.insert(a, b).is_some() {
            return Err(EtaleError::TheoremViolation(
                "residue projects non-injectively to the first factor".into(),
            ));
        }
        image.push(b);
    }
    image.sort_unstable();
    image.dedup();
    if image.len() != residue.len() {
        return Err(EtaleError::TheoremViolation(
            "residue projects non-injectively to the second factor".into(),
        ));
    }

    // Graph closure under addition makes phi a group isomorphism.
    let q1_indexer = Indexer::new(condensed1.group());
    let q2_indexer = Indexer::new(condensed2.group());
    for &(a1, b1) in &residue {
        for &(a2, b2) in &residue {
            let sum = (q1_indexer.add(a1, a2), q2_indexer.add(b1, b2));
            if residue.binary_search(&sum).is_err() {
                return Err(EtaleError::TheoremViolation(
                    "residue graph is not closed under addition".into(),
                ));
            }
        }
    }

    // Anti-isometry: the induced form on the target negates the source form.
    for &(a, b) in &residue {
        if condensed2.q_at_index(b) != -condensed1.q_at_index(a) {
            return Err(EtaleError::TheoremViolation(
                "residue graph is not an anti-isometry".into(),
            ));
        }
    }

    let b1 = sorted_subgroup(&condensed1, &q1_indexer, graph.keys().copied().collect());
    let b2 = sorted_subgroup(&condensed2, &q2_indexer, image);
    let phi = graph
        .iter()
        .map(|(&a, &b)| (q1_indexer.element_at(a), q2_indexer.element_at(b)))
        .collect();

    Ok(EtaleDatum {
        h1,
        h2,
        condensed1,
        condensed2,
        b1,
        b2,
        phi,
    })
}

fn cached_condense(
    c: &PreMetricGroup,
    h: &Subgroup,
    cap: u64,
    cache: &mut CondenseCache,
) -> Result<(PreMetricGroup, crate::metric::CondenseMap), EtaleError> {
    let key = h.element_indices().to_vec();
    if let Some(hit) = cache.get(&key) {
        return Ok(hit.clone());
    }
    let result = c.condense_with_map(h, cap)?;
    cache.insert(key, result.clone());
    Ok(result)
}

fn sorted_subgroup(c: &PreMetricGroup, indexer: &Indexer, elements: Vec<u64>) -> Subgroup {
    let mut elements = elements;
    elements.sort_unstable();
    elements.dedup();
    let gens = greedy_generators(indexer, &elements);
    Subgroup::from_indices(c.group(), gens, elements)
}

/// Dimension bookkeeping: |H| = |h1| * |h2| * |b1|.
pub fn check_prdim(algebra: &Subgroup, datum: &EtaleDatum) -> bool {
    algebra.order() == datum.h1.order() * datum.h2.order() * datum.b1.order()
}

/// The correspondence between isotropic subgroups containing `h` and
/// isotropic subgroups of the condensation by `h`: checks that
/// `K -> image of K in H^perp/H` is a bijection onto the full census.
pub fn check_et0(c: &PreMetricGroup, h: &Subgroup, cap: u64) -> Result<bool, EtaleError> {
    let (condensed, map) = c.condense_with_map(h, cap)?;
    let over: Vec<Subgroup> = c
        .isotropic_subgroups()?
        .into_iter()
        .filter(|k| h.is_subset_of(k))
        .collect();
    let below = condensed.isotropic_subgroups()?;

    let mut images: Vec<Vec<u64>> = Vec::with_capacity(over.len());
    for k in &over {
        let mut img = Vec::with_capacity(k.element_indices().len());
        for &x in k.element_indices() {
            // isotropic K containing H satisfies K subset of H^perp
            match map.project(x) {
                Some(p) => img.push(p),
                None => return Ok(false),
            }
        }
        img.sort_unstable();
        img.dedup();
        images.push(img);
    }
    images.sort();
    let mut distinct = images.clone();
    distinct.dedup();
    if distinct.len() != images.len() {
        return Ok(false); // not injective
    }
    let mut targets: Vec<Vec<u64>> = below
        .iter()
        .map(|s| s.element_indices().to_vec())
        .collect();
    targets.sort();
    Ok(images == targets)
}
