//! Finite abelian groups given as products of cyclic factors, their elements
//! (stored either as coordinate vectors or as mixed-radix indices), and
//! subgroup machinery: closures, full subgroup enumeration.

use std::collections::HashSet;

use num_integer::Integer;
use thiserror::Error;

/// Default cap on group orders for enumerative operations (overridable, see
/// the `WITTKIT_CAP` environment variable in the CLI).
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 20;

/// Hard cap for full subgroup enumeration.
pub const SUBGROUP_ENUMERATION_CAP: u64 = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("group order {order} exceeds cap {cap}")]
    CapExceeded { order: u64, cap: u64 },
    #[error("group order overflows u64")]
    OrderOverflow,
    #[error("cyclic factor order {0} is invalid (must be >= 2)")]
    InvalidFactor(u64),
    #[error("element has {got} coordinates, group has rank {expected}")]
    RankMismatch { got: usize, expected: usize },
}

/// A finite abelian group, the product of cyclic groups of the given orders.
///
/// The factor list is kept exactly as given: `Z/2 x Z/2` and `Z/4` are
/// different values even when abstractly isomorphic groups would coincide.
/// The empty list is the trivial group.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FinAbGroup {
    factor_orders: Vec<u64>,
}

impl FinAbGroup {
    pub fn new(factor_orders: Vec<u64>) -> Result<FinAbGroup, GroupError> {
        for &n in &factor_orders {
            if n < 2 {
                return Err(GroupError::InvalidFactor(n));
            }
        }
        Ok(FinAbGroup { factor_orders })
    }

    pub fn trivial() -> FinAbGroup {
        FinAbGroup {
            factor_orders: Vec::new(),
        }
    }

    /// Convenience constructor for a single cyclic factor.
    pub fn cyclic(n: u64) -> Result<FinAbGroup, GroupError> {
        FinAbGroup::new(vec![n])
    }

    pub fn factor_orders(&self) -> &[u64] {
        &self.factor_orders
    }

    pub fn rank(&self) -> usize {
        self.factor_orders.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.factor_orders.is_empty()
    }

    /// Group order, or `None` on u64 overflow.
    pub fn checked_order(&self) -> Option<u64> {
        let mut acc: u64 = 1;
        for &n in &self.factor_orders {
            acc = acc.checked_mul(n)?;
        }
        Some(acc)
    }

    /// Group order. Panics on overflow; cap-checked paths use [`Self::checked_order`].
    pub fn order(&self) -> u64 {
        self.checked_order().expect("group order overflows u64")
    }

    pub fn ensure_within_cap(&self, cap: u64) -> Result<u64, GroupError> {
        let order = self.checked_order().ok_or(GroupError::OrderOverflow)?;
        if order > cap {
            return Err(GroupError::CapExceeded { order, cap });
        }
        Ok(order)
    }

    /// Builds an element from integer coordinates, reducing each mod its factor order.
    pub fn element(&self, coords: &[i64]) -> Result<Element, GroupError> {
        if coords.len() != self.rank() {
            return Err(GroupError::RankMismatch {
                got: coords.len(),
                expected: self.rank(),
            });
        }
        let reduced = coords
            .iter()
            .zip(&self.factor_orders)
            .map(|(&c, &n)| c.rem_euclid(n as i64) as u64)
            .collect();
        Ok(Element { coords: reduced })
    }

    pub fn identity(&self) -> Element {
        Element {
            coords: vec![0; self.rank()],
        }
    }

    /// Lexicographic enumeration of all elements; the identity comes first.
    pub fn enumerate_elements(&self, cap: u64) -> Result<Vec<Element>, GroupError> {
        let order = self.ensure_within_cap(cap)?;
        let indexer = Indexer::new(self);
        let mut out = Vec::with_capacity(order as usize);
        for idx in 0..order {
            out.push(indexer.element_at(idx));
        }
        Ok(out)
    }

    /// Orthogonal concatenation of factor lists.
    pub fn product(&self, other: &FinAbGroup) -> FinAbGroup {
        let mut factor_orders = self.factor_orders.clone();
        factor_orders.extend_from_slice(&other.factor_orders);
        FinAbGroup { factor_orders }
    }

    /// Invariant factors (divisibility chain, entries > 1) via the Smith form
    /// of the diagonal relation matrix. Two groups are abstractly isomorphic
    /// exactly when these agree; equality of `FinAbGroup` values stays strict
    /// on the factor list as given.
    pub fn invariant_factors(&self) -> Vec<u64> {
        let g = self.rank();
        if g == 0 {
            return Vec::new();
        }
        let diag: Vec<Vec<i128>> = (0..g)
            .map(|i| {
                (0..g)
                    .map(|j| if i == j { self.factor_orders[i] as i128 } else { 0 })
                    .collect()
            })
            .collect();
        let snf = crate::snf::smith_normal_form(&diag).expect("factor orders stay in range");
        snf.diagonal()
            .into_iter()
            .filter(|&d| d > 1)
            .map(|d| d as u64)
            .collect()
    }
}

/// An element of a [`FinAbGroup`]: one canonical coordinate per cyclic factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element {
    coords: Vec<u64>,
}

impl Element {
    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub(crate) fn from_coords(coords: Vec<u64>) -> Element {
        Element { coords }
    }

    pub fn is_identity(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }
}

/// Mixed-radix index arithmetic for a fixed group.
///
/// Element indices run over `0..order` with the first coordinate most
/// significant, so index order equals lexicographic coordinate order and the
/// identity has index 0.
#[derive(Clone, Debug)]
pub(crate) struct Indexer {
    orders: Vec<u64>,
    strides: Vec<u64>,
    order: u64,
}

impl Indexer {
    pub fn new(group: &FinAbGroup) -> Indexer {
        let orders = group.factor_orders().to_vec();
        let mut strides = vec![1u64; orders.len()];
        for i in (0..orders.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * orders[i + 1];
        }
        let order = group.order();
        Indexer {
            orders,
            strides,
            order,
        }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn rank(&self) -> usize {
        self.orders.len()
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn digit(&self, idx: u64, i: usize) -> u64 {
        (idx / self.strides[i]) % self.orders[i]
    }

    pub fn decode_into(&self, idx: u64, buf: &mut Vec<u64>) {
        buf.clear();
        for i in 0..self.orders.len() {
            buf.push(self.digit(idx, i));
        }
    }

    pub fn element_at(&self, idx: u64) -> Element {
        let mut coords = Vec::with_capacity(self.orders.len());
        for i in 0..self.orders.len() {
            coords.push(self.digit(idx, i));
        }
        Element { coords }
    }

    pub fn index_of(&self, element: &Element) -> u64 {
        debug_assert_eq!(element.coords.len(), self.orders.len());
        element
            .coords
            .iter()
            .zip(&self.strides)
            .map(|(&c, &s)| c * s)
            .sum()
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        let mut out = 0;
        for i in 0..self.orders.len() {
            let n = self.orders[i];
            let s = self.strides[i];
            out += (((a / s) % n + (b / s) % n) % n) * s;
        }
        out
    }

    #[allow(dead_code)] // used by test oracles
    pub fn neg(&self, a: u64) -> u64 {
        let mut out = 0;
        for i in 0..self.orders.len() {
            let n = self.orders[i];
            let s = self.strides[i];
            let d = (a / s) % n;
            out += ((n - d) % n) * s;
        }
        out
    }

    /// Order of the element with the given index: lcm over coordinates of
    /// `n_i / gcd(n_i, c_i)`.
    pub fn element_order(&self, a: u64) -> u64 {
        let mut ord: u64 = 1;
        for i in 0..self.orders.len() {
            let n = self.orders[i];
            let d = (a / self.strides[i]) % n;
            ord = ord.lcm(&(n / n.gcd(&d)));
        }
        ord
    }
}

/// A subgroup, stored as its full (sorted) element-index set plus the
/// generators it was built from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subgroup {
    group: FinAbGroup,
    generators: Vec<u64>,
    elements: Vec<u64>,
}

impl Subgroup {
    pub fn group(&self) -> &FinAbGroup {
        &self.group
    }

    pub fn order(&self) -> u64 {
        self.elements.len() as u64
    }

    pub fn is_trivial(&self) -> bool {
        self.elements.len() == 1
    }

    pub fn element_indices(&self) -> &[u64] {
        &self.elements
    }

    pub fn generator_indices(&self) -> &[u64] {
        &self.generators
    }

    pub fn contains_index(&self, idx: u64) -> bool {
        self.elements.binary_search(&idx).is_ok()
    }

    pub fn contains(&self, element: &Element) -> bool {
        let indexer = Indexer::new(&self.group);
        self.contains_index(indexer.index_of(element))
    }

    pub fn generators(&self) -> Vec<Element> {
        let indexer = Indexer::new(&self.group);
        self.generators.iter().map(|&i| indexer.element_at(i)).collect()
    }

    pub fn elements(&self) -> Vec<Element> {
        let indexer = Indexer::new(&self.group);
        self.elements.iter().map(|&i| indexer.element_at(i)).collect()
    }

    /// Is `self` contained in `other` (same ambient group assumed)?
    pub fn is_subset_of(&self, other: &Subgroup) -> bool {
        self.elements.iter().all(|&i| other.contains_index(i))
    }

    pub(crate) fn from_indices(
        group: &FinAbGroup,
        generators: Vec<u64>,
        mut elements: Vec<u64>,
    ) -> Subgroup {
        elements.sort_unstable();
        elements.dedup();
        Subgroup {
            group: group.clone(),
            generators,
            elements,
        }
    }
}

/// Closure of a generating set: the smallest subgroup containing `gens`.
pub fn subgroup_closure(
    group: &FinAbGroup,
    gens: &[Element],
    cap: u64,
) -> Result<Subgroup, GroupError> {
    group.ensure_within_cap(cap)?;
    let indexer = Indexer::new(group);
    let mut gen_idxs = Vec::with_capacity(gens.len());
    for gen in gens {
        if gen.coords().len() != group.rank() {
            return Err(GroupError::RankMismatch {
                got: gen.coords().len(),
                expected: group.rank(),
            });
        }
        gen_idxs.push(indexer.index_of(gen));
    }
    let elements = closure_indices(&indexer, &gen_idxs);
    Ok(Subgroup::from_indices(group, gen_idxs, elements))
}

/// Closure over element indices. Returns a sorted, deduplicated index list.
pub(crate) fn closure_indices(indexer: &Indexer, gens: &[u64]) -> Vec<u64> {
    let mut seen = IndexSet::new(indexer.order());
    let mut list = vec![0u64];
    seen.insert(0);
    for &g in gens {
        if seen.contains(g) {
            continue;
        }
        let base = list.clone();
        let ord = indexer.element_order(g);
        let mut mult = 0u64; // running t*g
        for _ in 1..ord {
            mult = indexer.add(mult, g);
            for &s in &base {
                let y = indexer.add(s, mult);
                if seen.insert(y) {
                    list.push(y);
                }
            }
        }
    }
    list.sort_unstable();
    list
}

/// Bitset over element indices.
pub(crate) struct IndexSet {
    bits: Vec<u64>,
}

impl IndexSet {
    pub fn new(order: u64) -> IndexSet {
        IndexSet {
            bits: vec![0; (order as usize).div_ceil(64)],
        }
    }

    pub fn contains(&self, idx: u64) -> bool {
        self.bits[(idx / 64) as usize] >> (idx % 64) & 1 == 1
    }

    /// Inserts, returning true when the index was new.
    pub fn insert(&mut self, idx: u64) -> bool {
        let w = &mut self.bits[(idx / 64) as usize];
        let mask = 1u64 << (idx % 64);
        let new = *w & mask == 0;
        *w |= mask;
        new
    }
}

/// Every subgroup exactly once, sorted by (order, element list).
///
/// Breadth-first closure over one-generator extensions. Bounded by the hard
/// 4096 cap on the group order; note that the subgroup count of elementary
/// abelian 2-groups explodes combinatorially well before that cap, so keep
/// such inputs to order 64 or so.
pub fn all_subgroups(group: &FinAbGroup) -> Result<Vec<Subgroup>, GroupError> {
    let order = group.ensure_within_cap(SUBGROUP_ENUMERATION_CAP)?;
    let indexer = Indexer::new(group);
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut out: Vec<Subgroup> = Vec::new();

    let trivial = Subgroup::from_indices(group, vec![], vec![0]);
    seen.insert(trivial.elements.clone());
    out.push(trivial);

    let mut i = 0;
    while i < out.len() {
        let current = out[i].clone();
        for x in 1..order {
            if current.contains_index(x) {
                continue;
            }
            let mut gens = current.generators.clone();
            gens.push(x);
            let elements = closure_indices(&indexer, &gens);
            if seen.insert(elements.clone()) {
                out.push(Subgroup::from_indices(group, gens, elements));
            }
        }
        i += 1;
    }

    out.sort_by(|a, b| {
        (a.elements.len(), &a.elements).cmp(&(b.elements.len(), &b.elements))
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn enumerate_trivial_group() {
        let g = FinAbGroup::trivial();
        let elems = g.enumerate_elements(DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(elems.len(), 1);
        assert!(elems[0].is_identity());
    }

    #[test]
    fn enumerate_z2xz2_is_lexicographic() {
        let g = FinAbGroup::new(vec![2, 2]).unwrap();
        let elems = g.enumerate_elements(DEFAULT_ENUMERATION_CAP).unwrap();
        let coords: Vec<&[u64]> = elems.iter().map(|e| e.coords()).collect();
        assert_eq!(coords, vec![&[0, 0][..], &[0, 1], &[1, 0], &[1, 1]]);
    }

    #[test]
    fn enumerate_z6() {
        let g = FinAbGroup::cyclic(6).unwrap();
        assert_eq!(g.enumerate_elements(DEFAULT_ENUMERATION_CAP).unwrap().len(), 6);
    }

    #[test]
    fn cap_is_enforced() {
        let g = FinAbGroup::cyclic(8).unwrap();
        assert!(matches!(
            g.enumerate_elements(4),
            Err(GroupError::CapExceeded { order: 8, cap: 4 })
        ));
    }

    #[test]
    fn closure_of_nothing_is_trivial() {
        let g = FinAbGroup::new(vec![2, 2]).unwrap();
        let s = subgroup_closure(&g, &[], DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(s.order(), 1);
        assert!(s.contains(&g.identity()));
    }

    #[test]
    fn closure_in_z4() {
        let g = FinAbGroup::cyclic(4).unwrap();
        let two = g.element(&[2]).unwrap();
        let s = subgroup_closure(&g, &[two], DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(s.element_indices(), &[0, 2]);
    }

    #[test]
    fn closure_generating_whole_group() {
        let g = FinAbGroup::new(vec![2, 2]).unwrap();
        let gens = [g.element(&[1, 0]).unwrap(), g.element(&[0, 1]).unwrap()];
        let s = subgroup_closure(&g, &gens, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(s.order(), 4);
    }

    #[test]
    fn invariant_factor_canonicalization() {
        let g = FinAbGroup::new(vec![2, 3]).unwrap();
        assert_eq!(g.invariant_factors(), vec![6]);
        let h = FinAbGroup::new(vec![4, 6]).unwrap();
        assert_eq!(h.invariant_factors(), vec![2, 12]);
        let k = FinAbGroup::new(vec![2, 6]).unwrap();
        assert_eq!(k.invariant_factors(), vec![2, 6]);
        assert!(FinAbGroup::trivial().invariant_factors().is_empty());
        // strict equality is still on the factor list
        assert_ne!(g, FinAbGroup::cyclic(6).unwrap());
    }

    #[test]
    fn subgroup_counts() {
        let z2 = FinAbGroup::cyclic(2).unwrap();
        assert_eq!(all_subgroups(&z2).unwrap().len(), 2);
        let z4 = FinAbGroup::cyclic(4).unwrap();
        assert_eq!(all_subgroups(&z4).unwrap().len(), 3);
        let v4 = FinAbGroup::new(vec![2, 2]).unwrap();
        assert_eq!(all_subgroups(&v4).unwrap().len(), 5);
    }

    /// Independent oracle: filter all element subsets for subgroup-ness.
    fn subgroups_by_subset_filter(group: &FinAbGroup) -> usize {
        let order = group.order();
        assert!(order <= 16);
        let indexer = Indexer::new(group);
        let mut count = 0;
        'subsets: for mask in 0u32..(1 << order) {
            if mask & 1 == 0 {
                continue; // must contain the identity
            }
            let members: Vec<u64> = (0..order).filter(|&i| mask >> i & 1 == 1).collect();
            for &a in &members {
                if mask >> indexer.neg(a) & 1 == 0 {
                    continue 'subsets;
                }
                for &b in &members {
                    if mask >> indexer.add(a, b) & 1 == 0 {
                        continue 'subsets;
                    }
                }
            }
            count += 1;
        }
        count
    }

    #[test]
    fn subgroup_enumeration_matches_subset_filter() {
        for orders in [vec![], vec![2], vec![4], vec![2, 2], vec![6], vec![2, 4], vec![3, 3], vec![2, 2, 2], vec![12], vec![16]] {
            let g = FinAbGroup::new(orders.clone()).unwrap();
            if g.order() > 16 {
                continue;
            }
            let found = all_subgroups(&g).unwrap();
            assert_eq!(
                found.len(),
                subgroups_by_subset_filter(&g),
                "mismatch for {:?}",
                orders
            );
            // Lagrange, and closure sanity for each reported subgroup.
            for s in &found {
                assert_eq!(g.order() % s.order(), 0);
            }
        }
    }

    fn arb_group() -> impl Strategy<Value = FinAbGroup> {
        prop::collection::vec(2u64..7, 0..3)
            .prop_map(|orders| FinAbGroup::new(orders).unwrap())
    }

    proptest! {
        #[test]
        fn closures_are_subgroups(g in arb_group(), seeds in prop::collection::vec(0u64..1000, 0..3)) {
            let order = g.order();
            let indexer = Indexer::new(&g);
            let gens: Vec<Element> = seeds.iter().map(|&s| indexer.element_at(s % order)).collect();
            let sub = subgroup_closure(&g, &gens, DEFAULT_ENUMERATION_CAP).unwrap();
            // identity, closure under + and -
            prop_assert!(sub.contains_index(0));
            for &a in sub.element_indices() {
                prop_assert!(sub.contains_index(indexer.neg(a)));
                for &b in sub.element_indices() {
                    prop_assert!(sub.contains_index(indexer.add(a, b)));
                }
            }
            prop_assert_eq!(order % sub.order(), 0);
        }

        #[test]
        fn index_arithmetic_matches_coords(g in arb_group(), a in 0u64..1000, b in 0u64..1000) {
            let order = g.order();
            let indexer = Indexer::new(&g);
            let (a, b) = (a % order, b % order);
            let ea = indexer.element_at(a);
            let eb = indexer.element_at(b);
            let sum: Vec<i64> = ea.coords().iter().zip(eb.coords())
                .map(|(&x, &y)| (x + y) as i64)
                .collect();
            let expected = g.element(&sum).unwrap();
            prop_assert_eq!(indexer.element_at(indexer.add(a, b)), expected);
            prop_assert_eq!(indexer.add(a, indexer.neg(a)), 0);
        }
    }
}
