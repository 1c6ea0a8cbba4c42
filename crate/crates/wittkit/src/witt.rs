//! Witt-class arithmetic for nondegenerate pre-metric groups.
//!
//! Two nondegenerate forms are Witt equal when their difference (orthogonal
//! sum with the reversed form) condenses all the way down to the trivial
//! group. Every class has a unique completely anisotropic representative,
//! which is what [`anisotropic_kernel`] computes by exhaustive condensation.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use thiserror::Error;

use crate::group::{subgroup_closure, FinAbGroup, GroupError, DEFAULT_ENUMERATION_CAP};
use crate::metric::{MetricError, PreMetricGroup};
use crate::rational::RationalMod1;

/// Default ceiling for order searches; twice the largest finite order that
/// actually occurs (32).
pub const DEFAULT_MAX_ORDER_SEARCH: u64 = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WittError {
    #[error("form is degenerate (radical order {radical_order}); Witt operations need a trivial radical")]
    Degenerate { radical_order: u64 },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl From<GroupError> for WittError {
    fn from(e: GroupError) -> WittError {
        WittError::Metric(MetricError::Group(e))
    }
}

/// A nondegenerate form treated up to Witt equivalence, carrying its
/// anisotropic representative.
#[derive(Debug, Clone, PartialEq)]
pub struct WittClassHandle {
    representative: PreMetricGroup,
    aniso: PreMetricGroup,
}

impl WittClassHandle {
    pub fn new(representative: PreMetricGroup) -> Result<WittClassHandle, WittError> {
        WittClassHandle::new_with_cap(representative, DEFAULT_ENUMERATION_CAP)
    }

    pub fn new_with_cap(
        representative: PreMetricGroup,
        cap: u64,
    ) -> Result<WittClassHandle, WittError> {
        let aniso = anisotropic_kernel(&representative, cap)?;
        Ok(WittClassHandle {
            representative,
            aniso,
        })
    }

    pub fn trivial() -> WittClassHandle {
        let t = crate::metric::trivial_form();
        WittClassHandle {
            representative: t.clone(),
            aniso: t,
        }
    }

    pub fn representative(&self) -> &PreMetricGroup {
        &self.representative
    }

    pub fn anisotropic(&self) -> &PreMetricGroup {
        &self.aniso
    }

    pub fn is_trivial(&self) -> bool {
        self.aniso.group().is_trivial()
    }

    /// The inverse class.
    pub fn reverse(&self) -> WittClassHandle {
        WittClassHandle {
            representative: self.representative.reverse(),
            aniso: self.aniso.reverse(),
        }
    }

    /// Class addition. Works on the anisotropic representatives, which keeps
    /// the intermediate forms small.
    pub fn add(&self, other: &WittClassHandle, cap: u64) -> Result<WittClassHandle, WittError> {
        let sum = self.aniso.direct_sum(&other.aniso, cap)?;
        WittClassHandle::new_with_cap(sum, cap)
    }

    /// Snapped Gauss argument of the class (a Witt invariant).
    pub fn gauss_argument(&self) -> Result<RationalMod1, WittError> {
        self.aniso
            .gauss_sum()?
            .argument
            .snapped()
            .ok_or_else(|| WittError::Internal("nondegenerate form failed to snap".into()))
    }
}

type MemoKey = (Vec<u64>, Vec<RationalMod1>, Vec<RationalMod1>);

fn kernel_memo() -> &'static Mutex<HashMap<MemoKey, PreMetricGroup>> {
    static MEMO: OnceLock<Mutex<HashMap<MemoKey, PreMetricGroup>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

fn memo_key(c: &PreMetricGroup) -> MemoKey {
    (
        c.group().factor_orders().to_vec(),
        c.q_on_generators().to_vec(),
        c.pairings().to_vec(),
    )
}

/// Exhaustive condensation: repeatedly condense by the cyclic span of the
/// minimal isotropic element (ordered by element order, then lexicographic
/// coordinates) until no nonzero isotropic element remains.
pub fn anisotropic_kernel(c: &PreMetricGroup, cap: u64) -> Result<PreMetricGroup, WittError> {
    if !c.is_nondegenerate() {
        return Err(WittError::Degenerate {
            radical_order: c.radical_order(),
        });
    }
    c.group().ensure_within_cap(cap)?;

    let key = memo_key(c);
    if let Some(hit) = kernel_memo().lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }

    let mut current = c.clone();
    while let Some(x) = current.minimal_isotropic_index() {
        let indexer = crate::group::Indexer::new(current.group());
        let element = indexer.element_at(x);
        let span = subgroup_closure(current.group(), &[element], cap)?;
        // q vanishes on the whole cyclic span: q(t*x) = t^2 q(x) = 0.
        for &m in span.element_indices() {
            if current.q_numerator(m) != 0 {
                return Err(WittError::Internal(
                    "isotropic element has non-isotropic span".into(),
                ));
            }
        }
        current = current.condense(&span, cap)?;
    }

    kernel_memo().lock().unwrap().insert(key, current.clone());
    Ok(current)
}

/// Is the Witt class of `c` trivial?
pub fn witt_trivial(c: &PreMetricGroup, cap: u64) -> Result<bool, WittError> {
    Ok(anisotropic_kernel(c, cap)?.group().is_trivial())
}

/// Witt equality: the difference class `x - y` has trivial anisotropic kernel.
pub fn witt_equal(x: &WittClassHandle, y: &WittClassHandle, cap: u64) -> Result<bool, WittError> {
    Ok(x.add(&y.reverse(), cap)?.is_trivial())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WittOrder {
    Finite(u64),
    NotFoundUpTo(u64),
}

/// Least `n <= max_n` with the n-fold sum Witt-trivial.
pub fn witt_order(x: &WittClassHandle, max_n: u64, cap: u64) -> Result<WittOrder, WittError> {
    let mut acc = WittClassHandle::trivial();
    for n in 1..=max_n {
        acc = acc.add(x, cap)?;
        if acc.is_trivial() {
            return Ok(WittOrder::Finite(n));
        }
    }
    Ok(WittOrder::NotFoundUpTo(max_n))
}

/// All nondegenerate order-4 generator data (on Z/4 and Z/2 x Z/2).
fn order_four_forms() -> Vec<PreMetricGroup> {
    let mut forms = Vec::new();
    for a in [1i128, 3, 5, 7] {
        forms.push(crate::metric::cyclic_form(4, a, 8).expect("valid Z/4 form"));
    }
    let v4 = FinAbGroup::new(vec![2, 2]).expect("Z/2 x Z/2");
    for q1 in 0..4i128 {
        for q2 in 0..4i128 {
            for b in 0..2i128 {
                let form = PreMetricGroup::build(
                    v4.clone(),
                    vec![RationalMod1::new(q1, 4), RationalMod1::new(q2, 4)],
                    vec![RationalMod1::new(b, 2)],
                )
                .expect("congruences hold by construction");
                forms.push(form);
            }
        }
    }
    forms.retain(|f| f.is_nondegenerate());
    forms
}

/// The eight Witt classes of nondegenerate order-4 forms carrying an element
/// with q(u) = 1/2. They form a cyclic group of order 8 under orthogonal sum
/// (verified at construction); sorted by Gauss argument, so the trivial class
/// (the hyperbolic plane) comes first and index 1 is a generator.
pub fn ising_pointed_subgroup() -> Result<&'static Vec<WittClassHandle>, WittError> {
    static CACHE: OnceLock<Result<Vec<WittClassHandle>, WittError>> = OnceLock::new();
    CACHE
        .get_or_init(build_ising_pointed_subgroup)
        .as_ref()
        .map_err(|e| e.clone())
}

fn build_ising_pointed_subgroup() -> Result<Vec<WittClassHandle>, WittError> {
    let cap = DEFAULT_ENUMERATION_CAP;
    let mut members: Vec<WittClassHandle> = Vec::new();
    for form in order_four_forms() {
        let has_half = (0..form.order()).any(|i| form.q_at_index(i) == RationalMod1::HALF);
        if !has_half {
            continue;
        }
        let handle = WittClassHandle::new_with_cap(form, cap)?;
        let mut known = false;
        for seen in &members {
            if witt_equal(&handle, seen, cap)? {
                known = true;
                break;
            }
        }
        if !known {
            members.push(handle);
        }
    }
    if members.len() != 8 {
        return Err(WittError::Internal(format!(
            "expected 8 distinct classes, found {}",
            members.len()
        )));
    }
    members.sort_by_key(|h| {
        h.gauss_argument()
            .map(|a| a.numerator_for_denominator(8))
            .unwrap_or(u64::MAX)
    });
    // Cyclic of order 8: the argument-1/8 member generates, and the set is
    // closed under addition.
    let generator = &members[1];
    let mut power = WittClassHandle::trivial();
    for step in 1..=8u64 {
        power = power.add(generator, cap)?;
        let expected_trivial = step == 8;
        if power.is_trivial() != expected_trivial {
            return Err(WittError::Internal(
                "generator powers do not exhaust a cyclic group of order 8".into(),
            ));
        }
        let mut hit = false;
        for m in &members {
            if witt_equal(&power, m, cap)? {
                hit = true;
                break;
            }
        }
        if !hit {
            return Err(WittError::Internal(
                "generator power escapes the subgroup".into(),
            ));
        }
    }
    for a in &members {
        for b in &members {
            let sum = a.add(b, cap)?;
            let mut hit = false;
            for m in &members {
                if witt_equal(&sum, m, cap)? {
                    hit = true;
                    break;
                }
            }
            if !hit {
                return Err(WittError::Internal(
                    "subgroup is not closed under sum".into(),
                ));
            }
        }
    }
    Ok(members)
}

/// Membership of a class in the order-8 subgroup above.
pub fn in_ising_pointed_subgroup(x: &WittClassHandle, cap: u64) -> Result<bool, WittError> {
    for m in ising_pointed_subgroup()? {
        if witt_equal(x, m, cap)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Witt equality after quotienting by the order-8 pointed subgroup: the
/// pointed shadow of super-Witt equality.
pub fn switt_equal(x: &WittClassHandle, y: &WittClassHandle, cap: u64) -> Result<bool, WittError> {
    let diff = x.add(&y.reverse(), cap)?;
    in_ising_pointed_subgroup(&diff, cap)
}

/// Least `n <= max_n` whose n-fold sum lands in the order-8 pointed subgroup.
pub fn switt_order(x: &WittClassHandle, max_n: u64, cap: u64) -> Result<WittOrder, WittError> {
    let mut acc = WittClassHandle::trivial();
    for n in 1..=max_n {
        acc = acc.add(x, cap)?;
        if in_ising_pointed_subgroup(&acc, cap)? {
            return Ok(WittOrder::Finite(n));
        }
    }
    Ok(WittOrder::NotFoundUpTo(max_n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::DEFAULT_ENUMERATION_CAP as CAP;
    use crate::metric::{cyclic_form, hyperbolic_z2, trivial_form};

    fn handle(c: PreMetricGroup) -> WittClassHandle {
        WittClassHandle::new(c).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let hyp = hyperbolic_z2(CAP).unwrap();
        assert!(anisotropic_kernel(&hyp, CAP).unwrap().group().is_trivial());

        let a = cyclic_form(2, 1, 4).unwrap();
        assert_eq!(anisotropic_kernel(&a, CAP).unwrap(), a);

        // Eight-fold sum of (Z/2, 1/4) is Witt-trivial and nothing less is.
        let mut acc = trivial_form();
        for n in 1..=8 {
            acc = acc.direct_sum(&a, CAP).unwrap();
            let kernel = anisotropic_kernel(&acc, CAP).unwrap();
            assert_eq!(kernel.group().is_trivial(), n == 8, "n = {}", n);
        }
    }

    #[test]
    fn kernel_output_is_anisotropic() {
        for form in [
            cyclic_form(2, 1, 4)
                .unwrap()
                .direct_sum(&cyclic_form(2, 1, 4).unwrap(), CAP)
                .unwrap(),
            hyperbolic_z2(CAP).unwrap(),
            cyclic_form(3, 1, 3)
                .unwrap()
                .direct_sum(&cyclic_form(3, 1, 3).unwrap(), CAP)
                .unwrap(),
        ] {
            let k = anisotropic_kernel(&form, CAP).unwrap();
            assert!(!k.has_nonzero_isotropic());
        }
    }

    #[test]
    fn degenerate_is_rejected() {
        let svec = cyclic_form(2, 1, 2).unwrap();
        assert!(matches!(
            anisotropic_kernel(&svec, CAP),
            Err(WittError::Degenerate { radical_order: 2 })
        ));
    }

    #[test]
    fn equality_examples() {
        let a = handle(cyclic_form(2, 1, 4).unwrap());
        let a_rev = handle(cyclic_form(2, 3, 4).unwrap());
        assert!(witt_equal(&a, &a, CAP).unwrap());
        assert!(!witt_equal(&a, &a_rev, CAP).unwrap());
        let hyp = handle(hyperbolic_z2(CAP).unwrap());
        assert!(witt_equal(&hyp, &WittClassHandle::trivial(), CAP).unwrap());
    }

    #[test]
    fn orders_per_prime() {
        let cases: Vec<(PreMetricGroup, u64)> = vec![
            (cyclic_form(2, 1, 4).unwrap(), 8),
            (cyclic_form(3, 1, 3).unwrap(), 4),
            (cyclic_form(5, 1, 5).unwrap(), 2),
            (cyclic_form(5, 2, 5).unwrap(), 2),
            (cyclic_form(7, 1, 7).unwrap(), 4),
            (cyclic_form(11, 1, 11).unwrap(), 4),
            (cyclic_form(13, 1, 13).unwrap(), 2),
        ];
        for (form, expected) in cases {
            let h = handle(form.clone());
            assert_eq!(
                witt_order(&h, DEFAULT_MAX_ORDER_SEARCH, CAP).unwrap(),
                WittOrder::Finite(expected),
                "form {}",
                form
            );
        }
    }

    #[test]
    fn equality_implies_equal_gauss_arguments() {
        let pool = [
            handle(cyclic_form(2, 1, 4).unwrap()),
            handle(cyclic_form(2, 3, 4).unwrap()),
            handle(cyclic_form(3, 1, 3).unwrap()),
            handle(cyclic_form(4, 1, 8).unwrap()),
            handle(hyperbolic_z2(CAP).unwrap()),
            WittClassHandle::trivial(),
        ];
        for x in &pool {
            for y in &pool {
                if witt_equal(x, y, CAP).unwrap() {
                    assert_eq!(x.gauss_argument().unwrap(), y.gauss_argument().unwrap());
                }
            }
        }
    }

    #[test]
    fn class_invariant_under_condensation() {
        // The class survives condensation by any isotropic subgroup.
        let forms = [
            hyperbolic_z2(CAP).unwrap(),
            cyclic_form(2, 1, 4)
                .unwrap()
                .direct_sum(&hyperbolic_z2(CAP).unwrap(), CAP)
                .unwrap(),
            cyclic_form(3, 1, 3)
                .unwrap()
                .direct_sum(&cyclic_form(3, 2, 3).unwrap(), CAP)
                .unwrap(),
        ];
        for form in forms {
            let h = handle(form.clone());
            for iso in form.isotropic_subgroups().unwrap() {
                let condensed = handle(form.condense(&iso, CAP).unwrap());
                assert!(witt_equal(&h, &condensed, CAP).unwrap());
            }
        }
    }

    #[test]
    fn ising_pointed_subgroup_shape() {
        let members = ising_pointed_subgroup().unwrap();
        assert_eq!(members.len(), 8);
        // Contains the trivial class: the hyperbolic plane has q((1,1)) = 1/2.
        assert!(members.iter().any(|m| m.is_trivial()));
        // Arguments run over all eighths exactly once.
        let args: Vec<u64> = members
            .iter()
            .map(|m| m.gauss_argument().unwrap().numerator_for_denominator(8))
            .collect();
        assert_eq!(args, vec![0, 1, 2, 3, 4, 5, 6, 7]);
    }

    #[test]
    fn switt_orders() {
        let a = handle(cyclic_form(2, 1, 4).unwrap());
        assert_eq!(
            switt_order(&a, DEFAULT_MAX_ORDER_SEARCH, CAP).unwrap(),
            WittOrder::Finite(2)
        );
        assert!(switt_equal(&a, &a, CAP).unwrap());

        let c3 = handle(cyclic_form(3, 1, 3).unwrap());
        assert_eq!(
            switt_order(&c3, DEFAULT_MAX_ORDER_SEARCH, CAP).unwrap(),
            WittOrder::Finite(4)
        );
    }

    #[test]
    fn equality_is_an_equivalence_relation() {
        // A fixed pool of small nondegenerate forms, exhaustively paired.
        let pool: Vec<WittClassHandle> = crate::selftest::nondegenerate_forms_up_to_order(8)
            .into_iter()
            .step_by(11)
            .map(handle)
            .collect();
        assert!(pool.len() >= 20, "pool has {} forms", pool.len());
        let n = pool.len();
        let mut eq = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                eq[i][j] = witt_equal(&pool[i], &pool[j], CAP).unwrap();
            }
        }
        for i in 0..n {
            assert!(eq[i][i], "not reflexive at {}", i);
            for j in 0..n {
                assert_eq!(eq[i][j], eq[j][i], "not symmetric at ({}, {})", i, j);
                for k in 0..n {
                    if eq[i][j] && eq[j][k] {
                        assert!(eq[i][k], "not transitive at ({}, {}, {})", i, j, k);
                    }
                }
            }
        }
    }

    #[test]
    fn small_two_group_classes_land_in_the_rank_two_group() {
        // Every nondegenerate form on a 2-group of order <= 8 is equivalent
        // to m*a + n*b with a = (Z/2, 1/4), b = (Z/4, 1/8), 0 <= m < 8, n < 2.
        let a = handle(cyclic_form(2, 1, 4).unwrap());
        let b = handle(cyclic_form(4, 1, 8).unwrap());
        let mut combos = Vec::new();
        let mut ma = WittClassHandle::trivial();
        for _ in 0..8 {
            combos.push(ma.clone());
            combos.push(ma.add(&b, CAP).unwrap());
            ma = ma.add(&a, CAP).unwrap();
        }
        for form in crate::selftest::nondegenerate_forms_up_to_order(8) {
            if !form
                .group()
                .factor_orders()
                .iter()
                .all(|n| n.is_power_of_two())
            {
                continue;
            }
            let h = handle(form.clone());
            let hit = combos
                .iter()
                .any(|c| witt_equal(&h, c, CAP).unwrap());
            assert!(hit, "class of {} escapes the rank-two group", form);
        }
    }

    #[test]
    fn small_three_group_classes_are_powers_of_one_generator() {
        let g3 = handle(cyclic_form(3, 1, 3).unwrap());
        let mut powers = Vec::new();
        let mut acc = WittClassHandle::trivial();
        for _ in 0..4 {
            powers.push(acc.clone());
            acc = acc.add(&g3, CAP).unwrap();
        }
        for form in crate::selftest::nondegenerate_forms_up_to_order(9) {
            if !form.group().factor_orders().iter().all(|&n| n == 3 || n == 9) {
                continue;
            }
            let h = handle(form.clone());
            let hit = powers.iter().any(|c| witt_equal(&h, c, CAP).unwrap());
            assert!(hit, "class of {} is not a power of the order-3 generator", form);
        }
    }

    #[test]
    fn level_one_central_charge_matches_its_pointed_gauss_argument() {
        // The level-1 category is pointed; its multiplicative central charge
        // exponent must equal the Gauss argument of the corresponding form.
        let form = crate::sl2::pointed_part_form(1).unwrap();
        let arg = handle(form).gauss_argument().unwrap();
        assert_eq!(arg, crate::sl2::central_charge_exponent(1).unwrap());
    }

    #[test]
    fn kernel_memo_is_thread_safe() {
        let form = cyclic_form(3, 1, 3)
            .unwrap()
            .direct_sum(&cyclic_form(3, 1, 3).unwrap(), CAP)
            .unwrap()
            .direct_sum(&cyclic_form(3, 1, 3).unwrap(), CAP)
            .unwrap();
        let expected = anisotropic_kernel(&form, CAP).unwrap();
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let f = form.clone();
                std::thread::spawn(move || anisotropic_kernel(&f, CAP).unwrap())
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), expected);
        }
    }

    #[test]
    fn switt_vs_witt_on_four_fold_sum() {
        // 4a is not Witt-trivial but lies in the order-8 pointed subgroup.
        let a = handle(cyclic_form(2, 1, 4).unwrap());
        let mut four = WittClassHandle::trivial();
        for _ in 0..4 {
            four = four.add(&a, CAP).unwrap();
        }
        assert!(!witt_equal(&four, &WittClassHandle::trivial(), CAP).unwrap());
        assert!(switt_equal(&four, &WittClassHandle::trivial(), CAP).unwrap());
    }
}
