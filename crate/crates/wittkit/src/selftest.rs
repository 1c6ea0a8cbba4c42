//! The acceptance suite: ten numbered checks that pin down every headline
//! quantity this crate computes, runnable from the CLI (`wittkit selftest`)
//! and replayed verbatim by the integration tests.
//!
//! Everything here is exact except where a tolerance is stated inline.

use std::fmt::Write as _;

use crate::etale;
use crate::group::{all_subgroups, FinAbGroup, DEFAULT_ENUMERATION_CAP};
use crate::metric::{cyclic_form, hyperbolic_z2, trivial_form, PreMetricGroup};
use crate::presentation::{self, ElementOrder};
use crate::rational::RationalMod1;
use crate::sl2;
use crate::witt::{
    self, WittClassHandle, WittOrder, DEFAULT_MAX_ORDER_SEARCH,
};

const CAP: u64 = DEFAULT_ENUMERATION_CAP;
const DIM_TOLERANCE: f64 = 1e-9;

/// Outcome of one numbered acceptance check.
#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionOutcome {
    fn pass(id: usize, name: &'static str, detail: String) -> CriterionOutcome {
        CriterionOutcome {
            id,
            name,
            passed: true,
            detail,
        }
    }

    fn fail(id: usize, name: &'static str, detail: String) -> CriterionOutcome {
        CriterionOutcome {
            id,
            name,
            passed: false,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "criterion {:2} {:<34} {} ({})",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

fn outcome<F>(id: usize, name: &'static str, body: F) -> CriterionOutcome
where
    F: FnOnce() -> Result<String, String>,
{
    match body() {
        Ok(detail) => CriterionOutcome::pass(id, name, detail),
        Err(detail) => CriterionOutcome::fail(id, name, detail),
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ---------------------------------------------------------------------------
// form corpus

/// Every q value admissible on a generator of order n: denominators divide
/// n for odd n and 2n for even n.
fn admissible_q_values(n: u64) -> Vec<RationalMod1> {
    let d = if n % 2 == 0 { 2 * n } else { n };
    (0..d).map(|a| RationalMod1::new(a as i128, d as i128)).collect()
}

fn admissible_b_values(ni: u64, nj: u64) -> Vec<RationalMod1> {
    let d = num_integer::gcd(ni, nj);
    (0..d).map(|a| RationalMod1::new(a as i128, d as i128)).collect()
}

/// All factor shapes (nondecreasing cyclic orders >= 2) of the given order.
pub fn group_shapes_of_order(order: u64) -> Vec<Vec<u64>> {
    fn recurse(remaining: u64, min_factor: u64, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if remaining == 1 {
            out.push(prefix.clone());
            return;
        }
        for f in min_factor..=remaining {
            if remaining % f == 0 {
                prefix.push(f);
                recurse(remaining / f, f, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    recurse(order, 2, &mut Vec::new(), &mut out);
    out
}

/// Every valid form (degenerate ones included) on every shape of order <= max.
pub fn all_forms_up_to_order(max: u64) -> Vec<PreMetricGroup> {
    let mut forms = vec![trivial_form()];
    for order in 2..=max {
        for shape in group_shapes_of_order(order) {
            let group = FinAbGroup::new(shape.clone()).expect("shape factors >= 2");
            let g = shape.len();
            let q_choices: Vec<Vec<RationalMod1>> =
                shape.iter().map(|&n| admissible_q_values(n)).collect();
            let mut b_choices: Vec<Vec<RationalMod1>> = Vec::new();
            for i in 0..g {
                for j in i + 1..g {
                    b_choices.push(admissible_b_values(shape[i], shape[j]));
                }
            }
            let mut selector = vec![0usize; g + b_choices.len()];
            loop {
                let q_gen: Vec<RationalMod1> =
                    (0..g).map(|i| q_choices[i][selector[i]]).collect();
                let b_gen: Vec<RationalMod1> = (0..b_choices.len())
                    .map(|p| b_choices[p][selector[g + p]])
                    .collect();
                let form = PreMetricGroup::build(group.clone(), q_gen, b_gen)
                    .expect("admissible data satisfies the congruences");
                forms.push(form);
                // advance the mixed-radix selector
                let mut pos = selector.len();
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    let limit = if pos < g {
                        q_choices[pos].len()
                    } else {
                        b_choices[pos - g].len()
                    };
                    selector[pos] += 1;
                    if selector[pos] < limit {
                        break;
                    }
                    selector[pos] = 0;
                }
                if selector.iter().all(|&s| s == 0) {
                    break;
                }
            }
        }
    }
    forms
}

/// The nondegenerate sub-corpus.
pub fn nondegenerate_forms_up_to_order(max: u64) -> Vec<PreMetricGroup> {
    all_forms_up_to_order(max)
        .into_iter()
        .filter(|f| f.is_nondegenerate())
        .collect()
}

/// Hand-picked larger forms (orders 16..64, mixed degeneracy) extending the
/// exhaustive corpus for the subgroup-counting identity.
fn curated_large_forms() -> Vec<PreMetricGroup> {
    let mut forms = Vec::new();
    forms.push(cyclic_form(64, 1, 128).expect("Z/64 nondegenerate"));
    forms.push(cyclic_form(64, 0, 1).expect("Z/64 zero form"));
    forms.push(cyclic_form(32, 1, 64).expect("Z/32 nondegenerate"));
    let z2x32 = FinAbGroup::new(vec![2, 32]).unwrap();
    forms.push(
        PreMetricGroup::build(
            z2x32,
            vec![RationalMod1::new(1, 4), RationalMod1::new(1, 64)],
            vec![RationalMod1::HALF],
        )
        .expect("valid 2x32 form"),
    );
    let z8x8 = FinAbGroup::new(vec![8, 8]).unwrap();
    forms.push(
        PreMetricGroup::build(
            z8x8,
            vec![RationalMod1::ZERO, RationalMod1::ZERO],
            vec![RationalMod1::new(1, 8)],
        )
        .expect("8x8 hyperbolic"),
    );
    let z5x5 = FinAbGroup::new(vec![5, 5]).unwrap();
    forms.push(
        PreMetricGroup::build(
            z5x5,
            vec![RationalMod1::ZERO, RationalMod1::ZERO],
            vec![RationalMod1::new(1, 5)],
        )
        .expect("5x5 hyperbolic"),
    );
    let z3x9 = FinAbGroup::new(vec![3, 9]).unwrap();
    forms.push(
        PreMetricGroup::build(
            z3x9,
            vec![RationalMod1::new(1, 3), RationalMod1::new(1, 9)],
            vec![RationalMod1::new(1, 3)],
        )
        .expect("3x9 mixed form"),
    );
    let v16 = FinAbGroup::new(vec![2, 2, 2, 2]).unwrap();
    forms.push(
        PreMetricGroup::build(
            v16.clone(),
            vec![RationalMod1::ZERO; 4],
            vec![RationalMod1::ZERO; 6],
        )
        .expect("rank-4 zero form"),
    );
    let hyp = hyperbolic_z2(CAP).expect("hyperbolic plane");
    forms.push(hyp.direct_sum(&hyp, CAP).expect("double hyperbolic"));
    forms
}

// ---------------------------------------------------------------------------
// criteria

/// Orders of the basic one-generator classes at p = 2, 3, 5.
pub fn criterion_1() -> CriterionOutcome {
    outcome(1, "pointed Witt orders", || {
        let expectations: Vec<(PreMetricGroup, u64)> = vec![
            (cyclic_form(2, 1, 4).map_err(err)?, 8),
            (cyclic_form(3, 1, 3).map_err(err)?, 4),
            (cyclic_form(5, 1, 5).map_err(err)?, 2),
            (cyclic_form(5, 2, 5).map_err(err)?, 2),
        ];
        let mut detail = String::new();
        for (form, expected) in &expectations {
            let handle = WittClassHandle::new_with_cap(form.clone(), CAP).map_err(err)?;
            let order = witt::witt_order(&handle, DEFAULT_MAX_ORDER_SEARCH, CAP).map_err(err)?;
            if order != WittOrder::Finite(*expected) {
                return Err(format!("{} has order {:?}, expected {}", form, order, expected));
            }
            let _ = write!(detail, "{}:{} ", form.group().factor_orders()[0], expected);
        }
        // sum of the two p = 5 generators also has order 2
        let q1 = WittClassHandle::new_with_cap(cyclic_form(5, 1, 5).map_err(err)?, CAP).map_err(err)?;
        let q2 = WittClassHandle::new_with_cap(cyclic_form(5, 2, 5).map_err(err)?, CAP).map_err(err)?;
        let sum = q1.add(&q2, CAP).map_err(err)?;
        match witt::witt_order(&sum, DEFAULT_MAX_ORDER_SEARCH, CAP).map_err(err)? {
            WittOrder::Finite(2) => {}
            other => return Err(format!("sum of p=5 generators has order {:?}", other)),
        }
        detail.push_str("5+5':2");
        Ok(detail)
    })
}

/// The order-16 group generated by the Z/2 class and a searched Z/4 class.
pub fn criterion_2() -> CriterionOutcome {
    outcome(2, "rank-two 2-group structure", || {
        let a = WittClassHandle::new_with_cap(cyclic_form(2, 1, 4).map_err(err)?, CAP).map_err(err)?;

        // 8a = 0, 4a != 0 (so a has order exactly 8)
        let mut pow_a = vec![WittClassHandle::trivial()];
        for _ in 0..8 {
            let next = pow_a.last().unwrap().add(&a, CAP).map_err(err)?;
            pow_a.push(next);
        }
        if !pow_a[8].is_trivial() || pow_a[4].is_trivial() {
            return Err("order of the Z/2 class is not 8".into());
        }

        'candidates: for num in [1i128, 3, 5, 7] {
            let b = WittClassHandle::new_with_cap(cyclic_form(4, num, 8).map_err(err)?, CAP)
                .map_err(err)?;
            // b outside <a>
            for m in 0..8 {
                if witt::witt_equal(&b, &pow_a[m], CAP).map_err(err)? {
                    continue 'candidates;
                }
            }
            // 2b = s a for some s, s even (otherwise <a, b> would be cyclic)
            let bb = b.add(&b, CAP).map_err(err)?;
            let mut shift = None;
            for (s, pa) in pow_a.iter().enumerate().take(8) {
                if witt::witt_equal(&bb, pa, CAP).map_err(err)? {
                    shift = Some(s);
                    break;
                }
            }
            let Some(s) = shift else { continue 'candidates };
            if s % 2 != 0 {
                continue 'candidates;
            }
            // c = b - (s/2) a has order 2 outside <a>: certifies Z/8 + Z/2
            let mut c = b.clone();
            for _ in 0..(8 - s / 2) % 8 {
                c = c.add(&a, CAP).map_err(err)?;
            }
            if !c.add(&c, CAP).map_err(err)?.is_trivial() {
                continue 'candidates;
            }
            // the 16 combinations m a + n b are pairwise distinct
            let mut combos = Vec::new();
            for m in 0..8usize {
                for n in 0..2usize {
                    let mut x = pow_a[m].clone();
                    for _ in 0..n {
                        x = x.add(&b, CAP).map_err(err)?;
                    }
                    combos.push((m, n, x));
                }
            }
            for i in 0..combos.len() {
                for j in i + 1..combos.len() {
                    if witt::witt_equal(&combos[i].2, &combos[j].2, CAP).map_err(err)? {
                        return Err(format!(
                            "classes {}a+{}b and {}a+{}b coincide",
                            combos[i].0, combos[i].1, combos[j].0, combos[j].1
                        ));
                    }
                }
            }
            return Ok(format!(
                "witness q(1) = {}/8 on Z/4, 2b = {}a, 16 combinations distinct",
                num, s
            ));
        }
        Err("no Z/4 form certifies the direct-sum structure".into())
    })
}

/// The eight order-4 classes with a q-value -1 form a cyclic group of order 8.
pub fn criterion_3() -> CriterionOutcome {
    outcome(3, "order-4 classes with q(u) = -1", || {
        let members = witt::ising_pointed_subgroup().map_err(err)?;
        if members.len() != 8 {
            return Err(format!("found {} classes", members.len()));
        }
        // construction already certifies closure and an order-8 generator
        let args: Vec<u64> = members
            .iter()
            .map(|m| {
                m.gauss_argument()
                    .map(|a| a.numerator_for_denominator(8))
                    .unwrap_or(u64::MAX)
            })
            .collect();
        if args != vec![0, 1, 2, 3, 4, 5, 6, 7] {
            return Err(format!("gauss arguments {:?}", args));
        }
        Ok("8 classes, cyclic, arguments 0..7 over 8".into())
    })
}

/// Super-Witt orders: level-1 data drops to order 2, p = 3 stays at 4.
pub fn criterion_4() -> CriterionOutcome {
    outcome(4, "super-Witt pointed orders", || {
        let a = WittClassHandle::new_with_cap(cyclic_form(2, 1, 4).map_err(err)?, CAP).map_err(err)?;
        match witt::switt_order(&a, DEFAULT_MAX_ORDER_SEARCH, CAP).map_err(err)? {
            WittOrder::Finite(2) => {}
            other => return Err(format!("(Z/2, 1/4) has super order {:?}", other)),
        }
        let c3 = WittClassHandle::new_with_cap(cyclic_form(3, 1, 3).map_err(err)?, CAP).map_err(err)?;
        match witt::switt_order(&c3, DEFAULT_MAX_ORDER_SEARCH, CAP).map_err(err)? {
            WittOrder::Finite(4) => {}
            other => return Err(format!("(Z/3, 1/3) has super order {:?}", other)),
        }
        Ok("orders 2 and 4".into())
    })
}

/// |H| |H^perp| = |A| |H meet radical| over the whole test corpus.
pub fn criterion_5(quick: bool) -> CriterionOutcome {
    outcome(5, "subgroup-complement identity", || {
        let mut corpus = all_forms_up_to_order(if quick { 8 } else { 12 });
        if !quick {
            corpus.extend(curated_large_forms());
        }
        let mut forms = 0u64;
        let mut subgroups = 0u64;
        for form in &corpus {
            let radical = form.radical();
            for h in all_subgroups(form.group()).map_err(err)? {
                let perp = form.orthogonal_complement(&h).map_err(err)?;
                let meet = h
                    .element_indices()
                    .iter()
                    .filter(|&&x| radical.contains_index(x))
                    .count() as u64;
                if h.order() * perp.order() != form.order() * meet {
                    return Err(format!(
                        "identity fails on {} with |H| = {}",
                        form,
                        h.order()
                    ));
                }
                subgroups += 1;
            }
            forms += 1;
        }
        Ok(format!("{} forms, {} subgroups", forms, subgroups))
    })
}

/// Every isotropic subgroup of every small product decomposes; the opposite
/// Z/2 pair carries exactly two algebras.
pub fn criterion_6(quick: bool) -> CriterionOutcome {
    outcome(6, "etale decomposition corpus", || {
        let max = if quick { 4 } else { 8 };
        let corpus = nondegenerate_forms_up_to_order(max);
        let mut pairs = 0u64;
        let mut algebras = 0u64;
        for c1 in &corpus {
            for c2 in &corpus {
                let found = etale::enumerate_etale(c1, c2, CAP).map_err(err)?;
                for (alg, datum) in &found {
                    if !etale::check_prdim(alg, datum) {
                        return Err(format!(
                            "dimension product fails for |H| = {} in {} x {}",
                            alg.order(),
                            c1,
                            c2
                        ));
                    }
                }
                algebras += found.len() as u64;
                pairs += 1;
            }
        }
        let a = cyclic_form(2, 1, 4).map_err(err)?;
        let two = etale::enumerate_etale(&a, &a.reverse(), CAP).map_err(err)?;
        if two.len() != 2 {
            return Err(format!("opposite Z/2 pair has {} algebras", two.len()));
        }
        Ok(format!(
            "{} ordered pairs, {} algebras, no decomposition failure",
            pairs, algebras
        ))
    })
}

/// Fusion, dimensions and central charges for the level-k data.
pub fn criterion_7(quick: bool) -> CriterionOutcome {
    outcome(7, "level-k modular data", || {
        let assoc_max = if quick { 6 } else { 12 };
        for k in 1..=assoc_max {
            for i in 0..=k {
                for j in 0..=k {
                    for t in 0..=k {
                        let mut left = std::collections::BTreeMap::new();
                        for c in sl2::fusion(k, i, j).map_err(err)? {
                            for d in sl2::fusion(k, c, t).map_err(err)? {
                                *left.entry(d).or_insert(0u64) += 1;
                            }
                        }
                        let mut right = std::collections::BTreeMap::new();
                        for c in sl2::fusion(k, j, t).map_err(err)? {
                            for d in sl2::fusion(k, c, i).map_err(err)? {
                                *right.entry(d).or_insert(0u64) += 1;
                            }
                        }
                        if left != right {
                            return Err(format!("associativity fails at k={} ({},{},{})", k, i, j, t));
                        }
                    }
                }
            }
        }
        let dim_max = if quick { 30 } else { 100 };
        for k in 1..=dim_max {
            let total = sl2::fpdim_category(k).map_err(err)?;
            let mut sum = 0.0;
            for j in 0..=k {
                let d = sl2::fpdim_object(k, j).map_err(err)?;
                sum += d * d;
            }
            if (sum - total).abs() > DIM_TOLERANCE * total {
                return Err(format!("dimension sum fails at k = {}", k));
            }
            let c = sl2::central_charge_additive(k).map_err(err)?;
            let exponent = sl2::central_charge_exponent(k).map_err(err)?;
            if c.div_mod1(8) != exponent
                || exponent != RationalMod1::new(3 * k as i128, 8 * (k as i128 + 2))
            {
                return Err(format!("central charge mismatch at k = {}", k));
            }
        }
        if sl2::twist(2, 1).map_err(err)? != RationalMod1::new(3, 16) {
            return Err("twist(2, 1) != 3/16".into());
        }
        Ok(format!(
            "associativity to k = {}, dimensions and charges to k = {}",
            assoc_max, dim_max
        ))
    })
}

/// Local-module censuses over the regular algebra.
pub fn criterion_8() -> CriterionOutcome {
    outcome(8, "condensation census", || {
        for (k, expected) in [(4u64, 3usize), (8, 4)] {
            let set = sl2::local_modules(k).map_err(err)?;
            if set.simples.len() != expected {
                return Err(format!(
                    "level {} has {} simple local modules, expected {}",
                    k,
                    set.simples.len(),
                    expected
                ));
            }
            let total: f64 = set.simples.iter().map(|s| s.dim * s.dim).sum();
            let quarter = sl2::fpdim_category(k).map_err(err)? / 4.0;
            if (total - quarter).abs() > DIM_TOLERANCE * quarter {
                return Err(format!("dimension balance fails at level {}", k));
            }
        }
        Ok("levels 4 and 8: 3 and 4 simples, dimensions balance".into())
    })
}

/// Invariant factors and element orders of the level-class presentation.
pub fn criterion_9() -> CriterionOutcome {
    outcome(9, "level-class presentation", || {
        let p = presentation::sl2_witt_presentation(28);
        let s = p.analyze().map_err(err)?;
        if s.invariant_factors != vec![4, 8, 32] {
            return Err(format!("invariant factors {:?}", s.invariant_factors));
        }
        if s.free_rank != 21 {
            return Err(format!("free rank {}", s.free_rank));
        }
        for (k, expected) in [(1usize, 8u128), (2, 16), (4, 4), (6, 32), (10, 16)] {
            match s.element_order(&presentation::level_vector(28, k)) {
                ElementOrder::Finite(n) if n == expected => {}
                other => return Err(format!("x{} has order {:?}, expected {}", k, other, expected)),
            }
        }
        let wide = presentation::sl2_witt_presentation(50).analyze().map_err(err)?;
        for k in 1..=50 {
            if let ElementOrder::Finite(n) = wide.element_order(&presentation::level_vector(50, k)) {
                if !n.is_power_of_two() {
                    return Err(format!("x{} has non-2-primary order {}", k, n));
                }
            }
        }
        Ok("factors {4, 8, 32}, free rank 21, orders 8/16/4/32/16, 2-primary to level 50".into())
    })
}

/// The pointed parts of odd levels alternate between the level-1 class and
/// its inverse.
pub fn criterion_10() -> CriterionOutcome {
    outcome(10, "odd-level pointed parts", || {
        for l in 0..=4 {
            if !presentation::pointed_part_consistency(l, CAP).map_err(err)? {
                return Err(format!("consistency fails at l = {}", l));
            }
        }
        Ok("l = 0..4 through anisotropic kernels".into())
    })
}

/// Run the whole suite. `quick` shrinks the two corpus-driven criteria.
pub fn run_all(quick: bool) -> Vec<CriterionOutcome> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(quick),
        criterion_6(quick),
        criterion_7(quick),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ]
}
