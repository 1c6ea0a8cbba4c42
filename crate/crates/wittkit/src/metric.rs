//! Pre-metric groups: a finite abelian group together with a quadratic form
//! `q: A -> Q/Z`, specified by its values on the cyclic generators and the
//! bilinear pairings between distinct generators.
//!
//! The polarization `b(x,y) = q(x+y) - q(x) - q(y)` is biadditive and
//! symmetric; the radical of `b` detects degeneracy. Isotropic subgroups
//! (those on which `q` vanishes) condense: `(A, q) -> (H^perp / H, induced q)`,
//! which is the engine behind anisotropic kernels and Witt-class arithmetic.

use std::collections::HashSet;
use std::fmt;

use num_integer::Integer;
use thiserror::Error;

use crate::group::{
    closure_indices, Element, FinAbGroup, GroupError, IndexSet, Indexer, Subgroup,
    DEFAULT_ENUMERATION_CAP, SUBGROUP_ENUMERATION_CAP,
};
use crate::rational::RationalMod1;
use crate::snf::{mat_mul, smith_normal_form, Matrix, SnfError};

/// Run the full elementwise polarization check up to this group order.
const POLARIZATION_CHECK_MAX: u64 = 1 << 16;
/// Run the q(n*x) = n^2 q(x) scan while the total walk stays below this.
const SCALING_CHECK_WORK_MAX: u64 = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("ill-formed quadratic form: {0}")]
    IllFormed(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("subgroup is not isotropic: q is nonzero on {0:?}")]
    NotIsotropic(Element),
    #[error("gauss argument {arg} is not within 1e-6 of a multiple of 1/8 on a nondegenerate form")]
    SnapFailed { arg: f64 },
    #[error(transparent)]
    Snf(#[from] SnfError),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// A finite abelian group with a quadratic form, given by generator data.
///
/// `q(sum x_i e_i) = sum x_i^2 q(e_i) + sum_{i<j} x_i x_j b(e_i, e_j)` (mod 1).
/// Construction validates well-definedness and caches the full value table.
#[derive(Clone)]
pub struct PreMetricGroup {
    group: FinAbGroup,
    q_gen: Vec<RationalMod1>,
    b_gen: Vec<RationalMod1>, // upper triangle (i < j), row-major
    denom: u64,
    q_num: Vec<u64>, // q value numerators over `denom`, per element index
    radical_gens: Vec<u64>,
    radical_order: u64,
    q_trivial_on_radical: bool,
}

impl PartialEq for PreMetricGroup {
    fn eq(&self, other: &Self) -> bool {
        self.group == other.group && self.q_gen == other.q_gen && self.b_gen == other.b_gen
    }
}

impl Eq for PreMetricGroup {}

impl fmt::Debug for PreMetricGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PreMetricGroup")
            .field("group", &self.group.factor_orders())
            .field("q", &self.q_gen)
            .field("b", &self.b_gen)
            .finish()
    }
}

impl PreMetricGroup {
    /// Builds and validates a form under the default enumeration cap.
    pub fn build(
        group: FinAbGroup,
        q_gen: Vec<RationalMod1>,
        b_gen: Vec<RationalMod1>,
    ) -> Result<PreMetricGroup, MetricError> {
        PreMetricGroup::build_with_cap(group, q_gen, b_gen, DEFAULT_ENUMERATION_CAP)
    }

    pub fn build_with_cap(
        group: FinAbGroup,
        q_gen: Vec<RationalMod1>,
        b_gen: Vec<RationalMod1>,
        cap: u64,
    ) -> Result<PreMetricGroup, MetricError> {
        let g = group.rank();
        if q_gen.len() != g {
            return Err(MetricError::IllFormed(format!(
                "expected {} q values, got {}",
                g,
                q_gen.len()
            )));
        }
        let pairs = g * g.saturating_sub(1) / 2;
        if b_gen.len() != pairs {
            return Err(MetricError::IllFormed(format!(
                "expected {} pairing values, got {}",
                pairs,
                b_gen.len()
            )));
        }
        let order = group.ensure_within_cap(cap)?;
        let orders = group.factor_orders();

        // Well-definedness on each cyclic factor: replacing x_i by x_i + n_i
        // must not change the formula. Equivalent congruences:
        //   n_i^2 q_i = 0,  2 n_i q_i = 0,  gcd(n_i, n_j) b_ij = 0  (mod 1).
        for (i, &n) in orders.iter().enumerate() {
            let n = n as i128;
            if !q_gen[i].scaled(n * n).is_zero() {
                return Err(MetricError::IllFormed(format!(
                    "q on generator {} is {} but {}^2 * q != 0 (mod 1)",
                    i, q_gen[i], n
                )));
            }
            if !q_gen[i].scaled(2 * n).is_zero() {
                return Err(MetricError::IllFormed(format!(
                    "q on generator {} is {} but 2*{} * q != 0 (mod 1)",
                    i, q_gen[i], n
                )));
            }
        }
        for i in 0..g {
            for j in i + 1..g {
                let b = b_gen[pair_index(g, i, j)];
                let m = orders[i].gcd(&orders[j]) as i128;
                if !b.scaled(m).is_zero() {
                    return Err(MetricError::IllFormed(format!(
                        "pairing b(e{}, e{}) = {} is not killed by gcd of the factor orders",
                        i, j, b
                    )));
                }
            }
        }

        // Common denominator. After the congruences above it divides
        // 2 * lcm(factor orders), so it stays comfortably inside u64.
        let mut denom: u64 = 1;
        for q in q_gen.iter().chain(b_gen.iter()) {
            denom = denom.lcm(&q.den());
        }

        let indexer = Indexer::new(&group);
        let q_num = fill_q_table(&indexer, &q_gen, &b_gen, denom, order);
        debug_assert_eq!(q_num[0], 0);

        let (radical_gens, radical_order) = radical_data(&indexer, &q_gen, &b_gen, denom, order)?;
        let q_trivial_on_radical = radical_gens.iter().all(|&r| q_num[r as usize] == 0);

        let form = PreMetricGroup {
            group,
            q_gen,
            b_gen,
            denom,
            q_num,
            radical_gens,
            radical_order,
            q_trivial_on_radical,
        };
        form.enumerative_checks(&indexer, order)?;
        Ok(form)
    }

    /// Size-tiered enumeration checks. The generator-level polarization check
    /// implies full biadditivity by induction on coordinates; the congruences
    /// already guarantee it, so a failure here means an internal bug, but the
    /// scans are what make hand-written data trustworthy at desk scale.
    fn enumerative_checks(&self, indexer: &Indexer, order: u64) -> Result<(), MetricError> {
        let g = self.group.rank();
        if self.q_num[0] != 0 {
            return Err(MetricError::IllFormed("q(0) != 0".into()));
        }
        if order <= POLARIZATION_CHECK_MAX {
            let bt = self.bilinear_numerator_matrix();
            let gen_indices: Vec<u64> = (0..g).map(|j| index_of_generator(indexer, j)).collect();
            let mut coords = vec![0u64; g];
            for x in 0..order {
                indexer.decode_into(x, &mut coords);
                for j in 0..g {
                    let lhs = self.bil_num_indices(indexer, x, gen_indices[j]);
                    let mut rhs: u128 = 0;
                    for i in 0..g {
                        rhs += coords[i] as u128 * bt[i][j] as u128;
                    }
                    if lhs as u128 != rhs % self.denom as u128 {
                        return Err(MetricError::IllFormed(format!(
                            "polarization fails at element index {} against generator {}",
                            x, j
                        )));
                    }
                }
            }
        }
        let exponent = self
            .group
            .factor_orders()
            .iter()
            .fold(1u64, |acc, &n| acc.lcm(&n));
        if order.saturating_mul(exponent) <= SCALING_CHECK_WORK_MAX {
            for x in 0..order {
                let qx = self.q_num[x as usize];
                let ord = indexer.element_order(x);
                let mut y = x;
                for n in 2..=ord {
                    y = indexer.add(y, x);
                    let expected = (n as u128 * n as u128 * qx as u128 % self.denom as u128) as u64;
                    if self.q_num[y as usize] != expected {
                        return Err(MetricError::IllFormed(format!(
                            "q({}*x) != {}^2 q(x) at element index {}",
                            n, n, x
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Full symmetric matrix of bilinear numerators over `denom`:
    /// diagonal 2*q_i, off-diagonal the given pairings.
    fn bilinear_numerator_matrix(&self) -> Vec<Vec<u64>> {
        let g = self.group.rank();
        let mut bt = vec![vec![0u64; g]; g];
        for i in 0..g {
            bt[i][i] = 2 * self.q_gen[i].numerator_for_denominator(self.denom) % self.denom;
            for j in i + 1..g {
                let v = self.b_gen[pair_index(g, i, j)].numerator_for_denominator(self.denom);
                bt[i][j] = v;
                bt[j][i] = v;
            }
        }
        bt
    }

    pub fn group(&self) -> &FinAbGroup {
        &self.group
    }

    pub fn order(&self) -> u64 {
        self.q_num.len() as u64
    }

    pub fn q_on_generators(&self) -> &[RationalMod1] {
        &self.q_gen
    }

    pub fn pairings(&self) -> &[RationalMod1] {
        &self.b_gen
    }

    pub fn denominator(&self) -> u64 {
        self.denom
    }

    pub fn q_at_index(&self, idx: u64) -> RationalMod1 {
        RationalMod1::new(self.q_num[idx as usize] as i128, self.denom as i128)
    }

    pub fn q(&self, element: &Element) -> RationalMod1 {
        let indexer = Indexer::new(&self.group);
        self.q_at_index(indexer.index_of(element))
    }

    pub(crate) fn q_numerator(&self, idx: u64) -> u64 {
        self.q_num[idx as usize]
    }

    pub(crate) fn bil_num_indices(&self, indexer: &Indexer, x: u64, y: u64) -> u64 {
        let s = self.q_num[indexer.add(x, y) as usize] + 2 * self.denom
            - self.q_num[x as usize]
            - self.q_num[y as usize];
        s % self.denom
    }

    /// The polarization `b(x, y) = q(x+y) - q(x) - q(y)`.
    pub fn bilinear(&self, x: &Element, y: &Element) -> RationalMod1 {
        let indexer = Indexer::new(&self.group);
        let n = self.bil_num_indices(&indexer, indexer.index_of(x), indexer.index_of(y));
        RationalMod1::new(n as i128, self.denom as i128)
    }

    /// `{x : b(x, y) = 0 for all y}`, the degeneracy locus of the pairing.
    pub fn radical(&self) -> Subgroup {
        let indexer = Indexer::new(&self.group);
        let elements = closure_indices(&indexer, &self.radical_gens);
        debug_assert_eq!(elements.len() as u64, self.radical_order);
        Subgroup::from_indices(&self.group, self.radical_gens.clone(), elements)
    }

    pub fn radical_order(&self) -> u64 {
        self.radical_order
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.radical_order == 1
    }

    /// Radical of order 2 whose nonzero element has q = 1/2: the pointed
    /// shadow of a symmetric center equivalent to super vector spaces.
    pub fn is_slightly_degenerate_pointed(&self) -> bool {
        if self.radical_order != 2 {
            return false;
        }
        let indexer = Indexer::new(&self.group);
        let delta = self
            .radical_gens
            .iter()
            .copied()
            .find(|&r| r != 0)
            .map(|r| {
                // generators may repeat; normalize to the nonzero element
                let elems = closure_indices(&indexer, &[r]);
                elems.into_iter().find(|&e| e != 0).unwrap_or(0)
            })
            .unwrap_or(0);
        self.q_at_index(delta) == RationalMod1::HALF
    }

    /// Is q identically zero on the radical (Tannakian-type degeneracy)?
    pub fn q_trivial_on_radical(&self) -> bool {
        self.q_trivial_on_radical
    }

    /// `{x : b(x, h) = 0 for all h in H}`.
    pub fn orthogonal_complement(&self, h: &Subgroup) -> Result<Subgroup, MetricError> {
        self.ensure_same_group(h)?;
        let indexer = Indexer::new(&self.group);
        let hgens = h.generator_indices();
        let order = self.order();
        let mut elements = Vec::new();
        for y in 0..order {
            if hgens
                .iter()
                .all(|&g| self.bil_num_indices(&indexer, y, g) == 0)
            {
                elements.push(y);
            }
        }
        let gens = greedy_generators(&indexer, &elements);
        Ok(Subgroup::from_indices(&self.group, gens, elements))
    }

    /// Orthogonal direct sum: factor lists concatenate, cross pairings vanish.
    pub fn direct_sum(
        &self,
        other: &PreMetricGroup,
        cap: u64,
    ) -> Result<PreMetricGroup, MetricError> {
        let group = self.group.product(&other.group);
        let g1 = self.group.rank();
        let g2 = other.group.rank();
        let g = g1 + g2;
        let mut q_gen = self.q_gen.clone();
        q_gen.extend_from_slice(&other.q_gen);
        let mut b_gen = vec![RationalMod1::ZERO; g * g.saturating_sub(1) / 2];
        for i in 0..g1 {
            for j in i + 1..g1 {
                b_gen[pair_index(g, i, j)] = self.b_gen[pair_index(g1, i, j)];
            }
        }
        for i in 0..g2 {
            for j in i + 1..g2 {
                b_gen[pair_index(g, g1 + i, g1 + j)] = other.b_gen[pair_index(g2, i, j)];
            }
        }
        PreMetricGroup::build_with_cap(group, q_gen, b_gen, cap)
    }

    /// Same group, negated form.
    pub fn reverse(&self) -> PreMetricGroup {
        let q_gen = self.q_gen.iter().map(|&q| -q).collect();
        let b_gen = self.b_gen.iter().map(|&b| -b).collect();
        let q_num = self
            .q_num
            .iter()
            .map(|&v| if v == 0 { 0 } else { self.denom - v })
            .collect();
        PreMetricGroup {
            group: self.group.clone(),
            q_gen,
            b_gen,
            denom: self.denom,
            q_num,
            radical_gens: self.radical_gens.clone(),
            radical_order: self.radical_order,
            q_trivial_on_radical: self.q_trivial_on_radical,
        }
    }

    /// `sum_x e^{2 pi i q(x)}` in double precision.
    pub fn gauss_sum(&self) -> Result<GaussSumValue, MetricError> {
        let mut counts = vec![0u32; self.denom as usize];
        for &v in &self.q_num {
            counts[v as usize] += 1;
        }
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for (v, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let angle = 2.0 * std::f64::consts::PI * v as f64 / self.denom as f64;
            re += c as f64 * angle.cos();
            im += c as f64 * angle.sin();
        }
        let magnitude_sq = re * re + im * im;
        let raw = (im.atan2(re) / (2.0 * std::f64::consts::PI)).rem_euclid(1.0);

        let snappable = self.is_nondegenerate() || self.q_trivial_on_radical;
        let argument = if snappable && magnitude_sq > 1e-9 {
            let eighths = raw * 8.0;
            let k = eighths.round();
            if (eighths - k).abs() <= 8e-6 {
                GaussArgument::Snapped(RationalMod1::new(k as i128, 8))
            } else if self.is_nondegenerate() {
                return Err(MetricError::SnapFailed { arg: raw });
            } else {
                GaussArgument::Unsnapped(raw)
            }
        } else {
            GaussArgument::Unsnapped(raw)
        };
        Ok(GaussSumValue {
            magnitude_sq,
            argument,
        })
    }

    /// All subgroups on which q vanishes identically, sorted by
    /// (order, element list). Always contains the trivial subgroup.
    pub fn isotropic_subgroups(&self) -> Result<Vec<Subgroup>, MetricError> {
        let order = self.group.ensure_within_cap(SUBGROUP_ENUMERATION_CAP)?;
        let indexer = Indexer::new(&self.group);
        let candidates: Vec<u64> = (1..order).filter(|&x| self.q_num[x as usize] == 0).collect();

        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        let mut items: Vec<(Vec<u64>, Vec<u64>)> = vec![(vec![0], vec![])];
        seen.insert(vec![0]);
        let mut i = 0;
        while i < items.len() {
            let (elems, gens) = items[i].clone();
            for &z in &candidates {
                if elems.binary_search(&z).is_ok() {
                    continue;
                }
                // extension stays isotropic iff z is orthogonal to the subgroup
                if gens
                    .iter()
                    .any(|&g| self.bil_num_indices(&indexer, z, g) != 0)
                {
                    continue;
                }
                let mut new_elems = elems.clone();
                let ord = indexer.element_order(z);
                let mut mult = 0u64;
                for _ in 1..ord {
                    mult = indexer.add(mult, z);
                    for &s in &elems {
                        new_elems.push(indexer.add(s, mult));
                    }
                }
                new_elems.sort_unstable();
                new_elems.dedup();
                if seen.insert(new_elems.clone()) {
                    let mut new_gens = gens.clone();
                    new_gens.push(z);
                    items.push((new_elems, new_gens));
                }
            }
            i += 1;
        }

        items.sort_by(|a, b| (a.0.len(), &a.0).cmp(&(b.0.len(), &b.0)));
        Ok(items
            .into_iter()
            .map(|(elems, gens)| Subgroup::from_indices(&self.group, gens, elems))
            .collect())
    }

    /// The nonzero isotropic element minimal under (element order, index),
    /// if any. Index order is lexicographic coordinate order.
    pub fn minimal_isotropic_index(&self) -> Option<u64> {
        let indexer = Indexer::new(&self.group);
        let mut best: Option<(u64, u64)> = None;
        for x in 1..self.order() {
            if self.q_num[x as usize] != 0 {
                continue;
            }
            let key = (indexer.element_order(x), x);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        best.map(|(_, x)| x)
    }

    pub fn has_nonzero_isotropic(&self) -> bool {
        self.q_num[1..].contains(&0)
    }

    /// Condensation by an isotropic subgroup: `(H^perp / H, induced q)`.
    pub fn condense(&self, h: &Subgroup, cap: u64) -> Result<PreMetricGroup, MetricError> {
        Ok(self.condense_with_map(h, cap)?.0)
    }

    /// Condensation that also returns the projection `H^perp -> quotient`.
    pub fn condense_with_map(
        &self,
        h: &Subgroup,
        cap: u64,
    ) -> Result<(PreMetricGroup, CondenseMap), MetricError> {
        self.ensure_same_group(h)?;
        let indexer = Indexer::new(&self.group);
        for &x in h.element_indices() {
            if self.q_num[x as usize] != 0 {
                return Err(MetricError::NotIsotropic(indexer.element_at(x)));
            }
        }
        if h.is_trivial() {
            return Ok((self.clone(), CondenseMap::identity(&indexer)));
        }

        let g = self.group.rank();
        let orders = self.group.factor_orders();
        let order = self.order();

        // H^perp by scan; membership in the quotient only ever needs elements
        // of H^perp, so collect the full index list.
        let hgens = h.generator_indices();
        let perp: Vec<u64> = (0..order)
            .filter(|&y| {
                hgens
                    .iter()
                    .all(|&hg| self.bil_num_indices(&indexer, y, hg) == 0)
            })
            .collect();
        let kgens = greedy_generators(&indexer, &perp);

        // Lattice of H^perp inside Z^g and a basis for it.
        let m_k = lattice_rows(&indexer, &kgens, orders);
        let snf1 = smith_normal_form(&m_k)?;
        let d1 = snf1.diagonal();
        if d1.len() != g || d1.iter().any(|&d| d <= 0) {
            return Err(MetricError::Internal("perp lattice is not full rank".into()));
        }
        let prod_d1: i128 = d1.iter().product();
        if prod_d1 != order as i128 / perp.len() as i128 {
            return Err(MetricError::Internal("perp lattice index mismatch".into()));
        }
        let mut b_k = vec![vec![0i128; g]; g];
        for i in 0..g {
            for j in 0..g {
                b_k[i][j] = d1[i]
                    .checked_mul(snf1.v_inv[i][j])
                    .ok_or(SnfError::Overflow)?;
            }
        }

        // Express the lattice of H in that basis and diagonalize.
        let m_h = lattice_rows(&indexer, hgens, orders);
        let t = mat_mul(&m_h, &snf1.v)?;
        let mut x_mat = vec![vec![0i128; g]; m_h.len()];
        for (r, row) in t.iter().enumerate() {
            for i in 0..g {
                if row[i] % d1[i] != 0 {
                    return Err(MetricError::Internal(
                        "H lattice does not lie in the perp lattice".into(),
                    ));
                }
                x_mat[r][i] = row[i] / d1[i];
            }
        }
        let snf2 = smith_normal_form(&x_mat)?;
        let d2 = snf2.diagonal();
        if d2.len() != g || d2.iter().any(|&d| d <= 0) {
            return Err(MetricError::Internal("quotient lattice is not full rank".into()));
        }
        let prod_d2: i128 = d2.iter().product();
        if prod_d2 != perp.len() as i128 / h.order() as i128 {
            return Err(MetricError::Internal("quotient order mismatch".into()));
        }
        if self.is_nondegenerate() {
            let expected = order / (h.order() * h.order());
            if prod_d2 != expected as i128 {
                return Err(MetricError::Internal(
                    "|H^perp/H| != |A|/|H|^2 on a nondegenerate form".into(),
                ));
            }
        }

        // New basis f_i of the perp lattice with d2_i * f_i spanning H's lattice.
        let f = mat_mul(&snf2.v_inv, &b_k)?;
        let kept: Vec<usize> = (0..g).filter(|&i| d2[i] > 1).collect();
        let quotient_orders: Vec<u64> = kept.iter().map(|&i| d2[i] as u64).collect();
        let quotient_group = FinAbGroup::new(quotient_orders)?;

        // Coset representatives: reduce each basis row into A, then take the
        // lexicographically minimal member of its H-coset.
        let mut reps = Vec::with_capacity(kept.len());
        for &i in &kept {
            let raw = reduce_row(&indexer, &f[i], orders);
            let rep = h
                .element_indices()
                .iter()
                .map(|&he| indexer.add(raw, he))
                .min()
                .unwrap_or(raw);
            reps.push(rep);
        }

        let q_gen: Vec<RationalMod1> = reps.iter().map(|&r| self.q_at_index(r)).collect();
        let mut b_gen = Vec::new();
        for a in 0..reps.len() {
            for b in a + 1..reps.len() {
                let n = self.bil_num_indices(&indexer, reps[a], reps[b]);
                b_gen.push(RationalMod1::new(n as i128, self.denom as i128));
            }
        }
        let quotient = PreMetricGroup::build_with_cap(quotient_group, q_gen, b_gen, cap)?;

        // Projection data: t = y * V1 * diag(1/d1) * V2. The division by d1
        // happens between the two basis changes: exactness there is precisely
        // membership of y in the perp lattice.
        let map = CondenseMap {
            source: indexer,
            quotient: Indexer::new(quotient.group()),
            v1: snf1.v,
            d1,
            v2: snf2.v,
            d2,
            kept,
        };
        Ok((quotient, map))
    }

    fn ensure_same_group(&self, h: &Subgroup) -> Result<(), MetricError> {
        if h.group() != &self.group {
            return Err(MetricError::IllFormed(
                "subgroup belongs to a different group".into(),
            ));
        }
        Ok(())
    }
}

fn index_of_generator(indexer: &Indexer, j: usize) -> u64 {
    let mut coords = vec![0u64; indexer.rank()];
    coords[j] = 1;
    indexer.index_of(&Element::from_coords(coords))
}

fn pair_index(g: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < g);
    // row-major upper triangle offset
    i * g - i * (i + 1) / 2 + (j - i - 1)
}

fn fill_q_table(
    indexer: &Indexer,
    q_gen: &[RationalMod1],
    b_gen: &[RationalMod1],
    denom: u64,
    order: u64,
) -> Vec<u64> {
    let g = indexer.rank();
    let orders = indexer.orders();
    let tables: Vec<Vec<u64>> = (0..g)
        .map(|i| {
            let qn = q_gen[i].numerator_for_denominator(denom);
            (0..orders[i])
                .map(|c| ((c as u128 * c as u128 % denom as u128) * qn as u128 % denom as u128) as u64)
                .collect()
        })
        .collect();
    let mut cross = Vec::new();
    for i in 0..g {
        for j in i + 1..g {
            let bn = b_gen[pair_index(g, i, j)].numerator_for_denominator(denom);
            if bn != 0 {
                cross.push((i, j, bn));
            }
        }
    }

    let mut q_num = vec![0u64; order as usize];
    let mut coords = vec![0u64; g];
    for idx in 0..order {
        if idx > 0 {
            increment_mixed_radix(&mut coords, orders);
        }
        let mut acc: u64 = 0;
        for i in 0..g {
            acc += tables[i][coords[i] as usize];
            if acc >= denom {
                acc -= denom;
            }
        }
        for &(i, j, bn) in &cross {
            let term =
                coords[i] as u128 * coords[j] as u128 % denom as u128 * bn as u128 % denom as u128;
            acc = ((acc as u128 + term) % denom as u128) as u64;
        }
        q_num[idx as usize] = acc;
    }
    q_num
}

fn increment_mixed_radix(coords: &mut [u64], orders: &[u64]) {
    for i in (0..orders.len()).rev() {
        coords[i] += 1;
        if coords[i] < orders[i] {
            return;
        }
        coords[i] = 0;
    }
}

/// Radical size and generators, computed from the Smith form of the bilinear
/// numerator matrix rather than by scanning the group.
fn radical_data(
    indexer: &Indexer,
    q_gen: &[RationalMod1],
    b_gen: &[RationalMod1],
    denom: u64,
    order: u64,
) -> Result<(Vec<u64>, u64), MetricError> {
    let g = indexer.rank();
    if g == 0 {
        return Ok((Vec::new(), 1));
    }
    let mut bnum = vec![vec![0i128; g]; g];
    for i in 0..g {
        bnum[i][i] = (2 * q_gen[i].numerator_for_denominator(denom) % denom) as i128;
        for j in i + 1..g {
            let v = b_gen[pair_index(g, i, j)].numerator_for_denominator(denom) as i128;
            bnum[i][j] = v;
            bnum[j][i] = v;
        }
    }
    let snf = smith_normal_form(&bnum)?;
    let diag = snf.diagonal();
    let mut index_product: u64 = 1;
    let mut ms = Vec::with_capacity(g);
    for &d in &diag {
        // Solve y*d = 0 (mod denom): y must be a multiple of denom/gcd(d, denom).
        let dd = (d.unsigned_abs() % denom as u128) as u64;
        let m = if dd == 0 {
            1 // no condition: d is 0 or a multiple of the denominator
        } else {
            denom / denom.gcd(&dd)
        };
        ms.push(m);
        index_product = index_product
            .checked_mul(m)
            .ok_or_else(|| MetricError::Internal("radical index overflow".into()))?;
    }
    if order % index_product != 0 {
        return Err(MetricError::Internal(
            "radical index does not divide the group order".into(),
        ));
    }
    let radical_order = order / index_product;
    let orders = indexer.orders();
    let mut gens = Vec::new();
    for i in 0..g {
        let mut row = vec![0i128; g];
        for j in 0..g {
            row[j] = snf.u[i][j]
                .checked_mul(ms[i] as i128)
                .ok_or_else(|| MetricError::Internal("radical generator overflow".into()))?;
        }
        let idx = reduce_row(indexer, &row, orders);
        if idx != 0 {
            gens.push(idx);
        }
    }
    gens.sort_unstable();
    gens.dedup();
    Ok((gens, radical_order))
}

/// Rows spanning the preimage lattice in Z^g of the subgroup generated by
/// `gens`: the generator coordinates plus the diagonal of factor orders.
fn lattice_rows(indexer: &Indexer, gens: &[u64], orders: &[u64]) -> Matrix {
    let g = orders.len();
    let mut rows = Vec::with_capacity(gens.len() + g);
    for &gen in gens {
        let mut row = vec![0i128; g];
        for (i, slot) in row.iter_mut().enumerate() {
            *slot = indexer.digit(gen, i) as i128;
        }
        rows.push(row);
    }
    for i in 0..g {
        let mut row = vec![0i128; g];
        row[i] = orders[i] as i128;
        rows.push(row);
    }
    rows
}

fn reduce_row(indexer: &Indexer, row: &[i128], orders: &[u64]) -> u64 {
    let coords: Vec<u64> = row
        .iter()
        .zip(orders)
        .map(|(&x, &n)| x.rem_euclid(n as i128) as u64)
        .collect();
    indexer.index_of(&Element::from_coords(coords))
}

/// Greedy generating set: ascending scan, keeping elements that enlarge the
/// running closure. Deterministic; at most log2(order) generators.
pub(crate) fn greedy_generators(indexer: &Indexer, elements: &[u64]) -> Vec<u64> {
    let mut gens = Vec::new();
    let mut set = IndexSet::new(indexer.order());
    set.insert(0);
    let mut list = vec![0u64];
    for &x in elements {
        if set.contains(x) {
            continue;
        }
        gens.push(x);
        let base = list.clone();
        let ord = indexer.element_order(x);
        let mut mult = 0u64;
        for _ in 1..ord {
            mult = indexer.add(mult, x);
            for &s in &base {
                let y = indexer.add(s, mult);
                if set.insert(y) {
                    list.push(y);
                }
            }
        }
    }
    gens
}

/// Projection `H^perp -> H^perp/H` attached to a condensation.
#[derive(Clone)]
pub struct CondenseMap {
    source: Indexer,
    quotient: Indexer,
    v1: Matrix,
    d1: Vec<i128>,
    v2: Matrix,
    d2: Vec<i128>,
    kept: Vec<usize>,
}

impl CondenseMap {
    fn identity(indexer: &Indexer) -> CondenseMap {
        let g = indexer.rank();
        let eye: Matrix = (0..g)
            .map(|i| (0..g).map(|j| i128::from(i == j)).collect())
            .collect();
        CondenseMap {
            source: indexer.clone(),
            quotient: indexer.clone(),
            v1: eye.clone(),
            d1: vec![1; g],
            v2: eye,
            d2: indexer.orders().iter().map(|&n| n as i128).collect(),
            kept: (0..g).collect(),
        }
    }

    /// Quotient index of a source element. `None` when the element does not
    /// lie in `H^perp` (equivalently, its lift is outside the perp lattice,
    /// detected as a failed division by the basis diagonal).
    pub fn project(&self, idx: u64) -> Option<u64> {
        let g = self.source.rank();
        let mut w = vec![0i128; g];
        for (i, slot) in w.iter_mut().enumerate() {
            let mut acc: i128 = 0;
            for j in 0..g {
                acc += self.source.digit(idx, j) as i128 * self.v1[j][i];
            }
            if acc % self.d1[i] != 0 {
                return None;
            }
            *slot = acc / self.d1[i];
        }
        let mut quotient_coords = vec![0u64; self.kept.len()];
        for (slot, &i) in self.kept.iter().enumerate() {
            let mut acc: i128 = 0;
            for j in 0..g {
                acc += w[j] * self.v2[j][i];
            }
            quotient_coords[slot] = acc.rem_euclid(self.d2[i]) as u64;
        }
        Some(
            self.quotient
                .index_of(&Element::from_coords(quotient_coords)),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaussArgument {
    /// Exact eighth-of-a-turn argument (nondegenerate or Tannakian radical).
    Snapped(RationalMod1),
    /// Raw double-precision argument; flagged unsnapped (degenerate form with
    /// q nontrivial on the radical, or vanishing sum).
    Unsnapped(f64),
}

impl GaussArgument {
    pub fn snapped(&self) -> Option<RationalMod1> {
        match self {
            GaussArgument::Snapped(r) => Some(*r),
            GaussArgument::Unsnapped(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussSumValue {
    pub magnitude_sq: f64,
    pub argument: GaussArgument,
}

impl fmt::Display for PreMetricGroup {
    /// The metric-group text format; output can be parsed back.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "group")?;
        for n in self.group.factor_orders() {
            write!(f, " {}", n)?;
        }
        writeln!(f)?;
        write!(f, "q")?;
        for q in &self.q_gen {
            write!(f, " {}", q)?;
        }
        if self.group.rank() >= 2 {
            writeln!(f)?;
            write!(f, "b")?;
            for b in &self.b_gen {
                write!(f, " {}", b)?;
            }
        }
        Ok(())
    }
}

/// Convenience constructor for one-generator forms.
pub fn cyclic_form(n: u64, q_num: i128, q_den: i128) -> Result<PreMetricGroup, MetricError> {
    let group = FinAbGroup::cyclic(n)?;
    PreMetricGroup::build(group, vec![RationalMod1::new(q_num, q_den)], vec![])
}

/// The trivial (unit) form.
pub fn trivial_form() -> PreMetricGroup {
    PreMetricGroup::build(FinAbGroup::trivial(), vec![], vec![]).expect("trivial form is valid")
}

/// The hyperbolic plane on Z/2 x Z/2: q(x, y) = xy/2.
pub fn hyperbolic_z2(cap: u64) -> Result<PreMetricGroup, MetricError> {
    let group = FinAbGroup::new(vec![2, 2])?;
    PreMetricGroup::build_with_cap(
        group,
        vec![RationalMod1::ZERO, RationalMod1::ZERO],
        vec![RationalMod1::HALF],
        cap,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{subgroup_closure, DEFAULT_ENUMERATION_CAP as CAP};

    fn z2_i() -> PreMetricGroup {
        cyclic_form(2, 1, 4).unwrap()
    }

    fn z3_standard() -> PreMetricGroup {
        cyclic_form(3, 1, 3).unwrap()
    }

    #[test]
    fn builds_valid_forms() {
        let c = z2_i();
        assert_eq!(c.q(&c.group().element(&[1]).unwrap()), RationalMod1::new(1, 4));
        let c3 = z3_standard();
        assert_eq!(c3.q(&c3.group().element(&[2]).unwrap()), RationalMod1::new(1, 3));
    }

    #[test]
    fn rejects_ill_formed() {
        assert!(matches!(
            cyclic_form(2, 1, 3),
            Err(MetricError::IllFormed(_))
        ));
        assert!(matches!(
            cyclic_form(4, 1, 16),
            Err(MetricError::IllFormed(_))
        ));
    }

    #[test]
    fn bilinear_examples() {
        let c = z2_i();
        let zero = c.group().element(&[0]).unwrap();
        let one = c.group().element(&[1]).unwrap();
        assert_eq!(c.bilinear(&zero, &one), RationalMod1::ZERO);
        assert_eq!(c.bilinear(&one, &one), RationalMod1::HALF);

        let c3 = z3_standard();
        let e = c3.group().element(&[1]).unwrap();
        assert_eq!(c3.bilinear(&e, &e), RationalMod1::new(2, 3));
    }

    #[test]
    fn radical_flags() {
        assert!(z2_i().is_nondegenerate());

        let svec = cyclic_form(2, 1, 2).unwrap();
        assert_eq!(svec.radical_order(), 2);
        assert!(svec.is_slightly_degenerate_pointed());

        let rep_z2 = cyclic_form(2, 0, 1).unwrap();
        assert_eq!(rep_z2.radical_order(), 2);
        assert!(!rep_z2.is_slightly_degenerate_pointed());
        assert!(rep_z2.q_trivial_on_radical());
    }

    #[test]
    fn complement_examples() {
        let c = cyclic_form(4, 1, 8).unwrap();
        assert!(c.is_nondegenerate());
        let h = subgroup_closure(c.group(), &[c.group().element(&[2]).unwrap()], CAP).unwrap();
        let perp = c.orthogonal_complement(&h).unwrap();
        assert_eq!(perp.element_indices(), &[0, 2]);

        let trivial = subgroup_closure(c.group(), &[], CAP).unwrap();
        let whole = c.orthogonal_complement(&trivial).unwrap();
        assert_eq!(whole.order(), 4);
    }

    #[test]
    fn biduality_inclusion() {
        for form in [z2_i(), cyclic_form(4, 1, 8).unwrap(), hyperbolic_z2(CAP).unwrap()] {
            for h in crate::group::all_subgroups(form.group()).unwrap() {
                let perp2 = form
                    .orthogonal_complement(&form.orthogonal_complement(&h).unwrap())
                    .unwrap();
                assert!(h.is_subset_of(&perp2));
            }
        }
    }

    #[test]
    fn gauss_sums() {
        let g = z2_i().gauss_sum().unwrap();
        assert!((g.magnitude_sq - 2.0).abs() < 1e-9);
        assert_eq!(g.argument.snapped(), Some(RationalMod1::new(1, 8)));

        let g3 = z3_standard().gauss_sum().unwrap();
        assert!((g3.magnitude_sq - 3.0).abs() < 1e-9);
        assert_eq!(g3.argument.snapped(), Some(RationalMod1::new(1, 4)));

        let gt = trivial_form().gauss_sum().unwrap();
        assert!((gt.magnitude_sq - 1.0).abs() < 1e-12);
        assert_eq!(gt.argument.snapped(), Some(RationalMod1::ZERO));
    }

    #[test]
    fn gauss_degenerate_vanishing() {
        // q nontrivial on the radical: the sum cancels exactly.
        let svec = cyclic_form(2, 1, 2).unwrap();
        let g = svec.gauss_sum().unwrap();
        assert!(g.magnitude_sq < 1e-9);
        assert!(g.argument.snapped().is_none());
    }

    #[test]
    fn direct_sum_gauss_multiplies() {
        let a = z2_i();
        let s = a.direct_sum(&a, CAP).unwrap();
        let g = s.gauss_sum().unwrap();
        assert_eq!(g.argument.snapped(), Some(RationalMod1::new(2, 8)));
        assert!((g.magnitude_sq - 4.0).abs() < 1e-9);
    }

    #[test]
    fn reverse_involution_and_cancellation() {
        let a = cyclic_form(4, 1, 8).unwrap();
        assert_eq!(a.reverse().reverse(), a);
        assert_eq!(
            z2_i().reverse().q_on_generators()[0],
            RationalMod1::new(3, 4)
        );
        let c = a.direct_sum(&a.reverse(), CAP).unwrap();
        let g = c.gauss_sum().unwrap();
        assert_eq!(g.argument.snapped(), Some(RationalMod1::ZERO));
    }

    #[test]
    fn radical_of_direct_sum_is_product() {
        let svec = cyclic_form(2, 1, 2).unwrap();
        let s = svec.direct_sum(&z2_i(), CAP).unwrap();
        assert_eq!(s.radical_order(), 2);
        let t = svec.direct_sum(&svec, CAP).unwrap();
        assert_eq!(t.radical_order(), 4);
    }

    #[test]
    fn isotropic_subgroup_census() {
        assert_eq!(z2_i().isotropic_subgroups().unwrap().len(), 1);

        let h = hyperbolic_z2(CAP).unwrap();
        let iso = h.isotropic_subgroups().unwrap();
        assert_eq!(iso.len(), 3);
        let sizes: Vec<u64> = iso.iter().map(|s| s.order()).collect();
        assert_eq!(sizes, vec![1, 2, 2]);

        let z4 = cyclic_form(4, 1, 8).unwrap();
        assert_eq!(z4.isotropic_subgroups().unwrap().len(), 1);
    }

    #[test]
    fn condense_trivial_is_identity() {
        let c = z2_i();
        let trivial = subgroup_closure(c.group(), &[], CAP).unwrap();
        assert_eq!(c.condense(&trivial, CAP).unwrap(), c);
    }

    #[test]
    fn condense_hyperbolic_kills_everything() {
        let h = hyperbolic_z2(CAP).unwrap();
        let line = subgroup_closure(h.group(), &[h.group().element(&[1, 0]).unwrap()], CAP).unwrap();
        let q = h.condense(&line, CAP).unwrap();
        assert!(q.group().is_trivial());
    }

    #[test]
    fn condense_lagrangian_diagonal() {
        let c = z3_standard();
        let s = c.direct_sum(&c.reverse(), CAP).unwrap();
        let diag = subgroup_closure(s.group(), &[s.group().element(&[1, 1]).unwrap()], CAP).unwrap();
        assert_eq!(diag.order(), 3);
        let q = s.condense(&diag, CAP).unwrap();
        assert!(q.group().is_trivial());
    }

    #[test]
    fn condense_rejects_non_isotropic() {
        let c = z2_i();
        let whole = subgroup_closure(c.group(), &[c.group().element(&[1]).unwrap()], CAP).unwrap();
        assert!(matches!(
            c.condense(&whole, CAP),
            Err(MetricError::NotIsotropic(_))
        ));
    }

    #[test]
    fn condense_gauss_argument_invariant() {
        // (Z/2, 1/4) + hyperbolic: condensing the hyperbolic part keeps the argument.
        let c = z2_i().direct_sum(&hyperbolic_z2(CAP).unwrap(), CAP).unwrap();
        let h = subgroup_closure(c.group(), &[c.group().element(&[0, 1, 0]).unwrap()], CAP).unwrap();
        let before = c.gauss_sum().unwrap().argument.snapped().unwrap();
        let after = c.condense(&h, CAP).unwrap().gauss_sum().unwrap();
        assert_eq!(after.argument.snapped(), Some(before));
    }

    #[test]
    fn condense_projection_consistency() {
        let c = z2_i().direct_sum(&hyperbolic_z2(CAP).unwrap(), CAP).unwrap();
        let h = subgroup_closure(c.group(), &[c.group().element(&[0, 1, 0]).unwrap()], CAP).unwrap();
        let (q, map) = c.condense_with_map(&h, CAP).unwrap();
        let indexer = Indexer::new(c.group());
        // kernel of the projection on H^perp is exactly H
        let perp = c.orthogonal_complement(&h).unwrap();
        let mut kernel = 0;
        for &y in perp.element_indices() {
            let img = map.project(y).expect("perp elements project");
            if img == 0 {
                kernel += 1;
            }
            // q descends along the projection
            assert_eq!(c.q_at_index(y), q.q_at_index(img));
        }
        assert_eq!(kernel, h.order());
        // elements outside H^perp do not project
        for y in 0..c.order() {
            if perp.element_indices().binary_search(&y).is_err() {
                assert_eq!(map.project(y), None, "index {}", y);
            }
        }
        let _ = indexer;
    }

    #[test]
    fn prod_fp_identity_small() {
        for form in [
            z2_i(),
            z3_standard(),
            cyclic_form(4, 1, 8).unwrap(),
            hyperbolic_z2(CAP).unwrap(),
            cyclic_form(2, 1, 2).unwrap(),
            cyclic_form(2, 0, 1).unwrap(),
        ] {
            let radical = form.radical();
            for h in crate::group::all_subgroups(form.group()).unwrap() {
                let perp = form.orthogonal_complement(&h).unwrap();
                let meet = h
                    .element_indices()
                    .iter()
                    .filter(|&&x| radical.contains_index(x))
                    .count() as u64;
                assert_eq!(h.order() * perp.order(), form.order() * meet);
            }
        }
    }

    #[test]
    fn display_round_trip() {
        let c = z2_i().direct_sum(&cyclic_form(4, 1, 8).unwrap(), CAP).unwrap();
        let text = c.to_string();
        let parsed = crate::parse::parse_metric_group(&text, CAP).unwrap();
        assert_eq!(parsed, c);
    }

    #[test]
    fn direct_sum_with_trivial_is_identity() {
        let c = z2_i();
        assert_eq!(c.direct_sum(&trivial_form(), CAP).unwrap(), c);
        assert_eq!(trivial_form().direct_sum(&c, CAP).unwrap(), c);
    }

    #[test]
    fn gauss_magnitude_is_group_order_when_nondegenerate() {
        for form in crate::selftest::all_forms_up_to_order(12) {
            if !form.is_nondegenerate() {
                continue;
            }
            let g = form.gauss_sum().unwrap();
            assert!(
                (g.magnitude_sq - form.order() as f64).abs() < 1e-9,
                "|G|^2 = {} for {}",
                g.magnitude_sq,
                form
            );
            assert!(g.argument.snapped().is_some());
        }
    }

    #[test]
    fn gauss_multiplies_under_direct_sum() {
        let corpus: Vec<PreMetricGroup> = crate::selftest::all_forms_up_to_order(5);
        for c1 in corpus.iter().step_by(3) {
            for c2 in corpus.iter().step_by(4) {
                let s = c1.direct_sum(c2, CAP).unwrap();
                let (g1, g2, gs) = (
                    c1.gauss_sum().unwrap(),
                    c2.gauss_sum().unwrap(),
                    s.gauss_sum().unwrap(),
                );
                assert!(
                    (gs.magnitude_sq - g1.magnitude_sq * g2.magnitude_sq).abs() < 1e-9,
                    "{} + {}",
                    c1,
                    c2
                );
                if let (Some(a1), Some(a2), Some(asum)) = (
                    g1.argument.snapped(),
                    g2.argument.snapped(),
                    gs.argument.snapped(),
                ) {
                    assert_eq!(asum, a1 + a2);
                }
            }
        }
    }

    #[test]
    fn condense_preserves_gauss_argument_over_corpus() {
        for form in crate::selftest::all_forms_up_to_order(9) {
            if !form.is_nondegenerate() {
                continue;
            }
            let before = form.gauss_sum().unwrap().argument.snapped().unwrap();
            for h in form.isotropic_subgroups().unwrap() {
                let after = form.condense(&h, CAP).unwrap().gauss_sum().unwrap();
                assert_eq!(after.argument.snapped(), Some(before), "{}", form);
            }
        }
    }

    type FormKey = (Vec<u64>, Vec<RationalMod1>, Vec<RationalMod1>);
    type ChainMemo = std::collections::HashMap<FormKey, std::collections::BTreeSet<u64>>;

    /// Exhaust all condensation chains (one cyclic isotropic step at a time)
    /// and record the orders of the forms they terminate at.
    fn chain_end_orders(
        form: &PreMetricGroup,
        memo: &mut ChainMemo,
    ) -> std::collections::BTreeSet<u64> {
        let key = (
            form.group().factor_orders().to_vec(),
            form.q_on_generators().to_vec(),
            form.pairings().to_vec(),
        );
        if let Some(hit) = memo.get(&key) {
            return hit.clone();
        }
        let indexer = Indexer::new(form.group());
        let mut ends = std::collections::BTreeSet::new();
        let mut any = false;
        for x in 1..form.order() {
            if form.q_numerator(x) != 0 {
                continue;
            }
            any = true;
            let span = crate::group::subgroup_closure(
                form.group(),
                &[indexer.element_at(x)],
                CAP,
            )
            .unwrap();
            let next = form.condense(&span, CAP).unwrap();
            ends.extend(chain_end_orders(&next, memo));
        }
        if !any {
            ends.insert(form.order());
        }
        memo.insert(key, ends.clone());
        ends
    }

    #[test]
    fn condensation_chains_end_at_one_order() {
        let mut memo = std::collections::HashMap::new();
        for form in crate::selftest::all_forms_up_to_order(16) {
            let ends = chain_end_orders(&form, &mut memo);
            assert_eq!(ends.len(), 1, "form {} reaches orders {:?}", form, ends);
        }
    }
}
