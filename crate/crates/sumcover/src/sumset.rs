//! Set algebra over `Z + H`: sumsets, stabilizers, representation counts,
//! deficiency, and the normalized-instance bookkeeping used throughout the
//! structural analysis.

use crate::bits::Window;
use crate::error::{Error, Result};
use crate::group::{Element, GSet, GroupSpec, Subgroup, WINDOW_CELL_CAP};
use crate::ratio::Ratio;
use serde::{Serialize, Serializer};
use std::collections::BTreeMap;

/// The sumset `A + B = {a + b}`, computed through a bitset window keyed by
/// `(z, h-rank)`. Empty input gives an empty output.
pub fn sumset(a: &GSet, b: &GSet) -> Result<GSet> {
    if a.group() != b.group() {
        return Err(Error::GroupMismatch);
    }
    let group = a.group();
    if a.is_empty() || b.is_empty() {
        return Ok(GSet::empty(group.clone()));
    }
    let z_min = a.z_min().unwrap() + b.z_min().unwrap();
    let z_max = a.z_max().unwrap() + b.z_max().unwrap();
    let slices = (z_max - z_min + 1) as u64;
    let cells = slices * group.h_order() as u64;
    if cells > WINDOW_CELL_CAP {
        return Err(Error::CapExceeded {
            what: "sumset window cells",
            actual: cells,
            limit: WINDOW_CELL_CAP,
        });
    }
    let mut w = Window::new(z_min, slices as usize, group.h_order() as usize);
    for &(za, ra) in a.packed() {
        for &(zb, rb) in b.packed() {
            w.set(za + zb, group.add_ranks(ra, rb));
        }
    }
    Ok(GSet::from_packed(group.clone(), w.iter_set().collect()))
}

/// `2A = A + A`.
pub fn double(a: &GSet) -> Result<GSet> {
    sumset(a, a)
}

/// The period (stabilizer) `pi(S) = {h in H : S + h = S}`, always a subgroup
/// of `H`; `S` is periodic exactly when the result is nontrivial. The empty
/// set gets the trivial stabilizer.
pub fn stabilizer(s: &GSet) -> Subgroup {
    let group = s.group().clone();
    if s.is_empty() {
        return Subgroup::trivial(group);
    }
    // group the packed elements by slice once, then test each candidate h
    let mut slices: BTreeMap<i64, Vec<u32>> = BTreeMap::new();
    for &(z, r) in s.packed() {
        slices.entry(z).or_default().push(r);
    }
    let mut member_masks: BTreeMap<i64, Vec<bool>> = BTreeMap::new();
    for (z, ranks) in &slices {
        let mut mask = vec![false; group.h_order() as usize];
        for &r in ranks {
            mask[r as usize] = true;
        }
        member_masks.insert(*z, mask);
    }
    let mut ranks = Vec::new();
    'cand: for h in 0..group.h_order() {
        for (z, rs) in &slices {
            let mask = &member_masks[z];
            for &r in rs {
                if !mask[group.add_ranks(r, h) as usize] {
                    continue 'cand;
                }
            }
        }
        ranks.push(h);
    }
    Subgroup::generated_by_ranks(group, &ranks)
}

/// The number of representations of `g` as a difference of two elements of
/// `S`; equals `|S /\ (S + g)|`.
pub fn rep_count(s: &GSet, g: &Element) -> u64 {
    let group = s.group();
    if group.check_element(g).is_err() {
        return 0;
    }
    let gr = group.rank_of_element(g);
    s.packed()
        .iter()
        .filter(|&&(z, r)| s.contains_packed((z + g.z(), group.add_ranks(r, gr))))
        .count() as u64
}

/// Deficiency of `S` on the coset `g + L`: the number of coset elements
/// missing from `S`, or zero when `S` misses the coset entirely.
pub fn deficiency(s: &GSet, g: &Element, l: &Subgroup) -> Result<u64> {
    if s.group() != l.group() {
        return Err(Error::GroupMismatch);
    }
    let group = s.group();
    group
        .check_element(g)
        .map_err(|_| Error::GroupMismatch)?;
    let gr = group.rank_of_element(g);
    let mut present = 0u64;
    for &k in l.ranks() {
        if s.contains_packed((g.z(), group.add_ranks(gr, k))) {
            present += 1;
        }
    }
    Ok(if present == 0 { 0 } else { l.order() - present })
}

/// Per-coset deficiency table together with the total `|(S + L) \ S|`.
#[derive(Clone, Debug, Serialize)]
pub struct DeficiencyReport {
    /// `(coset representative, deficiency)` for every `L`-coset meeting `S`,
    /// in canonical representative order.
    pub per_coset: Vec<(Element, u64)>,
    /// Total deficiency `|(S + L) \ S|`.
    pub total: u64,
}

/// Computes the deficiency of `S` on every `L`-coset meeting `S`, plus the
/// total. The total is computed independently as `|S + L| - |S|` and agrees
/// with the per-coset sum by construction of the table.
pub fn total_deficiency(s: &GSet, l: &Subgroup) -> Result<DeficiencyReport> {
    if s.group() != l.group() {
        return Err(Error::GroupMismatch);
    }
    let group = s.group();
    let rep = l.coset_rep_table();
    let mut counts: BTreeMap<(i64, u32), u64> = BTreeMap::new();
    for &(z, r) in s.packed() {
        *counts.entry((z, rep[r as usize])).or_insert(0) += 1;
    }
    let per_coset: Vec<(Element, u64)> = counts
        .iter()
        .map(|(&(z, r), &c)| {
            (
                group.element_from_rank(z, r),
                l.order() - c,
            )
        })
        .collect();
    let saturated = sumset(s, &l.members())?;
    let total = saturated.len() - s.len();
    debug_assert_eq!(total, per_coset.iter().map(|&(_, d)| d).sum::<u64>());
    Ok(DeficiencyReport { per_coset, total })
}

/// A set brought into normal position, with the derived quantities that the
/// slice-level estimates are phrased in.
///
/// The set is translated (by a full group element, recorded in
/// `translation`) so that its projection starts at zero and the zero element
/// lies in the bottom slice. `delta` is the canonical-least element of the
/// top slice, `a_star = A_0 /\ (A_l - delta)`, `sigma = |A_0| + |A_l|`, and
/// `tau = |2A|/|A|` as an exact rational.
#[derive(Clone, Debug)]
pub struct NormalizedInstance {
    set: GSet,
    translation: Element,
    span: i64,
    n: u64,
    delta: Element,
    a_star: GSet,
    sigma: u64,
    doubling_size: u64,
    tau: Ratio,
}

impl NormalizedInstance {
    /// The normalized set (`min proj = 0`, `0` in its bottom slice).
    pub fn set(&self) -> &GSet {
        &self.set
    }

    /// The element that was subtracted from the input.
    pub fn translation(&self) -> &Element {
        &self.translation
    }

    /// `l`, the largest projection value.
    pub fn span(&self) -> i64 {
        self.span
    }

    /// The number of distinct projection values.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Canonical-least element of the top slice.
    pub fn delta(&self) -> &Element {
        &self.delta
    }

    /// `A* = A_0 /\ (A_l - delta)`; its size equals the representation count
    /// of `delta` as a difference of two elements.
    pub fn a_star(&self) -> &GSet {
        &self.a_star
    }

    /// `sigma = |A_0| + |A_l|`.
    pub fn sigma(&self) -> u64 {
        self.sigma
    }

    pub fn doubling_size(&self) -> u64 {
        self.doubling_size
    }

    /// Exact doubling coefficient `|2A| / |A|`.
    pub fn tau(&self) -> Ratio {
        self.tau
    }

    /// The slice `A_z`.
    pub fn slice(&self, z: i64) -> GSet {
        self.set.slice(z)
    }

    /// Nonempty slices in ascending `z` order.
    pub fn slices(&self) -> Vec<(i64, GSet)> {
        self.set
            .project_z()
            .into_iter()
            .map(|z| (z, self.set.slice(z)))
            .collect()
    }
}

/// Translates `A` into normal position and computes the slice bookkeeping.
pub fn normalize(a: &GSet) -> Result<NormalizedInstance> {
    if a.is_empty() {
        return Err(Error::Precondition("cannot normalize the empty set".into()));
    }
    let group = a.group().clone();
    let z_min = a.z_min().unwrap();
    let base = a.slice(z_min).first().unwrap();
    let set = a.translate(&group.neg(&base)?)?;
    let span = set.z_max().unwrap();
    let n = set.project_z().len() as u64;
    let bottom = set.slice(0);
    let top = set.slice(span);
    let delta = top.first().unwrap();
    let top_shift = top.translate(&group.neg(&delta)?)?;
    let a_star = bottom.intersection(&top_shift)?;
    let sigma = bottom.len() + top.len();
    let doubling_size = double(&set)?.len();
    let tau = Ratio::new(doubling_size as i64, set.len() as i64);
    Ok(NormalizedInstance {
        set,
        translation: base,
        span,
        n,
        delta,
        a_star,
        sigma,
        doubling_size,
        tau,
    })
}

impl Serialize for NormalizedInstance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            set: &'a GSet,
            translation: &'a Element,
            span: i64,
            n: u64,
            delta: &'a Element,
            a_star_size: u64,
            sigma: u64,
            doubling_size: u64,
            tau: Ratio,
        }
        Repr {
            set: &self.set,
            translation: &self.translation,
            span: self.span,
            n: self.n,
            delta: &self.delta,
            a_star_size: self.a_star.len(),
            sigma: self.sigma,
            doubling_size: self.doubling_size,
            tau: self.tau,
        }
        .serialize(s)
    }
}
