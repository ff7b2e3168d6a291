//! Exact arithmetic in the ambient group `G = Z + H`, where `H` is a finite
//! abelian group given by a torsion list `H = Z/d1 + ... + Z/dk`.
//!
//! Everything here is immutable plain data: elements are `(z, residues)`
//! pairs, sets are canonical sorted element lists, subgroups of `H` are
//! explicit member lists, and quotient maps carry precomputed coset
//! representative tables. All operations are pure functions, so values can be
//! shared freely across threads.

use crate::bits::Window;
use crate::error::{Error, Result};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Hard cap on `|H|`; groups above this are rejected at construction.
pub const H_ORDER_CAP: u64 = 4096;
/// Cap on `|H|` for full subgroup-lattice enumeration.
pub const LATTICE_CAP: u64 = 256;
/// Cap on the number of (z, h) cells a single bitset window may span.
pub const WINDOW_CELL_CAP: u64 = 1 << 27;

/// The ambient group `Z + Z/d1 + ... + Z/dk`.
///
/// `torsion` is the list `[d1, ..., dk]` with every `di >= 2`; an empty list
/// means `H` is trivial and the group is plain `Z`. The torsion part is
/// indexed by *ranks* `0..|H|`: the residue vector is read as a
/// most-significant-first mixed-radix number, so rank order coincides with
/// lexicographic order on residue vectors.
#[derive(Clone)]
pub struct GroupSpec {
    torsion: Vec<u32>,
    strides: Vec<u32>,
    h_order: u32,
}

impl PartialEq for GroupSpec {
    fn eq(&self, other: &Self) -> bool {
        self.torsion == other.torsion
    }
}
impl Eq for GroupSpec {}

impl fmt::Debug for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z")?;
        for d in &self.torsion {
            write!(f, "+Z/{d}")?;
        }
        Ok(())
    }
}

impl GroupSpec {
    /// Builds the group `Z + Z/d1 + ... + Z/dk`.
    pub fn new(torsion: Vec<u32>) -> Result<GroupSpec> {
        let mut h_order: u64 = 1;
        for (i, &d) in torsion.iter().enumerate() {
            if d < 2 {
                return Err(Error::invalid(
                    format!("group.torsion[{i}]"),
                    format!("modulus must be >= 2, got {d}"),
                ));
            }
            h_order *= d as u64;
            if h_order > H_ORDER_CAP {
                return Err(Error::CapExceeded {
                    what: "|H|",
                    actual: h_order,
                    limit: H_ORDER_CAP,
                });
            }
        }
        let mut strides = vec![1u32; torsion.len()];
        for i in (0..torsion.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * torsion[i + 1];
        }
        Ok(GroupSpec {
            torsion,
            strides,
            h_order: h_order as u32,
        })
    }

    /// Plain `Z` (trivial torsion part).
    pub fn pure_z() -> GroupSpec {
        GroupSpec::new(vec![]).unwrap()
    }

    pub fn torsion(&self) -> &[u32] {
        &self.torsion
    }

    /// `|H|`, the order of the torsion part.
    pub fn h_order(&self) -> u32 {
        self.h_order
    }

    /// Builds an element, reducing each residue modulo its torsion entry.
    pub fn element(&self, z: i64, h: &[i64]) -> Result<Element> {
        if h.len() != self.torsion.len() {
            return Err(Error::invalid(
                "element.h",
                format!(
                    "expected {} residues, got {}",
                    self.torsion.len(),
                    h.len()
                ),
            ));
        }
        let residues = h
            .iter()
            .zip(&self.torsion)
            .map(|(&v, &d)| v.rem_euclid(d as i64) as u32)
            .collect();
        Ok(Element { z, h: residues })
    }

    /// The identity element `(0, 0)`.
    pub fn identity(&self) -> Element {
        Element {
            z: 0,
            h: vec![0; self.torsion.len()],
        }
    }

    pub(crate) fn rank_of_element(&self, e: &Element) -> u32 {
        self.rank_of(&e.h)
    }

    pub(crate) fn element_from_rank(&self, z: i64, rank: u32) -> Element {
        Element {
            z,
            h: self.residues_of(rank),
        }
    }

    pub(crate) fn rank_of(&self, residues: &[u32]) -> u32 {
        residues
            .iter()
            .zip(&self.strides)
            .map(|(&h, &s)| h * s)
            .sum()
    }

    pub(crate) fn residues_of(&self, rank: u32) -> Vec<u32> {
        self.torsion
            .iter()
            .zip(&self.strides)
            .map(|(&d, &s)| (rank / s) % d)
            .collect()
    }

    #[inline]
    pub(crate) fn add_ranks(&self, a: u32, b: u32) -> u32 {
        let mut out = 0;
        for (&d, &s) in self.torsion.iter().zip(&self.strides) {
            let ra = (a / s) % d;
            let rb = (b / s) % d;
            let mut r = ra + rb;
            if r >= d {
                r -= d;
            }
            out += r * s;
        }
        out
    }

    #[inline]
    pub(crate) fn neg_rank(&self, a: u32) -> u32 {
        let mut out = 0;
        for (&d, &s) in self.torsion.iter().zip(&self.strides) {
            let ra = (a / s) % d;
            if ra != 0 {
                out += (d - ra) * s;
            }
        }
        out
    }

    /// `m * a` in rank form; `m` may be negative.
    pub(crate) fn mul_rank(&self, a: u32, m: i64) -> u32 {
        let mut out = 0;
        for (&d, &s) in self.torsion.iter().zip(&self.strides) {
            let ra = ((a / s) % d) as i64;
            out += (ra * m).rem_euclid(d as i64) as u32 * s;
        }
        out
    }

    pub(crate) fn check_element(&self, a: &Element) -> Result<()> {
        if a.h.len() != self.torsion.len()
            || a.h.iter().zip(&self.torsion).any(|(&r, &d)| r >= d)
        {
            return Err(Error::GroupMismatch);
        }
        Ok(())
    }

    /// Componentwise sum: `z` adds over the integers, residues reduce.
    pub fn add(&self, a: &Element, b: &Element) -> Result<Element> {
        self.check_element(a)?;
        self.check_element(b)?;
        Ok(Element {
            z: a.z + b.z,
            h: self.residues_of(self.add_ranks(self.rank_of(&a.h), self.rank_of(&b.h))),
        })
    }

    /// Additive inverse.
    pub fn neg(&self, a: &Element) -> Result<Element> {
        self.check_element(a)?;
        Ok(Element {
            z: -a.z,
            h: self.residues_of(self.neg_rank(self.rank_of(&a.h))),
        })
    }

    /// `m * a` for an integer scalar `m`.
    pub fn scale(&self, a: &Element, m: i64) -> Result<Element> {
        self.check_element(a)?;
        Ok(Element {
            z: a.z * m,
            h: self.residues_of(self.mul_rank(self.rank_of(&a.h), m)),
        })
    }
}

/// A group element `(z, h)` with `z` the free coordinate and `h` the residue
/// vector, stored reduced. The derived `Ord` is the canonical order:
/// lexicographic by `(z, h)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Element {
    z: i64,
    h: Vec<u32>,
}

impl Element {
    /// The projection of the element onto `Z` along `H`.
    pub fn z(&self) -> i64 {
        self.z
    }

    pub fn h(&self) -> &[u32] {
        &self.h
    }
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {:?})", self.z, self.h)
    }
}

impl Serialize for Element {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.z, &self.h).serialize(s)
    }
}

pub(crate) type Packed = (i64, u32);

/// A finite set of elements of one ambient group, stored as a duplicate-free
/// list in canonical (lexicographic) order. Iteration order is deterministic.
#[derive(Clone, PartialEq, Eq)]
pub struct GSet {
    group: GroupSpec,
    elems: Vec<Packed>,
}

impl fmt::Debug for GSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GSet[{:?}; ", self.group)?;
        f.debug_list().entries(self.iter()).finish()?;
        write!(f, "]")
    }
}

impl GSet {
    pub fn empty(group: GroupSpec) -> GSet {
        GSet {
            group,
            elems: vec![],
        }
    }

    /// Builds a canonical set from arbitrary elements (sorted, deduplicated).
    pub fn from_elements<I>(group: GroupSpec, elements: I) -> Result<GSet>
    where
        I: IntoIterator<Item = Element>,
    {
        let mut elems = Vec::new();
        for e in elements {
            group.check_element(&e)?;
            elems.push((e.z, group.rank_of(&e.h)));
        }
        Ok(GSet::from_packed(group, elems))
    }

    /// Convenience: the set `{(z, 0) : z in zs}` with trivial torsion part.
    pub fn from_integers(group: GroupSpec, zs: &[i64]) -> GSet {
        let elems = zs.iter().map(|&z| (z, 0)).collect();
        GSet::from_packed(group, elems)
    }

    /// Convenience for `H`-subsets: the set `{(0, h) : h in hs}`.
    pub fn from_h_values(group: GroupSpec, hs: &[&[i64]]) -> Result<GSet> {
        let mut elems = Vec::new();
        for h in hs {
            let e = group.element(0, h)?;
            elems.push((0, group.rank_of(&e.h)));
        }
        Ok(GSet::from_packed(group, elems))
    }

    pub(crate) fn from_packed(group: GroupSpec, mut elems: Vec<Packed>) -> GSet {
        elems.sort_unstable();
        elems.dedup();
        GSet { group, elems }
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn len(&self) -> u64 {
        self.elems.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub(crate) fn packed(&self) -> &[Packed] {
        &self.elems
    }

    /// Elements in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = Element> + '_ {
        self.elems.iter().map(|&(z, r)| Element {
            z,
            h: self.group.residues_of(r),
        })
    }

    /// The canonical-least element, if any.
    pub fn first(&self) -> Option<Element> {
        self.elems.first().map(|&(z, r)| Element {
            z,
            h: self.group.residues_of(r),
        })
    }

    pub fn contains(&self, e: &Element) -> bool {
        if self.group.check_element(e).is_err() {
            return false;
        }
        self.contains_packed((e.z, self.group.rank_of(&e.h)))
    }

    pub(crate) fn contains_packed(&self, p: Packed) -> bool {
        self.elems.binary_search(&p).is_ok()
    }

    pub fn z_min(&self) -> Option<i64> {
        self.elems.first().map(|&(z, _)| z)
    }

    pub fn z_max(&self) -> Option<i64> {
        self.elems.last().map(|&(z, _)| z)
    }

    /// The projection of the set onto `Z` along `H`.
    pub fn project_z(&self) -> BTreeSet<i64> {
        self.elems.iter().map(|&(z, _)| z).collect()
    }

    /// The slice `S_z = S /\ (z + H)`.
    pub fn slice(&self, z: i64) -> GSet {
        let lo = self.elems.partition_point(|&(ez, _)| ez < z);
        let hi = self.elems.partition_point(|&(ez, _)| ez <= z);
        GSet {
            group: self.group.clone(),
            elems: self.elems[lo..hi].to_vec(),
        }
    }

    /// Translate by a group element.
    pub fn translate(&self, t: &Element) -> Result<GSet> {
        self.group.check_element(t)?;
        let tr = self.group.rank_of(&t.h);
        let elems = self
            .elems
            .iter()
            .map(|&(z, r)| (z + t.z, self.group.add_ranks(r, tr)))
            .collect();
        Ok(GSet::from_packed(self.group.clone(), elems))
    }

    /// The set `{-s : s in S}`.
    pub fn negated(&self) -> GSet {
        let elems = self
            .elems
            .iter()
            .map(|&(z, r)| (-z, self.group.neg_rank(r)))
            .collect();
        GSet::from_packed(self.group.clone(), elems)
    }

    fn check_same_group(&self, other: &GSet) -> Result<()> {
        if self.group != other.group {
            return Err(Error::GroupMismatch);
        }
        Ok(())
    }

    pub fn union(&self, other: &GSet) -> Result<GSet> {
        self.check_same_group(other)?;
        let mut elems = self.elems.clone();
        elems.extend_from_slice(&other.elems);
        Ok(GSet::from_packed(self.group.clone(), elems))
    }

    pub fn intersection(&self, other: &GSet) -> Result<GSet> {
        self.check_same_group(other)?;
        let elems = self
            .elems
            .iter()
            .copied()
            .filter(|p| other.contains_packed(*p))
            .collect();
        Ok(GSet::from_packed(self.group.clone(), elems))
    }

    pub fn difference(&self, other: &GSet) -> Result<GSet> {
        self.check_same_group(other)?;
        let elems = self
            .elems
            .iter()
            .copied()
            .filter(|p| !other.contains_packed(*p))
            .collect();
        Ok(GSet::from_packed(self.group.clone(), elems))
    }

    pub fn is_subset_of(&self, other: &GSet) -> bool {
        self.group == other.group && self.elems.iter().all(|p| other.contains_packed(*p))
    }

    /// A bitset window spanning exactly this set's z-extent.
    pub(crate) fn window(&self) -> Window {
        let z_min = self.z_min().unwrap_or(0);
        let z_max = self.z_max().unwrap_or(0);
        let slices = (z_max - z_min + 1) as usize;
        let mut w = Window::new(z_min, slices, self.group.h_order() as usize);
        for &(z, r) in &self.elems {
            w.set(z, r);
        }
        w
    }
}

impl Serialize for GSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Group<'a> {
            torsion: &'a [u32],
        }
        #[derive(Serialize)]
        struct Repr<'a> {
            group: Group<'a>,
            elements: Vec<(i64, Vec<u32>)>,
        }
        Repr {
            group: Group {
                torsion: &self.group.torsion,
            },
            elements: self
                .elems
                .iter()
                .map(|&(z, r)| (z, self.group.residues_of(r)))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<GSet, D::Error> {
        #[derive(Deserialize)]
        struct Group {
            torsion: Vec<i64>,
        }
        #[derive(Deserialize)]
        struct Repr {
            group: Group,
            elements: Vec<(i64, Vec<i64>)>,
        }
        let raw = Repr::deserialize(d)?;
        gset_from_raw(raw.group.torsion, raw.elements).map_err(D::Error::custom)
    }
}

/// Validates raw parsed data into a canonical `GSet`, reporting the offending
/// field path on failure. Residues must already be reduced; element order in
/// the input is not required to be canonical, but duplicates are rejected.
fn gset_from_raw(torsion: Vec<i64>, elements: Vec<(i64, Vec<i64>)>) -> Result<GSet> {
    let mut ds = Vec::with_capacity(torsion.len());
    for (i, &d) in torsion.iter().enumerate() {
        if !(2..=H_ORDER_CAP as i64).contains(&d) {
            return Err(Error::invalid(
                format!("group.torsion[{i}]"),
                format!("modulus must be >= 2, got {d}"),
            ));
        }
        ds.push(d as u32);
    }
    let group = GroupSpec::new(ds)?;
    let mut packed = Vec::with_capacity(elements.len());
    for (idx, (z, h)) in elements.iter().enumerate() {
        if h.len() != group.torsion.len() {
            return Err(Error::invalid(
                format!("elements[{idx}].h"),
                format!("expected {} residues, got {}", group.torsion.len(), h.len()),
            ));
        }
        let mut residues = Vec::with_capacity(h.len());
        for (j, (&v, &d)) in h.iter().zip(&group.torsion).enumerate() {
            if v < 0 || v >= d as i64 {
                return Err(Error::invalid(
                    format!("elements[{idx}].h[{j}]"),
                    format!("residue {v} out of range for modulus {d}"),
                ));
            }
            residues.push(v as u32);
        }
        packed.push((*z, group.rank_of(&residues)));
    }
    let mut sorted = packed.clone();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).position(|w| w[0] == w[1]) {
        let dup = sorted[w];
        let idx = packed.iter().rposition(|&p| p == dup).unwrap();
        return Err(Error::invalid(
            format!("elements[{idx}]"),
            "duplicate element".to_string(),
        ));
    }
    Ok(GSet::from_packed(group, packed))
}

/// Parses the JSON interchange format
/// `{"group":{"torsion":[...]},"elements":[[z,[h1,...]],...]}`.
pub fn gset_from_json(text: &str) -> Result<GSet> {
    #[derive(Deserialize)]
    struct Group {
        torsion: Vec<i64>,
    }
    #[derive(Deserialize)]
    struct Repr {
        group: Group,
        elements: Vec<(i64, Vec<i64>)>,
    }
    let raw: Repr = serde_json::from_str(text)
        .map_err(|e| Error::invalid("json", e.to_string()))?;
    gset_from_raw(raw.group.torsion, raw.elements)
}

/// A subgroup `K <= H`, kept as the sorted list of member ranks. All members
/// live in the torsion part (z = 0); by construction the list contains the
/// identity and is closed under addition and negation.
#[derive(Clone, PartialEq, Eq)]
pub struct Subgroup {
    group: GroupSpec,
    ranks: Vec<u32>,
}

impl fmt::Debug for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subgroup{:?}", self.ranks)
    }
}

impl Serialize for Subgroup {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        // members as residue vectors; the ambient group is clear from context
        let members: Vec<Vec<u32>> = self
            .ranks
            .iter()
            .map(|&r| self.group.residues_of(r))
            .collect();
        members.serialize(s)
    }
}

fn closure_of(group: &GroupSpec, gens: &[u32]) -> Vec<u32> {
    let n = group.h_order() as usize;
    let mut member = vec![false; n];
    member[0] = true;
    let mut stack = vec![0u32];
    while let Some(x) = stack.pop() {
        for &g in gens {
            let y = group.add_ranks(x, g);
            if !member[y as usize] {
                member[y as usize] = true;
                stack.push(y);
            }
        }
    }
    (0..n as u32).filter(|&r| member[r as usize]).collect()
}

impl Subgroup {
    /// The zero subgroup `{0}`.
    pub fn trivial(group: GroupSpec) -> Subgroup {
        Subgroup {
            group,
            ranks: vec![0],
        }
    }

    /// The full torsion part `H`.
    pub fn full(group: GroupSpec) -> Subgroup {
        let ranks = (0..group.h_order()).collect();
        Subgroup { group, ranks }
    }

    /// The subgroup of `H` generated by the given elements, which must all
    /// have `z = 0`.
    pub fn generated_by(group: GroupSpec, gens: &[Element]) -> Result<Subgroup> {
        let mut rank_gens = Vec::with_capacity(gens.len());
        for g in gens {
            group.check_element(g)?;
            if g.z != 0 {
                return Err(Error::Precondition(
                    "subgroup generators must lie in the torsion part (z = 0)".into(),
                ));
            }
            rank_gens.push(group.rank_of(&g.h));
        }
        Ok(Subgroup::generated_by_ranks(group, &rank_gens))
    }

    pub(crate) fn generated_by_ranks(group: GroupSpec, gens: &[u32]) -> Subgroup {
        let ranks = closure_of(&group, gens);
        Subgroup { group, ranks }
    }

    /// Validates an explicit member list: identity present, all `z = 0`,
    /// closed under addition (which in a finite group implies negation).
    pub fn from_members(members: &GSet) -> Result<Subgroup> {
        let group = members.group().clone();
        let mut ranks = Vec::with_capacity(members.packed().len());
        for &(z, r) in members.packed() {
            if z != 0 {
                return Err(Error::Precondition(
                    "subgroup members must have z = 0".into(),
                ));
            }
            ranks.push(r);
        }
        if ranks.binary_search(&0).is_err() {
            return Err(Error::Precondition("subgroup must contain the identity".into()));
        }
        for &a in &ranks {
            for &b in &ranks {
                if ranks.binary_search(&group.add_ranks(a, b)).is_err() {
                    return Err(Error::Precondition(
                        "member list is not closed under addition".into(),
                    ));
                }
            }
        }
        Ok(Subgroup { group, ranks })
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn order(&self) -> u64 {
        self.ranks.len() as u64
    }

    pub fn is_trivial(&self) -> bool {
        self.ranks.len() == 1
    }

    pub fn is_full(&self) -> bool {
        self.ranks.len() == self.group.h_order() as usize
    }

    pub(crate) fn ranks(&self) -> &[u32] {
        &self.ranks
    }

    pub(crate) fn contains_rank(&self, r: u32) -> bool {
        self.ranks.binary_search(&r).is_ok()
    }

    pub fn contains(&self, e: &Element) -> bool {
        e.z == 0
            && self.group.check_element(e).is_ok()
            && self.contains_rank(self.group.rank_of(&e.h))
    }

    /// Members as a canonical set (all with `z = 0`).
    pub fn members(&self) -> GSet {
        GSet::from_packed(
            self.group.clone(),
            self.ranks.iter().map(|&r| (0i64, r)).collect(),
        )
    }

    /// Table mapping every `h`-rank to the least rank in its `K`-coset.
    pub(crate) fn coset_rep_table(&self) -> Vec<u32> {
        let n = self.group.h_order() as usize;
        let mut rep = vec![u32::MAX; n];
        for r in 0..n as u32 {
            if rep[r as usize] == u32::MAX {
                for &k in &self.ranks {
                    rep[self.group.add_ranks(r, k) as usize] = r;
                }
            }
        }
        rep
    }
}

/// Enumerates every subgroup of `H`, including the trivial subgroup and `H`
/// itself, in canonical order (by order, then member list).
///
/// Works by closing the trivial subgroup under one-generator extensions until
/// no new subgroup appears; every subgroup is reachable this way because it
/// is the closure of finitely many cyclic extension steps.
pub fn subgroups_of_h(group: &GroupSpec) -> Result<Vec<Subgroup>> {
    let n = group.h_order() as u64;
    if n > LATTICE_CAP {
        return Err(Error::CapExceeded {
            what: "|H| for subgroup enumeration",
            actual: n,
            limit: LATTICE_CAP,
        });
    }
    let mut found: BTreeMap<Vec<u32>, ()> = BTreeMap::new();
    let trivial = vec![0u32];
    let mut queue = vec![trivial.clone()];
    found.insert(trivial, ());
    while let Some(ranks) = queue.pop() {
        for x in 1..group.h_order() {
            if ranks.binary_search(&x).is_ok() {
                continue;
            }
            let mut gens = ranks.clone();
            gens.push(x);
            let closed = closure_of(group, &gens);
            if !found.contains_key(&closed) {
                found.insert(closed.clone(), ());
                queue.push(closed);
            }
        }
    }
    let mut subs: Vec<Subgroup> = found
        .into_keys()
        .map(|ranks| Subgroup {
            group: group.clone(),
            ranks,
        })
        .collect();
    subs.sort_by(|a, b| (a.order(), &a.ranks).cmp(&(b.order(), &b.ranks)));
    Ok(subs)
}

/// The canonical homomorphism `G -> G/L` for a subgroup `L <= H`, with the
/// quotient torsion part re-expressed as an invariant-factor torsion list.
///
/// Coset representatives follow the least-canonical-element convention. The
/// map satisfies `apply(a) == apply(b)` exactly when `a - b` lies in `L`.
pub struct QuotientMap {
    source: GroupSpec,
    modulus: Subgroup,
    quotient: GroupSpec,
    /// h-rank -> least rank in its L-coset
    rep_of: Vec<u32>,
    /// h-rank -> rank in the quotient group
    class_of: Vec<u32>,
    /// quotient rank -> least source rank mapping onto it
    lift_of: Vec<u32>,
}

impl QuotientMap {
    pub fn new(group: &GroupSpec, modulus: &Subgroup) -> Result<QuotientMap> {
        if modulus.group() != group {
            return Err(Error::GroupMismatch);
        }
        let n = group.h_order() as usize;
        let rep_of = modulus.coset_rep_table();

        // Invariant-factor decomposition of H/L: pick a maximal-order coset,
        // quotient further by it, recurse, then correct the deeper basis
        // elements so each has its quotient order already relative to L.
        let mut in_l = vec![false; n];
        for &r in modulus.ranks() {
            in_l[r as usize] = true;
        }
        let basis = decompose_quotient(group, &in_l);
        let orders: Vec<u32> = basis.iter().map(|&(_, m)| m).collect();
        let quotient = GroupSpec::new(orders.clone())?;
        debug_assert_eq!(
            quotient.h_order() as u64 * modulus.order(),
            group.h_order() as u64
        );

        // Tabulate coords: walk all coordinate vectors, form the combination
        // of basis elements, and key it by its coset representative.
        let q_ord = quotient.h_order();
        let mut class_of_rep = vec![u32::MAX; n];
        let mut lift_of = vec![u32::MAX; q_ord as usize];
        for q in 0..q_ord {
            let coords = quotient.residues_of(q);
            let mut h = 0u32;
            for (&(b, _), &c) in basis.iter().zip(&coords) {
                h = group.add_ranks(h, group.mul_rank(b, c as i64));
            }
            let rep = rep_of[h as usize];
            debug_assert_eq!(class_of_rep[rep as usize], u32::MAX, "coords must be unique per coset");
            class_of_rep[rep as usize] = q;
            lift_of[q as usize] = rep;
        }
        let class_of = (0..n)
            .map(|r| class_of_rep[rep_of[r] as usize])
            .collect::<Vec<_>>();
        debug_assert!(class_of.iter().all(|&c| c != u32::MAX));

        Ok(QuotientMap {
            source: group.clone(),
            modulus: modulus.clone(),
            quotient,
            rep_of,
            class_of,
            lift_of,
        })
    }

    pub fn source_group(&self) -> &GroupSpec {
        &self.source
    }

    pub fn quotient_group(&self) -> &GroupSpec {
        &self.quotient
    }

    pub fn modulus(&self) -> &Subgroup {
        &self.modulus
    }

    pub(crate) fn class_of_rank(&self, r: u32) -> u32 {
        self.class_of[r as usize]
    }

    /// Image of a single element under the canonical homomorphism.
    pub fn apply(&self, e: &Element) -> Result<Element> {
        self.source.check_element(e)?;
        let q = self.class_of[self.source.rank_of(&e.h) as usize];
        Ok(Element {
            z: e.z,
            h: self.quotient.residues_of(q),
        })
    }

    /// Image of a set; the result has at most as many elements.
    pub fn apply_set(&self, s: &GSet) -> Result<GSet> {
        if s.group() != &self.source {
            return Err(Error::GroupMismatch);
        }
        let elems = s
            .packed()
            .iter()
            .map(|&(z, r)| (z, self.class_of[r as usize]))
            .collect();
        Ok(GSet::from_packed(self.quotient.clone(), elems))
    }

    /// Canonical preimage of a quotient element: same `z`, least coset
    /// representative in `H`.
    pub fn lift(&self, e: &Element) -> Result<Element> {
        self.quotient.check_element(e)?;
        let rep = self.lift_of[self.quotient.rank_of(&e.h) as usize];
        Ok(Element {
            z: e.z,
            h: self.source.residues_of(rep),
        })
    }

    /// Full preimage of a subgroup of the quotient torsion part; its order is
    /// `|L| * |K~|`.
    pub fn preimage_subgroup(&self, k: &Subgroup) -> Result<Subgroup> {
        if k.group() != &self.quotient {
            return Err(Error::GroupMismatch);
        }
        let ranks = (0..self.source.h_order())
            .filter(|&r| k.contains_rank(self.class_of[r as usize]))
            .collect();
        Ok(Subgroup {
            group: self.source.clone(),
            ranks,
        })
    }

    /// Image of a subgroup of `H` in the quotient.
    pub fn image_subgroup(&self, k: &Subgroup) -> Result<Subgroup> {
        if k.group() != &self.source {
            return Err(Error::GroupMismatch);
        }
        let mut ranks: Vec<u32> = k
            .ranks()
            .iter()
            .map(|&r| self.class_of[r as usize])
            .collect();
        ranks.sort_unstable();
        ranks.dedup();
        Ok(Subgroup {
            group: self.quotient.clone(),
            ranks,
        })
    }

    pub(crate) fn rep_of_rank(&self, r: u32) -> u32 {
        self.rep_of[r as usize]
    }
}

/// Returns `(basis element, order)` pairs for `H/L`, orders descending under
/// divisibility, such that the quotient is the internal direct sum of the
/// images of the basis elements.
fn decompose_quotient(group: &GroupSpec, in_l: &[bool]) -> Vec<(u32, u32)> {
    let n = group.h_order();

    // order of r modulo the subgroup marked by `mask`
    let ord_mod = |r: u32, mask: &[bool]| -> u32 {
        let mut acc = r;
        let mut m = 1;
        while !mask[acc as usize] {
            acc = group.add_ranks(acc, r);
            m += 1;
        }
        m
    };

    let mut best: Option<(u32, u32)> = None;
    for r in 0..n {
        let m = ord_mod(r, in_l);
        if best.map_or(true, |(_, bm)| m > bm) {
            best = Some((r, m));
        }
    }
    let (x, m) = best.unwrap();
    if m == 1 {
        return vec![];
    }

    let mut extended = in_l.to_vec();
    let mut stack: Vec<u32> = (0..n).filter(|&r| in_l[r as usize]).collect();
    while let Some(v) = stack.pop() {
        let w = group.add_ranks(v, x);
        if !extended[w as usize] {
            extended[w as usize] = true;
            stack.push(w);
        }
    }

    let rest = decompose_quotient(group, &extended);
    let mut out = vec![(x, m)];
    for (y, my) in rest {
        // my*y lands in <L, x>; write it as c*x modulo L and subtract the
        // matching multiple of x so that my*y' lies in L itself.
        let t = group.mul_rank(y, my as i64);
        let mut c_found = None;
        for c in 0..m {
            let diff = group.add_ranks(t, group.neg_rank(group.mul_rank(x, c as i64)));
            if in_l[diff as usize] {
                c_found = Some(c);
                break;
            }
        }
        let c = c_found.expect("multiple must lie in the extended subgroup");
        assert_eq!(c % my, 0, "correction coefficient must be divisible by the order");
        let y2 = group.add_ranks(y, group.neg_rank(group.mul_rank(x, (c / my) as i64)));
        out.push((y2, my));
    }
    out
}

/// Convenience wrapper: the image of `s` under the canonical map `G -> G/L`.
pub fn quotient(s: &GSet, modulus: &Subgroup) -> Result<GSet> {
    QuotientMap::new(s.group(), modulus)?.apply_set(s)
}

/// A subgroup of `G = Z + H` presented as a cyclic part plus a finite part:
/// `G' = <generator> + torsion_part` with `torsion_part = G' /\ H`.
#[derive(Clone, Debug)]
pub struct CyclicPlusFinite {
    pub generator: Element,
    pub torsion_part: Subgroup,
}

/// Decomposes the subgroup generated by `gens` as `<g> + K` with `K <= H`,
/// and verifies the decomposition by checking that every generator lies in
/// `<g> + K`.
///
/// The kernel of the projection of the generator exponents onto `Z` is
/// computed by unimodular column reduction; the `H`-parts of a kernel basis
/// generate `K`.
pub fn cyclic_plus_finite(group: &GroupSpec, gens: &[Element]) -> Result<CyclicPlusFinite> {
    for g in gens {
        group.check_element(g)?;
    }
    let zs: Vec<i64> = gens.iter().map(|g| g.z).collect();
    let t = gens.len();

    // Column-reduce the row [z1 ... zt] with unimodular operations, tracking
    // the combination each column stands for.
    let mut cols: Vec<(i64, Vec<i64>)> = (0..t)
        .map(|i| {
            let mut v = vec![0i64; t];
            v[i] = 1;
            (zs[i], v)
        })
        .collect();
    loop {
        let nonzero: Vec<usize> = (0..t).filter(|&i| cols[i].0 != 0).collect();
        if nonzero.len() <= 1 {
            break;
        }
        let (i, j) = (nonzero[0], nonzero[1]);
        let (zi, zj) = (cols[i].0, cols[j].0);
        let (g, u, v) = egcd(zi, zj);
        // new col i: u*ci + v*cj (value g); new col j: (zj/g)*ci - (zi/g)*cj (value 0)
        let ci = cols[i].1.clone();
        let cj = cols[j].1.clone();
        let comb = |a: i64, x: &[i64], b: i64, y: &[i64]| -> Vec<i64> {
            x.iter().zip(y).map(|(&p, &q)| a * p + b * q).collect()
        };
        cols[i] = (g, comb(u, &ci, v, &cj));
        cols[j] = (0, comb(zj / g, &ci, -zi / g, &cj));
    }

    let combine = |coeffs: &[i64]| -> Element {
        let mut acc = group.identity();
        for (c, g) in coeffs.iter().zip(gens) {
            let term = group.scale(g, *c).unwrap();
            acc = group.add(&acc, &term).unwrap();
        }
        acc
    };

    let pivot = (0..t).find(|&i| cols[i].0 != 0);
    let generator = match pivot {
        Some(i) => {
            let e = combine(&cols[i].1);
            debug_assert_eq!(e.z, cols[i].0);
            e
        }
        None => group.identity(),
    };

    let mut k_gens = Vec::new();
    for (val, coeffs) in &cols {
        if *val == 0 {
            let e = combine(coeffs);
            assert_eq!(e.z, 0, "kernel combination must project to zero");
            k_gens.push(e);
        }
    }
    // Generators that already lie in H contribute directly.
    for g in gens {
        if g.z == 0 {
            k_gens.push(g.clone());
        }
    }
    let torsion_part = Subgroup::generated_by(group.clone(), &k_gens)?;

    // Constructive verification: each generator must decompose.
    let d = generator.z;
    for g in gens {
        let e = if d == 0 {
            g.clone()
        } else {
            assert_eq!(g.z % d, 0, "projection must be a multiple of the gcd");
            let m = g.z / d;
            group.add(g, &group.neg(&group.scale(&generator, m)?)?)?
        };
        if e.z != 0 || !torsion_part.contains(&e) {
            return Err(Error::Precondition(
                "decomposition verification failed".into(),
            ));
        }
    }
    Ok(CyclicPlusFinite {
        generator,
        torsion_part,
    })
}

fn egcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        let s = if a < 0 { -1 } else { 1 };
        return (a.abs(), s, 0);
    }
    let (g, u, v) = egcd(b, a % b);
    (g, v, u - (a / b) * v)
}
