//! Filters and uniformities on small finite sets.
//!
//! Points of `X = {0, …, n−1}` are bits of a `u32` subset mask. A family of
//! subsets is a `u32` mask indexed by subset masks (so `n ≤ 5`), and a
//! relation on `X` is a `u32` mask with bit `i·n + j` for the pair `(i, j)`.

use std::fmt;

use thiserror::Error;

pub const MAX_GROUND: usize = 5;
/// Largest ground set swept by [`verify_section3`].
pub const MAX_CATALOG: usize = 4;
/// Above this many members a collection is only checked pairwise.
const SUBCOLLECTION_LIMIT: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum FilterError {
    #[error("ground set of size {0} exceeds the limit of {MAX_GROUND}")]
    TooLarge(usize),
    #[error("ground set must be nonempty")]
    EmptyGround,
    #[error("base is empty")]
    EmptyBase,
    #[error("base contains the empty set")]
    EmptyMember,
    #[error("subset {0} is not contained in the ground set")]
    OutOfGround(String),
    #[error("no base member inside {first} ∩ {second}")]
    NotDirected { first: String, second: String },
    #[error("filter is not Cauchy: {0}")]
    NotCauchy(String),
    #[error("ground sets differ ({0} vs {1})")]
    GroundMismatch(usize, usize),
    #[error("invalid uniformity: {0}")]
    BadUniformity(String),
    #[error("empty list of filters")]
    EmptyList,
    #[error("model check failed: {0}")]
    Violation(String),
}

fn check_ground(n: usize) -> Result<(), FilterError> {
    if n == 0 {
        return Err(FilterError::EmptyGround);
    }
    if n > MAX_GROUND {
        return Err(FilterError::TooLarge(n));
    }
    Ok(())
}

fn full_set(n: usize) -> u32 {
    (1u32 << n) - 1
}

fn subset_name(s: u32) -> String {
    let names: Vec<String> = (0..MAX_GROUND)
        .filter(|i| s & (1 << i) != 0)
        .map(|i| ((b'a' + i as u8) as char).to_string())
        .collect();
    format!("{{{}}}", names.join(","))
}

fn point_name(x: usize) -> char {
    (b'a' + x as u8) as char
}

/// A filter on `{0, …, n−1}`, stored as its full family of members.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteFilter {
    n: usize,
    members: u32,
}

impl FiniteFilter {
    /// `↑S`, the filter of all supersets of a nonempty `S`.
    pub fn principal(n: usize, s: u32) -> Result<Self, FilterError> {
        check_ground(n)?;
        if s == 0 {
            return Err(FilterError::EmptyMember);
        }
        if s & !full_set(n) != 0 {
            return Err(FilterError::OutOfGround(subset_name(s)));
        }
        let members = (0..=full_set(n))
            .filter(|&u| u & s == s)
            .fold(0u32, |acc, u| acc | (1 << u));
        Ok(FiniteFilter { n, members })
    }

    /// Validate an explicit family against the filter axioms.
    pub fn from_members(n: usize, members: u32) -> Result<Self, FilterError> {
        check_ground(n)?;
        if !is_filter_family(n, members) {
            return Err(FilterError::Violation(format!(
                "family {members:#x} is not a filter"
            )));
        }
        Ok(FiniteFilter { n, members })
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn members_mask(&self) -> u32 {
        self.members
    }

    pub fn contains(&self, s: u32) -> bool {
        s <= full_set(self.n) && self.members & (1 << s) != 0
    }

    pub fn members(&self) -> impl Iterator<Item = u32> + '_ {
        (0..=full_set(self.n)).filter(move |&s| self.contains(s))
    }

    /// Intersection of all members; the filter is `↑core`.
    pub fn core(&self) -> u32 {
        self.members().fold(full_set(self.n), |acc, s| acc & s)
    }

    pub fn is_subfamily_of(&self, other: &FiniteFilter) -> bool {
        self.members & !other.members == 0
    }
}

impl fmt::Display for FiniteFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "up{}", subset_name(self.core()))
    }
}

fn is_filter_family(n: usize, members: u32) -> bool {
    let full = full_set(n);
    if members == 0 || members & 1 != 0 {
        return false;
    }
    if full < 31 && members >> (full + 1) != 0 {
        return false;
    }
    let has = |s: u32| members & (1 << s) != 0;
    for a in (0..=full).filter(|&a| has(a)) {
        for u in (0..=full).filter(|&u| u & a == a) {
            if !has(u) {
                return false;
            }
        }
        for b in (0..=full).filter(|&b| has(b)) {
            if !has(a & b) {
                return false;
            }
        }
    }
    true
}

/// All filters on an `n`-point set, ordered by member mask.
///
/// Subsets are decided from largest to smallest, which lets both the
/// upward-closure and intersection axioms be enforced as soon as a subset
/// is reached.
pub fn enumerate_filters(n: usize) -> Result<Vec<FiniteFilter>, FilterError> {
    check_ground(n)?;
    let full = full_set(n);
    let mut order: Vec<u32> = (0..=full).collect();
    order.sort_by_key(|s| (std::cmp::Reverse(s.count_ones()), *s));
    let mut out = Vec::new();
    decide(&order, 0, 0, 0, &mut out);
    out.sort();
    Ok(out
        .into_iter()
        .map(|members| FiniteFilter { n, members })
        .collect())
}

fn decide(order: &[u32], k: usize, included: u32, excluded: u32, out: &mut Vec<u32>) {
    let Some(&t) = order.get(k) else {
        if included != 0 {
            out.push(included);
        }
        return;
    };
    let has = |mask: u32, s: u32| mask & (1 << s) != 0;
    let members: Vec<u32> = (0..32).filter(|&s| has(included, s)).collect();
    let forced = members
        .iter()
        .any(|&a| members.iter().any(|&b| a & b == t));
    let forbidden = t == 0
        || (0..32u32).any(|u| u != t && u & t == t && has(excluded, u));
    if !forbidden {
        decide(order, k + 1, included | (1 << t), excluded, out);
    }
    if !forced {
        decide(order, k + 1, included, excluded | (1 << t), out);
    }
}

/// The filter defined by a filtering base.
pub fn filter_from_base(n: usize, base: &[u32]) -> Result<FiniteFilter, FilterError> {
    check_ground(n)?;
    if base.is_empty() {
        return Err(FilterError::EmptyBase);
    }
    for &b in base {
        if b & !full_set(n) != 0 {
            return Err(FilterError::OutOfGround(subset_name(b)));
        }
        if b == 0 {
            return Err(FilterError::EmptyMember);
        }
    }
    for &a in base {
        for &b in base {
            if !base.iter().any(|&c| c & !(a & b) == 0) {
                return Err(FilterError::NotDirected {
                    first: subset_name(a),
                    second: subset_name(b),
                });
            }
        }
    }
    let members = (0..=full_set(n))
        .filter(|&u| base.iter().any(|&b| b & !u == 0))
        .fold(0u32, |acc, u| acc | (1 << u));
    Ok(FiniteFilter { n, members })
}

/// Member-wise intersection of a nonempty list of filters.
pub fn intersect_filters(filters: &[FiniteFilter]) -> Result<FiniteFilter, FilterError> {
    let first = filters.first().ok_or(FilterError::EmptyList)?;
    let mut members = first.members;
    for f in &filters[1..] {
        if f.n != first.n {
            return Err(FilterError::GroundMismatch(first.n, f.n));
        }
        members &= f.members;
    }
    if !is_filter_family(first.n, members) {
        return Err(FilterError::Violation(
            "intersection of filters is not a filter".into(),
        ));
    }
    Ok(FiniteFilter { n: first.n, members })
}

fn pair_bit(n: usize, i: usize, j: usize) -> u32 {
    1 << (i * n + j)
}

fn diagonal(n: usize) -> u32 {
    (0..n).fold(0, |acc, i| acc | pair_bit(n, i, i))
}

fn all_pairs(n: usize) -> u32 {
    if n * n == 32 {
        u32::MAX
    } else {
        (1u32 << (n * n)) - 1
    }
}

fn transpose(n: usize, r: u32) -> u32 {
    let mut t = 0;
    for i in 0..n {
        for j in 0..n {
            if r & pair_bit(n, i, j) != 0 {
                t |= pair_bit(n, j, i);
            }
        }
    }
    t
}

fn compose(n: usize, a: u32, b: u32) -> u32 {
    let mut c = 0;
    for i in 0..n {
        for j in 0..n {
            if r_has(n, a, i, j) {
                for k in 0..n {
                    if r_has(n, b, j, k) {
                        c |= pair_bit(n, i, k);
                    }
                }
            }
        }
    }
    c
}

fn r_has(n: usize, r: u32, i: usize, j: usize) -> bool {
    r & pair_bit(n, i, j) != 0
}

fn product(n: usize, a: u32, b: u32) -> u32 {
    let mut p = 0;
    for i in (0..n).filter(|i| a & (1 << i) != 0) {
        for j in (0..n).filter(|j| b & (1 << j) != 0) {
            p |= pair_bit(n, i, j);
        }
    }
    p
}

/// Every reflexive symmetric relation on `n` points, in increasing mask order.
fn symmetric_reflexive(n: usize) -> Vec<u32> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let mut out: Vec<u32> = (0..1u64 << pairs.len())
        .map(|sel| {
            pairs
                .iter()
                .enumerate()
                .filter(|(k, _)| sel & (1 << k) != 0)
                .fold(diagonal(n), |acc, (_, &(i, j))| {
                    acc | pair_bit(n, i, j) | pair_bit(n, j, i)
                })
        })
        .collect();
    out.sort_unstable();
    out
}

/// A uniform structure on `{0, …, n−1}` given by its entourages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteUniformity {
    n: usize,
    entourages: Vec<u32>,
}

impl FiniteUniformity {
    /// Checks that every entourage is reflexive and symmetric, and that the
    /// family is closed under symmetric supersets and intersections and
    /// admits a `W` with `W∘W ⊆ V` for each `V`.
    pub fn new(n: usize, mut entourages: Vec<u32>) -> Result<Self, FilterError> {
        check_ground(n)?;
        entourages.sort_unstable();
        entourages.dedup();
        if entourages.is_empty() {
            return Err(FilterError::BadUniformity("no entourages".into()));
        }
        let diag = diagonal(n);
        for &v in &entourages {
            if v & !all_pairs(n) != 0 || v & diag != diag || transpose(n, v) != v {
                return Err(FilterError::BadUniformity(format!(
                    "relation {v:#x} is not reflexive and symmetric"
                )));
            }
        }
        let has = |r: u32| entourages.binary_search(&r).is_ok();
        for &v in &entourages {
            if let Some(u) = symmetric_reflexive(n)
                .into_iter()
                .find(|&u| u & v == v && !has(u))
            {
                return Err(FilterError::BadUniformity(format!(
                    "superset {u:#x} of {v:#x} missing"
                )));
            }
            for &w in &entourages {
                if !has(v & w) {
                    return Err(FilterError::BadUniformity(format!(
                        "intersection of {v:#x} and {w:#x} missing"
                    )));
                }
            }
            if !entourages.iter().any(|&w| compose(n, w, w) & !v == 0) {
                return Err(FilterError::BadUniformity(format!(
                    "no W with W∘W inside {v:#x}"
                )));
            }
        }
        Ok(FiniteUniformity { n, entourages })
    }

    /// Every reflexive symmetric relation containing `core`.
    pub fn generated_by(n: usize, core: u32) -> Result<Self, FilterError> {
        check_ground(n)?;
        let ents = symmetric_reflexive(n)
            .into_iter()
            .filter(|&u| u & core == core)
            .collect();
        FiniteUniformity::new(n, ents)
    }

    pub fn discrete(n: usize) -> Result<Self, FilterError> {
        FiniteUniformity::generated_by(n, diagonal(n))
    }

    pub fn indiscrete(n: usize) -> Result<Self, FilterError> {
        FiniteUniformity::new(n, vec![all_pairs(n)])
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn entourages(&self) -> &[u32] {
        &self.entourages
    }

    /// The smallest entourage.
    pub fn core(&self) -> u32 {
        self.entourages.iter().fold(all_pairs(self.n), |a, &v| a & v)
    }

    /// `K(x, V) = {y : (x, y) ∈ V}`.
    pub fn ball(&self, x: usize, v: u32) -> u32 {
        (0..self.n)
            .filter(|&y| r_has(self.n, v, x, y))
            .fold(0, |acc, y| acc | (1 << y))
    }
}

impl fmt::Display for FiniteUniformity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let core = self.core();
        let mut blocks: Vec<String> = Vec::new();
        let mut seen = 0u32;
        for x in 0..self.n {
            if seen & (1 << x) != 0 {
                continue;
            }
            let b = self.ball(x, core);
            seen |= b;
            blocks.push(
                (0..self.n)
                    .filter(|y| b & (1 << y) != 0)
                    .map(point_name)
                    .collect(),
            );
        }
        write!(f, "{}", blocks.join("|"))
    }
}

/// All uniformities on `n` points.
///
/// A finite uniformity has a smallest entourage, which is reflexive,
/// symmetric and idempotent under composition; conversely every such
/// relation generates a uniformity. The catalog therefore tries every
/// reflexive symmetric relation as a core and keeps the ones whose upward
/// closure passes the axiom checks.
pub fn uniformity_catalog(n: usize) -> Result<Vec<FiniteUniformity>, FilterError> {
    check_ground(n)?;
    Ok(symmetric_reflexive(n)
        .into_iter()
        .filter_map(|core| FiniteUniformity::generated_by(n, core).ok())
        .collect())
}

fn same_ground(f: &FiniteFilter, u: &FiniteUniformity) -> Result<(), FilterError> {
    if f.n != u.n {
        return Err(FilterError::GroundMismatch(f.n, u.n));
    }
    Ok(())
}

/// Every ball `K(x, V)` is a member of `F`.
pub fn converges_to(f: &FiniteFilter, x: usize, u: &FiniteUniformity) -> bool {
    x < u.n && f.n == u.n && u.entourages.iter().all(|&v| f.contains(u.ball(x, v)))
}

/// `∀V ∃F₀ ∈ F: F₀ × F₀ ⊆ V`.
pub fn is_cauchy(f: &FiniteFilter, u: &FiniteUniformity) -> bool {
    f.n == u.n
        && u.entourages
            .iter()
            .all(|&v| f.members().any(|a| product(u.n, a, a) & !v == 0))
}

/// `∀V ∃F₁ ∈ F₁, F₂ ∈ F₂: F₁ × F₂ ⊆ V`.
pub fn relation_r(f1: &FiniteFilter, f2: &FiniteFilter, u: &FiniteUniformity) -> bool {
    f1.n == u.n
        && f2.n == u.n
        && u.entourages.iter().all(|&v| {
            f1.members()
                .any(|a| f2.members().any(|b| product(u.n, a, b) & !v == 0))
        })
}

/// Intersection of the R-class of a Cauchy filter.
pub fn minimal_cauchy(f: &FiniteFilter, u: &FiniteUniformity) -> Result<FiniteFilter, FilterError> {
    same_ground(f, u)?;
    if !is_cauchy(f, u) {
        return Err(FilterError::NotCauchy(f.to_string()));
    }
    let class = r_class(f, u, &enumerate_filters(u.n)?);
    let min = intersect_filters(&class)?;
    if !is_cauchy(&min, u) || !class.iter().all(|g| min.is_subfamily_of(g)) {
        return Err(FilterError::Violation(format!(
            "class intersection of {f} is not a minimal Cauchy filter"
        )));
    }
    Ok(min)
}

fn r_class(f: &FiniteFilter, u: &FiniteUniformity, all: &[FiniteFilter]) -> Vec<FiniteFilter> {
    all.iter()
        .filter(|g| is_cauchy(g, u) && relation_r(g, f, u))
        .copied()
        .collect()
}

/// Pass count for one property.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tally {
    pub property: &'static str,
    pub checked: u64,
    pub passed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelSummary {
    pub ground_size: usize,
    /// Partition of `X` into blocks of the smallest entourage.
    pub label: String,
    pub entourages: usize,
    pub filters: usize,
    pub cauchy_filters: usize,
    pub classes: usize,
    pub checks: u64,
    pub failures: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FilterReport {
    pub tallies: Vec<Tally>,
    pub models: Vec<ModelSummary>,
    pub first_counterexample: Option<String>,
}

impl FilterReport {
    pub fn all_passed(&self) -> bool {
        self.first_counterexample.is_none()
            && self.tallies.iter().all(|t| t.checked == t.passed)
    }

    /// Combine two reports; associative, and `FilterReport::default()` is
    /// the identity.
    pub fn merge(mut self, other: FilterReport) -> FilterReport {
        for t in other.tallies {
            match self.tallies.iter_mut().find(|s| s.property == t.property) {
                Some(s) => {
                    s.checked += t.checked;
                    s.passed += t.passed;
                }
                None => self.tallies.push(t),
            }
        }
        self.models.extend(other.models);
        if self.first_counterexample.is_none() {
            self.first_counterexample = other.first_counterexample;
        }
        self
    }
}

pub const PROPERTIES: [&str; 9] = [
    "intersection_is_filter",
    "intersection_converges",
    "r_iff_all_cauchy",
    "r_equivalence",
    "class_intersection_cauchy",
    "minimal_is_least",
    "minimal_matches_cores",
    "convergent_is_cauchy",
    "r_symmetric",
];

struct Checker {
    tallies: Vec<Tally>,
    first: Option<String>,
}

impl Checker {
    fn new() -> Self {
        Checker {
            tallies: PROPERTIES
                .iter()
                .map(|&property| Tally {
                    property,
                    checked: 0,
                    passed: 0,
                })
                .collect(),
            first: None,
        }
    }

    fn record(&mut self, property: &'static str, ok: bool, context: impl FnOnce() -> String) {
        let t = self
            .tallies
            .iter_mut()
            .find(|t| t.property == property)
            .expect("known property");
        t.checked += 1;
        if ok {
            t.passed += 1;
        } else if self.first.is_none() {
            self.first = Some(format!("{property}: {}", context()));
        }
    }

    fn total(&self) -> (u64, u64) {
        self.tallies
            .iter()
            .fold((0, 0), |(c, f), t| (c + t.checked, f + t.checked - t.passed))
    }
}

/// Nonempty subcollections to test: all of them for small collections,
/// otherwise all pairs.
fn subcollections(items: &[FiniteFilter]) -> Vec<Vec<FiniteFilter>> {
    if items.len() <= SUBCOLLECTION_LIMIT {
        (1u32..1 << items.len())
            .map(|sel| {
                items
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| sel & (1 << k) != 0)
                    .map(|(_, f)| *f)
                    .collect()
            })
            .collect()
    } else {
        let mut out = Vec::new();
        for i in 0..items.len() {
            for j in i..items.len() {
                out.push(vec![items[i], items[j]]);
            }
        }
        out
    }
}

fn check_model(u: &FiniteUniformity, all: &[FiniteFilter]) -> FilterReport {
    let n = u.n;
    let mut ck = Checker::new();
    let tag = |s: String| format!("model {u} (n = {n}): {s}");

    for sub in subcollections(all) {
        let ok = intersect_filters(&sub).is_ok();
        ck.record("intersection_is_filter", ok, || tag(format!("{} filters", sub.len())));
    }

    for x in 0..n {
        let conv: Vec<FiniteFilter> = all.iter().filter(|f| converges_to(f, x, u)).copied().collect();
        for sub in subcollections(&conv) {
            let ok = intersect_filters(&sub).is_ok_and(|g| converges_to(&g, x, u));
            ck.record("intersection_converges", ok, || tag(format!("point {}", point_name(x))));
        }
        for f in all {
            if converges_to(f, x, u) {
                ck.record("convergent_is_cauchy", is_cauchy(f, u), || {
                    tag(format!("{f} converges to {} but is not Cauchy", point_name(x)))
                });
            }
        }
    }

    let cauchy: Vec<FiniteFilter> = all.iter().filter(|f| is_cauchy(f, u)).copied().collect();
    for f1 in all {
        for f2 in all {
            let r = relation_r(f1, f2, u);
            let meet = intersect_filters(&[*f1, *f2]).expect("filters intersect");
            let rhs = is_cauchy(f1, u) && is_cauchy(f2, u) && is_cauchy(&meet, u);
            ck.record("r_iff_all_cauchy", r == rhs, || tag(format!("{f1}, {f2}")));
            ck.record("r_symmetric", r == relation_r(f2, f1, u), || tag(format!("{f1}, {f2}")));
        }
    }

    for f1 in &cauchy {
        ck.record("r_equivalence", relation_r(f1, f1, u), || tag(format!("{f1} not reflexive")));
        for f2 in &cauchy {
            if !relation_r(f1, f2, u) {
                continue;
            }
            for f3 in &cauchy {
                if relation_r(f2, f3, u) {
                    ck.record("r_equivalence", relation_r(f1, f3, u), || {
                        tag(format!("{f1} R {f2} R {f3}"))
                    });
                }
            }
        }
    }

    let mut classes: Vec<Vec<FiniteFilter>> = Vec::new();
    for f in &cauchy {
        if !classes.iter().any(|c| c.contains(f)) {
            classes.push(r_class(f, u, all));
        }
    }
    for class in &classes {
        let rep = class[0];
        for sub in subcollections(class) {
            let ok = intersect_filters(&sub).is_ok_and(|g| is_cauchy(&g, u) && relation_r(&g, &rep, u));
            ck.record("class_intersection_cauchy", ok, || tag(format!("class of {rep}")));
        }
        for f in class {
            match minimal_cauchy(f, u) {
                Ok(min) => {
                    let least = relation_r(&min, f, u) && class.iter().all(|g| min.is_subfamily_of(g));
                    ck.record("minimal_is_least", least, || tag(format!("minimal of {f}")));
                    let union = class.iter().fold(0u32, |acc, g| acc | g.core());
                    let by_cores = FiniteFilter::principal(n, union).ok();
                    ck.record("minimal_matches_cores", by_cores == Some(min), || {
                        tag(format!("minimal of {f} is {min}, cores give {}", subset_name(union)))
                    });
                }
                Err(e) => ck.record("minimal_is_least", false, || tag(e.to_string())),
            }
        }
    }

    let (checks, failures) = ck.total();
    FilterReport {
        models: vec![ModelSummary {
            ground_size: n,
            label: u.to_string(),
            entourages: u.entourages.len(),
            filters: all.len(),
            cauchy_filters: cauchy.len(),
            classes: classes.len(),
            checks,
            failures,
        }],
        tallies: ck.tallies,
        first_counterexample: ck.first,
    }
}

/// Exhaustive check of the filter propositions on every uniformity with
/// `1 ≤ |X| ≤ max_n`.
pub fn verify_section3(max_n: usize) -> Result<FilterReport, FilterError> {
    if max_n > MAX_CATALOG {
        return Err(FilterError::TooLarge(max_n));
    }
    let mut jobs = Vec::new();
    for n in 1..=max_n {
        let all = enumerate_filters(n)?;
        for u in uniformity_catalog(n)? {
            jobs.push((u, all.clone()));
        }
    }
    let reports = crate::par::map(&jobs, |(u, all)| check_model(u, all));
    Ok(reports
        .into_iter()
        .fold(FilterReport::default(), FilterReport::merge))
}
