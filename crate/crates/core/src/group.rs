//! Finite groups by multiplication table or permutation generators, and the
//! combinatorics on top of them: Inn-classes of generating tuples, braid
//! orbits, E^in enumeration with prescribed conjugacy classes, the
//! power-map (kappa) stabilizer that decides rationality of a class tuple,
//! Nielsen classes, and the monomial-shape check used by the braid-orbit
//! pipelines.

use crate::convolution::{mc_lambda, scalar_mult, ConvolutionError};
use crate::field::FieldElement;
use crate::matrix::Matrix;
use crate::tuple::RepTuple;
use crate::rng::stream;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("invalid multiplication table: {0}")]
    BadTable(String),
    #[error("element index out of range")]
    IndexOutOfRange,
    #[error("braid generator out of range")]
    BadGenerator,
    #[error("tuple product is not the identity")]
    ProductNotIdentity,
    #[error("tuple does not generate the group")]
    NotGenerating,
    #[error("no conjugacy class named {0}")]
    NoSuchClass(String),
    #[error("orbit budget exceeded (cap {0})")]
    OrbitBudgetExceeded(usize),
    #[error("enumeration budget exceeded (cap {0})")]
    BudgetExceeded(usize),
    #[error("tuple does not match the monomial shape: {0}")]
    ShapeMismatch(String),
    #[error("group closure exceeded the cap {0}")]
    ClosureBudgetExceeded(usize),
}

/// A finite group of order at most a few thousand, with its multiplication
/// table, inverses, conjugacy classes and exponent precomputed. Identity
/// and inverses are exact; associativity is spot-checked on random triples
/// at construction (and exhaustively for tiny tables).
#[derive(Clone)]
pub struct SmallGroup {
    order: usize,
    identity: u32,
    mul: Vec<u32>,
    inv: Vec<u32>,
    class_of: Vec<u32>,
    classes: Vec<Vec<u32>>,
    class_names: Vec<String>,
    element_orders: Vec<u64>,
    exponent: u64,
}

impl std::fmt::Debug for SmallGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SmallGroup(order {})", self.order)
    }
}

impl SmallGroup {
    pub fn from_table(table: Vec<Vec<u32>>) -> Result<SmallGroup, GroupError> {
        let n = table.len();
        if n == 0 {
            return Err(GroupError::BadTable("empty table".into()));
        }
        let mut mul = vec![0u32; n * n];
        for (i, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(GroupError::BadTable("table is not square".into()));
            }
            for (j, &v) in row.iter().enumerate() {
                if v as usize >= n {
                    return Err(GroupError::BadTable("entry out of range".into()));
                }
                mul[i * n + j] = v;
            }
        }
        // identity: exact
        let identity = (0..n as u32)
            .find(|&e| {
                (0..n as u32).all(|x| {
                    mul[e as usize * n + x as usize] == x && mul[x as usize * n + e as usize] == x
                })
            })
            .ok_or_else(|| GroupError::BadTable("no identity element".into()))?;
        // inverses: exact
        let mut inv = vec![u32::MAX; n];
        for a in 0..n {
            let b = (0..n as u32).find(|&b| {
                mul[a * n + b as usize] == identity && mul[b as usize * n + a] == identity
            });
            inv[a] = b.ok_or_else(|| GroupError::BadTable(format!("element {a} has no inverse")))?;
        }
        // associativity: exhaustive for tiny tables, random triples beyond
        let check = |a: usize, b: usize, c: usize| -> bool {
            let ab = mul[a * n + b] as usize;
            let bc = mul[b * n + c] as usize;
            mul[ab * n + c] == mul[a * n + bc]
        };
        if n <= 16 {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if !check(a, b, c) {
                            return Err(GroupError::BadTable(format!(
                                "associativity fails at ({a},{b},{c})"
                            )));
                        }
                    }
                }
            }
        } else {
            let mut rng = stream("group-associativity");
            for _ in 0..600 {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                let c = rng.gen_range(0..n);
                if !check(a, b, c) {
                    return Err(GroupError::BadTable(format!(
                        "associativity fails at ({a},{b},{c})"
                    )));
                }
            }
        }
        Ok(Self::finish(n, identity, mul, inv))
    }

    /// Closure of permutation generators (images of 0..deg-1), then the
    /// table of the resulting group.
    pub fn from_permutations(gens: &[Vec<usize>]) -> Result<SmallGroup, GroupError> {
        let deg = gens.first().map_or(0, |g| g.len());
        if deg == 0 {
            return Err(GroupError::BadTable("empty permutation generators".into()));
        }
        for g in gens {
            if g.len() != deg {
                return Err(GroupError::BadTable("mixed permutation degrees".into()));
            }
            let mut seen = vec![false; deg];
            for &x in g {
                if x >= deg || seen[x] {
                    return Err(GroupError::BadTable("not a permutation".into()));
                }
                seen[x] = true;
            }
        }
        let id: Vec<usize> = (0..deg).collect();
        let mut elems: Vec<Vec<usize>> = vec![id.clone()];
        let mut index: HashMap<Vec<usize>, u32> = HashMap::new();
        index.insert(id, 0);
        let mut queue = VecDeque::from([0usize]);
        const CAP: usize = 100_000;
        while let Some(at) = queue.pop_front() {
            for g in gens {
                let composed: Vec<usize> = elems[at].iter().map(|&x| g[x]).collect();
                if !index.contains_key(&composed) {
                    let id = elems.len() as u32;
                    if elems.len() >= CAP {
                        return Err(GroupError::ClosureBudgetExceeded(CAP));
                    }
                    index.insert(composed.clone(), id);
                    elems.push(composed);
                    queue.push_back(id as usize);
                }
            }
        }
        let n = elems.len();
        let mut mul = vec![0u32; n * n];
        for a in 0..n {
            for b in 0..n {
                // (a * b)(x) = a(b(x))
                let composed: Vec<usize> = elems[b].iter().map(|&x| elems[a][x]).collect();
                mul[a * n + b] = *index
                    .get(&composed)
                    .expect("closed under composition");
            }
        }
        let identity = 0u32;
        let mut inv = vec![0u32; n];
        for a in 0..n {
            let mut ia = vec![0usize; deg];
            for (x, &y) in elems[a].iter().enumerate() {
                ia[y] = x;
            }
            inv[a] = index[&ia];
        }
        Ok(Self::finish(n, identity, mul, inv))
    }

    fn finish(n: usize, identity: u32, mul: Vec<u32>, inv: Vec<u32>) -> SmallGroup {
        let mut g = SmallGroup {
            order: n,
            identity,
            mul,
            inv,
            class_of: vec![],
            classes: vec![],
            class_names: vec![],
            element_orders: vec![],
            exponent: 1,
        };
        g.element_orders = (0..n as u32).map(|x| g.raw_order(x)).collect();
        g.exponent = g.element_orders.iter().fold(1u64, |acc, &o| lcm(acc, o));
        // conjugacy classes as conjugation orbits
        let mut class_of = vec![u32::MAX; n];
        let mut classes: Vec<Vec<u32>> = vec![];
        for x in 0..n as u32 {
            if class_of[x as usize] != u32::MAX {
                continue;
            }
            let cid = classes.len() as u32;
            let mut members = BTreeSet::new();
            for h in 0..n as u32 {
                members.insert(g.conj(x, h));
            }
            for &m in &members {
                class_of[m as usize] = cid;
            }
            classes.push(members.into_iter().collect());
        }
        // canonical names: sort by (element order, size, smallest member)
        let mut order_keys: Vec<usize> = (0..classes.len()).collect();
        order_keys.sort_by_key(|&c| {
            (
                g.element_orders[classes[c][0] as usize],
                classes[c].len(),
                classes[c][0],
            )
        });
        let mut renumber = vec![0usize; classes.len()];
        for (new, &old) in order_keys.iter().enumerate() {
            renumber[old] = new;
        }
        let mut sorted_classes = vec![vec![]; classes.len()];
        for (old, members) in classes.into_iter().enumerate() {
            sorted_classes[renumber[old]] = members;
        }
        for c in class_of.iter_mut() {
            *c = renumber[*c as usize] as u32;
        }
        let mut names = vec![];
        let mut per_order: HashMap<u64, u32> = HashMap::new();
        for members in &sorted_classes {
            let o = g.element_orders[members[0] as usize];
            let k = per_order.entry(o).or_insert(0);
            let letter = (b'A' + (*k % 26) as u8) as char;
            let name = if *k < 26 {
                format!("{o}{letter}")
            } else {
                format!("{o}{letter}{}", *k / 26)
            };
            *k += 1;
            names.push(name);
        }
        g.class_of = class_of;
        g.classes = sorted_classes;
        g.class_names = names;
        g
    }

    fn raw_order(&self, x: u32) -> u64 {
        let mut acc = x;
        let mut k = 1u64;
        while acc != self.identity {
            acc = self.mul(acc, x);
            k += 1;
        }
        k
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> u32 {
        self.identity
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        self.mul[a as usize * self.order + b as usize]
    }

    pub fn inv(&self, a: u32) -> u32 {
        self.inv[a as usize]
    }

    /// h a h^{-1}.
    pub fn conj(&self, a: u32, h: u32) -> u32 {
        self.mul(self.mul(h, a), self.inv(h))
    }

    pub fn element_order(&self, a: u32) -> u64 {
        self.element_orders[a as usize]
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn class_of(&self, a: u32) -> usize {
        self.class_of[a as usize] as usize
    }

    pub fn class_members(&self, c: usize) -> &[u32] {
        &self.classes[c]
    }

    pub fn class_name(&self, c: usize) -> &str {
        &self.class_names[c]
    }

    pub fn class_by_name(&self, name: &str) -> Result<usize, GroupError> {
        self.class_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| GroupError::NoSuchClass(name.to_string()))
    }

    /// The class containing the u-th powers of the given class.
    pub fn power_class(&self, c: usize, u: u64) -> usize {
        let rep = self.classes[c][0];
        let mut acc = self.identity;
        for _ in 0..(u % self.element_orders[rep as usize].max(1)) {
            acc = self.mul(acc, rep);
        }
        self.class_of(acc)
    }

    pub fn subgroup_closure(&self, gens: &[u32]) -> Vec<u32> {
        let mut seen = vec![false; self.order];
        seen[self.identity as usize] = true;
        let mut out = vec![self.identity];
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            for &g in gens {
                for y in [self.mul(x, g), self.mul(x, self.inv(g))] {
                    if !seen[y as usize] {
                        seen[y as usize] = true;
                        out.push(y);
                        queue.push_back(y);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn generates(&self, gens: &[u32]) -> bool {
        self.subgroup_closure(gens).len() == self.order
    }

    /// All elements, 0..order.
    pub fn elements(&self) -> impl Iterator<Item = u32> {
        0..self.order as u32
    }

    pub fn to_table(&self) -> Vec<Vec<u32>> {
        (0..self.order)
            .map(|i| self.mul[i * self.order..(i + 1) * self.order].to_vec())
            .collect()
    }
}

// --- JSON: {"perm_generators": [[int]]} or {"table": [[int]]} ---

#[derive(Serialize, Deserialize)]
pub struct SmallGroupJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perm_generators: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<Vec<u32>>>,
}

impl SmallGroup {
    pub fn from_json(raw: &SmallGroupJson) -> Result<SmallGroup, GroupError> {
        match (&raw.perm_generators, &raw.table) {
            (Some(p), None) => SmallGroup::from_permutations(p),
            (None, Some(t)) => SmallGroup::from_table(t.clone()),
            _ => Err(GroupError::BadTable(
                "need exactly one of perm_generators or table".into(),
            )),
        }
    }

    pub fn to_json(&self) -> SmallGroupJson {
        SmallGroupJson {
            perm_generators: None,
            table: Some(self.to_table()),
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// Units modulo e, as residues in 1..=e (with [1] for e = 1).
pub fn units_mod(e: u64) -> Vec<u64> {
    if e <= 1 {
        return vec![1];
    }
    (1..=e).filter(|&u| gcd(u, e) == 1).collect()
}

/// A generating tuple with product 1, identified with its Inn(G)-class via
/// the lexicographically minimal simultaneous conjugate. Equality, ordering
/// and hashing all go through the canonical form, so two InnTuples compare
/// equal exactly when the tuples are simultaneously conjugate.
#[derive(Clone, Debug)]
pub struct InnTuple {
    elements: Vec<u32>,
    canonical: Vec<u32>,
}

impl PartialEq for InnTuple {
    fn eq(&self, other: &Self) -> bool {
        self.canonical == other.canonical
    }
}
impl Eq for InnTuple {}
impl PartialOrd for InnTuple {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for InnTuple {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.canonical.cmp(&other.canonical)
    }
}
impl std::hash::Hash for InnTuple {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.canonical.hash(state);
    }
}

impl InnTuple {
    pub fn new(group: &SmallGroup, elements: Vec<u32>) -> Result<InnTuple, GroupError> {
        if elements.iter().any(|&x| x as usize >= group.order()) {
            return Err(GroupError::IndexOutOfRange);
        }
        let mut prod = group.identity();
        for &x in &elements {
            prod = group.mul(prod, x);
        }
        if prod != group.identity() {
            return Err(GroupError::ProductNotIdentity);
        }
        if !group.generates(&elements) {
            return Err(GroupError::NotGenerating);
        }
        let canonical = canonical_conjugate(group, &elements);
        Ok(InnTuple {
            elements,
            canonical,
        })
    }

    pub fn elements(&self) -> &[u32] {
        &self.elements
    }

    pub fn canonical(&self) -> &[u32] {
        &self.canonical
    }

    pub fn arity(&self) -> usize {
        self.elements.len()
    }
}

/// Minimum of (h g_1 h^{-1}, ..., h g_r h^{-1}) over all h, lexicographic.
fn canonical_conjugate(group: &SmallGroup, elements: &[u32]) -> Vec<u32> {
    let mut best: Option<Vec<u32>> = None;
    for h in group.elements() {
        let cand: Vec<u32> = elements.iter().map(|&x| group.conj(x, h)).collect();
        if best.as_ref().map_or(true, |b| &cand < b) {
            best = Some(cand);
        }
    }
    best.expect("nonempty group")
}

/// Hurwitz move on a group tuple; positive letters are Q_i, negative their
/// inverses. Preserves the product and the generated subgroup.
pub fn braid_act_inn(
    group: &SmallGroup,
    letter: i32,
    t: &InnTuple,
) -> Result<InnTuple, GroupError> {
    let r = t.arity();
    let i = letter.unsigned_abs() as usize;
    if letter == 0 || i >= r {
        return Err(GroupError::BadGenerator);
    }
    let idx = i - 1;
    let mut e = t.elements().to_vec();
    let a = e[idx];
    let b = e[idx + 1];
    if letter > 0 {
        e[idx] = group.mul(group.mul(a, b), group.inv(a));
        e[idx + 1] = a;
    } else {
        e[idx] = b;
        e[idx + 1] = group.mul(group.mul(group.inv(b), a), b);
    }
    InnTuple::new(group, e)
}

/// BFS closure of an Inn-class under all Q_i and their inverses,
/// deduplicated by canonical form.
pub fn braid_orbit(
    group: &SmallGroup,
    start: &InnTuple,
    budget: usize,
) -> Result<BTreeSet<InnTuple>, GroupError> {
    let r = start.arity();
    let mut seen: BTreeSet<InnTuple> = BTreeSet::new();
    seen.insert(start.clone());
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(t) = queue.pop_front() {
        for i in 1..r as i32 {
            for letter in [i, -i] {
                let next = braid_act_inn(group, letter, &t)?;
                if !seen.contains(&next) {
                    if seen.len() >= budget {
                        return Err(GroupError::OrbitBudgetExceeded(budget));
                    }
                    seen.insert(next.clone());
                    queue.push_back(next);
                }
            }
        }
    }
    Ok(seen)
}

/// All Inn-classes of generating tuples with product 1 and g_i in the i-th
/// prescribed class, by backtracking over the first r-1 slots with the last
/// slot forced.
pub fn enumerate_e_in(
    group: &SmallGroup,
    classes: &[usize],
    budget: usize,
) -> Result<BTreeSet<InnTuple>, GroupError> {
    let r = classes.len();
    let mut out: BTreeSet<InnTuple> = BTreeSet::new();
    if r == 0 {
        return Ok(out);
    }
    let mut visited = 0usize;
    let mut slots: Vec<u32> = Vec::with_capacity(r);
    backtrack(group, classes, &mut slots, &mut out, budget, &mut visited)?;
    Ok(out)
}

fn backtrack(
    group: &SmallGroup,
    classes: &[usize],
    slots: &mut Vec<u32>,
    out: &mut BTreeSet<InnTuple>,
    budget: usize,
    visited: &mut usize,
) -> Result<(), GroupError> {
    let r = classes.len();
    if slots.len() == r - 1 {
        let mut prod = group.identity();
        for &x in slots.iter() {
            prod = group.mul(prod, x);
        }
        let last = group.inv(prod);
        if group.class_of(last) != classes[r - 1] {
            return Ok(());
        }
        slots.push(last);
        if group.generates(slots) {
            let t = InnTuple::new(group, slots.clone())?;
            out.insert(t);
        }
        slots.pop();
        return Ok(());
    }
    let c = classes[slots.len()];
    for &x in group.class_members(c) {
        *visited += 1;
        if *visited > budget {
            return Err(GroupError::BudgetExceeded(budget));
        }
        slots.push(x);
        backtrack(group, classes, slots, out, budget, visited)?;
        slots.pop();
    }
    Ok(())
}

/// The stabilizer of the class set {C_1, ..., C_r} under the power maps by
/// units modulo the group exponent, and whether it is everything (the class
/// tuple is then rational).
pub fn kappa_stabilizer(group: &SmallGroup, classes: &[usize]) -> (Vec<u64>, bool) {
    let e = group.exponent();
    let units = units_mod(e);
    let base: BTreeSet<usize> = classes.iter().copied().collect();
    let mut stab = vec![];
    for &u in &units {
        let image: BTreeSet<usize> = base.iter().map(|&c| group.power_class(c, u)).collect();
        if image == base {
            stab.push(u);
        }
    }
    let rational = stab.len() == units.len();
    (stab, rational)
}

/// True when some slot permutation matches the tuple to the class list.
pub fn nielsen_membership(group: &SmallGroup, tuple: &InnTuple, classes: &[usize]) -> bool {
    let r = tuple.arity();
    if classes.len() != r {
        return false;
    }
    let slot_classes: Vec<usize> = tuple
        .elements()
        .iter()
        .map(|&g| group.class_of(g))
        .collect();
    let mut used = vec![false; r];
    fn assign(
        slot_classes: &[usize],
        classes: &[usize],
        used: &mut Vec<bool>,
        i: usize,
    ) -> bool {
        if i == classes.len() {
            return true;
        }
        for s in 0..slot_classes.len() {
            if !used[s] && slot_classes[s] == classes[i] {
                used[s] = true;
                if assign(slot_classes, classes, used, i + 1) {
                    return true;
                }
                used[s] = false;
            }
        }
        false
    }
    assign(&slot_classes, classes, &mut used, 0)
}

/// Role of a slot in the monomial-tuple shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotRole {
    Central,
    Diagonal,
    Cycle,
    Other,
}

/// Report of the monomial-shape hypotheses behind the transitive abelian
/// braid action: two n-cycle monomial slots, at least one non-central
/// diagonal slot, central remainder, scalar product. `strict_homology`
/// records per diagonal slot whether it is a genuine rank-1 homology
/// (eigenvalue 1 of multiplicity n-1) rather than one only modulo scalars.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DrShapeReport {
    pub n: usize,
    pub roles: Vec<SlotRole>,
    pub cycle_slots: Vec<usize>,
    pub diagonal_slots: Vec<usize>,
    pub k_diagonal: usize,
    pub central_count: usize,
    pub product_is_scalar: bool,
    pub product_is_identity: bool,
    pub strict_homology: Vec<bool>,
    /// The diagonal-conjugation identity
    /// diag(1, x_2, x_2 x_3, ...) rho diag(x) diag(...)^{-1} = rho diag(prod x, 1, ..., 1)
    /// verified on pseudorandom diagonal arguments for the cyclic shift.
    pub diagonal_conjugation_identity: bool,
}

pub fn check_dr_hypotheses(t: &RepTuple) -> Result<DrShapeReport, GroupError> {
    let n = t.dim();
    let f = t.field().clone();
    let mut roles = vec![];
    let mut cycle_slots = vec![];
    let mut diagonal_slots = vec![];
    let mut strict = vec![];
    for (i, m) in t.mats().iter().enumerate() {
        let role = classify_slot(m);
        match role {
            SlotRole::Cycle => cycle_slots.push(i),
            SlotRole::Diagonal => {
                diagonal_slots.push(i);
                // rank-1 homology in the strict sense
                strict.push(m.rank_minus_identity() == 1 && m.is_semisimple());
            }
            _ => {}
        }
        roles.push(role);
    }
    let central_count = roles.iter().filter(|r| **r == SlotRole::Central).count();
    let other_count = roles.iter().filter(|r| **r == SlotRole::Other).count();
    let prod = t.product();
    let product_scalar = prod.as_scalar();
    if other_count > 0 {
        return Err(GroupError::ShapeMismatch(
            "a slot is neither central, diagonal, nor an n-cycle monomial".into(),
        ));
    }
    if cycle_slots.len() != 2 {
        return Err(GroupError::ShapeMismatch(format!(
            "need exactly two n-cycle monomial slots, found {}",
            cycle_slots.len()
        )));
    }
    if diagonal_slots.is_empty() {
        return Err(GroupError::ShapeMismatch(
            "need at least one non-central diagonal slot".into(),
        ));
    }
    if product_scalar.is_none() {
        return Err(GroupError::ShapeMismatch("tuple product is not scalar".into()));
    }
    // the cyclic-shift conjugation identity, on deterministic pseudorandom x
    let mut rho = Matrix::zeros(&f, n, n);
    rho.set(n - 1, 0, f.one());
    for j in 1..n {
        rho.set(j - 1, j, f.one());
    }
    let mut rng = stream("dr-diagonal-identity");
    let mut identity_ok = true;
    for _ in 0..8 {
        let xs: Vec<FieldElement> = (0..n)
            .map(|_| f.element_by_index(1 + rng.gen_range(0..f.order() - 1)))
            .collect();
        let mut prefix = vec![f.one()];
        for x in xs.iter().skip(1) {
            let last = prefix.last().unwrap().clone();
            prefix.push(&last * x);
        }
        let d_prefix = diag(&f, &prefix);
        let d_x = diag(&f, &xs);
        let lhs = d_prefix
            .mul(&rho)
            .mul(&d_x)
            .mul(&d_prefix.inverse().unwrap());
        let mut total = f.one();
        for x in &xs {
            total = &total * x;
        }
        let mut first = vec![f.one(); n];
        first[0] = total;
        let rhs = rho.mul(&diag(&f, &first));
        if lhs != rhs {
            identity_ok = false;
        }
    }
    Ok(DrShapeReport {
        n,
        k_diagonal: diagonal_slots.len(),
        central_count,
        product_is_identity: prod.is_identity(),
        product_is_scalar: product_scalar.is_some(),
        roles,
        cycle_slots,
        diagonal_slots,
        strict_homology: strict,
        diagonal_conjugation_identity: identity_ok,
    })
}

fn diag(f: &crate::field::FiniteField, entries: &[FieldElement]) -> Matrix {
    let n = entries.len();
    Matrix::from_fn(f, n, n, |i, j| {
        if i == j {
            entries[i].clone()
        } else {
            f.zero()
        }
    })
}

fn classify_slot(m: &Matrix) -> SlotRole {
    if m.as_scalar().is_some() {
        return SlotRole::Central;
    }
    let n = m.rows();
    let mut perm = vec![usize::MAX; n];
    for j in 0..n {
        let mut nz = None;
        for i in 0..n {
            if !m.get(i, j).is_zero() {
                if nz.is_some() {
                    return SlotRole::Other; // more than one entry in a column
                }
                nz = Some(i);
            }
        }
        match nz {
            Some(i) => perm[j] = i,
            None => return SlotRole::Other,
        }
    }
    let mut seen = vec![false; n];
    for &i in &perm {
        if seen[i] {
            return SlotRole::Other;
        }
        seen[i] = true;
    }
    if perm.iter().enumerate().all(|(j, &i)| i == j) {
        return SlotRole::Diagonal;
    }
    // single n-cycle?
    let mut at = 0usize;
    for step in 1..=n {
        at = perm[at];
        if at == 0 {
            return if step == n { SlotRole::Cycle } else { SlotRole::Other };
        }
    }
    SlotRole::Other
}

/// Closure of a matrix group by BFS, or None past the cap.
pub fn matrix_group_closure(gens: &[Matrix], cap: usize) -> Option<Vec<Matrix>> {
    let n = gens.first()?.rows();
    let f = gens[0].field().clone();
    let id = Matrix::identity(&f, n);
    let mut index: HashMap<Matrix, usize> = HashMap::new();
    index.insert(id.clone(), 0);
    let mut elems = vec![id];
    let mut queue = VecDeque::from([0usize]);
    while let Some(at) = queue.pop_front() {
        for g in gens {
            let prod = elems[at].mul(g);
            if !index.contains_key(&prod) {
                if elems.len() >= cap {
                    return None;
                }
                index.insert(prod.clone(), elems.len());
                elems.push(prod);
                queue.push_back(elems.len() - 1);
            }
        }
    }
    Some(elems)
}

/// A single convolution or scalar-multiplication step, for the small-scale
/// membership test below.
pub enum FunctorStep {
    Mc(FieldElement),
    Scalar(Vec<FieldElement>),
}

impl FunctorStep {
    pub fn apply(&self, t: &RepTuple) -> Result<RepTuple, ConvolutionError> {
        match self {
            FunctorStep::Mc(lambda) => Ok(mc_lambda(t, lambda)?.quotient),
            FunctorStep::Scalar(ls) => Ok(scalar_mult(t, ls)?),
        }
    }

    pub fn inverse_apply(&self, t: &RepTuple) -> Result<RepTuple, ConvolutionError> {
        match self {
            FunctorStep::Mc(lambda) => {
                let li = lambda.inv().map_err(|_| ConvolutionError::ZeroLambda)?;
                Ok(mc_lambda(t, &li)?.quotient)
            }
            FunctorStep::Scalar(ls) => {
                let inv: Vec<FieldElement> = ls
                    .iter()
                    .map(|l| l.inv().map_err(|_| ConvolutionError::ZeroLambda))
                    .collect::<Result<_, _>>()?;
                Ok(scalar_mult(t, &inv)?)
            }
        }
    }
}

/// Small-scale membership in the distinguished Nielsen subset attached to a
/// base tuple and one functor step: the candidate must lie in the Nielsen
/// class of F(base) inside the generated matrix group, and its inverse
/// image under the step must generate a conjugate of the base group.
/// Conjugacy of the groups is certified through a slot-permuted tuple
/// conjugator, which is the form it takes for single-step functors.
pub fn n_in_membership(
    base: &RepTuple,
    step: &FunctorStep,
    candidate: &RepTuple,
    cap: usize,
) -> Result<bool, GroupError> {
    let tilde = step
        .apply(base)
        .map_err(|e| GroupError::ShapeMismatch(e.to_string()))?;
    if candidate.dim() != tilde.dim()
        || candidate.arity() != tilde.arity()
        || candidate.field() != tilde.field()
    {
        return Ok(false);
    }
    let closure = matrix_group_closure(tilde.mats(), cap)
        .ok_or(GroupError::ClosureBudgetExceeded(cap))?;
    let index: HashMap<&Matrix, usize> = closure.iter().enumerate().map(|(i, m)| (m, i)).collect();
    // candidate slots must lie in <tilde>
    for m in candidate.mats() {
        if !index.contains_key(m) {
            return Ok(false);
        }
    }
    // Nielsen condition: classes of candidate slots match the classes of the
    // tilde slots up to a permutation; conjugacy inside the finite group by
    // orbit closure
    let class_id = |m: &Matrix| -> usize {
        // orbit of m under conjugation by generators, canonical = min index
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([index[m]]);
        seen.insert(index[m]);
        while let Some(at) = queue.pop_front() {
            for g in tilde.mats() {
                let conj = g.mul(&closure[at]).mul(&g.inverse().unwrap());
                let ci = index[&conj];
                if seen.insert(ci) {
                    queue.push_back(ci);
                }
            }
        }
        *seen.iter().next().unwrap()
    };
    let tilde_classes: Vec<usize> = tilde.mats().iter().map(class_id).collect();
    let cand_classes: Vec<usize> = candidate.mats().iter().map(class_id).collect();
    let mut a = tilde_classes.clone();
    let mut b = cand_classes.clone();
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        return Ok(false);
    }
    // inverse image must generate a conjugate of <base>
    let back = match step.inverse_apply(candidate) {
        Ok(t) => t,
        Err(_) => return Ok(false),
    };
    if back.dim() != base.dim() {
        return Ok(false);
    }
    let base_closure = matrix_group_closure(base.mats(), cap)
        .ok_or(GroupError::ClosureBudgetExceeded(cap))?;
    let back_closure = matrix_group_closure(back.mats(), cap)
        .ok_or(GroupError::ClosureBudgetExceeded(cap))?;
    if base_closure.len() != back_closure.len() {
        return Ok(false);
    }
    // slot-permuted tuple conjugacy
    let r = base.arity();
    let mut perm: Vec<usize> = (0..r).collect();
    loop {
        let permuted = RepTuple::new(
            back.field(),
            perm.iter().map(|&i| back.mat(i).clone()).collect(),
        )
        .expect("permuted tuple stays valid");
        if permuted.isomorphism_to(base).is_some() {
            return Ok(true);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(false)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::field::FiniteField;

    fn s3() -> SmallGroup {
        catalog::symmetric(3)
    }

    #[test]
    fn s3_structure() {
        let g = s3();
        assert_eq!(g.order(), 6);
        assert_eq!(g.class_count(), 3);
        assert_eq!(g.exponent(), 6);
        let names: Vec<&str> = (0..3).map(|c| g.class_name(c)).collect();
        assert_eq!(names, vec!["1A", "2A", "3A"]);
        assert_eq!(g.class_members(1).len(), 3);
        assert_eq!(g.class_members(2).len(), 2);
    }

    #[test]
    fn braid_action_formula_and_relation() {
        let g = s3();
        let two_a = g.class_by_name("2A").unwrap();
        let three_a = g.class_by_name("3A").unwrap();
        let e_in = enumerate_e_in(&g, &[two_a, two_a, three_a], 100_000).unwrap();
        assert_eq!(e_in.len(), 1, "the S3 triple (2A,2A,3A) is rigid");
        let t = e_in.iter().next().unwrap().clone();
        // Q_i then Q_i^{-1} is the identity
        let q1 = braid_act_inn(&g, 1, &t).unwrap();
        assert_eq!(braid_act_inn(&g, -1, &q1).unwrap(), t);
        // braid relation as actions
        let lhs = braid_act_inn(&g, 1, &braid_act_inn(&g, 2, &braid_act_inn(&g, 1, &t).unwrap()).unwrap()).unwrap();
        let rhs = braid_act_inn(&g, 2, &braid_act_inn(&g, 1, &braid_act_inn(&g, 2, &t).unwrap()).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn e_in_examples() {
        let g = s3();
        let three_a = g.class_by_name("3A").unwrap();
        // 3-cycles alone generate only A_3
        let none = enumerate_e_in(&g, &[three_a, three_a, three_a], 100_000).unwrap();
        assert!(none.is_empty());
        // r = 1 with the identity class: generation fails unless |G| = 1
        let one_a = g.class_by_name("1A").unwrap();
        assert!(enumerate_e_in(&g, &[one_a], 1000).unwrap().is_empty());
        let triv = catalog::cyclic(1);
        assert_eq!(enumerate_e_in(&triv, &[0], 1000).unwrap().len(), 1);
    }

    #[test]
    fn orbit_contains_start_and_is_braid_closed() {
        let g = catalog::abelian(&[2, 2]);
        // four nontrivial commuting slots with product 1
        let elems: Vec<u32> = g.elements().filter(|&x| x != g.identity()).collect();
        let t = InnTuple::new(&g, vec![elems[0], elems[0], elems[1], elems[1]]);
        let t = match t {
            Ok(t) => t,
            Err(_) => {
                // product may not be 1 depending on ordering; build directly
                let a = elems[0];
                let b = elems[1];
                InnTuple::new(&g, vec![a, a, b, b]).unwrap()
            }
        };
        let orbit = braid_orbit(&g, &t, 10_000).unwrap();
        assert!(orbit.contains(&t));
        for x in &orbit {
            for i in 1..t.arity() as i32 {
                assert!(orbit.contains(&braid_act_inn(&g, i, x).unwrap()));
            }
        }
    }

    #[test]
    fn kappa_examples() {
        // symmetric groups: every class tuple is rational
        let g = s3();
        for a in 0..3 {
            for b in 0..3 {
                let (_, rational) = kappa_stabilizer(&g, &[a, b]);
                assert!(rational);
            }
        }
        // Z/3 with a single nontrivial class: stabilizer is {1}
        let z3 = catalog::cyclic(3);
        let c = z3.class_of(1);
        let (stab, rational) = kappa_stabilizer(&z3, &[c, c, c]);
        assert_eq!(stab, vec![1]);
        assert!(!rational);
        // class set closed under inversion contains -1
        let z4 = catalog::cyclic(4);
        let c1 = z4.class_of(1);
        let c3 = z4.class_of(3);
        let (stab, _) = kappa_stabilizer(&z4, &[c1, c3]);
        assert!(stab.contains(&3), "u = -1 must stabilize an inversion-closed set");
    }

    #[test]
    fn nielsen_examples() {
        let g = s3();
        let two_a = g.class_by_name("2A").unwrap();
        let three_a = g.class_by_name("3A").unwrap();
        let t = enumerate_e_in(&g, &[two_a, two_a, three_a], 100_000)
            .unwrap()
            .into_iter()
            .next()
            .unwrap();
        assert!(nielsen_membership(&g, &t, &[two_a, two_a, three_a]));
        assert!(nielsen_membership(&g, &t, &[three_a, two_a, two_a]));
        assert!(!nielsen_membership(&g, &t, &[three_a, three_a, three_a]));
    }

    #[test]
    fn dr_shape_check() {
        let f = FiniteField::prime(7).unwrap();
        // T_2-shaped: scalars, a diagonal, two antidiagonal cycles
        let minus = Matrix::scalar(&f, 2, &f.from_i64(-1));
        let s1 = Matrix::from_i64(&f, &[&[4, 0], &[0, 2]]);
        let r = Matrix::from_i64(&f, &[&[0, -1], &[1, 0]]);
        let last = s1.mul(&r.inverse().unwrap()).neg();
        let t2 = RepTuple::new(&f, vec![minus.clone(), minus, s1, r, last]).unwrap();
        let rep = check_dr_hypotheses(&t2).unwrap();
        assert_eq!(rep.cycle_slots.len(), 2);
        assert_eq!(rep.k_diagonal, 1);
        assert!(rep.product_is_scalar);
        assert!(!rep.product_is_identity);
        assert!(rep.diagonal_conjugation_identity);
        assert_eq!(rep.strict_homology, vec![false]);

        // identity tuple: mismatch (no cycle slots)
        let idt = RepTuple::new(&f, vec![Matrix::identity(&f, 2); 3]).unwrap();
        assert!(matches!(
            check_dr_hypotheses(&idt),
            Err(GroupError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn n_in_membership_single_step() {
        let f = FiniteField::prime(3).unwrap();
        // tiny 1-dim base tuple over F_3
        let one = |x: i64| Matrix::from_i64(&f, &[&[x]]);
        let base = RepTuple::new(&f, vec![one(-1), one(-1), one(1)]).unwrap();
        let step = FunctorStep::Mc(f.from_i64(-1));
        let tilde = step.apply(&base).unwrap();
        assert!(n_in_membership(&base, &step, &tilde, 100_000).unwrap());
        // a wrong-dimension candidate is rejected quietly
        let wrong = RepTuple::new(&f, vec![one(1), one(1), one(1)]).unwrap();
        assert!(!n_in_membership(&base, &step, &wrong, 100_000).unwrap());
    }

    #[test]
    fn budgets_are_enforced() {
        let g = s3();
        let two_a = g.class_by_name("2A").unwrap();
        let three_a = g.class_by_name("3A").unwrap();
        assert!(matches!(
            enumerate_e_in(&g, &[two_a, two_a, three_a], 2),
            Err(GroupError::BudgetExceeded(2))
        ));
        let t = enumerate_e_in(&g, &[two_a, two_a, three_a], 10_000)
            .unwrap()
            .into_iter()
            .next()
            .unwrap();
        assert!(matches!(
            braid_orbit(&g, &t, 1),
            Err(GroupError::OrbitBudgetExceeded(1))
        ));
    }

    #[test]
    fn json_round_trip() {
        let g = s3();
        let s = serde_json::to_string(&g.to_json()).unwrap();
        let raw: SmallGroupJson = serde_json::from_str(&s).unwrap();
        let g2 = SmallGroup::from_json(&raw).unwrap();
        assert_eq!(g2.order(), 6);
        assert_eq!(g2.class_count(), 3);
    }
}
