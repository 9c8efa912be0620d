//! r-tuples of invertible matrices viewed as representations of the free
//! group on r generators: irreducibility (spinning plus dual spinning with
//! the Norton criterion), absolute irreducibility via joint commutants,
//! intertwiner spaces, isomorphism testing and the block-imprimitivity
//! lower bound.

use crate::field::FiniteField;
use crate::matrix::{Matrix, MatrixJson, Subspace, Vector};
use crate::poly::Poly;
use crate::rng::stream;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TupleError {
    #[error("slot {0} is not invertible")]
    NotInvertible(usize),
    #[error("matrices must all be square of one size over one field")]
    ShapeMismatch,
    #[error("tuples have different arities")]
    ArityMismatch,
    #[error("tuples live over different fields")]
    FieldMismatch,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("decision budget exhausted: {0}")]
    Undecided(String),
}

/// A representation of the free group F_r: r invertible n x n matrices
/// (T_1, ..., T_r) over one field. Immutable after construction.
#[derive(Clone, PartialEq, Eq)]
pub struct RepTuple {
    field: FiniteField,
    n: usize,
    mats: Vec<Matrix>,
}

impl std::fmt::Debug for RepTuple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RepTuple(r={}, n={}, {:?})", self.arity(), self.n, self.field)
    }
}

/// Basis of the intertwiner space {X : X T_i = T'_i X for all i}.
#[derive(Clone, Debug)]
pub struct HomSpace {
    pub basis: Vec<Matrix>,
}

pub enum Irreducibility {
    Irreducible,
    /// A proper nonzero invariant subspace.
    Reducible(Subspace),
}

impl RepTuple {
    pub fn new(field: &FiniteField, mats: Vec<Matrix>) -> Result<RepTuple, TupleError> {
        let n = mats.first().map_or(0, |m| m.rows());
        for (i, m) in mats.iter().enumerate() {
            if !m.is_square() || m.rows() != n || m.field() != field {
                return Err(TupleError::ShapeMismatch);
            }
            if !m.is_invertible() {
                return Err(TupleError::NotInvertible(i + 1));
            }
        }
        Ok(RepTuple {
            field: field.clone(),
            n,
            mats,
        })
    }

    pub fn field(&self) -> &FiniteField {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn arity(&self) -> usize {
        self.mats.len()
    }

    pub fn mats(&self) -> &[Matrix] {
        &self.mats
    }

    pub fn mat(&self, i: usize) -> &Matrix {
        &self.mats[i]
    }

    /// T_1 T_2 ... T_r in index order.
    pub fn product(&self) -> Matrix {
        let mut acc = Matrix::identity(&self.field, self.n);
        for m in &self.mats {
            acc = acc.mul(m);
        }
        acc
    }

    pub fn rank_profile(&self) -> Vec<usize> {
        self.mats.iter().map(|m| m.rank_minus_identity()).collect()
    }

    pub fn direct_sum(&self, other: &RepTuple) -> Result<RepTuple, TupleError> {
        if self.arity() != other.arity() {
            return Err(TupleError::ArityMismatch);
        }
        if self.field != other.field {
            return Err(TupleError::FieldMismatch);
        }
        let n = self.n + other.n;
        let mats = self
            .mats
            .iter()
            .zip(&other.mats)
            .map(|(a, b)| {
                Matrix::from_fn(&self.field, n, n, |i, j| {
                    if i < self.n && j < self.n {
                        a.get(i, j).clone()
                    } else if i >= self.n && j >= self.n {
                        b.get(i - self.n, j - self.n).clone()
                    } else {
                        self.field.zero()
                    }
                })
            })
            .collect();
        RepTuple::new(&self.field, mats)
    }

    fn generators_with_inverses(&self) -> Vec<Matrix> {
        let mut gens = self.mats.clone();
        gens.extend(self.mats.iter().map(|m| m.inverse().expect("invertible")));
        gens
    }

    /// Smallest invariant subspace containing the seeds.
    pub fn spin(&self, seeds: &[Vector]) -> Subspace {
        spin_closure(&self.generators_with_inverses(), self.n, &self.field, seeds)
    }

    /// Complete irreducibility decision: fast spins from the standard basis,
    /// then Norton-certified spinning seeded by kernels of algebra elements,
    /// with an exhaustive line scan as the final fallback on tiny spaces.
    pub fn irreducibility(&self) -> Irreducibility {
        match self.try_irreducibility() {
            Ok(r) => r,
            Err(e) => panic!("irreducibility undecided at this scale: {e}"),
        }
    }

    pub fn is_irreducible(&self) -> bool {
        matches!(self.irreducibility(), Irreducibility::Irreducible)
    }

    fn try_irreducibility(&self) -> Result<Irreducibility, TupleError> {
        let n = self.n;
        if n <= 1 {
            return Ok(Irreducibility::Irreducible);
        }
        let gens = self.generators_with_inverses();
        let tgens: Vec<Matrix> = gens.iter().map(|m| m.transpose()).collect();
        // standard-basis probes
        for j in 0..n {
            let mut e = vec![self.field.zero(); n];
            e[j] = self.field.one();
            let s = spin_closure(&gens, n, &self.field, &[e]);
            if s.dim() < n {
                return Ok(Irreducibility::Reducible(s));
            }
        }
        let mut rng = stream("meataxe");
        for _ in 0..200 {
            let theta = self.random_algebra_element(&mut rng);
            let factors = theta.char_poly().factor();
            for (g, _) in &factors {
                let nmat = theta.eval_poly(g);
                let ker = nmat.kernel();
                if ker.dim() == 0 {
                    continue;
                }
                let v = ker.basis_vector(0);
                let s = spin_closure(&gens, n, &self.field, &[v]);
                if s.dim() < n {
                    return Ok(Irreducibility::Reducible(s));
                }
                if ker.dim() == g.degree() {
                    // Norton: the dual side settles it
                    let tker = nmat.transpose().kernel();
                    let w = tker.basis_vector(0);
                    let ds = spin_closure(&tgens, n, &self.field, &[w]);
                    if ds.dim() < n {
                        let wit = annihilator(&ds);
                        debug_assert!(self.mats.iter().all(|m| wit.is_invariant_under(m)));
                        return Ok(Irreducibility::Reducible(wit));
                    }
                    return Ok(Irreducibility::Irreducible);
                }
            }
        }
        // exhaustive scan over lines
        let q = self.field.order();
        let mut points: u128 = 1;
        for _ in 0..n {
            points = points.saturating_mul(q as u128);
        }
        if points <= 2_000_000 {
            for v in projective_lines(&self.field, n) {
                let s = spin_closure(&gens, n, &self.field, &[v]);
                if s.dim() < n {
                    return Ok(Irreducibility::Reducible(s));
                }
            }
            return Ok(Irreducibility::Irreducible);
        }
        Err(TupleError::Undecided(
            "Norton search exhausted and space too large to scan".into(),
        ))
    }

    fn random_algebra_element(&self, rng: &mut impl Rng) -> Matrix {
        let q = self.field.order();
        let c0 = self.field.element_by_index(rng.gen_range(0..q));
        let mut acc = Matrix::scalar(&self.field, self.n, &c0);
        for _ in 0..3 {
            let len = rng.gen_range(1..=3usize);
            let mut w = Matrix::identity(&self.field, self.n);
            for _ in 0..len {
                let i = rng.gen_range(0..self.mats.len());
                w = w.mul(&self.mats[i]);
            }
            let c = self.field.element_by_index(rng.gen_range(0..q));
            acc = acc.add(&w.scale(&c));
        }
        acc
    }

    /// dim {X : X T_i = T_i X for all i}.
    pub fn joint_commutant_dim(&self) -> usize {
        let hom = hom_operator(self, self);
        self.n * self.n - hom.rank()
    }

    /// Absolutely irreducible: irreducible with scalar-only joint commutant.
    /// For irreducible tuples the commutant criterion is exact; the explicit
    /// irreducibility conjunct keeps the predicate honest on all inputs.
    pub fn is_absolutely_irreducible(&self) -> bool {
        self.joint_commutant_dim() == 1 && self.is_irreducible()
    }

    /// Canonical basis of {X : X T_i = T'_i X for all i}; X maps the space
    /// of `self` into the space of `other`.
    pub fn hom_space(&self, other: &RepTuple) -> Result<HomSpace, TupleError> {
        if self.arity() != other.arity() {
            return Err(TupleError::ArityMismatch);
        }
        if self.field != other.field {
            return Err(TupleError::FieldMismatch);
        }
        let op = hom_operator(self, other);
        let ker = op.kernel();
        let basis = (0..ker.dim())
            .map(|j| {
                let flat = ker.basis_vector(j);
                Matrix::from_fn(&self.field, other.dim(), self.dim(), |i, jj| {
                    flat[i * self.dim() + jj].clone()
                })
            })
            .collect();
        Ok(HomSpace { basis })
    }

    /// An invertible X with X T_i X^{-1} = T'_i for all i, if one exists.
    pub fn isomorphism_to(&self, other: &RepTuple) -> Option<Matrix> {
        if self.arity() != other.arity() || self.field != other.field || self.n != other.n {
            return None;
        }
        // conjugation-invariant quick rejects
        if self.rank_profile() != other.rank_profile() {
            return None;
        }
        for (a, b) in self.mats.iter().zip(&other.mats) {
            if a.char_poly() != b.char_poly() {
                return None;
            }
        }
        if self.n == 0 {
            return Some(Matrix::identity(&self.field, 0));
        }
        if let Some(x) = self.isomorphism_standard_basis(other) {
            return Some(x);
        }
        // general route: intertwiner space plus invertible-combination search
        let hom = self.hom_space(other).ok()?;
        if hom.basis.is_empty() {
            return None;
        }
        for x in &hom.basis {
            if x.is_invertible() {
                if let Some(x) = self.verify_conjugator(other, x) {
                    return Some(x);
                }
            }
        }
        let d = hom.basis.len();
        let q = self.field.order();
        let mut combos: u128 = 1;
        for _ in 0..d {
            combos = combos.saturating_mul(q as u128);
        }
        if combos <= 200_000 {
            for idx in 1..combos {
                let mut rest = idx;
                let mut x = Matrix::zeros(&self.field, self.n, self.n);
                for b in &hom.basis {
                    let c = self.field.element_by_index((rest % q as u128) as u64);
                    rest /= q as u128;
                    x = x.add(&b.scale(&c));
                }
                if x.is_invertible() {
                    if let Some(x) = self.verify_conjugator(other, &x) {
                        return Some(x);
                    }
                }
            }
            return None;
        }
        let mut rng = stream("iso-combination");
        for _ in 0..400 {
            let mut x = Matrix::zeros(&self.field, self.n, self.n);
            for b in &hom.basis {
                let c = self.field.element_by_index(rng.gen_range(0..q));
                x = x.add(&b.scale(&c));
            }
            if x.is_invertible() {
                if let Some(x) = self.verify_conjugator(other, &x) {
                    return Some(x);
                }
            }
        }
        None
    }

    fn verify_conjugator(&self, other: &RepTuple, x: &Matrix) -> Option<Matrix> {
        let xinv = x.inverse()?;
        for (a, b) in self.mats.iter().zip(&other.mats) {
            if &x.mul(a).mul(&xinv) != b {
                return None;
            }
        }
        Some(x.clone())
    }

    /// Standard-basis route for irreducible pairs: seed both modules from
    /// the kernel of the same algebra word and compare spun bases.
    fn isomorphism_standard_basis(&self, other: &RepTuple) -> Option<Matrix> {
        let mut rng = stream("iso-standard-basis");
        for _ in 0..60 {
            let word = random_word(&mut rng, self.arity(), self.field.order());
            let theta_a = eval_word(self, &word);
            let theta_b = eval_word(other, &word);
            let factors = theta_a.char_poly().factor();
            for (g, _) in &factors {
                let ka = theta_a.eval_poly(g).kernel();
                if ka.dim() != g.degree() || ka.dim() > 3 {
                    continue;
                }
                let kb = theta_b.eval_poly(g).kernel();
                if kb.dim() != ka.dim() {
                    return None; // kernel dims are isomorphism invariants
                }
                let va = ka.basis_vector(0);
                let Some(schedule) = spin_schedule(self, &va) else {
                    continue; // proper spin: leave to the general route
                };
                let Some(basis_a) = apply_schedule(self, &va, &schedule) else {
                    continue;
                };
                for vb in lines_of(&kb) {
                    if let Some(basis_b) = apply_schedule(other, &vb, &schedule) {
                        if let Some(inv_a) = basis_a.inverse() {
                            let x = basis_b.mul(&inv_a);
                            if let Some(x) = self.verify_conjugator(other, &x) {
                                return Some(x);
                            }
                        }
                    }
                }
                // a Norton-certified seed failed on every kernel line
                return None;
            }
        }
        None
    }

    /// Lower bound for the dimension of a block in any nontrivial invariant
    /// decomposition: the smallest d consistent with
    /// d >= max(max_i x_i, n - m/2 + (a(d)+b(d))/2), scanning candidates.
    pub fn imprimitivity_bound(&self) -> Result<usize, TupleError> {
        if self.product().as_scalar().is_none() {
            return Err(TupleError::PreconditionViolated(
                "tuple product must be scalar".into(),
            ));
        }
        if !self.is_absolutely_irreducible() {
            return Err(TupleError::PreconditionViolated(
                "tuple must be absolutely irreducible".into(),
            ));
        }
        let n = self.n;
        let p = self.field.characteristic() as usize;
        struct SlotData {
            rank: usize,
            semisimple: bool,
            unipotent: bool,
            /// (s-1) summed over Jordan blocks with s > 1 and p not dividing s
            unipotent_weight: usize,
            max_block_not_div_p: usize,
        }
        let mut slots = vec![];
        for m in &self.mats {
            let rank = m.rank_minus_identity();
            let semisimple = m.is_semisimple();
            let unipotent = m.is_unipotent();
            let jordan = jordan_block_lengths(m);
            let mut max_block = 0usize;
            let mut weight = 0usize;
            for (_f, lengths) in &jordan {
                for &s in lengths {
                    if s % p != 0 {
                        max_block = max_block.max(s);
                    }
                }
            }
            if unipotent {
                for (_f, lengths) in &jordan {
                    for &s in lengths {
                        if s > 1 && s % p != 0 {
                            weight += s - 1;
                        }
                    }
                }
            }
            slots.push(SlotData {
                rank,
                semisimple,
                unipotent,
                unipotent_weight: weight,
                max_block_not_div_p: max_block,
            });
        }
        let m_total: usize = slots.iter().map(|s| s.rank).sum();
        let x_max = slots
            .iter()
            .map(|s| s.max_block_not_div_p)
            .max()
            .unwrap_or(1);
        // doubled units keep the halves exact
        let needed2 = |d: usize| -> i64 {
            let a: usize = slots
                .iter()
                .filter(|s| s.semisimple && s.rank < d)
                .map(|s| s.rank)
                .sum();
            let b: usize = slots
                .iter()
                .filter(|s| s.unipotent && s.rank < d)
                .map(|s| s.unipotent_weight)
                .sum();
            let core = 2 * n as i64 - m_total as i64 + a as i64 + b as i64;
            core.max(2 * x_max as i64).max(2)
        };
        for d in 1..=n {
            if 2 * d as i64 >= needed2(d) {
                return Ok(d);
            }
        }
        Ok(n)
    }

    // --- JSON: {"field": {...}, "n": int, "r": int, "mats": [matrix...]} ---

    pub fn to_json(&self) -> RepTupleJson {
        RepTupleJson {
            field: self.field.clone(),
            n: self.n,
            r: self.arity(),
            mats: self.mats.iter().map(|m| m.to_json()).collect(),
        }
    }

    pub fn from_json(raw: &RepTupleJson) -> Result<RepTuple, String> {
        if raw.mats.len() != raw.r {
            return Err("arity does not match matrix count".into());
        }
        let mats = raw
            .mats
            .iter()
            .map(|m| Matrix::from_json(&raw.field, m))
            .collect::<Result<Vec<_>, _>>()?;
        let t = RepTuple::new(&raw.field, mats).map_err(|e| e.to_string())?;
        if t.dim() != raw.n {
            return Err("declared dimension does not match matrices".into());
        }
        Ok(t)
    }
}

#[derive(Serialize, Deserialize, Clone)]
pub struct RepTupleJson {
    pub field: FiniteField,
    pub n: usize,
    pub r: usize,
    pub mats: Vec<MatrixJson>,
}

/// Summand description (slot, power, coefficient index) of a deterministic
/// algebra word, shared between two tuples when testing isomorphism.
type WordSpec = Vec<(usize, u64, u64)>;

fn random_word(rng: &mut impl Rng, arity: usize, q: u64) -> WordSpec {
    let terms = rng.gen_range(2..=4usize);
    (0..terms)
        .map(|_| {
            (
                rng.gen_range(0..arity),
                rng.gen_range(1..=2u64),
                rng.gen_range(0..q),
            )
        })
        .collect()
}

fn eval_word(t: &RepTuple, word: &WordSpec) -> Matrix {
    let mut acc = Matrix::zeros(t.field(), t.dim(), t.dim());
    for &(slot, pw, cidx) in word {
        let c = t.field().element_by_index(cidx);
        acc = acc.add(&t.mat(slot).pow(pw).scale(&c));
    }
    acc
}

/// Word schedule spinning `seed` to a full basis: (generator index, source
/// basis position) picks; `None` when the spin stays proper.
fn spin_schedule(t: &RepTuple, seed: &Vector) -> Option<Vec<(usize, usize)>> {
    let n = t.dim();
    let field = t.field().clone();
    let mut basis: Vec<Vector> = vec![];
    let mut picks: Vec<(usize, usize)> = vec![];
    let mut ech = EchelonAccumulator::new(&field, n);
    if !ech.insert(seed.clone()) {
        return None;
    }
    basis.push(seed.clone());
    let mut frontier = 0usize;
    while basis.len() < n && frontier < basis.len() {
        let src = basis[frontier].clone();
        for (gi, g) in t.mats().iter().enumerate() {
            if basis.len() == n {
                break;
            }
            let w = g.mul_vec(&src);
            if ech.insert(w.clone()) {
                picks.push((gi, frontier));
                basis.push(w);
            }
        }
        frontier += 1;
    }
    if basis.len() == n {
        Some(picks)
    } else {
        None
    }
}

/// Replay a spin schedule from another seed; `None` if independence fails.
fn apply_schedule(t: &RepTuple, seed: &Vector, picks: &[(usize, usize)]) -> Option<Matrix> {
    let n = t.dim();
    let field = t.field().clone();
    let mut basis: Vec<Vector> = vec![seed.clone()];
    let mut ech = EchelonAccumulator::new(&field, n);
    if !ech.insert(seed.clone()) {
        return None;
    }
    for &(gi, src) in picks {
        let w = t.mat(gi).mul_vec(&basis[src]);
        if !ech.insert(w.clone()) {
            return None;
        }
        basis.push(w);
    }
    if basis.len() != n {
        return None;
    }
    Some(Matrix::from_rows(&field, basis).transpose())
}

/// Incremental row-echelon span tracker.
struct EchelonAccumulator {
    n: usize,
    rows: Vec<Vector>,
    pivots: Vec<usize>,
}

impl EchelonAccumulator {
    fn new(_field: &FiniteField, n: usize) -> Self {
        EchelonAccumulator {
            n,
            rows: vec![],
            pivots: vec![],
        }
    }

    fn dim(&self) -> usize {
        self.rows.len()
    }

    /// True when the vector enlarged the span.
    fn insert(&mut self, mut v: Vector) -> bool {
        assert_eq!(v.len(), self.n);
        for (row, &pv) in self.rows.iter().zip(&self.pivots) {
            if !v[pv].is_zero() {
                let c = v[pv].clone();
                for i in 0..self.n {
                    v[i] = &v[i] - &(&c * &row[i]);
                }
            }
        }
        let Some(p) = v.iter().position(|e| !e.is_zero()) else {
            return false;
        };
        let inv = v[p].inv().unwrap();
        for e in v.iter_mut() {
            *e = &*e * &inv;
        }
        self.rows.push(v);
        self.pivots.push(p);
        true
    }

    fn vectors(&self) -> Vec<Vector> {
        self.rows.clone()
    }
}

fn spin_closure(gens: &[Matrix], n: usize, field: &FiniteField, seeds: &[Vector]) -> Subspace {
    let mut ech = EchelonAccumulator::new(field, n);
    let mut queue: Vec<Vector> = vec![];
    for s in seeds {
        if ech.insert(s.clone()) {
            queue.push(ech.rows.last().unwrap().clone());
        }
    }
    let mut head = 0;
    while head < queue.len() && ech.dim() < n {
        let v = queue[head].clone();
        head += 1;
        for g in gens {
            let w = g.mul_vec(&v);
            if ech.insert(w) {
                queue.push(ech.rows.last().unwrap().clone());
            }
        }
    }
    Subspace::from_vectors(field, n, ech.vectors())
}

/// {v : u^T v = 0 for all u in the given space}.
fn annihilator(space: &Subspace) -> Subspace {
    let rows = Matrix::from_rows(
        space.field(),
        (0..space.dim()).map(|j| space.basis_vector(j)).collect(),
    );
    rows.kernel()
}

fn hom_operator(a: &RepTuple, b: &RepTuple) -> Matrix {
    // unknowns: X entries (i, j) with i < dim(b), j < dim(a), flattened
    // row-major; equations (X T_s - T'_s X)_{uv} = 0 per slot s
    let na = a.dim();
    let nb = b.dim();
    let f = a.field();
    let r = a.arity();
    let mut op = Matrix::zeros(f, r * nb * na, nb * na);
    for s in 0..r {
        let t = a.mat(s);
        let tp = b.mat(s);
        for u in 0..nb {
            for v in 0..na {
                let row = s * nb * na + u * na + v;
                for k in 0..na {
                    let cur = op.get(row, u * na + k) + t.get(k, v);
                    op.set(row, u * na + k, cur);
                }
                for k in 0..nb {
                    let cur = op.get(row, k * na + v) - tp.get(u, k);
                    op.set(row, k * na + v, cur);
                }
            }
        }
    }
    op
}

fn projective_lines(field: &FiniteField, n: usize) -> Vec<Vector> {
    // one representative per line: first nonzero coordinate = 1
    let q = field.order();
    let mut out = vec![];
    let mut counter = vec![0u64; n];
    loop {
        if let Some(first) = counter.iter().position(|&c| c != 0) {
            if counter[first] == 1 {
                out.push(counter.iter().map(|&c| field.element_by_index(c)).collect());
            }
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            counter[i] += 1;
            if counter[i] < q {
                break;
            }
            counter[i] = 0;
            i += 1;
        }
    }
}

fn lines_of(space: &Subspace) -> Vec<Vector> {
    let d = space.dim();
    let field = space.field().clone();
    let mut out = vec![];
    for coeffs in projective_lines(&field, d) {
        let v = space.basis().mul_vec(&coeffs);
        out.push(v);
    }
    out
}

/// Jordan block lengths per irreducible factor of the characteristic
/// polynomial, from rank sequences of factor powers.
pub fn jordan_block_lengths(m: &Matrix) -> Vec<(Poly, Vec<usize>)> {
    let n = m.rows();
    let factors = m.char_poly().factor();
    let mut out = vec![];
    for (f, mult) in factors {
        let d = f.degree();
        let nmat = m.eval_poly(&f);
        let mut ranks = vec![n];
        let mut pw = Matrix::identity(m.field(), n);
        for _ in 0..=mult {
            pw = pw.mul(&nmat);
            let r = pw.rank();
            if r == *ranks.last().unwrap() {
                break;
            }
            ranks.push(r);
        }
        // blocks of length >= j: (rank(N^{j-1}) - rank(N^j)) / d
        let mut at_least = vec![];
        for j in 1..ranks.len() {
            at_least.push((ranks[j - 1] - ranks[j]) / d);
        }
        let mut lengths = vec![];
        for j in (1..=at_least.len()).rev() {
            let count = at_least[j - 1] - if j < at_least.len() { at_least[j] } else { 0 };
            for _ in 0..count {
                lengths.push(j);
            }
        }
        lengths.sort_unstable();
        lengths.reverse();
        out.push((f, lengths));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f7() -> FiniteField {
        FiniteField::prime(7).unwrap()
    }

    fn g1(f: &FiniteField) -> Matrix {
        Matrix::from_i64(f, &[&[2, 0], &[0, 4]])
    }

    fn g2(f: &FiniteField) -> Matrix {
        Matrix::from_i64(f, &[&[0, -1], &[1, 0]])
    }

    #[test]
    fn constructor_rejects_singular() {
        let f = f7();
        let sing = Matrix::from_i64(&f, &[&[1, 2], &[2, 4]]);
        assert!(matches!(
            RepTuple::new(&f, vec![sing]),
            Err(TupleError::NotInvertible(1))
        ));
    }

    #[test]
    fn product_examples() {
        let f = f7();
        let a = Matrix::from_i64(&f, &[&[1, 2], &[0, 1]]);
        let t = RepTuple::new(&f, vec![a.clone(), a.inverse().unwrap()]).unwrap();
        assert!(t.product().is_identity());
    }

    #[test]
    fn irreducibility_examples() {
        let f = f7();
        // g1, g2 share no eigenvector
        let t = RepTuple::new(&f, vec![g1(&f), g2(&f)]).unwrap();
        assert!(t.is_irreducible());

        // single diagonal matrix: e_1 spans an invariant line
        let t = RepTuple::new(&f, vec![g1(&f)]).unwrap();
        match t.irreducibility() {
            Irreducibility::Reducible(w) => {
                assert_eq!(w.dim(), 1);
                assert!(t.mats().iter().all(|m| w.is_invariant_under(m)));
            }
            _ => panic!("diagonal singleton must be reducible"),
        }

        // 1-dimensional tuples are irreducible
        let t = RepTuple::new(&f, vec![Matrix::from_i64(&f, &[&[3]])]).unwrap();
        assert!(t.is_irreducible());
    }

    #[test]
    fn hidden_invariant_line_is_found() {
        // unipotent with invariant line through (1,1): every standard-basis
        // spin is full, the Norton stage must still find the line
        let f = f7();
        let m = Matrix::from_i64(&f, &[&[2, 6], &[1, 0]]);
        assert_eq!(m.rank_minus_identity(), 1);
        let t = RepTuple::new(&f, vec![m]).unwrap();
        match t.irreducibility() {
            Irreducibility::Reducible(w) => {
                assert!(w.dim() >= 1 && w.dim() < 2);
                assert!(t.mats().iter().all(|g| w.is_invariant_under(g)));
            }
            _ => panic!("unipotent singleton is reducible"),
        }
    }

    #[test]
    fn absolute_irreducibility_examples() {
        let f = f7();
        let t = RepTuple::new(&f, vec![g1(&f), g2(&f)]).unwrap();
        assert!(t.is_absolutely_irreducible());

        // g2 alone generates a copy of F_49: irreducible, commutant dim 2
        let t = RepTuple::new(&f, vec![g2(&f)]).unwrap();
        assert!(t.is_irreducible());
        assert_eq!(t.joint_commutant_dim(), 2);
        assert!(!t.is_absolutely_irreducible());

        let t = RepTuple::new(&f, vec![Matrix::identity(&f, 1)]).unwrap();
        assert!(t.is_absolutely_irreducible());
    }

    #[test]
    fn hom_space_examples() {
        let f = f7();
        let t = RepTuple::new(&f, vec![g1(&f), g2(&f)]).unwrap();
        // Schur: End of an absolutely irreducible tuple is the scalars
        let h = t.hom_space(&t).unwrap();
        assert_eq!(h.basis.len(), 1);
        assert!(h.basis[0].as_scalar().is_some());

        let hmat = Matrix::from_i64(&f, &[&[1, 1], &[0, 1]]);
        let hinv = hmat.inverse().unwrap();
        let t2 = RepTuple::new(
            &f,
            t.mats().iter().map(|m| hmat.mul(m).mul(&hinv)).collect(),
        )
        .unwrap();
        let h12 = t.hom_space(&t2).unwrap();
        assert_eq!(h12.basis.len(), 1);
        assert!(h12.basis[0].is_invertible());

        // no intertwiner between inequivalent single-slot tuples
        let a = RepTuple::new(&f, vec![g1(&f)]).unwrap();
        let b = RepTuple::new(&f, vec![g2(&f)]).unwrap();
        assert!(a.hom_space(&b).unwrap().basis.is_empty());
    }

    #[test]
    fn isomorphism_examples() {
        let f = f7();
        let t = RepTuple::new(&f, vec![g1(&f), g2(&f)]).unwrap();
        let x = t.isomorphism_to(&t).unwrap();
        assert!(x.is_invertible());

        let hmat = Matrix::from_i64(&f, &[&[1, 2], &[1, 3]]);
        let hinv = hmat.inverse().unwrap();
        let t2 = RepTuple::new(
            &f,
            t.mats().iter().map(|m| hmat.mul(m).mul(&hinv)).collect(),
        )
        .unwrap();
        let x = t.isomorphism_to(&t2).expect("conjugate tuples are isomorphic");
        let xinv = x.inverse().unwrap();
        for (a, b) in t.mats().iter().zip(t2.mats()) {
            assert_eq!(&x.mul(a).mul(&xinv), b);
        }

        // different rank profiles: never isomorphic
        let u = RepTuple::new(&f, vec![Matrix::identity(&f, 2), g2(&f)]).unwrap();
        assert!(u.isomorphism_to(&t).is_none());
    }

    #[test]
    fn isomorphism_on_reducible_sums() {
        let f = f7();
        let a = RepTuple::new(&f, vec![g1(&f), g2(&f)]).unwrap();
        let b = RepTuple::new(
            &f,
            vec![Matrix::from_i64(&f, &[&[3]]), Matrix::from_i64(&f, &[&[1]])],
        )
        .unwrap();
        let s1 = a.direct_sum(&b).unwrap();
        let hmat = Matrix::from_i64(&f, &[&[1, 0, 2], &[0, 1, 1], &[0, 0, 1]]);
        let hinv = hmat.inverse().unwrap();
        let s2 = RepTuple::new(
            &f,
            s1.mats().iter().map(|m| hmat.mul(m).mul(&hinv)).collect(),
        )
        .unwrap();
        let x = s1
            .isomorphism_to(&s2)
            .expect("conjugate reducible tuples still isomorphic");
        let xinv = x.inverse().unwrap();
        for (m, mm) in s1.mats().iter().zip(s2.mats()) {
            assert_eq!(&x.mul(m).mul(&xinv), mm);
        }
        assert!(s2.isomorphism_to(&s1).is_some());
    }

    #[test]
    fn jordan_lengths() {
        let f = f7();
        // J_2 + J_1 for eigenvalue 1
        let m = Matrix::from_i64(&f, &[&[1, 1, 0], &[0, 1, 0], &[0, 0, 1]]);
        let j = jordan_block_lengths(&m);
        assert_eq!(j.len(), 1);
        assert_eq!(j[0].1, vec![2, 1]);

        // irreducible quadratic factor: one block of length 1 in degree 2
        let j = jordan_block_lengths(&g2(&f));
        assert_eq!(j.len(), 1);
        assert_eq!(j[0].0.degree(), 2);
        assert_eq!(j[0].1, vec![1]);
    }

    #[test]
    fn imprimitivity_examples() {
        let f = f7();
        // monomial triple generating an imprimitive dihedral group in dim 2
        let d = Matrix::from_i64(&f, &[&[1, 0], &[0, -1]]);
        let s = Matrix::from_i64(&f, &[&[0, 1], &[1, 0]]);
        let ds_inv = d.mul(&s).inverse().unwrap();
        let t = RepTuple::new(&f, vec![d, s, ds_inv]).unwrap();
        assert!(t.is_absolutely_irreducible());
        assert_eq!(t.imprimitivity_bound().unwrap(), 1);

        // 1-dimensional tuple: bound 1
        let t1 = RepTuple::new(
            &f,
            vec![Matrix::from_i64(&f, &[&[2]]), Matrix::from_i64(&f, &[&[4]])],
        )
        .unwrap();
        assert_eq!(t1.imprimitivity_bound().unwrap(), 1);

        // precondition gate: product not scalar
        let bad = RepTuple::new(&f, vec![g1(&f), g2(&f)]).unwrap();
        assert!(matches!(
            bad.imprimitivity_bound(),
            Err(TupleError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let f = f7();
        let t = RepTuple::new(&f, vec![g1(&f), g2(&f)]).unwrap();
        let s = serde_json::to_string(&t.to_json()).unwrap();
        let raw: RepTupleJson = serde_json::from_str(&s).unwrap();
        assert_eq!(RepTuple::from_json(&raw).unwrap(), t);
    }
}
