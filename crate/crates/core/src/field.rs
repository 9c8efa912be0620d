//! Exact arithmetic in finite fields F_q, q = p^k with p an odd prime.
//!
//! Extension fields are represented by dense coefficient vectors modulo an
//! explicit monic irreducible, never by discrete-log tables, so construction
//! is deterministic and q up to about 10^6 stays cheap. Characteristic 2 is
//! rejected globally: spinor norms, reflections and the bilinear/quadratic
//! passage all divide by 2.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NonPrime(u64),
    #[error("characteristic 2 is rejected")]
    EvenCharacteristic,
    #[error("modulus is reducible over F_{0}")]
    ReducibleModulus(u64),
    #[error("modulus must be monic of degree {0} with coefficients below p")]
    MalformedModulus(usize),
    #[error("extension degree must be at least 1")]
    BadDegree,
    #[error("division by zero")]
    DivisionByZero,
    #[error("square-class test needs a nonzero input")]
    ZeroInput,
    #[error("no element of multiplicative order {d} in a group of order {group}")]
    NoSuchOrder { d: u64, group: u64 },
    #[error("field too large: p^k must fit below 2^63")]
    FieldTooLarge,
}

#[derive(Debug)]
struct Inner {
    p: u64,
    k: usize,
    /// Monic modulus as coefficients c_0..c_k (c_k = 1); only meaningful for k > 1.
    modulus: Vec<u64>,
    q: u64,
}

/// Descriptor of F_q = F_p[x]/(m(x)). Cheap to clone; equality is by value
/// (same p, k and modulus), so independently constructed copies of the same
/// field interoperate.
#[derive(Clone)]
pub struct FiniteField(Arc<Inner>);

impl PartialEq for FiniteField {
    fn eq(&self, other: &Self) -> bool {
        self.0.p == other.0.p && self.0.k == other.0.k && self.0.modulus == other.0.modulus
    }
}
impl Eq for FiniteField {}

impl Hash for FiniteField {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.p.hash(state);
        self.0.k.hash(state);
        self.0.modulus.hash(state);
    }
}

impl fmt::Debug for FiniteField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.k == 1 {
            write!(f, "F_{}", self.0.p)
        } else {
            write!(f, "F_{}^{}", self.0.p, self.0.k)
        }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

// --- dense polynomial arithmetic over F_p, used only for modulus handling ---

fn pp_trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn pp_mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    pp_trim(&mut out);
    out
}

/// Remainder of `a` modulo the monic polynomial `m`.
fn pp_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut r: Vec<u64> = a.to_vec();
    pp_trim(&mut r);
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dm;
        if lead != 0 {
            for i in 0..dm {
                let sub = (lead * m[i]) % p;
                r[i + shift] = (r[i + shift] + p - sub) % p;
            }
        }
        r.pop();
        pp_trim(&mut r);
    }
    r
}

fn pp_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    pp_trim(&mut a);
    pp_trim(&mut b);
    while !b.is_empty() {
        // make b monic before reducing
        let lead = *b.last().unwrap();
        if lead != 1 {
            let inv = mod_inv_u64(lead, p);
            for c in b.iter_mut() {
                *c = (*c * inv) % p;
            }
        }
        let r = pp_rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

fn mod_inv_u64(a: u64, p: u64) -> u64 {
    // Fermat; p prime and a nonzero mod p.
    mod_pow_u64(a % p, p - 2, p)
}

fn mod_pow_u64(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

/// x^(p^e) mod m by repeated exponentiation-by-p.
fn pp_frobenius_power(m: &[u64], p: u64, e: usize) -> Vec<u64> {
    let mut x = vec![0, 1]; // the polynomial x
    x = pp_rem(&x, m, p);
    for _ in 0..e {
        x = pp_pow_mod(&x, p, m, p);
    }
    x
}

fn pp_pow_mod(a: &[u64], mut e: u64, m: &[u64], p: u64) -> Vec<u64> {
    let mut base = pp_rem(a, m, p);
    let mut acc = vec![1u64];
    while e > 0 {
        if e & 1 == 1 {
            acc = pp_rem(&pp_mul(&acc, &base, p), m, p);
        }
        base = pp_rem(&pp_mul(&base, &base, p), m, p);
        e >>= 1;
    }
    acc
}

/// Rabin irreducibility test for a monic polynomial of degree k over F_p.
/// Degrees up to 3 reduce to an exhaustive root search.
fn pp_is_irreducible(m: &[u64], p: u64) -> bool {
    let k = m.len() - 1;
    if k == 0 {
        return false;
    }
    if k == 1 {
        return true;
    }
    if k <= 3 {
        // reducible iff it has a root in F_p
        for x in 0..p {
            let mut acc = 0u64;
            for &c in m.iter().rev() {
                acc = (acc * x + c) % p;
            }
            if acc == 0 {
                return false;
            }
        }
        return true;
    }
    // Rabin: x^(p^k) == x mod m, and gcd(x^(p^(k/l)) - x, m) = 1 for primes l | k.
    let frob_k = pp_frobenius_power(m, p, k);
    let mut xk = frob_k;
    // xk - x
    if xk.len() < 2 {
        xk.resize(2, 0);
    }
    xk[1] = (xk[1] + p - 1) % p;
    pp_trim(&mut xk);
    if !xk.is_empty() {
        return false;
    }
    let mut l = 2usize;
    let mut kk = k;
    let mut primes = vec![];
    while l * l <= kk {
        if kk % l == 0 {
            primes.push(l);
            while kk % l == 0 {
                kk /= l;
            }
        }
        l += 1;
    }
    if kk > 1 {
        primes.push(kk);
    }
    for l in primes {
        let mut fl = pp_frobenius_power(m, p, k / l);
        if fl.len() < 2 {
            fl.resize(2, 0);
        }
        fl[1] = (fl[1] + p - 1) % p;
        pp_trim(&mut fl);
        let g = pp_gcd(m, &fl, p);
        if g.len() != 1 {
            return false;
        }
    }
    true
}

impl FiniteField {
    /// Build F_p (k = 1) or F_{p^k} with the given monic irreducible modulus.
    /// With `modulus` absent and k > 1, the canonical irreducible is the one
    /// whose non-leading coefficient vector is smallest in the canonical
    /// element order.
    pub fn new(p: u64, k: usize, modulus: Option<Vec<u64>>) -> Result<FiniteField, FieldError> {
        if p == 2 {
            return Err(FieldError::EvenCharacteristic);
        }
        if !is_prime(p) {
            return Err(FieldError::NonPrime(p));
        }
        if k == 0 {
            return Err(FieldError::BadDegree);
        }
        let mut q: u64 = 1;
        for _ in 0..k {
            q = q.checked_mul(p).ok_or(FieldError::FieldTooLarge)?;
            if q >= 1 << 63 {
                return Err(FieldError::FieldTooLarge);
            }
        }
        let modulus = if k == 1 {
            if let Some(m) = modulus {
                // allow an explicit degree-1 monic for completeness
                if m.len() != 2 || m[1] != 1 || m[0] >= p {
                    return Err(FieldError::MalformedModulus(1));
                }
            }
            vec![0, 1]
        } else {
            match modulus {
                Some(m) => {
                    if m.len() != k + 1 || m[k] != 1 || m.iter().any(|&c| c >= p) {
                        return Err(FieldError::MalformedModulus(k));
                    }
                    if !pp_is_irreducible(&m, p) {
                        return Err(FieldError::ReducibleModulus(p));
                    }
                    m
                }
                None => Self::canonical_modulus(p, k)?,
            }
        };
        Ok(FiniteField(Arc::new(Inner { p, k, modulus, q })))
    }

    /// Prime field shorthand.
    pub fn prime(p: u64) -> Result<FiniteField, FieldError> {
        FiniteField::new(p, 1, None)
    }

    fn canonical_modulus(p: u64, k: usize) -> Result<Vec<u64>, FieldError> {
        // enumerate non-leading coefficients in canonical order (index = sum c_i p^i)
        let mut count: u128 = 1;
        for _ in 0..k {
            count *= p as u128;
        }
        let mut idx: u128 = 0;
        while idx < count {
            let mut rest = idx;
            let mut m = Vec::with_capacity(k + 1);
            for _ in 0..k {
                m.push((rest % p as u128) as u64);
                rest /= p as u128;
            }
            m.push(1);
            if pp_is_irreducible(&m, p) {
                return Ok(m);
            }
            idx += 1;
        }
        Err(FieldError::ReducibleModulus(p))
    }

    pub fn characteristic(&self) -> u64 {
        self.0.p
    }

    pub fn degree(&self) -> usize {
        self.0.k
    }

    pub fn order(&self) -> u64 {
        self.0.q
    }

    /// The modulus coefficients c_0..c_k, monic; `None` for prime fields.
    pub fn modulus(&self) -> Option<&[u64]> {
        if self.0.k == 1 {
            None
        } else {
            Some(&self.0.modulus)
        }
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement {
            field: self.clone(),
            coeffs: vec![0; self.0.k],
        }
    }

    pub fn one(&self) -> FieldElement {
        self.from_u64(1)
    }

    /// Embed an integer (the image of Z -> F_q lands in the prime subfield).
    pub fn from_u64(&self, n: u64) -> FieldElement {
        let mut coeffs = vec![0; self.0.k];
        coeffs[0] = n % self.0.p;
        FieldElement {
            field: self.clone(),
            coeffs,
        }
    }

    /// Embed a signed integer.
    pub fn from_i64(&self, n: i64) -> FieldElement {
        let p = self.0.p as i64;
        let r = ((n % p) + p) % p;
        self.from_u64(r as u64)
    }

    /// Element from an explicit coefficient vector (length at most k,
    /// entries reduced mod p).
    pub fn element(&self, coeffs: &[i64]) -> FieldElement {
        assert!(
            coeffs.len() <= self.0.k,
            "coefficient vector longer than extension degree"
        );
        let p = self.0.p as i64;
        let mut out = vec![0u64; self.0.k];
        for (i, &c) in coeffs.iter().enumerate() {
            out[i] = (((c % p) + p) % p) as u64;
        }
        FieldElement {
            field: self.clone(),
            coeffs: out,
        }
    }

    /// The element whose canonical index is `idx` (0 <= idx < q); the
    /// canonical order is by this index.
    pub fn element_by_index(&self, idx: u64) -> FieldElement {
        assert!(idx < self.0.q);
        let mut rest = idx;
        let mut coeffs = vec![0u64; self.0.k];
        for c in coeffs.iter_mut() {
            *c = rest % self.0.p;
            rest /= self.0.p;
        }
        FieldElement {
            field: self.clone(),
            coeffs,
        }
    }

    /// All field elements in canonical order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.0.q).map(move |i| self.element_by_index(i))
    }

    /// The canonically minimal element of exact multiplicative order d.
    pub fn element_of_order(&self, d: u64) -> Result<FieldElement, FieldError> {
        let group = self.0.q - 1;
        if d == 0 || group % d != 0 {
            return Err(FieldError::NoSuchOrder { d, group });
        }
        let mut prime_divs = vec![];
        let mut m = d;
        let mut f = 2;
        while f * f <= m {
            if m % f == 0 {
                prime_divs.push(f);
                while m % f == 0 {
                    m /= f;
                }
            }
            f += 1;
        }
        if m > 1 {
            prime_divs.push(m);
        }
        for idx in 1..self.0.q {
            let a = self.element_by_index(idx);
            if !a.pow(d).is_one() {
                continue;
            }
            if prime_divs.iter().all(|&l| !a.pow(d / l).is_one()) {
                return Ok(a);
            }
        }
        Err(FieldError::NoSuchOrder { d, group })
    }
}

/// An element of a fixed F_q; coefficient vector of length k with entries
/// below p. Elements of distinct fields never mix in one operation.
#[derive(Clone)]
pub struct FieldElement {
    field: FiniteField,
    coeffs: Vec<u64>,
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.coeffs == other.coeffs
    }
}
impl Eq for FieldElement {}

impl Hash for FieldElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.coeffs.hash(state);
    }
}

impl PartialOrd for FieldElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FieldElement {
    /// Canonical order: by index sum c_i p^i.
    fn cmp(&self, other: &Self) -> Ordering {
        self.index().cmp(&other.index())
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.degree() == 1 {
            write!(f, "{}", self.coeffs[0])
        } else {
            write!(f, "{:?}", self.coeffs)
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FieldElement {
    pub fn field(&self) -> &FiniteField {
        &self.field
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    /// Canonical index sum c_i p^i; doubles as the canonical ordering key.
    pub fn index(&self) -> u64 {
        let p = self.field.characteristic();
        let mut acc = 0u64;
        for &c in self.coeffs.iter().rev() {
            acc = acc * p + c;
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0] == 1 && self.coeffs[1..].iter().all(|&c| c == 0)
    }

    fn assert_same_field(&self, other: &FieldElement) {
        assert!(
            self.field == other.field,
            "elements of distinct fields never mix in one operation"
        );
    }

    pub fn pow(&self, mut e: u64) -> FieldElement {
        let mut base = self.clone();
        let mut acc = self.field.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    pub fn pow_i(&self, e: i64) -> FieldElement {
        if e >= 0 {
            self.pow(e as u64)
        } else {
            self.inv()
                .expect("negative power of zero")
                .pow((-e) as u64)
        }
    }

    pub fn inv(&self) -> Result<FieldElement, FieldError> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        // q - 2 exponent; q < 2^63 so this is exact.
        Ok(self.pow(self.field.order() - 2))
    }

    /// Exact multiplicative order; input must be nonzero.
    pub fn multiplicative_order(&self) -> Result<u64, FieldError> {
        if self.is_zero() {
            return Err(FieldError::ZeroInput);
        }
        let group = self.field.order() - 1;
        let mut ord = group;
        let mut m = group;
        let mut f = 2u64;
        let mut primes = vec![];
        while f * f <= m {
            if m % f == 0 {
                primes.push(f);
                while m % f == 0 {
                    m /= f;
                }
            }
            f += 1;
        }
        if m > 1 {
            primes.push(m);
        }
        for l in primes {
            while ord % l == 0 && self.pow(ord / l).is_one() {
                ord /= l;
            }
        }
        Ok(ord)
    }

    /// Square-class test with witness: `Some(b)` with b^2 = a when a is a
    /// square, `None` otherwise. Errors on zero.
    pub fn sqrt(&self) -> Result<Option<FieldElement>, FieldError> {
        if self.is_zero() {
            return Err(FieldError::ZeroInput);
        }
        let q = self.field.order();
        // Euler criterion
        if !self.pow((q - 1) / 2).is_one() {
            return Ok(None);
        }
        // Tonelli-Shanks in F_q with a canonical non-residue.
        let mut s = 0u64;
        let mut t = q - 1;
        while t % 2 == 0 {
            t /= 2;
            s += 1;
        }
        if s == 1 {
            // q = 3 mod 4
            return Ok(Some(self.pow((q + 1) / 4)));
        }
        let z = self
            .field
            .elements()
            .skip(1)
            .find(|e| !e.pow((q - 1) / 2).is_one())
            .expect("non-residue exists in F_q, q odd");
        let mut m = s;
        let mut c = z.pow(t);
        let mut u = self.pow(t);
        let mut r = self.pow((t + 1) / 2);
        loop {
            if u.is_one() {
                return Ok(Some(r));
            }
            let mut i = 0;
            let mut probe = u.clone();
            while !probe.is_one() {
                probe = &probe * &probe;
                i += 1;
                if i == m {
                    // unreachable for genuine squares
                    return Ok(None);
                }
            }
            let mut b = c.clone();
            for _ in 0..(m - i - 1) {
                b = &b * &b;
            }
            m = i;
            c = &b * &b;
            u = &u * &c;
            r = &r * &b;
        }
    }

    /// True when this nonzero element is a square in F_q.
    pub fn is_square(&self) -> Result<bool, FieldError> {
        if self.is_zero() {
            return Err(FieldError::ZeroInput);
        }
        Ok(self.pow((self.field.order() - 1) / 2).is_one())
    }
}

impl Add for &FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: &FieldElement) -> FieldElement {
        self.assert_same_field(rhs);
        let p = self.field.characteristic();
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| (a + b) % p)
            .collect();
        FieldElement {
            field: self.field.clone(),
            coeffs,
        }
    }
}

impl Sub for &FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: &FieldElement) -> FieldElement {
        self.assert_same_field(rhs);
        let p = self.field.characteristic();
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| (a + p - b) % p)
            .collect();
        FieldElement {
            field: self.field.clone(),
            coeffs,
        }
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        let p = self.field.characteristic();
        let coeffs = self.coeffs.iter().map(|&a| (p - a) % p).collect();
        FieldElement {
            field: self.field.clone(),
            coeffs,
        }
    }
}

impl Mul for &FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: &FieldElement) -> FieldElement {
        self.assert_same_field(rhs);
        let p = self.field.characteristic();
        let k = self.field.degree();
        if k == 1 {
            return FieldElement {
                field: self.field.clone(),
                coeffs: vec![self.coeffs[0] * rhs.coeffs[0] % p],
            };
        }
        let prod = pp_mul(&self.coeffs, &rhs.coeffs, p);
        let mut red = pp_rem(&prod, &self.field.0.modulus, p);
        red.resize(k, 0);
        FieldElement {
            field: self.field.clone(),
            coeffs: red,
        }
    }
}

// --- JSON schema: {"p": int, "k": int, "modulus": [int] optional} ---

#[derive(Serialize, Deserialize)]
struct FieldJson {
    p: u64,
    k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    modulus: Option<Vec<u64>>,
}

impl Serialize for FiniteField {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        FieldJson {
            p: self.characteristic(),
            k: self.degree(),
            modulus: self.modulus().map(|m| m.to_vec()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteField {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = FieldJson::deserialize(d)?;
        FiniteField::new(raw.p, raw.k, raw.modulus).map_err(D::Error::custom)
    }
}

/// Elements serialize as coefficient arrays; bare integers are accepted on
/// input for prime-subfield values.
#[derive(Serialize, Deserialize, Clone)]
#[serde(untagged)]
pub enum ElementJson {
    Int(i64),
    Coeffs(Vec<i64>),
}

impl FieldElement {
    pub fn to_json(&self) -> ElementJson {
        ElementJson::Coeffs(self.coeffs.iter().map(|&c| c as i64).collect())
    }

    pub fn from_json(field: &FiniteField, raw: &ElementJson) -> Result<FieldElement, FieldError> {
        match raw {
            ElementJson::Int(n) => Ok(field.from_i64(*n)),
            ElementJson::Coeffs(c) => {
                if c.len() > field.degree() {
                    return Err(FieldError::MalformedModulus(field.degree()));
                }
                Ok(field.element(c))
            }
        }
    }
}
