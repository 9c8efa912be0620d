//! Dense univariate polynomials over a [`FiniteField`], with the
//! factorization kit (squarefree part, distinct-degree and equal-degree
//! splitting) that eigenvalue extraction, semisimplicity tests and the
//! irreducibility engine rely on.

use crate::field::{FieldElement, FiniteField};
use crate::rng::stream;
use rand::Rng;

/// Coefficients in ascending degree, no trailing zeros; the zero polynomial
/// has an empty coefficient vector.
#[derive(Clone, PartialEq, Eq)]
pub struct Poly {
    field: FiniteField,
    coeffs: Vec<FieldElement>,
}

impl std::fmt::Debug for Poly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Poly{:?}", self.coeffs)
    }
}

impl Poly {
    pub fn new(field: &FiniteField, coeffs: Vec<FieldElement>) -> Poly {
        let mut p = Poly {
            field: field.clone(),
            coeffs,
        };
        p.trim();
        p
    }

    pub fn zero(field: &FiniteField) -> Poly {
        Poly {
            field: field.clone(),
            coeffs: vec![],
        }
    }

    pub fn constant(c: FieldElement) -> Poly {
        Poly::new(&c.field().clone(), vec![c])
    }

    pub fn one(field: &FiniteField) -> Poly {
        Poly::constant(field.one())
    }

    /// The monomial x.
    pub fn x(field: &FiniteField) -> Poly {
        Poly::new(field, vec![field.zero(), field.one()])
    }

    /// x - c
    pub fn x_minus(c: &FieldElement) -> Poly {
        let f = c.field().clone();
        Poly::new(&f, vec![-c, f.one()])
    }

    fn trim(&mut self) {
        while self.coeffs.last().map_or(false, |c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn field(&self) -> &FiniteField {
        &self.field
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        assert!(!self.is_zero(), "degree of the zero polynomial");
        self.coeffs.len() - 1
    }

    pub fn lead(&self) -> &FieldElement {
        self.coeffs.last().expect("lead of the zero polynomial")
    }

    pub fn is_monic(&self) -> bool {
        !self.is_zero() && self.lead().is_one()
    }

    pub fn monic(&self) -> Poly {
        if self.is_zero() || self.is_monic() {
            return self.clone();
        }
        let inv = self.lead().inv().unwrap();
        self.scale(&inv)
    }

    pub fn scale(&self, c: &FieldElement) -> Poly {
        Poly::new(
            &self.field,
            self.coeffs.iter().map(|a| a * c).collect(),
        )
    }

    pub fn add(&self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let z = self.field.zero();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.coeffs.get(i).unwrap_or(&z);
            let b = rhs.coeffs.get(i).unwrap_or(&z);
            out.push(a + b);
        }
        Poly::new(&self.field, out)
    }

    pub fn sub(&self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let z = self.field.zero();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.coeffs.get(i).unwrap_or(&z);
            let b = rhs.coeffs.get(i).unwrap_or(&z);
            out.push(a - b);
        }
        Poly::new(&self.field, out)
    }

    pub fn mul(&self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero(&self.field);
        }
        let mut out = vec![self.field.zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        Poly::new(&self.field, out)
    }

    /// Quotient and remainder; the divisor must be nonzero.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "division by the zero polynomial");
        if self.is_zero() || self.coeffs.len() < d.coeffs.len() {
            return (Poly::zero(&self.field), self.clone());
        }
        let lead_inv = d.lead().inv().unwrap();
        let mut rem = self.coeffs.clone();
        let dd = d.coeffs.len() - 1;
        let mut quot = vec![self.field.zero(); rem.len() - dd];
        for shift in (0..quot.len()).rev() {
            let top = rem[shift + dd].clone();
            if top.is_zero() {
                continue;
            }
            let q = &top * &lead_inv;
            for (i, c) in d.coeffs.iter().enumerate() {
                rem[shift + i] = &rem[shift + i] - &(&q * c);
            }
            quot[shift] = q;
        }
        (Poly::new(&self.field, quot), Poly::new(&self.field, rem))
    }

    pub fn rem(&self, d: &Poly) -> Poly {
        self.div_rem(d).1
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, rhs: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = rhs.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero(&self.field);
        }
        let out = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| &self.field.from_u64(i as u64) * c)
            .collect();
        Poly::new(&self.field, out)
    }

    pub fn eval(&self, x: &FieldElement) -> FieldElement {
        let mut acc = self.field.zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    /// self^e mod m.
    pub fn pow_mod(&self, mut e: u64, m: &Poly) -> Poly {
        let mut base = self.rem(m);
        let mut acc = Poly::one(&self.field);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).rem(m);
            }
            base = base.mul(&base).rem(m);
            e >>= 1;
        }
        acc
    }

    /// The squarefree radical: product of the distinct irreducible factors.
    pub fn radical(&self) -> Poly {
        assert!(!self.is_zero());
        let f = self.monic();
        if f.degree() == 0 {
            return f;
        }
        let d = f.derivative();
        if d.is_zero() {
            // f is a polynomial in x^p; divide multiplicities by p
            return f.p_th_root().radical();
        }
        let g = f.gcd(&d);
        // w carries exactly the factors whose multiplicity is prime to p
        let w = f.div_rem(&g).0.monic();
        // strip every w-factor from f; what survives has all multiplicities
        // divisible by p, hence zero derivative
        let mut rest = f;
        loop {
            let h = rest.gcd(&w);
            if h.degree() == 0 {
                break;
            }
            rest = rest.div_rem(&h).0;
        }
        if rest.degree() == 0 {
            return w;
        }
        w.mul(&rest.radical()).monic()
    }

    fn p_th_root(&self) -> Poly {
        let p = self.field.characteristic();
        let q = self.field.order();
        // c -> c^(q/p) inverts Frobenius on F_q
        let e = q / p;
        let mut out = vec![];
        for (i, c) in self.coeffs.iter().enumerate() {
            if i % p as usize == 0 {
                out.push(c.pow(e));
            } else {
                assert!(c.is_zero(), "not a polynomial in x^p");
            }
        }
        Poly::new(&self.field, out)
    }

    /// Roots in the ground field with multiplicities.
    ///
    /// For q <= 10^4 this is exhaustive evaluation; above, the linear part is
    /// extracted with gcd(x^q - x, f) and split.
    pub fn roots_with_multiplicity(&self) -> Vec<(FieldElement, usize)> {
        assert!(!self.is_zero());
        let q = self.field.order();
        let mut out = vec![];
        if q <= 10_000 {
            let mut f = self.clone();
            for x in self.field.elements() {
                if !f.eval(&x).is_zero() {
                    continue;
                }
                let lin = Poly::x_minus(&x);
                let mut mult = 0;
                loop {
                    let (quot, rem) = f.div_rem(&lin);
                    if !rem.is_zero() {
                        break;
                    }
                    f = quot;
                    mult += 1;
                }
                out.push((x, mult));
            }
            return out;
        }
        let linear_part = {
            let xq = Poly::x(&self.field).frobenius_mod(self, 1);
            xq.sub(&Poly::x(&self.field)).gcd(self)
        };
        if linear_part.is_zero() || linear_part.degree() == 0 {
            return out;
        }
        for factor in equal_degree_factor(&linear_part, 1) {
            let root = -&factor.coeffs()[0];
            let lin = Poly::x_minus(&root);
            let mut f = self.clone();
            let mut mult = 0;
            loop {
                let (quot, rem) = f.div_rem(&lin);
                if !rem.is_zero() {
                    break;
                }
                f = quot;
                mult += 1;
            }
            out.push((root, mult));
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// self^(q^e) mod m via repeated q-power steps.
    pub fn frobenius_mod(&self, m: &Poly, e: usize) -> Poly {
        let q = self.field.order();
        let mut acc = self.rem(m);
        for _ in 0..e {
            acc = acc.pow_mod(q, m);
        }
        acc
    }

    /// Full factorization into monic irreducibles with multiplicities.
    pub fn factor(&self) -> Vec<(Poly, usize)> {
        assert!(!self.is_zero() && self.degree() >= 1);
        let mut out: Vec<(Poly, usize)> = vec![];
        let radical = self.radical();
        for irred in distinct_degree_split(&radical)
            .into_iter()
            .flat_map(|(part, d)| equal_degree_factor(&part, d))
        {
            // recover multiplicity by repeated division
            let mut mult = 0;
            let mut f = self.monic();
            loop {
                let (quot, rem) = f.div_rem(&irred);
                if !rem.is_zero() {
                    break;
                }
                f = quot;
                mult += 1;
            }
            out.push((irred, mult));
        }
        out.sort_by(|a, b| {
            (a.0.degree(), index_key(&a.0)).cmp(&(b.0.degree(), index_key(&b.0)))
        });
        out
    }

    /// True when the polynomial is squarefree (distinct irreducible factors).
    pub fn is_squarefree(&self) -> bool {
        let rad = self.radical();
        !self.is_zero() && rad.degree() == self.degree()
    }
}

fn index_key(p: &Poly) -> Vec<u64> {
    p.coeffs().iter().map(|c| c.index()).collect()
}

/// Split a squarefree monic polynomial into parts whose irreducible factors
/// all share a degree; returns (product, degree) pairs.
fn distinct_degree_split(f: &Poly) -> Vec<(Poly, usize)> {
    let field = f.field().clone();
    let mut f = f.monic();
    let mut out = vec![];
    let mut h = Poly::x(&field);
    let mut d = 0usize;
    while !f.is_zero() && f.degree() >= 1 {
        d += 1;
        if 2 * d > f.degree() {
            // what is left is a single irreducible
            out.push((f.clone(), f.degree()));
            break;
        }
        h = h.frobenius_mod(&f, 1);
        let g = h.sub(&Poly::x(&field)).gcd(&f);
        if !g.is_zero() && g.degree() >= 1 {
            out.push((g.clone(), d));
            f = f.div_rem(&g).0;
            h = h.rem(&f);
        }
    }
    out
}

/// Cantor-Zassenhaus equal-degree splitting for odd q: `part` is squarefree,
/// monic, with all irreducible factors of degree d.
fn equal_degree_factor(part: &Poly, d: usize) -> Vec<Poly> {
    let field = part.field().clone();
    let q = field.order();
    let mut stack = vec![part.monic()];
    let mut out = vec![];
    let mut rng = stream("equal-degree-split");
    while let Some(f) = stack.pop() {
        if f.degree() == d {
            out.push(f);
            continue;
        }
        loop {
            // random polynomial of degree < deg f
            let coeffs: Vec<FieldElement> = (0..f.degree())
                .map(|_| field.element_by_index(rng.gen_range(0..q)))
                .collect();
            let a = Poly::new(&field, coeffs);
            if a.is_zero() {
                continue;
            }
            let g0 = a.gcd(&f);
            if g0.degree() >= 1 && g0.degree() < f.degree() {
                stack.push(f.div_rem(&g0).0);
                stack.push(g0);
                break;
            }
            // b = a^((q^d-1)/2) mod f, computed as (norm chain)^((q-1)/2)
            let mut norm = a.rem(&f);
            let mut frob = a.rem(&f);
            for _ in 1..d {
                frob = frob.frobenius_mod(&f, 1);
                norm = norm.mul(&frob).rem(&f);
            }
            let b = norm.pow_mod((q - 1) / 2, &f);
            let b1 = b.sub(&Poly::one(&field));
            let g = b1.gcd(&f);
            if !g.is_zero() && g.degree() >= 1 && g.degree() < f.degree() {
                stack.push(f.div_rem(&g).0);
                stack.push(g);
                break;
            }
        }
    }
    out.sort_by(|a, b| index_key(a).cmp(&index_key(b)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f7() -> FiniteField {
        FiniteField::prime(7).unwrap()
    }

    fn poly(f: &FiniteField, c: &[i64]) -> Poly {
        Poly::new(f, c.iter().map(|&x| f.from_i64(x)).collect())
    }

    #[test]
    fn div_rem_reconstructs() {
        let f = f7();
        let a = poly(&f, &[1, 2, 3, 4, 5]);
        let b = poly(&f, &[2, 0, 1]);
        let (q, r) = a.div_rem(&b);
        assert_eq!(q.mul(&b).add(&r), a);
        assert!(r.is_zero() || r.degree() < b.degree());
    }

    #[test]
    fn gcd_of_products() {
        let f = f7();
        let a = poly(&f, &[1, 1]); // x + 1
        let b = poly(&f, &[3, 1]); // x + 3
        let c = poly(&f, &[5, 1]); // x + 5
        let g = a.mul(&b).gcd(&b.mul(&c));
        assert_eq!(g, b.monic());
    }

    #[test]
    fn roots_exhaustive() {
        let f = f7();
        // (x-1)^2 (x-3) has roots 1 (twice), 3
        let p = poly(&f, &[-1, 1]).mul(&poly(&f, &[-1, 1])).mul(&poly(&f, &[-3, 1]));
        let roots = p.roots_with_multiplicity();
        assert_eq!(
            roots,
            vec![(f.from_u64(1), 2), (f.from_u64(3), 1)]
        );
        // x^2 + 1 has no roots mod 7
        assert!(poly(&f, &[1, 0, 1]).roots_with_multiplicity().is_empty());
    }

    #[test]
    fn factor_mixed() {
        let f = f7();
        let p = poly(&f, &[1, 0, 1]) // irreducible quadratic
            .mul(&poly(&f, &[-2, 1])) // x - 2
            .mul(&poly(&f, &[-2, 1])); // again
        let factors = p.factor();
        let mut degs: Vec<(usize, usize)> =
            factors.iter().map(|(g, m)| (g.degree(), *m)).collect();
        degs.sort();
        assert_eq!(degs, vec![(1, 2), (2, 1)]);
        // product reconstructs
        let mut prod = Poly::one(&f);
        for (g, m) in &factors {
            for _ in 0..*m {
                prod = prod.mul(g);
            }
        }
        assert_eq!(prod, p.monic());
    }

    #[test]
    fn radical_strips_powers() {
        let f = f7();
        let p = poly(&f, &[-1, 1]).mul(&poly(&f, &[-1, 1])).mul(&poly(&f, &[1, 1]));
        let rad = p.radical();
        assert_eq!(rad.degree(), 2);
        assert!(rad.eval(&f.from_u64(1)).is_zero());
        assert!(rad.eval(&f.from_i64(-1)).is_zero());
        assert!(p.mul(&p).radical() == rad);
    }

    #[test]
    fn factor_big_power() {
        // (x-1)^7 over F_7 exercises the p-th-root path in radical()
        let f = f7();
        let mut p = Poly::one(&f);
        for _ in 0..7 {
            p = p.mul(&poly(&f, &[-1, 1]));
        }
        let factors = p.factor();
        assert_eq!(factors.len(), 1);
        assert_eq!(factors[0].1, 7);
        assert_eq!(factors[0].0.degree(), 1);
    }

    #[test]
    fn factor_extension_field() {
        let f = FiniteField::new(3, 2, None).unwrap();
        // x^9 - x splits into all linear factors over F_9
        let x = Poly::x(&f);
        let p = x.pow_mod(9, &poly_x_big(&f)).sub(&x);
        let roots = p.roots_with_multiplicity();
        assert_eq!(roots.len(), 9);
    }

    fn poly_x_big(f: &FiniteField) -> Poly {
        // x^10, used only as a modulus bigger than what the test needs
        let mut c = vec![f.zero(); 11];
        c[10] = f.one();
        Poly::new(f, c)
    }
}
