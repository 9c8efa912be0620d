//! Shared deterministic samplers for the integration suites.

use mconv_core::field::{FieldElement, FiniteField};
use mconv_core::matrix::Matrix;
use mconv_core::tuple::RepTuple;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_invertible(field: &FiniteField, n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let q = field.order();
    loop {
        let m = Matrix::from_fn(field, n, n, |_, _| {
            field.element_by_index(rng.gen_range(0..q))
        });
        if m.is_invertible() {
            return m;
        }
    }
}

pub fn random_tuple(field: &FiniteField, n: usize, r: usize, rng: &mut ChaCha8Rng) -> RepTuple {
    let mats = (0..r).map(|_| random_invertible(field, n, rng)).collect();
    RepTuple::new(field, mats).expect("sampled invertibles")
}

/// Random tuple satisfying the convolution hypotheses: irreducible of
/// dimension >= 2, or 1-dimensional with at least two nontrivial slots.
pub fn random_admissible_tuple(
    field: &FiniteField,
    n: usize,
    r: usize,
    rng: &mut ChaCha8Rng,
) -> RepTuple {
    loop {
        let t = random_tuple(field, n, r, rng);
        if n == 1 {
            let nontrivial = t.mats().iter().filter(|m| !m.is_identity()).count();
            if nontrivial >= 2 {
                return t;
            }
        } else if t.is_irreducible() {
            return t;
        }
    }
}

/// Random element of SL_2 over the field.
pub fn random_sl2(field: &FiniteField, rng: &mut ChaCha8Rng) -> Matrix {
    loop {
        let m = random_invertible(field, 2, rng);
        let d = m.det();
        // rescale one column to reach determinant 1
        let fix = d.inv().unwrap();
        let fixed = Matrix::from_fn(field, 2, 2, |i, j| {
            if j == 0 {
                m.get(i, 0) * &fix
            } else {
                m.get(i, 1).clone()
            }
        });
        if fixed.det().is_one() {
            return fixed;
        }
    }
}

/// Random product of reflections preserving the given symmetric gram.
pub fn random_orthogonal(
    field: &FiniteField,
    gram: &Matrix,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Matrix {
    use mconv_core::forms::{BilinearForm, QuadraticSpace};
    let n = gram.rows();
    let space = QuadraticSpace::new(BilinearForm::new(gram.clone())).unwrap();
    let q = field.order();
    let mut acc = Matrix::identity(field, n);
    let mut made = 0;
    while made < count {
        let v: Vec<FieldElement> = (0..n)
            .map(|_| field.element_by_index(rng.gen_range(0..q)))
            .collect();
        if v.iter().all(|e| e.is_zero()) || space.q_of(&v).is_zero() {
            continue;
        }
        acc = acc.mul(&space.reflection(&v).unwrap());
        made += 1;
    }
    acc
}
