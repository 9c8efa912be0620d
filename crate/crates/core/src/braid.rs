//! Braid words and their Hurwitz action on matrix tuples, plus the index
//! of rigidity. The generator move is
//! Q_i: (.., g_i, g_{i+1}, ..) -> (.., g_i g_{i+1} g_i^{-1}, g_i, ..),
//! with negative letters acting by the inverse move; both preserve the
//! tuple product and the generated group.

use crate::matrix::Matrix;
use crate::tuple::RepTuple;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BraidError {
    #[error("generator index {0} out of range for arity {1}")]
    IndexOutOfRange(i32, usize),
    #[error("index of rigidity needs tuple product = identity")]
    ProductNotIdentity,
}

/// A word in the braid generators: signed indices, letter k meaning Q_k and
/// -k meaning Q_k^{-1}, applied left to right.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BraidWord {
    arity: usize,
    letters: Vec<i32>,
}

impl BraidWord {
    pub fn new(arity: usize, letters: Vec<i32>) -> Result<BraidWord, BraidError> {
        for &l in &letters {
            if l == 0 || l.unsigned_abs() as usize >= arity.max(1) {
                return Err(BraidError::IndexOutOfRange(l, arity));
            }
        }
        Ok(BraidWord { arity, letters })
    }

    pub fn identity(arity: usize) -> BraidWord {
        BraidWord { arity, letters: vec![] }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn inverse(&self) -> BraidWord {
        BraidWord {
            arity: self.arity,
            letters: self.letters.iter().rev().map(|l| -l).collect(),
        }
    }

    /// The sphere relation word Q_1 ... Q_{r-2} Q_{r-1}^2 Q_{r-2} ... Q_1.
    pub fn sphere_relation(arity: usize) -> BraidWord {
        let r = arity as i32;
        let mut letters: Vec<i32> = (1..r).collect();
        letters.extend((1..r).rev());
        BraidWord { arity, letters }
    }
}

/// One generator move on a matrix tuple.
pub fn braid_act(letter: i32, t: &RepTuple) -> Result<RepTuple, BraidError> {
    let r = t.arity();
    let i = letter.unsigned_abs() as usize;
    if letter == 0 || i >= r {
        return Err(BraidError::IndexOutOfRange(letter, r));
    }
    let idx = i - 1;
    let mut mats: Vec<Matrix> = t.mats().to_vec();
    let a = mats[idx].clone();
    let b = mats[idx + 1].clone();
    if letter > 0 {
        mats[idx] = a.mul(&b).mul(&a.inverse().expect("invertible"));
        mats[idx + 1] = a;
    } else {
        mats[idx] = b.clone();
        mats[idx + 1] = b.inverse().expect("invertible").mul(&a).mul(&b);
    }
    let out = RepTuple::new(t.field(), mats).expect("braid moves preserve invertibility");
    debug_assert_eq!(out.product(), t.product());
    Ok(out)
}

/// Apply a braid word letter by letter.
pub fn braid_word_act(w: &BraidWord, t: &RepTuple) -> Result<RepTuple, BraidError> {
    if w.arity() != t.arity() {
        return Err(BraidError::IndexOutOfRange(0, t.arity()));
    }
    let mut cur = t.clone();
    for &l in w.letters() {
        cur = braid_act(l, &cur)?;
    }
    Ok(cur)
}

/// Sum of slot commutant dimensions minus (r-2) n^2; the tuple product must
/// be the identity. Linear rigidity is the value 2.
pub fn index_of_rigidity(t: &RepTuple) -> Result<i64, BraidError> {
    if !t.product().is_identity() {
        return Err(BraidError::ProductNotIdentity);
    }
    let n = t.dim() as i64;
    let r = t.arity() as i64;
    let total: i64 = t.mats().iter().map(|m| m.commutant_dim() as i64).sum();
    Ok(total - (r - 2) * n * n)
}

/// The tuple closed up with the inverse of its product, making the index of
/// rigidity applicable; the augmentation the pipelines perform explicitly.
pub fn close_with_inverse_product(t: &RepTuple) -> RepTuple {
    let mut mats = t.mats().to_vec();
    mats.push(t.product().inverse().expect("product of invertibles"));
    RepTuple::new(t.field(), mats).expect("augmented tuple stays invertible")
}
