//! The convolution functors on tuples of invertible matrices.
//!
//! `c_lambda` builds the big rn-dimensional tuple: output slot i is the
//! identity block matrix whose i-th block row is
//!
//! ```text
//!   (lambda(X_1 - 1), ..., lambda(X_{i-1} - 1),  lambda X_i,  X_{i+1} - 1, ..., X_r - 1)
//! ```
//!
//! This orientation is the one compatible with composing products left to
//! right: the staircase subspace L below telescopes under every block row
//! exactly when its parameter lies in Ker(lambda T_1 T_2 ... T_r - 1), with
//! the product taken in index order.
//!
//! `mc_lambda` quotients the big tuple by the canonical invariant subspaces
//! K (the per-slot fixed blocks) and L (for lambda != 1, the staircase
//! u -> (T_2...T_r u, T_3...T_r u, ..., T_r u, u) over
//! Ker(lambda T_1...T_r - 1); for lambda = 1, the joint fixed space), using
//! the complement spanned by the non-pivot coordinates of the echelon basis
//! of K + L, so outputs are deterministic and hashable.

use crate::field::FieldElement;
use crate::matrix::{Matrix, Subspace, Vector};
use crate::tuple::RepTuple;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConvolutionError {
    #[error("lambda must be nonzero")]
    ZeroLambda,
    #[error("coalescence needs arity at least 2")]
    ArityTooSmall,
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
}

/// Full record of one middle-convolution computation.
#[derive(Clone)]
pub struct ConvolutionResult {
    /// The rn-dimensional convolution tuple.
    pub big: RepTuple,
    pub k_space: Subspace,
    pub l_space: Subspace,
    /// The quotient tuple on the canonical complement of K + L.
    pub quotient: RepTuple,
    /// Quotient coordinates of a big vector; projection * section = id.
    pub projection: Matrix,
    /// The canonical complement embedding.
    pub section: Matrix,
}

impl ConvolutionResult {
    pub fn dim(&self) -> usize {
        self.quotient.dim()
    }
}

/// The big convolution tuple of dimension rn.
pub fn c_lambda(t: &RepTuple, lambda: &FieldElement) -> Result<RepTuple, ConvolutionError> {
    if lambda.is_zero() {
        return Err(ConvolutionError::ZeroLambda);
    }
    let n = t.dim();
    let r = t.arity();
    let f = t.field().clone();
    let id = Matrix::identity(&f, n);
    let mut out = vec![];
    for i in 0..r {
        let mut big = Matrix::identity(&f, r * n);
        for j in 0..r {
            let block = if j < i {
                t.mat(j).sub(&id).scale(lambda)
            } else if j == i {
                t.mat(i).scale(lambda)
            } else {
                t.mat(j).sub(&id)
            };
            for a in 0..n {
                for b in 0..n {
                    big.set(i * n + a, j * n + b, block.get(a, b).clone());
                }
            }
        }
        out.push(big);
    }
    RepTuple::new(&f, out).map_err(|e| ConvolutionError::HypothesisViolated(e.to_string()))
}

/// Direct sum of the per-slot fixed spaces Ker(T_j - 1), each embedded in
/// its own block of the rn-dimensional space.
pub fn k_subspace(t: &RepTuple) -> Subspace {
    let n = t.dim();
    let r = t.arity();
    let f = t.field().clone();
    let id = Matrix::identity(&f, n);
    let mut vecs: Vec<Vector> = vec![];
    for j in 0..r {
        let ker = t.mat(j).sub(&id).kernel();
        for c in 0..ker.dim() {
            let small = ker.basis_vector(c);
            let mut big = vec![f.zero(); r * n];
            big[j * n..(j + 1) * n].clone_from_slice(&small);
            vecs.push(big);
        }
    }
    Subspace::from_vectors(&f, r * n, vecs)
}

/// For lambda != 1: the staircase image of Ker(lambda T_1...T_r - 1),
/// u -> (T_2...T_r u, T_3...T_r u, ..., T_r u, u). For lambda = 1: the
/// joint fixed space of the big tuple.
pub fn l_subspace(t: &RepTuple, lambda: &FieldElement) -> Result<Subspace, ConvolutionError> {
    if lambda.is_zero() {
        return Err(ConvolutionError::ZeroLambda);
    }
    let n = t.dim();
    let r = t.arity();
    let f = t.field().clone();
    if lambda.is_one() {
        let big = c_lambda(t, lambda)?;
        let id = Matrix::identity(&f, r * n);
        let mut stacked = big.mat(0).sub(&id);
        for i in 1..r {
            stacked = stacked.vstack(&big.mat(i).sub(&id));
        }
        return Ok(stacked.kernel());
    }
    let shifted = t.product().scale(lambda).sub(&Matrix::identity(&f, n));
    let ker = shifted.kernel();
    let mut vecs: Vec<Vector> = vec![];
    for c in 0..ker.dim() {
        let u = ker.basis_vector(c);
        let mut big = vec![f.zero(); r * n];
        big[(r - 1) * n..r * n].clone_from_slice(&u);
        let mut cur = u;
        for j in (0..r - 1).rev() {
            cur = t.mat(j + 1).mul_vec(&cur);
            big[j * n..(j + 1) * n].clone_from_slice(&cur);
        }
        vecs.push(big);
    }
    Ok(Subspace::from_vectors(&f, r * n, vecs))
}

/// Middle convolution: the big tuple modulo K + L on the canonical
/// complement. K and L are checked to be invariant under every big matrix.
pub fn mc_lambda(t: &RepTuple, lambda: &FieldElement) -> Result<ConvolutionResult, ConvolutionError> {
    let big = c_lambda(t, lambda)?;
    let k_space = k_subspace(t);
    let l_space = l_subspace(t, lambda)?;
    for m in big.mats() {
        assert!(
            k_space.is_invariant_under(m) && l_space.is_invariant_under(m),
            "K and L must be invariant subspaces of the convolution tuple"
        );
    }
    let f = t.field().clone();
    let ambient = big.dim();
    let modded = k_space.sum(&l_space);
    let comp = modded.complement_rows();
    let d = comp.len();
    // projection: reduce the pivot coordinates against the echelon basis,
    // then read off the complement coordinates
    let mut projection = Matrix::zeros(&f, d, ambient);
    for (out_i, &c) in comp.iter().enumerate() {
        projection.set(out_i, c, f.one());
        for (bcol, &prow) in modded.pivot_rows().iter().enumerate() {
            let val = -modded.basis().get(c, bcol);
            projection.set(out_i, prow, val);
        }
    }
    let mut section = Matrix::zeros(&f, ambient, d);
    for (out_i, &c) in comp.iter().enumerate() {
        section.set(c, out_i, f.one());
    }
    debug_assert!(projection.mul(&section).is_identity());
    let quotient_mats: Vec<Matrix> = big
        .mats()
        .iter()
        .map(|m| projection.mul(m).mul(&section))
        .collect();
    let quotient = RepTuple::new(&f, quotient_mats)
        .expect("quotient of invertible tuple by invariant subspace is invertible");
    Ok(ConvolutionResult {
        big,
        k_space,
        l_space,
        quotient,
        projection,
        section,
    })
}

/// Slot-wise scalar multiplication.
pub fn scalar_mult(t: &RepTuple, lambdas: &[FieldElement]) -> Result<RepTuple, ConvolutionError> {
    assert_eq!(lambdas.len(), t.arity(), "one scalar per slot");
    if lambdas.iter().any(|l| l.is_zero()) {
        return Err(ConvolutionError::ZeroLambda);
    }
    let mats = t
        .mats()
        .iter()
        .zip(lambdas)
        .map(|(m, l)| m.scale(l))
        .collect();
    Ok(RepTuple::new(t.field(), mats).expect("scaled invertibles stay invertible"))
}

/// Merge the last two slots by multiplication, dropping the arity by one.
pub fn coalesce(t: &RepTuple) -> Result<RepTuple, ConvolutionError> {
    let r = t.arity();
    if r < 2 {
        return Err(ConvolutionError::ArityTooSmall);
    }
    let mut mats: Vec<Matrix> = t.mats()[..r - 2].to_vec();
    mats.push(t.mat(r - 2).mul(t.mat(r - 1)));
    Ok(RepTuple::new(t.field(), mats).expect("products of invertibles invertible"))
}

/// Per-slot and product rank identities between a tuple and its middle
/// convolution.
#[derive(Debug, Clone)]
pub struct RankPreservationReport {
    pub slot_input_ranks: Vec<usize>,
    pub slot_output_ranks: Vec<usize>,
    pub slots_preserved: Vec<bool>,
    /// rk(lambda T_1...T_r - 1) on the input side.
    pub product_input_rank: usize,
    /// rk(W_1...W_r - lambda) on the output side.
    pub product_output_rank: usize,
    pub product_preserved: bool,
}

impl RankPreservationReport {
    pub fn all_hold(&self) -> bool {
        self.product_preserved && self.slots_preserved.iter().all(|&b| b)
    }
}

/// Check the rank-preservation identities under the stated hypotheses:
/// either the tuple is irreducible of dimension >= 2, or it is
/// 1-dimensional with at least two nontrivial slots.
pub fn verify_rank_preservation(
    t: &RepTuple,
    lambda: &FieldElement,
) -> Result<RankPreservationReport, ConvolutionError> {
    if lambda.is_zero() {
        return Err(ConvolutionError::ZeroLambda);
    }
    let cond_a = t.dim() >= 2 && t.is_irreducible();
    let cond_b = t.dim() == 1
        && t.mats()
            .iter()
            .filter(|m| !m.is_identity())
            .count()
            >= 2;
    if !cond_a && !cond_b {
        return Err(ConvolutionError::HypothesisViolated(
            "need an irreducible tuple of dim >= 2, or dim 1 with two nontrivial slots".into(),
        ));
    }
    let mc = mc_lambda(t, lambda)?;
    let w = &mc.quotient;
    let slot_input_ranks = t.rank_profile();
    let slot_output_ranks = w.rank_profile();
    let slots_preserved = slot_input_ranks
        .iter()
        .zip(&slot_output_ranks)
        .map(|(a, b)| a == b)
        .collect();
    let f = t.field();
    let product_input_rank = t
        .product()
        .scale(lambda)
        .sub(&Matrix::identity(f, t.dim()))
        .rank();
    let product_output_rank = w
        .product()
        .sub(&Matrix::scalar(f, w.dim(), lambda))
        .rank();
    Ok(RankPreservationReport {
        product_preserved: product_input_rank == product_output_rank,
        slots_preserved,
        slot_input_ranks,
        slot_output_ranks,
        product_input_rank,
        product_output_rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FiniteField;

    fn f7() -> FiniteField {
        FiniteField::prime(7).unwrap()
    }

    /// zeta_3 = 2 over F_7: the canonical cube root of unity.
    fn t0_m2(f: &FiniteField) -> RepTuple {
        let minus = Matrix::scalar(f, 2, &f.from_i64(-1));
        let g1 = Matrix::from_i64(f, &[&[2, 0], &[0, 4]]);
        let g2 = Matrix::from_i64(f, &[&[0, -1], &[1, 0]]);
        let g3 = g2.inverse().unwrap().mul(&g1.inverse().unwrap()).neg();
        RepTuple::new(
            f,
            vec![minus.clone(), minus.clone(), minus.clone(), minus, g1, g2, g3],
        )
        .unwrap()
    }

    /// Independent per-entry oracle for the big convolution matrices.
    fn c_lambda_naive(t: &RepTuple, lambda: &FieldElement, slot: usize) -> Matrix {
        let n = t.dim();
        let r = t.arity();
        let f = t.field().clone();
        Matrix::from_fn(&f, r * n, r * n, |row, col| {
            let (bi, a) = (row / n, row % n);
            let (bj, b) = (col / n, col % n);
            let delta = |x: usize, y: usize| {
                if x == y {
                    f.one()
                } else {
                    f.zero()
                }
            };
            if bi != slot {
                // identity block row
                if bi == bj {
                    delta(a, b)
                } else {
                    f.zero()
                }
            } else if bj < slot {
                lambda * &(t.mat(bj).get(a, b) - &delta(a, b))
            } else if bj == slot {
                lambda * t.mat(slot).get(a, b)
            } else {
                t.mat(bj).get(a, b) - &delta(a, b)
            }
        })
    }

    #[test]
    fn c_lambda_matches_naive_oracle() {
        let f = f7();
        let t = t0_m2(&f);
        let lambda = f.from_i64(-1);
        let big = c_lambda(&t, &lambda).unwrap();
        assert_eq!(big.dim(), 14);
        for i in 0..t.arity() {
            assert_eq!(big.mat(i), &c_lambda_naive(&t, &lambda, i));
        }
        // a second lambda for good measure
        let lambda2 = f.from_u64(3);
        let big2 = c_lambda(&t, &lambda2).unwrap();
        for i in 0..t.arity() {
            assert_eq!(big2.mat(i), &c_lambda_naive(&t, &lambda2, i));
        }
    }

    #[test]
    fn c_lambda_single_slot_degenerates() {
        let f = f7();
        let a = Matrix::from_i64(&f, &[&[2, 1], &[1, 1]]);
        let t = RepTuple::new(&f, vec![a.clone()]).unwrap();
        let lambda = f.from_u64(3);
        let big = c_lambda(&t, &lambda).unwrap();
        assert_eq!(big.mat(0), &a.scale(&lambda));
    }

    #[test]
    fn zero_lambda_rejected() {
        let f = f7();
        let t = t0_m2(&f);
        assert!(matches!(
            c_lambda(&t, &f.zero()),
            Err(ConvolutionError::ZeroLambda)
        ));
    }

    #[test]
    fn k_subspace_examples() {
        let f = f7();
        // no slot of T_0 fixes a vector
        assert_eq!(k_subspace(&t0_m2(&f)).dim(), 0);

        // identity at slot 0 contributes its full block
        let id = Matrix::identity(&f, 2);
        let g2 = Matrix::from_i64(&f, &[&[0, -1], &[1, 0]]);
        let t = RepTuple::new(&f, vec![id, g2.clone()]).unwrap();
        let k = k_subspace(&t);
        assert_eq!(k.dim(), 2);
        assert!(k.contains(&[f.one(), f.zero(), f.zero(), f.zero()]));

        // a transvection contributes exactly its fixed line
        let u = Matrix::from_i64(&f, &[&[1, 1], &[0, 1]]);
        let t = RepTuple::new(&f, vec![u, g2]).unwrap();
        assert_eq!(k_subspace(&t).dim(), 1);
    }

    #[test]
    fn l_subspace_examples() {
        let f = f7();
        let lambda = f.from_i64(-1);
        let t = t0_m2(&f);
        // product is -E_2, so lambda * product = 1 and L is 2-dimensional
        assert_eq!(l_subspace(&t, &lambda).unwrap().dim(), 2);

        // product = 1 and no eigenvalue -1 on it: L = 0
        let a = Matrix::from_i64(&f, &[&[2, 1], &[1, 1]]);
        let t2 = RepTuple::new(&f, vec![a.clone(), a.inverse().unwrap()]).unwrap();
        assert_eq!(l_subspace(&t2, &lambda).unwrap().dim(), 0);
    }

    #[test]
    fn l_subspace_matches_joint_fixed_space() {
        // for lambda != 1 the staircase description must agree with the
        // literal intersection of the fixed spaces of the big tuple
        let f = f7();
        let t = t0_m2(&f);
        for lam in [f.from_i64(-1), f.from_u64(3)] {
            let big = c_lambda(&t, &lam).unwrap();
            let id = Matrix::identity(&f, big.dim());
            let mut stacked = big.mat(0).sub(&id);
            for i in 1..big.arity() {
                stacked = stacked.vstack(&big.mat(i).sub(&id));
            }
            assert_eq!(l_subspace(&t, &lam).unwrap(), stacked.kernel());
        }
    }

    #[test]
    fn mc_dimension_formula_t0() {
        let f = f7();
        let t = t0_m2(&f);
        let mc = mc_lambda(&t, &f.from_i64(-1)).unwrap();
        // 2(2m+3) - 2 = 12 at m = 2
        assert_eq!(mc.dim(), 12);
        assert!(mc.projection.mul(&mc.section).is_identity());
        for (i, q) in mc.quotient.mats().iter().enumerate() {
            assert_eq!(
                q,
                &mc.projection.mul(mc.big.mat(i)).mul(&mc.section),
                "quotient matrix {i} mismatch"
            );
        }
    }

    #[test]
    fn mc_lambda_one_identity_tuple() {
        let f = f7();
        let id = Matrix::identity(&f, 2);
        let t = RepTuple::new(&f, vec![id.clone(), id]).unwrap();
        let mc = mc_lambda(&t, &f.one()).unwrap();
        assert_eq!(mc.dim(), 0);
    }

    #[test]
    fn scalar_mult_examples() {
        let f = f7();
        let t = t0_m2(&f);
        let ones = vec![f.one(); t.arity()];
        assert_eq!(&scalar_mult(&t, &ones).unwrap(), &t);

        let lambdas: Vec<_> = (0..t.arity()).map(|i| f.from_u64(1 + (i as u64 % 5))).collect();
        let inv: Vec<_> = lambdas.iter().map(|l| l.inv().unwrap()).collect();
        let round = scalar_mult(&scalar_mult(&t, &lambdas).unwrap(), &inv).unwrap();
        assert_eq!(&round, &t);

        let mut zeros = ones.clone();
        zeros[0] = f.zero();
        assert!(matches!(
            scalar_mult(&t, &zeros),
            Err(ConvolutionError::ZeroLambda)
        ));
    }

    #[test]
    fn coalesce_examples() {
        let f = f7();
        let a = Matrix::from_i64(&f, &[&[2, 1], &[1, 1]]);
        let t = RepTuple::new(&f, vec![a.clone(), a.inverse().unwrap()]).unwrap();
        let c = coalesce(&t).unwrap();
        assert_eq!(c.arity(), 1);
        assert!(c.mat(0).is_identity());

        let t0 = t0_m2(&f);
        assert_eq!(coalesce(&t0).unwrap().product(), t0.product());

        let single = RepTuple::new(&f, vec![a]).unwrap();
        assert!(matches!(
            coalesce(&single),
            Err(ConvolutionError::ArityTooSmall)
        ));
    }

    #[test]
    fn rank_preservation_examples() {
        let f = f7();
        let lambda = f.from_i64(-1);
        // T_0: every slot rank 2, product identity holds
        let rep = verify_rank_preservation(&t0_m2(&f), &lambda).unwrap();
        assert!(rep.all_hold());
        assert!(rep.slot_input_ranks.iter().all(|&r| r == 2));

        // dim-1 tuple (-1, -1, 1)
        let one = |x: i64| Matrix::from_i64(&f, &[&[x]]);
        let t = RepTuple::new(&f, vec![one(-1), one(-1), one(1)]).unwrap();
        let rep = verify_rank_preservation(&t, &lambda).unwrap();
        assert!(rep.all_hold());

        // reducible 2-dim tuple: hypothesis gate
        let d = Matrix::from_i64(&f, &[&[2, 0], &[0, 4]]);
        let t = RepTuple::new(&f, vec![d.clone(), d]).unwrap();
        assert!(matches!(
            verify_rank_preservation(&t, &lambda),
            Err(ConvolutionError::HypothesisViolated(_))
        ));
    }

    #[test]
    fn quasi_inverse_round_trip_small() {
        let f = f7();
        let g1 = Matrix::from_i64(&f, &[&[2, 0], &[0, 4]]);
        let g2 = Matrix::from_i64(&f, &[&[0, -1], &[1, 0]]);
        let t = RepTuple::new(&f, vec![g1, g2]).unwrap();
        assert!(t.is_irreducible());
        for lam in [f.from_i64(-1), f.from_u64(2)] {
            let there = mc_lambda(&t, &lam).unwrap();
            let back = mc_lambda(&there.quotient, &lam.inv().unwrap()).unwrap();
            assert_eq!(back.dim(), t.dim());
            assert!(
                back.quotient.isomorphism_to(&t).is_some()
                    || t.isomorphism_to(&back.quotient).is_some(),
                "MC_(1/lambda) MC_lambda should be the identity up to isomorphism"
            );
        }
    }
}
