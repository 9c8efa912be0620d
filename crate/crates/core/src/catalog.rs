//! Bundled tables: constructors for the standard small-group families and
//! the full list of groups of order at most 24 (one per isomorphism class),
//! used by the oracle-equivalence suites and available to the CLI.

use crate::field::FiniteField;
use crate::group::SmallGroup;
use crate::matrix::Matrix;

/// C_n by its table.
pub fn cyclic(n: usize) -> SmallGroup {
    let table = (0..n)
        .map(|i| (0..n).map(|j| ((i + j) % n) as u32).collect())
        .collect();
    SmallGroup::from_table(table).expect("cyclic table is a group")
}

/// Direct product of cyclic groups with the given orders.
pub fn abelian(factors: &[usize]) -> SmallGroup {
    assert!(!factors.is_empty());
    let n: usize = factors.iter().product();
    let encode = |coords: &[usize]| -> usize {
        let mut idx = 0;
        for (c, f) in coords.iter().zip(factors) {
            idx = idx * f + c;
        }
        idx
    };
    let decode = |mut idx: usize| -> Vec<usize> {
        let mut out = vec![0; factors.len()];
        for k in (0..factors.len()).rev() {
            out[k] = idx % factors[k];
            idx /= factors[k];
        }
        out
    };
    let table = (0..n)
        .map(|i| {
            let a = decode(i);
            (0..n)
                .map(|j| {
                    let b = decode(j);
                    let sum: Vec<usize> = a
                        .iter()
                        .zip(&b)
                        .zip(factors)
                        .map(|((x, y), f)| (x + y) % f)
                        .collect();
                    encode(&sum) as u32
                })
                .collect()
        })
        .collect();
    SmallGroup::from_table(table).expect("abelian table is a group")
}

/// Split extension C_n x| C_m with the generator of C_m acting by a -> a^s;
/// requires s^m = 1 (mod n) and gcd(s, n) = 1.
pub fn semidirect_cyclic(n: usize, m: usize, s: usize) -> SmallGroup {
    // sanity on the action
    let mut pw = 1usize;
    for _ in 0..m {
        pw = pw * s % n;
    }
    assert_eq!(pw % n, 1 % n, "s^m must be 1 mod n");
    let order = n * m;
    let encode = |i: usize, j: usize| (i + n * j) as u32;
    let mut spow = vec![1usize; m];
    for j in 1..m {
        spow[j] = spow[j - 1] * s % n;
    }
    let table = (0..order)
        .map(|x| {
            let (i1, j1) = (x % n, x / n);
            (0..order)
                .map(|y| {
                    let (i2, j2) = (y % n, y / n);
                    // (a^i1 b^j1)(a^i2 b^j2) = a^(i1 + i2 s^j1) b^(j1+j2)
                    encode((i1 + i2 * spow[j1]) % n, (j1 + j2) % m)
                })
                .collect()
        })
        .collect();
    SmallGroup::from_table(table).expect("semidirect table is a group")
}

/// Dihedral group of order 2n (n >= 3 gives the nonabelian ones).
pub fn dihedral(n: usize) -> SmallGroup {
    semidirect_cyclic(n, 2, n - 1)
}

/// Dicyclic group of order 4n: <a, b | a^{2n} = 1, b^2 = a^n, bab^-1 = a^-1>.
pub fn dicyclic(n: usize) -> SmallGroup {
    let m = 2 * n;
    let order = 4 * n;
    let encode = |i: usize, j: usize| (i + m * j) as u32;
    let table = (0..order)
        .map(|x| {
            let (i1, j1) = (x % m, x / m);
            (0..order)
                .map(|y| {
                    let (i2, j2) = (y % m, y / m);
                    if j1 == 0 {
                        encode((i1 + i2) % m, j2)
                    } else if j2 == 0 {
                        // a^i1 b a^i2 = a^(i1-i2) b
                        encode((i1 + m - i2) % m, 1)
                    } else {
                        // a^i1 b a^i2 b = a^(i1-i2) b^2 = a^(i1-i2+n)
                        encode((i1 + m - i2 + n) % m, 0)
                    }
                })
                .collect()
        })
        .collect();
    SmallGroup::from_table(table).expect("dicyclic table is a group")
}

/// Semidirect product (by C_2) of an arbitrary table group with an explicit
/// involutive automorphism; the map is verified to be one.
pub fn semidirect_by_c2(base: &SmallGroup, phi: impl Fn(u32) -> u32) -> SmallGroup {
    let n = base.order();
    // verify: bijective involutive homomorphism
    let mut seen = vec![false; n];
    for x in 0..n as u32 {
        let y = phi(x);
        assert!(!seen[y as usize], "automorphism must be injective");
        seen[y as usize] = true;
        assert_eq!(phi(y), x, "automorphism must be an involution");
    }
    for a in 0..n as u32 {
        for b in 0..n as u32 {
            assert_eq!(
                phi(base.mul(a, b)),
                base.mul(phi(a), phi(b)),
                "map must be a homomorphism"
            );
        }
    }
    let order = 2 * n;
    let encode = |g: u32, e: usize| g as usize + n * e;
    let table = (0..order)
        .map(|x| {
            let (g1, e1) = ((x % n) as u32, x / n);
            (0..order)
                .map(|y| {
                    let (g2, e2) = ((y % n) as u32, y / n);
                    let acted = if e1 == 1 { phi(g2) } else { g2 };
                    encode(base.mul(g1, acted), (e1 + e2) % 2) as u32
                })
                .collect()
        })
        .collect();
    SmallGroup::from_table(table).expect("semidirect-by-C2 table is a group")
}

/// Direct product of two table groups.
pub fn direct_product(a: &SmallGroup, b: &SmallGroup) -> SmallGroup {
    let (na, nb) = (a.order(), b.order());
    let order = na * nb;
    let encode = |x: u32, y: u32| (x as usize + na * y as usize) as u32;
    let table = (0..order)
        .map(|p| {
            let (x1, y1) = ((p % na) as u32, (p / na) as u32);
            (0..order)
                .map(|q| {
                    let (x2, y2) = ((q % na) as u32, (q / na) as u32);
                    encode(a.mul(x1, x2), b.mul(y1, y2))
                })
                .collect()
        })
        .collect();
    SmallGroup::from_table(table).expect("direct product table is a group")
}

/// Symmetric group S_n as a permutation group (n <= 5 is plenty here).
pub fn symmetric(n: usize) -> SmallGroup {
    assert!(n >= 1);
    if n == 1 {
        return cyclic(1);
    }
    let mut gens = vec![];
    // adjacent transposition and an n-cycle generate S_n
    let mut t: Vec<usize> = (0..n).collect();
    t.swap(0, 1);
    gens.push(t);
    if n > 2 {
        let cycle: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
        gens.push(cycle);
    }
    SmallGroup::from_permutations(&gens).expect("S_n generators")
}

/// Alternating group A_n.
pub fn alternating(n: usize) -> SmallGroup {
    assert!(n >= 3);
    let three: Vec<usize> = {
        let mut p: Vec<usize> = (0..n).collect();
        p[0] = 1;
        p[1] = 2;
        p[2] = 0;
        p
    };
    let other: Vec<usize> = if n % 2 == 1 {
        (0..n).map(|i| (i + 1) % n).collect()
    } else {
        let mut p: Vec<usize> = (0..n).collect();
        // (1 2 ... n-1) fixing 0, an even cycle complement
        for i in 1..n {
            p[i] = if i + 1 < n { i + 1 } else { 1 };
        }
        p
    };
    SmallGroup::from_permutations(&[three, other]).expect("A_n generators")
}

/// Table of a matrix group given by generators, via hash closure.
pub fn matrix_group_table(gens: &[Matrix], cap: usize) -> SmallGroup {
    let elems = crate::group::matrix_group_closure(gens, cap).expect("closure within cap");
    let index: std::collections::HashMap<&Matrix, u32> = elems
        .iter()
        .enumerate()
        .map(|(i, m)| (m, i as u32))
        .collect();
    let n = elems.len();
    let table = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| index[&elems[i].mul(&elems[j])])
                .collect()
        })
        .collect();
    SmallGroup::from_table(table).expect("matrix closure is a group")
}

/// SL(2, 3), order 24, from its two standard generators over F_3.
pub fn sl_2_3() -> SmallGroup {
    let f = FiniteField::prime(3).unwrap();
    let a = Matrix::from_i64(&f, &[&[1, 1], &[0, 1]]);
    let b = Matrix::from_i64(&f, &[&[0, -1], &[1, 0]]);
    matrix_group_table(&[a, b], 100)
}

/// The central product D4 o C4 (the 16-element Pauli-type group), realized
/// inside GL_2(F_5) where 2 is a square root of -1.
pub fn pauli_16() -> SmallGroup {
    let f = FiniteField::prime(5).unwrap();
    let x = Matrix::from_i64(&f, &[&[0, 1], &[1, 0]]);
    let z = Matrix::from_i64(&f, &[&[1, 0], &[0, -1]]);
    let s = Matrix::scalar(&f, 2, &f.from_u64(2));
    matrix_group_table(&[x, z, s], 100)
}

/// A named group in the bundle.
pub struct GroupSpec {
    pub name: &'static str,
    pub group: SmallGroup,
}

fn spec(name: &'static str, group: SmallGroup) -> GroupSpec {
    GroupSpec { name, group }
}

/// One group per isomorphism class for every order up to 24 (71 groups).
pub fn groups_up_to_24() -> Vec<GroupSpec> {
    let mut out = vec![
        spec("C1", cyclic(1)),
        spec("C2", cyclic(2)),
        spec("C3", cyclic(3)),
        spec("C4", cyclic(4)),
        spec("C2xC2", abelian(&[2, 2])),
        spec("C5", cyclic(5)),
        spec("C6", cyclic(6)),
        spec("S3", symmetric(3)),
        spec("C7", cyclic(7)),
        spec("C8", cyclic(8)),
        spec("C4xC2", abelian(&[4, 2])),
        spec("C2xC2xC2", abelian(&[2, 2, 2])),
        spec("D4", dihedral(4)),
        spec("Q8", dicyclic(2)),
        spec("C9", cyclic(9)),
        spec("C3xC3", abelian(&[3, 3])),
        spec("C10", cyclic(10)),
        spec("D5", dihedral(5)),
        spec("C11", cyclic(11)),
        spec("C12", cyclic(12)),
        spec("C6xC2", abelian(&[6, 2])),
        spec("D6", dihedral(6)),
        spec("A4", alternating(4)),
        spec("Dic3", dicyclic(3)),
        spec("C13", cyclic(13)),
        spec("C14", cyclic(14)),
        spec("D7", dihedral(7)),
        spec("C15", cyclic(15)),
    ];
    // order 16: 5 abelian + 9 nonabelian
    out.push(spec("C16", cyclic(16)));
    out.push(spec("C8xC2", abelian(&[8, 2])));
    out.push(spec("C4xC4", abelian(&[4, 4])));
    out.push(spec("C4xC2xC2", abelian(&[4, 2, 2])));
    out.push(spec("C2^4", abelian(&[2, 2, 2, 2])));
    out.push(spec("D8", dihedral(8)));
    out.push(spec("SD16", semidirect_cyclic(8, 2, 3)));
    out.push(spec("M16", semidirect_cyclic(8, 2, 5)));
    out.push(spec("Q16", dicyclic(4)));
    out.push(spec("D4xC2", direct_product(&dihedral(4), &cyclic(2))));
    out.push(spec("Q8xC2", direct_product(&dicyclic(2), &cyclic(2))));
    out.push(spec("C4:C4", semidirect_cyclic(4, 4, 3)));
    out.push(spec("(C4xC2):C2", {
        // c a c = ab, c b c = b on C4 x C2, in the index encoding of `abelian`
        let base = abelian(&[4, 2]);
        const MAP: [u32; 8] = [0, 1, 3, 2, 4, 5, 7, 6];
        semidirect_by_c2(&base, |x| MAP[x as usize])
    }));
    out.push(spec("D4oC4", pauli_16()));
    out.push(spec("C17", cyclic(17)));
    // order 18
    out.push(spec("C18", cyclic(18)));
    out.push(spec("C6xC3", abelian(&[6, 3])));
    out.push(spec("D9", dihedral(9)));
    out.push(spec("S3xC3", direct_product(&symmetric(3), &cyclic(3))));
    out.push(spec("(C3xC3):C2", {
        let base = abelian(&[3, 3]);
        let inv_table: Vec<u32> = (0..9).map(|x: u32| {
            let (i, j) = (x % 3, x / 3);
            (3 - i) % 3 + 3 * ((3 - j) % 3)
        }).collect();
        semidirect_by_c2(&base, move |x| inv_table[x as usize])
    }));
    out.push(spec("C19", cyclic(19)));
    // order 20
    out.push(spec("C20", cyclic(20)));
    out.push(spec("C10xC2", abelian(&[10, 2])));
    out.push(spec("D10", dihedral(10)));
    out.push(spec("Dic5", dicyclic(5)));
    out.push(spec("F20", semidirect_cyclic(5, 4, 2)));
    // order 21
    out.push(spec("C21", cyclic(21)));
    out.push(spec("C7:C3", semidirect_cyclic(7, 3, 2)));
    // order 22
    out.push(spec("C22", cyclic(22)));
    out.push(spec("D11", dihedral(11)));
    out.push(spec("C23", cyclic(23)));
    // order 24: 3 abelian + 12 nonabelian
    out.push(spec("C24", cyclic(24)));
    out.push(spec("C12xC2", abelian(&[12, 2])));
    out.push(spec("C6xC2xC2", abelian(&[6, 2, 2])));
    out.push(spec("S4", symmetric(4)));
    out.push(spec("A4xC2", direct_product(&alternating(4), &cyclic(2))));
    out.push(spec("SL(2,3)", sl_2_3()));
    out.push(spec("D12", dihedral(12)));
    out.push(spec("Dic6", dicyclic(6)));
    out.push(spec("C3:C8", semidirect_cyclic(3, 8, 2)));
    out.push(spec("D4xC3", direct_product(&dihedral(4), &cyclic(3))));
    out.push(spec("Q8xC3", direct_product(&dicyclic(2), &cyclic(3))));
    out.push(spec("S3xC4", direct_product(&symmetric(3), &cyclic(4))));
    out.push(spec("Dic3xC2", direct_product(&dicyclic(3), &cyclic(2))));
    out.push(spec("S3xC2xC2", direct_product(&symmetric(3), &abelian(&[2, 2]))));
    out.push(spec("Dic3:C2", {
        // a fixed, b -> a^n b on Dic3 (n = 3), encoded as i + 6j
        let base = dicyclic(3);
        semidirect_by_c2(&base, |x| {
            let (i, j) = (x % 6, x / 6);
            if j == 0 {
                x
            } else {
                (i + 3) % 6 + 6
            }
        })
    }));
    out
}
