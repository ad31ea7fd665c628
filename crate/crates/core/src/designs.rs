//! Cyclic block designs and exhaustive t-design verification.
//!
//! The scheme is built on the cyclic 1-design with point set [0, n-1] and
//! blocks B_i = {i, i+1, ..., i+t-1} mod n, a 1-(n, t, t) design that is
//! deliberately not a 2-design. The verifier here doubles as the test oracle
//! for those claims.

use itertools::Itertools;
use num::{BigRational, FromPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binomial::binomial;

/// Subset-count ceiling for exhaustive verification.
const MAX_SUBSETS: u128 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DesignError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("block {index} has {got} points, expected block size {expected}")]
    BlockSizeMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("block {index} contains point {point} outside [0, {max}]")]
    PointOutOfRange {
        index: usize,
        point: u32,
        max: u32,
    },
    #[error("block {index} contains duplicate point {point}")]
    DuplicatePoint { index: usize, point: u32 },
    #[error("refusing exhaustive check: C({n}, {t}) = {count} exceeds {MAX_SUBSETS}")]
    TooManySubsets { n: u32, t: u32, count: u128 },
}

/// Point set [0, n-1] plus an ordered list of equal-size blocks.
///
/// Blocks are stored sorted ascending; the block index is positional, which
/// is what the shuffle math keys on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Design {
    n_points: u32,
    block_size: u32,
    blocks: Vec<Vec<u32>>,
}

impl Design {
    pub fn new(n_points: u32, blocks: Vec<Vec<u32>>) -> Result<Self, DesignError> {
        if n_points == 0 || blocks.is_empty() {
            return Err(DesignError::InvalidParameters(
                "need at least one point and one block".into(),
            ));
        }
        let block_size = blocks[0].len();
        if block_size == 0 {
            return Err(DesignError::InvalidParameters("blocks must be nonempty".into()));
        }
        let mut sorted = Vec::with_capacity(blocks.len());
        for (index, block) in blocks.into_iter().enumerate() {
            if block.len() != block_size {
                return Err(DesignError::BlockSizeMismatch {
                    index,
                    got: block.len(),
                    expected: block_size,
                });
            }
            let mut b = block;
            b.sort_unstable();
            for pair in b.windows(2) {
                if pair[0] == pair[1] {
                    return Err(DesignError::DuplicatePoint {
                        index,
                        point: pair[0],
                    });
                }
            }
            if let Some(&p) = b.last() {
                if p >= n_points {
                    return Err(DesignError::PointOutOfRange {
                        index,
                        point: p,
                        max: n_points - 1,
                    });
                }
            }
            sorted.push(b);
        }
        Ok(Design {
            n_points,
            block_size: block_size as u32,
            blocks: sorted,
        })
    }

    pub fn n_points(&self) -> u32 {
        self.n_points
    }

    pub fn block_size(&self) -> u32 {
        self.block_size
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, index: usize) -> &[u32] {
        &self.blocks[index]
    }

    pub fn blocks(&self) -> &[Vec<u32>] {
        &self.blocks
    }

    pub fn block_contains(&self, index: usize, point: u32) -> bool {
        self.blocks[index].binary_search(&point).is_ok()
    }
}

/// Outcome of an exhaustive t-design check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignVerdict {
    pub is_t_design: bool,
    pub t: u32,
    /// The common coverage count when the check passes.
    pub lambda: Option<u64>,
    /// Two t-subsets with different coverage counts when it fails.
    pub counterexample: Option<CoverageWitness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageWitness {
    pub subset_a: Vec<u32>,
    pub count_a: u64,
    pub subset_b: Vec<u32>,
    pub count_b: u64,
}

/// The scheme's block family: block i = {i, i+1, ..., i+t-1} mod n.
pub fn cyclic_blocks(n: u32, t: u32) -> Result<Design, DesignError> {
    if t < 1 || t >= n {
        return Err(DesignError::InvalidParameters(format!(
            "cyclic blocks need 1 <= t < n, got n = {n}, t = {t}"
        )));
    }
    let blocks = (0..n)
        .map(|i| (0..t).map(|j| (i + j) % n).collect())
        .collect();
    Design::new(n, blocks)
}

/// Counts, for every t-subset of points, the blocks containing it.
///
/// Verdict is a t-design iff all counts agree; otherwise the first subset
/// pair with differing counts is returned as a witness. Refuses point sets
/// where C(n, t) exceeds 10^7.
pub fn verify_t_design(design: &Design, t: u32) -> Result<DesignVerdict, DesignError> {
    if t < 1 || t > design.block_size {
        return Err(DesignError::InvalidParameters(format!(
            "check needs 1 <= t <= block size, got t = {t}, block size = {}",
            design.block_size
        )));
    }
    let count: u128 = binomial(design.n_points as u64, t as u64)
        .try_into()
        .unwrap_or(u128::MAX);
    if count > MAX_SUBSETS {
        return Err(DesignError::TooManySubsets {
            n: design.n_points,
            t,
            count,
        });
    }
    let mut first: Option<(Vec<u32>, u64)> = None;
    for subset in (0..design.n_points).combinations(t as usize) {
        let coverage = design
            .blocks
            .iter()
            .filter(|block| subset.iter().all(|p| block.binary_search(p).is_ok()))
            .count() as u64;
        match &first {
            None => first = Some((subset, coverage)),
            Some((reference, lambda)) if coverage != *lambda => {
                return Ok(DesignVerdict {
                    is_t_design: false,
                    t,
                    lambda: None,
                    counterexample: Some(CoverageWitness {
                        subset_a: reference.clone(),
                        count_a: *lambda,
                        subset_b: subset,
                        count_b: coverage,
                    }),
                });
            }
            Some(_) => {}
        }
    }
    let lambda = first.map(|(_, l)| l);
    Ok(DesignVerdict {
        is_t_design: true,
        t,
        lambda,
        counterexample: None,
    })
}

/// lambda' of the derived t'-design: lambda * C(n-t', t-t') / C(k-t', t-t').
pub fn derived_lambda(n: u64, k: u64, t: u64, lambda: u64, t_prime: u64) -> BigRational {
    let num = binomial(n - t_prime, t - t_prime);
    let den = binomial(k - t_prime, t - t_prime);
    BigRational::from_u64(lambda).unwrap() * BigRational::new(num.into(), den.into())
}

/// Block count of a t-(n, k, lambda) design: lambda * C(n, t) / C(k, t).
pub fn block_count(n: u64, k: u64, t: u64, lambda: u64) -> BigRational {
    BigRational::from_u64(lambda).unwrap()
        * BigRational::new(binomial(n, t).into(), binomial(k, t).into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::ToPrimitive;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn cyclic_6_4_matches_worked_example() {
        let d = cyclic_blocks(6, 4).unwrap();
        let expected: Vec<Vec<u32>> = vec![
            vec![0, 1, 2, 3],
            vec![1, 2, 3, 4],
            vec![2, 3, 4, 5],
            vec![0, 3, 4, 5],
            vec![0, 1, 4, 5],
            vec![0, 1, 2, 5],
        ];
        assert_eq!(d.blocks(), expected.as_slice());
    }

    #[test]
    fn cyclic_5_3_follows_the_congruence_formula() {
        // The fifth block is {0, 1, 4}, forced by c_j = (i-1+j) mod n.
        let d = cyclic_blocks(5, 3).unwrap();
        let expected: Vec<Vec<u32>> = vec![
            vec![0, 1, 2],
            vec![1, 2, 3],
            vec![2, 3, 4],
            vec![0, 3, 4],
            vec![0, 1, 4],
        ];
        assert_eq!(d.blocks(), expected.as_slice());
    }

    #[test]
    fn cyclic_rejects_t_not_below_n() {
        assert!(matches!(
            cyclic_blocks(3, 3),
            Err(DesignError::InvalidParameters(_))
        ));
        assert!(matches!(
            cyclic_blocks(4, 0),
            Err(DesignError::InvalidParameters(_))
        ));
    }

    #[test]
    fn cyclic_6_4_is_a_1_design_with_lambda_4() {
        let d = cyclic_blocks(6, 4).unwrap();
        let v = verify_t_design(&d, 1).unwrap();
        assert!(v.is_t_design);
        assert_eq!(v.lambda, Some(4));
        assert!(v.counterexample.is_none());
    }

    #[test]
    fn cyclic_5_3_is_not_a_2_design() {
        let d = cyclic_blocks(5, 3).unwrap();
        let v = verify_t_design(&d, 2).unwrap();
        assert!(!v.is_t_design);
        let w = v.counterexample.unwrap();
        assert_eq!(w.subset_a, vec![0, 1]);
        assert_eq!(w.count_a, 2);
        assert_eq!(w.subset_b, vec![0, 2]);
        assert_eq!(w.count_b, 1);
    }

    #[test]
    fn single_block_is_a_1_design() {
        let d = Design::new(2, vec![vec![0, 1]]).unwrap();
        let v = verify_t_design(&d, 1).unwrap();
        assert!(v.is_t_design);
        assert_eq!(v.lambda, Some(1));
    }

    #[test]
    fn verifier_guards_against_subset_explosion() {
        let d = cyclic_blocks(50, 34).unwrap();
        assert!(matches!(
            verify_t_design(&d, 10),
            Err(DesignError::TooManySubsets { .. })
        ));
    }

    #[test]
    fn derived_lambda_examples() {
        // degenerate t' = t
        assert_eq!(derived_lambda(6, 4, 1, 4, 1), rat(4, 1));
        // Fano plane replication number
        assert_eq!(derived_lambda(7, 3, 2, 1, 1), rat(3, 1));
    }

    #[test]
    fn block_count_examples() {
        assert_eq!(block_count(6, 4, 1, 4), rat(6, 1));
        assert_eq!(block_count(7, 3, 2, 1), rat(7, 1));
        assert_eq!(block_count(9, 9, 4, 1), rat(1, 1));
    }

    #[test]
    fn cyclic_family_is_always_a_1_n_t_t_design() {
        for n in 2..=16u32 {
            for t in 1..n {
                let d = cyclic_blocks(n, t).unwrap();
                let v = verify_t_design(&d, 1).unwrap();
                assert!(v.is_t_design, "n={n} t={t}");
                assert_eq!(v.lambda, Some(t as u64), "n={n} t={t}");
                assert_eq!(
                    block_count(n as u64, t as u64, 1, t as u64).to_integer().to_u64(),
                    Some(n as u64)
                );
            }
        }
    }

    #[test]
    fn closed_form_membership_matches_set_construction() {
        for n in 2..=16u32 {
            for t in 1..n {
                let d = cyclic_blocks(n, t).unwrap();
                for j in 0..n {
                    for i in 0..n {
                        let closed = (i + n - j) % n < t;
                        assert_eq!(d.block_contains(j as usize, i), closed, "n={n} t={t} i={i} j={j}");
                    }
                }
            }
        }
    }

    #[test]
    fn t_design_verdict_is_monotone_on_the_fano_plane() {
        let fano = Design::new(
            7,
            vec![
                vec![0, 1, 2],
                vec![0, 3, 4],
                vec![0, 5, 6],
                vec![1, 3, 5],
                vec![1, 4, 6],
                vec![2, 3, 6],
                vec![2, 4, 5],
            ],
        )
        .unwrap();
        let v2 = verify_t_design(&fano, 2).unwrap();
        assert!(v2.is_t_design);
        assert_eq!(v2.lambda, Some(1));
        let v1 = verify_t_design(&fano, 1).unwrap();
        assert!(v1.is_t_design);
        let expected = derived_lambda(7, 3, 2, 1, 1);
        assert_eq!(
            BigRational::from_u64(v1.lambda.unwrap()).unwrap(),
            expected
        );
    }

    #[test]
    fn design_validation_catches_malformed_blocks() {
        assert!(matches!(
            Design::new(4, vec![vec![0, 1], vec![2]]),
            Err(DesignError::BlockSizeMismatch { .. })
        ));
        assert!(matches!(
            Design::new(4, vec![vec![0, 4]]),
            Err(DesignError::PointOutOfRange { .. })
        ));
        assert!(matches!(
            Design::new(4, vec![vec![1, 1]]),
            Err(DesignError::DuplicatePoint { .. })
        ));
    }
}
