//! Friedkin–Johnsen polarization index.

use alloc::vec::Vec;

use super::SymmetricWeightedGraph;
use crate::error::{Error, Result};
use crate::opinion::OpinionVector;
use crate::solver::{conjugate_gradient, dot};

/// Relative residual the equilibrium solve must reach.
pub const FJ_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FjOutcome {
    /// Mean squared equilibrium opinion, in `[0, 1]`.
    pub index: f64,
    /// `||z||²` without the `1/n` normalization.
    pub unnormalized: f64,
    /// Equilibrium opinions in [`SymmetricWeightedGraph::ids`] order.
    pub equilibrium: Vec<f64>,
    pub cg_iterations: usize,
    pub cg_residual: f64,
}

/// Solves `(I + L) z = s` and returns `||z||² / n`.
pub fn fj_polarization(sym: &SymmetricWeightedGraph, s: &OpinionVector) -> Result<FjOutcome> {
    let n = sym.len();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if s.len() != n {
        return Err(Error::OpinionLengthMismatch { expected: n, found: s.len() });
    }
    let rhs = sym
        .ids()
        .iter()
        .map(|id| s.get(*id).ok_or(Error::OpinionLengthMismatch { expected: n, found: s.len() }))
        .collect::<Result<Vec<f64>>>()?;

    let apply = |v: &[f64], out: &mut [f64]| {
        sym.laplacian_apply(v, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o += vi;
        }
    };
    let sol = conjugate_gradient(apply, &rhs, FJ_TOLERANCE, 10 * n)?;
    let unnormalized = dot(&sol.x, &sol.x);
    Ok(FjOutcome {
        index: unnormalized / n as f64,
        unnormalized,
        equilibrium: sol.x,
        cg_iterations: sol.iterations,
        cg_residual: sol.relative_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::UserId;

    fn opinions(values: &[(u64, f64)]) -> OpinionVector {
        OpinionVector(values.iter().map(|(id, v)| (UserId(*id), *v)).collect())
    }

    #[test]
    fn edgeless_is_identity() {
        let sym = SymmetricWeightedGraph::from_pairs([UserId(1), UserId(2), UserId(3)], []);
        let out = fj_polarization(&sym, &opinions(&[(1, 1.0), (2, -1.0), (3, 1.0)])).unwrap();
        assert_eq!(out.index, 1.0);
        assert_eq!(out.equilibrium, alloc::vec![1.0, -1.0, 1.0]);
    }

    #[test]
    fn zero_opinions_give_zero() {
        let sym = SymmetricWeightedGraph::from_pairs([], [(UserId(1), UserId(2), 1.0)]);
        assert_eq!(fj_polarization(&sym, &opinions(&[(1, 0.0), (2, 0.0)])).unwrap().index, 0.0);
    }

    #[test]
    fn two_nodes_one_edge() {
        // (I+L) = [[2,-1],[-1,2]], s = (1,-1) -> z = (1/3, -1/3)
        let sym = SymmetricWeightedGraph::from_pairs([], [(UserId(1), UserId(2), 1.0)]);
        let out = fj_polarization(&sym, &opinions(&[(1, 1.0), (2, -1.0)])).unwrap();
        assert!((out.equilibrium[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((out.equilibrium[1] + 1.0 / 3.0).abs() < 1e-12);
        assert!((out.index - 1.0 / 9.0).abs() < 1e-12);
        assert!(out.cg_residual <= FJ_TOLERANCE);
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        let empty = SymmetricWeightedGraph::from_pairs([], []);
        assert_eq!(fj_polarization(&empty, &OpinionVector::default()), Err(Error::EmptyGraph));
        let sym = SymmetricWeightedGraph::from_pairs([UserId(1), UserId(2)], []);
        assert!(matches!(
            fj_polarization(&sym, &opinions(&[(1, 1.0)])),
            Err(Error::OpinionLengthMismatch { expected: 2, found: 1 })
        ));
        assert!(matches!(
            fj_polarization(&sym, &opinions(&[(1, 1.0), (3, 1.0)])),
            Err(Error::OpinionLengthMismatch { .. })
        ));
    }
}
