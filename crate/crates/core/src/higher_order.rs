//! Connected `(M+1)`-point kink correlators in the dephased regime.
//!
//! After dephasing, and with all kinks more than two sites apart, the only
//! surviving contractions are `⟨b_m a_n⟩ = −2α_{n−m}` with the Gaussian
//! `α_R = ξ̂⁻¹ e^{−π(R/ξ̂)²}`. The connected correlator then collapses to a
//! sum over single cycles through all positions:
//!
//! ```text
//! C = (−1)^M Σ_{perm of 1..M} α_{R_0−R_{i1}} α_{R_{i1}−R_{i2}} ⋯ α_{R_{iM}−R_0}
//! ```

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::protocol::KZScales;

pub const MAX_ORDER: usize = 8;
pub const MIN_GAP: i64 = 3;

/// Branches whose partial product falls below this are dropped.
const UNDERFLOW: f64 = 1e-300;

/// Strictly increasing kink positions `R_0 < R_1 < … < R_M`, pairwise at
/// least three sites apart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KinkPositions {
    positions: Vec<i64>,
}

impl KinkPositions {
    pub fn new(positions: Vec<i64>) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::Precondition(format!("need at least two kink positions, got {}", positions.len())));
        }
        let m = positions.len() - 1;
        if m > MAX_ORDER {
            return Err(Error::CostGuard { m, max: MAX_ORDER });
        }
        for w in positions.windows(2) {
            if w[1] - w[0] < MIN_GAP {
                return Err(Error::Precondition(format!(
                    "positions must increase by at least {MIN_GAP}, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { positions })
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    /// The order `M` (number of positions minus one).
    pub fn order(&self) -> usize {
        self.positions.len() - 1
    }

    /// Mirror image `R_i → R_M − R_{M−i}`.
    pub fn mirrored(&self) -> KinkPositions {
        let last = *self.positions.last().expect("non-empty");
        let positions = self.positions.iter().rev().map(|r| last - r).collect();
        KinkPositions { positions }
    }
}

/// Gaussian excitation part of `α_R`.
pub fn gaussian_alpha(scales: &KZScales, r: f64) -> f64 {
    (-PI * (r / scales.xi_hat).powi(2)).exp() / scales.xi_hat
}

/// `(−1)^M`, the sign of the connected correlator at generic positions.
pub fn correlator_sign(m: usize) -> i32 {
    if m % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Dephased connected correlator `⟨K_{R_0} K_{R_1} ⋯ K_{R_M}⟩_c`.
pub fn connected_kink_correlator(scales: &KZScales, pos: &KinkPositions) -> Result<f64> {
    let r = pos.positions();
    let m = pos.order();
    if m > MAX_ORDER {
        return Err(Error::CostGuard { m, max: MAX_ORDER });
    }
    let size = r.len();
    let mut alpha = vec![vec![0.0; size]; size];
    for i in 0..size {
        for j in 0..size {
            alpha[i][j] = gaussian_alpha(scales, (r[i] - r[j]) as f64);
        }
    }
    let mut used = vec![false; size];
    used[0] = true;
    let total = cycle_sum(&alpha, &mut used, 0, 1.0, m);
    Ok(correlator_sign(m) as f64 * total)
}

/// Sum over all orderings of the unused positions of the cycle products,
/// depth first in lexicographic order.
fn cycle_sum(alpha: &[Vec<f64>], used: &mut [bool], last: usize, product: f64, remaining: usize) -> f64 {
    if remaining == 0 {
        return product * alpha[last][0];
    }
    let mut acc = 0.0;
    for next in 1..alpha.len() {
        if used[next] {
            continue;
        }
        let p = product * alpha[last][next];
        if p < UNDERFLOW {
            continue;
        }
        used[next] = true;
        acc += cycle_sum(alpha, used, next, p, remaining - 1);
        used[next] = false;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlators::{kink_kink_analytic, AnalyticVariant};
    use crate::protocol::{kz_scales, RampProtocol};
    use proptest::prelude::*;

    fn scales(tau: f64) -> KZScales {
        kz_scales(&RampProtocol::linear(10.0, tau).unwrap())
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Op {
        A(i64),
        B(i64),
    }

    /// `⟨ops⟩` by explicit enumeration of all perfect matchings, with
    /// `⟨b_m a_n⟩ = −2α_{n−m}`, `⟨a_n b_m⟩ = +2α_{n−m}` and `aa`, `bb` zero.
    fn wick_by_matchings(s: &KZScales, ops: &[Op]) -> f64 {
        if ops.is_empty() {
            return 1.0;
        }
        let mut total = 0.0;
        for j in 1..ops.len() {
            let c = match (ops[0], ops[j]) {
                (Op::B(m), Op::A(n)) => -2.0 * gaussian_alpha(s, (n - m) as f64),
                (Op::A(n), Op::B(m)) => 2.0 * gaussian_alpha(s, (n - m) as f64),
                _ => 0.0,
            };
            if c == 0.0 {
                continue;
            }
            let rest: Vec<Op> = ops[1..].iter().enumerate().filter(|(i, _)| i + 1 != j).map(|(_, o)| *o).collect();
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            total += sign * c * wick_by_matchings(s, &rest);
        }
        total
    }

    fn set_partitions(items: &[usize]) -> Vec<Vec<Vec<usize>>> {
        if items.is_empty() {
            return vec![vec![]];
        }
        let first = items[0];
        let mut out = Vec::new();
        for p in set_partitions(&items[1..]) {
            for i in 0..p.len() {
                let mut q = p.clone();
                q[i].insert(0, first);
                out.push(q);
            }
            let mut q = p.clone();
            q.push(vec![first]);
            out.push(q);
        }
        out
    }

    /// Connected correlator from the moment-cumulant formula applied to the
    /// bond operators `b_R a_{R+shift}`, times `(−1/2)^{M+1}`. `shift = 0`
    /// is the `α_{R±1} ≈ α_R` identification of the cycle formula.
    fn brute_force(s: &KZScales, r: &[i64], shift: i64) -> f64 {
        let idx: Vec<usize> = (0..r.len()).collect();
        let mut kappa = 0.0;
        for part in set_partitions(&idx) {
            let k = part.len();
            let fact: f64 = (1..k).map(|v| v as f64).product();
            let sign = if (k - 1) % 2 == 0 { 1.0 } else { -1.0 };
            let prod: f64 = part
                .iter()
                .map(|block| {
                    let ops: Vec<Op> = block.iter().flat_map(|&i| [Op::B(r[i]), Op::A(r[i] + shift)]).collect();
                    wick_by_matchings(s, &ops)
                })
                .product();
            kappa += sign * fact * prod;
        }
        (-0.5f64).powi(r.len() as i32) * kappa
    }

    #[test]
    fn matches_brute_force_wick() {
        // ξ̂ ≈ 6 keeps every contraction relevant without letting the
        // disconnected terms swamp the cumulant
        let s = scales(0.5);
        for r in [vec![0, 3], vec![0, 4], vec![0, 3, 7], vec![0, 5, 8], vec![0, 3, 6, 10], vec![-2, 3, 6, 9]] {
            let pos = KinkPositions::new(r.clone()).unwrap();
            let want = brute_force(&s, &r, 0);
            let got = connected_kink_correlator(&s, &pos).unwrap();
            // the cumulant cancels disconnected terms of size α_0^{M+1}
            let scale = gaussian_alpha(&s, 0.0).powi(r.len() as i32);
            assert!((want - got).abs() <= 1e-12 * scale, "{r:?}: {want} vs {got}");
            assert!(got.abs() > 1e-8 * scale);
        }
    }

    #[test]
    fn bond_offset_is_a_small_correction() {
        // the true operators sit on b_R a_{R+1}; the offset only matters at
        // distances comparable to the lattice spacing
        let s = scales(32.0);
        for r in [vec![0, 30], vec![0, 25, 60], vec![0, 20, 45, 70]] {
            let exact = brute_force(&s, &r, 1);
            let cycle = connected_kink_correlator(&s, &KinkPositions::new(r.clone()).unwrap()).unwrap();
            assert!((exact - cycle).abs() < 0.05 * cycle.abs(), "{r:?}: {exact} vs {cycle}");
        }
    }

    #[test]
    fn three_kink_closed_form() {
        for tau in [8.0, 128.0] {
            let s = scales(tau);
            let r = [0i64, 40, 90];
            let c = connected_kink_correlator(&s, &KinkPositions::new(r.to_vec()).unwrap()).unwrap();
            let g = |d: i64| (-PI * (d as f64 / s.xi_hat).powi(2)).exp();
            let want = 2.0 * g(r[0] - r[1]) * g(r[1] - r[2]) * g(r[2] - r[0]);
            let got = c / s.n.powi(3);
            assert!((got - want).abs() <= 1e-14 * want);
            assert!(got > 0.0);
        }
    }

    #[test]
    fn signs_and_validation() {
        assert_eq!(correlator_sign(1), -1);
        assert_eq!(correlator_sign(2), 1);
        assert_eq!(correlator_sign(3), -1);
        let s = scales(128.0);
        for m in 1..=5usize {
            let r: Vec<i64> = (0..=m as i64).map(|i| 23 * i + i * i).collect();
            let c = connected_kink_correlator(&s, &KinkPositions::new(r).unwrap()).unwrap();
            assert_eq!(c.signum() as i32, correlator_sign(m), "M={m}");
        }
        assert!(matches!(KinkPositions::new(vec![0, 2]), Err(Error::Precondition(_))));
        assert!(matches!(KinkPositions::new(vec![0]), Err(Error::Precondition(_))));
        assert!(matches!(KinkPositions::new((0..10).map(|i| 5 * i).collect()), Err(Error::CostGuard { m: 9, .. })));
        let far = KinkPositions::new(vec![0, 100_000, 200_000]).unwrap();
        assert_eq!(connected_kink_correlator(&s, &far).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn pair_matches_dephased_formula(tau in 1.0f64..200.0, r in 3i64..2000) {
            let s = scales(tau);
            let c = connected_kink_correlator(&s, &KinkPositions::new(vec![0, r]).unwrap()).unwrap();
            let want = kink_kink_analytic(&s, r as f64, AnalyticVariant::Dephased).unwrap();
            prop_assert!((c / (s.n * s.n) - want).abs() <= 1e-14);
        }

        #[test]
        fn translation_and_reflection(gaps in prop::collection::vec(3i64..60, 1..6), shift in -500i64..500) {
            let s = scales(16.0);
            let mut r = vec![0i64];
            for g in gaps {
                r.push(r.last().unwrap() + g);
            }
            let base = KinkPositions::new(r.clone()).unwrap();
            let c = connected_kink_correlator(&s, &base).unwrap();
            let moved = KinkPositions::new(r.iter().map(|v| v + shift).collect()).unwrap();
            let c2 = connected_kink_correlator(&s, &moved).unwrap();
            let c3 = connected_kink_correlator(&s, &base.mirrored()).unwrap();
            prop_assert!((c - c2).abs() <= 1e-12 * c.abs());
            prop_assert!((c - c3).abs() <= 1e-12 * c.abs());
        }
    }
}
