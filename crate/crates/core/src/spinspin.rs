//! Ferromagnetic correlator `C^{zz}_R` in the dephased regime as a Toeplitz
//! determinant, and its damped-oscillation asymptote.
//!
//! `σᶻ_0 σᶻ_R = b_0 a_1 b_1 a_2 ⋯ b_{R−1} a_R`. Once the excitation part of
//! `β` has dephased only the `⟨b_i a_{j+1}⟩` contractions survive and
//!
//! ```text
//! C^{zz}_R = det T,   T_ij = δ_ij − 2 G(1 + j − i),   i, j = 1..R
//! ```
//!
//! with `G` the excitation part of `α`. The ground-state parts of `α` and
//! `β` combine into the unit diagonal.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::correlators::FermionCorrelators;
use crate::error::{Error, Result};
use crate::fit::levenberg_marquardt;
use crate::higher_order::gaussian_alpha;
use crate::protocol::KZScales;
use crate::wick::Majorana;

/// `C^{zz}_R` is only evaluated for `R ≤ 10 ξ̂`.
pub const DIMENSION_GUARD: f64 = 10.0;
/// Relative agreement required between the LU and recursion determinants.
pub const DETERMINANT_TOLERANCE: f64 = 1e-8;
pub const ASYMPTOTE_FIT_THRESHOLD: f64 = 0.2;
pub const MIN_FIT_POINTS: usize = 40;

/// Toeplitz matrix `T_ij = δ_ij − 2 G(1 + j − i)` of dimension `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzSpec {
    r: usize,
    /// `t[d + r − 2]` is the entry at offset `d = 1 + j − i ∈ [2 − r, r]`.
    t: Vec<f64>,
}

impl ToeplitzSpec {
    fn build(r: usize, g: impl Fn(i64) -> Result<f64>) -> Result<Self> {
        let ri = r as i64;
        let t =
            (2 - ri..=ri).map(|d| Ok(if d == 1 { 1.0 } else { 0.0 } - 2.0 * g(d)?)).collect::<Result<Vec<f64>>>()?;
        Ok(Self { r, t })
    }

    /// Gaussian `G(d) = ξ̂⁻¹ e^{−π(d/ξ̂)²}` of the closed-form scales.
    pub fn from_scales(scales: &KZScales, r: usize) -> Result<Self> {
        guard(scales, r)?;
        Self::build(r, |d| Ok(gaussian_alpha(scales, d as f64)))
    }

    /// `G(d)` from the numerical `α` with its ground-state part removed.
    pub fn from_correlators(fc: &FermionCorrelators, r: usize) -> Result<Self> {
        if r < 1 {
            return Err(Error::OutOfRange { r, min: 1, max: fc.r_max });
        }
        Self::build(r, |d| fc.alpha_excitation(d))
    }

    pub fn dim(&self) -> usize {
        self.r
    }

    /// `T_ij` for 0-based `i, j`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.t[(1 + j as i64 - i as i64 + self.r as i64 - 2) as usize]
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.r, self.r, |i, j| self.entry(i, j))
    }

    pub fn determinant_lu(&self) -> f64 {
        self.matrix().lu().determinant()
    }

    /// Determinants of all leading principal submatrices, `det T_1 ..
    /// det T_r`, by the Levinson recursion for non-symmetric Toeplitz
    /// matrices. `None` if the recursion breaks down.
    pub fn leading_determinants(&self) -> Option<Vec<f64>> {
        // c(m) = T_{i, i−m}
        let c = |m: i64| self.t[(1 - m + self.r as i64 - 2) as usize];
        let mut dets = Vec::with_capacity(self.r);
        let c0 = c(0);
        if c0 == 0.0 {
            return None;
        }
        let mut f = vec![1.0 / c0];
        let mut b = vec![1.0 / c0];
        let mut det = c0;
        dets.push(det);
        for n in 1..self.r {
            // T_{n+1} [f; 0] = [e_1; ef],  T_{n+1} [0; b] = [eb; e_n]
            let ef: f64 = (0..n).map(|j| c((n - j) as i64) * f[j]).sum();
            let eb: f64 = (0..n).map(|j| c(-(j as i64 + 1)) * b[j]).sum();
            let denom = 1.0 - ef * eb;
            if denom == 0.0 || !denom.is_finite() {
                return None;
            }
            let mut f_new = vec![0.0; n + 1];
            let mut b_new = vec![0.0; n + 1];
            for j in 0..=n {
                let fj = if j < n { f[j] } else { 0.0 };
                let bj = if j > 0 { b[j - 1] } else { 0.0 };
                f_new[j] = (fj - ef * bj) / denom;
                b_new[j] = (bj - eb * fj) / denom;
            }
            f = f_new;
            b = b_new;
            // Cramer: f[0] = det T_n / det T_{n+1}
            det /= f[0];
            dets.push(det);
        }
        Some(dets)
    }
}

fn guard(scales: &KZScales, r: usize) -> Result<()> {
    let max = (DIMENSION_GUARD * scales.xi_hat).floor() as usize;
    if r > max {
        return Err(Error::DimensionGuard { r, max });
    }
    if r < 1 {
        return Err(Error::OutOfRange { r, min: 1, max });
    }
    Ok(())
}

/// Checks the LU determinant of dimension `r` against the recursion, on the
/// scale of the neighbouring minors so that zero crossings do not count as
/// disagreement.
fn cross_check(r: usize, lu: f64, dets: &[f64]) -> Result<f64> {
    let rec = dets[r - 1];
    let prev = if r >= 2 { dets[r - 2].abs() } else { 1.0 };
    let scale = lu.abs().max(rec.abs()).max(prev);
    if !((lu - rec).abs() <= DETERMINANT_TOLERANCE * scale) {
        return Err(Error::Conditioning { r, lu, recursion: rec });
    }
    Ok(lu)
}

fn checked_determinant(spec: &ToeplitzSpec) -> Result<f64> {
    let r = spec.dim();
    let lu = spec.determinant_lu();
    let dets = spec.leading_determinants().ok_or(Error::Conditioning { r, lu, recursion: f64::NAN })?;
    cross_check(r, lu, &dets)
}

/// Dephased `C^{zz}_R` with the Gaussian `α` of the closed-form scales.
pub fn czz(scales: &KZScales, r: usize) -> Result<f64> {
    checked_determinant(&ToeplitzSpec::from_scales(scales, r)?)
}

/// `C^{zz}_R` for `R = 1..=r_max`: one recursion pass for all minors plus a
/// pivoted LU per `R` (parallel over `R`).
pub fn czz_series(scales: &KZScales, r_max: usize) -> Result<Vec<(usize, f64)>> {
    let full = ToeplitzSpec::from_scales(scales, r_max)?;
    let dets = full.leading_determinants().ok_or(Error::Conditioning {
        r: r_max,
        lu: full.determinant_lu(),
        recursion: f64::NAN,
    })?;
    let m = full.matrix();
    (1..=r_max)
        .into_par_iter()
        .map(|r| {
            let lu = m.view((0, 0), (r, r)).clone_owned().lu().determinant();
            Ok((r, cross_check(r, lu, &dets)?))
        })
        .collect()
}

/// Dephased `C^{zz}_R` from numerical correlators (excitation part of `β`
/// dropped).
pub fn czz_dephased(fc: &FermionCorrelators, r: usize) -> Result<f64> {
    checked_determinant(&ToeplitzSpec::from_correlators(fc, r)?)
}

/// `⟨σᶻ_0 σᶻ_R⟩` of the full Gaussian state, as the Pfaffian of
/// `b_0 a_1 ⋯ b_{R−1} a_R`, without any dephasing assumption.
pub fn czz_exact(fc: &FermionCorrelators, r: usize) -> Result<f64> {
    if r < 1 || r > fc.r_max {
        return Err(Error::OutOfRange { r, min: 1, max: fc.r_max });
    }
    let ops: Vec<Majorana> = (0..r as i64).flat_map(|j| [Majorana::B(j), Majorana::A(j + 1)]).collect();
    Ok(fc.wick(&ops)?.re)
}

/// `C^{zz}_R ≈ A e^{−λ R/ξ̂} cos(ω R/ξ̂ − φ₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoteFit {
    /// `λ`, per `ξ̂`.
    pub decay_rate: f64,
    /// `ω`, radians per `ξ̂`.
    pub frequency: f64,
    pub phase: f64,
    pub amplitude: f64,
    /// `‖residual‖ / ‖data‖` with the fit weights applied.
    pub residual: f64,
}

/// `√(4π ln 2)`
pub fn asymptote_frequency() -> f64 {
    (4.0 * PI * 2f64.ln()).sqrt()
}

/// Least-squares fit of the damped cosine over the given `(R, C^{zz}_R)`.
///
/// Residuals are weighted by `e^{λ₀ R/ξ̂}` with `λ₀` from the initial guess,
/// so every part of the window counts equally despite the exponential decay.
pub fn fit_asymptote(series: &[(f64, f64)], scales: &KZScales) -> Result<AsymptoteFit> {
    if series.len() < MIN_FIT_POINTS {
        return Err(Error::Precondition(format!(
            "asymptote fit needs at least {MIN_FIT_POINTS} points, got {}",
            series.len()
        )));
    }
    let x: Vec<f64> = series.iter().map(|p| p.0 / scales.xi_hat).collect();
    let y: Vec<f64> = series.iter().map(|p| p.1).collect();

    // frequency from the mean spacing of sign changes
    let crossings: Vec<f64> = x
        .windows(2)
        .zip(y.windows(2))
        .filter(|(_, w)| w[0] * w[1] < 0.0)
        .map(|(xs, w)| xs[0] + (xs[1] - xs[0]) * w[0] / (w[0] - w[1]))
        .collect();
    let omega0 = if crossings.len() >= 2 {
        PI * (crossings.len() - 1) as f64 / (crossings.last().unwrap() - crossings[0])
    } else {
        PI / (x[x.len() - 1] - x[0])
    };

    // scan λ and ω, solving the linear amplitudes exactly
    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0, 0.0);
    for il in 0..=80 {
        let lambda = 0.05 * il as f64;
        for iw in 0..=40 {
            let omega = omega0 * (0.8 + 0.01 * iw as f64);
            let w: Vec<f64> = x.iter().map(|v| (lambda * v).exp()).collect();
            let basis = |v: f64, f: fn(f64) -> f64| (-lambda * v).exp() * f(omega * v);
            let (mut scc, mut scs, mut sss, mut syc, mut sys) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..x.len() {
                let c = basis(x[i], f64::cos) * w[i];
                let s = basis(x[i], f64::sin) * w[i];
                let yy = y[i] * w[i];
                scc += c * c;
                scs += c * s;
                sss += s * s;
                syc += yy * c;
                sys += yy * s;
            }
            let det = scc * sss - scs * scs;
            if det.abs() < 1e-300 {
                continue;
            }
            let p = (syc * sss - sys * scs) / det;
            let q = (sys * scc - syc * scs) / det;
            let mut cost = 0.0;
            for i in 0..x.len() {
                let m = p * basis(x[i], f64::cos) + q * basis(x[i], f64::sin);
                cost += ((m - y[i]) * w[i]).powi(2);
            }
            let norm: f64 = y.iter().zip(&w).map(|(a, b)| (a * b).powi(2)).sum();
            let rel = cost / norm;
            if rel < best.0 {
                best = (rel, lambda, omega, p, q);
            }
        }
    }
    let (_, lambda0, omega0, p0, q0) = best;
    let weights: Vec<f64> = x.iter().map(|v| (lambda0 * v).exp()).collect();
    let model = |p: &[f64], v: f64| (-p[2] * v).exp() * (p[0] * (p[3] * v).cos() + p[1] * (p[3] * v).sin());
    let fit = levenberg_marquardt(model, &x, &y, Some(&weights), &[p0, q0, lambda0, omega0]);
    let norm = y.iter().zip(&weights).map(|(a, b)| (a * b).powi(2)).sum::<f64>().sqrt();
    let residual = fit.residual_norm / norm;
    let [p, q, lambda, omega] = [fit.params[0], fit.params[1], fit.params[2], fit.params[3]];
    if !(residual <= ASYMPTOTE_FIT_THRESHOLD) || !(lambda > 0.0) || !(omega > 0.0) {
        return Err(Error::FitFailure { residual, threshold: ASYMPTOTE_FIT_THRESHOLD });
    }
    Ok(AsymptoteFit { decay_rate: lambda, frequency: omega, phase: q.atan2(p), amplitude: p.hypot(q), residual })
}
