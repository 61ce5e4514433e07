//! Quadratic fermionic correlators of the final state and the kink-kink
//! correlators built from them.
//!
//! ```text
//! α_R = ⟨c_{n+R} c†_n⟩ = (1/N) Σ_k |u_k|² e^{ikR}
//! β_R = ⟨c_{n+R} c_n⟩  = (2/N) Σ_{k>0} u_k v*_k sin kR
//! ```
//!
//! Everything downstream (kink density, kink-kink and spin-spin
//! correlators) is a Wick contraction of these two sequences.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::bdg::{check_grid, FinalModes, ModeState};
use crate::error::{Error, Result};
use crate::fit::levenberg_marquardt;
use crate::protocol::{kz_scales, ChainSpec, KZScales, RampProtocol};
use crate::wick::{expectation, Majorana};

/// Prefactor `9747π/3200` of the dephasing term of the scaled correlator.
pub const ALPHA_PREFACTOR: f64 = 9747.0 * PI / 3200.0;

/// `α_R` and `β_R` for `R = 0..=r_max` together with the density and scales
/// of the run that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionCorrelators {
    pub r_max: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<C64>,
    /// Closed-form scales of the protocol.
    pub scales: KZScales,
    /// Kink density `(1/N) Σ_k p_k` of the numerical spectrum.
    pub density: f64,
    pub chain: ChainSpec,
}

pub fn fermion_correlators(modes: &FinalModes, r_max: usize) -> Result<FermionCorrelators> {
    fermion_correlators_from(&modes.states, modes.chain, &modes.protocol, r_max)
}

/// Correlators from final mode states covering the whole grid at `g = 0`.
/// `r_max` may reach `N − 1`; beyond `N/2` the sequences are the
/// anti-periodic continuation of the finite ring.
pub fn fermion_correlators_from(
    states: &[ModeState],
    chain: ChainSpec,
    protocol: &RampProtocol,
    r_max: usize,
) -> Result<FermionCorrelators> {
    let n = chain.sites();
    if r_max > n - 1 {
        return Err(Error::OutOfRange { r: r_max, min: 0, max: n - 1 });
    }
    let mut sorted = states.to_vec();
    sorted.sort_by_key(|s| s.mode.index());
    check_grid(&sorted, chain)?;

    // cos(π i / N), sin(π i / N) for i in 0..2N
    let two_n = 2 * n as i64;
    let table: Vec<(f64, f64)> = (0..two_n).map(|i| (PI * i as f64 / n as f64).sin_cos()).collect();
    let weights: Vec<(i64, f64)> = sorted.iter().map(|s| (s.mode.index(), s.u.norm_sqr())).collect();
    let anomalous: Vec<(i64, C64)> =
        sorted.iter().filter(|s| s.mode.index() > 0).map(|s| (s.mode.index(), s.u * s.v.conj())).collect();
    let nf = n as f64;

    let alpha: Vec<f64> = (0..=r_max as i64)
        .into_par_iter()
        .map(|r| weights.iter().map(|&(m, w)| w * table[(m * r).rem_euclid(two_n) as usize].1).sum::<f64>() / nf)
        .collect();
    let beta: Vec<C64> = (0..=r_max as i64)
        .into_par_iter()
        .map(|r| {
            if r == 0 {
                return C64::new(0.0, 0.0);
            }
            anomalous.iter().map(|&(m, z)| z * table[(m * r).rem_euclid(two_n) as usize].0).sum::<C64>() * (2.0 / nf)
        })
        .collect();

    let mut p_sum = 0.0;
    for s in sorted.iter().filter(|s| s.mode.index() > 0) {
        p_sum += s.excitation(0.0)?.clamp(0.0, 1.0);
    }
    Ok(FermionCorrelators { r_max, alpha, beta, scales: kz_scales(protocol), density: 2.0 * p_sum / nf, chain })
}

impl FermionCorrelators {
    fn check(&self, d: i64) -> Result<usize> {
        let a = d.unsigned_abs() as usize;
        if a > self.r_max {
            return Err(Error::OutOfRange { r: a, min: 0, max: self.r_max });
        }
        Ok(a)
    }

    /// `α_d` for any `|d| ≤ r_max` (even in `d`).
    pub fn alpha_at(&self, d: i64) -> Result<f64> {
        Ok(self.alpha[self.check(d)?])
    }

    /// `β_d` for any `|d| ≤ r_max` (odd in `d`).
    pub fn beta_at(&self, d: i64) -> Result<C64> {
        let b = self.beta[self.check(d)?];
        Ok(if d < 0 { -b } else { b })
    }

    /// Excitation part of `α_R`: `α_R − ½δ_{R,0} + ¼δ_{|R|,1}`.
    pub fn alpha_excitation(&self, r: i64) -> Result<f64> {
        let ground = match r.unsigned_abs() {
            0 => 0.5,
            1 => -0.25,
            _ => 0.0,
        };
        Ok(self.alpha_at(r)? - ground)
    }

    /// Excitation part `δβ_R = β_R − ¼ sign(R) δ_{|R|,1}`.
    pub fn beta_excitation(&self, r: i64) -> Result<C64> {
        let ground = match r {
            1 => 0.25,
            -1 => -0.25,
            _ => 0.0,
        };
        Ok(self.beta_at(r)? - ground)
    }

    /// Scales with every length rescaled to the numerical density.
    pub fn scaled_scales(&self) -> KZScales {
        self.scales.with_density(self.density)
    }

    /// `⟨x y⟩` for two Majorana operators.
    pub fn contraction(&self, x: Majorana, y: Majorana) -> Result<C64> {
        use Majorana::{A, B};
        let delta = |m: i64, n: i64| if m == n { 1.0 } else { 0.0 };
        Ok(match (x, y) {
            (B(m), A(n)) => C64::new(delta(m, n) - 2.0 * self.alpha_at(n - m)? + 2.0 * self.beta_at(n - m)?.re, 0.0),
            (A(m), B(n)) => C64::new(-delta(m, n) + 2.0 * self.alpha_at(m - n)? - 2.0 * self.beta_at(m - n)?.re, 0.0),
            (A(m), A(n)) => C64::new(delta(m, n), 2.0 * self.beta_at(m - n)?.im),
            (B(m), B(n)) => C64::new(-delta(m, n), 2.0 * self.beta_at(m - n)?.im),
        })
    }

    /// Gaussian expectation value of a Majorana string.
    pub fn wick(&self, ops: &[Majorana]) -> Result<C64> {
        let sites = ops.iter().map(|o| match *o {
            Majorana::A(i) | Majorana::B(i) => i,
        });
        let (lo, hi) = sites.fold((i64::MAX, i64::MIN), |(lo, hi), i| (lo.min(i), hi.max(i)));
        if !ops.is_empty() {
            self.check(hi - lo)?;
        }
        Ok(expectation(ops, |x, y| self.contraction(x, y).expect("range checked above")))
    }

    /// Kink density from the correlators, `½ + α_1 − Re β_1`.
    pub fn density_from_correlators(&self) -> f64 {
        0.5 + self.alpha[1] - self.beta[1].re
    }
}

fn check_r(r: usize, max: usize) -> Result<()> {
    if r < 1 || r > max {
        return Err(Error::OutOfRange { r, min: 1, max });
    }
    Ok(())
}

/// Exact connected kink-kink correlator
///
/// ```text
/// C_R = ½|β_R|² + ½Re(β_{R+1}β*_{R−1}) − α_{R+1}α_{R−1}
///     + ½Re(β_{R+1}β_{R−1} − β_R²) + α_{R−1}Re β_{R+1} − α_{R+1}Re β_{R−1}
///     + δ_{R,1} ½(α_2 − Re β_2)
/// ```
///
/// The last line is the contact term of neighbouring bonds, which share the
/// site `n + 1`.
pub fn kink_kink_exact(fc: &FermionCorrelators, r: usize) -> Result<f64> {
    check_r(r, fc.r_max.saturating_sub(1))?;
    let a = |d: usize| fc.alpha[d];
    let b = |d: usize| fc.beta[d];
    let (bp, b0, bm) = (b(r + 1), b(r), b(r - 1));
    let mut c = 0.5 * b0.norm_sqr() + 0.5 * (bp * bm.conj()).re - a(r + 1) * a(r - 1)
        + 0.5 * (bp * bm - b0 * b0).re
        + a(r - 1) * bp.re
        - a(r + 1) * bm.re;
    if r == 1 {
        c += 0.5 * (a(2) - b(2).re);
    }
    Ok(c)
}

/// `C_R ≈ |β_R|² − α_R²`, the exact correlator with `R ± 1 → R`.
pub fn kink_kink_approx(fc: &FermionCorrelators, r: usize) -> Result<f64> {
    check_r(r, fc.r_max)?;
    Ok(fc.beta[r].norm_sqr() - fc.alpha[r] * fc.alpha[r])
}

/// Connected `⟨σˣ_0 σˣ_R⟩ − ⟨σˣ⟩²` by Wick's theorem on `a_0 b_0 a_R b_R`.
pub fn transverse_connected(fc: &FermionCorrelators, r: usize) -> Result<f64> {
    check_r(r, fc.r_max)?;
    use Majorana::{A, B};
    let r = r as i64;
    let full = fc.wick(&[A(0), B(0), A(r), B(r)])?;
    let single = fc.wick(&[A(0), B(0)])?;
    Ok((full - single * single).re)
}

/// Autocorrelation `⟨K_n²⟩ − ⟨K_n⟩² = n(1 − n)` of a single bond.
pub fn kink_autocorrelation(n: f64) -> f64 {
    n * (1.0 - n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticVariant {
    /// `α (ξ̂/l)(R/l)² e^{−3π(R/l)²} − e^{−2π(R/ξ̂)²}`
    Straight,
    /// As `Straight` with `l → l_w`.
    Halted,
    /// `−e^{−2π(R/ξ̂)²}`
    Dephased,
}

/// Closed-form scaled correlator `n⁻² C_R`. Lengths are taken from
/// `scales`; pass [`FermionCorrelators::scaled_scales`] to compare with a
/// numerical run.
///
/// The dephasing term peaks at `R = l/√(3π)`.
pub fn kink_kink_analytic(scales: &KZScales, r: f64, variant: AnalyticVariant) -> Result<f64> {
    let xi = scales.xi_hat;
    let anti = -(-2.0 * PI * (r / xi).powi(2)).exp();
    let l = match variant {
        AnalyticVariant::Dephased => return Ok(anti),
        AnalyticVariant::Straight => scales.l,
        AnalyticVariant::Halted => {
            scales.l_w.ok_or_else(|| Error::Usage("the halted analytic correlator needs a halt".into()))?
        }
    };
    let x = r / l;
    Ok(ALPHA_PREFACTOR * (xi / l) * x * x * (-3.0 * PI * x * x).exp() + anti)
}

/// `|δβ_R| = (57√(6π)/80) R/√(ξ̂ l³) e^{−(3π/2)(R/l)²}` with
/// `l = scales.effective_length()`. The phase is not modelled.
pub fn delta_beta_analytic(scales: &KZScales, r: f64) -> f64 {
    let l = scales.effective_length();
    57.0 * (6.0 * PI).sqrt() / 80.0 * r / (scales.xi_hat * l.powi(3)).sqrt() * (-1.5 * PI * (r / l).powi(2)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeriesKind {
    Exact,
    Approx,
    Analytic,
    AnalyticHalted,
    Dephased,
}

impl SeriesKind {
    pub fn name(self) -> &'static str {
        match self {
            SeriesKind::Exact => "exact",
            SeriesKind::Approx => "approx",
            SeriesKind::Analytic => "analytic",
            SeriesKind::AnalyticHalted => "analytic_halted",
            SeriesKind::Dephased => "dephased",
        }
    }
}

impl std::str::FromStr for SeriesKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "exact" => SeriesKind::Exact,
            "approx" => SeriesKind::Approx,
            "analytic" => SeriesKind::Analytic,
            "analytic_halted" => SeriesKind::AnalyticHalted,
            "dephased" => SeriesKind::Dephased,
            other => return Err(Error::Usage(format!("unknown correlator kind '{other}'"))),
        })
    }
}

/// Scaled correlator `n⁻² C_R` over a set of distances.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorSeries {
    pub kind: SeriesKind,
    pub points: Vec<(usize, f64)>,
    /// The `n²` every value was divided by.
    pub normalization: f64,
}

pub fn correlator_series(
    fc: &FermionCorrelators,
    kind: SeriesKind,
    rs: impl IntoIterator<Item = usize>,
) -> Result<CorrelatorSeries> {
    let n2 = fc.density * fc.density;
    let scales = fc.scaled_scales();
    let points = rs
        .into_iter()
        .map(|r| {
            if r == 0 {
                return Err(Error::OutOfRange { r, min: 1, max: fc.r_max });
            }
            let v = match kind {
                SeriesKind::Exact => kink_kink_exact(fc, r)? / n2,
                SeriesKind::Approx => kink_kink_approx(fc, r)? / n2,
                SeriesKind::Analytic => kink_kink_analytic(&scales, r as f64, AnalyticVariant::Straight)?,
                SeriesKind::AnalyticHalted => kink_kink_analytic(&scales, r as f64, AnalyticVariant::Halted)?,
                SeriesKind::Dephased => kink_kink_analytic(&scales, r as f64, AnalyticVariant::Dephased)?,
            };
            Ok((r, v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelatorSeries { kind, points, normalization: n2 })
}

/// Result of fitting the dephasing term to a numerical correlator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingFit {
    /// Fitted dephasing length.
    pub l: f64,
    /// Amplitude `A'` of `A'(R/l)² e^{−3π(R/l)²}`.
    pub amplitude: f64,
    /// `‖residual‖ / ‖target‖` over the fitted points.
    pub residual: f64,
}

impl DephasingFit {
    /// Maximum of the fitted term, reached at `R = l/√(3π)`.
    pub fn peak_height(&self) -> f64 {
        self.amplitude / (3.0 * PI * std::f64::consts::E)
    }
}

pub const DEPHASING_FIT_THRESHOLD: f64 = 0.5;

/// Fits `A'(R/l)² e^{−3π(R/l)²}` to `n⁻²C_R + e^{−2π(R/ξ̂)²}`, i.e. to the
/// scaled correlator with its anti-bunching term removed. `points` are
/// `(R, n⁻²C_R)`; `scales` must carry the numerical density.
pub fn fit_dephasing_length(points: &[(f64, f64)], scales: &KZScales) -> Result<DephasingFit> {
    if points.len() < 3 {
        return Err(Error::Precondition(format!("need at least 3 points to fit, got {}", points.len())));
    }
    let xi = scales.xi_hat;
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|&(r, c)| c + (-2.0 * PI * (r / xi).powi(2)).exp()).collect();
    let (i_max, y_max) = y.iter().copied().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
    if y_max <= 0.0 {
        return Err(Error::FitFailure { residual: f64::INFINITY, threshold: DEPHASING_FIT_THRESHOLD });
    }
    let l0 = x[i_max].max(1.0) * (3.0 * PI).sqrt();
    let a0 = y_max * 3.0 * PI * std::f64::consts::E;
    let model = |p: &[f64], r: f64| {
        let u = r / p[1];
        p[0] * u * u * (-3.0 * PI * u * u).exp()
    };
    let fit = levenberg_marquardt(model, &x, &y, None, &[a0, l0]);
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let residual = fit.residual_norm / norm;
    if !(residual <= DEPHASING_FIT_THRESHOLD) || !(fit.params[1] > 0.0) {
        return Err(Error::FitFailure { residual, threshold: DEPHASING_FIT_THRESHOLD });
    }
    Ok(DephasingFit { l: fit.params[1], amplitude: fit.params[0], residual })
}

/// Correlator range that covers the dephasing hump: `1.5 l` (or `l_w`).
pub fn dephasing_fit_range(scales: &KZScales) -> usize {
    (1.5 * scales.effective_length()).ceil() as usize + 2
}

/// [`fit_dephasing_length`] applied to the exact correlator at every
/// `R < r_max`. The fitted length is in sites.
pub fn dephasing_fit(fc: &FermionCorrelators) -> Result<DephasingFit> {
    let n2 = fc.density * fc.density;
    let points = (1..fc.r_max).map(|r| Ok((r as f64, kink_kink_exact(fc, r)? / n2))).collect::<Result<Vec<_>>>()?;
    fit_dephasing_length(&points, &fc.scaled_scales())
}
