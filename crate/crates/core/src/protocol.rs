//! Chain geometry, ramp schedules, static Bogoliubov data and the closed-form
//! Kibble-Zurek scales.
//!
//! The chain is periodic in the spins; in the even-parity sector the
//! Jordan-Wigner fermions are anti-periodic, so quasimomenta sit on the
//! half-integer grid `k = m π / N` with odd `m`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Periodic chain of `n` sites, even-parity sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainSpec {
    n: usize,
}

impl ChainSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidChain(format!("site count must be even and at least 4, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    /// The default grid size used for thermodynamic-limit comparisons:
    /// `max(2000, ceil(40 ξ̂))` rounded up to even. After a halt the chain
    /// must also hold the dephasing hump, so it is at least `8 l_w`.
    pub fn default_for(scales: &KZScales) -> Self {
        let hump = scales.l_w.map_or(0, |l| (8.0 * l).ceil() as usize);
        let n = ((40.0 * scales.xi_hat).ceil() as usize).max(2000).max(hump);
        Self { n: n + n % 2 }
    }
}

/// One quasimomentum of the anti-periodic grid, `k = m π / N` with odd `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    m: i64,
    n: usize,
    k: f64,
}

impl Mode {
    pub fn k(&self) -> f64 {
        self.k
    }

    /// Odd integer `m` with `k = m π / N`.
    pub fn index(&self) -> i64 {
        self.m
    }

    pub fn mirror(&self) -> Mode {
        Mode { m: -self.m, n: self.n, k: -self.k }
    }
}

/// All `N` quasimomenta, ascending: `±π/N, ±3π/N, …, ±(N-1)π/N`.
pub fn momentum_grid(chain: ChainSpec) -> Vec<Mode> {
    let n = chain.n as i64;
    (0..n)
        .map(|j| {
            let m = 2 * j - n + 1;
            Mode { m, n: chain.n, k: m as f64 * PI / n as f64 }
        })
        .collect()
}

/// The `N/2` positive quasimomenta, ascending.
pub fn positive_modes(chain: ChainSpec) -> Vec<Mode> {
    momentum_grid(chain).into_iter().filter(|m| m.m > 0).collect()
}

/// Optional halt of the ramp at `g_w` for a waiting time `t_w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Halt {
    pub g_w: f64,
    pub t_w: f64,
}

/// Kind of a piecewise-linear segment of `g(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    /// `g` decreases with slope `-1/τ_Q`.
    Ramp,
    /// `g` is held constant.
    Hold,
}

/// A segment `[t_start, t_end]` on which `g` is linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub t_start: f64,
    pub t_end: f64,
    pub g_start: f64,
    pub g_end: f64,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// Field inside the segment. Breakpoints return the stored values exactly.
    pub fn field(&self, t: f64, tau_q: f64) -> f64 {
        match self.kind {
            SegmentKind::Hold => self.g_start,
            SegmentKind::Ramp => {
                if t == self.t_end {
                    self.g_end
                } else {
                    self.g_start - (t - self.t_start) / tau_q
                }
            }
        }
    }

    /// Time derivative of `g` on the segment.
    pub fn slope(&self, tau_q: f64) -> f64 {
        match self.kind {
            SegmentKind::Hold => 0.0,
            SegmentKind::Ramp => -1.0 / tau_q,
        }
    }
}

/// Linear ramp of the transverse field from `g0` down to `0` with slope
/// `-1/τ_Q`, optionally halted at `g_w` for `t_w`.
///
/// Time is measured so that the final ramp segment ends at `t = t_w`
/// (`t = 0` without a halt), and the critical point of the first ramp is
/// crossed at `t_c = -τ_Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct RampProtocol {
    g0: f64,
    tau_q: f64,
    halt: Option<Halt>,
    segments: Vec<Segment>,
}

impl RampProtocol {
    pub fn linear(g0: f64, tau_q: f64) -> Result<Self> {
        Self::new(g0, tau_q, None)
    }

    pub fn halted(g0: f64, tau_q: f64, g_w: f64, t_w: f64) -> Result<Self> {
        Self::new(g0, tau_q, Some(Halt { g_w, t_w }))
    }

    pub fn new(g0: f64, tau_q: f64, halt: Option<Halt>) -> Result<Self> {
        if !(g0.is_finite() && g0 > 1.0) {
            return Err(Error::InvalidProtocol(format!("g0 must be finite and > 1, got {g0}")));
        }
        if !(tau_q.is_finite() && tau_q > 0.0) {
            return Err(Error::InvalidProtocol(format!("tau_q must be finite and > 0, got {tau_q}")));
        }
        let t_start = -g0 * tau_q;
        let segments = match halt {
            None => vec![Segment { kind: SegmentKind::Ramp, t_start, t_end: 0.0, g_start: g0, g_end: 0.0 }],
            Some(Halt { g_w, t_w }) => {
                if !(g_w > 0.0 && g_w < 1.0) {
                    return Err(Error::InvalidProtocol(format!("halt field g_w must lie in (0, 1), got {g_w}")));
                }
                if !(t_w.is_finite() && t_w >= 0.0) {
                    return Err(Error::InvalidProtocol(format!("waiting time t_w must be finite and >= 0, got {t_w}")));
                }
                let t_hold = -g_w * tau_q;
                let t_resume = t_hold + t_w;
                vec![
                    Segment { kind: SegmentKind::Ramp, t_start, t_end: t_hold, g_start: g0, g_end: g_w },
                    Segment { kind: SegmentKind::Hold, t_start: t_hold, t_end: t_resume, g_start: g_w, g_end: g_w },
                    Segment { kind: SegmentKind::Ramp, t_start: t_resume, t_end: t_w, g_start: g_w, g_end: 0.0 },
                ]
            }
        };
        Ok(Self { g0, tau_q, halt, segments })
    }

    pub fn g0(&self) -> f64 {
        self.g0
    }

    pub fn tau_q(&self) -> f64 {
        self.tau_q
    }

    pub fn halt(&self) -> Option<Halt> {
        self.halt
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn t_start(&self) -> f64 {
        self.segments[0].t_start
    }

    pub fn t_end(&self) -> f64 {
        self.segments[self.segments.len() - 1].t_end
    }

    /// Same ramp with a different starting field.
    pub fn with_g0(&self, g0: f64) -> Result<Self> {
        Self::new(g0, self.tau_q, self.halt)
    }

    /// Segment containing `t`; at a breakpoint the later segment wins.
    pub fn segment_at(&self, t: f64) -> Result<&Segment> {
        let (start, end) = (self.t_start(), self.t_end());
        if !(t >= start && t <= end) {
            return Err(Error::Domain { t, start, end });
        }
        Ok(self.segments.iter().rev().find(|s| t >= s.t_start).unwrap_or(&self.segments[0]))
    }
}

/// Transverse field `g(t)`.
pub fn field_at(protocol: &RampProtocol, t: f64) -> Result<f64> {
    Ok(protocol.segment_at(t)?.field(t, protocol.tau_q))
}

/// Quasiparticle energy `ε_k = 2 √((g − cos k)² + sin² k)`.
pub fn dispersion(g: f64, k: f64) -> f64 {
    2.0 * (g - k.cos()).hypot(k.sin())
}

/// Angle `θ` with `(U, V) = (cos θ, sin θ)`; `2θ = atan2(sin k, g − cos k)`.
pub fn bogoliubov_angle(g: f64, k: f64) -> f64 {
    0.5 * k.sin().atan2(g - k.cos())
}

/// Positive-energy eigenvector `(U, V)` of the stationary 2×2 BdG problem,
/// with `U` real and non-negative.
pub fn static_mode(g: f64, k: f64) -> Result<(f64, f64)> {
    let gap = dispersion(g, k);
    if !(gap > 4.0 * f64::EPSILON * (1.0 + g.abs())) {
        return Err(Error::Degenerate { g, k, gap });
    }
    let theta = bogoliubov_angle(g, k);
    Ok((theta.cos(), theta.sin()))
}

/// The 2×2 stationary BdG matrix `[[2(g−cos k), 2 sin k], [2 sin k, −2(g−cos k)]]`.
pub fn bdg_matrix(g: f64, k: f64) -> [[f64; 2]; 2] {
    let x = 2.0 * (g - k.cos());
    let s = 2.0 * k.sin();
    [[x, s], [s, -x]]
}

/// Closed-form Kibble-Zurek scales of a protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KZScales {
    /// KZ length `ξ̂ = 2π √(2 τ_Q)` in sites.
    pub xi_hat: f64,
    /// Mean kink density `n = 1/ξ̂`.
    pub n: f64,
    /// Dephasing length of the straight ramp.
    pub l: f64,
    /// Dephasing length after the halt; `None` without a halt.
    pub l_w: Option<f64>,
    /// Dephasing time at the halt field; `None` without a halt.
    pub t_d: Option<f64>,
    tau_q: f64,
}

impl KZScales {
    pub fn tau_q(&self) -> f64 {
        self.tau_q
    }

    /// `l_w` when a halt is present, `l` otherwise.
    pub fn effective_length(&self) -> f64 {
        self.l_w.unwrap_or(self.l)
    }

    /// Rescales every length so that `ξ̂ = 1/n` for the given (numerical)
    /// density; the dimensionless ratios `l/ξ̂`, `l_w/ξ̂` are kept.
    pub fn with_density(&self, n: f64) -> KZScales {
        let xi = 1.0 / n;
        let r = xi / self.xi_hat;
        KZScales { xi_hat: xi, n, l: self.l * r, l_w: self.l_w.map(|v| v * r), t_d: self.t_d, tau_q: self.tau_q }
    }
}

pub fn kz_length(tau_q: f64) -> f64 {
    2.0 * PI * (2.0 * tau_q).sqrt()
}

/// `ξ̂ √(1 + ((3 ln τ_Q + 6 g_w t_w / (|1 − g_w| τ_Q)) / 4π)²)`; with
/// `t_w = 0` this is the straight-ramp length `l`.
pub fn dephasing_length(tau_q: f64, halt: Option<Halt>) -> f64 {
    let extra = match halt {
        Some(Halt { g_w, t_w }) => 6.0 * g_w / (1.0 - g_w).abs() * t_w / tau_q,
        None => 0.0,
    };
    let ratio = (3.0 * tau_q.ln() + extra) / (4.0 * PI);
    kz_length(tau_q) * (1.0 + ratio * ratio).sqrt()
}

/// `t_D = (2π/3) |1 − g_w| / g_w · τ_Q`.
pub fn dephasing_time(tau_q: f64, g_w: f64) -> f64 {
    2.0 * PI / 3.0 * (1.0 - g_w).abs() / g_w * tau_q
}

pub fn kz_scales(protocol: &RampProtocol) -> KZScales {
    let tau_q = protocol.tau_q;
    let xi_hat = kz_length(tau_q);
    KZScales {
        xi_hat,
        n: 1.0 / xi_hat,
        l: dephasing_length(tau_q, None),
        l_w: protocol.halt.map(|h| dephasing_length(tau_q, Some(h))),
        t_d: protocol.halt.map(|h| dephasing_time(tau_q, h.g_w)),
        tau_q,
    }
}

/// Landau-Zener estimates of the excitation probability of mode `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LzProbability {
    /// Effective transition rate `Δ_k = (4 τ_Q sin² k)⁻¹`.
    pub delta_k: f64,
    /// `exp(−π / 2Δ_k) = exp(−2π τ_Q sin² k)`.
    pub full: f64,
    /// Small-k form `exp(−2π τ_Q k²)`.
    pub gaussian: f64,
}

pub fn lz_probability(protocol: &RampProtocol, k: f64) -> LzProbability {
    lz_probability_for(protocol.tau_q, k)
}

pub fn lz_probability_for(tau_q: f64, k: f64) -> LzProbability {
    let s2 = k.sin().powi(2);
    LzProbability {
        delta_k: 1.0 / (4.0 * tau_q * s2),
        full: (-2.0 * PI * tau_q * s2).exp(),
        gaussian: (-2.0 * PI * tau_q * k * k).exp(),
    }
}
