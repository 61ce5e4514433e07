//! Exact diagonalization oracle for tiny periodic chains.
//!
//! The full `2^N` state vector of `H = −Σ (g σˣ_n + σᶻ_n σᶻ_{n+1})` is
//! propagated through the same ramp as the fermionic pipeline. Basis states
//! are σᶻ products; bit `j` of the index is set when spin `j` points down.
//! Ramps use a fourth-order commutator-free Magnus step at the Gauss nodes
//! with step doubling for error control; holds are propagated exactly.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::ode::IntegratorConfig;
use crate::protocol::{ChainSpec, RampProtocol, Segment, SegmentKind};

pub const MAX_SITES: usize = 12;

/// Dense state of a periodic chain of `n` spins.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    pub n: usize,
    pub amplitudes: Vec<C64>,
}

/// Matrix-free Hamiltonian `−g X − Z` with `X = Σ σˣ` and `Z = Σ σᶻσᶻ`.
struct Ising {
    n: usize,
    zz: Vec<f64>,
}

impl Ising {
    fn new(n: usize) -> Self {
        let zz = (0..1usize << n)
            .map(|s| {
                (0..n)
                    .map(|j| {
                        let a = (s >> j) & 1;
                        let b = (s >> ((j + 1) % n)) & 1;
                        if a == b {
                            1.0
                        } else {
                            -1.0
                        }
                    })
                    .sum()
            })
            .collect();
        Self { n, zz }
    }

    fn dim(&self) -> usize {
        self.zz.len()
    }

    /// Upper bound on the spectral radius of `H(g)`.
    fn norm_bound(&self, g: f64) -> f64 {
        (g.abs() + 1.0) * self.n as f64
    }

    fn apply_x<T>(&self, x: &[T], out: &mut [T])
    where
        T: Copy + std::ops::Add<Output = T> + Default,
    {
        for (s, o) in out.iter_mut().enumerate() {
            let mut acc = T::default();
            for j in 0..self.n {
                acc = acc + x[s ^ (1 << j)];
            }
            *o = acc;
        }
    }

    fn apply(&self, g: f64, x: &[C64], out: &mut [C64]) {
        self.apply_x(x, out);
        for s in 0..out.len() {
            out[s] = -(out[s] * g) - x[s] * self.zz[s];
        }
    }

    fn apply_real(&self, g: f64, x: &[f64], out: &mut [f64]) {
        self.apply_x(x, out);
        for s in 0..out.len() {
            out[s] = -g * out[s] - self.zz[s] * x[s];
        }
    }

    /// `[X, Z] x`
    fn apply_xz_commutator(&self, x: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        for s in 0..x.len() {
            scratch[s] = x[s] * self.zz[s];
        }
        self.apply_x(scratch, out);
        self.apply_x(x, scratch);
        for s in 0..x.len() {
            out[s] -= scratch[s] * self.zz[s];
        }
    }
}

fn check_sites(n: usize) -> Result<()> {
    ChainSpec::new(n)?;
    if n > MAX_SITES {
        return Err(Error::InvalidChain(format!("exact diagonalization supports at most {MAX_SITES} sites, got {n}")));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lowest Ritz pair of `H(g)` in the Krylov space of `start`, with full
/// reorthogonalization.
fn lanczos(h: &Ising, g: f64, start: Vec<f64>) -> (f64, Vec<f64>) {
    let dim = h.dim();
    let max_iter = dim.min(300);
    let mut q = vec![{
        let nrm = dot(&start, &start).sqrt();
        start.iter().map(|v| v / nrm).collect::<Vec<f64>>()
    }];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    let mut best = (f64::INFINITY, Vec::new());
    for j in 0..max_iter {
        h.apply_real(g, &q[j], &mut w);
        let a = dot(&q[j], &w);
        alphas.push(a);
        for _ in 0..2 {
            for qi in &q {
                let c = dot(qi, &w);
                w.iter_mut().zip(qi).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = dot(&w, &w).sqrt();
        let m = alphas.len();
        let t = DMatrix::from_fn(m, m, |r, c| {
            if r == c {
                alphas[r]
            } else if r + 1 == c {
                betas[r]
            } else if c + 1 == r {
                betas[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let i0 = eig.eigenvalues.imin();
        let e0 = eig.eigenvalues[i0];
        let coeffs: Vec<f64> = eig.eigenvectors.column(i0).iter().copied().collect();
        let residual = (b * coeffs[m - 1]).abs();
        best = (e0, coeffs);
        if residual < 1e-13 * e0.abs().max(1.0) || b < 1e-13 {
            break;
        }
        betas.push(b);
        q.push(w.iter().map(|v| v / b).collect());
    }
    let (e0, coeffs) = best;
    let mut v = vec![0.0; dim];
    for (c, qi) in coeffs.iter().zip(&q) {
        v.iter_mut().zip(qi).for_each(|(x, y)| *x += c * y);
    }
    let nrm = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= nrm);
    (e0, v)
}

/// `|+⟩^{⊗N}`, the σˣ-polarized product state.
pub fn x_polarized(n: usize) -> Result<DenseState> {
    check_sites(n)?;
    let dim = 1usize << n;
    let a = C64::new((dim as f64).sqrt().recip(), 0.0);
    Ok(DenseState { n, amplitudes: vec![a; dim] })
}

/// Ground state of `H(g)` for `g > 1`.
pub fn ground_state(n: usize, g: f64) -> Result<DenseState> {
    check_sites(n)?;
    if !(g > 1.0) {
        return Err(Error::Precondition(format!("ground state requires g > 1, got {g}")));
    }
    let h = Ising::new(n);
    let dim = h.dim();
    let plus = vec![1.0; dim];
    let (e_even, v) = lanczos(&h, g, plus);
    // σᶻ_0 |+…+⟩ starts an odd-parity Krylov space
    let odd: Vec<f64> = (0..dim).map(|s| if s & 1 == 0 { 1.0 } else { -1.0 }).collect();
    let (e_odd, _) = lanczos(&h, g, odd);
    if e_odd - e_even < 1e-8 * e_even.abs().max(1.0) {
        return Err(Error::DegenerateGround { e0: e_even.min(e_odd), e1: e_even.max(e_odd) });
    }
    Ok(DenseState { n, amplitudes: v.into_iter().map(|x| C64::new(x, 0.0)).collect() })
}

impl DenseState {
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨Π_j σˣ_j⟩`
    pub fn parity(&self) -> f64 {
        let mask = (1usize << self.n) - 1;
        self.amplitudes.iter().enumerate().map(|(s, a)| (a.conj() * self.amplitudes[s ^ mask]).re).sum()
    }

    /// `⟨H(g)⟩`
    pub fn energy(&self, g: f64) -> f64 {
        let h = Ising::new(self.n);
        let mut out = vec![C64::new(0.0, 0.0); h.dim()];
        h.apply(g, &self.amplitudes, &mut out);
        self.amplitudes.iter().zip(&out).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// `⟨σᶻ_j⟩`
    pub fn magnetization(&self, j: usize) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(s, a)| if (s >> j) & 1 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum()
    }

    /// `|⟨ψ|φ⟩|²`
    pub fn fidelity(&self, other: &DenseState) -> f64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()
    }

    /// Largest componentwise distance to another state.
    pub fn max_distance(&self, other: &DenseState) -> f64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// Work buffers of the propagator.
struct Propagator {
    h: Ising,
    cfg: IntegratorConfig,
    a: Vec<C64>,
    b: Vec<C64>,
    c: Vec<C64>,
    term: Vec<C64>,
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3 / 6

impl Propagator {
    fn new(n: usize, cfg: IntegratorConfig) -> Self {
        let h = Ising::new(n);
        let z = vec![C64::new(0.0, 0.0); h.dim()];
        Self { h, cfg, a: z.clone(), b: z.clone(), c: z.clone(), term: z }
    }

    /// `ψ ← exp(−i h H(g_mid) + κ [X, Z]) ψ` by a Taylor series.
    fn exp_step(&mut self, psi: &mut [C64], h: f64, g_mid: f64, kappa: f64) {
        self.term.copy_from_slice(psi);
        for order in 1..60 {
            // term ← Ω term / order
            self.h.apply(g_mid, &self.term, &mut self.a);
            if kappa != 0.0 {
                self.h.apply_xz_commutator(&self.term, &mut self.b, &mut self.c);
            }
            let inv = 1.0 / order as f64;
            let mut size = 0.0;
            for s in 0..psi.len() {
                let mut v = self.a[s] * C64::new(0.0, -h);
                if kappa != 0.0 {
                    v += self.b[s] * kappa;
                }
                v *= inv;
                self.term[s] = v;
                psi[s] += v;
                size += v.norm_sqr();
            }
            if size < 1e-34 {
                break;
            }
        }
    }

    /// One fourth-order Magnus step over `[t, t + h]` of a ramp segment.
    fn magnus(&mut self, seg: &Segment, tau_q: f64, t: f64, h: f64, psi: &mut [C64]) {
        let g1 = seg.field(t + (0.5 - GAUSS_OFFSET) * h, tau_q);
        let g2 = seg.field(t + (0.5 + GAUSS_OFFSET) * h, tau_q);
        // Ω = −i h (H₁ + H₂)/2 − (√3 h²/12) [H₂, H₁],  [H₂, H₁] = (g₂ − g₁)[X, Z]
        let kappa = -(3f64.sqrt() * h * h / 12.0) * (g2 - g1);
        self.exp_step(psi, h, 0.5 * (g1 + g2), kappa);
    }

    fn ramp(&mut self, seg: &Segment, tau_q: f64, t_stop: f64, psi: &mut [C64]) -> Result<()> {
        let g_max = seg.g_start.max(seg.g_end);
        let h_cap = (2.0 / self.h.norm_bound(g_max)).min(self.cfg.max_step);
        let tol = self.cfg.rel_tol.max(self.cfg.abs_tol);
        let mut t = seg.t_start;
        let mut h = h_cap;
        let mut one = psi.to_vec();
        let mut two = psi.to_vec();
        while t < t_stop {
            let last = t + h >= t_stop;
            let step = if last { t_stop - t } else { h };
            one.copy_from_slice(psi);
            self.magnus(seg, tau_q, t, step, &mut one);
            two.copy_from_slice(psi);
            self.magnus(seg, tau_q, t, 0.5 * step, &mut two);
            self.magnus(seg, tau_q, t + 0.5 * step, 0.5 * step, &mut two);
            let err = one.iter().zip(&two).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt() * 16.0 / 15.0;
            if !err.is_finite() {
                return Err(Error::Integration { k: f64::NAN, t, reason: "non-finite state".into() });
            }
            if err <= tol {
                // keep the two half steps
                psi.copy_from_slice(&two);
                t = if last { t_stop } else { t + step };
            }
            let fac = (0.9 * (tol / err.max(1e-300)).powf(0.2)).clamp(0.2, 4.0);
            h = (step * fac).min(h_cap);
            if h < 1e-12 {
                return Err(Error::Integration { k: f64::NAN, t, reason: "step size underflow".into() });
            }
        }
        Ok(())
    }

    fn hold(&mut self, g: f64, duration: f64, psi: &mut [C64]) {
        if duration <= 0.0 {
            return;
        }
        let h_cap = 2.0 / self.h.norm_bound(g);
        let steps = (duration / h_cap).ceil().max(1.0) as usize;
        let h = duration / steps as f64;
        for _ in 0..steps {
            self.exp_step(psi, h, g, 0.0);
        }
    }
}

/// Evolves `state` through the whole protocol, ending at `g = 0`.
pub fn evolve(state: &DenseState, protocol: &RampProtocol, cfg: &IntegratorConfig) -> Result<DenseState> {
    evolve_to(state, protocol, protocol.t_end(), cfg)
}

/// Evolves `state` from the protocol start to time `t_stop`.
pub fn evolve_to(
    state: &DenseState,
    protocol: &RampProtocol,
    t_stop: f64,
    cfg: &IntegratorConfig,
) -> Result<DenseState> {
    cfg.validate()?;
    check_sites(state.n)?;
    if !(t_stop >= protocol.t_start() && t_stop <= protocol.t_end()) {
        return Err(Error::Domain { t: t_stop, start: protocol.t_start(), end: protocol.t_end() });
    }
    let mut prop = Propagator::new(state.n, *cfg);
    let mut psi = state.amplitudes.clone();
    for seg in protocol.segments() {
        if seg.t_start >= t_stop {
            break;
        }
        let end = seg.t_end.min(t_stop);
        match seg.kind {
            SegmentKind::Ramp => prop.ramp(seg, protocol.tau_q(), end, &mut psi)?,
            SegmentKind::Hold => prop.hold(seg.g_start, end - seg.t_start, &mut psi),
        }
    }
    Ok(DenseState { n: state.n, amplitudes: psi })
}

/// Translation-averaged kink observables in the σᶻ basis.
#[derive(Debug, Clone, PartialEq)]
pub struct KinkMeasurement {
    /// `⟨K_n⟩` averaged over bonds.
    pub density: f64,
    /// `⟨K_n⟩` per bond `n = 0..N`.
    pub bond_density: Vec<f64>,
    /// `C^{KK}_R` for `R = 1..=N/2`.
    pub kink_kink: Vec<f64>,
    /// `⟨σᶻ_n σᶻ_{n+R}⟩` for `R = 1..=N/2`.
    pub zz: Vec<f64>,
}

/// Measures kinks `K_n = (1 − σᶻ_n σᶻ_{n+1})/2` directly from the
/// configuration probabilities.
pub fn measure_kinks(state: &DenseState) -> KinkMeasurement {
    let n = state.n;
    let half = n / 2;
    let mut bond = vec![0.0; n];
    // ⟨K_j K_{j+R}⟩ and ⟨σᶻ_j σᶻ_{j+R}⟩ summed over j
    let mut kk = vec![0.0; half + 1];
    let mut zz = vec![0.0; half + 1];
    for (s, a) in state.amplitudes.iter().enumerate() {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        let spin = |j: usize| ((s >> (j % n)) & 1) as i32;
        let kink = |j: usize| (spin(j) != spin(j + 1)) as i32 as f64;
        for j in 0..n {
            bond[j] += p * kink(j);
            for r in 1..=half {
                kk[r] += p * kink(j) * kink(j + r);
                zz[r] += p * if spin(j) == spin(j + r) { 1.0 } else { -1.0 };
            }
        }
    }
    let nf = n as f64;
    let kink_kink = (1..=half)
        .map(|r| {
            let disconnected: f64 = (0..n).map(|j| bond[j] * bond[(j + r) % n]).sum();
            (kk[r] - disconnected) / nf
        })
        .collect();
    KinkMeasurement {
        density: bond.iter().sum::<f64>() / nf,
        bond_density: bond,
        kink_kink,
        zz: zz[1..].iter().map(|v| v / nf).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{dispersion, momentum_grid};

    fn free_fermion_energy(n: usize, g: f64) -> f64 {
        -0.5 * momentum_grid(ChainSpec::new(n).unwrap()).iter().map(|m| dispersion(g, m.k())).sum::<f64>()
    }

    #[test]
    fn ground_energy_matches_free_fermions() {
        for n in [4, 6, 8, 10] {
            for g in [1.2, 2.0, 10.0] {
                let gs = ground_state(n, g).unwrap();
                assert!((gs.energy(g) - free_fermion_energy(n, g)).abs() < 1e-8, "N={n} g={g}");
                assert!((gs.parity() - 1.0).abs() < 1e-10);
                assert!((gs.norm_sqr() - 1.0).abs() < 1e-12);
                for j in 0..n {
                    assert!(gs.magnetization(j).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(ground_state(4, 0.5), Err(Error::Precondition(_))));
        assert!(matches!(ground_state(14, 2.0), Err(Error::InvalidChain(_))));
        assert!(matches!(ground_state(5, 2.0), Err(Error::InvalidChain(_))));
    }

    #[test]
    fn polarized_state_has_half_kinks() {
        let m = measure_kinks(&x_polarized(6).unwrap());
        assert!((m.density - 0.5).abs() < 1e-14);
        assert!(m.kink_kink.iter().all(|c| c.abs() < 1e-14));
    }

    #[test]
    fn ferromagnet_has_no_kinks() {
        let n = 6;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(0.5f64.sqrt(), 0.0);
        amps[(1 << n) - 1] = C64::new(0.5f64.sqrt(), 0.0);
        let m = measure_kinks(&DenseState { n, amplitudes: amps });
        assert_eq!(m.density, 0.0);
        assert!(m.kink_kink.iter().all(|&c| c == 0.0));
        assert!(m.zz.iter().all(|&c| (c - 1.0).abs() < 1e-15));
    }

    #[test]
    fn slow_ramp_reaches_ferromagnet() {
        let p = RampProtocol::linear(10.0, 50.0).unwrap();
        let gs = ground_state(4, 10.0).unwrap();
        let out = evolve(&gs, &p, &IntegratorConfig::default()).unwrap();
        let mut ghz = vec![C64::new(0.0, 0.0); 16];
        ghz[0] = C64::new(0.5f64.sqrt(), 0.0);
        ghz[15] = ghz[0];
        let f = out.fidelity(&DenseState { n: 4, amplitudes: ghz });
        assert!(f >= 0.999, "fidelity {f}");
        assert!((out.norm_sqr() - 1.0).abs() < 1e-9);
        assert!((out.parity() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn hold_conserves_energy() {
        let p = RampProtocol::halted(10.0, 1.0, 0.5, 3.0).unwrap();
        let gs = ground_state(6, 10.0).unwrap();
        let cfg = IntegratorConfig::default();
        let hold = p.segments()[1];
        let e0 = evolve_to(&gs, &p, hold.t_start, &cfg).unwrap().energy(0.5);
        for frac in [0.3, 0.7, 1.0] {
            let s = evolve_to(&gs, &p, hold.t_start + frac * hold.duration(), &cfg).unwrap();
            assert!((s.energy(0.5) - e0).abs() < 1e-8);
        }
    }

    #[test]
    fn evolution_self_converges() {
        let p = RampProtocol::halted(10.0, 1.0, 0.5, 3.0).unwrap();
        let gs = ground_state(6, 10.0).unwrap();
        let cfg = IntegratorConfig::default();
        let a = evolve(&gs, &p, &cfg).unwrap();
        let b = evolve(&gs, &p, &cfg.scaled(0.5)).unwrap();
        assert!(a.max_distance(&b) < 1e-7);
        assert!((a.norm_sqr() - 1.0).abs() < 1e-9);
        assert!((a.parity() - 1.0).abs() < 1e-8);
        let m = measure_kinks(&a);
        for w in m.bond_density.windows(2) {
            assert!((w[0] - w[1]).abs() < 1e-10);
        }
    }
}
