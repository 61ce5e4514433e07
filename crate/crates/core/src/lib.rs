//! Kink statistics after transverse-field ramps of the quantum Ising chain.
//!
//! The chain is mapped to free fermions; every momentum pair is integrated
//! through the ramp ([`bdg`]), and all kink and spin observables are built
//! from the resulting Majorana correlators ([`correlators`],
//! [`higher_order`], [`spinspin`]). [`ed`] evolves small chains directly
//! in the spin basis as an independent check.

pub mod bdg;
pub mod correlators;
pub mod ed;
pub mod error;
pub mod fit;
pub mod higher_order;
pub mod ode;
pub mod protocol;
pub mod spinspin;
pub mod wick;

pub use bdg::{evolve_grid, kink_density, spectrum, with_threads, ExcitationSpectrum, FinalModes, Frame, ModeState};
pub use correlators::{
    correlator_series, fermion_correlators, fit_dephasing_length, kink_kink_analytic, kink_kink_approx,
    kink_kink_exact, AnalyticVariant, CorrelatorSeries, DephasingFit, FermionCorrelators, SeriesKind,
};
pub use error::{Error, Result};
pub use higher_order::{connected_kink_correlator, KinkPositions};
pub use ode::IntegratorConfig;
pub use protocol::{kz_scales, lz_probability, ChainSpec, Halt, KZScales, LzProbability, Mode, RampProtocol};
pub use spinspin::{czz, czz_exact, czz_series, fit_asymptote, AsymptoteFit};
