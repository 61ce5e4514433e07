use kinkcorr::correlators::{dephasing_fit, dephasing_fit_range, kink_kink_exact};
use kinkcorr::ed::{evolve, ground_state, measure_kinks, MAX_SITES};
use kinkcorr::higher_order::connected_kink_correlator;
use kinkcorr::spinspin::{czz_exact, czz_series, fit_asymptote};
use kinkcorr::{
    correlator_series, evolve_grid, fermion_correlators, kink_density, kz_scales, lz_probability, ChainSpec,
    ExcitationSpectrum, KinkPositions, SeriesKind,
};

use crate::config::RunConfig;
use crate::output::{Cell, Table};
use crate::CliError;

pub fn spectrum(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = cfg.protocol(cfg.single_tau()?, cfg.single_halt_t()?)?;
    let chain = cfg.chain(&kz_scales(&p))?;
    let spec = ExcitationSpectrum::from_modes(&evolve_grid(&p, chain, &cfg.integrator()?)?)?;
    let mut t = Table::new(&["k", "p_k_numeric", "p_k_lz_gaussian", "p_k_lz_full"]);
    t.meta.push(("resolved_n".into(), chain.sites().to_string()));
    for &(k, pk) in &spec.entries {
        let lz = lz_probability(&p, k);
        t.push(vec![k.into(), pk.into(), lz.gaussian.into(), lz.full.into()]);
    }
    Ok(t)
}

pub fn correlator(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = cfg.protocol(cfg.single_tau()?, cfg.single_halt_t()?)?;
    let scales = kz_scales(&p);
    let chain = cfg.chain(&scales)?;
    let r_max = cfg.rmax.unwrap_or((1.12 * scales.xi_hat).ceil() as usize);
    if r_max == 0 || r_max + 2 > chain.sites() {
        return Err(CliError::Usage(format!("--rmax must lie in [1, N - 2] = [1, {}]", chain.sites() - 2)));
    }
    if cfg.kinds.contains(&SeriesKind::AnalyticHalted) && p.halt().is_none() {
        return Err(CliError::Usage("--kinds analytic_halted needs --halt-g".into()));
    }
    let fc = fermion_correlators(&evolve_grid(&p, chain, &cfg.integrator()?)?, r_max + 1)?;
    let mut names = vec!["R", "nR"];
    names.extend(cfg.kinds.iter().map(|k| k.name()));
    let mut t = Table::new(&names);
    t.meta.push(("resolved_n".into(), chain.sites().to_string()));
    t.meta.push(("resolved_rmax".into(), r_max.to_string()));
    t.meta.push(("n_numeric".into(), crate::output::format_float(fc.density)));
    let columns = cfg
        .kinds
        .iter()
        .map(|&kind| {
            // after a halt the analytic curve uses l_w
            let kind =
                if kind == SeriesKind::Analytic && p.halt().is_some() { SeriesKind::AnalyticHalted } else { kind };
            correlator_series(&fc, kind, 1..=r_max)
        })
        .collect::<Result<Vec<_>, _>>()?;
    for r in 1..=r_max {
        let mut row: Vec<Cell> = vec![r.into(), (fc.density * r as f64).into()];
        row.extend(columns.iter().map(|c| Cell::Num(c.points[r - 1].1)));
        t.push(row);
    }
    Ok(t)
}

pub fn sweep(cfg: &RunConfig) -> Result<Table, CliError> {
    if cfg.tau_q.is_empty() {
        return Err(CliError::Usage("--tau-q needs at least one value".into()));
    }
    let waits = if cfg.halt_t.is_empty() { vec![0.0] } else { cfg.halt_t.clone() };
    let integrator = cfg.integrator()?;
    let mut t = Table::new(&[
        "tau_q",
        "t_w",
        "n_numeric",
        "n_closed_form",
        "xi_hat",
        "l_w_closed_form",
        "l_w_fitted",
        "fit_residual",
        "error",
    ]);
    for &tau in &cfg.tau_q {
        for &t_w in &waits {
            let p = cfg.protocol(tau, t_w)?;
            let s = kz_scales(&p);
            let chain = cfg.chain(&s)?;
            let mut row: Vec<Cell> = vec![tau.into(), t_w.into()];
            let cell = (|| {
                let modes = evolve_grid(&p, chain, &integrator)?;
                let n = kink_density(&ExcitationSpectrum::from_modes(&modes)?);
                let r_max = dephasing_fit_range(&s).min(chain.sites() - 1);
                let fit = fermion_correlators(&modes, r_max).and_then(|fc| dephasing_fit(&fc));
                Ok::<_, kinkcorr::Error>((n, fit))
            })();
            match cell {
                Ok((n, fit)) => {
                    row.extend([n.into(), s.n.into(), s.xi_hat.into(), s.effective_length().into()]);
                    match fit {
                        Ok(f) => row.extend([f.l.into(), f.residual.into(), Cell::Empty]),
                        Err(e) => row.extend([Cell::Empty, Cell::Empty, e.to_string().into()]),
                    }
                }
                Err(e) => {
                    row.extend([Cell::Empty, s.n.into(), s.xi_hat.into(), s.effective_length().into()]);
                    row.extend([Cell::Empty, Cell::Empty, e.to_string().into()]);
                }
            }
            t.push(row);
        }
    }
    Ok(t)
}

pub fn higher(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = cfg.protocol(cfg.single_tau()?, cfg.single_halt_t()?)?;
    if cfg.positions.is_empty() {
        return Err(CliError::Usage("--positions is required".into()));
    }
    let pos = KinkPositions::new(cfg.positions.clone()).map_err(|e| CliError::Usage(format!("--positions: {e}")))?;
    let value = connected_kink_correlator(&kz_scales(&p), &pos)?;
    let mut t = Table::new(&["positions", "value"]);
    let label: Vec<String> = pos.positions().iter().map(i64::to_string).collect();
    t.push(vec![label.join(" ").into(), value.into()]);
    Ok(t)
}

pub fn spinspin(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = cfg.protocol(cfg.single_tau()?, cfg.single_halt_t()?)?;
    let s = kz_scales(&p);
    let r_max = cfg.rmax.unwrap_or((5.0 * s.xi_hat).ceil() as usize);
    if r_max == 0 {
        return Err(CliError::Usage("--rmax must be positive".into()));
    }
    let series = czz_series(&s, r_max).map_err(|e| match e {
        kinkcorr::Error::DimensionGuard { .. } => CliError::Usage(format!("--rmax: {e}")),
        other => other.into(),
    })?;
    let mut t = Table::new(&["R", "czz"]);
    t.meta.push(("resolved_rmax".into(), r_max.to_string()));
    for &(r, c) in &series {
        t.push(vec![r.into(), c.into()]);
    }
    if cfg.fit {
        let window = s.xi_hat..=5.0 * s.xi_hat;
        let points: Vec<(f64, f64)> =
            series.iter().map(|&(r, c)| (r as f64, c)).filter(|(r, _)| window.contains(r)).collect();
        let f = fit_asymptote(&points, &s)?;
        t.trailer = Some((
            "fit".into(),
            vec![
                ("lambda".into(), f.decay_rate),
                ("omega".into(), f.frequency),
                ("phase".into(), f.phase),
                ("amplitude".into(), f.amplitude),
                ("residual".into(), f.residual),
            ],
        ));
    }
    Ok(t)
}

pub fn oracle(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = cfg.protocol(cfg.single_tau()?, cfg.single_halt_t()?)?;
    let n = cfg.n.unwrap_or(8);
    if n > MAX_SITES {
        return Err(CliError::Usage(format!("--n must be at most {MAX_SITES} for the oracle, got {n}")));
    }
    let chain = ChainSpec::new(n).map_err(|e| CliError::Usage(format!("--n: {e}")))?;
    let integrator = cfg.integrator()?;
    let m = measure_kinks(&evolve(&ground_state(n, cfg.g0)?, &p, &integrator)?);
    let fc = fermion_correlators(&evolve_grid(&p, chain, &integrator)?, n / 2 + 1)?;
    let mut t = Table::new(&["observable", "pipeline", "oracle", "abs_diff"]);
    let mut add = |name: String, a: f64, b: f64| t.push(vec![name.into(), a.into(), b.into(), (a - b).abs().into()]);
    add("density".into(), fc.density, m.density);
    for r in 1..=n / 2 {
        add(format!("kink_kink_{r}"), kink_kink_exact(&fc, r)?, m.kink_kink[r - 1]);
    }
    for r in 1..=n / 2 {
        add(format!("zz_{r}"), czz_exact(&fc, r)?, m.zz[r - 1]);
    }
    Ok(t)
}
