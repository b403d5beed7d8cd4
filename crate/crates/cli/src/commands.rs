//! The four subcommands, as functions from a configuration to output records.

use lrr_core::analysis::{
    optimize_blocklength, optimize_blocklength_vector, single_shot_bound, stability_check,
    steady_state_bound, steady_state_bound_coded, vector_stability, vector_steady_state_bound,
    Bound, PeModel,
};
use lrr_core::channel::{uncoded_error_prob, BecChannel};
use lrr_core::montecarlo::{simulate as run_simulation, CommMode, SimReport};
use rayon::prelude::*;

use crate::config::{check_n, ModeName, PeModelName, Plant, RunConfig};
use crate::error::CliError;
use crate::records::{BoundCell, OptimizeRecord, PointRecord, RoundRecord};

fn invalid(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Config { field: field.to_string(), reason: reason.into() }
}

fn mode_name(comm: &CommMode) -> &'static str {
    match comm {
        CommMode::Abstract { .. } => "abstract",
        CommMode::Uncoded => "uncoded",
        CommMode::Coded { .. } => "coded",
    }
}

/// Failure probability the analysis uses for `comm`; `None` when the code rate is not below capacity.
fn analytic_pe(comm: &CommMode, plant: &Plant, channel: &BecChannel, pe_model: &PeModel) -> Result<Option<f64>, CliError> {
    match comm {
        CommMode::Abstract { p_e, .. } => Ok(Some(*p_e)),
        CommMode::Uncoded => Ok(Some(uncoded_error_prob(channel, plant.r()))),
        CommMode::Coded { n, .. } => match pe_model.error_prob(*n, plant.r() as usize, channel) {
            Ok(p) => Ok(Some(p)),
            Err(lrr_core::Error::RateAboveCapacity { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        },
    }
}

fn latency(comm: &CommMode, plant: &Plant) -> u32 {
    match comm {
        CommMode::Abstract { d, .. } => *d,
        CommMode::Uncoded => plant.r(),
        CommMode::Coded { n, .. } => *n as u32,
    }
}

fn evaluate(
    cfg: &RunConfig,
    plant: &Plant,
    comm: CommMode,
    zeta: f64,
    empirical_seed: Option<u64>,
) -> Result<PointRecord, CliError> {
    let channel = BecChannel::new(zeta).map_err(|e| invalid("channel.zeta", e.to_string()))?;
    let p_e = analytic_pe(&comm, plant, &channel, &cfg.pe_model())?;
    let d = latency(&comm, plant);
    let mut rec = PointRecord {
        dim: 1,
        mode: mode_name(&comm).to_string(),
        r: plant.r(),
        zeta,
        n: match comm {
            CommMode::Coded { n, .. } => Some(n),
            _ => None,
        },
        d,
        p_e,
        theta: None,
        growth: None,
        stable: false,
        single_shot_bound: None,
        steady_state_bound: BoundCell::from(Bound::Unbounded),
        empirical_error: None,
        empirical_se: None,
    };
    if let Some(p_e) = p_e {
        match plant {
            Plant::Scalar { plant: sp, r } => {
                let report = stability_check(p_e, *r, sp);
                rec.theta = Some(report.theta);
                rec.growth = Some(report.growth);
                rec.stable = report.stable;
                rec.single_shot_bound = Some(single_shot_bound(p_e, *r, d, sp));
                rec.steady_state_bound = steady_state_bound(p_e, *r, d, sp).into();
            }
            Plant::Vector { plant: vp, alloc } => {
                rec.dim = vp.dim();
                let modes = vector_stability(vp, alloc, p_e)?;
                rec.theta = modes.theta.iter().copied().reduce(f64::max);
                rec.growth = modes.growth.iter().copied().reduce(f64::max);
                rec.stable = modes.stable;
                rec.steady_state_bound = vector_steady_state_bound(vp, alloc, p_e, d)?.into();
            }
        }
    } else if let Plant::Vector { plant: vp, .. } = plant {
        rec.dim = vp.dim();
    }
    if let Some(seed) = empirical_seed {
        let sim = cfg.sim_config(plant, comm, zeta, seed)?;
        let report = run_simulation(&sim)?;
        rec.empirical_error = Some(report.steady_state_error);
        rec.empirical_se = Some(report.steady_state_se);
    }
    Ok(rec)
}

/// Stability verdict and bounds for the configuration as written.
pub fn analyze(cfg: &RunConfig) -> Result<PointRecord, CliError> {
    let plant = cfg.plant()?;
    let comm = cfg.comm_mode(&plant)?;
    evaluate(cfg, &plant, comm, cfg.channel.zeta, None)
}

fn axis<T: Clone>(field: &str, values: &Option<Vec<T>>, base: Option<T>) -> Result<Vec<T>, CliError> {
    match values {
        Some(v) if v.is_empty() => Err(invalid(field, "sweep axis is empty")),
        Some(v) => Ok(v.clone()),
        None => Ok(base.into_iter().collect()),
    }
}

fn reject(field: &str, present: bool, mode: &str) -> Result<(), CliError> {
    if present {
        return Err(invalid(field, format!("this axis does not apply in {mode} mode")));
    }
    Ok(())
}

/// One communication mode per sweep point, in row order.
fn sweep_points(cfg: &RunConfig, plant: &Plant) -> Result<Vec<(CommMode, f64)>, CliError> {
    let s = &cfg.sweep;
    let ns = cfg.sweep_n();
    let mut points = Vec::new();
    match cfg.comm.mode {
        ModeName::Abstract => {
            reject("sweep.n", ns.is_some(), "abstract")?;
            reject("sweep.zeta", s.zeta.is_some(), "abstract")?;
            let p_es = axis("sweep.p_e", &s.p_e, cfg.comm.p_e)?;
            let ds = axis("sweep.d", &s.d, cfg.comm.d)?;
            if p_es.is_empty() {
                return Err(invalid("comm.p_e", "required in abstract mode"));
            }
            if ds.is_empty() {
                return Err(invalid("comm.d", "required in abstract mode"));
            }
            for &p_e in &p_es {
                if !(0.0..=1.0).contains(&p_e) {
                    return Err(invalid("sweep.p_e", format!("must lie in [0, 1], got {p_e}")));
                }
                for &d in &ds {
                    if d > plant.t_samp() {
                        return Err(invalid("sweep.d", format!("latency {d} exceeds t_samp = {}", plant.t_samp())));
                    }
                    points.push((CommMode::Abstract { p_e, d }, cfg.channel.zeta));
                }
            }
        }
        ModeName::Uncoded => {
            reject("sweep.n", ns.is_some(), "uncoded")?;
            reject("sweep.p_e", s.p_e.is_some(), "uncoded")?;
            reject("sweep.d", s.d.is_some(), "uncoded")?;
            let comm = cfg.comm_mode(plant)?;
            for zeta in axis("sweep.zeta", &s.zeta, Some(cfg.channel.zeta))? {
                points.push((comm.clone(), zeta));
            }
        }
        ModeName::Coded => {
            reject("sweep.p_e", s.p_e.is_some(), "coded")?;
            reject("sweep.d", s.d.is_some(), "coded")?;
            let code = cfg.code_mode();
            let ns = axis("sweep.n", &ns, cfg.comm.n)?;
            if ns.is_empty() {
                return Err(invalid("comm.n", "required in coded mode"));
            }
            for &n in &ns {
                check_n(n, plant).map_err(|e| match e {
                    CliError::Config { reason, .. } => invalid("sweep.n", reason),
                    other => other,
                })?;
            }
            for zeta in axis("sweep.zeta", &s.zeta, Some(cfg.channel.zeta))? {
                for &n in &ns {
                    points.push((CommMode::Coded { n, code: code.clone() }, zeta));
                }
            }
        }
    }
    Ok(points)
}

/// Cartesian sweep; unbounded points stay in the table with the `unbounded` sentinel.
pub fn sweep(cfg: &RunConfig, seed: Option<u64>) -> Result<Vec<PointRecord>, CliError> {
    let plant = cfg.plant()?;
    let empirical_seed = match (cfg.sweep.empirical, seed) {
        (true, None) => return Err(CliError::Usage("sweep.empirical needs --seed".into())),
        (true, Some(s)) => Some(s),
        (false, _) => None,
    };
    let points = sweep_points(cfg, &plant)?;
    points
        .into_par_iter()
        .map(|(comm, zeta)| evaluate(cfg, &plant, comm, zeta, empirical_seed))
        .collect()
}

/// Blocklength co-design over `[optimize] n_min..=n_max` (default: all rates below capacity up to T).
pub fn optimize(cfg: &RunConfig) -> Result<OptimizeRecord, CliError> {
    let plant = cfg.plant()?;
    let channel = cfg.channel()?;
    let pe_model = cfg.pe_model();
    let range = match (cfg.optimize.n_min, cfg.optimize.n_max) {
        (None, None) => None,
        (lo, hi) => {
            let lo = lo.unwrap_or(plant.r() as usize);
            let hi = hi.unwrap_or(plant.t_samp() as usize);
            if lo > hi {
                return Err(invalid("optimize.n_min", format!("{lo} exceeds n_max = {hi}")));
            }
            Some(lo..=hi)
        }
    };
    let (result, dim, bound_heuristic) = match &plant {
        Plant::Scalar { plant: sp, r } => {
            let result = optimize_blocklength(*r, sp, &channel, &pe_model, range)?;
            let bh = result
                .n_heuristic
                .and_then(|n| steady_state_bound_coded(n, *r, sp, &channel, &pe_model).ok())
                .map(BoundCell::from);
            (result, 1, bh)
        }
        Plant::Vector { plant: vp, alloc } => {
            (optimize_blocklength_vector(vp, alloc, &channel, &pe_model, range)?, vp.dim(), None)
        }
    };
    let n_lo = result.curve.first().map_or(0, |(n, _)| *n);
    let (n_hi, bound_hi) = result.curve.last().map_or((0, Bound::Unbounded), |(n, b)| (*n, b.clone()));
    Ok(OptimizeRecord {
        dim,
        r: plant.r(),
        zeta: channel.zeta(),
        t_samp: plant.t_samp(),
        pe_model: match cfg.comm.pe_model {
            PeModelName::NormalApprox => "normal_approx",
            PeModelName::Ensemble => "ensemble",
        }
        .to_string(),
        n_lo,
        n_hi,
        feasible_min: result.feasible_range.0,
        feasible_max: result.feasible_range.1,
        n_star: result.n_star,
        bound_star: result.best(),
        n_heuristic: result.n_heuristic,
        bound_heuristic,
        bound_at_n_hi: bound_hi.into(),
    })
}

/// Monte Carlo run of the configuration; one record per round.
pub fn simulate(cfg: &RunConfig, seed: u64) -> Result<(SimReport, Vec<RoundRecord>), CliError> {
    let plant = cfg.plant()?;
    let comm = cfg.comm_mode(&plant)?;
    let sim = cfg.sim_config(&plant, comm, cfg.channel.zeta, seed)?;
    let report = run_simulation(&sim)?;
    let rows = (0..report.rounds)
        .map(|k| RoundRecord {
            round: k,
            mean_error: report.mean_error[k],
            error_se: report.error_se[k],
            mean_width: report.mean_width[k],
            width_se: report.width_se[k],
            expected_width: report.expected_width.as_ref().map(|w| w[k]),
        })
        .collect();
    Ok((report, rows))
}

/// Multi-line human summary of a simulation.
pub fn summary(report: &SimReport) -> String {
    let bound = match &report.steady_state_bound {
        Some(Bound::Finite(b)) => format!("{b}"),
        Some(Bound::Unbounded) => BoundCell::UNBOUNDED.to_string(),
        None => "n/a".to_string(),
    };
    let pe = report.configured_pe.map_or("n/a".to_string(), |p| format!("{p}"));
    format!(
        "trials {} rounds {} burn-in {}\n\
         steady-state error {} (se {})\n\
         steady-state bound {bound}\n\
         failure rate {} (configured {pe})\n\
         containment violations {} bound violations {}\n",
        report.trials,
        report.rounds,
        report.burn_in,
        report.steady_state_error,
        report.steady_state_se,
        report.failure_rate,
        report.containment_violations,
        report.bound_violations,
    )
}
