//! Trajectory simulation of the full sensor, channel and estimator loop.
//!
//! Every trial draws from two ChaCha8 streams derived from the master seed
//! and the trial index: one for the initial state and process noise, one for
//! the channel. Trials run in parallel and are reduced in index order, so a
//! report depends only on the configuration and the seed.

mod config;
mod report;
mod trial;

pub use config::{CodeMode, CommMode, NoiseModel, PlantSpec, SimConfig};
pub use report::{aggregate, SimReport};
pub use trial::{run_trial, Simulation, TrialTrace};

use crate::error::Result;

/// Runs every trial of `cfg` and aggregates them.
pub fn simulate(cfg: &SimConfig) -> Result<SimReport> {
    Simulation::new(cfg.clone())?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Bound;
    use crate::channel::Gf2Code;
    use crate::error::Error;
    use crate::model::{ScalarPlant, VectorPlant};
    use crate::quantizer::BitAllocation;
    use nalgebra::{DMatrix, DVector};

    fn scalar(a: f64, w: f64, t: u32, r: u32) -> PlantSpec {
        PlantSpec::Scalar { plant: ScalarPlant::new(a, w, t, -1.0, 1.0).unwrap(), r }
    }

    fn double_integrator(t: u32, bits: Vec<u32>) -> PlantSpec {
        let plant = VectorPlant::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]),
            DVector::from_vec(vec![0.0, 1.0]),
            t,
            vec![(-1.0, 1.0); 2],
            None,
        )
        .unwrap();
        PlantSpec::Vector { plant, alloc: BitAllocation::new(bits).unwrap() }
    }

    fn within_se(value: f64, expected: f64, se: f64, k: f64) -> bool {
        (value - expected).abs() <= k * se + 1e-12 * expected.abs().max(1.0)
    }

    #[test]
    fn noiseless_perfect_channel_converges_geometrically() {
        let cfg = SimConfig::new(scalar(1.5, 0.0, 2, 20), CommMode::Abstract { p_e: 0.0, d: 1 }, 0.0, 4, 6, 1);
        let report = simulate(&cfg).unwrap();
        let ratio = 2.25 * 2f64.powi(-20);
        for l in 0..5 {
            let w = report.mean_width[l];
            assert!((report.mean_width[l + 1] - w * ratio).abs() <= 1e-12 * w * ratio);
            assert!(report.mean_error[l] <= 1.5 * w / 2.0);
        }
        assert!(report.mean_error[5] < 1e-30);
    }

    #[test]
    fn useless_channel_widths_follow_recursion() {
        let cfg = SimConfig::new(scalar(1.2, 0.0, 3, 4), CommMode::Abstract { p_e: 1.0, d: 2 }, 0.0, 3, 25, 2);
        let report = simulate(&cfg).unwrap();
        let expected = report.expected_width.as_ref().unwrap();
        for l in 0..25 {
            let want = 2.0 * 1.2f64.powi(3 * l as i32);
            assert!((report.mean_width[l] - want).abs() <= 1e-12 * want);
            assert!((expected[l] - want).abs() <= 1e-12 * want);
        }
        assert_eq!(report.failure_rate, 1.0);
        assert_eq!(report.steady_state_bound, Some(Bound::Unbounded));
        assert_eq!(report.bound_violations, 0);
    }

    #[test]
    fn coded_noiseless_matches_abstract_perfect_channel() {
        for plant in [scalar(1.1, 0.5, 12, 6), double_integrator(12, vec![3, 3])] {
            let abstract_cfg =
                SimConfig::new(plant.clone(), CommMode::Abstract { p_e: 0.0, d: 9 }, 0.0, 3, 15, 77);
            let code = Gf2Code::systematic_identity(6, 9).unwrap();
            let coded_cfg =
                SimConfig::new(plant, CommMode::Coded { n: 9, code: CodeMode::Given(code) }, 0.0, 3, 15, 77);
            for i in 0..3 {
                assert_eq!(run_trial(&abstract_cfg, i).unwrap(), run_trial(&coded_cfg, i).unwrap());
            }
        }
    }

    #[test]
    fn report_is_independent_of_thread_count() {
        let cfg = SimConfig::new(
            double_integrator(10, vec![4, 4]),
            CommMode::Coded { n: 10, code: CodeMode::Fresh },
            0.3,
            64,
            40,
            5,
        );
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| simulate(&cfg)).unwrap();
        let b = four.install(|| simulate(&cfg)).unwrap();
        assert_eq!(a, b);
        let mut other = cfg.clone();
        other.seed = 6;
        assert_ne!(simulate(&other).unwrap().mean_error, a.mean_error);
    }

    #[test]
    fn single_trial_report_equals_trace() {
        let cfg = SimConfig::new(scalar(1.05, 1.0, 5, 3), CommMode::Abstract { p_e: 0.2, d: 3 }, 0.0, 1, 30, 9);
        let trace = run_trial(&cfg, 0).unwrap();
        let report = aggregate(&cfg, std::slice::from_ref(&trace)).unwrap();
        assert_eq!(report.mean_error, trace.errors);
        assert_eq!(report.mean_width, trace.widths);
        assert!(report.error_se.iter().all(|&s| s == 0.0));
        assert_eq!(report, simulate(&cfg).unwrap());
    }

    #[test]
    fn failure_rates_match_configuration() {
        let cases = [
            (CommMode::Abstract { p_e: 0.3, d: 4 }, 0.0),
            (CommMode::Uncoded, 0.1),
            (CommMode::Coded { n: 8, code: CodeMode::Fresh }, 0.3),
        ];
        for (comm, zeta) in cases {
            let cfg = SimConfig::new(scalar(1.0, 1.0, 8, 4), comm, zeta, 200, 50, 11);
            let report = simulate(&cfg).unwrap();
            let p = report.configured_pe.unwrap();
            let se = (p * (1.0 - p) / 10_000.0).sqrt();
            assert!(within_se(report.failure_rate, p, se, 3.0), "{} vs {p}", report.failure_rate);
        }
    }

    #[test]
    fn widths_and_errors_respect_theory() {
        let cases = [
            SimConfig::new(scalar(1.1, 1.0, 6, 4), CommMode::Abstract { p_e: 0.2, d: 3 }, 0.0, 2000, 60, 3),
            SimConfig::new(scalar(1.02, 1.0, 40, 8), CommMode::Coded { n: 24, code: CodeMode::Fresh }, 0.5, 2000, 60, 4),
            SimConfig::new(double_integrator(10, vec![4, 4]), CommMode::Abstract { p_e: 0.2, d: 5 }, 0.0, 2000, 60, 5),
        ];
        for cfg in cases {
            let report = simulate(&cfg).unwrap();
            let expected = report.expected_width.as_ref().unwrap();
            for l in [0, 1, 5, 30, 59] {
                assert!(
                    within_se(report.mean_width[l], expected[l], report.width_se[l], 3.0),
                    "round {l}: {} vs {}",
                    report.mean_width[l],
                    expected[l]
                );
            }
            let bound = report.steady_state_bound.as_ref().unwrap().value();
            assert!(report.steady_state_error <= bound);
            if let Some(single) = report.single_shot_bound {
                assert!(report.mean_error[0] <= single + 3.0 * report.error_se[0]);
            }
            assert_eq!(report.bound_violations, 0);
            assert_eq!(report.containment_violations, 0);
        }
    }

    #[test]
    fn worst_case_noise_keeps_invariants() {
        for plant in [scalar(1.3, 2.0, 8, 6), double_integrator(10, vec![5, 5])] {
            let mut cfg = SimConfig::new(plant, CommMode::Uncoded, 0.05, 50, 40, 8);
            cfg.noise = NoiseModel::WorstCase;
            let report = simulate(&cfg).unwrap();
            assert_eq!(report.bound_violations, 0);
            assert_eq!(report.containment_violations, 0);
        }
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let base = SimConfig::new(scalar(1.0, 1.0, 10, 4), CommMode::Abstract { p_e: 0.1, d: 2 }, 0.0, 10, 30, 0);
        let mut cfg = base.clone();
        cfg.burn_in = Some(30);
        assert!(simulate(&cfg).is_err());
        let mut cfg = base.clone();
        cfg.comm = CommMode::Coded { n: 11, code: CodeMode::Fresh };
        assert!(simulate(&cfg).is_err());
        cfg.comm = CommMode::Coded { n: 3, code: CodeMode::Fresh };
        assert!(simulate(&cfg).is_err());
        let mut cfg = base.clone();
        cfg.comm = CommMode::Abstract { p_e: 0.1, d: 11 };
        assert!(simulate(&cfg).is_err());
        let mut cfg = base.clone();
        cfg.trials = 0;
        assert!(matches!(simulate(&cfg), Err(Error::InvalidParameter { .. })));
        let mut cfg = base;
        cfg.comm = CommMode::Coded { n: 6, code: CodeMode::Given(Gf2Code::systematic_identity(3, 6).unwrap()) };
        assert!(simulate(&cfg).is_err());
    }
}
