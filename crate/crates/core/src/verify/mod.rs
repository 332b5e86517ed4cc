//! Executable consistency and convergence checks.

pub mod manufactured;
pub mod refine;
pub mod residues;

pub use manufactured::{ManufacturedSolution, RotatingUniformFlow, UniformFlow};
pub use refine::{
    estimate_order, level_configs, refine_study, refine_study_with, simulate_level, LevelOutcome, LevelRecord,
    RefinementReport,
};
pub use residues::{residue_fields, residue_fields_via_scheme, residues, ResidueFields, ResidueNorms};

#[cfg(test)]
mod tests {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::grid::{norm, GridSpec, VectorField};
    use crate::kernel::{Kernel, ParticleState};
    use crate::sim::{FluidParams, InitialCondition, OutputConfig, SimConfig, TaylorGreen};

    fn fluid() -> FluidParams {
        FluidParams::new(1.0, 0.01).unwrap()
    }

    #[test]
    fn uniform_steady_flow_has_zero_residues() {
        let spec = GridSpec::new(32, 32, 1.0 / 32.0).unwrap();
        let ms = UniformFlow {
            fluid: fluid(),
            velocity: [0.3, -0.2],
            pressure: 1.5,
            x0: [0.4, 0.6],
        };
        let kern = Kernel::new(2.0 * spec.h()).unwrap();
        for r in [
            residue_fields(&ms, spec, 1e-3, 0.2, &kern).unwrap().norms(),
            residue_fields_via_scheme(&ms, spec, 1e-3, 0.2, &kern).unwrap().norms(),
        ] {
            assert!(r.tau < 1e-13 && r.eta < 1e-13 && r.eta_grad < 1e-13, "{r:?}");
            assert!(r.xi.unwrap() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn two_routes_agree_on_taylor_green() {
        let spec = GridSpec::new(32, 32, 1.0 / 32.0).unwrap();
        let tg = TaylorGreen::new(spec, fluid(), 1.0, [1, 2]).unwrap();
        let kern = Kernel::new(2.0 * spec.h()).unwrap();
        let dt = 1e-3;
        let a = residue_fields(&tg, spec, dt, 0.05, &kern).unwrap();
        let b = residue_fields_via_scheme(&tg, spec, dt, 0.05, &kern).unwrap();
        assert!(norm(&(&a.tau - &b.tau)) < 1e-12 * norm(&a.tau).max(1.0));
        assert!(norm(&(&a.eta - &b.eta)) < 1e-12);
        assert!(norm(&a.eta) > 1e-3, "non-trivial η expected for unequal modes");
    }

    #[test]
    fn rotating_flow_particle_residue_is_first_order() {
        let spec = GridSpec::new(16, 16, 1.0 / 16.0).unwrap();
        let ms = RotatingUniformFlow {
            fluid: fluid(),
            speed: 0.5,
            omega: 3.0,
            x0: [0.3, 0.3],
        };
        let kern = Kernel::new(2.0 * spec.h()).unwrap();
        let xi = |dt: f64| residues(&ms, spec, dt, 0.4, &kern).unwrap().xi.unwrap();
        let ratio = xi(4e-3) / xi(1e-3);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
        // uniform flow with its own body force: momentum residue is pure time error
        let r = residues(&ms, spec, 1e-3, 0.4, &kern).unwrap();
        assert!(r.eta < 1e-13);
    }

    #[test]
    fn estimate_order_cases() {
        let hs: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];
        let exact = |p: f64| hs.iter().map(|&h| (h, h.powf(p))).collect::<Vec<_>>();
        assert!((estimate_order(&exact(2.0)).unwrap() - 2.0).abs() < 1e-12);
        assert!((estimate_order(&exact(1.0)).unwrap() - 1.0).abs() < 1e-12);
        let mut rng = StdRng::seed_from_u64(2024);
        let noisy: Vec<_> = hs
            .iter()
            .map(|&h| (h, 3.0 * h.powf(2.2) * (1.0 + rng.random_range(-0.01..0.01))))
            .collect();
        assert!((estimate_order(&noisy).unwrap() - 2.2).abs() < 0.1);
        assert!(estimate_order(&[(0.1, 1.0)]).is_err());
        assert!(estimate_order(&[(0.1, 1.0), (0.05, 0.0)]).is_err());
        assert!(estimate_order(&[(0.05, 1.0), (0.1, 0.5)]).is_err());
    }

    fn tg_config(n: usize) -> SimConfig {
        let spec = GridSpec::new(n, n, 1.0 / n as f64).unwrap();
        SimConfig {
            spec,
            fluid: fluid(),
            particle: ParticleState::at_rest([0.3, 0.4], 0.0),
            kern: Kernel::new(1.0 / 8.0).unwrap(),
            dt: 0.1 / 64.0,
            t_end: 0.1,
            u_mean: None,
            v0: 0.0,
            initial: InitialCondition::TaylorGreen { amplitude: 0.5, modes: [1, 2] },
            output: OutputConfig::default(),
        }
    }

    #[test]
    fn level_configs_halve_h_and_quarter_dt() {
        let cfgs = level_configs(&tg_config(64), 3).unwrap();
        assert_eq!(cfgs.len(), 3);
        assert_eq!(cfgs[0].spec.n1(), 16);
        assert_eq!(cfgs[2].spec.n1(), 64);
        assert_eq!(cfgs[1].spec.h(), 2.0 * cfgs[2].spec.h());
        assert_eq!(cfgs[0].dt, 16.0 * cfgs[2].dt);
        assert!(level_configs(&tg_config(64), 1).is_err());
        let mut odd = tg_config(64);
        odd.spec = GridSpec::new(63, 64, 1.0 / 64.0).unwrap();
        odd.kern = Kernel::new(odd.spec.h() * 4.0).unwrap();
        assert!(level_configs(&odd, 2).is_err());
    }

    #[test]
    fn exact_playback_gives_zero_differences() {
        let base = tg_config(64);
        let tg = TaylorGreen::new(base.spec, base.fluid, 0.5, [1, 2]).unwrap();
        let report = refine_study_with(&base, 3, |cfg| {
            Ok(LevelOutcome {
                u: VectorField::sample(cfg.spec, |x| tg.velocity(x, cfg.t_end)),
                x: [0.25, 0.5],
            })
        })
        .unwrap();
        for r in &report.levels[..2] {
            assert_eq!(r.du_norm, Some(0.0));
            assert_eq!(r.dx_norm, Some(0.0));
        }
        assert_eq!(report.order_u, None);
    }

    #[test]
    fn report_csv_layout() {
        let report = refine_study(&tg_config(32), 2).unwrap();
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "level,h,dt,du_norm,dX_norm,du_sumsq");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("# order p_u="));
        assert!(lines[2].ends_with(",,,"));
    }

    #[test]
    fn failing_level_is_annotated() {
        let err = refine_study_with(&tg_config(32), 2, |cfg| {
            if cfg.spec.n1() == 16 {
                Err(crate::Error::Divergence { step: 3, time: 0.1, what: "velocity" })
            } else {
                simulate_level(cfg)
            }
        })
        .unwrap_err();
        assert!(matches!(err, crate::Error::Level { .. }));
        assert!(err.to_string().contains("step 3"));
    }
}
