mod common;

use nashplan::dynamics::AgentModel;
use nashplan::game::build_potential_ocp;
use nashplan::ilqr;
use nashplan::scenarios::{self, sample_initials, MonteCarloConfig};
use nashplan::Error;

const BUILTINS: [&str; 3] = ["intersection3", "quad_swap", "quad_diagonal"];

#[test]
fn documents_round_trip() {
    for name in BUILTINS {
        let cfg = scenarios::builtin(name).unwrap();
        let back = scenarios::load(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }
}

#[test]
fn builtins_are_symmetric_and_solve() {
    for name in BUILTINS {
        let cfg = scenarios::builtin(name).unwrap();
        let game = cfg.full_game().unwrap();
        assert!(game.validate_symmetry().passed());
        assert!(game.sample_symmetry(50, 1).passed());
        let ocp = build_potential_ocp(&game.with_horizon(cfg.plan_horizon_steps()).unwrap()).unwrap();
        let sol = ilqr::solve(&ocp, &cfg.initial_state(), None, &cfg.solver).unwrap();
        assert!(sol.report.converged, "{name}");
        assert!(sol.report.is_monotone(), "{name}");
    }
}

#[test]
fn samples_stay_inside_the_box() {
    let mc = MonteCarloConfig::default();
    let base = scenarios::intersection3();
    for k in 0..mc.samples {
        let cfg = sample_initials(&mc, &base, k).unwrap();
        assert_eq!(cfg.full_horizon_steps(), 50);
        for (a, b) in cfg.agents.iter().zip(&base.agents) {
            assert_eq!(a.model, AgentModel::Unicycle4);
            assert!(a.start[0] >= -10.0 && a.start[0] < 10.0);
            assert!(a.start[1] >= -10.0 && a.start[1] < 10.0);
            assert!(a.start[2] >= -std::f64::consts::PI && a.start[2] < std::f64::consts::PI);
            assert!(a.start[3] >= 0.0 && a.start[3] < 3.0);
            assert_eq!(a.goal, b.goal);
        }
    }
}

#[test]
fn malformed_documents_are_rejected() {
    assert!(scenarios::load("{").is_err());
    assert!(scenarios::load("[]").is_err());
    let mut cfg = scenarios::intersection3();
    cfg.timing.dt = 0.0;
    assert!(scenarios::load(&cfg.to_json()).is_err());
    let mut cfg = scenarios::intersection3();
    cfg.agents.clear();
    assert!(scenarios::load(&cfg.to_json()).is_err());
    assert!(matches!(scenarios::builtin("circle"), Err(Error::UnknownScenario(_))));
}
