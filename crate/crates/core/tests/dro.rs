mod common;

use approx::assert_relative_eq;
use common::{highway, load, random_schedule, random_tiny, spec};
use drvsl_core::dro::{self, wasserstein_radius, CertStatus, RadiusParams};
use drvsl_core::formulation::InstanceData;
use drvsl_core::SpeedSchedule;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn radius_shrinks_with_more_samples() {
    let p = |n| RadiusParams { beta: 0.05, n, ell: 100, a: 2.0, c1: 1.0, c2: 1.0 };
    let r: Vec<f64> = [10, 100, 1000, 10000].iter().map(|&n| wasserstein_radius(&p(n)).unwrap()).collect();
    assert!(r.windows(2).all(|w| w[1] < w[0]), "{r:?}");
}

#[test]
fn huge_radius_makes_certificate_vacuous() {
    let cfg = load("tiny.json");
    let inst = cfg.instance(cfg.training_samples().unwrap(), 1e9);
    let c = dro::certificate(&inst, &SpeedSchedule::constant(&inst.cfg, 0));
    assert_eq!(c.status, CertStatus::Finite);
    assert_eq!(c.value, Some(0.0));
}

#[test]
fn congested_samples_exceed_a_zero_budget() {
    // one edge (no interior demand rows) starting above ρᶜ(120) ≈ 250
    let cfg = highway(1, 3, vec![60.0, 120.0]);
    let mut sp = spec(0);
    sp.rho0 = drvsl_core::scenario::Range::point(300.0);
    let samples = sp.draw_many(&cfg, 2, &mut drvsl_core::scenario::rng_for(0, 0));
    let inst = InstanceData::new(cfg, samples, 0.0).unwrap();
    let c = dro::certificate(&inst, &SpeedSchedule::constant(&inst.cfg, 1));
    assert!(matches!(c.status, CertStatus::OverBudget { excess } if excess > 0.0), "{c:?}");
    assert!(c.value.is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn certificate_is_nonincreasing_in_radius(seed in any::<u64>(), a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_tiny(&mut rng);
        let u = random_schedule(&inst.cfg, &mut rng);
        let (lo, hi) = (a.min(b), a.max(b));
        let j_lo = dro::certificate(&inst.with_epsilon(lo), &u).value;
        let j_hi = dro::certificate(&inst.with_epsilon(hi), &u).value;
        if let Some(jl) = j_lo {
            let jh = j_hi.expect("finite at the smaller radius implies finite at the larger");
            prop_assert!(jh <= jl + 1e-9 * jl.abs().max(1.0));
        }
    }

    #[test]
    fn zero_radius_certificate_is_the_sample_average(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_tiny(&mut rng).with_epsilon(0.0);
        let u = random_schedule(&inst.cfg, &mut rng);
        let ev = dro::evaluate(&inst, &u);
        if let Some(j) = ev.certificate.value {
            let h = ev.trajs.iter().map(|t| drvsl_core::ctm::average_flow(&inst.cfg, &u, &t.rho)).sum::<f64>()
                / inst.n_samples() as f64;
            assert_relative_eq!(j, h, max_relative = 1e-9);
        }
    }
}
