use corridor_core::analysis::detect_layers;
use corridor_core::bvp::{continuation_solve, flux_of, newton_solve, residual, solve, DEFAULT_MAX_ITER};
use corridor_core::exact::j_max;
use corridor_core::geometry::ProfileShape;
use corridor_core::gspt::Direction;
use corridor_core::{BvpProblem, Error, WidthProfile};

fn closing() -> WidthProfile {
    WidthProfile::linear(2.0, 1.0, 1.0).unwrap()
}

#[test]
fn continuation_reaches_type_one_layer() {
    let p = BvpProblem::new(closing(), 0.052, 0.25, 1e-3, None).unwrap();
    let sol = continuation_solve(&p, 1.0, 0.5, 1e-10).unwrap();
    assert_eq!(sol.continuation_steps, 11);
    let res = residual(&p, &sol.rho).unwrap();
    assert!(res.iter().all(|r| r.abs() <= 1e-10));
    let last = sol.rho[sol.rho.len() - 1];
    assert!((last - 0.394).abs() < 5e-3, "{last}");
    let rep = detect_layers(&sol, 1e-3);
    assert!(rep.left.is_none());
    assert_eq!(rep.right.map(|l| l.direction), Some(Direction::Increasing));
}

#[test]
fn small_eps_needs_continuation() {
    let p = BvpProblem::new(WidthProfile::constant(1.0, 1.0).unwrap(), 0.8, 0.8, 1e-4, None).unwrap();
    match newton_solve(&p, &vec![0.5; p.n_nodes()], 1e-10, DEFAULT_MAX_ITER) {
        Ok(_) | Err(Error::NonConvergence { .. }) => {}
        Err(e) => panic!("unexpected error {e}"),
    }
    let sol = solve(&p).unwrap();
    assert!(sol.continuation_steps > 1);
    assert!(sol.flux_mean > 0.25 && sol.flux_mean <= j_max(1e-4, 1.0).0);
}

#[test]
fn smooth_bottleneck_crosses_half_at_waist() {
    let k = WidthProfile::new(
        ProfileShape::CosineBottleneck {
            kmax: 2.0,
            kmin: 1.0,
            a: 1.0 / 3.0,
            b: 2.0 / 3.0,
        },
        1.0,
    )
    .unwrap();
    let p = BvpProblem::new(k, 0.5, 0.5, 1e-2, None).unwrap();
    let sol = solve(&p).unwrap();
    let x = detect_layers(&sol, 1e-2).interior_crossing.unwrap();
    assert!((x - 0.5).abs() < 0.05, "{x}");
    assert!(sol.rho[0] > 0.5 && sol.rho[sol.rho.len() - 1] < 0.5);
}

#[test]
fn straight_flux_stays_below_maximum() {
    let p = BvpProblem::new(WidthProfile::constant(1.0, 1.0).unwrap(), 0.8, 0.8, 1e-2, None).unwrap();
    let (mean, _) = flux_of(&solve(&p).unwrap());
    let (bound, _) = j_max(1e-2, 1.0);
    assert!((bound - 0.2509869).abs() < 1e-7);
    assert!(mean > 0.25 && mean <= bound, "{mean}");
}

#[test]
fn flux_deviation_is_second_order() {
    let devs: Vec<f64> = [64, 128, 256, 512]
        .iter()
        .map(|&n| {
            let p = BvpProblem::new(closing(), 0.3, 0.6, 0.1, Some(n)).unwrap();
            flux_of(&solve(&p).unwrap()).1
        })
        .collect();
    for w in devs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((4.0 / 1.5..=4.0 * 1.5).contains(&ratio), "{devs:?}");
    }
}

#[test]
fn raising_alpha_raises_flux() {
    let flux = |alpha| {
        let p = BvpProblem::new(closing(), alpha, 0.25, 0.1, None).unwrap();
        newton_solve(&p, &vec![0.5; p.n_nodes()], 1e-10, DEFAULT_MAX_ITER)
            .unwrap()
            .flux_mean
    };
    assert!(flux(0.06) > flux(0.052));
}
