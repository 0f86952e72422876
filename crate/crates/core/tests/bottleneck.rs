//! Regression goldens for the layer structure of bottleneck corridors at
//! `eps = 1e-2`, one group per qualitative observation.

use corridor_core::analysis::{detect_layers_with, LayerCriteria, LayerReport};
use corridor_core::bvp::solve;
use corridor_core::geometry::ProfileShape;
use corridor_core::gspt::Direction::{self, Decreasing, Increasing};
use corridor_core::{BvpProblem, WidthProfile};

const EPS: f64 = 1e-2;

fn smooth() -> WidthProfile {
    WidthProfile::new(
        ProfileShape::CosineBottleneck {
            kmax: 2.0,
            kmin: 1.0,
            a: 1.0 / 3.0,
            b: 2.0 / 3.0,
        },
        1.0,
    )
    .unwrap()
}

fn stepped() -> WidthProfile {
    WidthProfile::new(
        ProfileShape::Piecewise {
            points: vec![[0.0, 2.0], [1.0 / 3.0, 1.0], [2.0 / 3.0, 2.0]],
        },
        1.0,
    )
    .unwrap()
}

fn report(k: &WidthProfile, alpha: f64, beta: f64, threshold: f64) -> (LayerReport, f64, Vec<f64>) {
    let p = BvpProblem::new(k.clone(), alpha, beta, EPS, None).unwrap();
    let sol = solve(&p).unwrap();
    let criteria = LayerCriteria {
        threshold,
        ..LayerCriteria::default()
    };
    (detect_layers_with(&sol, EPS, &criteria), sol.flux_mean, sol.rho)
}

struct Golden {
    alpha: f64,
    beta: f64,
    left: Option<Direction>,
    right: Option<Direction>,
    crossing: bool,
}

const fn g(alpha: f64, beta: f64, left: Option<Direction>, right: Option<Direction>, crossing: bool) -> Golden {
    Golden {
        alpha,
        beta,
        left,
        right,
        crossing,
    }
}

fn check(goldens: &[Golden], threshold: f64) {
    for k in [smooth(), stepped()] {
        for gold in goldens {
            let (rep, _, _) = report(&k, gold.alpha, gold.beta, threshold);
            assert_eq!(
                (rep.directions(), rep.interior_crossing.is_some()),
                ((gold.left, gold.right), gold.crossing),
                "{:?} at ({}, {}): {rep:?}",
                k.shape(),
                gold.alpha,
                gold.beta
            );
        }
    }
}

#[test]
fn low_density_gives_way_as_alpha_grows() {
    check(
        &[
            g(0.1, 0.75, None, None, false),
            g(0.2, 0.75, Some(Increasing), None, true),
            g(0.3, 0.75, Some(Increasing), None, true),
        ],
        0.05,
    );
}

#[test]
fn high_flux_quadrant_straddles_one_half() {
    check(
        &[
            g(0.5, 0.5, Some(Increasing), Some(Increasing), true),
            g(0.8, 0.8, None, None, true),
        ],
        0.05,
    );
    for k in [smooth(), stepped()] {
        let (_, flux, rho) = report(&k, 0.8, 0.8, 0.05);
        assert!(rho[0] > 0.5 && rho[rho.len() - 1] < 0.5);
        // more than the waist alone could carry without diffusion
        assert!(flux > 0.25, "{flux}");
    }
}

#[test]
fn high_density_sets_in_as_beta_shrinks() {
    check(
        &[
            g(0.75, 0.3, None, Some(Increasing), true),
            g(0.75, 0.2, None, Some(Increasing), true),
            g(0.75, 0.1, None, None, false),
        ],
        0.05,
    );
}

#[test]
fn high_density_left_layer_turns_with_alpha() {
    check(
        &[
            g(0.2, 0.1, Some(Increasing), None, false),
            g(0.5, 0.1, Some(Increasing), None, false),
            g(0.99, 0.1, Some(Decreasing), None, false),
        ],
        0.005,
    );
}

#[test]
fn diagonal_layers_migrate_inwards() {
    check(
        &[
            g(0.4, 0.4, Some(Increasing), Some(Increasing), true),
            g(0.2, 0.2, Some(Increasing), Some(Increasing), true),
            g(0.15, 0.15, None, None, true),
            g(0.1, 0.1, None, None, true),
        ],
        0.05,
    );
    for k in [smooth(), stepped()] {
        let heights: Vec<f64> = [0.5, 0.4, 0.3, 0.2]
            .iter()
            .map(|&a| report(&k, a, a, 0.05).0.left.unwrap().height)
            .collect();
        assert!(heights.windows(2).all(|w| w[1] > w[0]), "{heights:?}");
    }
}

#[test]
fn low_density_right_layer_turns_with_beta() {
    check(
        &[
            g(0.1, 0.2, None, Some(Increasing), false),
            g(0.1, 0.5, None, Some(Increasing), false),
            g(0.1, 0.99, None, Some(Decreasing), false),
        ],
        0.005,
    );
}

#[test]
fn bottlenecks_have_no_singular_prediction() {
    for k in [smooth(), stepped()] {
        assert!(corridor_core::gspt::build_singular_orbit(&k, 0.3, 0.6).is_err());
    }
}
