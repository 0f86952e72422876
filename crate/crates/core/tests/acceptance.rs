//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use corridor_core::analysis::{
    agreement_fraction, convergence_study, detect_layers, detect_layers_with, sweep_phase_diagram,
    LayerCriteria, SweepSettings,
};
use corridor_core::bvp::{gradient_bound, jacobian, residual, solve};
use corridor_core::exact::{eval_exact, solve_exact};
use corridor_core::geometry::ProfileShape;
use corridor_core::gspt::{build_singular_orbit, Direction};
use corridor_core::{BvpProblem, Solution, WidthProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn closing() -> WidthProfile {
    WidthProfile::linear(2.0, 1.0, 1.0).unwrap()
}

fn straight() -> WidthProfile {
    WidthProfile::constant(1.0, 1.0).unwrap()
}

fn bottleneck(a: f64, b: f64) -> WidthProfile {
    WidthProfile::new(
        ProfileShape::CosineBottleneck {
            kmax: 2.0,
            kmin: 1.0,
            a,
            b,
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

fn solved(k: &WidthProfile, alpha: f64, beta: f64, eps: f64) -> (BvpProblem, Solution) {
    let p = BvpProblem::new(k.clone(), alpha, beta, eps, None).unwrap();
    let sol = solve(&p).unwrap();
    (p, sol)
}

fn exact_vs_numeric() -> Outcome {
    const TOL: f64 = 1e-6;
    const BUDGET: Duration = Duration::from_secs(10);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (alpha, beta) in [(0.3, 0.7), (0.05, 0.2), (0.8, 0.8), (0.4, 0.4)] {
        let p = BvpProblem::new(straight(), alpha, beta, 1e-2, Some(1 << 14)).unwrap();
        let sol = solve(&p).unwrap();
        let exact = solve_exact(alpha, beta, 1e-2, 1.0).unwrap();
        for (x, r) in sol.nodes.iter().zip(&sol.rho) {
            worst = worst.max((r - eval_exact(&exact, *x).unwrap()).abs());
        }
    }
    let took = start.elapsed();
    outcome(
        worst <= TOL && took < BUDGET,
        format!("max |rho_num - rho_exact| = {worst:.3e} (tol {TOL:e}), {took:.2?} (budget {BUDGET:?})"),
    )
}

fn maximal_flux() -> Outcome {
    const TOL: f64 = 1e-4;
    let eps = 1e-2;
    let (_, sol) = solved(&straight(), 0.99, 0.99, eps);
    let upper = 0.25 + (PI * eps).powi(2) + TOL;
    let j = sol.flux_mean;
    outcome(j > 0.25 && j <= upper, format!("J = {j:.6} in (0.25, {upper:.6}]"))
}

fn convergence_rates() -> Outcome {
    const ENDPOINT: (f64, f64) = (0.8, 1.2);
    const L2: (f64, f64) = (0.35, 0.65);
    const BUDGET: Duration = Duration::from_secs(120);
    let start = Instant::now();
    let eps: Vec<f64> = [-2.0, -2.5, -3.0, -3.5, -4.0].iter().map(|e| 10f64.powf(*e)).collect();
    let study = convergence_study(&closing(), 0.052, 0.25, &eps).unwrap();
    let took = start.elapsed();
    let s = study.slopes;
    let inside = |v: f64, (lo, hi): (f64, f64)| (lo..=hi).contains(&v);
    outcome(
        inside(s.endpoint, ENDPOINT) && inside(s.l2, L2) && took < BUDGET,
        format!(
            "endpoint slope {:.3} in {ENDPOINT:?}, L2 slope {:.3} in {L2:?} (slow part {:.3}), {took:.2?} (budget {BUDGET:?})",
            s.endpoint, s.l2, s.l2_slow
        ),
    )
}

fn phase_diagram() -> Outcome {
    const MIN_AGREEMENT: f64 = 0.95;
    const BUDGET: Duration = Duration::from_secs(300);
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let settings = SweepSettings::new(12, 12, 0.05);
    let records = pool.install(|| sweep_phase_diagram(&closing(), 1e-3, &settings)).unwrap();
    let took = start.elapsed();
    let judged = records.iter().filter(|r| r.agree.is_some()).count();
    let frac = agreement_fraction(&records).unwrap_or(0.0);
    outcome(
        frac >= MIN_AGREEMENT && took < BUDGET,
        format!(
            "{:.1}% of {judged} points agree (min {:.0}%), {took:.2?} with 4 workers (budget {BUDGET:?})",
            100.0 * frac,
            100.0 * MIN_AGREEMENT
        ),
    )
}

fn orbit_fidelity() -> Outcome {
    const TOL: f64 = 1e-12;
    const BUDGET: Duration = Duration::from_secs(5);
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst, mut checked, mut label_mismatch) = (0.0f64, 0, 0);
    while checked < 10_000 {
        let k0 = rng.gen_range(0.5..3.0);
        let k1 = k0 * rng.gen_range(0.1..0.99);
        let (alpha, beta) = (rng.gen_range(0.001..0.999), rng.gen_range(0.001..0.999));
        let line = WidthProfile::linear(k0, k1, 1.0).unwrap();
        let Ok(orbit) = build_singular_orbit(&line, alpha, beta) else {
            continue;
        };
        if orbit.region.is_curve() {
            continue;
        }
        let xs: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
        let ks = xs.iter().map(|x| k1 + (k0 - k1) * (1.0 - x * x)).collect();
        let bent = WidthProfile::new(ProfileShape::Table { x: xs, k: ks }, 1.0).unwrap();
        if build_singular_orbit(&bent, alpha, beta).map(|o| o.region).ok() != Some(orbit.region) {
            label_mismatch += 1;
        }
        let j = orbit.j_singular;
        worst = worst
            .max((alpha * (1.0 - orbit.rho0) * k0 - j).abs())
            .max((beta * orbit.rho1 * k1 - j).abs());
        checked += 1;
    }
    let took = start.elapsed();
    outcome(
        worst <= TOL && label_mismatch == 0 && took < BUDGET,
        format!(
            "flux identity defect {worst:.2e} (tol {TOL:e}), {label_mismatch} label mismatches over {checked} points, {took:.2?} (budget {BUDGET:?})"
        ),
    )
}

fn property_suites() -> Outcome {
    const BOX_MIN_TOL: f64 = 1e-6;
    const NEIGHBOUR_TOL: f64 = 1e-8;
    const SYMMETRY_TOL: f64 = 1e-9;
    const JACOBIAN_TOL: f64 = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = Vec::new();
    let mut solves: Vec<(BvpProblem, Solution)> = Vec::new();

    for _ in 0..25 {
        let (alpha, beta) = (rng.gen_range(0.02..0.98), rng.gen_range(0.02..0.98));
        let (p, sol) = solved(&closing(), alpha, beta, 1e-2);
        let r = &sol.rho;
        let strict_min = (1..r.len() - 1).any(|i| r[i] < r[i - 1] - NEIGHBOUR_TOL && r[i] < r[i + 1] - NEIGHBOUR_TOL);
        let low = r.iter().copied().fold(f64::INFINITY, f64::min);
        if strict_min || low < alpha.min(1.0 - beta) - BOX_MIN_TOL {
            failures.push(format!("maximum principle at ({alpha:.3}, {beta:.3})"));
        }
        solves.push((p, sol));
    }

    for k in [closing(), straight(), bottleneck(1.0 / 3.0, 2.0 / 3.0)] {
        for along_alpha in [true, false] {
            let other = rng.gen_range(0.05..0.95);
            let base = rng.gen_range(0.05..0.5);
            let mut fluxes = Vec::new();
            for i in 0..5 {
                let v = base + 0.1 * i as f64;
                let (a, b) = if along_alpha { (v, other) } else { (other, v) };
                let (p, sol) = solved(&k, a, b, 0.05);
                fluxes.push(sol.flux_mean);
                solves.push((p, sol));
            }
            if !fluxes.windows(2).all(|w| w[1] > w[0]) {
                failures.push(format!("flux chain not increasing: {fluxes:?}"));
            }
        }
    }

    let mut worst_mirror = 0.0f64;
    for trial in 0..10 {
        let k = match trial % 4 {
            0 => closing(),
            1 => closing().reflect(),
            2 => bottleneck(rng.gen_range(0.1..0.4), rng.gen_range(0.6..0.9)),
            _ => WidthProfile::constant(rng.gen_range(0.5..2.0), 1.0).unwrap(),
        };
        let (alpha, beta) = (rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95));
        let (p, sol) = solved(&k, alpha, beta, rng.gen_range(0.01..0.1));
        let mirrored = solve(&p.reflected().unwrap()).unwrap();
        let n = sol.rho.len();
        for i in 0..n {
            worst_mirror = worst_mirror.max((sol.rho[i] - 1.0 + mirrored.rho[n - 1 - i]).abs());
        }
        solves.push((p, sol));
    }
    if worst_mirror > SYMMETRY_TOL {
        failures.push(format!("reflection defect {worst_mirror:.2e}"));
    }

    let mut worst_jac = 0.0f64;
    for trial in 0..20 {
        let k = if trial % 2 == 0 {
            closing()
        } else {
            bottleneck(1.0 / 3.0, 2.0 / 3.0)
        };
        let p = BvpProblem::new(k, rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95), 0.05, Some(24)).unwrap();
        let rho: Vec<f64> = (0..p.n_nodes()).map(|_| rng.gen_range(0.01..0.99)).collect();
        let jac = jacobian(&p, &rho).unwrap();
        let step = 1e-6;
        for col in 0..rho.len() {
            let (mut plus, mut minus) = (rho.clone(), rho.clone());
            plus[col] += step;
            minus[col] -= step;
            let (rp, rm) = (residual(&p, &plus).unwrap(), residual(&p, &minus).unwrap());
            for row in 0..rho.len() {
                let fd = (rp[row] - rm[row]) / (2.0 * step);
                let exact = jac.get(row, col);
                worst_jac = worst_jac.max((fd - exact).abs() / exact.abs().max(1.0));
            }
        }
    }
    if worst_jac > JACOBIAN_TOL {
        failures.push(format!("jacobian defect {worst_jac:.2e}"));
    }

    for (p, sol) in &solves {
        if !sol.rho.iter().all(|r| *r > 0.0 && *r < 1.0) {
            failures.push("density left (0, 1)".into());
        }
        if sol.gradient_l2() > gradient_bound(p) * (1.0 + 1e-6) {
            failures.push(format!("gradient {} above bound {}", sol.gradient_l2(), gradient_bound(p)));
        }
    }
    let detail = format!(
        "{} solves, reflection defect {worst_mirror:.2e} (tol {SYMMETRY_TOL:e}), jacobian defect {worst_jac:.2e} (tol {JACOBIAN_TOL:e})",
        solves.len()
    );
    if failures.is_empty() {
        outcome(true, detail)
    } else {
        outcome(false, format!("{detail}; {}", failures.join("; ")))
    }
}

fn bottleneck_goldens() -> Outcome {
    use Direction::{Decreasing, Increasing};
    let eps = 1e-2;
    // (alpha, beta, threshold, left, right, interior crossing)
    let goldens = [
        (0.1, 0.75, 0.05, None, None, false),
        (0.2, 0.75, 0.05, Some(Increasing), None, true),
        (0.5, 0.5, 0.05, Some(Increasing), Some(Increasing), true),
        (0.8, 0.8, 0.05, None, None, true),
        (0.75, 0.2, 0.05, None, Some(Increasing), true),
        (0.75, 0.1, 0.05, None, None, false),
        (0.2, 0.1, 0.005, Some(Increasing), None, false),
        (0.99, 0.1, 0.005, Some(Decreasing), None, false),
        (0.2, 0.2, 0.05, Some(Increasing), Some(Increasing), true),
        (0.15, 0.15, 0.05, None, None, true),
        (0.1, 0.2, 0.005, None, Some(Increasing), false),
        (0.1, 0.99, 0.005, None, Some(Decreasing), false),
    ];
    let mut mismatches = Vec::new();
    let mut count = 0;
    for (name, k) in [("smooth", bottleneck(1.0 / 3.0, 2.0 / 3.0)), ("stepped", stepped())] {
        for (alpha, beta, threshold, left, right, crossing) in goldens {
            let (_, sol) = solved(&k, alpha, beta, eps);
            let rep = if threshold == 0.05 {
                detect_layers(&sol, eps)
            } else {
                detect_layers_with(&sol, eps, &LayerCriteria { threshold, ..LayerCriteria::default() })
            };
            if (rep.directions(), rep.interior_crossing.is_some()) != ((left, right), crossing) {
                mismatches.push(format!("{name} ({alpha}, {beta})"));
            }
            count += 1;
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "{} of {count} bottleneck layer goldens match{}",
            count - mismatches.len(),
            if mismatches.is_empty() {
                String::new()
            } else {
                format!("; mismatched: {}", mismatches.join(", "))
            }
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("exact vs numeric, straight corridor", exact_vs_numeric),
        ("maximal flux, straight corridor", maximal_flux),
        ("convergence rates, closing corridor", convergence_rates),
        ("phase diagram agreement", phase_diagram),
        ("singular orbit formulas", orbit_fidelity),
        ("property suites", property_suites),
        ("bottleneck layer goldens", bottleneck_goldens),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        all &= o.pass;
        println!(
            "criterion {} {name}: {} ({})",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
