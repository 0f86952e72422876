use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use corridor_core::analysis::{
    agreement_fraction, convergence_study_with, detect_layers_with, predict, ConvergenceRecord, LayerReport,
    Prediction, Slopes, SweepSettings,
};
use corridor_core::bvp::default_cells;
use corridor_core::exact::solve_exact;
use corridor_core::export::{
    write_convergence_csv, write_exact_csv, write_json, write_orbit_csv, write_solution_csv, write_sweep_csv,
    ExactMeta, OrbitMeta, SolutionMeta,
};
use corridor_core::geometry::ProfileShape;
use corridor_core::gspt::build_singular_orbit;
use corridor_core::{BvpProblem, Error, ValidationReport, WidthProfile};
use serde::Serialize;

use crate::config::ScenarioConfig;

pub struct Outputs {
    dir: PathBuf,
}

impl Outputs {
    pub fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self { dir })
    }

    fn write(&self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> corridor_core::Result<()>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut out = BufWriter::new(file);
        f(&mut out).with_context(|| format!("cannot write {}", path.display()))?;
        out.flush().with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        self.write(name, |o| write_json(o, value))
    }
}

fn profile(config: &ScenarioConfig) -> Result<WidthProfile> {
    Ok(WidthProfile::new(config.profile.clone(), config.length)?)
}

fn rates(config: &ScenarioConfig) -> Result<(f64, f64)> {
    Ok((config.require("alpha", config.alpha)?, config.require("beta", config.beta)?))
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

#[derive(Serialize)]
struct SolveSidecar<'a> {
    #[serde(flatten)]
    meta: SolutionMeta,
    layers: LayerReport,
    prediction: Option<Prediction>,
    agree: Option<bool>,
    config: &'a ScenarioConfig,
}

pub fn solve(config: &ScenarioConfig, out: &Outputs) -> Result<()> {
    let k = profile(config)?;
    let (alpha, beta) = rates(config)?;
    let eps = config.require("epsilon", config.epsilon)?;
    let problem = BvpProblem::new(k.clone(), alpha, beta, eps, config.n_cells)?;
    let sol = config.continuation.solve(&problem)?;
    let layers = detect_layers_with(&sol, eps, &config.layers);
    let prediction = predict(&k, alpha, beta, &config.layers).ok();
    let sidecar = SolveSidecar {
        meta: SolutionMeta::from(&sol),
        layers,
        prediction,
        agree: prediction.map(|p| layers.directions() == (p.left, p.right)),
        config,
    };
    report(&[
        out.write("solution.csv", |o| write_solution_csv(o, &sol))?,
        out.json("solution.json", &sidecar)?,
    ]);
    println!(
        "J = {} after {} newton iterations over {} continuation steps",
        sol.flux_mean, sol.newton_iters, sol.continuation_steps
    );
    Ok(())
}

#[derive(Serialize)]
struct OrbitSidecar<'a> {
    #[serde(flatten)]
    meta: OrbitMeta,
    config: &'a ScenarioConfig,
}

pub fn singular(config: &ScenarioConfig, out: &Outputs) -> Result<()> {
    let k = profile(config)?;
    let (alpha, beta) = rates(config)?;
    let orbit = build_singular_orbit(&k, alpha, beta)?;
    report(&[
        out.write("orbit.csv", |o| write_orbit_csv(o, &orbit, &k, config.orbit_samples))?,
        out.json(
            "orbit.json",
            &OrbitSidecar {
                meta: OrbitMeta::from(&orbit),
                config,
            },
        )?,
    ]);
    println!("region {}, orbit type {}, J = {}", orbit.region, orbit.orbit_type, orbit.j_singular);
    Ok(())
}

#[derive(Serialize)]
struct ExactSidecar<'a> {
    #[serde(flatten)]
    meta: ExactMeta,
    config: &'a ScenarioConfig,
}

pub fn exact(config: &ScenarioConfig, out: &Outputs) -> Result<()> {
    let ProfileShape::Constant { k0 } = config.profile else {
        return Err(Error::UnsupportedProfile("exact profiles require constant k".into()).into());
    };
    profile(config)?;
    let (alpha, beta) = rates(config)?;
    let eps = config.require("epsilon", config.epsilon)?;
    let exact = solve_exact(alpha, beta, eps, config.length)?;
    let n_cells = config.n_cells.unwrap_or_else(|| default_cells(config.length, eps));
    report(&[
        out.write("exact.csv", |o| write_exact_csv(o, &exact, k0, n_cells))?,
        out.json(
            "exact.json",
            &ExactSidecar {
                meta: ExactMeta::new(&exact, k0, n_cells),
                config,
            },
        )?,
    ]);
    println!("{:?} profile, J = {}", exact.shape, k0 * exact.flux);
    Ok(())
}

#[derive(Serialize)]
struct SweepSidecar<'a> {
    points: usize,
    judged: usize,
    failed: usize,
    agreement: Option<f64>,
    config: &'a ScenarioConfig,
}

pub fn sweep(config: &ScenarioConfig, out: &Outputs) -> Result<()> {
    let k = profile(config)?;
    let eps = config.require("epsilon", config.epsilon)?;
    let settings = SweepSettings {
        criteria: config.layers,
        solver: config.continuation,
        n_cells: config.n_cells,
        ..SweepSettings::new(config.sweep.n_alpha, config.sweep.n_beta, config.sweep.margin)
    };
    let records = corridor_core::analysis::sweep_phase_diagram(&k, eps, &settings)?;
    let sidecar = SweepSidecar {
        points: records.len(),
        judged: records.iter().filter(|r| r.agree.is_some()).count(),
        failed: records.iter().filter(|r| r.error.is_some()).count(),
        agreement: agreement_fraction(&records),
        config,
    };
    report(&[
        out.write("sweep.csv", |o| write_sweep_csv(o, &records))?,
        out.json("sweep.json", &sidecar)?,
    ]);
    match sidecar.agreement {
        Some(a) => println!("{} points, {:.1}% agree with the singular limit", sidecar.points, 100.0 * a),
        None => println!("{} points, no singular prediction available", sidecar.points),
    }
    Ok(())
}

#[derive(Serialize)]
struct ConvergenceSidecar<'a> {
    slopes: Slopes,
    records: &'a [ConvergenceRecord],
    config: &'a ScenarioConfig,
}

pub fn converge(config: &ScenarioConfig, out: &Outputs) -> Result<()> {
    let k = profile(config)?;
    let (alpha, beta) = rates(config)?;
    let study = convergence_study_with(
        &k,
        alpha,
        beta,
        &config.converge.eps_list,
        &config.continuation,
        &config.layers,
    )?;
    report(&[
        out.write("convergence.csv", |o| write_convergence_csv(o, &study))?,
        out.json(
            "convergence.json",
            &ConvergenceSidecar {
                slopes: study.slopes,
                records: &study.records,
                config,
            },
        )?,
    ]);
    let s = study.slopes;
    println!("slopes: endpoint {}, L2 {}, flux {}", s.endpoint, s.l2, s.flux);
    Ok(())
}

#[derive(Serialize)]
struct ValidationSidecar<'a> {
    #[serde(flatten)]
    report: ValidationReport,
    config: &'a ScenarioConfig,
}

pub fn validate(config: &ScenarioConfig, out: &Outputs) -> Result<()> {
    let report_ = profile(config)?.validate();
    println!(
        "positive: {}, monotone decreasing: {}, smooth: {}, breakpoints: {:?}",
        report_.positive, report_.monotone_decreasing, report_.smooth, report_.breakpoints
    );
    let path = out.json(
        "validation.json",
        &ValidationSidecar {
            report: report_,
            config,
        },
    )?;
    report(&[path]);
    Ok(())
}

pub fn out_dir(config: &ScenarioConfig, flag: Option<&Path>) -> PathBuf {
    flag.map_or_else(|| config.output.clone(), Path::to_path_buf)
}
