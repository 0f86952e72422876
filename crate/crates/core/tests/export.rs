use std::fs;
use std::io::BufWriter;
use std::path::Path;

use corridor_core::analysis::convergence_study;
use corridor_core::bvp::solve;
use corridor_core::export::{
    write_convergence_csv, write_json, write_orbit_csv, write_solution_csv, OrbitMeta, SolutionMeta,
    CONVERGENCE_HEADER,
};
use corridor_core::gspt::build_singular_orbit;
use corridor_core::{BvpProblem, Result, WidthProfile};
use serde_json::Value;

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> Result<()>) {
    let mut out = BufWriter::new(fs::File::create(path).unwrap());
    f(&mut out).unwrap();
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn flux_error_matches_exported_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let k = WidthProfile::linear(2.0, 1.0, 1.0).unwrap();
    let (alpha, beta) = (0.052, 0.25);
    let eps_list = [0.1, 0.05, 0.025, 0.0125];
    let study = convergence_study(&k, alpha, beta, &eps_list).unwrap();
    let orbit = build_singular_orbit(&k, alpha, beta).unwrap();

    write_file(&dir.path().join("convergence.csv"), |o| write_convergence_csv(o, &study));
    write_file(&dir.path().join("orbit.json"), |o| write_json(o, &OrbitMeta::from(&orbit)));
    let j_singular = read_json(&dir.path().join("orbit.json"))["J_singular"].as_f64().unwrap();

    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CONVERGENCE_HEADER));
    for (line, eps) in lines.zip(eps_list) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols[0], eps);
        let sol = solve(&BvpProblem::new(k.clone(), alpha, beta, eps, None).unwrap()).unwrap();
        let side = dir.path().join(format!("solution_{eps}.json"));
        write_file(&side, |o| write_json(o, &SolutionMeta::from(&sol)));
        let mean = read_json(&side)["J_mean"].as_f64().unwrap();
        assert_eq!(cols[3], (mean - j_singular).abs());
    }
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let k = WidthProfile::linear(2.0, 1.0, 1.0).unwrap();
    let orbit = build_singular_orbit(&k, 0.5, 0.8).unwrap();
    let mut files = Vec::new();
    for run in 0..2 {
        let sol = solve(&BvpProblem::new(k.clone(), 0.5, 0.8, 0.02, None).unwrap()).unwrap();
        let a = dir.path().join(format!("solution{run}.csv"));
        let b = dir.path().join(format!("orbit{run}.csv"));
        write_file(&a, |o| write_solution_csv(o, &sol));
        write_file(&b, |o| write_orbit_csv(o, &orbit, &k, 101));
        files.push((fs::read(a).unwrap(), fs::read(b).unwrap()));
    }
    assert_eq!(files[0], files[1]);
    assert!(!files[0].0.contains(&b'\r'));
}
