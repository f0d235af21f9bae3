//! End-to-end use of the public API: CSV in, estimates, selection and lag scan out.

use imbal_core::dataset::{load_csv, read_csv, synthesize, write_csv};
use imbal_core::{
    classify, greedy_forward, information_imbalance, lag_scan, plane_point, DistanceSpec, ImbalanceOptions, LagSpec,
    ObjectiveMode, Relationship, SelectionObjective, SynthKind, SynthSpec, Thresholds,
};

#[test]
fn csv_round_trip_preserves_estimates() {
    let ds = synthesize(&SynthSpec { kind: SynthKind::Spiral { noise: 0.05 }, n: 400, seed: 2 }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spiral.csv");
    write_csv(&ds, std::fs::File::create(&path).unwrap()).unwrap();
    let back = load_csv(&path, None, None).unwrap();
    assert_eq!(back.dropped, 0);
    assert_eq!(back.dataset, ds);

    let xy = DistanceSpec::from_names(&ds, &["x", "y"]).unwrap();
    let z = DistanceSpec::from_names(&ds, &["z"]).unwrap();
    let a = information_imbalance(&ds, &xy, &z, &ImbalanceOptions::default()).unwrap();
    let b = information_imbalance(&back.dataset, &xy, &z, &ImbalanceOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sine_curve_position_predicts_height() {
    let ds = synthesize(&SynthSpec { kind: SynthKind::Sine { noise: 0.01 }, n: 500, seed: 3 }).unwrap();
    let x = DistanceSpec::from_names(&ds, &["x"]).unwrap();
    let y = DistanceSpec::from_names(&ds, &["y"]).unwrap();
    let pp = plane_point(&ds, &x, &y, &ImbalanceOptions::default(), "x|y").unwrap();
    // x determines y, while each height is reached at two positions.
    assert!(pp.delta_ab < 0.05, "{pp:?}");
    assert!(pp.delta_ba > pp.delta_ab + 0.05, "{pp:?}");
    assert_ne!(classify(&pp, Thresholds::default()).class, Relationship::Independent);
}

#[test]
fn grouped_panel_from_csv() {
    let mut text = String::from("site,step,a,b\n");
    for site in ["north", "south", "east"] {
        for step in 0..25 {
            let a = ((step * 37 + site.len() * 11) % 23) as f64;
            text.push_str(&format!("{site},{step},{a},{}\n", (step * step) % 19));
        }
    }
    let ds = read_csv(text.as_bytes(), Some("site"), Some("step")).unwrap().dataset;
    let spec = LagSpec {
        group_col: Some("site".into()),
        time_col: "step".into(),
        source_cols: vec!["a".into()],
        target_cols: vec!["b".into()],
        lags: vec![-2, 0, 2],
    };
    let res = lag_scan(&ds, &spec, &ImbalanceOptions::default()).unwrap();
    let counts: Vec<usize> = res.records.iter().map(|r| r.pairs).collect();
    assert_eq!(counts, vec![69, 75, 69]);
}

#[test]
fn greedy_compresses_toward_the_dominant_columns() {
    let ds =
        synthesize(&SynthSpec { kind: SynthKind::GaussAniso3d { sigmas: [1.0, 1.0, 0.1] }, n: 400, seed: 4 }).unwrap();
    let full = DistanceSpec::from_names(&ds, &["x", "y", "z"]).unwrap();
    let obj = SelectionObjective::new(full, ObjectiveMode::Symmetric);
    let trace = greedy_forward(&ds, &["x", "y", "z"], &obj, 2).unwrap();
    let mut chosen = trace.steps[1].subset.clone();
    chosen.sort();
    assert_eq!(chosen, vec!["x", "y"]);
    assert!(trace.steps[1].eval.objective < trace.steps[0].eval.objective);
}
