use super::*;
use crate::graphs::WeightFunction;

#[test]
fn minimal_document_gets_defaults() {
    let s = parse_spec(r#"{"experiment": "mst_clt"}"#).unwrap();
    assert_eq!(s.alpha, 0.5);
    assert_eq!(s.replicas, 200);
    assert_eq!(s.dimension, 2);
    assert_eq!(s.scales, vec![8.0, 12.0, 16.0, 24.0, 32.0]);
    assert_eq!(s.theta, 1.1);
}

#[test]
fn alpha_out_of_range_names_the_exponent() {
    let e = parse_spec(r#"{"experiment": "mst_clt", "alpha": 1.5}"#).unwrap_err();
    match &e {
        SpecError::Domain { field, reason } => {
            assert_eq!(field, "alpha");
            assert!(reason.contains("inner scale exponent"));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(e.to_string().contains("inner scale exponent"));
}

#[test]
fn syntax_errors_carry_position() {
    let e = parse_spec("{\n  \"experiment\": \"mst_clt\",\n  oops\n}").unwrap_err();
    match e {
        SpecError::Syntax { line, column, .. } => {
            assert_eq!(line, 3);
            assert!(column > 0);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unknown_keys_and_domain_violations_rejected() {
    assert!(matches!(
        parse_spec(r#"{"experiment": "mst_clt", "replica": 100}"#),
        Err(SpecError::Syntax { .. })
    ));
    for (doc, field) in [
        (r#"{"experiment": "mst_clt", "replicas": 29}"#, "replicas"),
        (r#"{"experiment": "mst_clt", "scales": [8, 8]}"#, "scales"),
        (r#"{"experiment": "mst_clt", "scales": [16, 8]}"#, "scales"),
        (r#"{"experiment": "mst_clt", "dimension": 4}"#, "dimension"),
        (r#"{"experiment": "radius_tails", "radius_kind": "wall_failure", "scales": [2], "thresholds": [5]}"#, "thresholds"),
    ] {
        match parse_spec(doc) {
            Err(SpecError::Domain { field: f, .. }) => assert_eq!(f, field, "{doc}"),
            other => panic!("{doc}: {other:?}"),
        }
    }
}

#[test]
fn emit_parse_round_trip() {
    let mut s = ExperimentSpec::new(ExperimentKind::PsiDecay);
    s.weight = WeightFunction::Truncated {
        psi: crate::graphs::Profile::Power(2.0),
        r: f64::INFINITY,
    };
    s.cutoff = Some(3.5);
    s.format = Some(OutputFormat::Json);
    let back = parse_spec(&emit_spec(&s)).unwrap();
    assert_eq!(back, s);
    assert_eq!(back.hash(), s.hash());
}

#[test]
fn hash_changes_with_spec() {
    let a = ExperimentSpec::new(ExperimentKind::MstClt);
    let mut b = a.clone();
    b.seed = 1;
    assert_ne!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
}

fn small(kind: ExperimentKind) -> ExperimentSpec {
    let mut s = ExperimentSpec::new(kind);
    s.scales = vec![10.0, 20.0];
    s.replicas = 30;
    s.seed = 1;
    s
}

#[test]
fn mst_campaign_two_rows_byte_identical() {
    let s = small(ExperimentKind::MstClt);
    let a = run_experiment(&s).unwrap();
    let b = run_experiment(&s).unwrap();
    assert_eq!(a.rows.len(), 2);
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.to_json(), b.to_json());
    assert!(a.rows.iter().all(|r| r.d_k.is_some() && r.variance > 0.0));
}

#[test]
fn psi_with_full_inner_window_is_zero() {
    for target in [PsiTarget::Components, PsiTarget::Mst] {
        let mut s = small(ExperimentKind::PsiDecay);
        s.full_inner_window = true;
        s.target = target;
        s.scales = vec![4.0, 6.0];
        let r = run_experiment(&s).unwrap();
        for row in &r.rows {
            assert_eq!(row.psi_sup, Some(0.0));
            assert!(row.discrepancy.as_ref().unwrap().per_site.iter().all(|p| p.mean == 0.0));
        }
    }
}

#[test]
fn tiny_radius_components_match_point_count() {
    let mut s = small(ExperimentKind::ComponentsClt);
    s.radius = 1e-7;
    s.replicas = 100;
    s.scales = vec![5.0];
    let r = run_experiment(&s).unwrap();
    let row = &r.rows[0];
    let expected = 100.0;
    let se = (row.variance / row.replicas as f64).sqrt();
    assert!((row.mean - expected).abs() <= 3.0 * se, "mean {} se {}", row.mean, se);
}

#[test]
fn empty_campaign_writes_header_only_csv() {
    let s = small(ExperimentKind::MstClt);
    let r = Report {
        experiment: s.experiment,
        spec_hash: s.hash(),
        seed: s.seed,
        version: "0".into(),
        spec: s,
        rows: vec![],
        variance_fit: None,
    };
    assert_eq!(r.to_csv(), format!("{CSV_HEADER}\n"));
}

#[test]
fn json_round_trip_and_cache() {
    let s = small(ExperimentKind::RadiusTails);
    let mut s2 = s.clone();
    s2.scales = vec![6.0];
    s2.replicas = 120;
    s2.thresholds = vec![1.0, 2.0];
    let r = run_experiment(&s2).unwrap();
    assert_eq!(Report::from_json(&r.to_json()).unwrap(), r);

    let dir = tempfile::tempdir().unwrap();
    let path = write_report(&r, dir.path(), OutputFormat::Json).unwrap();
    assert!(path.file_name().unwrap().to_str().unwrap().starts_with("radius_tails-"));
    assert_eq!(load_cached(&s2, dir.path()), Some(r));
    let mut changed = s2.clone();
    changed.seed += 1;
    assert_eq!(load_cached(&changed, dir.path()), None);
    assert_eq!(load_cached(&s, dir.path()), None);
}

#[test]
fn csv_numbers_have_seventeen_digits() {
    let r = run_experiment(&small(ExperimentKind::ComponentsClt)).unwrap();
    let csv = r.to_csv();
    let line = csv.lines().nth(1).unwrap();
    let fields: Vec<&str> = line.split(',').collect();
    assert_eq!(fields.len(), 10);
    assert_eq!(fields[0], "components_clt");
    assert_eq!(fields[1], "1.0000000000000000e1");
    let mean: f64 = fields[3].parse().unwrap();
    assert_eq!(mean, r.rows[0].mean);
    assert_eq!(fields[8], "");
}

#[test]
fn unwritable_directory_reports_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let r = run_experiment(&small(ExperimentKind::ComponentsClt)).unwrap();
    match write_report(&r, &blocker.join("sub"), OutputFormat::Csv) {
        Err(crate::GeoError::Io { path, .. }) => assert!(path.contains("file")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn multivariate_rows_share_psd_covariance() {
    let mut s = small(ExperimentKind::MstMultivariate);
    s.scales = vec![6.0];
    s.sub_windows = vec![0.5, 0.75, 1.0];
    let r = run_experiment(&s).unwrap();
    assert_eq!(r.rows.len(), 3);
    let cov = r.rows[0].covariance.as_ref().unwrap();
    assert!(cov.is_psd());
    for i in 0..3 {
        assert_eq!(r.rows[i].component, Some(i));
        assert_eq!(cov.matrix[i][i], r.rows[i].variance);
    }
}

#[test]
fn two_arm_campaign_counts() {
    let mut s = small(ExperimentKind::TwoArmFrequency);
    s.scales = vec![12.0];
    s.alpha = 0.6;
    s.weight = WeightFunction::Identity;
    let r = run_experiment(&s).unwrap();
    let t = r.rows[0].two_arm.unwrap();
    assert_eq!(t.pairs, 30 * 9);
    assert_eq!(t.violations, t.checks - t.fired);
    assert!(t.checks <= 2 * t.mismatched_steps);
}

#[test]
fn wall_failure_tail_decreases() {
    let mut s = small(ExperimentKind::RadiusTails);
    s.radius_kind = RadiusKind::WallFailure;
    s.scales = vec![8.0];
    s.replicas = 60;
    s.thresholds = vec![2.0, 6.0, 10.0];
    let r = run_experiment(&s).unwrap();
    let tail = r.rows[0].radius_tail.as_ref().unwrap();
    assert_eq!(tail.len(), 3);
    assert!(tail[0].survival >= tail[2].survival);
}
