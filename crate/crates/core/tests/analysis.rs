use lightlike::analysis::analyze;
use lightlike::config::AnalysisConfig;
use lightlike::emit::{plotdata_files, structured_bytes, table_bytes, table_columns};
use lightlike::{Error, UnavailableReason};

fn run(text: &str) -> lightlike::analysis::Report {
    analyze(&AnalysisConfig::parse(text).unwrap(), text).unwrap()
}

const ELLIPSOID: &str = r#"metric.name = "minkowski"
metric.dim = 4
hypersurface.name = "ellipsoid_null_congruence"
hypersurface.a = 1.0
hypersurface.b = 1.3
hypersurface.c = 1.7
grid.counts = [2, 2, 2]
grid.ranges = [[0.2, 0.8], [0.6, 1.2], [0.5, 1.2]]
gauge_seed = 3
gauge_reruns = 2
"#;

const HORIZON: &str = r#"metric.name = "eddington_finkelstein"
metric.mass = 1.0
hypersurface.name = "schwarzschild_horizon"
hypersurface.mass = 1.0
grid.counts = [2, 3, 2]
grid.ranges = [[-1.0, 1.0], [0.4, 2.6], [0.0, 3.0]]
"#;

#[test]
fn table_header_is_the_column_registry() {
    let report = run(ELLIPSOID);
    let bytes = table_bytes(&report).unwrap();
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, table_columns(&report));
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.len() == header.len()));
}

#[test]
fn every_unavailable_screen_carries_a_known_reason() {
    let codes: Vec<&str> = UnavailableReason::ALL.iter().map(|r| r.code()).collect();
    for text in [ELLIPSOID, HORIZON] {
        let report = run(text);
        for p in &report.points {
            assert!(p.error.is_none(), "{:?}", p.error);
            for s in &p.screens {
                match s.status {
                    "constructed" => assert!(s.reason.is_none()),
                    "unavailable" => assert!(codes.contains(&s.reason.unwrap()), "{:?}", s.reason),
                    other => panic!("status {other}"),
                }
            }
        }
    }
}

#[test]
fn horizon_report_is_totally_geodesic() {
    let report = run(HORIZON);
    assert_eq!(report.summary.classification.get("totally_geodesic"), Some(&12));
    for p in &report.points {
        assert!(p.screens.iter().all(|s| s.reason == Some("totally_geodesic")));
        assert_eq!(p.foci.as_ref().unwrap().set.at_infinity, 2);
    }
}

#[test]
fn ellipsoid_absolute_screen_is_integrable_and_gauge_stable() {
    let report = run(ELLIPSOID);
    let s = &report.summary.screens["absolute_I1^2_over_P2"];
    assert_eq!(s.constructed, 8);
    assert_eq!(s.integrable, 8);
    assert!(s.max_gauge_residual < 1e-5);
    assert!(s.max_level_set_residual.unwrap() < 1e-6);
    for label in ["triple_lambda2", "triple_lambda3"] {
        assert_eq!(report.summary.screens[label].unavailable.get("K_proportional_to_eigenvalues"), Some(&8));
    }
}

#[test]
fn reports_are_reproducible() {
    let a = run(ELLIPSOID);
    let b = run(ELLIPSOID);
    assert_eq!(structured_bytes(&a).unwrap(), structured_bytes(&b).unwrap());
    assert_eq!(table_bytes(&a).unwrap(), table_bytes(&b).unwrap());
    assert_eq!(plotdata_files(&a), plotdata_files(&b));
    let other = run(&ELLIPSOID.replace("gauge_seed = 3", "gauge_seed = 4"));
    assert_ne!(a.provenance.config_sha256, other.provenance.config_sha256);
}

#[test]
fn non_lightlike_grid_point_is_a_geometry_error() {
    let text = r#"metric.name = "minkowski"
metric.dim = 4
hypersurface.name = "custom"
hypersurface.coords = ["s", "y", "z", "0.5 * s"]
hypersurface.params = ["s", "y", "z"]
hypersurface.bounds = [[-1, 1], [-1, 1], [-1, 1]]
grid.counts = [2, 2, 2]
"#;
    let err = analyze(&AnalysisConfig::parse(text).unwrap(), text).unwrap_err();
    assert!(matches!(err, Error::NonLightlikeGridPoint { index: 0, .. }), "{err}");
}
