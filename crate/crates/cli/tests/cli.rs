use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lightlike(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lightlike"))
        .args(args)
        .env("LIGHTLIKE_THREADS", "2")
        .output()
        .unwrap()
}

fn config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn analyze(cfg: &Path, out: &Path, format: &str) -> Output {
    lightlike(&["analyze", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--format", format])
}

const CONE: &str = r#"metric.name = "minkowski"
metric.dim = 4
hypersurface.name = "light_cone"
hypersurface.apex = [0.5, -1.0, 0.25, 2.0]
grid.counts = [3, 2, 2]
grid.ranges = [[0.5, 2.0], [0.5, 2.5], [0.0, 3.0]]
outputs = ["shape", "foci", "screens"]
"#;

#[test]
fn catalog_lists_metrics_and_hypersurfaces() {
    let out = lightlike(&["catalog"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["minkowski", "de_sitter", "anti_de_sitter", "eddington_finkelstein", "light_cone", "null_hyperplane"] {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn light_cone_foci_sit_at_the_apex() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), CONE);
    let out = analyze(&cfg, &tmp.path().join("out"), "plotdata");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let foci = fs::read_to_string(tmp.path().join("out/foci.dat")).unwrap();
    let mut lines = foci.lines();
    let header: Vec<&str> = lines.next().unwrap().trim_start_matches("# ").split_whitespace().collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let apex = [0.5, -1.0, 0.25, 2.0];
    let mut rows = 0;
    for line in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(f[col("multiplicity")], "2");
        for (k, a) in apex.iter().enumerate() {
            let x: f64 = f[col(&format!("F{k}"))].parse().unwrap();
            assert!((x - a).abs() < 1e-8, "{line}");
        }
        rows += 1;
    }
    assert_eq!(rows, 12);
}

#[test]
fn table_has_one_row_per_point_and_documented_header() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), CONE);
    assert!(analyze(&cfg, &tmp.path().join("out"), "table").status.success());
    let mut rdr = csv::Reader::from_path(tmp.path().join("out/points.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(&header[..8], ["index", "u0", "u1", "u2", "x0", "x1", "x2", "x3"]);
    assert!(header.contains(&"classification".to_string()));
    assert!(header.contains(&"relative_I1:reason".to_string()));
    let class = header.iter().position(|h| h == "classification").unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| &r[class] == "totally_umbilical"));
    assert!(!tmp.path().join("out/report.json").exists());
}

#[test]
fn structured_report_carries_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), CONE);
    assert!(analyze(&cfg, &tmp.path().join("out"), "structured").status.success());
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("out/report.json")).unwrap()).unwrap();
    let prov = &json["provenance"];
    assert_eq!(prov["config_sha256"].as_str().unwrap().len(), 64);
    assert!(prov["convention"].as_str().unwrap().contains("R^i_jkl"));
    assert_eq!(json["points"].as_array().unwrap().len(), 12);
}

#[test]
fn output_is_independent_of_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), CONE);
    let mut runs = Vec::new();
    for threads in ["1", "3"] {
        let out = tmp.path().join(format!("t{threads}"));
        let run = Command::new(env!("CARGO_BIN_EXE_lightlike"))
            .args(["analyze", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .env("LIGHTLIKE_THREADS", threads)
            .output()
            .unwrap();
        assert!(run.status.success());
        let mut files: Vec<(PathBuf, Vec<u8>)> = fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (PathBuf::from(p.file_name().unwrap()), fs::read(&p).unwrap())
            })
            .collect();
        files.sort();
        runs.push(files);
    }
    assert_eq!(runs[0].len(), 5);
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), &CONE.replace("grid.counts = [3, 2, 2]", "grid.counts = [3, 1, 2]"));
    let out = analyze(&cfg, &tmp.path().join("out"), "all");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.counts[1]"));

    let cfg = config(tmp.path(), &CONE.replace("metric.dim = 4", "metric.dim = 4\nmetric.colour = 1"));
    assert_eq!(analyze(&cfg, &tmp.path().join("out"), "all").status.code(), Some(2));

    let out = Command::new(env!("CARGO_BIN_EXE_lightlike"))
        .arg("catalog")
        .env("LIGHTLIKE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_lightlike_surface_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        tmp.path(),
        r#"metric.name = "minkowski"
metric.dim = 4
hypersurface.name = "custom"
hypersurface.coords = ["x", "y", "z", "0"]
hypersurface.params = ["x", "y", "z"]
hypersurface.bounds = [[-1, 1], [-1, 1], [-1, 1]]
grid.counts = [2, 2, 2]
"#,
    );
    let out = analyze(&cfg, &tmp.path().join("out"), "all");
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not lightlike"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn io_errors_exit_with_four() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.toml");
    assert_eq!(analyze(&missing, &tmp.path().join("out"), "all").status.code(), Some(4));

    let cfg = config(tmp.path(), CONE);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    assert_eq!(analyze(&cfg, &blocker.join("out"), "all").status.code(), Some(4));
}

#[test]
fn unknown_format_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), CONE);
    let out = analyze(&cfg, &tmp.path().join("out"), "xml");
    assert_eq!(out.status.code(), Some(2));
}
