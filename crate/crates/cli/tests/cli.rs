use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const ANNULUS: &str = r#"
seed = 42
[metric]
kind = "warped"
profile = "cosh(t)"
t_min = -1.0
t_max = 1.0
"#;

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anosov"))
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

/// Data rows of a CSV output as string fields, skipping comments and header.
fn rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    r.records()
        .map(|x| x.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn report(path: &Path) -> Value {
    let v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v["report"].clone()
}

#[test]
fn flat_disk_lens_rows_all_exit() {
    let d = TempDir::new().unwrap();
    let c = write_config(
        d.path(),
        "c.toml",
        "seed = 3\n[metric]\nkind = \"flat-disk\"\n[lens]\nsamples = 10\n",
    );
    let out = d.path().join("o");
    ok(&run("lens", &c, &out, &[]));
    let r = rows(&out.join("lens.csv"));
    assert_eq!(r.len(), 10);
    for row in &r {
        assert_eq!(row[9], "0", "{row:?}");
        // chord length 2 cos(angle)
        let angle: f64 = row[3].parse().unwrap();
        let time: f64 = row[7].parse().unwrap();
        assert!((time - 2.0 * angle.cos()).abs() < 1e-8);
    }
}

#[test]
fn header_records_version_seed_and_hash() {
    let d = TempDir::new().unwrap();
    let c = write_config(
        d.path(),
        "c.toml",
        "seed = 3\n[metric]\nkind = \"flat-disk\"\n[lens]\nsamples = 2\n",
    );
    let out = d.path().join("o");
    ok(&run("lens", &c, &out, &["--seed", "99"]));
    let text = fs::read_to_string(out.join("lens.csv")).unwrap();
    let lines: Vec<&str> = text.lines().take(3).collect();
    assert_eq!(lines[0], format!("# anosov {}", env!("CARGO_PKG_VERSION")));
    assert_eq!(lines[1], "# seed: 99");
    let hash = lines[2].strip_prefix("# config-sha256: ").unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
}

#[test]
fn annulus_runs_are_byte_identical() {
    let d = TempDir::new().unwrap();
    let c = write_config(
        d.path(),
        "c.toml",
        &format!("{ANNULUS}[lens]\nsamples = 200\nt_max = 30.0\n"),
    );
    let (a, b, s) = (d.path().join("a"), d.path().join("b"), d.path().join("s"));
    ok(&run("lens", &c, &a, &[]));
    ok(&run("lens", &c, &b, &[]));
    ok(&run("lens", &c, &s, &["--threads", "1"]));
    let x = fs::read(a.join("lens.csv")).unwrap();
    assert_eq!(x, fs::read(b.join("lens.csv")).unwrap());
    assert_eq!(x, fs::read(s.join("lens.csv")).unwrap());
    // a different seed gives different samples
    let o = d.path().join("o");
    ok(&run("lens", &c, &o, &["--seed", "43"]));
    assert_ne!(x, fs::read(o.join("lens.csv")).unwrap());
}

#[test]
fn malformed_configs_name_the_field() {
    let d = TempDir::new().unwrap();
    let cases = [
        (
            "seed = 1\n[metric]\nkind = \"flat-disk\"\n[lens]\nsampels = 3\n",
            "lens.sampels",
        ),
        (
            "seed = 1\n[metric]\nkind = \"flat-disk\"\nradius = \"big\"\n[lens]\nsamples = 3\n",
            "metric.radius",
        ),
        (
            "[metric]\nkind = \"flat-disk\"\n[lens]\nsamples = 3\n",
            "seed",
        ),
        (
            "seed = 1\n[metric]\nkind = \"flat-disk\"\n[lens]\nsamples = -3\n",
            "lens.samples",
        ),
        (
            "seed = 1\n[metric]\nkind = \"flat-disk\"\nradius = -1.0\n[lens]\nsamples = 3\n",
            "metric.radius",
        ),
        (
            "seed = 1\n[metric]\nkind = \"file\"\npath = \"missing.toml\"\n[lens]\nsamples = 3\n",
            "metric.path",
        ),
        ("seed = 1\n[metric]\nkind = \"flat-disk\"\n", "lens"),
    ];
    for (i, (body, field)) in cases.iter().enumerate() {
        let c = write_config(d.path(), &format!("bad{i}.toml"), body);
        let o = run("lens", &c, &d.path().join("o"), &[]);
        assert!(!o.status.success());
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(&format!("`{field}`")), "case {i}: {err}");
    }
}

#[test]
fn metric_files_are_followed() {
    let d = TempDir::new().unwrap();
    write_config(d.path(), "m.toml", "kind = \"flat-disk\"\nradius = 2.0\n");
    let c = write_config(
        d.path(),
        "c.toml",
        "seed = 1\n[metric]\nkind = \"file\"\npath = \"m.toml\"\n[lens]\nsamples = 5\n",
    );
    let out = d.path().join("o");
    ok(&run("lens", &c, &out, &[]));
    for row in rows(&out.join("lens.csv")) {
        let angle: f64 = row[3].parse().unwrap();
        let time: f64 = row[7].parse().unwrap();
        assert!((time - 4.0 * angle.cos()).abs() < 1e-8);
    }
}

#[test]
fn disk_chords_match_the_formula() {
    let d = TempDir::new().unwrap();
    let c = write_config(
        d.path(),
        "c.toml",
        "seed = 5\n[metric]\nkind = \"flat-disk\"\n[distance]\nrandom_pairs = 12\npairs = [{ x = { s = 0.0 }, y = { s = 2.0 } }]\n",
    );
    let out = d.path().join("o");
    ok(&run("distance", &c, &out, &[]));
    let r = rows(&out.join("distance.csv"));
    assert_eq!(r.len(), 13);
    for row in r {
        let (x, y): (f64, f64) = (row[1].parse().unwrap(), row[3].parse().unwrap());
        let length: f64 = row[5].parse().unwrap();
        assert!(
            (length - 2.0 * ((x - y) / 2.0).sin().abs()).abs() < 1e-6,
            "{row:?}"
        );
    }
}

#[test]
fn winding_sweep_and_identical_comparison() {
    let d = TempDir::new().unwrap();
    let body = format!(
        "{ANNULUS}[compare_metric]\nkind = \"warped\"\nprofile = \"cosh(t)\"\nt_min = -1.0\nt_max = 1.0\n\
         [distance]\nclasses = [0, 1]\npairs = [{{ x = {{ component = 0, s = 0.3 }}, y = {{ component = 1, s = 2.0 }} }}]\n\
         sweep = {{ x = {{ component = 1, s = 0.0 }}, y = {{ component = 1, s = 0.0 }}, n_max = 6 }}\n"
    );
    let c = write_config(d.path(), "c.toml", &body);
    let out = d.path().join("o");
    ok(&run("distance", &c, &out, &[]));
    let sweep = rows(&out.join("winding.csv"));
    assert_eq!(sweep.len(), 6);
    let per: Vec<f64> = sweep.iter().map(|r| r[2].parse().unwrap()).collect();
    for w in per.windows(2) {
        assert!(w[1] < w[0]);
    }
    assert!(per.iter().all(|p| *p > std::f64::consts::TAU));
    let cmp = report(&out.join("distance_compare.json"));
    for class in cmp.as_array().unwrap() {
        assert_eq!(class["sup_length"].as_f64().unwrap(), 0.0);
        assert_eq!(class["compared"].as_u64().unwrap(), 1);
    }
}

#[test]
fn prescribe_zero_change_gives_zero_field() {
    let d = TempDir::new().unwrap();
    let c = write_config(
        d.path(),
        "c.toml",
        "seed = 1\n[metric]\nkind = \"flat-disk\"\n[prescribe]\nradial = 16\nangular = 16\n",
    );
    let out = d.path().join("o");
    ok(&run("prescribe", &c, &out, &[]));
    for row in rows(&out.join("field.csv")) {
        assert_eq!(row[4].parse::<f64>().unwrap(), 0.0);
    }
    assert_eq!(rows(&out.join("trace.csv")).len(), 1);
}

#[test]
fn prescribe_sweep_fits_a_constant() {
    let d = TempDir::new().unwrap();
    let c = write_config(
        d.path(),
        "c.toml",
        "seed = 1\n[metric]\nkind = \"flat-disk\"\n[prescribe]\nradial = 24\nangular = 24\nh = \"0.04*x*y\"\nsweep = 3\n",
    );
    let out = d.path().join("o");
    ok(&run("prescribe", &c, &out, &[]));
    let sweep = rows(&out.join("sweep.csv"));
    assert_eq!(sweep.len(), 4);
    let ratios: Vec<f64> = sweep.iter().map(|r| r[3].parse().unwrap()).collect();
    let fitted = report(&out.join("prescribe.json"))["fitted_constant"]
        .as_f64()
        .unwrap();
    for r in ratios {
        assert!((r / fitted - 1.0).abs() < 0.05, "{r} vs {fitted}");
    }
}

#[test]
fn prescribe_refuses_a_kernel() {
    let d = TempDir::new().unwrap();
    let c = write_config(
        d.path(),
        "c.toml",
        "seed = 1\n[prescribe]\nradial = 16\nangular = 16\ntuned_kernel = true\nh = \"0.01\"\n",
    );
    let out = d.path().join("o");
    let o = run("prescribe", &c, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("eigenvalue"));
    let spectrum = rows(&out.join("spectrum.csv"));
    let smallest: f64 = spectrum[0][1].parse().unwrap();
    assert!(smallest.abs() < 1e-6);
    assert!(!out.join("field.csv").exists());
}

const REFERENCE_COLLAR: &str =
    "seed = 1\n[extend]\ndelta0 = 0.05\nepsilon = 0.1\nell = 8.0\ndelta = 0.04\n";

#[test]
fn extend_reference_certificate_and_sweep() {
    let d = TempDir::new().unwrap();
    let c = write_config(
        d.path(),
        "c.toml",
        &format!("{REFERENCE_COLLAR}ells = [1.0, 2.0, 4.0, 8.0, 16.0]\n"),
    );
    let out = d.path().join("o");
    ok(&run("extend", &c, &out, &[]));
    let cert = report(&out.join("certificate.json"));
    assert!(cert["tail_residual"].as_f64().unwrap() <= 1e-8);
    assert!(cert["negative_after_epsilon"].as_bool().unwrap());
    assert_eq!(cert["threshold_ell"].as_f64(), Some(4.0));
    let profile = rows(&out.join("profile.csv"));
    assert!(profile.len() > 2000);
    let tags: Vec<u8> = profile.iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(tags.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!((tags[0], *tags.last().unwrap()), (1, 4));
    assert_eq!(rows(&out.join("sweep.csv")).len(), 5);
    assert!(fs::read_to_string(out.join("certificate.txt"))
        .unwrap()
        .contains("ell0 = 4"));
}

#[test]
fn extend_rejects_wide_mollification() {
    let d = TempDir::new().unwrap();
    let c = write_config(
        d.path(),
        "c.toml",
        &REFERENCE_COLLAR.replace("delta = 0.04", "delta = 0.05"),
    );
    let o = run("extend", &c, &d.path().join("o"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`extend.delta`"));
}

#[test]
fn extend_from_a_warped_metric() {
    let d = TempDir::new().unwrap();
    let body = "seed = 1\n[metric]\nkind = \"warped\"\nprofile = \"cosh(t)\"\nt_min = -1.0\nt_max = 1.0\n\
                [extend]\ndelta0 = 0.05\nepsilon = 0.1\nell = 8.0\ndelta = 0.04\nfrom_metric = true\n";
    let c = write_config(d.path(), "c.toml", body);
    let out = d.path().join("o");
    ok(&run("extend", &c, &out, &[]));
    let cert = report(&out.join("certificate.json"));
    assert!((cert["spec"]["r0"].as_f64().unwrap() - 1f64.cosh()).abs() < 1e-12);
    assert!((cert["spec"]["kappa0"].as_f64().unwrap() - 1f64.tanh()).abs() < 1e-12);
    assert!(cert["tail_residual"].as_f64().unwrap() <= 1e-8);
}

fn diagnose(body: &str) -> Value {
    let d = TempDir::new().unwrap();
    let c = write_config(d.path(), "c.toml", body);
    let out = d.path().join("o");
    ok(&run("diagnose", &c, &out, &[]));
    assert!(out.join("diagnose.txt").exists());
    report(&out.join("diagnose.json"))
}

#[test]
fn diagnose_annulus_passes() {
    let r = diagnose(&format!(
        "{ANNULUS}[diagnose]\nsamples = 500\nconjugate_samples = 16\n"
    ));
    assert!(r["convexity"]["strictly_convex"].as_bool().unwrap());
    assert_eq!(r["conjugate_points"]["flagged"].as_u64(), Some(0));
    assert!(r["trapped_decays"].as_bool().unwrap());
    assert!((r["lyapunov"]["exponent"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(r["passes"].as_bool().unwrap());
}

#[test]
fn diagnose_flat_disk_traps_nothing() {
    let r = diagnose("seed = 2\n[metric]\nkind = \"flat-disk\"\n[diagnose]\nsamples = 300\nconjugate_samples = 8\n");
    assert!(r["convexity"]["strictly_convex"].as_bool().unwrap());
    for e in r["trapped"].as_array().unwrap() {
        assert_eq!(e["fraction"].as_f64(), Some(0.0));
    }
    assert!(r["lyapunov"].is_null());
}

#[test]
fn diagnose_flags_conjugate_points_on_a_cap() {
    // the stereographic disk of radius 4 is most of the unit sphere; every
    // geodesic that runs for length pi meets its first conjugate point there
    let r = diagnose("seed = 2\n[metric]\nkind = \"sphere-cap\"\nradius = 4.0\n[diagnose]\nsamples = 200\nconjugate_samples = 8\nconjugate_time = 10.0\n");
    assert!(r["conjugate_points"]["flagged"].as_u64().unwrap() > 0);
    let earliest = r["conjugate_points"]["earliest"].as_f64().unwrap();
    assert!((earliest - std::f64::consts::PI).abs() < 1e-3);
    assert!(!r["passes"].as_bool().unwrap());
}
