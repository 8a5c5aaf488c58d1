use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mwdiff_cli::table::{parse_csv, Cell};

const BEAM: &str = include_str!("data/beam.toml");

const SMALL: &str = "[grating]
phi0 = 3.141592653589793
n0 = 1.0
[interferometer]
talbot_parameter = 1.0
shift_points = 64
scan_points = 4
[farfield]
screen_points = 301
[ladder]
points = 16
[rabi]
points = 32
kdtli = true
";

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("mwdiff-cli-{tag}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.0.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn mwdiff(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mwdiff"));
    cmd.args(args)
        .arg("--out")
        .arg(out)
        .env_remove("MWDIFF_OUT");
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn files(dir: &Path) -> BTreeSet<String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn every_command_round_trips_through_its_schema() {
    let s = Scratch::new("roundtrip");
    let small = s.file("small.toml", SMALL);
    let beam = s.file("beam.toml", BEAM);
    let runs: [(&str, &Path, &[&str]); 6] = [
        ("derive-params", &beam, &["parameters.csv"]),
        ("talbot", &small, &["talbot.csv"]),
        (
            "kdtli",
            &small,
            &[
                "kdtli_signal.csv",
                "kdtli_harmonics.csv",
                "kdtli_visibility.csv",
            ],
        ),
        ("farfield", &small, &["farfield.csv"]),
        (
            "ladder",
            &small,
            &["ladder_kernel.csv", "ladder_diagnostics.csv"],
        ),
        (
            "rabi",
            &small,
            &[
                "rabi_transmission.csv",
                "rabi_signal.csv",
                "rabi_harmonics.csv",
            ],
        ),
    ];
    for (cmd, cfg, expected) in runs {
        let out = s.0.join(cmd);
        ok(&mwdiff(&[cmd], Some(cfg), &out));
        let m = manifest(&out);
        let listed = m["files"].as_array().unwrap();
        assert_eq!(listed.len(), expected.len(), "{cmd}");
        for name in expected {
            let text = std::fs::read_to_string(out.join(name)).unwrap();
            let t = parse_csv(&text).unwrap_or_else(|e| panic!("{cmd}/{name}: {e}"));
            assert!(!t.rows.is_empty(), "{cmd}/{name} is empty");
            let meta: Vec<&str> = t.meta.iter().map(|(k, _)| k.as_str()).collect();
            for key in ["version", "command", "variant", "parameters", "schema"] {
                assert!(meta.contains(&key), "{cmd}/{name} lacks {key}");
            }
            let entry = listed.iter().find(|f| f["path"] == *name).unwrap();
            assert_eq!(entry["rows"].as_u64().unwrap() as usize, t.rows.len());
            assert_eq!(entry["schema"], t.schema.name);
        }
    }
}

#[test]
fn parallelism_does_not_change_bytes() {
    let s = Scratch::new("jobs");
    let cfg = s.file("small.toml", SMALL);
    let args = [
        "kdtli",
        "--sweep",
        "grating.n0=0:2:3",
        "--sweep",
        "interferometer.talbot_parameter=0.5:1.5:2",
    ];
    let a = s.0.join("a");
    let b = s.0.join("b");
    ok(&mwdiff(
        &[&args[..], &["--jobs", "1"]].concat(),
        Some(&cfg),
        &a,
    ));
    ok(&mwdiff(
        &[&args[..], &["--jobs", "2"]].concat(),
        Some(&cfg),
        &b,
    ));
    let names = files(&a);
    assert_eq!(names, files(&b));
    // 6 points with three tables each, plus the sweep table and manifest
    assert_eq!(names.len(), 6 * 3 + 2);
    for n in names {
        assert_eq!(
            std::fs::read(a.join(&n)).unwrap(),
            std::fs::read(b.join(&n)).unwrap(),
            "{n}"
        );
    }
}

#[test]
fn empty_sweep_is_a_single_point() {
    let s = Scratch::new("single");
    let cfg = s.file("small.toml", SMALL);
    let out = s.0.join("o");
    ok(&mwdiff(&["talbot"], Some(&cfg), &out));
    assert_eq!(
        files(&out),
        BTreeSet::from(["manifest.json".into(), "talbot.csv".into()])
    );
    assert_eq!(manifest(&out)["points"].as_array().unwrap().len(), 1);
}

#[test]
fn velocity_sweep_maps_to_talbot_parameter() {
    let s = Scratch::new("velocity");
    let cfg = s.file("beam.toml", BEAM);
    let out = s.0.join("o");
    ok(&mwdiff(
        &["derive-params", "--sweep", "beam.velocity_m_s=50:200:4"],
        Some(&cfg),
        &out,
    ));
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/goldens/velocity_sweep");
    for name in files(&golden) {
        assert_eq!(
            std::fs::read_to_string(golden.join(&name)).unwrap(),
            std::fs::read_to_string(out.join(&name)).unwrap(),
            "{name}"
        );
    }
    // L/L_T scales as 1/v at fixed separation
    let tau = |i: usize| {
        let t = parse_csv(
            &std::fs::read_to_string(out.join(format!("parameters_p{i:03}.csv"))).unwrap(),
        )
        .unwrap();
        let row = t
            .rows
            .iter()
            .find(|r| r[0] == Cell::Text("talbot_parameter".into()))
            .unwrap();
        match row[1] {
            Cell::Float(v) => v,
            _ => unreachable!(),
        }
    };
    let v = [50.0, 100.0, 150.0, 200.0];
    for i in 0..4 {
        let rel = tau(i) * v[i] / (tau(0) * v[0]) - 1.0;
        assert!(rel.abs() < 1e-12, "point {i}: {rel:e}");
    }
}

#[test]
fn figure_two_reports_each_channel_and_the_sum() {
    let s = Scratch::new("fig2");
    let out = s.0.join("o");
    ok(&mwdiff(&["figure", "2"], None, &out));
    assert!(files(&out).contains("plot.py"));
    let t = parse_csv(&std::fs::read_to_string(out.join("signal.csv")).unwrap()).unwrap();
    let curves: BTreeSet<String> = t
        .rows
        .iter()
        .map(|r| match &r[0] {
            Cell::Text(c) => c.clone(),
            _ => unreachable!(),
        })
        .collect();
    for tau in ["3.25", "4.25"] {
        for ell in ["ell=0", "ell=1", "ell=2", "ell=sum"] {
            assert!(
                curves.contains(&format!("tau={tau} quantum {ell}")),
                "{tau} {ell}: {curves:?}"
            );
        }
    }
}

#[test]
fn json_output_matches_csv_rows() {
    let s = Scratch::new("json");
    let cfg = s.file("small.toml", SMALL);
    let c = s.0.join("c");
    let j = s.0.join("j");
    ok(&mwdiff(&["talbot"], Some(&cfg), &c));
    ok(&mwdiff(&["talbot", "--format", "json"], Some(&cfg), &j));
    let csv = parse_csv(&std::fs::read_to_string(c.join("talbot.csv")).unwrap()).unwrap();
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(j.join("talbot.json")).unwrap()).unwrap();
    assert_eq!(doc["schema"], "talbot");
    assert_eq!(doc["rows"].as_array().unwrap().len(), csv.rows.len());
}

#[test]
fn output_directory_defaults_from_environment() {
    let s = Scratch::new("env");
    let cfg = s.file("small.toml", SMALL);
    let out = s.0.join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_mwdiff"))
        .args(["talbot", "--config"])
        .arg(&cfg)
        .env("MWDIFF_OUT", &out)
        .output()
        .unwrap();
    ok(&o);
    assert!(out.join("talbot.csv").exists());
}

#[test]
fn exit_codes_separate_failure_classes() {
    let s = Scratch::new("exit");
    let out = s.0.join("o");
    let bad_key = s.file("bad.toml", "[grating]\nphi = 1.0\n");
    assert_eq!(
        mwdiff(&["talbot"], Some(&bad_key), &out).status.code(),
        Some(2)
    );
    assert_eq!(
        mwdiff(&["talbot", "--sweep", "grating.nope=0:1:2"], None, &out)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(mwdiff(&["figure", "3"], None, &out).status.code(), Some(2));
    let coarse = s.file(
        "coarse.toml",
        "[grating]\nphi0 = 1.0\nn0 = 1.0\n[farfield]\nscreen_points = 3\n",
    );
    assert_eq!(
        mwdiff(&["farfield"], Some(&coarse), &out).status.code(),
        Some(3)
    );
    assert_eq!(
        mwdiff(&["talbot"], Some(&s.0.join("missing.toml")), &out)
            .status
            .code(),
        Some(4)
    );
    let blocker = s.file("blocker", "");
    let cfg = s.file("small.toml", SMALL);
    assert_eq!(
        mwdiff(&["talbot"], Some(&cfg), &blocker.join("sub"))
            .status
            .code(),
        Some(4)
    );
}
