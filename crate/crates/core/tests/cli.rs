use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wavedetect::io::{read_report, read_traces};

const ROD: &str = r#"
[geometry]
dimension = 1
vertices = [[0.0], [1.0], [2.0], [3.0]]
simplices = [[0, 1], [1, 2], [2, 3]]

[[media]]
kind = "em"
index = 1.0
simplices = [0]

[[media]]
kind = "em"
index = 1.5
simplices = [1]

[[media]]
kind = "em"
index = 2.0
simplices = [2]

[[rays]]
origin = [0.0]
direction = [1.0]
length = 2.997
grid_step = 0.003

[detection]
tol = 1e-6
candidates = [[1.0, 1.5], [1.5, 2.0], [1.0, 2.0]]
"#;

const ACOUSTIC: &str = r#"
[geometry]
dimension = 1
vertices = [[0.0], [1.0], [2.0]]
simplices = [[0, 1], [1, 2]]

[[media]]
kind = "acoustic"
impedance = 1.0
sound_speed = 1500.0
simplices = [0]

[[media]]
kind = "acoustic"
impedance = 4.0
sound_speed = 1500.0
simplices = [1]

[[rays]]
origin = [0.0]
direction = [1.0]
length = 1.99
grid_step = 0.01

[detection]
paper_exact = true
"#;

struct Sandbox {
    dir: tempfile::TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn config(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, text).unwrap();
        p
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavedetect"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(sb: &Sandbox, config: &Path, out: &str) -> PathBuf {
    let out = sb.path(out);
    let o = run(&["simulate", "--config", s(config), "--out", s(&out)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    out
}

#[test]
fn simulate_rod_has_two_steps() {
    let sb = Sandbox::new();
    let traces = simulate(&sb, &sb.config("rod.toml", ROD), "t.csv");
    let (traces, meta) = read_traces(&traces).unwrap();
    assert_eq!(meta.wave_kind, "em");
    assert_eq!(traces.len(), 1);
    let mut levels: Vec<f64> = traces[0].samples.iter().map(|s| s.incident.re).collect();
    levels.dedup();
    assert_eq!(levels.len(), 3);
    assert_eq!(levels[0], 1.0);
    assert!((levels[1] - 0.8).abs() < 1e-15);
    assert!((levels[2] - 0.8 * 3.0 / 3.5).abs() < 1e-15);
}

#[test]
fn empty_rays_give_header_only() {
    let sb = Sandbox::new();
    let start = ROD.find("[[rays]]").unwrap();
    let end = ROD.find("[detection]").unwrap();
    let text = format!("{}{}", &ROD[..start], &ROD[end..]);
    let out = simulate(&sb, &sb.config("empty.toml", &text), "t.csv");
    let body = std::fs::read_to_string(&out).unwrap();
    assert_eq!(body.lines().count(), 1);
    assert!(read_traces(&out).unwrap().0.is_empty());
}

#[test]
fn malformed_config_exits_2_with_position() {
    let sb = Sandbox::new();
    let cfg = sb.config("bad.toml", &ROD.replace("index = 1.5", "index = [1.5"));
    let o = run(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&sb.path("t.csv")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line ") && err.contains("column "), "{err}");
}

#[test]
fn geometry_error_exits_3() {
    let sb = Sandbox::new();
    let cfg = sb.config(
        "deg.toml",
        &ROD.replace(
            "[[0.0], [1.0], [2.0], [3.0]]",
            "[[0.0], [1.0], [1.0], [3.0]]",
        ),
    );
    let o = run(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&sb.path("t.csv")),
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn ray_leaving_the_complex_exits_3() {
    let sb = Sandbox::new();
    let cfg = sb.config("long.toml", &ROD.replace("length = 2.997", "length = 4.5"));
    let o = run(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&sb.path("t.csv")),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn detect_rod_round_trip() {
    let sb = Sandbox::new();
    let cfg = sb.config("rod.toml", ROD);
    let traces = simulate(&sb, &cfg, "t.csv");
    let report = sb.path("r.csv");
    let o = run(&[
        "detect",
        "--config",
        s(&cfg),
        "--traces",
        s(&traces),
        "--out",
        s(&report),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(
        stdout.contains("interface_hits=2 vertex_hits=0"),
        "{stdout}"
    );
    let (r, meta) = read_report(&report).unwrap();
    assert_eq!(r.interface_hits.len(), 2);
    assert_eq!(r.interface_hits[0].media_pair, (1.0, 1.5));
    assert_eq!(r.interface_hits[1].media_pair, (1.5, 2.0));
    assert_eq!(meta.tol, 1e-6);
}

#[test]
fn detect_homogeneous_reports_nothing() {
    let sb = Sandbox::new();
    let text = ROD
        .replace("index = 1.5", "index = 1.0")
        .replace("index = 2.0", "index = 1.0");
    let cfg = sb.config("flat.toml", &text);
    let traces = simulate(&sb, &cfg, "t.csv");
    let report = sb.path("r.csv");
    let o = run(&[
        "detect",
        "--config",
        s(&cfg),
        "--traces",
        s(&traces),
        "--out",
        s(&report),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("interface_hits=0 vertex_hits=0"));
    assert!(read_report(&report).unwrap().0.interface_hits.is_empty());
}

#[test]
fn acoustic_paper_exact_is_recorded() {
    let sb = Sandbox::new();
    let cfg = sb.config("ac.toml", ACOUSTIC);
    let traces = simulate(&sb, &cfg, "t.csv");
    let report = sb.path("r.csv");
    let o = run(&[
        "detect",
        "--config",
        s(&cfg),
        "--traces",
        s(&traces),
        "--out",
        s(&report),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(String::from_utf8_lossy(&o.stdout).contains("variant=paper_exact"));
    let (_, meta) = read_report(&report).unwrap();
    assert_eq!(meta.variant, "paper_exact");

    // the default variant matches the synthesized intensities
    let cfg = sb.config(
        "ac2.toml",
        &ACOUSTIC.replace("paper_exact = true", "paper_exact = false"),
    );
    let o = run(&[
        "detect",
        "--config",
        s(&cfg),
        "--traces",
        s(&traces),
        "--out",
        s(&report),
    ]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("interface_hits=1"));
}

#[test]
fn paper_exact_flag_overrides_config() {
    let sb = Sandbox::new();
    let cfg = sb.config(
        "ac.toml",
        &ACOUSTIC.replace("paper_exact = true", "paper_exact = false"),
    );
    let traces = simulate(&sb, &cfg, "t.csv");
    let report = sb.path("r.csv");
    let o = run(&[
        "detect",
        "--config",
        s(&cfg),
        "--traces",
        s(&traces),
        "--out",
        s(&report),
        "--paper-exact",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_report(&report).unwrap().1.variant, "paper_exact");
}

#[test]
fn schema_mismatch_exits_4() {
    let sb = Sandbox::new();
    let em_cfg = sb.config("rod.toml", ROD);
    let ac_cfg = sb.config("ac.toml", ACOUSTIC);
    let traces = simulate(&sb, &em_cfg, "t.csv");
    let report = sb.path("r.csv");
    let o = run(&[
        "detect",
        "--config",
        s(&ac_cfg),
        "--traces",
        s(&traces),
        "--out",
        s(&report),
    ]);
    assert_eq!(o.status.code(), Some(4));

    let text = std::fs::read_to_string(&traces)
        .unwrap()
        .replacen("reflected_im", "refl_im", 1);
    std::fs::write(&traces, text).unwrap();
    let o = run(&[
        "detect",
        "--config",
        s(&em_cfg),
        "--traces",
        s(&traces),
        "--out",
        s(&report),
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn seed_and_noise_flags() {
    let sb = Sandbox::new();
    let cfg = sb.config("rod.toml", ROD);
    let mut outputs = Vec::new();
    for (name, seed) in [("a.csv", "1"), ("b.csv", "1"), ("c.csv", "2")] {
        let out = sb.path(name);
        let o = run(&[
            "simulate",
            "--config",
            s(&cfg),
            "--out",
            s(&out),
            "--seed",
            seed,
            "--noise",
            "0.01",
        ]);
        assert_eq!(o.status.code(), Some(0));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_ne!(outputs[0], outputs[2]);
    let (_, meta) = read_traces(&sb.path("a.csv")).unwrap();
    assert_eq!((meta.seed, meta.noise), (1, 0.01));
}

#[test]
fn detect_runs_vertex_probes() {
    let sb = Sandbox::new();
    let text = format!(
        "{ROD}\n[[vertex_probes]]\ncriterion = \"fwm\"\nvertex = 1\nrays = [0]\nwindow = 0.9\n"
    );
    let cfg = sb.config("probe.toml", &text);
    let traces = simulate(&sb, &cfg, "t.csv");
    let report = sb.path("r.csv");
    let o = run(&[
        "detect",
        "--config",
        s(&cfg),
        "--traces",
        s(&traces),
        "--out",
        s(&report),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    // a flat first compartment is an exact zero-gain exponential
    let (r, _) = read_report(&report).unwrap();
    assert_eq!(r.vertex_hits.len(), 1);
    assert!(r.vertex_hits[0].degenerate);
    assert_eq!(r.vertex_hits[0].position, vec![1.0]);
}

fn powers(o: &Output) -> (f64, f64) {
    let text = String::from_utf8_lossy(&o.stdout);
    let get = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(key))
            .unwrap_or_else(|| panic!("{key} missing in {text}"))
            .trim()
            .parse()
            .unwrap()
    };
    (get("P1 = "), get("P2 = "))
}

#[test]
fn coupler_three_db() {
    let o = run(&["coupler", "c:0.7853981633974483"]);
    assert_eq!(o.status.code(), Some(0));
    let (p1, p2) = powers(&o);
    assert!((p1 - 0.5).abs() < 1e-12 && (p2 - 0.5).abs() < 1e-12);
}

#[test]
fn coupler_cross_over() {
    let o = run(&[
        "coupler",
        "c:0.7853981633974483",
        "d:1:0:0",
        "c:0.7853981633974483",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let (p1, p2) = powers(&o);
    assert!(p1.abs() < 1e-12 && (p2 - 1.0).abs() < 1e-12);
}

#[test]
fn coupler_errors_exit_5() {
    assert_eq!(run(&["coupler"]).status.code(), Some(5));
    assert_eq!(run(&["coupler", "c:1", "c:1"]).status.code(), Some(5));
    assert_eq!(run(&["coupler", "x:1"]).status.code(), Some(5));
}

#[test]
fn slab_modes_prints_table() {
    let o = run(&[
        "slab-modes",
        "--n-core",
        "1.5",
        "--n-clad",
        "1.45",
        "--thickness",
        "4e-6",
        "--wavelength",
        "1.55e-6",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    let rows = text.lines().skip(2).count();
    assert!(rows >= 1, "{text}");
    assert!(text.lines().nth(2).unwrap().starts_with("0,even,"));
}

#[test]
fn fwm_writes_trajectory() {
    let sb = Sandbox::new();
    let out = sb.path("fwm.csv");
    let o = run(&[
        "fwm",
        "--omega-s",
        "1.2e15",
        "--k-s",
        "6e6",
        "--chi3",
        "2e-22",
        "--pumps",
        "3e7,2e7,1.5e7",
        "--delta-k",
        "50",
        "--length",
        "0.0628",
        "--out",
        s(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("growth_rate") && text.contains("closed_form"));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 1002);
}
