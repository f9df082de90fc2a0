use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SCENARIO: &str = r#"
speed_limit = 15.0

[base_path]
vertices = [[0.0, 0.0], [100.0, 0.0]]

[obstacles]
d_influence = 3.0

[[obstacles.shapes]]
type = "disc"
center = [50.0, 1.9]
radius = 0.3

[goal]
type = "polygon"
vertices = [[55.0, -4.0], [65.0, -4.0], [65.0, 4.0], [55.0, 4.0]]

[profiles]
v_des = [[0.0, 10.0]]
theta_des = [[0.0, 0.0]]
"#;

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let f = Fixture {
            dir: tempfile::tempdir().unwrap(),
        };
        f.write("scenario.toml", SCENARIO);
        let rows: String = (0..=8)
            .map(|i| {
                let t = i as f64 * 0.5;
                format!("{t},{},0\n", 30.0 + 10.0 * t)
            })
            .collect();
        f.write("straight.csv", &format!("t,x,y\n{rows}"));
        let wavy: String = (0..=8)
            .map(|i| {
                let t = i as f64 * 0.5;
                format!("{t},{},{}\n", 30.0 + 10.0 * t, 0.3 * t.sin())
            })
            .collect();
        f.write("wavy.csv", &format!("t,x,y\n{wavy}"));
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) {
        std::fs::write(self.path(name), text).unwrap();
    }
}

fn trajcost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trajcost")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no '{key}' in\n{text}"))
        .to_string()
}

#[test]
fn evaluate_prints_total_and_terms() {
    let f = Fixture::new();
    let o = trajcost(&[
        "evaluate",
        "--scenario",
        p(&f.path("scenario.toml")),
        "--trajectory",
        p(&f.path("straight.csv")),
        "--cost",
        "[(L|1),(T|2)]",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let total: f64 = field(&out, "total").parse().unwrap();
    assert!((total - (40.0 + 8.0)).abs() < 1e-9, "{out}");
    assert_eq!(out.lines().filter(|l| l.starts_with("term: ")).count(), 2);
}

#[test]
fn jw1_without_leading_vehicle_reports_missing_context() {
    let f = Fixture::new();
    let o = trajcost(&[
        "evaluate",
        "--scenario",
        p(&f.path("scenario.toml")),
        "--trajectory",
        p(&f.path("straight.csv")),
        "--cost",
        "@JW1",
    ]);
    assert_eq!(o.status.code(), Some(5));
    let err = stderr(&o);
    assert!(err.contains("LV") && err.contains("BD"), "{err}");
}

#[test]
fn kc1_with_previous_trajectory_has_three_terms() {
    let f = Fixture::new();
    let o = trajcost(&[
        "evaluate",
        "--scenario",
        p(&f.path("scenario.toml")),
        "--trajectory",
        p(&f.path("wavy.csv")),
        "--previous",
        p(&f.path("straight.csv")),
        "--cost",
        "@KC1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("term: ")).count(), 3, "{out}");

    let without = trajcost(&[
        "evaluate",
        "--scenario",
        p(&f.path("scenario.toml")),
        "--trajectory",
        p(&f.path("wavy.csv")),
        "--cost",
        "@KC1",
    ]);
    assert_eq!(without.status.code(), Some(5));
}

#[test]
fn malformed_expression_exits_with_parse_error() {
    let f = Fixture::new();
    let o = trajcost(&[
        "evaluate",
        "--scenario",
        p(&f.path("scenario.toml")),
        "--trajectory",
        p(&f.path("straight.csv")),
        "--cost",
        "[(A|)]",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error:"));
}

fn select(f: &Fixture, cost: &str, offsets: &str, out: &str) -> Output {
    trajcost(&[
        "select",
        "--scenario",
        p(&f.path("scenario.toml")),
        "--cost",
        cost,
        &format!("--offsets={offsets}"),
        "--start-s",
        "30",
        "--horizon",
        "30",
        "--out",
        p(&f.path(out)),
    ])
}

#[test]
fn lane_centering_selects_the_centre_line() {
    let f = Fixture::new();
    let o = select(&f, "[(LC|1)]", "-2,0,2", "lc.csv");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(field(&stdout(&o), "offset"), "0");
}

#[test]
fn obstacle_cost_moves_away_from_the_obstacle() {
    let f = Fixture::new();
    let o = select(&f, "[(D|1)]", "-2,0,2", "d.csv");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(field(&stdout(&o), "offset"), "-2");
}

#[test]
fn selected_trajectory_re_evaluates_to_the_same_total() {
    let f = Fixture::new();
    let cost = "[(LC|0.5),(D|2),(A|0.1),(κ|0.01)]";
    let o = select(&f, cost, "-1.5,-0.5,0.5,1.5", "best.csv");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let selected: f64 = field(&stdout(&o), "total").parse().unwrap();
    let again = trajcost(&[
        "evaluate",
        "--scenario",
        p(&f.path("scenario.toml")),
        "--trajectory",
        p(&f.path("best.csv")),
        "--cost",
        cost,
    ]);
    assert_eq!(again.status.code(), Some(0), "{}", stderr(&again));
    let total: f64 = field(&stdout(&again), "total").parse().unwrap();
    assert!((total - selected).abs() <= 1e-9 * selected.abs().max(1.0), "{total} vs {selected}");
}

#[test]
fn select_with_every_candidate_blocked_exits_infeasible() {
    let f = Fixture::new();
    let o = select(&f, "[(LC|1)]", "1.9", "none.csv");
    assert_eq!(o.status.code(), Some(4), "{}", stdout(&o));
    assert!(stderr(&o).contains("collision"));
}

#[test]
fn empty_offsets_are_a_usage_error() {
    let f = Fixture::new();
    let o = select(&f, "[(LC|1)]", "", "x.csv");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_needs_the_swept_id_in_the_base_weights() {
    let o = trajcost(&["sweep", "--swept", "A", "--base-weights", "LC=0.17,D=0.2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn default_sweep_has_eleven_rows() {
    let o = trajcost(&["sweep", "--swept", "D"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(rows[0].starts_with("swept_value,feasible,selected,total_cost"));
    assert_eq!(rows.len(), 12);
    assert!(rows[1].starts_with("0,"));
    assert!(rows[11].starts_with("1,"));
}

#[test]
fn rank_lists_every_set() {
    let f = Fixture::new();
    let o = trajcost(&[
        "rank",
        "--scenario",
        p(&f.path("scenario.toml")),
        "--set",
        "centre=[(LC|1)]",
        "--set",
        "avoid=[(D|1),(LC|0.01)]",
        "--offsets=-2,-1,0,1,2",
        "--start-s",
        "30",
        "--horizon",
        "30",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(rows[0].starts_with("rank,label,"));
    assert_eq!(rows.len(), 3);
}

#[test]
fn catalog_lists_named_costs() {
    let o = trajcost(&["catalog"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for name in ["JW1", "KC1", "RA1", "XD1", "FM1"] {
        assert!(out.lines().any(|l| l.starts_with(name)), "{name} missing from\n{out}");
    }
}

#[test]
fn documented_scenario_loads() {
    let doc = concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/scenario.toml");
    let f = Fixture::new();
    let o = trajcost(&[
        "select",
        "--scenario",
        doc,
        "--cost",
        "@JW1",
        "--offsets=-1,0,1",
        "--start-s",
        "30",
        "--horizon",
        "30",
        "--out",
        p(&f.path("doc.csv")),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}
