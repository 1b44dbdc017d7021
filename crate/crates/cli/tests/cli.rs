use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use lifebench::curriculum::{generate_condensed, load_curriculum_file};
use lifebench::eventlog;

const BIN: &str = env!("CARGO_BIN_EXE_lifebench");

fn lifebench(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A small condensed run; returns the run directory printed by the CLI.
fn small_run(log_dir: &Path, agent: &str, lifetimes: usize, seed: u64) -> (Output, PathBuf) {
    let o = lifebench(&[
        "run",
        "--curriculum",
        "condensed",
        "--agent",
        agent,
        "--lifetimes",
        &lifetimes.to_string(),
        "--seed",
        &seed.to_string(),
        "--log-dir",
        log_dir.to_str().unwrap(),
        "--episodes-per-lb",
        "2",
        "--eval-episodes",
        "1",
        "--parallel-envs",
        "2",
    ]);
    let dir = PathBuf::from(stdout(&o).lines().next().unwrap_or_default());
    (o, dir)
}

fn block_bytes(lifetime: &Path) -> Vec<(usize, Vec<u8>)> {
    eventlog::block_files(lifetime)
        .unwrap()
        .into_iter()
        .map(|(n, p)| (n, std::fs::read(p).unwrap()))
        .collect()
}

#[test]
fn repeated_runs_write_identical_logs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, dir_a) = small_run(tmp.path(), "random", 2, 5);
    let (b, dir_b) = small_run(tmp.path(), "random", 2, 5);
    assert!(a.status.success(), "{}", stderr(&a));
    assert!(b.status.success());
    assert_eq!(dir_a, tmp.path().join("condensed_random_seed5"));
    assert_eq!(dir_b, tmp.path().join("condensed_random_seed5-2"));
    let lines: Vec<String> = stdout(&a).lines().skip(1).map(String::from).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("lifetime 0: ok ("), "{lines:?}");
    for i in 0..2 {
        let la = dir_a.join(format!("lifetime_{i}"));
        let lb = dir_b.join(format!("lifetime_{i}"));
        assert_eq!(block_bytes(&la).len(), 37);
        assert_eq!(block_bytes(&la), block_bytes(&lb));
    }
    assert!(dir_a.join("run_metadata.json").is_file());
}

#[test]
fn validate_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let good = tmp.path().join("good.json");
    let o = lifebench(&[
        "export-curriculum",
        "--name",
        "dispersed",
        "--seed",
        "3",
        "--out",
        good.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = lifebench(&["validate", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("ok (109 blocks"));

    // A parameter out of range is a finding, reported with its location.
    let text = std::fs::read_to_string(&good).unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, text.replacen("\"size\": 6", "\"size\": 3", 1)).unwrap();
    let o = lifebench(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("blocks["), "{}", stdout(&o));

    let unknown = tmp.path().join("unknown.json");
    std::fs::write(
        &unknown,
        text.replacen("\"task\": \"DoorKey\"", "\"task\": \"Foo\"", 1),
    )
    .unwrap();
    let o = lifebench(&["validate", unknown.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("Foo"));

    let broken = tmp.path().join("broken.json");
    std::fs::write(&broken, "{\"name\": ").unwrap();
    assert_eq!(
        lifebench(&["validate", broken.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let missing = tmp.path().join("missing.json");
    assert_eq!(
        lifebench(&["validate", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn exported_curricula_match_the_generator() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c.json");
    let o = lifebench(&[
        "export-curriculum",
        "--name",
        "condensed",
        "--seed",
        "77",
        "--out",
        out.to_str().unwrap(),
        "--episodes-per-lb",
        "40",
        "--eval-episodes",
        "4",
    ]);
    assert!(o.status.success());
    assert_eq!(
        load_curriculum_file(&out).unwrap(),
        generate_condensed(40, 4, 77)
    );
    assert_eq!(
        lifebench(&[
            "export-curriculum",
            "--name",
            "nope",
            "--out",
            out.to_str().unwrap()
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn run_from_curriculum_file() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("c.json");
    lifebench(&[
        "export-curriculum",
        "--name",
        "condensed",
        "--out",
        file.to_str().unwrap(),
        "--episodes-per-lb",
        "1",
        "--eval-episodes",
        "1",
    ]);
    let o = lifebench(&[
        "run",
        "--curriculum",
        file.to_str().unwrap(),
        "--agent",
        "qlearn",
        "--log-dir",
        tmp.path().join("logs").to_str().unwrap(),
        "--run-name",
        "my run/1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let dir = PathBuf::from(stdout(&o).lines().next().unwrap());
    assert_eq!(dir.file_name().unwrap(), "my_run_1");
    let saved = load_curriculum_file(&dir.join("lifetime_0").join("curriculum.json")).unwrap();
    assert_eq!(saved, load_curriculum_file(&file).unwrap());
}

#[test]
fn metrics_and_curve_data() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, run_dir) = small_run(&tmp.path().join("logs"), "qlearn", 2, 1);
    assert!(o.status.success());

    let out = tmp.path().join("report");
    let o = lifebench(&[
        "metrics",
        "--log-dir",
        run_dir.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains(" rp: absent (n=0)"), "{}", stdout(&o));
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(
        rows[0],
        vec!["lifetime", "pm", "mtp", "mep", "ft", "bt", "rp", "se"]
    );
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[1][0], "lifetime_0");
    assert_eq!(rows[3][0], "aggregate");
    for row in &rows[1..] {
        assert!(
            row[1..6].iter().all(|c| c.parse::<f64>().is_ok()),
            "{row:?}"
        );
        assert_eq!(&row[6..], &["", ""]);
        // One learning block per task: PM and BT coincide.
        assert_eq!(row[1], row[5]);
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["lifetimes"].as_array().unwrap().len(), 2);
    assert!(json["aggregate"]["rp"]["mean"].is_null());

    // Reproducible byte for byte.
    let again = tmp.path().join("again");
    lifebench(&[
        "metrics",
        "--log-dir",
        run_dir.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read(out.join("report.json")).unwrap(),
        std::fs::read(again.join("report.json")).unwrap()
    );

    let curve = tmp.path().join("curve.csv");
    let o = lifebench(&[
        "curve-data",
        "--log-dir",
        run_dir.to_str().unwrap(),
        "--out",
        curve.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&curve).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("lifetime,task,block_num,eval_index,performance")
    );
    // 2 lifetimes x 6 tasks x 19 eval blocks.
    assert_eq!(lines.count(), 2 * 6 * 19);

    let o = lifebench(&[
        "metrics",
        "--log-dir",
        tmp.path().join("nothing").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn single_task_experts_feed_rp_and_se() {
    let tmp = tempfile::tempdir().unwrap();
    let ste_dir = tmp.path().join("ste");
    for task in [
        "SimpleCrossing",
        "DistributionalShift",
        "DynamicObstacles",
        "CustomFetch",
        "DoorKey",
        "Unlock",
    ] {
        let o = lifebench(&[
            "ste",
            "--task",
            task,
            "--agent",
            "qlearn",
            "--episodes",
            "6",
            "--seed",
            "0",
            "--ste-dir",
            ste_dir.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{task}: {}", stderr(&o));
        assert!(ste_dir
            .join(task)
            .join("seed_0")
            .join("block_0000.jsonl")
            .is_file());
    }
    let o = lifebench(&[
        "ste",
        "--task",
        "Unlock",
        "--agent",
        "qlearn",
        "--episodes",
        "6",
        "--ste-dir",
        ste_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "existing expert runs are not overwritten"
    );

    let (_, run_dir) = small_run(&tmp.path().join("logs"), "qlearn", 1, 2);
    let out = tmp.path().join("report");
    let o = lifebench(&[
        "metrics",
        "--log-dir",
        run_dir.to_str().unwrap(),
        "--ste-dir",
        ste_dir.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let lt = &json["lifetimes"][0];
    // Every task is either scored against its expert or named in a note
    // (an expert that never scored has zero area and cannot be divided by).
    for metric in ["rp", "se"] {
        let notes = lt["notes"][metric].to_string();
        let mut scored = 0;
        for (task, breakdown) in lt["per_task"].as_object().unwrap() {
            if breakdown["metrics"][metric].is_number() {
                scored += 1;
            } else {
                assert!(notes.contains(task.as_str()), "{metric} {task}: {notes}");
            }
        }
        assert_eq!(lt["metrics"][metric].is_number(), scored > 0);
    }
}

#[test]
fn exec_agents_match_in_process_agents() {
    let tmp = tempfile::tempdir().unwrap();
    let (local, local_dir) = small_run(&tmp.path().join("a"), "random", 1, 9);
    assert!(local.status.success());
    let exec = format!("exec:{BIN} agent-serve --agent random");
    let (remote, remote_dir) = small_run(&tmp.path().join("b"), &exec, 1, 9);
    assert!(
        remote.status.success(),
        "{}\n{}",
        stdout(&remote),
        stderr(&remote)
    );
    assert_eq!(
        block_bytes(&local_dir.join("lifetime_0")),
        block_bytes(&remote_dir.join("lifetime_0"))
    );
}

#[test]
fn tcp_agents_match_in_process_agents() {
    let tmp = tempfile::tempdir().unwrap();
    let mut server = Command::new(BIN)
        .args([
            "agent-serve",
            "--agent",
            "qlearn",
            "--tcp",
            "127.0.0.1:0",
            "--connections",
            "2",
        ])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut first = String::new();
    BufReader::new(server.stdout.take().unwrap())
        .read_line(&mut first)
        .unwrap();
    let addr = first.trim().to_string();

    let (local, local_dir) = small_run(&tmp.path().join("a"), "qlearn", 2, 4);
    let (remote, remote_dir) = small_run(&tmp.path().join("b"), &format!("tcp:{addr}"), 2, 4);
    assert!(local.status.success());
    assert!(
        remote.status.success(),
        "{}\n{}",
        stdout(&remote),
        stderr(&remote)
    );
    assert!(server.wait().unwrap().success());
    for i in 0..2 {
        let l = format!("lifetime_{i}");
        assert_eq!(
            block_bytes(&local_dir.join(&l)),
            block_bytes(&remote_dir.join(&l))
        );
    }
}

#[test]
fn failing_agents_and_bad_usage() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, _) = small_run(tmp.path(), "exec:exit 3", 2, 0);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("lifetime 0: failed:"), "{out}");
    assert!(out.contains("lifetime 1: failed:"), "{out}");

    let (o, _) = small_run(tmp.path(), "telepathy", 1, 0);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown agent"));

    let o = lifebench(&[
        "run",
        "--curriculum",
        "nope",
        "--agent",
        "random",
        "--log-dir",
        "x",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = lifebench(&["run", "--agent", "random"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn layout_renders_a_grid() {
    let a = lifebench(&[
        "layout",
        "--task",
        "DoorKey",
        "--variant",
        "S8",
        "--seed",
        "4",
    ]);
    assert!(a.status.success(), "{}", stderr(&a));
    let text = stdout(&a);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 8);
    assert!(rows
        .iter()
        .all(|r| r.chars().count() == rows[0].chars().count()));
    let b = lifebench(&[
        "layout", "--task", "DoorKey", "--param", "size=8", "--seed", "4",
    ]);
    assert_eq!(stdout(&b), text);
    let c = lifebench(&["layout", "--task", "DoorKey", "--param", "size=99"]);
    assert_eq!(c.status.code(), Some(2));
}
