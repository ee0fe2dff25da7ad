use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ringbid(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ringbid"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SCENARIO: &str = "\
# two honest bidders, a repudiator and a sniper
seed = 5
bidders = honest-increment, repudiator, honest-increment, sniper
rounds = 3
params = pp.txt
tracekey = pp.txt.tracekey
";

#[test]
fn setup_run_verify_trace() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = ringbid(
        &[
            "setup", "--p-bits", "16", "--q-bits", "16", "--k", "16", "--seed", "3", "--out",
            "pp.txt",
        ],
        d,
    );
    assert!(o.status.success(), "{o:?}");
    assert!(d.join("pp.txt.tracekey").exists());

    fs::write(d.join("sc.txt"), SCENARIO).unwrap();
    let o = ringbid(
        &["run", "--scenario", "sc.txt", "--out", "t.txt", "--counts"],
        d,
    );
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert!(out.contains("winner bidder-3"), "{out}");
    assert!(out.contains("bidder-1 repudiated"), "{out}");
    assert!(out.contains("signing cost"), "{out}");

    let o = ringbid(&["verify", "--transcript", "t.txt"], d);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    let winning: u64 = out
        .split("winning bid ")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();

    let seq = winning.to_string();
    let o = ringbid(
        &[
            "trace",
            "--transcript",
            "t.txt",
            "--seq",
            &seq,
            "--params",
            "pp.txt",
            "--tracekey",
            "pp.txt.tracekey",
        ],
        d,
    );
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert!(out.contains("position: "));

    // the traced key was published by the sniper, the fourth registration
    let text = fs::read_to_string(d.join("t.txt")).unwrap();
    let key_hex = out
        .lines()
        .find_map(|l| l.strip_prefix("pub_key: "))
        .unwrap();
    let fourth = text
        .lines()
        .filter(|l| l.split(' ').nth(1) == Some("key-published"))
        .nth(3)
        .unwrap();
    assert_eq!(fourth.split(' ').nth(2), Some(key_hex));
}

#[test]
fn tampered_transcript_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("sc.txt"),
        "bidders = honest-increment, honest-increment\n",
    )
    .unwrap();
    assert!(
        ringbid(&["run", "--scenario", "sc.txt", "--out", "t.txt"], d)
            .status
            .success()
    );
    let text = fs::read_to_string(d.join("t.txt")).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let last = lines.len() - 1;
    let cut = lines[last].rfind(' ').unwrap();
    let flipped = if &lines[last][cut + 1..cut + 2] == "0" {
        "1"
    } else {
        "0"
    };
    lines[last].replace_range(cut + 1..cut + 2, flipped);
    fs::write(d.join("t.txt"), lines.join("\n") + "\n").unwrap();

    let o = ringbid(&["verify", "--transcript", "t.txt"], d);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(&format!("invalid at record {last}")), "{err}");
}

#[test]
fn usage_and_input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(ringbid(&["verify"], d).status.code(), Some(2));
    assert_eq!(
        ringbid(&["verify", "--transcript", "missing"], d)
            .status
            .code(),
        Some(2)
    );
    fs::write(d.join("sc.txt"), "colour = blue\n").unwrap();
    assert_eq!(
        ringbid(&["run", "--scenario", "sc.txt", "--out", "t.txt"], d)
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn trace_refuses_mismatched_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let setup = |seed: &str, out: &str| {
        let args = [
            "setup", "--p-bits", "16", "--q-bits", "16", "--k", "8", "--seed", seed, "--out", out,
        ];
        assert!(ringbid(&args, d).status.success());
    };
    setup("1", "a.txt");
    setup("2", "b.txt");
    fs::write(
        d.join("sc.txt"),
        "params = a.txt\ntracekey = a.txt.tracekey\n",
    )
    .unwrap();
    assert!(
        ringbid(&["run", "--scenario", "sc.txt", "--out", "t.txt"], d)
            .status
            .success()
    );
    let o = ringbid(
        &[
            "trace",
            "--transcript",
            "t.txt",
            "--seq",
            "4",
            "--params",
            "b.txt",
            "--tracekey",
            "b.txt.tracekey",
        ],
        d,
    );
    assert_eq!(o.status.code(), Some(2));
    let o = ringbid(
        &[
            "trace",
            "--transcript",
            "t.txt",
            "--seq",
            "1",
            "--params",
            "a.txt",
            "--tracekey",
            "a.txt.tracekey",
        ],
        d,
    );
    assert_eq!(o.status.code(), Some(2), "record 1 is a key, not a bid");
}
