use std::path::Path;
use std::process::{Command, Output};

const DEMO: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/demo_5x5.plan");

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvereach")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn verify(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["verify", "--plan", DEMO, "--out", out.to_str().unwrap(), "--m", "40"];
    args.extend_from_slice(extra);
    run(&args)
}

fn write_plan(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn verify_writes_one_bitmap_per_interior_border() {
    let dir = tempfile::tempdir().unwrap();
    let o = verify(dir.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let crbm = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "crbm"))
        .count();
    assert_eq!(crbm, 40);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["iterations"].as_u64().unwrap() >= 1);
    assert_eq!(summary["borders"].as_array().unwrap().len(), 40);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(verify(a.path(), &["--threads", "1"]).status.success());
    assert!(verify(b.path(), &["--threads", "4"]).status.success());
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for n in names {
        assert_eq!(
            std::fs::read(a.path().join(&n)).unwrap(),
            std::fs::read(b.path().join(&n)).unwrap(),
            "{n:?} differs"
        );
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let wide = write_plan(dir.path(), "wide.plan", "d 2\nr 2\ngrid 1 1\ntarget 0 0\ncells\n0\n");
    let o = run(&["verify", "--plan", &wide, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("smaller than the minimum turning radius"));

    let broken = write_plan(dir.path(), "broken.plan", "d 1\nr 2\ngrid 1 2\ntarget 0 0\ncells\n0 ninety\n");
    let o = run(&["verify", "--plan", &broken, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken.plan:6:3"));

    let empty = tempfile::tempdir().unwrap();
    let o = run(&["query", "--out", empty.path().to_str().unwrap(), "--plan", DEMO, "--x", "1", "--y", "1", "--theta", "0"]);
    assert_eq!(o.status.code(), Some(2));

    // demanding more than perfect agreement cannot pass
    let o = run(&["oracle-check", "--plan", DEMO, "--m", "40", "--samples", "200", "--threshold", "1.5"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn queries() {
    let dir = tempfile::tempdir().unwrap();
    assert!(verify(dir.path(), &[]).status.success());
    let out = dir.path().to_str().unwrap();
    let q = |x: &str, y: &str, t: &str| run(&["query", "--out", out, "--x", x, "--y", y, "--theta", t]);
    assert!(stdout(&q("2.5", "4.5", "0")).starts_with("reachable"));
    // straight up the middle column, one cell below the target
    assert!(stdout(&q("2.5", "3.5", "90")).starts_with("reachable"));
    assert!(stdout(&q("0.5", "0.5", "90")).starts_with("not_reachable_at_resolution"));
    assert_eq!(q("-1", "0.5", "90").status.code(), Some(2));
}

#[test]
fn oracle_check_is_deterministic() {
    let a = run(&["oracle-check", "--plan", DEMO, "--m", "40", "--samples", "3000", "--seed", "7"]);
    let b = run(&["oracle-check", "--plan", DEMO, "--m", "40", "--samples", "3000", "--seed", "7", "--threads", "2"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let z = run(&["oracle-check", "--plan", DEMO, "--m", "40", "--samples", "0"]);
    assert!(z.status.success());
    assert!(stdout(&z).contains("vacuously"));
}

fn read_pgm(path: &str) -> (usize, usize, Vec<u8>) {
    let bytes = std::fs::read(path.trim()).unwrap();
    let header: Vec<&[u8]> = bytes.splitn(4, |&b| b == b'\n').collect();
    assert_eq!(header[0], b"P5");
    let dims: Vec<usize> =
        std::str::from_utf8(header[1]).unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
    (dims[0], dims[1], header[3].to_vec())
}

#[test]
fn renders() {
    let dir = tempfile::tempdir().unwrap();
    assert!(verify(dir.path(), &[]).status.success());
    let out = dir.path().to_str().unwrap();

    // h_4_2 borders the target: completely set
    let o = run(&["render", "--out", out, "--fmt", "pgm", "--border", "h_4_2"]);
    assert!(o.status.success());
    let (w, h, px) = read_pgm(&stdout(&o));
    assert_eq!((w, h), (40, 40));
    assert!(px.iter().all(|&p| p == 0));

    // slice at the commanded heading: the target column is filled
    let o = run(&["render", "--out", out, "--fmt", "pgm", "--theta", "90", "--k", "4"]);
    let (w, h, px) = read_pgm(&stdout(&o));
    assert_eq!((w, h), (20, 20));
    for y in 0..20 {
        for x in 0..20 {
            let in_column = (8..12).contains(&x);
            assert_eq!(px[y * w + x] == 0, in_column, "pixel ({x}, {y})");
        }
    }

    let o = run(&["render", "--out", out, "--fmt", "svg", "--border", "h_2_2"]);
    let svg = std::fs::read_to_string(stdout(&o).trim()).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<rect"));

    let o = run(&["render", "--out", out, "--fmt", "pgm", "--border", "h_9_9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn near_tangent_backward_command_leaves_unset_area() {
    // d/r = 0.95 with a command pointing away from the target row
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(
        dir.path(),
        "back.plan",
        "d 0.95\nr 1\ngrid 3 1\ntarget 2 0\ncells\n0\n250\n250\n",
    );
    let out = dir.path().join("out");
    let o = run(&["verify", "--plan", &plan, "--out", out.to_str().unwrap(), "--m", "36"]);
    assert!(o.status.success());
    let o = run(&["render", "--out", out.to_str().unwrap(), "--fmt", "pgm", "--border", "h_1_0"]);
    let (_, _, px) = read_pgm(&stdout(&o));
    let set = px.iter().filter(|&&p| p == 0).count();
    assert!(set > 0 && set < px.len(), "{set} of {} set", px.len());
}

#[test]
fn bits_command() {
    let o = run(&["bits", "1", "7"]);
    assert_eq!(stdout(&o), "border_encoding_bits 0\ndense_3d_bits 343\n");
}
