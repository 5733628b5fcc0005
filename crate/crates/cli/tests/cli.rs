use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use vsrlab_core::harness::{load_snapshot, ExperimentConfig};
use vsrlab_core::videocore::{list_frame_files, load_video};

const TINY: &[&str] = &[
    "--preset",
    "desk-scale",
    "--set",
    "model.flow_widths=[4, 4]",
    "--set",
    "model.sr_width=4",
    "--set",
    "model.sr_blocks=1",
    "--set",
    "data.synthetic.videos=2",
    "--set",
    "data.synthetic.frames=6",
    "--set",
    "data.synthetic.height=32",
    "--set",
    "data.synthetic.width=32",
    "--set",
    "data.test_sets.0.synthetic.frames=5",
    "--set",
    "data.test_sets.0.synthetic.height=48",
    "--set",
    "data.test_sets.0.synthetic.width=48",
    "--set",
    "data.test_sets.1.synthetic.frames=4",
    "--set",
    "data.test_sets.1.synthetic.height=48",
    "--set",
    "data.test_sets.1.synthetic.width=48",
    "--set",
    "training.iterations=4",
    "--set",
    "training.clip_len=3",
    "--set",
    "training.crop=6",
    "--set",
    "training.batch=2",
    "--set",
    "training.checkpoint_every=0",
];

fn vsrlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vsrlab"))
        .args(args)
        .env_remove("VSRLAB_OUTPUT_ROOT")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = vsrlab(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> (i32, String) {
    let out = vsrlab(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "error is not one line: {err}");
    assert!(err.starts_with("error kind="), "{err}");
    (out.status.code().unwrap(), err)
}

fn with_tiny<'a>(head: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    let mut v = head.to_vec();
    v.extend_from_slice(TINY);
    v.extend_from_slice(tail);
    v
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_generators() {
    let tmp = tempfile::tempdir().unwrap();
    let stat = tmp.path().join("static");
    ok(&["synth", "static", "--procedural", "16x12", "--seed", "3", "--length", "300", "--out", s(&stat)]);
    assert_eq!(list_frame_files(&stat).unwrap().len(), 300);
    let manifest = fs::read_to_string(stat.join("manifest.toml")).unwrap();
    assert!(manifest.contains("generator = \"static\"") && manifest.contains("seed = 3"));

    let short = tmp.path().join("short");
    ok(&["synth", "sliding", "--procedural", "40x20", "--slide", "1", "--window", "8x8", "--length", "7", "--out", s(&short)]);
    let pal = tmp.path().join("pal");
    ok(&["synth", "palindrome", "--in", s(&short), "--length", "181", "--out", s(&pal)]);
    let v = load_video(&pal).unwrap();
    assert_eq!(v.frame_count(), 181);
    assert_eq!(v.frame(12), v.frame(0));

    let slide = tmp.path().join("slide");
    ok(&["synth", "sliding", "--procedural", "64x16", "--slide", "16", "--window", "16x16", "--length", "3", "--out", s(&slide)]);
    let v = load_video(&slide).unwrap();
    let src = vsrlab_core::synthgen::procedural_frame(16, 64, 3, 0);
    let q = |img: &vsrlab_core::Image| img.map(|x| (x * 255.0).round() / 255.0);
    assert_eq!(v.frame(1), &q(&src.crop(16, 0, 16, 16).unwrap()));

    let gamma = tmp.path().join("gamma");
    ok(&["synth", "gamma", "--frame", s(&stat.join("00000000.png")), "--length", "5", "--out", s(&gamma)]);
    assert_eq!(list_frame_files(&gamma).unwrap().len(), 5);

    let (code, err) = fails(&["synth", "zoom", "--length", "3"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error kind=usage"));
}

#[test]
fn degrade_command() {
    let tmp = tempfile::tempdir().unwrap();
    let hr = tmp.path().join("hr");
    ok(&["synth", "static", "--procedural", "32x24", "--length", "2", "--out", s(&hr)]);
    let lr = tmp.path().join("lr");
    ok(&["degrade", "--in", s(&hr), "--out", s(&lr)]);
    assert_eq!(load_video(&lr).unwrap().shape(), [2, 6, 8, 3]);
    let (_, err) = fails(&["degrade", "--in", s(&tmp.path().join("nope")), "--out", s(&lr)]);
    assert!(err.contains("kind=missing-directory"), "{err}");
}

#[test]
fn train_flags_and_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let out = ok(&with_tiny(&["train", "--strategy", "pi", "--R", "2"], &["--out", s(&a)]));
    assert!(out.contains("stores_built="));
    ok(&with_tiny(&["train", "--strategy", "pi", "--R", "64"], &["--out", s(&b)]));
    let (ca, mut cb) = (load_snapshot(&a).unwrap(), load_snapshot(&b).unwrap());
    assert_eq!((ca.training.reuse, cb.training.reuse), (2, 64));
    cb.training.reuse = 2;
    assert_eq!(ca, cb);

    let ri = tmp.path().join("ri");
    let out = ok(&with_tiny(&["train", "--strategy", "ri", "--cond-frame-number"], &["--out", s(&ri)]));
    assert!(out.contains("stores_built=0"), "{out}");
    let snap = load_snapshot(&ri).unwrap();
    assert!(snap.model.condition.enabled);

    let (_, err) = fails(&with_tiny(&["train"], &["--set", "training.warp_wieght=2", "--out", s(&ri)]));
    assert!(err.contains("kind=config") && err.contains("warp_wieght"), "{err}");
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "seed = 1\n[training]\nstrategy = \"pi\"\nbogus = 3\n").unwrap();
    let (_, err) = fails(&["train", "--config", s(&bad), "--out", s(&ri)]);
    assert!(err.contains("bogus"), "{err}");
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_vsrlab"))
        .args(with_tiny(&["train"], &["--set", "output_dir=\"rel\""]))
        .env("VSRLAB_OUTPUT_ROOT", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("rel").join("loss.csv").exists());
}

#[test]
fn eval_outputs_and_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    ok(&with_tiny(&["train"], &["--out", s(&run)]));
    let ckpt = fs::read_dir(run.join("checkpoints")).unwrap().next().unwrap().unwrap().path();

    let mut hr_dirs = Vec::new();
    for i in 0..4 {
        let d = tmp.path().join(format!("hr{i}"));
        ok(&["synth", "static", "--procedural", "48x48", "--seed", &i.to_string(), "--length", "3", "--out", s(&d)]);
        hr_dirs.push(d);
    }
    let eval = |out: &Path| {
        let mut args = vec!["eval", "--checkpoint", s(&ckpt), "--out", s(out)];
        for d in &hr_dirs {
            args.extend(["--test", s(d)]);
        }
        ok(&args)
    };
    let (e1, e2) = (tmp.path().join("e1"), tmp.path().join("e2"));
    eval(&e1);
    eval(&e2);
    let frames: Vec<_> = fs::read_dir(e1.join("frames")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(frames.len(), 4);
    for f in &frames {
        assert_eq!(fs::read(f).unwrap(), fs::read(e2.join("frames").join(f.file_name().unwrap())).unwrap());
    }
    assert_eq!(fs::read(e1.join("summary.csv")).unwrap(), fs::read(e2.join("summary.csv")).unwrap());

    let preset = ok(&["eval", "--checkpoint", s(&ckpt), "--preset", "desk-scale", "--set", "data.test_sets.0.synthetic.frames=3", "--set", "data.test_sets.1.synthetic.frames=3", "--out", s(&tmp.path().join("e3"))]);
    assert!(preset.contains("set=static-probe") && preset.contains("set=short"), "{preset}");

    let (_, err) = fails(&["eval", "--checkpoint", s(&ckpt), "--scale", "2", "--test", s(&hr_dirs[0])]);
    assert!(err.contains("scale"), "{err}");

    let sr = tmp.path().join("sr");
    ok(&["eval", "--checkpoint", s(&ckpt), "--no-hr", "--test", s(&hr_dirs[0]), "--out", s(&sr)]);
    assert_eq!(load_video(&sr.join("hr0")).unwrap().shape(), [3, 192, 192, 3]);
}

#[test]
fn tradeoff_and_plots() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("sweep");
    let out = ok(&with_tiny(&["tradeoff", "--R", "2,64"], &["--out", s(&dir)]));
    assert_eq!(out.lines().filter(|l| l.starts_with("label=")).count(), 3);
    let svg = tmp.path().join("t.svg");
    ok(&["plot", "tradeoff", s(&dir.join("tradeoff_scatter.csv")), "--out", s(&svg)]);
    assert_eq!(fs::read_to_string(&svg).unwrap().matches("<circle").count(), 3);

    let hist: Vec<String> = ["base", "r002"]
        .iter()
        .map(|m| {
            let p = fs::read_dir(dir.join(m).join("frames")).unwrap().next().unwrap().unwrap().path();
            p.to_str().unwrap().to_string()
        })
        .collect();
    let hsvg = tmp.path().join("h.svg");
    ok(&["plot", "history", &hist[0], &hist[1], "--out", s(&hsvg)]);
    assert_eq!(fs::read_to_string(&hsvg).unwrap().matches("<polyline").count(), 2);

    let empty = tmp.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let esvg = tmp.path().join("e.svg");
    let (_, err) = fails(&["plot", "history", s(&empty), "--out", s(&esvg)]);
    assert!(err.contains("kind=csv"), "{err}");
    assert!(!esvg.exists());
}

#[test]
fn presets_are_valid_configs() {
    for name in ["frvsr-paper", "desk-scale"] {
        ExperimentConfig::preset(name).unwrap();
    }
}
