use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hdltex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdltex")).args(args).output().expect("spawn hdltex")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TINY: &str = "\
[model]
parent = dnn
child = dnn
seed = 3

[training]
epochs = 3
batch_size = 8

[features]
min_count = 1
max_features = 500

[dnn]
hidden_layers = 1
width = 8
";

fn corpus() -> String {
    let mut text = String::from("# parent\tchild\ttext\n");
    let words = [
        ["neuron synapse cortex", "gene protein enzyme"],
        ["circuit voltage diode", "compiler parser kernel"],
    ];
    let names = [["neuro", "bio"], ["power", "systems"]];
    let parents = ["medicine", "engineering"];
    for (p, pair) in words.iter().enumerate() {
        for (c, w) in pair.iter().enumerate() {
            for i in 0..10 {
                text.push_str(&format!("{}\t{}\t{w} sample{i} {w}\n", parents[p], names[p][c]));
            }
        }
    }
    text
}

#[test]
fn help_and_usage_codes() {
    assert_eq!(hdltex(&["--help"]).status.code(), Some(0));
    assert_eq!(hdltex(&["train", "--help"]).status.code(), Some(0));
    assert_eq!(hdltex(&["--no-such-flag"]).status.code(), Some(1));
    assert_eq!(hdltex(&[]).status.code(), Some(1));
    assert_eq!(hdltex(&["predict", "--model", "m.hdl"]).status.code(), Some(1));
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("all.tsv"), corpus()).unwrap();
    fs::write(d.join("tiny.ini"), TINY).unwrap();
    let (train, test, model, cfg) = (d.join("train.tsv"), d.join("test.tsv"), d.join("m.hdl"), d.join("tiny.ini"));

    let o = hdltex(&["prepare", "--tsv", s(&d.join("all.tsv")), "--train-out", s(&train), "--test-out", s(&test)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("40 documents, 2 domains, 4 areas"));

    let o = hdltex(&["train", "--data", s(&train), "--out", s(&model), "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("level=parent epoch=1"));
    assert!(model.exists());

    let o = hdltex(&["evaluate", "--model", s(&model), "--data", s(&test)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = hdltex(&["evaluate", "--model", s(&model), "--data", s(&test), "--report", "kv"]);
    let kv = stdout(&o);
    assert!(kv.contains("documents=8"), "{kv}");
    let combined: f64 = kv
        .lines()
        .find_map(|l| l.strip_prefix("combined_accuracy="))
        .expect("combined key")
        .parse()
        .unwrap();
    assert!((0.0..=1.0).contains(&combined));

    let o = hdltex(&["predict", "--model", s(&model), "--text", "circuit voltage diode"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o);
    let fields: Vec<&str> = line.trim_end().split('\t').collect();
    assert_eq!(fields.len(), 4, "{line}");
    for p in &fields[2..] {
        assert!((0.0..=1.0).contains(&p.parse::<f64>().unwrap()));
    }

    fs::write(d.join("q.txt"), "gene protein\nneuron cortex\ncompiler kernel\n").unwrap();
    let o = hdltex(&["predict", "--model", s(&model), "--file", s(&d.join("q.txt")), "--probs"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 3);

    let o = hdltex(&["baseline", "--train", s(&train), "--test", s(&test), "--report", "kv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("documents=8"), "{}", stdout(&o));
}

#[test]
fn data_errors_exit_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = d.join("absent.tsv");
    let o = hdltex(&["prepare", "--tsv", s(&missing), "--train-out", s(&d.join("a")), "--test-out", s(&d.join("b"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.tsv"));

    fs::write(d.join("bad.tsv"), "a\tb\tfine text\nonly-one-field\n").unwrap();
    let o = hdltex(&["prepare", "--tsv", s(&d.join("bad.tsv")), "--train-out", s(&d.join("a")), "--test-out", s(&d.join("b"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":2"), "{}", stderr(&o));

    fs::write(d.join("bad.ini"), "[model]\nparent = dnn\nbogus = 1\n").unwrap();
    let o = hdltex(&["train", "--print-config", "--config", s(&d.join("bad.ini"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains('3'), "{}", stderr(&o));
}

#[test]
fn divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("all.tsv"), corpus()).unwrap();
    let cfg = format!("{TINY}\n[optimizer]\nkind = sgd\nlearning_rate = 1e300\nmomentum = 0.9\n");
    fs::write(d.join("boom.ini"), cfg).unwrap();
    let o = hdltex(&["train", "--data", s(&d.join("all.tsv")), "--out", s(&d.join("m.hdl")), "--config", s(&d.join("boom.ini")), "--quiet"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!d.join("m.hdl").exists());
}

#[test]
fn gradcheck_dense_passes() {
    let o = hdltex(&["gradcheck", "--family", "dense", "--seeds", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert_eq!(hdltex(&["gradcheck", "--epsilon", "0.1"]).status.code(), Some(1));
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = stdout(&hdltex(&["train", "--print-config", "--seed", "11"]));
    assert!(first.contains("seed = 11"), "{first}");
    let path = dir.path().join("c.ini");
    fs::write(&path, &first).unwrap();
    let second = hdltex(&["train", "--print-config", "--config", s(&path)]);
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(stdout(&second), first);
}
