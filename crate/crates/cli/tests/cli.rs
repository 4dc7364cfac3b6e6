mod common;

use std::fs;

use common::{hash_tree, p, segfuse, stdout, write_classes, write_corpus, write_labels};
use segfuse_core::{io, report};

fn code(out: &std::process::Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn evaluate_identical_dirs() {
    let root = tempfile::tempdir().unwrap();
    let gt = root.path().join("gt");
    write_labels(&gt, "a.png", 3, &[0, 1, 2, 255, 2, 1]);
    write_classes(&root.path().join("c.tsv"), 3);
    let out = segfuse(&["evaluate", "--gt", p(&gt), "--pred", p(&gt), "--classes", p(&root.path().join("c.tsv"))]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("mIoU: 1.0000"), "{text}");
    assert!(text.contains("pixels: 5"), "{text}");
}

#[test]
fn evaluate_worked_example_and_csv() {
    let root = tempfile::tempdir().unwrap();
    let (gt, pred) = (root.path().join("gt"), root.path().join("model-a"));
    write_labels(&gt, "x.png", 2, &[0, 0, 1, 1]);
    write_labels(&pred, "x.png", 2, &[0, 1, 1, 1]);
    let classes = root.path().join("c.tsv");
    write_classes(&classes, 2);
    let csv = root.path().join("out/a.csv");
    let out = segfuse(&[
        "evaluate", "--gt", p(&gt), "--pred", p(&pred), "--classes", p(&classes), "--csv", p(&csv),
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("model: model-a"));
    assert!(text.contains("pixel accuracy: 0.7500"));
    assert!(text.contains("mIoU: 0.5833"));
    let rows = report::parse_csv(&fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].model_id, "model-a");
    assert_eq!(rows[0].per_class_iou, vec![Some(0.5), Some(0.6667)]);
}

#[test]
fn evaluate_error_codes() {
    let root = tempfile::tempdir().unwrap();
    let (gt, pred) = (root.path().join("gt"), root.path().join("pred"));
    let classes = root.path().join("c.tsv");
    write_classes(&classes, 2);
    write_labels(&gt, "a.png", 1, &[0]);
    write_labels(&pred, "b.png", 1, &[0]);
    let missing = segfuse(&["evaluate", "--gt", p(&gt), "--pred", p(&pred), "--classes", p(&classes)]);
    assert_eq!(code(&missing), 3);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("b.png"));

    write_labels(&pred, "a.png", 1, &[7]);
    fs::remove_file(pred.join("b.png")).unwrap();
    let out_of_range = segfuse(&["evaluate", "--gt", p(&gt), "--pred", p(&pred), "--classes", p(&classes)]);
    assert_eq!(code(&out_of_range), 3);

    let no_classes = root.path().join("nope.tsv");
    let io_fail = segfuse(&["evaluate", "--gt", p(&gt), "--pred", p(&gt), "--classes", p(&no_classes)]);
    assert_eq!(code(&io_fail), 4);

    assert_eq!(code(&segfuse(&["evaluate", "--gt", p(&gt)])), 2);
    assert_eq!(code(&segfuse(&["--threads", "0", "report", "--row", "a=0.5", "--fused-miou", "0.5"])), 2);
}

#[test]
fn fuse_majority_single_member_and_rerun() {
    let root = tempfile::tempdir().unwrap();
    let dirs: Vec<_> = (0..3).map(|i| root.path().join(format!("m{i}"))).collect();
    for (d, v) in dirs.iter().zip([0u8, 1, 1]) {
        write_labels(d, "f.png", 4, &[v; 16]);
        write_labels(d, "g.png", 2, &[v, 255, v, 2]);
    }
    let fuse = |members: &[std::path::PathBuf], out: &std::path::Path| {
        let mut args = vec!["fuse"];
        for m in members {
            args.extend(["--member", p(m)]);
        }
        args.extend(["--out", p(out)]);
        segfuse(&args)
    };

    let out = root.path().join("fused");
    let run = fuse(&dirs, &out);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout(&run).starts_with("fused 2 file(s) from 3 member(s)"));
    assert_eq!(io::read_label_map(&out.join("f.png"), 255).unwrap().data(), &[1; 16]);
    assert_eq!(io::read_label_map(&out.join("g.png"), 255).unwrap().data(), &[1, 255, 1, 2]);

    let again = root.path().join("again");
    fuse(&dirs, &again);
    assert_eq!(hash_tree(&out), hash_tree(&again));

    let single = root.path().join("single");
    assert_eq!(code(&fuse(&dirs[..1], &single)), 0);
    assert_eq!(hash_tree(&single), hash_tree(&dirs[0]));

    write_labels(&dirs[2], "h.png", 1, &[0]);
    assert_eq!(code(&fuse(&dirs, &root.path().join("bad"))), 3);
}

#[test]
fn report_from_evaluate_csvs() {
    let root = tempfile::tempdir().unwrap();
    let classes = root.path().join("c.tsv");
    write_classes(&classes, 2);
    let gt = root.path().join("gt");
    write_labels(&gt, "x.png", 2, &[0, 0, 1, 1]);
    let preds = [("iter1", [0u8, 1, 1, 1]), ("iter2", [0, 0, 1, 1]), ("fused", [0, 0, 1, 1])];
    for (name, data) in preds {
        let dir = root.path().join(name);
        write_labels(&dir, "x.png", 2, &data);
        let csv = root.path().join(format!("{name}.csv"));
        let run = segfuse(&["evaluate", "--gt", p(&gt), "--pred", p(&dir), "--classes", p(&classes), "--csv", p(&csv)]);
        assert_eq!(code(&run), 0);
    }
    let table_csv = root.path().join("table.csv");
    let run = segfuse(&[
        "report",
        "--member", p(&root.path().join("iter1.csv")),
        "--member", p(&root.path().join("iter2.csv")),
        "--fused", p(&root.path().join("fused.csv")),
        "--csv", p(&table_csv),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let text = stdout(&run);
    assert!(text.contains("iter1              0.5833\n"), "{text}");
    assert!(text.contains("Voting results     1.0000\n"), "{text}");
    let rows = report::parse_csv(&fs::read_to_string(&table_csv).unwrap()).unwrap();
    let ids: Vec<&str> = rows.iter().map(|r| r.model_id.as_str()).collect();
    assert_eq!(ids, ["iter1", "iter2", report::FUSED_LABEL]);
    assert_eq!(rows[0].pixel_count, 4);

    assert_eq!(code(&segfuse(&["report", "--row", "a=1.5", "--fused-miou", "0.5"])), 3);
    assert_eq!(code(&segfuse(&["report", "--row", "a=0.5"])), 2);
}

#[test]
fn verify_and_stats() {
    let root = tempfile::tempdir().unwrap();
    let manifest = write_corpus(root.path(), 4, (6, 5));
    let verify = segfuse(&["verify", "--manifest", p(&manifest)]);
    assert_eq!(code(&verify), 0);
    assert_eq!(stdout(&verify), "checked 4 record(s): 0 failure(s)\n");

    let stats = segfuse(&["stats", "--manifest", p(&manifest)]);
    assert_eq!(code(&stats), 0);
    let text = stdout(&stats);
    assert!(text.contains("scenes: 2\n"), "{text}");
    assert!(text.contains("frames: 4\n"), "{text}");
    assert!(text.contains("pixels: 120\n"), "{text}");

    fs::remove_file(root.path().join("adverse/001.png")).unwrap();
    // a resized label disagrees with both images of its record
    write_labels(&root.path().join("labels"), "002.png", 2, &[0, 1]);
    let verify = segfuse(&["verify", "--manifest", p(&manifest)]);
    assert_eq!(code(&verify), 3);
    assert_eq!(stdout(&verify), "checked 4 record(s): 3 failure(s)\n");

    assert_eq!(code(&segfuse(&["verify", "--manifest", p(&root.path().join("none.tsv"))])), 4);
}

#[test]
fn augment_writes_variants() {
    let root = tempfile::tempdir().unwrap();
    let manifest = write_corpus(&root.path().join("src"), 3, (8, 6));
    let spec = root.path().join("spec.cfg");
    fs::write(&spec, "crop_size = 4\ncontrast_factors = 0.8\nbrightness_deltas = 30\n").unwrap();
    let out = root.path().join("out");
    let run = segfuse(&[
        "augment", "--manifest", p(&manifest), "--spec", p(&spec), "--out", p(&out), "--online-samples", "2",
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    // two train records, each with itself plus two variants, plus one val record
    assert!(stdout(&run).starts_with("wrote 7 record(s) (6 train)"), "{}", stdout(&run));
    let verify = segfuse(&["verify", "--manifest", p(&out.join("manifest.tsv"))]);
    assert_eq!(code(&verify), 0, "{}", String::from_utf8_lossy(&verify.stderr));
    let online = io::list_pngs(&out.join("online/s0")).unwrap();
    assert!(online.iter().any(|n| n == "000+s1_label.png"), "{online:?}");
    let crop = io::read_label_map(&out.join("online/s0/000+s1_label.png"), 255).unwrap();
    assert_eq!((crop.width(), crop.height()), (4, 4));

    fs::write(&spec, "crop_size = 0\n").unwrap();
    let bad = segfuse(&["augment", "--manifest", p(&manifest), "--spec", p(&spec), "--out", p(&out)]);
    assert_eq!(code(&bad), 3);
}

#[test]
fn predict_colorize_round_trip() {
    let root = tempfile::tempdir().unwrap();
    let classes = root.path().join("c.tsv");
    write_classes(&classes, 3);
    let gt = root.path().join("gt");
    write_labels(&gt, "a.png", 3, &[0, 1, 2, 2, 1, 0]);
    let painted = root.path().join("painted");
    let pred = root.path().join("pred");
    assert_eq!(code(&segfuse(&["colorize", "--input", p(&gt), "--out", p(&painted), "--classes", p(&classes)])), 0);
    let run = segfuse(&["predict", "--input", p(&painted), "--out", p(&pred), "--classes", p(&classes), "--nearest-color"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(hash_tree(&pred), hash_tree(&gt));

    let constant = root.path().join("constant");
    segfuse(&["predict", "--input", p(&painted), "--out", p(&constant), "--classes", p(&classes), "--constant", "2"]);
    assert_eq!(io::read_label_map(&constant.join("a.png"), 255).unwrap().data(), &[2; 6]);

    let noisy = |dir: &str| {
        let out = root.path().join(dir);
        segfuse(&["predict", "--input", p(&gt), "--out", p(&out), "--classes", p(&classes), "--perturb", "0.5", "--seed", "9"]);
        hash_tree(&out)
    };
    assert_eq!(noisy("n1"), noisy("n2"));

    let bad = segfuse(&["predict", "--input", p(&painted), "--out", p(&constant), "--classes", p(&classes), "--constant", "3"]);
    assert_eq!(code(&bad), 3);
    assert_eq!(code(&segfuse(&["predict", "--input", p(&gt), "--out", p(&pred), "--classes", p(&classes)])), 2);
}
