use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn horizonbench(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_horizonbench"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("horizonbench runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn convcalc_reproduces_layer_arithmetic() {
    let dir = tempfile::tempdir().unwrap();
    let calc = |args: &[&str]| {
        let o = horizonbench(args, dir.path());
        assert!(o.status.success(), "{o:?}");
        stdout(&o).trim().to_owned()
    };
    let conv = |r, f, p, s| {
        calc(&[
            "convcalc", "--in-res", r, "--filter", f, "--pad", p, "--stride", s,
        ])
    };
    assert_eq!(conv("224", "3", "1", "1"), "224");
    assert_eq!(conv("224", "2", "0", "2"), "112");
    assert_eq!(conv("7", "7", "0", "1"), "1");
    assert_eq!(
        calc(&[
            "convcalc", "--in-res", "112", "--filter", "2", "--pad", "0", "--stride", "2",
            "--deconv"
        ]),
        "224"
    );
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| horizonbench(args, dir.path()).status.code();
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["--version"]), Some(0));
    assert_eq!(code(&[]), Some(1));
    assert_eq!(code(&["frobnicate"]), Some(1));
    assert_eq!(
        code(&["convcalc", "--in-res", "x", "--filter", "3", "--pad", "1", "--stride", "1"]),
        Some(1)
    );
    assert_eq!(
        code(&[
            "postprocess",
            "--in",
            "m.png",
            "--method",
            "pp3",
            "--out",
            "o.png"
        ]),
        Some(1)
    );
    // Stride does not divide the span: a parameter error.
    assert_eq!(
        code(&["convcalc", "--in-res", "224", "--filter", "3", "--pad", "0", "--stride", "2"]),
        Some(1)
    );
    // Missing input file: a data error.
    assert_eq!(
        code(&[
            "postprocess",
            "--in",
            "m.png",
            "--method",
            "pp1",
            "--out",
            "o.png"
        ]),
        Some(2)
    );
}

#[test]
fn end_to_end_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let ok = |args: &[&str]| {
        let o = horizonbench(args, root);
        assert!(
            o.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        o
    };
    let small = ["--width", "64", "--height", "48"];
    ok(&[
        &["synth", "--count", "4", "--seed", "3", "--out", "train"][..],
        &small,
    ]
    .concat());
    ok(&[
        &[
            "synth",
            "--count",
            "3",
            "--seed",
            "3",
            "--start-index",
            "4",
            "--out",
            "test",
        ][..],
        &small,
    ]
    .concat());
    assert!(root.join("test/images/synth_0004.png").is_file());
    assert!(root.join("test/skylines/synth_0006.csv").is_file());

    ok(&[
        "train",
        "--dataset",
        "train",
        "--mode",
        "boundary",
        "--epochs",
        "40",
        "--out",
        "b.txt",
    ]);
    ok(&[
        "train",
        "--dataset",
        "train",
        "--mode",
        "region",
        "--epochs",
        "40",
        "--lr",
        "0.05",
        "--seed",
        "9",
        "--out",
        "r.txt",
    ]);
    assert!(fs::read_to_string(root.join("r.txt"))
        .unwrap()
        .starts_with("HBMODEL v1\nregion\n"));

    let image = "test/images/synth_0004.png";
    ok(&[
        "score", "--model", "b.txt", "--image", image, "--out", "map.hbs",
    ]);
    assert!(fs::read(root.join("map.hbs"))
        .unwrap()
        .starts_with(b"HBSCORE v1 48 64\n"));

    ok(&[
        "extract",
        "--variant",
        "dcsi",
        "--model",
        "b.txt",
        "--image",
        image,
        "--delta",
        "10",
        "--lambda",
        "0.1",
        "--out",
        "d.csv",
    ]);
    ok(&[
        "extract",
        "--variant",
        "energy",
        "--model",
        "b.txt",
        "--region-model",
        "r.txt",
        "--image",
        image,
        "--mu",
        "50",
        "--out",
        "e.csv",
    ]);
    for f in ["d.csv", "e.csv"] {
        let text = fs::read_to_string(root.join(f)).unwrap();
        assert_eq!(text.lines().count(), 65, "{f}");
        assert_eq!(text.lines().next(), Some("column,row"));
    }
    let wrong = horizonbench(
        &[
            "extract",
            "--variant",
            "energy",
            "--model",
            "b.txt",
            "--image",
            image,
            "--out",
            "x.csv",
        ],
        root,
    );
    assert_eq!(wrong.status.code(), Some(1));

    ok(&[
        "postprocess",
        "--in",
        "test/masks/synth_0005.png",
        "--method",
        "pp2",
        "--connectivity",
        "8",
        "--out",
        "pp.png",
    ]);
    assert_eq!(
        fs::read(root.join("pp.png")).unwrap(),
        fs::read(root.join("test/masks/synth_0005.png")).unwrap()
    );

    fs::write(
        root.join("spec.ini"),
        "[dcsi]\nname = DCSI\nsource = internal\nvariant = dcsi\nmodel = b.txt\npostproc = pp2\n\n\
         [gt]\nname = GT\nsource = external\nmasks_dir = test/masks\n",
    )
    .unwrap();
    let o = ok(&[
        "evaluate",
        "--dataset",
        "test",
        "--pipeline",
        "spec.ini",
        "--report",
        "r.csv",
        "--format",
        "csv",
    ]);
    let report = fs::read_to_string(root.join("r.csv")).unwrap();
    assert_eq!(stdout(&o), report);
    assert!(report.starts_with("approach,accuracy,dist_mean,dist_std\nDCSI,"));
    assert!(report.ends_with("GT,1.0000,0.000,0.000\n"));

    ok(&[
        "evaluate",
        "--dataset",
        "test",
        "--pipeline",
        "spec.ini",
        "--report",
        "r2.csv",
        "--workers",
        "3",
    ]);
    assert_eq!(fs::read(root.join("r2.csv")).unwrap(), report.as_bytes());

    ok(&[
        "evaluate",
        "--dataset",
        "test",
        "--pipeline",
        "spec.ini",
        "--report",
        "r.md",
        "--format",
        "md",
        "--std",
        "sample",
    ]);
    assert!(fs::read_to_string(root.join("r.md"))
        .unwrap()
        .starts_with("| Approach |"));

    fs::write(
        root.join("bad.ini"),
        "[x]\nsource = internal\nvariant = dcsi\nmodel = b.txt\ncolour = red\n",
    )
    .unwrap();
    let o = horizonbench(
        &[
            "evaluate",
            "--dataset",
            "test",
            "--pipeline",
            "bad.ini",
            "--report",
            "x.csv",
        ],
        root,
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.ini:5"));
}
