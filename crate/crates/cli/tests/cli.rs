use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fsg_cli::imageio::{load_image, save_image, save_mask};
use fsg_core::io::format_landmarks;
use fsg_core::{Image, Label, LandmarkSet, SegMask};
use nalgebra::{DMatrix, DVector};

fn fsg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsg"))
        .args(args)
        .env("FSG_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = fsg(args);
    assert!(
        out.status.success(),
        "fsg {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    fsg(args).status.code().unwrap()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn textured(h: usize, w: usize, phase: f32) -> Image {
    Image::from_fn(h, w, 3, |r, c, k| {
        0.5 + 0.4 * ((r as f32 * 0.37 + c as f32 * 0.23 + k as f32 + phase).sin())
    })
    .unwrap()
}

fn lms(dx: f64) -> LandmarkSet {
    LandmarkSet::new(vec![
        [10.0 + dx, 12.0],
        [20.0 + dx, 12.0],
        [15.0 + dx, 18.0],
        [15.0 + dx, 23.0],
    ])
    .unwrap()
}

const POSES: [(f64, f64); 5] = [
    (-30.0, -20.0),
    (30.0, -20.0),
    (0.0, 25.0),
    (-5.0, 0.0),
    (12.0, 4.0),
];

/// Five source views and three targets, written as PNG.
fn fixture(dir: &Path) -> PathBuf {
    let mut m = String::from("fsg-manifest 1\n");
    for (i, (y, p)) in POSES.iter().enumerate() {
        save_image(&textured(32, 32, i as f32), &dir.join(format!("v{i}.png"))).unwrap();
        fs::write(dir.join(format!("v{i}.lms")), format_landmarks(&[lms(0.0)])).unwrap();
        m += &format!("view id={i} image=v{i}.png landmarks=v{i}.lms pose={y},{p},0\n");
    }
    for i in 0..3 {
        save_image(
            &textured(32, 32, 7.0 + i as f32),
            &dir.join(format!("t{i}.png")),
        )
        .unwrap();
        fs::write(
            dir.join(format!("t{i}.lms")),
            format_landmarks(&[lms(i as f64)]),
        )
        .unwrap();
        m += &format!(
            "target id=f{i} image=t{i}.png landmarks=t{i}.lms pose={},3,0\n",
            -10.0 + 8.0 * i as f64
        );
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, m).unwrap();
    path
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    assert_eq!(code(&[]), 3);
    assert_eq!(code(&["frobnicate"]), 3);
    assert_eq!(code(&["query", "--map", "x.fsam"]), 3);
}

#[test]
fn build_map_and_query() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = fixture(dir.path());
    let map = dir.path().join("face.fsam");
    ok(&["build-map", "--manifest", &s(&manifest), "--out", &s(&map)]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("face.fsam.json")).unwrap())
            .unwrap();
    assert_eq!(report["inputs"], 5);

    let q: serde_json::Value =
        serde_json::from_str(&ok(&["query", "--map", &s(&map), "--pose", "30,-20,4"])).unwrap();
    assert_eq!(q["views"][0], 1);
    assert_eq!(q["weights"], serde_json::json!([1.0, 0.0, 0.0]));

    let out = dir.path().join("q.json");
    let q: serde_json::Value = serde_json::from_str(&ok(&[
        "query",
        "--map",
        &s(&map),
        "--pose",
        "2,3",
        "--out",
        &s(&out),
    ]))
    .unwrap();
    let w: Vec<f64> = q["weights"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(w.windows(2).all(|p| p[0] >= p[1]));
    assert!(out.exists());

    assert_eq!(code(&["query", "--map", &s(&map), "--pose", "80,0,0"]), 3);
    assert_eq!(code(&["query", "--map", &s(&map), "--pose", "zero"]), 3);
    assert_eq!(
        code(&[
            "query",
            "--map",
            &s(&dir.path().join("missing.fsam")),
            "--pose",
            "0,0"
        ]),
        2
    );
}

#[test]
fn swap_through_an_external_peer() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = fixture(dir.path());
    let peer = format!(
        "exec:{} --mask ellipse:0.5,0.5,0.3,0.35,0.2",
        env!("CARGO_BIN_EXE_fsg-echo-peer")
    );
    let out = dir.path().join("out");
    ok(&[
        "swap",
        "--manifest",
        &s(&manifest),
        "--out",
        &s(&out),
        "--gen-s",
        &peer,
        "--gen-r",
        "mock:noise",
        "--seed",
        "3",
    ]);
    for i in 0..3 {
        let img = load_image(&out.join(format!("f{i}.png"))).unwrap();
        assert_eq!((img.height(), img.width(), img.channels()), (32, 32, 3));
        assert!(out.join(format!("f{i}_mask.png")).exists());
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["frames"].as_array().unwrap().len(), 3);

    let bad = dir.path().join("bad");
    assert_eq!(
        code(&[
            "swap",
            "--manifest",
            &s(&manifest),
            "--out",
            &s(&bad),
            "--gen-r",
            "mock:nothing"
        ]),
        3
    );
    let dead = format!(
        "exec:{} --mask nonsense",
        env!("CARGO_BIN_EXE_fsg-echo-peer")
    );
    assert_eq!(
        code(&[
            "swap",
            "--manifest",
            &s(&manifest),
            "--out",
            &s(&bad),
            "--gen-s",
            &dead
        ]),
        5
    );
}

#[test]
fn echo_peer_matches_the_builtin_mock() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = fixture(dir.path());
    let rule = "ellipse:0.5,0.5,0.3,0.35,0.2";
    let peer = |mask: &str| format!("exec:{} --mask {mask}", env!("CARGO_BIN_EXE_fsg-echo-peer"));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let run = |out: &Path, r: String, seg: String| {
        ok(&[
            "swap",
            "--manifest",
            &s(&manifest),
            "--out",
            &s(out),
            "--format",
            "fsim",
            "--gen-r",
            &r,
            "--gen-s",
            &seg,
        ]);
    };
    run(&a, peer("full"), peer(rule));
    run(&b, "mock:echo".into(), format!("mock:echo:{rule}"));
    for i in 0..3 {
        assert_eq!(
            fs::read(a.join(format!("f{i}.fsim"))).unwrap(),
            fs::read(b.join(format!("f{i}.fsim"))).unwrap()
        );
    }
}

#[test]
fn curate_applies_the_coverage_rule() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = String::from("fsg-manifest 1\n");
    for (i, cov) in [0.14, 0.15, 0.6, 0.9].iter().enumerate() {
        fs::write(
            dir.path().join(format!("l{i}.lms")),
            format_landmarks(&[lms(3.0 * i as f64)]),
        )
        .unwrap();
        m += &format!(
            "view id=f{i} landmarks=l{i}.lms pose={},0,0 coverage={cov}\n",
            20.0 * i as f64 - 30.0
        );
    }
    // a mask-derived coverage: the face fills the landmark box
    save_mask(
        &SegMask::filled(32, 32, Label::Face).unwrap(),
        &dir.path().join("m.png"),
    )
    .unwrap();
    fs::write(dir.path().join("l4.lms"), format_landmarks(&[lms(-4.0)])).unwrap();
    m += "view id=f4 landmarks=l4.lms pose=0,40,0 mask=m.png\n";
    fs::write(dir.path().join("m.txt"), m).unwrap();
    let out = dir.path().join("kept.txt");
    ok(&[
        "curate",
        "--manifest",
        &s(&dir.path().join("m.txt")),
        "--out",
        &s(&out),
    ]);
    assert_eq!(fs::read_to_string(&out).unwrap(), "f1\nf2\nf3\nf4\n");

    fs::write(dir.path().join("cap.conf"), "frame_cap = 2\n").unwrap();
    ok(&[
        "curate",
        "--config",
        &s(&dir.path().join("cap.conf")),
        "--manifest",
        &s(&dir.path().join("m.txt")),
        "--out",
        &s(&out),
    ]);
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 2);
}

#[test]
fn densify_writes_a_view_row() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = fixture(dir.path());
    let target = dir.path().join("new.lms");
    fs::write(&target, format_landmarks(&[lms(1.5)])).unwrap();
    let out = dir.path().join("new.png");
    let row = ok(&[
        "densify",
        "--manifest",
        &s(&manifest),
        "--pose",
        "-40,10,0",
        "--landmarks",
        &s(&target),
        "--out",
        &s(&out),
    ]);
    assert!(row.starts_with("view id=5 "), "{row}");
    assert!(out.exists() && dir.path().join("new.lms").exists());
}

#[test]
fn config_errors_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = fixture(dir.path());
    let conf = dir.path().join("c.conf");
    fs::write(&conf, "tol = 1e-6\ntol = 1e-7\n").unwrap();
    assert_eq!(
        code(&[
            "build-map",
            "--config",
            &s(&conf),
            "--manifest",
            &s(&manifest),
            "--out",
            "x"
        ]),
        3
    );
    fs::write(&conf, "colour = blue\n").unwrap();
    assert_eq!(
        code(&[
            "build-map",
            "--config",
            &s(&conf),
            "--manifest",
            &s(&manifest),
            "--out",
            "x"
        ]),
        3
    );
    assert_eq!(
        code(&[
            "build-map",
            "--manifest",
            &s(&manifest),
            "--out",
            "x",
            "--prune-radius",
            "-1"
        ]),
        3
    );
    assert_eq!(
        code(&[
            "build-map",
            "--manifest",
            &s(&dir.path().join("none.txt")),
            "--out",
            "x"
        ]),
        2
    );
}

#[test]
fn echo_peer_rejects_bad_mask_rules() {
    let out = Command::new(env!("CARGO_BIN_EXE_fsg-echo-peer"))
        .args(["--mask", "square"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

// ---------------------------------------------------------------- golden

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/blend8")
}

fn golden_inputs() -> (Image, Image, SegMask) {
    let target = Image::from_fn(8, 8, 3, |r, c, k| {
        (0.2 + 0.05 * r as f32 + 0.03 * c as f32 + 0.1 * k as f32).min(1.0)
    })
    .unwrap();
    let source = Image::from_fn(8, 8, 3, |r, c, k| {
        0.5 + 0.3 * ((r * c + k) as f32 * 0.7).sin()
    })
    .unwrap();
    let mask = SegMask::from_fn(8, 8, |r, c| match (r, c) {
        (2..=5, 2..=5) => Label::Face,
        (1, 3..=4) => Label::Hair,
        _ => Label::Background,
    })
    .unwrap();
    (target, source, mask)
}

/// Dense least squares over the free (face) pixels, from the normal
/// equations, clamped into range.
fn golden_oracle(t: &Image, src: &Image, mask: &SegMask) -> Image {
    let (h, w) = (t.height(), t.width());
    let free: Vec<bool> = mask.labels().iter().map(|&l| l == Label::Face).collect();
    let index: Vec<Option<usize>> = free
        .iter()
        .scan(0, |n, &f| {
            Some(f.then(|| {
                *n += 1;
                *n - 1
            }))
        })
        .collect();
    let n = free.iter().filter(|&&f| f).count();
    let mut planes = Vec::new();
    for ch in 0..3 {
        let (mut ata, mut atb) = (DMatrix::<f64>::zeros(n, n), DVector::<f64>::zeros(n));
        for a in 0..h * w {
            for b in [
                (a % w + 1 < w).then(|| a + 1),
                (a / w + 1 < h).then(|| a + w),
            ]
            .into_iter()
            .flatten()
            {
                if !free[a] && !free[b] {
                    continue;
                }
                let sv = |i: usize| src.get(i / w, i % w, ch) as f64;
                let tv = |i: usize| t.get(i / w, i % w, ch) as f64;
                let mut rhs = sv(a) - sv(b);
                let mut coeffs = Vec::new();
                match index[a] {
                    Some(k) => coeffs.push((k, 1.0)),
                    None => rhs -= tv(a),
                }
                match index[b] {
                    Some(k) => coeffs.push((k, -1.0)),
                    None => rhs += tv(b),
                }
                for &(i, x) in &coeffs {
                    atb[i] += x * rhs;
                    for &(j, y) in &coeffs {
                        ata[(i, j)] += x * y;
                    }
                }
            }
        }
        let x = ata.cholesky().unwrap().solve(&atb);
        planes.push(
            (0..h * w)
                .map(|i| {
                    index[i].map_or_else(|| t.data()[i * 3 + ch], |k| x[k].clamp(0.0, 1.0) as f32)
                })
                .collect::<Vec<f32>>(),
        );
    }
    Image::from_planes(h, w, &planes).unwrap()
}

/// `FSG_REGEN_GOLDEN=1` rewrites the fixture; otherwise it must match the oracle.
#[test]
fn golden_fixture_matches_oracle() {
    let dir = golden_dir();
    let (t, src, mask) = golden_inputs();
    let want = golden_oracle(&t, &src, &mask);
    if std::env::var_os("FSG_REGEN_GOLDEN").is_some() {
        fs::create_dir_all(&dir).unwrap();
        save_image(&t, &dir.join("target.fsim")).unwrap();
        save_image(&src, &dir.join("source.fsim")).unwrap();
        save_mask(&mask, &dir.join("mask.png")).unwrap();
        save_image(&want, &dir.join("expected.fsim")).unwrap();
        save_image(&want, &dir.join("expected.png")).unwrap();
    }
    assert_eq!(load_image(&dir.join("target.fsim")).unwrap(), t);
    assert_eq!(load_image(&dir.join("source.fsim")).unwrap(), src);
    let stored = load_image(&dir.join("expected.fsim")).unwrap();
    for (a, b) in stored.data().iter().zip(want.data()) {
        assert!((a - b).abs() <= 1e-6);
    }
    let png = tempfile::tempdir().unwrap();
    save_image(&want, &png.path().join("e.png")).unwrap();
    assert_eq!(
        fs::read(png.path().join("e.png")).unwrap(),
        fs::read(dir.join("expected.png")).unwrap()
    );
}

#[test]
fn blend_reproduces_the_golden_output() {
    let dir = golden_dir();
    let tmp = tempfile::tempdir().unwrap();
    let expected = load_image(&dir.join("expected.fsim")).unwrap();
    let target = load_image(&dir.join("target.fsim")).unwrap();
    let mask = fsg_cli::imageio::load_mask(&dir.join("mask.png")).unwrap();
    for solver in ["auto", "direct", "cg"] {
        let out = tmp.path().join(format!("{solver}.fsim"));
        ok(&[
            "blend",
            "--target",
            &s(&dir.join("target.fsim")),
            "--source",
            &s(&dir.join("source.fsim")),
            "--mask",
            &s(&dir.join("mask.png")),
            "--out",
            &s(&out),
            "--solver",
            solver,
            "--tol",
            "1e-10",
        ]);
        let got = load_image(&out).unwrap();
        for r in 0..8 {
            for c in 0..8 {
                for k in 0..3 {
                    let (g, e) = (got.get(r, c, k), expected.get(r, c, k));
                    if mask.get(r, c) == Label::Face {
                        assert!(
                            (g - e).abs() <= 1e-6,
                            "{solver} ({r}, {c}, {k}): {g} vs {e}"
                        );
                    } else {
                        assert_eq!(g.to_bits(), target.get(r, c, k).to_bits());
                    }
                }
            }
        }
        let report: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(tmp.path().join(format!("{solver}.fsim.json"))).unwrap(),
        )
        .unwrap();
        assert_eq!(report["free_pixels"], 16);

        let png = tmp.path().join(format!("{solver}.png"));
        ok(&[
            "blend",
            "--target",
            &s(&dir.join("target.fsim")),
            "--source",
            &s(&dir.join("source.fsim")),
            "--mask",
            &s(&dir.join("mask.png")),
            "--out",
            &s(&png),
            "--solver",
            solver,
        ]);
        assert_eq!(
            fs::read(&png).unwrap(),
            fs::read(dir.join("expected.png")).unwrap(),
            "{solver}"
        );
    }
}

#[test]
fn blend_convergence_failure_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let t = textured(48, 48, 0.0);
    let src = textured(48, 48, 2.0);
    let mask = SegMask::from_fn(48, 48, |r, c| {
        if (2..46).contains(&r) && (2..46).contains(&c) {
            Label::Face
        } else {
            Label::Background
        }
    })
    .unwrap();
    save_image(&t, &tmp.path().join("t.fsim")).unwrap();
    save_image(&src, &tmp.path().join("s.fsim")).unwrap();
    save_mask(&mask, &tmp.path().join("m.png")).unwrap();
    let p = |n: &str| s(&tmp.path().join(n));
    let args = [
        "blend",
        "--target",
        &p("t.fsim"),
        "--source",
        &p("s.fsim"),
        "--mask",
        &p("m.png"),
        "--out",
        &p("o.fsim"),
        "--solver",
        "cg",
    ];
    let mut strict = args.to_vec();
    strict.extend(["--tol", "1e-300"]);
    assert_eq!(code(&strict), 4);
    assert_eq!(code(&args), 0);
    assert_eq!(
        code(&[
            "blend",
            "--target",
            &p("t.fsim"),
            "--source",
            &p("missing.fsim"),
            "--mask",
            &p("m.png"),
            "--out",
            &p("o.fsim")
        ]),
        2
    );
}

#[test]
fn eval_writes_table_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    save_image(&Image::filled(12, 12, 3, 0.4).unwrap(), &d.join("a.png")).unwrap();
    fs::write(d.join("a.lms"), format_landmarks(&[lms(0.0)])).unwrap();
    fs::write(d.join("b.lms"), format_landmarks(&[lms(3.0)])).unwrap();
    fs::write(d.join("p.pose"), "10 0 0\n").unwrap();
    fs::write(
        d.join("m.txt"),
        "fsg-manifest 1\neval video=x result=a.png reference=a.png pose=p.pose result_pose=13,4,0 landmarks=a.lms result_landmarks=b.lms\n",
    )
    .unwrap();
    let out = d.join("t.csv");
    let printed = ok(&[
        "eval",
        "--manifest",
        &s(&d.join("m.txt")),
        "--out",
        &s(&out),
        "--method",
        "echo",
    ]);
    assert_eq!(
        printed,
        "method,verification,ssim,euler,landmarks\necho,-,1.00 ± 0.00,5.00 ± 0.00,6.00 ± 0.00\n"
    );
    assert_eq!(fs::read_to_string(&out).unwrap(), printed);
    let printed = ok(&[
        "eval",
        "--manifest",
        &s(&d.join("m.txt")),
        "--out",
        &s(&out),
        "--landmark-mean",
    ]);
    assert!(printed.ends_with(",3.00 ± 0.00\n"), "{printed}");
    assert!(d.join("t.csv.json").exists());
}
