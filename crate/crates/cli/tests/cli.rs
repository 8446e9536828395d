use std::path::Path;
use std::process::{Command, Output};

use neuropath::DisparityMap;

fn neuropath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neuropath")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_map(p: &Path) -> DisparityMap {
    DisparityMap::read_pgm16(std::io::BufReader::new(std::fs::File::open(p).unwrap())).unwrap()
}

/// Most frequent valid disparity over `x0..x1 × y0..y1`.
fn mode(map: &DisparityMap, x0: usize, x1: usize, y0: usize, y1: usize) -> f32 {
    let mut counts = std::collections::BTreeMap::new();
    for x in x0..x1 {
        for y in y0..y1 {
            if let Some(d) = map.get(x, y) {
                *counts.entry(d as u32).or_insert(0) += 1;
            }
        }
    }
    counts.into_iter().max_by_key(|&(_, n)| n).map(|(d, _)| d as f32).unwrap()
}

#[test]
fn synthetic_stereo_recovers_the_shift() {
    let dir = tempfile::tempdir().unwrap();
    let (out, vol) = (dir.path().join("disp.pgm"), dir.path().join("vol.npcv"));
    let o = neuropath(&["stereo", "--synthetic", "d0=7", "--out", path(&out), "--volume-out", path(&vol)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("backward"), "timing breakdown: {}", stdout(&o));
    let map = read_map(&out);
    assert_eq!((map.width(), map.height()), (64, 64));
    // interior: receptive field 8 on every side, plus the searched range on the left
    assert_eq!(mode(&map, 8 + 15, 64 - 8, 8, 64 - 8), 7.0);
    let volume = neuropath::CostVolume::read_npcv(std::fs::File::open(&vol).unwrap()).unwrap();
    assert_eq!((volume.width(), volume.height(), volume.shift_count()), (64, 64, 16));
}

#[test]
fn corr_baseline_writes_the_same_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("disp.pgm");
    let o = neuropath(&["stereo", "--synthetic", "d0=5", "--baseline", "corr", "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(mode(&read_map(&out), 23, 56, 8, 56), 5.0);
}

#[test]
fn lr_check_only_removes_pixels() {
    let dir = tempfile::tempdir().unwrap();
    let (plain, checked) = (dir.path().join("a.pgm"), dir.path().join("b.pgm"));
    let base = ["stereo", "--synthetic", "d0=4,noise=0.1", "--seed", "3"];
    assert!(neuropath(&[&base[..], &["--out", path(&plain)]].concat()).status.success());
    assert!(neuropath(&[&base[..], &["--out", path(&checked), "--lr-check"]].concat()).status.success());
    let (a, b) = (read_map(&plain), read_map(&checked));
    for x in 0..64 {
        for y in 0..64 {
            assert!(b.get(x, y).is_none() || b.get(x, y) == a.get(x, y));
        }
    }
    assert!(b.valid_count() < a.valid_count());
}

#[test]
fn missing_weights_exit_2_and_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("disp.pgm");
    let o = neuropath(&["stereo", "--synthetic", "d0=3", "--weights", "/nonexistent/vgg.npw1", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/vgg.npw1"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn eval_of_identical_maps() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.pgm");
    let mut map = DisparityMap::constant(10, 10, 5.0);
    map.set(0, 0, None);
    map.write_pgm16(std::fs::File::create(&gt).unwrap()).unwrap();
    let o = neuropath(&["eval", "--pred", path(&gt), "--gt", path(&gt)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).lines().any(|l| l == "Err_3 0.00"), "{}", stdout(&o));

    let mut pred = map.clone();
    for i in 1..10 {
        pred.set(i, i, Some(9.0));
    }
    let pred_path = dir.path().join("pred.pgm");
    pred.write_pgm16(std::fs::File::create(&pred_path).unwrap()).unwrap();
    let o = neuropath(&["eval", "--pred", path(&pred_path), "--gt", path(&gt)]);
    assert!(stdout(&o).lines().any(|l| l == "Err_3 9.09"), "{}", stdout(&o));
}

#[test]
fn eval_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let (empty, small) = (dir.path().join("empty.pgm"), dir.path().join("small.pgm"));
    let mut blank = DisparityMap::constant(4, 4, 1.0);
    for x in 0..4 {
        for y in 0..4 {
            blank.set(x, y, None);
        }
    }
    blank.write_pgm16(std::fs::File::create(&empty).unwrap()).unwrap();
    DisparityMap::constant(3, 4, 1.0).write_pgm16(std::fs::File::create(&small).unwrap()).unwrap();
    assert_eq!(neuropath(&["eval", "--pred", path(&empty), "--gt", path(&empty)]).status.code(), Some(2));
    assert_eq!(neuropath(&["eval", "--pred", path(&small), "--gt", path(&empty)]).status.code(), Some(2));
}

#[test]
fn oracle_is_deterministic_and_passes() {
    let a = neuropath(&["oracle", "--cases", "12", "--seed", "1234"]);
    let b = neuropath(&["oracle", "--cases", "12", "--seed", "1234"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("12/12 passed"));
    let m = neuropath(&["oracle", "--cases", "6", "--semiring", "max-min"]);
    assert!(m.status.success());
    assert_eq!(stdout(&m).matches(" exact ").count(), 6, "{}", stdout(&m));
}

#[test]
fn bench_reports_counts_and_central_arcs_are_fewer() {
    let arcs = |mode| {
        let o = neuropath(&["bench", "--size", "24", "--repeats", "1", "--dmax", "3", "--arc-mode", mode]);
        assert!(o.status.success(), "{}", stderr(&o));
        let out = stdout(&o);
        assert!(out.contains("ratio L=8/L=4"));
        let rows: Vec<Vec<u64>> = out
            .lines()
            .filter_map(|l| {
                let f: Vec<&str> = l.split_whitespace().collect();
                (f.len() == 5).then(|| f[0].parse().ok().map(|l: u64| vec![l, f[1].parse().unwrap(), f[4].parse().unwrap()]))?
            })
            .collect();
        assert_eq!(rows.len(), 3, "{out}");
        rows
    };
    let (full, central) = (arcs("full"), arcs("central"));
    assert!(full[2][2] > 1_000_000, "paths at L=8: {}", full[2][2]);
    for (f, c) in full.iter().zip(&central) {
        assert!(c[1] < f[1], "central {} vs full {}", c[1], f[1]);
    }
}

#[test]
fn forward_checksums_are_stable() {
    let a = stdout(&neuropath(&["forward", "--seed", "2"]));
    let b = stdout(&neuropath(&["forward", "--seed", "2"]));
    assert_eq!(a, b);
    assert!(a.contains("network cpc"));
    assert!(a.lines().any(|l| l.contains("   32x32   x   8")), "{a}");
}
