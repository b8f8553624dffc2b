//! Release acceptance checks. Runs as a plain binary (`harness = false`) and
//! prints one PASS/FAIL line per criterion; exits non-zero if any fail.
//!
//! Every expected value here is computed by code in this file, not by the
//! library routine under test.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use polarmix::augment::{filter_by_confidence, polarmix_traced};
use polarmix::io::{decode_confidences, decode_labels, decode_points, read_labels, read_scan, write_scan};
use polarmix::pipeline::{run_recipe, RecipeConfig};
use polarmix::{
    polarmix, rotate_paste, sample_angles, sample_sector, scene_swap, uda_mix, AnglePreset,
    AugmentConfig, Label, Point, RotationZ, Scan, SectorSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Labels carry provenance: semantic id is the source tag, instance is the
/// index within the source scan.
fn tagged_scan(r: &mut ChaCha8Rng, n: usize, tag: u16) -> Scan {
    let mut s = Scan::with_capacity(n);
    for i in 0..n {
        s.push(random_point(r), Label::from_parts(tag, i as u16));
    }
    s
}

fn random_point(r: &mut ChaCha8Rng) -> Point {
    Point::new(
        r.gen_range(-80.0f32..80.0),
        r.gen_range(-80.0f32..80.0),
        r.gen_range(-4.0f32..4.0),
        r.gen_range(0.0f32..1.0),
    )
}

/// Scan whose semantic ids come from `classes` at random.
fn class_scan(r: &mut ChaCha8Rng, n: usize, classes: &[u16]) -> Scan {
    let mut s = Scan::with_capacity(n);
    for i in 0..n {
        let c = classes[r.gen_range(0..classes.len())];
        s.push(random_point(r), Label::from_parts(c, i as u16));
    }
    s
}

fn point_bits(p: &Point) -> [u32; 4] {
    [p.x.to_bits(), p.y.to_bits(), p.z.to_bits(), p.intensity.to_bits()]
}

fn same_scan(a: &Scan, b: &Scan) -> bool {
    a.len() == b.len()
        && a.labels() == b.labels()
        && a.points().iter().zip(b.points()).all(|(p, q)| point_bits(p) == point_bits(q))
}

fn oracle_azimuth(p: &Point) -> f64 {
    let t = (p.y as f64).atan2(p.x as f64);
    if t >= PI {
        -PI
    } else {
        t
    }
}

/// Membership in `[alpha, beta)` read counter-clockwise, written out per case.
fn oracle_in_sector(theta: f64, alpha: f64, beta: f64, width: f64) -> bool {
    if width <= 0.0 {
        false
    } else if width >= TAU {
        true
    } else if alpha < beta {
        alpha <= theta && theta < beta
    } else {
        theta >= alpha || theta < beta
    }
}

fn sector_swap_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut seam = 0;
    let mut boundary_hits = 0;
    for case in 0..200 {
        let n = r.gen_range(0..=2000);
        let a = tagged_scan(&mut r, n, 1);
        let n = r.gen_range(0..=2000);
        let b = tagged_scan(&mut r, n, 2);
        let sector = match case % 5 {
            // Bounds taken from existing azimuths so points sit exactly on them.
            0 | 1 if !a.is_empty() && !b.is_empty() => {
                let alpha = oracle_azimuth(&a.points()[r.gen_range(0..a.len())]);
                let beta = oracle_azimuth(&b.points()[r.gen_range(0..b.len())]);
                if alpha == beta {
                    SectorSpec::empty_at(alpha).map_err(|e| e.to_string())?
                } else {
                    SectorSpec::new(alpha, beta).map_err(|e| e.to_string())?
                }
            }
            2 => SectorSpec::full(),
            3 if case % 2 == 0 => SectorSpec::empty_at(r.gen_range(-PI..PI)).map_err(|e| e.to_string())?,
            _ => sample_sector(r.gen_range(0.0..TAU), &mut r).map_err(|e| e.to_string())?,
        };
        let (alpha, beta, width) = (sector.alpha(), sector.beta(), sector.width());
        if alpha > beta && width > 0.0 && width < TAU {
            seam += 1;
        }

        let mut expected: Vec<(u16, u16, [u32; 4])> = Vec::new();
        for (p, l) in a.points().iter().zip(a.labels()) {
            let theta = oracle_azimuth(p);
            if theta == alpha || theta == beta {
                boundary_hits += 1;
            }
            if !oracle_in_sector(theta, alpha, beta, width) {
                expected.push((l.semantic(), l.instance(), point_bits(p)));
            }
        }
        for (p, l) in b.points().iter().zip(b.labels()) {
            let theta = oracle_azimuth(p);
            if theta == alpha || theta == beta {
                boundary_hits += 1;
            }
            if oracle_in_sector(theta, alpha, beta, width) {
                expected.push((l.semantic(), l.instance(), point_bits(p)));
            }
        }

        let out = scene_swap(&a, &b, &sector);
        let mut got: Vec<(u16, u16, [u32; 4])> = out
            .points()
            .iter()
            .zip(out.labels())
            .map(|(p, l)| (l.semantic(), l.instance(), point_bits(p)))
            .collect();
        got.sort();
        expected.sort();
        ensure!(
            got == expected,
            "case {case}: sector [{alpha}, {beta}) width {width}: {} points, oracle {}",
            got.len(),
            expected.len()
        );
    }
    let elapsed = start.elapsed();
    ensure!(seam > 0, "no seam-crossing sector was exercised");
    ensure!(boundary_hits > 0, "no boundary point was exercised");
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!(
        "200 pairs, {seam} seam-crossing, {boundary_hits} boundary points, {elapsed:.2?}"
    ))
}

fn rotate_paste_count_identity() -> Outcome {
    let universe: Vec<u16> = (0..8).collect();
    let mut r = rng(2);
    for case in 0..200 {
        let n_omega = case % 4;
        let n_classes = (case / 4) % (universe.len() + 1);
        let mut pool = universe.clone();
        let mut classes = BTreeSet::new();
        for _ in 0..n_classes {
            classes.insert(pool.swap_remove(r.gen_range(0..pool.len())));
        }
        let n = r.gen_range(0..1500);
        let a = class_scan(&mut r, n, &universe);
        let n = r.gen_range(0..1500);
        let b = class_scan(&mut r, n, &universe);
        let omegas: Vec<f64> = (0..n_omega).map(|_| r.gen_range(-PI..PI)).collect();
        let crop = b.labels().iter().filter(|l| classes.contains(&l.semantic())).count();
        let out = rotate_paste(&a, &b, &classes, &omegas);
        ensure!(
            out.len() == a.len() + n_omega * crop,
            "case {case}: |out| = {}, expected {} + {n_omega} * {crop}",
            out.len(),
            a.len()
        );
    }
    Ok("200 cases, |Ω| in 0..=3, 0..=8 of 8 classes".into())
}

fn angle_gap(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(TAU);
    d.min(TAU - d)
}

fn rotation_fidelity() -> Outcome {
    let mut r = rng(3);
    let mut worst = [0.0f64; 6];
    let names = ["depth", "z", "intensity", "inclination", "azimuth", "R·Rᵀ−I"];
    for _ in 0..100 {
        let omega = r.gen_range(-10.0..10.0);
        let rot = RotationZ::new(omega);
        let m = rot.matrix();
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| m[i][k] * m[j][k]).sum();
                let id = if i == j { 1.0 } else { 0.0 };
                worst[5] = worst[5].max((dot - id).abs());
            }
        }
        for _ in 0..1000 {
            let p: Point<f64> = Point::new(
                r.gen_range(-100.0..100.0),
                r.gen_range(-100.0..100.0),
                r.gen_range(-10.0..10.0),
                r.gen_range(0.0..1.0),
            );
            let q = rot.apply(&p);
            let depth = |p: &Point<f64>| (p.x * p.x + p.y * p.y + p.z * p.z).sqrt();
            let incl = |p: &Point<f64>| (p.z / depth(p)).acos();
            let errs = [
                (depth(&q) - depth(&p)).abs(),
                (q.z - p.z).abs(),
                (q.intensity - p.intensity).abs(),
                (incl(&q) - incl(&p)).abs(),
                angle_gap(q.y.atan2(q.x), p.y.atan2(p.x) + omega),
            ];
            for (w, e) in worst.iter_mut().zip(errs) {
                *w = w.max(e);
            }
        }
    }
    for (i, (&w, name)) in worst.iter().zip(names).enumerate() {
        let tol = if i == 5 { 1e-12 } else { 1e-9 };
        ensure!(w <= tol, "{name} error {w:e} exceeds {tol:e}");
    }
    Ok(format!(
        "1e5 points, max errors: depth {:.1e}, azimuth {:.1e}, orthonormality {:.1e}",
        worst[0], worst[4], worst[5]
    ))
}

fn gate_statistics() -> Outcome {
    let mut r = rng(4);
    let a = class_scan(&mut r, 64, &[1, 2, 3]);
    let b = class_scan(&mut r, 64, &[1, 2, 3]);
    let config = AugmentConfig::new([2]);
    ensure!(
        config.delta1 == 0.5 && config.delta2 == 1.0,
        "defaults are delta1={} delta2={}",
        config.delta1,
        config.delta2
    );
    let runs = 10_000;
    let (mut swaps, mut pastes) = (0, 0);
    for seed in 0..runs {
        let (_, trace) = polarmix_traced(&a, &b, &config, &mut rng(seed)).map_err(|e| e.to_string())?;
        swaps += trace.sector.is_some() as u32;
        pastes += trace.angles.is_some() as u32;
    }
    let swap_rate = swaps as f64 / runs as f64;
    ensure!((swap_rate - 0.5).abs() <= 0.02, "swap rate {swap_rate}");
    ensure!(pastes as u64 == runs, "paste rate {}", pastes as f64 / runs as f64);

    let mut always = AugmentConfig::new([1, 3]);
    always.delta1 = 1.0;
    always.delta2 = 1.0;
    for seed in 0..1000 {
        let got = polarmix(&a, &b, &always, &mut rng(seed)).map_err(|e| e.to_string())?;
        let mut replay = rng(seed);
        let _: f64 = replay.gen();
        let sector = sample_sector(always.sector_width, &mut replay).map_err(|e| e.to_string())?;
        let _: f64 = replay.gen();
        let angles = sample_angles(&always.angle_preset, &mut replay);
        let manual = rotate_paste(&scene_swap(&a, &b, &sector), &b, &always.classes, &angles);
        ensure!(same_scan(&got, &manual), "seed {seed}: differs from manual composition");
    }
    Ok(format!("swap {:.2}%, paste 100%, 1000 bit-exact compositions", 100.0 * swap_rate))
}

fn angle_presets() -> Outcome {
    let mut r = rng(5);
    let third = TAU / 3.0;
    for i in 0..10_000 {
        let w = sample_angles(&AnglePreset::Kitti3, &mut r);
        ensure!(
            w.len() == 3 && w[0] == 0.0 && w[1] > 0.0 && w[1] <= third && w[2] > third && w[2] <= 2.0 * third,
            "kitti3 draw {i}: {w:?}"
        );
    }
    let mut positive = 0;
    for i in 0..10_000 {
        let w = sample_angles(&AnglePreset::Perpendicular2, &mut r);
        ensure!(
            w.len() == 2 && w[0] == 0.0 && (w[1] == FRAC_PI_2 || w[1] == -FRAC_PI_2),
            "perpendicular2 draw {i}: {w:?}"
        );
        positive += (w[1] > 0.0) as u32;
    }
    let ratio = positive as f64 / 10_000.0;
    ensure!((ratio - 0.5).abs() <= 0.02, "+90° ratio {ratio}");
    Ok(format!("1e4 kitti3 draws in range, perpendicular2 +90° ratio {ratio:.4}"))
}

fn random_f32(r: &mut ChaCha8Rng) -> f32 {
    loop {
        let v = match r.gen_range(0..4) {
            0 => f32::from_bits(r.gen()),
            1 => r.gen_range(-1e4f32..1e4),
            2 => [0.0, -0.0, f32::MIN_POSITIVE, f32::MAX, f32::MIN, 1e-42][r.gen_range(0..6)],
            _ => r.gen_range(-1.0f32..1.0),
        };
        if v.is_finite() {
            return v;
        }
    }
}

fn io_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut r = rng(6);
    for i in 0..100 {
        let n = if i == 0 { 0 } else { r.gen_range(0..4000) };
        let mut scan = Scan::with_capacity(n);
        for _ in 0..n {
            let p = Point::new(random_f32(&mut r), random_f32(&mut r), random_f32(&mut r), random_f32(&mut r));
            scan.push(p, Label(r.gen()));
        }
        let scan_path = dir.path().join(format!("seq/{i:06}.bin"));
        let label_path = dir.path().join(format!("seq/{i:06}.label"));
        write_scan(&scan, &scan_path, &label_path).map_err(|e| e.to_string())?;
        let back = read_scan(&scan_path, Some(&label_path)).map_err(|e| e.to_string())?;
        ensure!(same_scan(&scan, &back), "scan {i} ({n} points) changed on round trip");
        let raw = fs::read(&label_path).map_err(|e| e.to_string())?;
        ensure!(raw.len() == 4 * n, "label file {i} has {} bytes", raw.len());
    }

    let previous_hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut panics = 0;
    let (mut ok, mut err) = (0, 0);
    let fuzz_path = dir.path().join("fuzz.bin");
    for i in 0..10_000 {
        let len = match i % 3 {
            0 => r.gen_range(0..64),
            1 => 16 * r.gen_range(0..16),
            _ => r.gen_range(0..512),
        };
        let bytes: Vec<u8> = (0..len).map(|_| r.gen()).collect();
        let outcome = panic::catch_unwind(AssertUnwindSafe(|| {
            let results = [
                decode_points(&bytes).map(drop).map_err(|e| e.to_string()),
                decode_labels(&bytes).map(drop).map_err(|e| e.to_string()),
                decode_confidences(&bytes).map(drop).map_err(|e| e.to_string()),
            ];
            let file = if i % 20 == 0 {
                fs::write(&fuzz_path, &bytes).expect("write fuzz file");
                Some((
                    read_scan(&fuzz_path, None).map(drop).map_err(|e| e.to_string()),
                    read_labels(&fuzz_path).map(drop).map_err(|e| e.to_string()),
                ))
            } else {
                None
            };
            (results, file)
        }));
        match outcome {
            Ok((results, file)) => {
                for res in results.iter().chain(file.iter().flat_map(|(a, b)| [a, b])) {
                    match res {
                        Ok(()) => ok += 1,
                        Err(_) => err += 1,
                    }
                }
            }
            Err(_) => panics += 1,
        }
    }
    panic::set_hook(previous_hook);
    ensure!(panics == 0, "{panics} fuzz inputs crashed a parser");
    Ok(format!("100 scans bit-exact, 1e4 fuzz inputs: {ok} parsed, {err} structured errors, 0 crashes"))
}

fn write_fixture(root: &Path, n_scans: usize, seed: u64, classes: &[u16]) {
    let mut r = rng(seed);
    for i in 0..n_scans {
        let seq = format!("{:02}", i % 2);
        let n = r.gen_range(200..600);
        let scan = class_scan(&mut r, n, classes);
        let base = root.join("sequences").join(seq);
        write_scan(
            &scan,
            &base.join(format!("velodyne/{i:06}.bin")),
            &base.join(format!("labels/{i:06}.label")),
        )
        .unwrap();
    }
}

fn tree_hash(root: &Path) -> (String, usize) {
    let mut files: Vec<PathBuf> = walkdir(root);
    files.sort();
    let mut h = Sha256::new();
    for f in &files {
        h.update(f.strip_prefix(root).unwrap().to_string_lossy().as_bytes());
        h.update([0]);
        let bytes = fs::read(f).unwrap();
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    let digest = h.finalize();
    (digest.iter().map(|b| format!("{b:02x}")).collect(), files.len())
}

fn walkdir(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walkdir(&path));
        } else {
            out.push(path);
        }
    }
    out
}

fn recipe(work: &Path, operator: &str, output: &str, extra: &str) -> RecipeConfig {
    let text = format!(
        "operator = \"{operator}\"\ninput_root = \"data\"\noutput_root = \"{output}\"\n{extra}\n"
    );
    RecipeConfig::from_toml_str(&text, work).unwrap()
}

fn pipeline_determinism() -> Outcome {
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_fixture(&work.path().join("data"), 6, 7, &[10, 11, 40, 48]);
    let mut hashes = Vec::new();
    for (out, workers, seed) in [("out_w1", 1, 2024), ("out_w8", 8, 2024), ("out_seed", 8, 2025)] {
        let extra = format!("classes = [11, 48]\nmultiplier = 2\nworkers = {workers}\nseed = {seed}");
        let config = recipe(work.path(), "polarmix", out, &extra);
        let report = run_recipe(&config).map_err(|e| e.to_string())?;
        ensure!(report.succeeded(), "{out}: {} task failures", report.failures);
        hashes.push(tree_hash(&work.path().join(out)));
    }
    ensure!(hashes[0].1 == 24, "expected 24 output files, found {}", hashes[0].1);
    ensure!(hashes[0] == hashes[1], "workers 1 and 8 produced different trees");
    ensure!(hashes[0].0 != hashes[2].0, "a different seed produced the same tree");
    Ok(format!("6 scans x2, tree {}… identical across workers, differs across seeds", &hashes[0].0[..12]))
}

fn uda_filter_contract() -> Outcome {
    let mut r = rng(8);
    for case in 0..100 {
        let n = r.gen_range(0..800);
        let source = class_scan(&mut r, n, &[1, 2, 3]);
        let n = r.gen_range(0..800);
        let target = class_scan(&mut r, n, &[1, 2, 3]);
        let conf: Vec<f32> = (0..target.len()).map(|_| r.gen_range(0.0f32..=1.0)).collect();
        let mut config = AugmentConfig::new([2, 3]);
        config.seed = case;

        let mixed = uda_mix(&source, &target, &conf, 0.0, &config, &mut config.rng()).map_err(|e| e.to_string())?;
        let plain = polarmix(&source, &target, &config, &mut config.rng()).map_err(|e| e.to_string())?;
        ensure!(same_scan(&mixed, &plain), "case {case}: threshold 0 differs from polarmix");

        config.delta1 = 0.0;
        let above = conf.iter().fold(0.0f32, |m, &c| m.max(c)) as f64 + 0.25;
        let kept = uda_mix(&source, &target, &conf, above, &config, &mut config.rng()).map_err(|e| e.to_string())?;
        ensure!(same_scan(&kept, &source), "case {case}: high threshold did not return the source");
        ensure!(
            filter_by_confidence(&target, &conf, above).map_err(|e| e.to_string())?.is_empty(),
            "case {case}: filter kept points"
        );
    }
    Ok("100 cases: threshold 0 == polarmix, high threshold == source".into())
}

fn count_class(path: &Path, class: u16) -> u64 {
    read_labels(path)
        .unwrap()
        .iter()
        .filter(|l| l.semantic() == class)
        .count() as u64
}

fn label_frequency_effect() -> Outcome {
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = work.path().join("data");
    write_fixture(&data, 6, 9, &[10, 18, 40, 48, 70]);
    let k = 18u16;
    let config = recipe(
        work.path(),
        "rotate_paste",
        "out",
        &format!("classes = [{k}]\nangle_preset = \"kitti3\"\nseed = 11\nworkers = 4"),
    );
    let report = run_recipe(&config).map_err(|e| e.to_string())?;
    ensure!(report.succeeded(), "{} task failures", report.failures);

    let mut base_total = 0;
    let mut expected = 0;
    let mut observed = 0;
    let mut outputs = Vec::new();
    for task in &report.tasks {
        let base_labels = polarmix::pipeline::default_label_path(&task.base);
        let donor_labels = polarmix::pipeline::default_label_path(task.donor.as_ref().unwrap());
        let base_k = count_class(&base_labels, k);
        base_total += base_k;
        expected += base_k + 3 * count_class(&donor_labels, k);
        observed += count_class(&task.output_label, k);
        outputs.push(read_scan(&task.output_scan, Some(&task.output_label)).map_err(|e| e.to_string())?);
    }
    ensure!(observed == expected, "class {k}: observed {observed}, expected {expected}");
    let stats = polarmix::report_stats(&outputs);
    ensure!(stats.get(k) == expected, "report_stats gives {}", stats.get(k));
    ensure!(report.histogram_after.get(k) == expected, "run report gives {}", report.histogram_after.get(k));
    ensure!(report.histogram_before.get(k) == base_total, "run report base count {}", report.histogram_before.get(k));
    Ok(format!("class {k}: {base_total} base -> {observed} after (= base + 3 x donor)"))
}

fn throughput() -> Outcome {
    let mut r = rng(10);
    let classes: Vec<u16> = (0..20).collect();
    let a = class_scan(&mut r, 130_000, &classes);
    let b = class_scan(&mut r, 130_000, &classes);
    let mut config = AugmentConfig::new([1, 4, 7]);
    config.delta1 = 1.0;
    config.delta2 = 1.0;
    let mut times = Vec::new();
    let mut size = 0;
    for seed in 0..7 {
        let t = Instant::now();
        let out = polarmix(&a, &b, &config, &mut rng(seed)).map_err(|e| e.to_string())?;
        times.push(t.elapsed());
        size = out.len();
    }
    times.sort();
    let median = times[times.len() / 2];
    ensure!(median < Duration::from_millis(100), "median {median:.2?} (fastest {:.2?})", times[0]);
    Ok(format!("130k + 130k points -> {size}, median {median:.2?} over 7 calls, both branches"))
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("sector-swap oracle", sector_swap_oracle),
        ("rotate-paste count identity", rotate_paste_count_identity),
        ("rotation fidelity", rotation_fidelity),
        ("gate statistics", gate_statistics),
        ("angle presets", angle_presets),
        ("io round trip and fuzz", io_round_trip),
        ("pipeline determinism", pipeline_determinism),
        ("uda filter contract", uda_filter_contract),
        ("label-frequency effect", label_frequency_effect),
        ("throughput", throughput),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
