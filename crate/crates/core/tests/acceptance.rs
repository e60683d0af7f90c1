//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test --release --test acceptance`.

use std::time::{Duration, Instant};

use cogtrack::config::ExperimentConfig;
use cogtrack::experiment::{evaluate, fresh_q_table, train_qlearning, MetricsReport, SeedPlan};
use cogtrack::policy::{
    bandwidth_scaling_step, lookahead_update, q_update, ActionSet, BandwidthScaling, Discretizer, Policy,
    QHyperParams, QTable, TransitionBuffer,
};
use cogtrack::radar::{measure, observe, observe_jacobian, Measurement, RadarConfig};
use cogtrack::tracker::{
    coast, gate, initialize, innovation, predict, step_status, update, wrap_angle, Innovation, TrackStatus,
    TrackState,
};
use cogtrack::trajectory::{generate_trajectory, TrajectoryConfig, TruthPoint};
use nalgebra::{Matrix4, Matrix6, Vector4, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn timed(limit: Duration, start: Instant, detail: String, ok: bool) -> Outcome {
    let took = start.elapsed();
    check(ok && took < limit, format!("{detail}; {:.2}s (limit {}s)", took.as_secs_f64(), limit.as_secs()))
}

/// Oracle for the scaling rule, written independently of the library.
fn scaling_oracle(start: f64, history: &[bool], min: f64, max: f64) -> Vec<f64> {
    let mut bw = start;
    let mut hits = 0;
    let mut out = Vec::new();
    for &c in history {
        if c {
            hits += 1;
            if hits == 5 {
                bw = if bw * 2.0 > max { max } else { bw * 2.0 };
                hits = 0;
            }
        } else {
            bw = if bw / 2.0 < min { min } else { bw / 2.0 };
            hits = 0;
        }
        out.push(bw);
    }
    out
}

fn histories(max_len: usize) -> Vec<Vec<bool>> {
    (0..=max_len)
        .flat_map(|n| (0..1u32 << n).map(move |bits| (0..n).map(|i| bits >> i & 1 == 1).collect()))
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let radar = RadarConfig::default();
    let (min, max) = (radar.min_bw, radar.max_bw);
    let hist = histories(6);
    let mut cases = 0;
    let mut bad = 0;
    for &b in ActionSet::default().bandwidths() {
        for h in &hist {
            let want = scaling_oracle(b, h, min, max);
            let (mut bw, mut streak) = (b, 0);
            for (c, w) in h.iter().zip(&want) {
                (bw, streak) = bandwidth_scaling_step(bw, *c, streak, min, max);
                bad += (bw != *w) as usize;
            }
            cases += 1;
        }
    }
    for h in &hist {
        let mut s = BandwidthScaling::new(min, max);
        let first = s.next(false);
        bad += (first != max) as usize;
        let want = scaling_oracle(max, h, min, max);
        for (c, w) in h.iter().zip(&want) {
            bad += (s.next(*c) != *w) as usize;
        }
        cases += 1;
    }
    timed(
        Duration::from_secs(1),
        start,
        format!("{cases} histories, {bad} mismatches"),
        bad == 0,
    )
}

fn unit_table(lookahead: usize) -> QTable {
    QTable::zeros(
        ActionSet::default(),
        Discretizer::calibrate(&[1.0, 10.0, 100.0], &[1.0, 10.0, 100.0], 10, 8).unwrap(),
        QHyperParams {
            lookahead,
            ..QHyperParams::default()
        },
    )
}

fn criterion_2() -> Outcome {
    let mut t = unit_table(1);
    q_update(&mut t, 0, 0, -0.5, Some(0));
    let single = t.get(0, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut identical = 0;
    for _ in 0..1000 {
        let mut a = unit_table(1);
        let mut b = a.clone();
        let mut buf = TransitionBuffer::new(1);
        for _ in 0..rng.random_range(1..300) {
            let (s, act) = (rng.random_range(0..a.n_states()), rng.random_range(0..6));
            let r = -rng.random_range(0.0..=2.0);
            let next = (rng.random::<f64>() > 0.05).then(|| rng.random_range(0..a.n_states()));
            q_update(&mut a, s, act, r, next);
            buf.push(s, act);
            lookahead_update(&mut b, &buf, r, next);
        }
        identical += a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()) as usize;
    }
    check(
        (single + 0.05).abs() < 1e-12 && identical == 1000,
        format!("Q = {single}, {identical}/1000 sequences bit-identical"),
    )
}

fn criterion_3(cfg: &ExperimentConfig, traj: &[TruthPoint]) -> Outcome {
    let start = Instant::now();
    let seeds = SeedPlan::from_seed(0);
    let table = fresh_q_table(traj, cfg, seeds.calibration).map_err(|e| e.to_string())?;
    let bound = -table.hyper.c / (1.0 - table.hyper.gamma);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for la in [false, true] {
        let t = train_qlearning(traj, table.clone(), la, cfg.training_runs, cfg, seeds.training)
            .map_err(|e| e.to_string())?;
        for &q in t.values() {
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    timed(
        Duration::from_secs(30),
        start,
        format!("{} runs x {}, Q in [{lo:.3}, {hi:.3}]", cfg.training_runs, cfg.episode.n_transmissions),
        lo >= bound && hi <= 0.0,
    )
}

fn psd_ok(p: &Matrix6<f64>) -> bool {
    *p == p.transpose() && p.symmetric_eigenvalues().min() >= -1e-9
}

fn criterion_4(cfg: &ExperimentConfig, traj: &[TruthPoint]) -> Outcome {
    // Jacobian against central differences.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let radar = cfg.radar.position();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x = Vector6::from_fn(|i, _| {
            if i < 3 {
                rng.random_range(-300e3..300e3) + if i == 2 { 310e3 } else { 0.0 }
            } else {
                rng.random_range(-4e3..4e3)
            }
        });
        let h = observe_jacobian(&x, &radar).map_err(|e| e.to_string())?;
        for j in 0..6 {
            let step = 1e-4 * x[j].abs().max(1.0);
            let (mut hi, mut lo) = (x, x);
            hi[j] += step;
            lo[j] -= step;
            let mut d = observe(&hi, &radar).unwrap() - observe(&lo, &radar).unwrap();
            d[2] = wrap_angle(d[2]);
            d /= 2.0 * step;
            for i in 0..4 {
                let scale = h.row(i).abs().max();
                worst = worst.max((h[(i, j)] - d[i]).abs() / scale);
            }
        }
    }

    // Covariance health over many predict / update-or-coast cycles.
    let actions = ActionSet::default();
    let mut cycles = 0;
    let mut healthy = true;
    while cycles < 10_000 {
        let w0 = cfg.radar.waveform(cfg.radar.max_bw).unwrap();
        let z0 = measure(&traj[0], w0, &cfg.radar, &mut rng).unwrap();
        let mut track = initialize(&z0, &cfg.radar, cfg.initial_uncertainty);
        let mut status = TrackStatus::default();
        for truth in &traj[1..] {
            let pred = predict(&track, &cfg.process, truth.phase).map_err(|e| e.to_string())?;
            let bw = actions.get(rng.random_range(0..actions.len()));
            let z = measure(truth, cfg.radar.waveform(bw).unwrap(), &cfg.radar, &mut rng).unwrap();
            let (inn, _) = innovation(&pred, &z, &cfg.radar).map_err(|e| e.to_string())?;
            let g = gate(&inn, &z);
            track = if g.correlated {
                update(&pred, &z, &cfg.radar).map_err(|e| e.to_string())?.0
            } else {
                coast(&pred)
            };
            healthy &= psd_ok(&pred.p) && psd_ok(&track.p);
            cycles += 1;
            status = step_status(status, g.correlated, cfg.episode.miss_limit).unwrap();
            if status.lost || cycles == 10_000 {
                break;
            }
        }
    }

    // Scalar closed form along the radar's x axis.
    let (range, var_p, var_r, nu) = (120e3, 900.0, 64.0, 17.0);
    let o = cfg.radar.position();
    let x = Vector6::new(o.x + range, o.y, o.z, 0.0, 0.0, 0.0);
    let p = Matrix6::from_diagonal(&Vector6::new(var_p, 1.0, 1.0, 1.0, 1.0, 1.0));
    let z = Measurement {
        range: range + nu,
        range_rate: 0.0,
        azimuth: 0.0,
        elevation: 0.0,
        noise_cov: Matrix4::from_diagonal(&Vector4::new(var_r, 1.0, 1.0, 1.0)),
        waveform: cfg.radar.waveform(1e6).unwrap(),
        t: 0.0,
    };
    let (post, _) = update(&TrackState { x, p, t: 0.0 }, &z, &cfg.radar).map_err(|e| e.to_string())?;
    let x_ref = x[0] + var_p / (var_p + var_r) * nu;
    let p_ref = var_p * var_r / (var_p + var_r);
    let scalar_err = ((post.x[0] - x_ref) / x_ref).abs().max(((post.p[(0, 0)] - p_ref) / p_ref).abs());

    check(
        worst < 1e-5 && healthy && scalar_err < 1e-10,
        format!(
            "Jacobian rel err {worst:.1e}; P symmetric PSD over {cycles} cycles: {healthy}; scalar rel err {scalar_err:.1e}"
        ),
    )
}

fn fixed(bw: f64, cfg: &ExperimentConfig, traj: &[TruthPoint]) -> MetricsReport {
    let p = Policy::fixed(bw, &cfg.radar).unwrap();
    evaluate(traj, &p, cfg.evaluation_runs, cfg, 0).unwrap().1
}

fn criterion_5(cfg: &ExperimentConfig, traj: &[TruthPoint]) -> Outcome {
    let start = Instant::now();
    let wide = fixed(10e6, cfg, traj);
    let narrow = fixed(0.5e6, cfg, traj);
    let lost = |r: &MetricsReport| r.runs - r.full_track_successes;
    timed(
        Duration::from_secs(60),
        start,
        format!(
            "lost 10 MHz {} vs 0.5 MHz {}; MSE 10 MHz {:.1} vs 0.5 MHz {:.1}",
            lost(&wide),
            lost(&narrow),
            wide.pooled_mse,
            narrow.pooled_mse
        ),
        lost(&wide) > lost(&narrow) && wide.pooled_mse < narrow.pooled_mse,
    )
}

fn trained(traj: &[TruthPoint], cfg: &ExperimentConfig, seed: u64, lookahead: bool) -> QTable {
    let seeds = SeedPlan::from_seed(seed);
    let table = fresh_q_table(traj, cfg, seeds.calibration).unwrap();
    train_qlearning(traj, table, lookahead, cfg.training_runs, cfg, seeds.training).unwrap()
}

fn criterion_6(cfg: &ExperimentConfig, traj: &[TruthPoint]) -> Outcome {
    let f1 = fixed(1e6, cfg, traj);
    let f5 = fixed(5e6, cfg, traj);
    let sc = evaluate(traj, &Policy::scaling(&cfg.radar), cfg.evaluation_runs, cfg, 0).unwrap().1;
    let mut passes = 0;
    let mut lines = vec![format!(
        "f1 {}/{:.0} f5 {}/{:.0} scaling {}/{:.0}",
        f1.full_track_successes, f1.pooled_mse, f5.full_track_successes, f5.pooled_mse, sc.full_track_successes, sc.pooled_mse
    )];
    for seed in 0..3 {
        let mut ok = true;
        let mut line = format!("seed {seed}:");
        for la in [false, true] {
            let q = Policy::qlearning(trained(traj, cfg, seed, la), la);
            let r = evaluate(traj, &q, cfg.evaluation_runs, cfg, 0).unwrap().1;
            ok &= r.full_track_successes >= f5.full_track_successes
                && r.pooled_mse <= f1.pooled_mse
                && sc.pooled_mse < r.pooled_mse
                && sc.full_track_successes <= r.full_track_successes;
            line += &format!(" {} {}/{:.0}", if la { "QL-LA" } else { "QL" }, r.full_track_successes, r.pooled_mse);
        }
        ok &= sc.pooled_mse < f1.pooled_mse && sc.pooled_mse < f5.pooled_mse;
        passes += ok as usize;
        lines.push(format!("{line} {}", if ok { "ok" } else { "x" }));
    }
    check(passes >= 2, format!("{passes}/3 seeds [{}] (success/MSE)", lines.join("; ")))
}

fn criterion_7(cfg: &ExperimentConfig, traj: &[TruthPoint]) -> Outcome {
    let mut easy_cfg = cfg.clone();
    easy_cfg.trajectory = TrajectoryConfig::gentle();
    let easy = generate_trajectory(&easy_cfg.trajectory, cfg.trajectory_seed).map_err(|e| e.to_string())?;
    let f1 = fixed(1e6, &easy_cfg, &easy);
    let mut ok = true;
    let mut parts = vec![format!("f1 MSE {:.0}", f1.pooled_mse)];
    for la in [false, true] {
        let q = Policy::qlearning(trained(traj, cfg, 0, la), la);
        let r = evaluate(&easy, &q, cfg.evaluation_runs, &easy_cfg, 0).unwrap().1;
        ok &= r.full_track_successes == r.runs && r.pooled_mse < f1.pooled_mse;
        parts.push(format!(
            "{} lost {} MSE {:.0}",
            if la { "QL-LA" } else { "QL" },
            r.runs - r.full_track_successes,
            r.pooled_mse
        ));
    }
    check(ok, parts.join(", "))
}

fn criterion_8() -> Outcome {
    let radar = RadarConfig::default();
    let z = Measurement {
        range: 1e5,
        range_rate: 0.0,
        azimuth: 0.0,
        elevation: 0.0,
        noise_cov: Matrix4::from_diagonal(&Vector4::new(100.0, 1.0, 1.0, 1.0)),
        waveform: radar.waveform(1e6).unwrap(),
        t: 0.0,
    };
    let g = |nu: f64| gate(&Innovation { nu: Vector4::new(nu, 0.0, 0.0, 0.0), s: z.noise_cov }, &z);
    let window = g(0.0).range_window;
    let (far, near) = (g(58.9).correlated, g(58.7).correlated);
    let mut status = TrackStatus::default();
    let mut lost_at = Vec::new();
    for i in 1..=5 {
        status = step_status(status, false, 5).unwrap();
        if status.lost {
            lost_at.push(i);
        }
    }
    check(
        (window - 19.6).abs() < 1e-12 && !far && near && lost_at == [5] && status.lost_at_step == Some(5),
        format!("window {window:.4} m; 58.9 correlated {far}; 58.7 correlated {near}; loss at miss {lost_at:?}"),
    )
}

fn criterion_9() -> Outcome {
    let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for d in &dirs {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_cogtrack"))
            .args(["evaluate", "--policy", "qlearn", "--seed", "7", "--runs", "20", "--out"])
            .arg(d.path())
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
    }
    let mut same = true;
    let mut files = 0;
    for name in ["metrics_qlearn.csv", "histogram_qlearn.csv"] {
        let a = std::fs::read(dirs[0].path().join(name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(dirs[1].path().join(name)).map_err(|e| e.to_string())?;
        same &= a == b && !a.is_empty();
        files += 1;
    }
    check(same, format!("{files} CSVs from two `evaluate` runs byte-identical: {same}"))
}

fn main() {
    let cfg = ExperimentConfig::default();
    let traj = generate_trajectory(&cfg.trajectory, cfg.trajectory_seed).expect("default trajectory");
    let results: Vec<(usize, &str, Outcome)> = vec![
        (1, "scaling rule, exhaustive", criterion_1()),
        (2, "Q-update exactness", criterion_2()),
        (3, "Q-value bound after training", criterion_3(&cfg, &traj)),
        (4, "EKF numerics", criterion_4(&cfg, &traj)),
        (5, "bandwidth trend", criterion_5(&cfg, &traj)),
        (6, "adaptive-policy ordering", criterion_6(&cfg, &traj)),
        (7, "transfer to an easier trajectory", criterion_7(&cfg, &traj)),
        (8, "gate arithmetic and loss rule", criterion_8()),
        (9, "end-to-end determinism", criterion_9()),
    ];
    let mut failed = 0;
    for (n, name, r) in &results {
        match r {
            Ok(d) => println!("criterion {n} PASS  {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {n} FAIL  {name}: {d}")
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
