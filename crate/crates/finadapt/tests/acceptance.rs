//! Acceptance suite: one PASS/FAIL line per criterion, with its runtime.
//!
//! Run with `cargo test -p finadapt --test acceptance`. The process exits
//! non-zero if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use finadapt::config::{BranchDirective, BranchPoint};
use finadapt::engine::run;
use finadapt::report::{self, FinishedRun};
use finadapt::store::TerminationReason;
use finadapt::{RunConfig, Store};
use finadapt_core::analysis::{fourier, reconstruct, rotate_to_resultant, sensitivity, Adaptation};
use finadapt_core::fitness::{fitness, fitness_of_forces, Objective, CLOSENESS_WEIGHT};
use finadapt_core::kinematics::{self, aoa_trace, TimeWarp};
use finadapt_core::optimizer::{Cmaes, CmaesSettings, CmaesSnapshot};
use finadapt_core::plant::{apply_damage, evaluate, plate_force, CycleRecord, EvalSettings, PlantConfig};
use finadapt_core::reference::{intact_thrust, REFERENCE_OPTIMA};
use finadapt_core::{seed, Param, ParamTable, TrajectoryParams, N_PARAMS};
use nalgebra::DMatrix;
use rand::Rng;

/// Collects failed sub-checks of one criterion.
#[derive(Default)]
struct Checks {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }
}

struct Outcome {
    passed: bool,
}

fn criterion(id: &str, title: &str, budget: Option<Duration>, body: impl FnOnce(&mut Checks)) -> Outcome {
    let start = Instant::now();
    let mut checks = Checks::default();
    let result = catch_unwind(AssertUnwindSafe(|| body(&mut checks)));
    let elapsed = start.elapsed();
    if let Err(panic) = result {
        let msg = panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        checks.failures.push(format!("panicked: {msg}"));
    }
    if let Some(limit) = budget {
        checks.check(elapsed < limit, format!("runtime {elapsed:.2?} exceeds {limit:?}"));
    }
    let passed = checks.failures.is_empty();
    println!(
        "{} {id} {title} [{:.2} s]",
        if passed { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    for n in &checks.notes {
        println!("       {n}");
    }
    for f in &checks.failures {
        println!("       failed: {f}");
    }
    Outcome { passed }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn ac1_fitness(c: &mut Checks) {
    let f = |force, normal| fitness_of_forces(force, normal, 1.0).unwrap().f;
    c.check(close(f(1.0, 1.0), 0.0, 1e-12), "f(F=1, Fn=1) = 0");
    c.check(close(f(0.5, 1.0), 0.5, 1e-12), "f(F=0.5, Fn=1) = 0.5");
    c.check(close(f(-0.3, 1.0), 0.82, 1e-12), "f(F=-0.3, Fn=1) = 0.82");
    let v = fitness_of_forces(-0.3, 1.0, 1.0).unwrap();
    c.check(
        close(v.closeness_term, 0.7, 1e-12) && close(v.efficiency_term, 1.3, 1e-12),
        "signed terms",
    );
    for target in [0.25, 1.0, 3.0] {
        c.check(
            close(fitness_of_forces(target, target, target).unwrap().f, 0.0, 1e-12),
            format!("f = 0 at F = Fn = target {target}"),
        );
    }
    for row in &REFERENCE_OPTIMA {
        let efficiency_share = row.fitness - CLOSENESS_WEIGHT * row.closeness.abs();
        c.check(
            (0.0..=0.2).contains(&efficiency_share),
            format!("{}: f - 0.8|closeness| = {efficiency_share}", row.label),
        );
    }
    c.note(format!("{} reference rows cross-checked", REFERENCE_OPTIMA.len()));
}

fn valid_random(rng: &mut impl Rng) -> TrajectoryParams {
    let table = ParamTable::standard();
    let mut v = [0.0; N_PARAMS];
    for (i, r) in table.ranges.iter().enumerate() {
        // a flat path has no defined normal, so keep some thickness
        let lo = if i == Param::ThicknessAngle.index() {
            0.01
        } else {
            r.min
        };
        v[i] = rng.random_range(lo..=r.max);
    }
    TrajectoryParams::from_array(v)
}

/// Middle of a short arc given by points on it.
fn arc_midpoint(angles: &[f64]) -> f64 {
    let (s, c) = angles.iter().fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
    let centre = s.atan2(c);
    let offsets = angles.iter().map(|a| (a - centre + PI).rem_euclid(TAU) - PI);
    let (lo, hi) = offsets.fold((f64::MAX, f64::MIN), |(lo, hi), d| (lo.min(d), hi.max(d)));
    centre + 0.5 * (lo + hi)
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn ac2_kinematics(c: &mut Checks) {
    let mut rng = seed::rng_for(2024, &[]);
    let mut worst_period = 0.0f64;
    let mut worst_ratio = 0.0f64;
    let mut worst_sine = 0.0f64;
    let mut sped_up = 0;
    for case in 0..1000 {
        let p = valid_random(&mut rng);
        let trace = kinematics::generate(&p, 360).unwrap();
        let period_err = (trace.samples.last().unwrap().t + trace.dt() - 1.0 / p.frequency).abs();
        worst_period = worst_period.max(period_err);

        // one grid step in azimuth, and the interpolation error it allows at a peak
        let max_step = trace
            .samples
            .windows(2)
            .map(|w| w[1].phi - w[0].phi)
            .chain(std::iter::once(TAU - trace.samples.last().unwrap().phi))
            .fold(0.0, f64::max);
        let x_max = trace.samples.iter().map(|s| s.sweep[0]).fold(f64::MIN, f64::max);
        let x_min = trace.samples.iter().map(|s| s.sweep[0]).fold(f64::MAX, f64::min);
        let x_slack = p.stroke_angle * max_step * max_step / 2.0 + 1e-12;
        c.check(
            x_max <= p.stroke_angle + 1e-12 && x_max >= p.stroke_angle - x_slack,
            format!("case {case}: max x {x_max} vs stroke {}", p.stroke_angle),
        );
        c.check(
            x_min >= -p.stroke_angle - 1e-12 && x_min <= -p.stroke_angle + x_slack,
            format!("case {case}: min x {x_min} vs stroke {}", p.stroke_angle),
        );
        let y_max = trace.samples.iter().map(|s| s.sweep[1]).fold(f64::MIN, f64::max);
        let y_peak = p.thickness_angle * (1.0 + p.camber);
        let y_slack = p.thickness_angle * (1.0 + 2.0 * p.camber) * max_step * max_step + 1e-12;
        c.check(
            y_max <= y_peak + 1e-12 && y_max >= y_peak - y_slack,
            format!("case {case}: max y {y_max} vs {y_peak}"),
        );

        let warp = TimeWarp::new(&p).unwrap();
        if let Some((t_in, t_out)) = warp.section_times() {
            sped_up += 1;
            let inside = (t_out - t_in).rem_euclid(warp.period());
            let inside = if inside == 0.0 {
                warp.period() / (1.0 + p.speed_up_value)
            } else {
                inside
            };
            let ratio = (warp.period() - inside) / inside;
            worst_ratio = worst_ratio.max((ratio - p.speed_up_value).abs());
        }

        if p.rotation_angle.abs() > 1.0 {
            let sign = p.rotation_angle.signum();
            let peak = trace.samples.iter().map(|s| s.aoa * sign).fold(f64::MIN, f64::max);
            let near: Vec<f64> = trace
                .samples
                .iter()
                .filter(|s| s.aoa * sign >= peak - 1e-9 * p.rotation_angle.abs())
                .map(|s| s.phi)
                .collect();
            let at = arc_midpoint(&near);
            c.check(
                angular_distance(at, p.rotation_phase) <= max_step + 1e-9,
                format!("case {case}: aoa peak at {at} vs phase {}", p.rotation_phase),
            );
        }
        c.check(
            trace
                .samples
                .iter()
                .all(|s| s.aoa.abs() <= p.rotation_angle.abs() + 1e-12),
            format!("case {case}: |aoa| exceeds |rotation|"),
        );

        let sine = TrajectoryParams {
            rotation_acceleration: 0.0,
            ..p
        };
        for s in &trace.samples {
            let pure = p.rotation_angle * (s.phi - p.rotation_phase).cos();
            worst_sine = worst_sine.max((aoa_trace(&sine, s.phi) - pure).abs());
        }
    }
    c.check(worst_period < 1e-9, format!("period error {worst_period:e}"));
    c.check(worst_ratio < 1e-9, format!("speed-up ratio error {worst_ratio:e}"));
    c.check(worst_sine < 1e-12, format!("sine deviation {worst_sine:e}"));
    c.note(format!(
        "1000 vectors ({sped_up} with a sped-up half): period err {worst_period:.1e} s, \
         ratio err {worst_ratio:.1e}, sine dev {worst_sine:.1e}"
    ));
}

fn ac3_plant(c: &mut Checks) {
    let plant = PlantConfig::default().noiseless();
    let s = EvalSettings::default();
    let p = TrajectoryParams::thrust_initialization();

    for (sweep, pitch) in [([0.0, 0.0], 0.0), ([12.0, -4.0], 33.0), ([-30.0, 9.0], -120.0)] {
        for damage in [plant.damage, apply_damage(&plant.fin, 0.442).unwrap()] {
            let f = plate_force(sweep, [0.0, 0.0], pitch, 0.0, &plant.fin, &plant.fluid, &damage);
            c.check(f.force == [0.0; 3] && f.normal == 0.0, "zero motion gives zero force");
        }
    }

    let a = evaluate(&p, &plant, &s, 0).unwrap();
    let mut dense = plant;
    dense.fluid.density *= 2.0;
    let b = evaluate(&p, &dense, &s, 0).unwrap();
    let mut worst = 0.0f64;
    for (x, y) in a.force_trace.iter().zip(&b.force_trace) {
        for k in 0..4 {
            worst = worst.max((y[k] - 2.0 * x[k]).abs() / x[k].abs().max(1.0));
        }
    }
    for k in 0..3 {
        worst = worst.max((b.mean_force[k] - 2.0 * a.mean_force[k]).abs() / a.mean_force[k].abs().max(1.0));
    }
    c.check(worst <= 1e-12, format!("density linearity deviation {worst:e}"));

    let fast = evaluate(&p.with(Param::Frequency, 2.0 * p.frequency), &plant, &s, 0).unwrap();
    let scale = a.mean_force.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rel = (0..3)
        .map(|k| (fast.mean_force[k] - 4.0 * a.mean_force[k]).abs() / scale)
        .fold(0.0, f64::max);
    c.check(rel <= 1e-6, format!("frequency doubling deviation {rel:e}"));

    let damaged = apply_damage(&plant.fin, 0.442).unwrap();
    c.check(damaged.retained_area_fraction() == 0.558, "retained area 0.558");

    let noisy = PlantConfig::default();
    let r1 = evaluate(&p, &noisy, &s, 17).unwrap();
    let r2 = evaluate(&p, &noisy, &s, 17).unwrap();
    let bits = |r: &CycleRecord| serde_json::to_string(r).unwrap();
    c.check(r1 == r2 && bits(&r1) == bits(&r2), "same seed gives the same record");
    c.check(r1 != evaluate(&p, &noisy, &s, 18).unwrap(), "different streams differ");
    c.note(format!(
        "density dev {worst:.1e}, frequency-doubling dev {rel:.1e}, retained area {}",
        damaged.retained_area_fraction()
    ));
}

fn thrust_start() -> Cmaes {
    Cmaes::for_trajectory(
        &TrajectoryParams::thrust_initialization(),
        &ParamTable::standard(),
        42,
        CmaesSettings::default(),
    )
    .unwrap()
}

fn snapshot_text(es: &Cmaes) -> String {
    serde_json::to_string(&es.snapshot()).unwrap()
}

fn ac4_optimizer(c: &mut Checks) {
    // sphere in box-normalized coordinates, centred away from the start
    let table = ParamTable::standard();
    let centre = [0.3, 0.55, 0.62, 0.4, 0.71, 0.5, 0.45, 0.66, 0.35];
    let mut es = thrust_start();
    let mut reached = None;
    for g in 0..200 {
        let cands = es.ask();
        let f: Vec<f64> = cands
            .iter()
            .map(|cand| {
                es.bounds()
                    .to_unit(&cand.projected)
                    .iter()
                    .zip(&centre)
                    .map(|(u, m)| (u - m) * (u - m))
                    .sum()
            })
            .collect();
        es.tell(&cands, &f).unwrap();
        let err = es
            .mean_unit()
            .iter()
            .zip(&centre)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if err < 1e-3 {
            reached = Some((g + 1, err));
            break;
        }
    }
    match reached {
        Some((g, err)) => {
            let optimum: Vec<f64> = es.bounds().from_unit(&centre);
            let param_err: Vec<String> = Param::ALL
                .iter()
                .map(|p| {
                    let i = p.index();
                    format!("{:.1e}", (es.mean()[i] - optimum[i]).abs() / table.range(*p).width())
                })
                .collect();
            c.note(format!(
                "sphere: mean within {err:.1e} (normalized) after {g} generations; per-parameter error / width: {}",
                param_err.join(" ")
            ));
        }
        None => c.check(false, "sphere mean not within 1e-3 after 200 generations"),
    }

    // rank invariance under a constant shift
    let mut a = thrust_start();
    for _ in 0..3 {
        let cands = a.ask();
        let f: Vec<f64> = cands
            .iter()
            .map(|x| x.unit.iter().map(|u| (u - 0.5).powi(2)).sum())
            .collect();
        a.tell(&cands, &f).unwrap();
    }
    let mut b = Cmaes::restore(&a.snapshot()).unwrap();
    let (ca, cb) = (a.ask(), b.ask());
    let f: Vec<f64> = ca
        .iter()
        .map(|x| x.unit.iter().map(|u| (u - 0.2).powi(2)).sum())
        .collect();
    let shifted: Vec<f64> = f.iter().map(|v| v + 7.25).collect();
    a.tell(&ca, &f).unwrap();
    b.tell(&cb, &shifted).unwrap();
    c.check(
        snapshot_text(&a) == snapshot_text(&b),
        "shifted fitness gives the same state",
    );

    // snapshot through text and back, then compare the next generation
    let text = snapshot_text(&a);
    let mut restored = Cmaes::restore(&serde_json::from_str::<CmaesSnapshot>(&text).unwrap()).unwrap();
    let direct = a.ask();
    let resumed = restored.ask();
    let same = direct.len() == resumed.len()
        && direct.iter().zip(&resumed).all(|(x, y)| {
            x.raw.iter().zip(&y.raw).all(|(u, v)| u.to_bits() == v.to_bits())
                && x.projected
                    .iter()
                    .zip(&y.projected)
                    .all(|(u, v)| u.to_bits() == v.to_bits())
        });
    c.check(same, "restored state samples the same next generation");

    // convergence flags on constructed states
    let base = thrust_start();
    let fresh = base.converged();
    let expected_fresh: Vec<bool> = Param::ALL
        .iter()
        .map(|p| 0.3 * 0.25 * table.range(*p).width() < table.range(*p).threshold)
        .collect();
    c.check(
        !fresh.all && fresh.flags == expected_fresh,
        format!("fresh flags {:?}", fresh.flags),
    );
    let mut tiny = base.snapshot();
    tiny.step_size = 1e-6;
    c.check(Cmaes::restore(&tiny).unwrap().converged().all, "tiny step converges");
    let f = Param::Frequency.index();
    let width = table.range(Param::Frequency).width();
    let mut snap = base.snapshot();
    snap.step_size = 1.0;
    for (i, row) in snap.covariance.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = match (i == j, i == f) {
                (false, _) => 0.0,
                (true, true) => (0.02 / width).powi(2),
                (true, false) => 1e-12,
            };
        }
    }
    let conv = Cmaes::restore(&snap).unwrap().converged();
    c.check(
        !conv.all && conv.flags.iter().enumerate().all(|(i, &fl)| fl == (i != f)),
        format!("0.02 Hz spread flags {:?}", conv.flags),
    );
    let mut edge = base.snapshot();
    edge.step_size = 1.0;
    for (i, row) in edge.covariance.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let r = table.range(Param::ALL[i]);
            // just inside every threshold
            *v = if i == j {
                (0.999 * r.threshold / r.width()).powi(2)
            } else {
                0.0
            };
        }
    }
    c.check(
        Cmaes::restore(&edge).unwrap().converged().all,
        "spreads just under thresholds converge",
    );
}

fn ac5_analysis(c: &mut Checks) {
    let n = 360;
    let grid: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();

    let cosine: Vec<f64> = grid.iter().map(|p| 3.0 * p.cos()).collect();
    let s = fourier(&cosine, 5).unwrap();
    c.check(
        close(s.modes[0].amplitude, 3.0, 1e-12) && close(s.modes[0].phase, 0.0, 1e-9),
        "3 cos(phi) recovered",
    );
    c.check(s.modes[1..].iter().all(|m| m.amplitude < 1e-12), "higher modes vanish");

    let (d1, d2) = (37.0f64.to_radians(), -112.0f64.to_radians());
    let synth: Vec<f64> = grid
        .iter()
        .map(|p| 0.426 * (p + d1).cos() + 0.398 * (2.0 * p + d2).cos())
        .collect();
    let s = fourier(&synth, 5).unwrap();
    c.check(
        close(s.modes[0].amplitude, 0.426, 1e-9) && close(s.modes[1].amplitude, 0.398, 1e-9),
        format!("amplitudes {} {}", s.modes[0].amplitude, s.modes[1].amplitude),
    );
    c.check(
        close(s.modes[0].phase, 37.0, 1e-9) && close(s.modes[1].phase, -112.0, 1e-9),
        "phases recovered",
    );
    let roundtrip = synth
        .iter()
        .zip(&grid)
        .map(|(x, p)| (reconstruct(&s, *p) - x).abs())
        .fold(0.0, f64::max);
    c.check(roundtrip < 1e-9, format!("roundtrip error {roundtrip:e}"));

    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 1.0]);
    let r = sensitivity(&cov).unwrap();
    let expected = 0.8 / 1.6f64.sqrt();
    c.check(
        r.normalized_radius.iter().all(|&v| close(v, expected, 1e-9)),
        format!("normalized radii {:?}", r.normalized_radius),
    );
    // walk the unit-level ellipse boundary and read off its axis crossings
    let l = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 1.0])
        .cholesky()
        .unwrap()
        .l();
    let samples = 1_000_000;
    let point = |k: usize| {
        let t = TAU * k as f64 / samples as f64;
        (l[(0, 0)] * t.cos(), l[(1, 0)] * t.cos() + l[(1, 1)] * t.sin())
    };
    let mut axis = [0.0f64; 2];
    for k in 0..samples {
        let (a, b) = (point(k), point((k + 1) % samples));
        if (a.1 > 0.0) != (b.1 > 0.0) {
            axis[0] = axis[0].max(a.0.abs());
        }
        if (a.0 > 0.0) != (b.0 > 0.0) {
            axis[1] = axis[1].max(a.1.abs());
        }
    }
    let lambda1 = r.eigenvalues[0];
    for (i, (a, r_hat)) in axis.iter().zip(&r.normalized_radius).enumerate() {
        c.check(
            close(a / lambda1.sqrt(), *r_hat, 1e-3),
            format!("boundary oracle axis {i}: {a}"),
        );
    }
    let ident = sensitivity(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(
        (1..=9).map(|i| i as f64).collect(),
    )))
    .unwrap();
    c.check(
        ident.normalized_radius.iter().all(|&v| close(v, 1.0, 1e-12)),
        "uncorrelated covariance gives unit radii",
    );

    let mut rng = seed::rng_for(5, &[]);
    let records: Vec<CycleRecord> = (0..5)
        .map(|_| {
            let heading: f64 = rng.random_range(-PI..PI);
            let mag: f64 = rng.random_range(0.1..2.0);
            let trace: Vec<[f64; 4]> = grid
                .iter()
                .map(|p| {
                    let m = mag * (1.0 + 0.5 * p.sin());
                    [m * heading.cos(), m * heading.sin(), 0.3 * p.cos(), m]
                })
                .collect();
            CycleRecord {
                mean_force: [mag * heading.cos(), mag * heading.sin(), 0.0],
                mean_normal_force_mag: mag,
                phi_grid: grid.clone(),
                force_trace: trace,
                aoa_trace: vec![0.0; n],
                n_runs: 3,
                reynolds: 500.0,
            }
        })
        .collect();
    let rotated = rotate_to_resultant(&records).unwrap();
    let worst = rotated.iter().map(|r| r.record.mean_force[1].abs()).fold(0.0, f64::max);
    c.check(worst < 1e-12, format!("|Fy*| of rotated means {worst:e}"));
    c.note(format!(
        "recovered amplitudes {:.12} {:.12}; normalized radius {:.10}; oracle {:.6}; max |Fy*| {worst:.1e} N",
        s.modes[0].amplitude,
        s.modes[1].amplitude,
        r.normalized_radius[0],
        axis[0] / lambda1.sqrt()
    ));
}

const F_TARGET: f64 = 0.5;
const BRANCH_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn ac6_protocol(c: &mut Checks, store: &Store) -> Vec<FinishedRun> {
    let mut config: RunConfig = serde_json::from_value(serde_json::json!({
        "run_id": "intact",
        "objective": Objective::thrust(F_TARGET),
        "optimizer": {"seed": 1},
    }))
    .unwrap();
    config.schedule.branches = vec![BranchDirective {
        at: BranchPoint::BeforeEnd(10),
        damage_fraction: 0.442,
        seeds: BRANCH_SEEDS.to_vec(),
        reseed_sampler: false,
    }];
    let outcome = run(store, &config).unwrap();
    c.check(
        outcome.reason == TerminationReason::Converged,
        format!("intact run ended by {}", outcome.reason.as_str()),
    );
    let intact = FinishedRun::load(store, "intact").unwrap();
    c.note(format!(
        "intact: converged at generation {}, force {:.4} N, fitness {:.4}",
        outcome.final_generation,
        intact.optimum().fitness.unwrap().force_used,
        intact.optimum().ranked_fitness
    ));

    let mut within = 0;
    let mut branches = Vec::new();
    for b in &outcome.branches {
        let run = FinishedRun::load(store, &b.run_id).unwrap();
        let force = run.optimum().fitness.map_or(f64::NAN, |f| f.force_used);
        let deviation = (force - F_TARGET).abs() / F_TARGET;
        if deviation <= 0.02 {
            within += 1;
        }
        let rec = report::Recovery::of(store, &run).unwrap();
        let spike = rec.peak_median / rec.pre_branch_median;
        let settle = rec.final_median / rec.pre_branch_median;
        c.check(spike > 2.0, format!("{}: spike ratio {spike:.3}", b.run_id));
        c.check(settle <= 1.5, format!("{}: final ratio {settle:.3}", b.run_id));
        c.note(format!(
            "{}: {} at generation {}, force {force:.4} N ({:.2}% off), median fitness {:.3} -> peak {:.3} ({spike:.2}x) -> final {:.3} ({settle:.2}x)",
            b.run_id,
            b.reason.as_str(),
            b.final_generation,
            100.0 * deviation,
            rec.pre_branch_median,
            rec.peak_median,
            rec.final_median,
        ));
        branches.push(run);
    }
    c.check(branches.len() == 5, "five branches");
    c.check(within >= 4, format!("{within}/5 branches within 2% of the target"));
    branches
}

fn ac7_report(c: &mut Checks, store: &Store, branches: &[FinishedRun]) {
    let ids: Vec<String> = std::iter::once("intact".to_string())
        .chain(branches.iter().map(|b| b.id().to_string()))
        .collect();
    let out = tempfile::tempdir().unwrap();
    let summary = report::analyze(store, &ids, out.path()).unwrap();
    let table = std::fs::read_to_string(out.path().join("classification.csv")).unwrap();
    let rows = csv::Reader::from_reader(table.as_bytes()).records().count();
    c.check(rows == branches.len(), format!("{rows} classification rows"));
    for line in table.lines() {
        c.note(line.to_string());
    }
    let count = |p: Param, a: Adaptation| summary.comparisons.iter().filter(|r| r.changes[p.index()] == a).count();
    let shifts: Vec<String> = summary
        .comparisons
        .iter()
        .map(|r| format!("{:.0}", r.aoa_phase_shift))
        .collect();
    c.note(format!(
        "stroke increased in {}/5 (hardware: increase); frequency increased in {}/5 (hardware: 4/5); \
         AOA first-harmonic phase shifts {} deg (hardware: about 110)",
        count(Param::StrokeAngle, Adaptation::Increase),
        count(Param::Frequency, Adaptation::Increase),
        shifts.join(", ")
    ));
}

fn ac8_reynolds(c: &mut Checks) {
    let rec = evaluate(
        &intact_thrust().trajectory(),
        &PlantConfig::default(),
        &EvalSettings::default(),
        0,
    )
    .unwrap();
    c.check(
        (200.0..=2000.0).contains(&rec.reynolds),
        format!("Re = {}", rec.reynolds),
    );
    let force = fitness(&rec, &Objective::thrust(1.0)).unwrap().force_used;
    c.note(format!(
        "Re = {:.0} (hardware band 440-960); thrust at these kinematics {force:.3} N",
        rec.reynolds
    ));
}

fn main() {
    // `cargo test` passes harness flags such as `--quiet`; `--list` must not run anything.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut outcomes = vec![
        criterion("AC1", "fitness oracle", Some(Duration::from_secs(1)), ac1_fitness),
        criterion("AC2", "kinematics suite", Some(Duration::from_secs(10)), ac2_kinematics),
        criterion("AC3", "plant scaling laws", None, ac3_plant),
        criterion("AC4", "optimizer", Some(Duration::from_secs(30)), ac4_optimizer),
        criterion("AC5", "analysis", None, ac5_analysis),
    ];
    let dir = tempfile::tempdir().unwrap();
    let store = Store::new(dir.path());
    let mut branches = Vec::new();
    outcomes.push(criterion(
        "AC6",
        "end-to-end damage and recovery",
        Some(Duration::from_secs(600)),
        |c| branches = ac6_protocol(c, &store),
    ));
    outcomes.push(criterion(
        "AC7",
        "adaptation report (documented, not gated)",
        None,
        |c| {
            if branches.is_empty() {
                c.check(false, "no branches from AC6");
            } else {
                ac7_report(c, &store, &branches)
            }
        },
    ));
    outcomes.push(criterion("AC8", "Reynolds sanity", None, ac8_reynolds));

    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
