//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion.
//!
//! Set `ACCEPTANCE_ONLY=4,7` to run a subset.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toric_dqpt::lattice::build_lattice;
use toric_dqpt::lindblad::{dissipator, noisy_ln_series, BathParams, IntegratorConfig};
use toric_dqpt::loopgroup::{walsh_hadamard_in_place, GroupElement, LoopGroup, LoopStateVector};
use toric_dqpt::oracle::{
    check_diagonality, check_ggm_bipartitions, check_ground_states, DenseDensityMatrix, DenseState,
    ValidationOptions,
};
use toric_dqpt::quench::{Quench, TimeGrid};
use toric_dqpt::sweep::{
    echo_zero_spacings, relative_spread, run_closed_sweep, run_open_sweep, sign_changes, BetaGrid,
    ClosedContext, LatticeSize, Pipeline, SweepConfig, SweepResult, ECHO_ZERO_THRESHOLD,
};
use toric_dqpt::{block_schmidt, log_negativity_mixed, log_negativity_pure, BETA_CRITICAL};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn selected(id: usize) -> bool {
    match std::env::var("ACCEPTANCE_ONLY") {
        Ok(list) => list.split(',').any(|s| s.trim().parse() == Ok(id)),
        Err(_) => true,
    }
}

fn criterion_1() -> Outcome {
    let opts = ValidationOptions {
        samples: 50,
        seed: 11,
    };
    let mut passed = true;
    let mut detail = Vec::new();
    for (lx, ly) in [(2, 2), (2, 3)] {
        let check = check_ggm_bipartitions(&build_lattice(lx, ly).unwrap(), opts).unwrap();
        passed &= check.max_error < 1e-10;
        detail.push(format!("{lx}x{ly} max|dG|={:.2e}", check.max_error));
    }
    outcome(passed, detail.join(", "))
}

fn criterion_2() -> Outcome {
    let opts = ValidationOptions {
        samples: 10,
        seed: 12,
    };
    let mut passed = true;
    let mut detail = Vec::new();
    for (lx, ly) in [(2, 2), (2, 3)] {
        let check = check_diagonality(&build_lattice(lx, ly).unwrap(), opts).unwrap();
        passed &= check.max_error < 1e-12;
        detail.push(format!(
            "{lx}x{ly} max off-diagonal={:.2e}",
            check.max_error
        ));
    }
    outcome(passed, detail.join(", "))
}

fn criterion_3() -> Outcome {
    let mut passed = true;
    let mut detail = Vec::new();
    for (lx, ly) in [(2, 2), (2, 3)] {
        let lat = build_lattice(lx, ly).unwrap();
        let check = check_ground_states(&lat).unwrap();
        // fidelity > 1 - 1e-10 at every β, and E(β=0) = -Np within 1e-10
        passed &= check.max_error < 1e-10;
        detail.push(format!("{lx}x{ly} worst={:.2e}", check.max_error));
    }
    outcome(passed, detail.join(", "))
}

fn criterion_4() -> Outcome {
    let ctx = ClosedContext::new(build_lattice(2, 7).unwrap()).unwrap();
    assert_eq!(ctx.group.order(), 8192);
    let times = TimeGrid::new(0.0, 10.0, 0.01).unwrap().points();
    let mut passed = true;
    let mut detail = Vec::new();
    for beta0 in [0.6, 0.8, 1.0] {
        let echo = ctx.echo_series(beta0, &times).unwrap();
        let spacings = echo_zero_spacings(&echo, ECHO_ZERO_THRESHOLD);
        let spread = relative_spread(&spacings);
        passed &= echo.min_echo() < 1e-4 && !spacings.is_empty() && spread < 0.1;
        detail.push(format!(
            "b={beta0}: min={:.1e} zeros={} spread={spread:.3}",
            echo.min_echo(),
            spacings.len() + 1
        ));
    }
    for beta0 in [0.1, 0.2, 0.3] {
        let echo = ctx.echo_series(beta0, &times).unwrap();
        passed &= echo.min_echo() > 1e-3;
        detail.push(format!("b={beta0}: min={:.2e}", echo.min_echo()));
    }
    outcome(passed, detail.join("; "))
}

fn closed_sweep(lx: usize, ly: usize) -> SweepResult {
    let cfg = SweepConfig {
        lattice: LatticeSize { lx, ly },
        ..SweepConfig::default()
    };
    run_closed_sweep(&cfg).unwrap()
}

fn criterion_5_and_6() -> (Outcome, Outcome) {
    let sizes = [(2, 2), (2, 3), (2, 4), (2, 6), (2, 7)];
    let mut ggm_peaks = Vec::new();
    let mut ln_peaks = Vec::new();
    let mut largest = None;
    for (lx, ly) in sizes {
        let result = closed_sweep(lx, ly);
        ggm_peaks.push(result.ggm.as_ref().unwrap().peak_first.unwrap().beta);
        ln_peaks.push(result.ln.as_ref().unwrap().peak_first.unwrap().beta);
        largest = Some(result);
    }
    let approaches = |peaks: &[f64]| {
        peaks
            .windows(2)
            .all(|w| (w[1] - BETA_CRITICAL).abs() <= (w[0] - BETA_CRITICAL).abs())
    };
    let last_ggm = *ggm_peaks.last().unwrap();
    let last_ln = *ln_peaks.last().unwrap();
    let passed5 = (last_ggm - BETA_CRITICAL).abs() <= 0.05
        && (last_ln - BETA_CRITICAL).abs() <= 0.05
        && approaches(&ggm_peaks)
        && approaches(&ln_peaks);
    let fmt = |p: &[f64]| {
        p.iter()
            .map(|b| format!("{b:.2}"))
            .collect::<Vec<_>>()
            .join("/")
    };
    let c5 = outcome(
        passed5,
        format!(
            "N=8/12/16/24/28 peak dG: {}, peak dLN: {}",
            fmt(&ggm_peaks),
            fmt(&ln_peaks)
        ),
    );

    let result = largest.unwrap();
    let low = result.record(0.05).unwrap().avg_ggm.unwrap();
    let high = result.record(1.0).unwrap().avg_ggm.unwrap();
    let c6 = outcome(
        low > 0.45 && high < 0.25 && low - high >= 0.15,
        format!(
            "<G>(0.05)={low:.4}, <G>(1.0)={high:.4}, gap={:.4}",
            low - high
        ),
    );
    (c5, c6)
}

fn random_state(order: usize, rng: &mut impl Rng) -> LoopStateVector<f64> {
    let amps: Vec<Complex64> = (0..order)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    LoopStateVector::new(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let lat = build_lattice(2, 7).unwrap();
    let group = LoopGroup::new(&lat);
    let psi = random_state(group.order(), &mut rng);

    let mut data = psi.amps().to_vec();
    walsh_hadamard_in_place(&mut data).unwrap();
    walsh_hadamard_in_place(&mut data).unwrap();
    let round_trip = data
        .iter()
        .zip(psi.amps())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    let mut state = psi.clone();
    for _ in 0..1000 {
        state = Quench::new(&state, &group).unwrap().state_at(0.01);
    }
    let drift = (state.norm() - 1.0).abs();

    let quench = Quench::new(&psi, &group).unwrap();
    let mut echo_err = 0.0f64;
    for k in 0..50 {
        let t = 0.2 * k as f64;
        let direct = psi.inner(&quench.state_at(t)).norm_sqr();
        echo_err = echo_err.max((direct - quench.echo(t)).abs());
    }
    outcome(
        round_trip < 1e-12 && drift < 1e-10 && echo_err < 1e-12,
        format!("WHT round trip={round_trip:.1e}, norm drift={drift:.1e}, echo spectral-direct={echo_err:.1e}"),
    )
}

fn criterion_8() -> Outcome {
    let lat = build_lattice(2, 2).unwrap();
    let bip = lat.equal_block_bipartition();
    let times = TimeGrid::default();
    let grid = BetaGrid::new(0.1, 1.0, 0.1).unwrap();
    let cfg = IntegratorConfig::default();

    // (a) unitary limit against the closed pipeline
    let ctx = ClosedContext::new(lat.clone()).unwrap();
    let mut unitary_err = 0.0f64;
    let mut drift = 0.0f64;
    for beta0 in [0.1, 0.8] {
        let closed = ctx.point_series(beta0, &times.points()).unwrap();
        let noisy = noisy_ln_series(
            beta0,
            &BathParams::new(0.0, 10.0).unwrap(),
            &cfg,
            &lat,
            &bip,
            &times,
        )
        .unwrap();
        drift = drift.max(noisy.max_trace_drift);
        for (a, b) in closed.ln.iter().zip(noisy.series.values()) {
            unitary_err = unitary_err.max((a - b).abs());
        }
    }

    // (b), (c) dissipative sweep
    let base = SweepConfig {
        lattice: LatticeSize { lx: 2, ly: 2 },
        beta0: grid,
        time: times,
        ..SweepConfig::default()
    };
    let closed = run_closed_sweep(&base).unwrap();
    let open = run_open_sweep(&SweepConfig {
        pipeline: Pipeline::Open,
        bath: BathParams::new(0.05, 10.0).unwrap(),
        ..base.clone()
    })
    .unwrap();
    let decays = open
        .avg_ln()
        .iter()
        .zip(closed.avg_ln())
        .all(|(n, c)| *n < c);
    for r in &open.records {
        drift = drift.max(r.open.as_ref().unwrap().max_trace_drift);
    }
    let second = &open.ln.as_ref().unwrap().second;
    let changes = sign_changes(second, &open.ln.as_ref().unwrap().betas);
    let curvature = changes.len() == 1 && changes[0] > 0.2 && changes[0] < 0.7;
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.4}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    outcome(
        unitary_err < 1e-6 && decays && curvature && drift < 1e-8,
        format!(
            "(a) max|dLN|={unitary_err:.1e}; (b) open<closed={decays} open=[{}] closed=[{}]; (c) sign changes at {changes:?}; drift={drift:.1e}",
            fmt(&open.avg_ln()),
            fmt(&closed.avg_ln())
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = Vec::new();

    let lat = build_lattice(3, 3).unwrap();
    let group = LoopGroup::new(&lat);
    let closure = (0..200).all(|_| {
        let a = GroupElement(rng.gen_range(0..group.order() as u64));
        let b = GroupElement(rng.gen_range(0..group.order() as u64));
        group.flip(a ^ b).0 == group.flip(a).0 ^ group.flip(b).0
    });
    if !closure {
        failures.push("closure");
    }

    let psi = random_state(group.order(), &mut rng);
    let mut data = psi.amps().to_vec();
    walsh_hadamard_in_place(&mut data).unwrap();
    let parseval: f64 = data.iter().map(|a| a.norm_sqr()).sum();
    if (parseval - 1.0).abs() > 1e-12 {
        failures.push("parseval");
    }

    let bip = lat.equal_block_bipartition();
    let schmidt = block_schmidt(&psi, &group, &bip).unwrap();
    if (schmidt.norm_sqr() - 1.0).abs() > 1e-12 {
        failures.push("schmidt normalization");
    }

    let small = build_lattice(2, 2).unwrap();
    let g2 = LoopGroup::new(&small);
    let b2 = small.equal_block_bipartition();
    let mut ln_err = 0.0f64;
    for _ in 0..5 {
        let psi = random_state(g2.order(), &mut rng);
        let pure = log_negativity_pure(&block_schmidt(&psi, &g2, &b2).unwrap());
        let rho = DenseDensityMatrix::pure(&DenseState::from_loop_state(&psi, &g2).unwrap());
        ln_err = ln_err.max((pure - log_negativity_mixed(&rho, &b2).unwrap()).abs());
    }
    if ln_err > 1e-9 {
        failures.push("pure/mixed negativity");
    }

    let bath = BathParams::new(0.05, 10.0).unwrap();
    let n = 4;
    let single = [bath.p1(), bath.p0()];
    let diag: Vec<Complex64> = (0..1usize << n)
        .map(|s| Complex64::new((0..n).map(|i| single[s >> i & 1]).product(), 0.0))
        .collect();
    let thermal =
        DenseDensityMatrix::new(ndarray::Array2::from_diag(&ndarray::Array1::from(diag))).unwrap();
    let fixed = dissipator(&thermal, &bath, n)
        .unwrap()
        .iter()
        .map(|x| x.norm())
        .fold(0.0, f64::max);
    if fixed > 1e-10 {
        failures.push("thermal fixed point");
    }

    outcome(
        failures.is_empty(),
        format!(
            "pure/mixed LN err={ln_err:.1e}, thermal residual={fixed:.1e}, failed: {failures:?}"
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let mut results: Vec<(usize, Outcome, f64)> = Vec::new();
    let mut run = |id: usize, f: &dyn Fn() -> Outcome| {
        if selected(id) {
            let start = Instant::now();
            let o = f();
            results.push((id, o, start.elapsed().as_secs_f64()));
        }
    };
    run(1, &criterion_1);
    run(2, &criterion_2);
    run(3, &criterion_3);
    run(4, &criterion_4);
    if selected(5) || selected(6) {
        let start = Instant::now();
        let (c5, c6) = criterion_5_and_6();
        let elapsed = start.elapsed().as_secs_f64();
        results.push((5, c5, elapsed));
        results.push((6, c6, 0.0));
    }
    let mut run = |id: usize, f: &dyn Fn() -> Outcome| {
        if selected(id) {
            let start = Instant::now();
            let o = f();
            results.push((id, o, start.elapsed().as_secs_f64()));
        }
    };
    run(7, &criterion_7);
    run(8, &criterion_8);
    run(9, &criterion_9);

    let mut failed = Vec::new();
    for (id, o, secs) in &results {
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {id}: {verdict} ({secs:.1}s) {}", o.detail);
        if !o.passed {
            failed.push(*id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
