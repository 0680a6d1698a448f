use gsm_gas::bench::validate::random_integer_polynomial;
use gsm_gas::encoder::{build_objective, EncoderParams};
use gsm_gas::gas::{
    choose_m, grover_adaptive_search, register_width_for_span, run_gas, sample_rotation_count,
    GasParams, StopReason, Termination, TrialRng,
};
use gsm_gas::gsm::{classical_mld, synthesize, ApCodebook, CodebookRule, GsmConfig};
use gsm_gas::sim::{StateVectorSampler, StructuredSampler};
use rand::SeedableRng;

#[test]
fn rotation_counts_are_uniform() {
    let mut rng = TrialRng::seed_from_u64(1);
    for (k, support) in [(1.0, 1usize), (3.0, 3), (5.3, 6), (8.0, 8)] {
        let draws = 60_000;
        let mut counts = vec![0usize; support + 2];
        for _ in 0..draws {
            counts[sample_rotation_count(k, &mut rng)] += 1;
        }
        assert!(
            counts[support..].iter().all(|&c| c == 0),
            "k {k}: {counts:?}"
        );
        let e = draws as f64 / support as f64;
        let stat: f64 = counts[..support]
            .iter()
            .map(|&c| (c as f64 - e).powi(2) / e)
            .sum();
        let df = (support - 1) as f64;
        assert!(
            stat <= df + 5.0 * (2.0 * df).sqrt() + 10.0,
            "k {k}: χ² {stat}"
        );
    }
}

#[test]
fn register_width_covers_the_span() {
    for span in 0..300i64 {
        let m = register_width_for_span(span);
        assert!((1i64 << (m - 1)) > span);
        assert!(m == 1 || (1i64 << (m - 2)) <= span);
    }
}

#[test]
fn search_finds_the_minimum_of_random_objectives() {
    let mut rng = TrialRng::seed_from_u64(3);
    for seed in 0..20u64 {
        let p = random_integer_polynomial(8, 10, 3, 20, &mut rng);
        let min = *p.evaluate_all().iter().min().unwrap();
        let sampler = StructuredSampler::new(&p, choose_m(&p, 0));
        let params = GasParams {
            termination: Termination::target(min, 1_000_000),
            ..GasParams::new(8, seed)
        };
        let r = grover_adaptive_search(&p, None, sampler, &params).unwrap();
        assert_eq!(r.best_int, min);
        assert_eq!(r.stop_reason, StopReason::Target);
    }
}

#[test]
fn trace_is_consistent_with_the_totals() {
    let mut rng = TrialRng::seed_from_u64(4);
    let p = random_integer_polynomial(7, 10, 3, 20, &mut rng);
    let sampler = StructuredSampler::new(&p, choose_m(&p, 0));
    let r = grover_adaptive_search(&p, None, sampler, &GasParams::new(7, 9)).unwrap();
    assert_eq!(r.qccd, r.trace.len() as u64 + 1);
    assert_eq!(
        r.qcqd,
        r.trace.iter().map(|s| s.rotations as u64).sum::<u64>()
    );
    let mut threshold = r.initial_int;
    for s in &r.trace {
        assert_eq!(s.improved, s.measured_int < threshold);
        threshold = threshold.min(s.measured_int);
        assert_eq!(s.threshold_int, threshold);
    }
    assert_eq!(r.best_int, threshold);
    assert_eq!(p.eval_index(r.best_x), r.best_int);
}

#[test]
fn runs_are_reproducible_per_seed() {
    let cfg = GsmConfig::paper();
    let cb = ApCodebook::build(4, 3, 4, &CodebookRule::Cyclic).unwrap();
    let (_, chan) = synthesize(&cfg, &cb, 1).unwrap();
    let problem = build_objective(&chan, &cfg, &cb, &EncoderParams::default()).unwrap();
    let m = choose_m(&problem.quantized, 0);
    let a = run_gas(
        &problem,
        StructuredSampler::new(&problem.quantized, m),
        &GasParams::new(12, 5),
    )
    .unwrap();
    let b = run_gas(
        &problem,
        StructuredSampler::new(&problem.quantized, m),
        &GasParams::new(12, 5),
    )
    .unwrap();
    assert_eq!(a, b);
}

#[test]
fn gate_level_backend_reaches_the_detection_optimum() {
    // BPSK on two antennas keeps n + m small enough for full simulation.
    let cfg = GsmConfig {
        n_tx: 3,
        n_rx: 2,
        k_active: 2,
        q_aps: 2,
        constellation: gsm_gas::gsm::Constellation::Bpsk,
        snr_db: 10.0,
    };
    let cb = ApCodebook::build(3, 2, 2, &CodebookRule::Cyclic).unwrap();
    let params = EncoderParams {
        precision_bits: 2,
        ..EncoderParams::default()
    };
    for seed in 0..3u64 {
        let (_, chan) = synthesize(&cfg, &cb, seed).unwrap();
        let problem = build_objective(&chan, &cfg, &cb, &params).unwrap();
        let classical = classical_mld(&chan, &cfg, &cb);
        let target = *problem.quantized.evaluate_all().iter().min().unwrap();
        let m = choose_m(&problem.quantized, 0);
        assert!(problem.n_vars() + m as usize <= 22, "m = {m}");
        let sampler = StateVectorSampler::new(&problem.quantized, m).unwrap();
        let gas_params = GasParams {
            termination: Termination::target(target, 100_000),
            ..GasParams::new(problem.n_vars(), seed)
        };
        let r = run_gas(&problem, sampler, &gas_params).unwrap();
        assert_eq!(r.best_int, target);
        let d = problem.decode_index(r.best_x);
        assert!(d.valid);
        assert!(r.best_value >= classical.metric - 1e-9);
    }
}

#[test]
fn missing_termination_rule_is_rejected() {
    let mut rng = TrialRng::seed_from_u64(0);
    let p = random_integer_polynomial(3, 3, 2, 3, &mut rng);
    let params = GasParams {
        termination: Termination {
            patience: None,
            max_qcqd: None,
            target: None,
        },
        ..GasParams::new(3, 0)
    };
    assert!(grover_adaptive_search(
        &p,
        None,
        StructuredSampler::new(&p, choose_m(&p, 0)),
        &params
    )
    .is_err());
}
