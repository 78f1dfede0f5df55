use roml::concentration::PrecisionSchedule;
use roml::constrained::{run_sim_constrained, ConstrainedInstance};
use roml::delayed::run_sim_delayed;
use roml::experts::FtlState;
use roml::harness::{
    generate_instance, run_trials, write_reports_csv, Algorithm, GeneratedInstance, GeneratorKind, InstanceSpec,
};
use roml::lp::solve_opt_lp;
use roml::switching::run_sse;
use roml::LossInstance;

fn losses(spec: &InstanceSpec) -> LossInstance {
    match generate_instance(spec).unwrap() {
        GeneratedInstance::Losses(i) => i,
        _ => panic!("expected a loss instance"),
    }
}

fn constrained(spec: &InstanceSpec) -> ConstrainedInstance {
    match generate_instance(spec).unwrap() {
        GeneratedInstance::Constrained(i) => i,
        _ => panic!("expected a constrained instance"),
    }
}

#[test]
fn benchmarks_do_not_depend_on_the_order() {
    let mut spec = InstanceSpec::new(GeneratorKind::GapBandit, 500);
    spec.actions = 3;
    let seeds: Vec<u64> = (0..10).collect();
    for algo in [Algorithm::Ftl, Algorithm::Sse, Algorithm::SimFtl { delay: 4 }] {
        let s = run_trials(algo, &spec, &seeds, 2).unwrap();
        assert!(s.reports.iter().all(|r| r.benchmark == s.reports[0].benchmark));
    }
    let mut spec = InstanceSpec::new(GeneratorKind::ConstrainedRandom, 256);
    spec.actions = 3;
    let s = run_trials(Algorithm::SimConstrained { delta: 0.1 }, &spec, &seeds, 3).unwrap();
    assert!(s.reports.iter().all(|r| r.benchmark == s.reports[0].benchmark));
}

#[test]
fn aggregate_mean_matches_per_seed_sum() {
    let spec = InstanceSpec::new(GeneratorKind::IidUniformSupport, 1 << 12);
    let seeds: Vec<u64> = (100..160).collect();
    let s = run_trials(Algorithm::Birthday, &spec, &seeds, 4).unwrap();
    let total: f64 = s.reports.iter().map(|r| r.regret).sum();
    assert!((s.mean * seeds.len() as f64 - total).abs() <= 1e-9);
    assert_eq!(s.reports.iter().map(|r| r.seed).collect::<Vec<_>>(), seeds);
}

#[test]
fn report_csv_is_byte_identical_across_runs() {
    let spec = InstanceSpec::new(GeneratorKind::GapBandit, 2048);
    let seeds = [3, 1, 4, 15, 9];
    let render = |jobs| {
        let s = run_trials(Algorithm::SimFtl { delay: 8 }, &spec, &seeds, jobs).unwrap();
        let mut out = Vec::new();
        write_reports_csv(&mut out, &s.reports).unwrap();
        out
    };
    assert_eq!(render(1), render(1));
    assert_eq!(render(1), render(3));
}

#[test]
fn duplicate_seeds_are_rejected() {
    let spec = InstanceSpec::new(GeneratorKind::GapBandit, 64);
    assert!(run_trials(Algorithm::Ftl, &spec, &[1, 2, 1], 1).is_err());
}

#[test]
fn birthday_fooled_on_every_adversarial_seed() {
    let t = 1 << 10;
    let spec = InstanceSpec::new(GeneratorKind::BirthdayAdversarial, t);
    let seeds: Vec<u64> = (0..100).collect();
    let s = run_trials(Algorithm::Birthday, &spec, &seeds, 4).unwrap();
    assert!(s.min >= 0.4 * t as f64);
    assert!(s.reports.iter().all(|r| r.stop_time.is_none()));
}

#[test]
fn delayed_example_with_two_step_delay() {
    let rows: Vec<Vec<f64>> = (0..16).map(|t| vec![if t % 5 == 0 { 1.0 } else { 0.0 }, if t % 5 == 0 { 0.0 } else { 1.0 }]).collect();
    let inst = LossInstance::from_rows(&rows).unwrap();
    let run = run_sim_delayed(&inst, 2, FtlState::new, 11).unwrap();
    assert_eq!(run.interactions, 16);
    let again = run_sim_delayed(&inst, 2, FtlState::new, 11).unwrap();
    assert_eq!(run.report.learner_total, again.report.learner_total);
    for b in &run.blocks {
        assert_eq!(b.pool_size, b.plan.train_len());
    }
}

#[test]
fn constrained_blocks_are_played_with_generous_budget() {
    let t = 1 << 14;
    let mut spec = InstanceSpec::new(GeneratorKind::ConstrainedRandom, t);
    spec.actions = 2;
    spec.resources = 1;
    spec.rho = 0.8;
    spec.seed = 2;
    let inst = constrained(&spec);
    let delta = 0.1;
    let opt = solve_opt_lp(&inst.mean_rewards(), &inst.mean_costs(), inst.rho()).unwrap().value;
    let global_r = inst.mean_rewards();
    let global_c = inst.mean_costs();
    let mut checked = 0;
    for seed in 0..5 {
        let run = run_sim_constrained(&inst, delta, seed).unwrap();
        let played: Vec<u32> = run.blocks.iter().filter(|b| !b.forfeited).map(|b| b.index).collect();
        assert_eq!(played, vec![10, 11, 12, 13]);
        assert_eq!(run.report.violation_max, Some(0.0));
        assert!(run.consumption.iter().all(|c| c[0] <= inst.budget()));
        assert!(run.report.regret < opt * t as f64);
        for b in run.blocks.iter().filter(|b| !b.forfeited) {
            let close = |p: &[f64], g: &[f64]| p.iter().zip(g).all(|(x, y)| (x - y).abs() <= b.eps);
            let clean = close(&b.pool_mean_reward, &global_r)
                && b.pool_mean_costs.iter().zip(&global_c).all(|(p, g)| close(p, g));
            if clean {
                checked += 1;
                let block_opt = b.block_opt.unwrap();
                assert!(opt - block_opt <= b.eps * (1.0 + 3.0 / inst.rho()) + 1e-12, "block {}", b.index);
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn constrained_default_budget_forfeits_every_block() {
    let t = 1 << 12;
    let mut spec = InstanceSpec::new(GeneratorKind::ConstrainedRandom, t);
    spec.actions = 3;
    spec.resources = 2;
    let inst = constrained(&spec);
    let run = run_sim_constrained(&inst, 0.1, 0).unwrap();
    assert!(run.blocks.iter().all(|b| b.forfeited && b.rho_block < inst.rho() / 2.0));
    let opt = solve_opt_lp(&inst.mean_rewards(), &inst.mean_costs(), inst.rho()).unwrap().value;
    assert!((run.report.regret - opt * t as f64).abs() < 1e-6);
}

#[test]
fn sse_confidence_width_exceeds_half_gap_at_moderate_horizon() {
    // with means (0.1, 0.9) the elimination test needs eps_i < 0.4, which no
    // block of a 2^14-round run reaches
    let t = 1 << 14;
    let sched = PrecisionSchedule::Sse { horizon: t, actions: 2 };
    for i in 1..14 {
        assert!(sched.block_eps(i).unwrap() >= 0.4);
    }
    let rows: Vec<Vec<f64>> = (0..t).map(|r| vec![if r % 10 == 0 { 1.0 } else { 0.0 }, if r % 10 == 0 { 0.0 } else { 1.0 }]).collect();
    let inst = LossInstance::from_rows(&rows).unwrap();
    let run = run_sse(&inst, 0).unwrap();
    assert!(run.best_survived(&inst));
    assert!(!run.eliminated_early(1));
}

#[test]
fn sse_regret_is_linear_before_any_elimination() {
    let seeds: Vec<u64> = (0..20).collect();
    let mut pts = Vec::new();
    for e in 12..=15 {
        let t = 1usize << e;
        let inst = losses(&InstanceSpec::new(GeneratorKind::GapBandit, t));
        let mean = seeds.iter().map(|&s| run_sse(&inst, s).unwrap().report.regret).sum::<f64>() / seeds.len() as f64;
        pts.push(((t as f64).ln(), mean.ln()));
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!(slope > 0.9, "slope {slope}");
}

#[test]
fn constrained_regret_is_linear_while_blocks_are_forfeited() {
    let mut pts = Vec::new();
    for e in 10..=14 {
        let t = 1usize << e;
        let mut spec = InstanceSpec::new(GeneratorKind::ConstrainedRandom, t);
        spec.actions = 3;
        spec.resources = 2;
        let inst = constrained(&spec);
        let run = run_sim_constrained(&inst, 0.1, 1).unwrap();
        assert!(run.blocks.iter().all(|b| b.forfeited));
        pts.push(run.report.regret / t as f64);
    }
    // regret / T is the per-round LP value, which barely moves with T
    let spread = pts.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - pts.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 0.05, "{pts:?}");
}
