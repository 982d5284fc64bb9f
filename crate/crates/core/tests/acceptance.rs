//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config as PtConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pseudobalance::harness::{
    build_bundle, rerun_from_manifest, run_experiment, ExperimentConfig, Scenario, SeedPlan,
};
use pseudobalance::learner::{
    init_learner, loss, loss_and_gradient, train_with, AugmentConfig, LearnerState, TrainConfig,
    TrainExample, Validator,
};
use pseudobalance::metrics::selection_rate;
use pseudobalance::selection::{
    adjusted_threshold, class_counts, pseudo_balance, select_curriculum, select_fixed, PseudoLabel,
    ThresholdPolicy,
};
use pseudobalance::selftrain::{run_self_training, test_report, train_supervised};
use pseudobalance::Result;

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn sr(a0: f64, a1: f64) -> f64 {
    selection_rate(&BTreeMap::from([(0u8, a0), (1u8, a1)])).unwrap()
}

fn metric_exactness() -> Outcome {
    let a = sr(0.9794, 0.4861);
    let b = sr(0.8237, 0.7726);
    check(
        (a - 0.4963).abs() <= 0.0005 && (b - 0.9380).abs() <= 0.0005,
        format!("SR = {a:.5}, {b:.5}"),
        format!("SR = {a:.5} (want 0.4963), {b:.5} (want 0.9380)"),
    )
}

fn curriculum_formula() -> Outcome {
    let full = adjusted_threshold(1.0, 0.95);
    let half = adjusted_threshold(0.5, 0.95);
    let grid: Vec<f64> = (0..1000)
        .map(|i| adjusted_threshold(i as f64 / 999.0, 0.95))
        .collect();
    let monotone = grid.windows(2).all(|w| w[1] > w[0]);
    check(
        full == 0.95 && (half - 0.316_67).abs() <= 1e-5 && monotone,
        format!("T(1) = {full}, T(0.5) = {half:.6}, strictly increasing on 1000 points"),
        format!("T(1) = {full}, T(0.5) = {half:.6}, monotone = {monotone}"),
    )
}

fn random_labels(rng: &mut ChaCha8Rng, n: usize, min_conf: f64) -> Vec<PseudoLabel> {
    (0..n)
        .map(|i| PseudoLabel {
            sample_id: format!("u{i}"),
            predicted_class: rng.random_range(0..2),
            confidence: rng.random_range(min_conf..=1.0),
        })
        .collect()
}

fn balance_property() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..1000 {
        let n = rng.random_range(0..200);
        let labels = random_labels(&mut rng, n, 0.0);
        let seed = rng.random();
        let out = pseudo_balance(&labels, seed);
        let counts = class_counts(&out);
        let input = class_counts(&labels);
        if counts[0] != counts[1] || counts[0] != input[0].min(input[1]) {
            return Err(format!("case {case}: counts {counts:?} from {input:?}"));
        }
        let ids: HashSet<&str> = labels.iter().map(|l| l.sample_id.as_str()).collect();
        if !out
            .iter()
            .all(|l| ids.contains(l.sample_id.as_str()) && labels.contains(l))
        {
            return Err(format!("case {case}: output is not a subset of the input"));
        }
        if pseudo_balance(&labels, seed) != out {
            return Err(format!("case {case}: not deterministic"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        secs < 1.0,
        format!("1000 sets balanced, subset, deterministic in {secs:.3} s"),
        format!("took {secs:.3} s"),
    )
}

fn ids(labels: &[PseudoLabel]) -> HashSet<String> {
    labels.iter().map(|l| l.sample_id.clone()).collect()
}

fn threshold_properties() -> Outcome {
    let mut runner = TestRunner::new(PtConfig {
        cases: 256,
        rng_algorithm: proptest::test_runner::RngAlgorithm::ChaCha,
        failure_persistence: None,
        ..PtConfig::default()
    });
    let labels = prop::collection::vec((0u8..2, 0.0f64..=1.0), 0..120).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (c, p))| PseudoLabel {
                sample_id: format!("u{i}"),
                predicted_class: c,
                confidence: p,
            })
            .collect::<Vec<_>>()
    });
    runner
        .run(&(labels, 0.01f64..0.99, 0.01f64..0.99), |(labels, a, b)| {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let strict = ids(&select_fixed(&labels, hi));
            let loose = ids(&select_fixed(&labels, lo));
            prop_assert!(strict.is_subset(&loose));
            let fixed = ids(&select_fixed(&labels, hi));
            let curriculum = ids(&select_curriculum(&labels, hi));
            prop_assert!(fixed.is_subset(&curriculum));
            Ok(())
        })
        .map_err(|e| e.to_string())?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        // Binary softmax: the winning class always has probability >= 0.5.
        let labels = random_labels(&mut rng, 150, 0.5);
        if select_fixed(&labels, 0.1) != select_fixed(&labels, 0.3)
            || select_fixed(&labels, 0.1).len() != 150
        {
            return Err(format!("binary set {case}: eps 0.1 and 0.3 differ"));
        }
    }
    Ok(
        "monotone in eps, curriculum contains fixed (256 cases), eps 0.1 == 0.3 on 100 binary sets"
            .into(),
    )
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let d = rng.random_range(1..6);
        let hidden = rng.random_range(1..8);
        let n = rng.random_range(1..6);
        let mut state = init_learner(d, hidden, rng.random()).unwrap();
        let mut flat = state.params.flat();
        flat.iter_mut()
            .for_each(|p| *p = rng.random_range(-1.0..1.0));
        state.params.set_flat(&flat);
        // Finite differences are meaningless across a ReLU kink, so inputs
        // whose hidden pre-activations sit near zero are redrawn.
        let p = &state.params;
        let clear_of_kink = |x: &[f64]| {
            (0..hidden).all(|j| {
                let z = p.b1[j] + (0..d).map(|k| p.w1[j * d + k] * x[k]).sum::<f64>();
                z.abs() > 1e-3
            })
        };
        let mut xs: Vec<Vec<f64>> = Vec::with_capacity(n);
        while xs.len() < n {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            if clear_of_kink(&x) {
                xs.push(x);
            }
        }
        let examples: Vec<TrainExample> = xs
            .iter()
            .map(|x| TrainExample::new(x, rng.random_range(0..2)))
            .collect();
        let (_, grad) = loss_and_gradient(&state, &examples).unwrap();
        let analytic = grad.flat();
        for k in 0..flat.len() {
            let mut probe = state.clone();
            let mut f = flat.clone();
            f[k] = flat[k] + h;
            probe.params.set_flat(&f);
            let up = loss(&probe, &examples).unwrap();
            f[k] = flat[k] - h;
            probe.params.set_flat(&f);
            let down = loss(&probe, &examples).unwrap();
            let numeric = (up - down) / (2.0 * h);
            let rel =
                (analytic[k] - numeric).abs() / analytic[k].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            if rel > 1e-4 {
                return Err(format!(
                    "case {case} param {k}: analytic {} numeric {numeric} rel {rel:.2e}",
                    analytic[k]
                ));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        secs < 10.0,
        format!("50 configurations, worst relative error {worst:.2e}, {secs:.2} s"),
        format!("took {secs:.2} s"),
    )
}

struct Scenario1Run {
    base_acc: f64,
    base_sr: f64,
    pb_acc: f64,
    pb_sr: f64,
    nopb_sr: f64,
}

fn scenario1_run(seed: u64, with_nopb: bool) -> Result<Scenario1Run> {
    let mut cfg = ExperimentConfig::preset(Scenario::Scenario1);
    cfg.seed = seed;
    let cfg = cfg.resolve();
    let seeds = SeedPlan::new(seed, cfg.selftrain.iterations);
    let (bundle, _) = build_bundle(&cfg, &seeds)?;
    let st = &cfg.selftrain;
    let (base, _) = train_supervised(&bundle, cfg.hidden_dim, &st.train, &st.aug, seeds.baseline)?;
    let b = test_report(&base, &bundle.test)?;
    let pb = run_self_training(&base, &bundle, st, |_| Ok(()))?;
    let pb_final = &pb.records.last().unwrap().test;
    let nopb_sr = if with_nopb {
        let mut off = st.clone();
        off.policy = ThresholdPolicy::fixed(st.policy.epsilon, false);
        let r = run_self_training(&base, &bundle, &off, |_| Ok(()))?;
        r.records.last().unwrap().test.selection_rate
    } else {
        f64::NAN
    };
    Ok(Scenario1Run {
        base_acc: b.overall_accuracy,
        base_sr: b.selection_rate,
        pb_acc: pb_final.overall_accuracy,
        pb_sr: pb_final.selection_rate,
        nopb_sr,
    })
}

fn scenario1_direction() -> Outcome {
    let start = Instant::now();
    let r = scenario1_run(0, false).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "baseline acc {:.4} SR {:.4} -> final acc {:.4} SR {:.4} ({secs:.1} s)",
        r.base_acc, r.base_sr, r.pb_acc, r.pb_sr
    );
    check(
        r.base_sr < 0.80
            && r.pb_sr >= r.base_sr + 0.10
            && r.pb_acc >= r.base_acc - 0.02
            && secs < 300.0,
        detail.clone(),
        detail,
    )
}

fn pb_ablation() -> Outcome {
    let start = Instant::now();
    let mut wins = 0;
    let mut pairs = Vec::new();
    for seed in 0..10 {
        let r = scenario1_run(seed, true).map_err(|e| e.to_string())?;
        if r.pb_sr >= r.nopb_sr {
            wins += 1;
        }
        pairs.push(format!("{:.3}/{:.3}", r.pb_sr, r.nopb_sr));
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "PB >= no-PB in {wins}/10 seeds [{}] ({secs:.1} s)",
        pairs.join(" ")
    );
    check(wins >= 8 && secs < 1800.0, detail.clone(), detail)
}

struct Scripted(Vec<f64>, usize);

impl Validator for Scripted {
    fn score(&mut self, _: &LearnerState) -> Result<Option<f64>> {
        let v = self.0[self.1.min(self.0.len() - 1)];
        self.1 += 1;
        Ok(Some(v))
    }
}

fn early_stopping() -> Outcome {
    let state = init_learner(3, 4, 1).unwrap();
    let xs: Vec<Vec<f64>> = (0..40)
        .map(|i| vec![i as f64 / 40.0, 1.0 - i as f64 / 40.0, 0.5])
        .collect();
    let examples: Vec<TrainExample> = xs
        .iter()
        .enumerate()
        .map(|(i, x)| TrainExample::new(x, (i % 2) as u8))
        .collect();
    let cfg = TrainConfig {
        learning_rate: 0.05,
        epochs_per_iteration: 10,
        patience: 2,
        ..TrainConfig::default()
    };
    let aug = AugmentConfig::default();
    let (best, log) = train_with(
        &state,
        &examples,
        &mut Scripted(vec![0.7, 0.7, 0.7], 0),
        &cfg,
        &aug,
        9,
    )
    .unwrap();
    let one_epoch = TrainConfig {
        epochs_per_iteration: 1,
        patience: 0,
        ..cfg.clone()
    };
    let (first, _) = train_with(
        &state,
        &examples,
        &mut Scripted(vec![0.7], 0),
        &one_epoch,
        &aug,
        9,
    )
    .unwrap();
    check(
        log.epochs.len() == 3 && log.stopped_early && log.best_epoch == Some(1) && best == first,
        "halted after epoch 3, returned the epoch-1 checkpoint".into(),
        format!(
            "epochs run {}, stopped early {}, best epoch {:?}, matches epoch-1 state {}",
            log.epochs.len(),
            log.stopped_early,
            log.best_epoch,
            best == first
        ),
    )
}

fn reproducibility() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = ExperimentConfig::preset(Scenario::Scenario1);
    cfg.seed = 4;
    let mut read = Vec::new();
    for name in ["a", "b"] {
        cfg.output_dir = Some(tmp.path().join(name));
        run_experiment(&cfg).map_err(|e| e.to_string())?;
        read.push(
            std::fs::read(tmp.path().join(name).join("iterations.csv"))
                .map_err(|e| e.to_string())?,
        );
    }
    let again = tmp.path().join("c");
    rerun_from_manifest(&tmp.path().join("a").join("manifest.json"), Some(&again))
        .map_err(|e| e.to_string())?;
    read.push(std::fs::read(again.join("iterations.csv")).map_err(|e| e.to_string())?);
    check(
        read[0] == read[1] && read[0] == read[2] && !read[0].is_empty(),
        format!(
            "iterations.csv identical across 2 runs and a manifest rerun ({} bytes)",
            read[0].len()
        ),
        "iterations.csv differs".into(),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("metric exactness", metric_exactness),
        ("curriculum formula", curriculum_formula),
        ("balance property", balance_property),
        ("threshold properties", threshold_properties),
        ("gradient check", gradient_check),
        ("scenario-1 direction", scenario1_direction),
        ("PB ablation trend", pb_ablation),
        ("early stopping", early_stopping),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {detail}", i + 1)
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
