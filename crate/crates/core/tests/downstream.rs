use std::collections::HashSet;

use finesdf::downstream::{
    fewshot_run, frame_grid, proxy_reaction_force, AccessKind, FewshotConfig, GeometrySource, GridSource, HeadConfig,
    Phase, RecordingSource, Strategy, TaskKind,
};
use finesdf::geom::{sample_design_grid, Family};
use finesdf::net::{DecoderConfig, EncoderConfig, ModelConfig, PretrainModel};
use finesdf::Error;

fn small_source(levels: usize, n_nodes: usize) -> (GridSource, Vec<usize>, Vec<usize>) {
    let fam = Family::CrashBox;
    let grid = sample_design_grid(fam, levels, fam.default_ranges(), 0.25, 3).unwrap();
    let (train, test) = (grid.train.clone(), grid.test.clone());
    (GridSource::generate(grid, n_nodes, 0).unwrap(), train, test)
}

fn untrained_model() -> PretrainModel {
    PretrainModel::new(ModelConfig {
        encoder: EncoderConfig::desk(),
        decoder: DecoderConfig::crash_box_desk(),
        init_seed: 1,
    })
    .unwrap()
}

fn quick_config() -> FewshotConfig {
    FewshotConfig {
        head: HeadConfig {
            width: 32,
            iterations: 20,
            batch_rows: 64,
            ..HeadConfig::default()
        },
        frames: 8,
        ..FewshotConfig::default()
    }
}

#[test]
fn test_geometries_are_never_read_while_training() {
    let (src, train, test) = small_source(2, 30);
    let model = untrained_model();
    let cfg = quick_config();
    let test_set: HashSet<usize> = test.iter().copied().collect();
    for task in [TaskKind::ReactionForce, TaskKind::DeformationField] {
        for strategy in Strategy::ALL {
            let rec = RecordingSource::new(&src);
            fewshot_run(&rec, strategy, 4, task, Some(&model), &train, &test, 2, &cfg).unwrap();
            let log = rec.accesses();
            for a in &log {
                if a.phase == Phase::Train {
                    assert!(
                        !test_set.contains(&a.index),
                        "{strategy:?}/{task:?} read test geometry {a:?} while training"
                    );
                }
            }
            let evaluated: HashSet<usize> = log
                .iter()
                .filter(|a| a.phase == Phase::Evaluate)
                .map(|a| a.index)
                .collect();
            assert_eq!(evaluated, test_set, "{strategy:?} must evaluate exactly the test split");
            if strategy == Strategy::Parametric {
                assert!(
                    log.iter().all(|a| a.kind != AccessKind::Graph),
                    "parametric runs never need graphs"
                );
            }
        }
    }
}

#[test]
fn every_strategy_consumes_the_same_targets() {
    let (src, train, test) = small_source(2, 30);
    let model = untrained_model();
    let cfg = quick_config();
    for task in [TaskKind::ReactionForce, TaskKind::DeformationField] {
        let digests: Vec<u64> = Strategy::ALL
            .iter()
            .map(|&s| {
                fewshot_run(&src, s, 5, task, Some(&model), &train, &test, 7, &cfg)
                    .unwrap()
                    .target_digest
            })
            .collect();
        assert!(digests.windows(2).all(|w| w[0] == w[1]), "{task:?}: {digests:?}");
        let other = fewshot_run(&src, Strategy::Parametric, 5, task, None, &train, &test, 8, &cfg).unwrap();
        assert_ne!(
            other.target_digest, digests[0],
            "a new seed should draw different shots"
        );
    }
}

#[test]
fn repeated_runs_are_identical() {
    let (src, train, test) = small_source(2, 30);
    let model = untrained_model();
    let cfg = quick_config();
    for strategy in Strategy::ALL {
        let a = fewshot_run(
            &src,
            strategy,
            6,
            TaskKind::DeformationField,
            Some(&model),
            &train,
            &test,
            3,
            &cfg,
        )
        .unwrap();
        let b = fewshot_run(
            &src,
            strategy,
            6,
            TaskKind::DeformationField,
            Some(&model),
            &train,
            &test,
            3,
            &cfg,
        )
        .unwrap();
        assert_eq!(a.test_mse.to_bits(), b.test_mse.to_bits(), "{strategy:?}");
        assert!(a.test_mse.is_finite() && a.test_mse >= 0.0);
    }
}

#[test]
fn invalid_requests_are_rejected() {
    let (src, train, test) = small_source(2, 10);
    let cfg = quick_config();
    let run = |strategy, shots, pool: &[usize], test: &[usize]| {
        fewshot_run(
            &src,
            strategy,
            shots,
            TaskKind::ReactionForce,
            None,
            pool,
            test,
            0,
            &cfg,
        )
    };
    assert!(matches!(
        run(Strategy::Parametric, 1, &train, &test),
        Err(Error::InsufficientShots(1))
    ));
    assert!(matches!(
        run(Strategy::LatentDirect, 4, &train, &test),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        run(Strategy::Parametric, 4, &train, &[]),
        Err(Error::Config(_))
    ));
    let mut leaky = train.clone();
    leaky.push(test[0]);
    assert!(matches!(
        run(Strategy::Parametric, 4, &leaky, &test),
        Err(Error::Config(_))
    ));
    assert_eq!(src.len(), train.len() + test.len());
}

#[test]
fn parametric_head_reaches_the_ceiling_with_every_training_geometry() {
    let (src, train, test) = small_source(3, 1);
    let cfg = FewshotConfig::default();
    let frames = frame_grid(cfg.frames);
    let truth: Vec<f64> = test
        .iter()
        .flat_map(|&i| proxy_reaction_force(&src.params(i), &frames))
        .collect();
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let var = truth.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / truth.len() as f64;
    let run = fewshot_run(
        &src,
        Strategy::Parametric,
        train.len(),
        TaskKind::ReactionForce,
        None,
        &train,
        &test,
        0,
        &cfg,
    )
    .unwrap();
    assert!(run.test_mse < 0.01 * var, "mse {:e} vs variance {var:e}", run.test_mse);
}
