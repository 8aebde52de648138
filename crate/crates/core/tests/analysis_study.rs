use hetrdme_core::analysis::{
    decay_study, ensemble_distances, ensemble_vs_pde, level_statistics, martingale_suite, median, AnalysisError,
    ScalingSchedule, Scenario,
};
use hetrdme_core::network::{HomogeneousGenerator, NetworkCandidate, ReactionNetwork, SpatialField};

fn two_species(d: f64, gamma: [[f64; 2]; 2], profile: SpatialField) -> ReactionNetwork {
    NetworkCandidate::new(1, vec![SpatialField::constant(1, d); 2])
        .with_factored_rates(
            HomogeneousGenerator::new(gamma.iter().map(|r| r.to_vec()).collect()).unwrap(),
            profile,
        )
        .validate()
        .unwrap()
}

fn sine() -> SpatialField {
    SpatialField::new(
        1,
        hetrdme_core::network::FieldShape::Sine {
            offset: 0.0,
            amplitude: 0.5,
            frequency: vec![1.0],
            phase: vec![],
        },
        hetrdme_core::network::Smoothness::C1,
    )
    .unwrap()
}

#[test]
fn zero_initial_data_gives_zero_distances() {
    let net = two_species(0.5, [[0.0, 1.0], [1.0, 0.0]], SpatialField::constant(1, 1.0));
    let schedule = ScalingSchedule::new(1, vec![(4, 64.0)]).unwrap();
    let sc = Scenario::new("zero", net, vec![SpatialField::zero(1); 2], schedule);
    let stats = ensemble_vs_pde(&sc, 0, 20, &[0.05, 0.1], &[1e-12], 5).unwrap();
    for c in &stats.checkpoints {
        assert_eq!(c.max_distance, 0.0);
        assert_eq!(c.exceedance[0].phat, 0.0);
    }
    assert_eq!(stats.exit_fraction, 0.0);
    let m = martingale_suite(&sc, 0, 10, 0.1, 1).unwrap();
    assert_eq!((m.mean_projection, m.projection_se, m.mean_sq_norm), (0.0, 0.0, 0.0));
    assert!(m.projection_ok() && m.bound_ok());
}

#[test]
fn single_voxel_reaction_fluctuations_scale_like_inverse_root_w() {
    // one voxel, negligible diffusion: a two-state conversion chain whose
    // fluctuations are binomial with variance O(1/w)
    let net = two_species(1e-9, [[0.0, 1.0], [2.0, 0.0]], SpatialField::constant(1, 1.0));
    let run = |w: f64| {
        let schedule = ScalingSchedule::new(1, vec![(1, w)]).unwrap();
        let sc = Scenario::new("one-voxel", net.clone(), vec![SpatialField::constant(1, 1.0), SpatialField::zero(1)], schedule);
        ensemble_distances(&sc, 0, 400, &[0.5], 11).unwrap()
    };
    let small = run(100.0);
    let large = run(1600.0);
    let (ms, ml) = (median(&small.distances[0]), median(&large.distances[0]));
    let ratio = ms / ml;
    assert!((ratio - 4.0).abs() < 0.2 * 4.0, "median ratio {ratio}");
    // scaled spread: sigma of sqrt(w) * distance, threshold 5 sigma / sqrt(w)
    let scaled: Vec<f64> = large.distances[0].iter().map(|d| d * 1600f64.sqrt()).collect();
    let sigma = (scaled.iter().map(|v| v * v).sum::<f64>() / scaled.len() as f64).sqrt();
    let delta = 5.0 * sigma / 1600f64.sqrt();
    let stats = level_statistics(&large, &[vec![delta]]).unwrap();
    assert!(stats.checkpoints[0].exceedance[0].phat <= 0.01);
}

#[test]
fn statistics_do_not_depend_on_replicate_order_and_runs_repeat() {
    let net = two_species(0.5, [[0.0, 0.5], [1.0, 0.0]], SpatialField::constant(1, 1.0));
    let schedule = ScalingSchedule::new(1, vec![(4, 64.0)]).unwrap();
    let sc = Scenario::new("order", net, vec![sine(), sine()], schedule);
    let a = ensemble_distances(&sc, 0, 40, &[0.05, 0.1], 99).unwrap();
    let mut b = ensemble_distances(&sc, 0, 40, &[0.05, 0.1], 99).unwrap();
    assert_eq!(a.distances, b.distances);
    let deltas = vec![vec![0.01, 0.02], vec![0.01, 0.02]];
    let sa = level_statistics(&a, &deltas).unwrap();
    for d in b.distances.iter_mut() {
        d.reverse();
    }
    b.exited.reverse();
    b.events.reverse();
    let mut sb = level_statistics(&b, &deltas).unwrap();
    sb.runtime_secs = sa.runtime_secs;
    assert_eq!(sa, sb);
}

#[test]
fn decay_study_rates() {
    let schedule = ScalingSchedule::new(1, vec![(32, 32768.0)]).unwrap();
    let window: Vec<f64> = (0..17).map(|i| 0.2 + 0.05 * i as f64).collect();

    let homogeneous = two_species(0.5, [[0.0, 1.0], [1.0, 0.0]], SpatialField::constant(1, 1.0));
    let sc = Scenario::new("homogeneous", homogeneous, vec![sine(), sine()], schedule.clone());
    let r = decay_study(&sc, 0, &window).unwrap();
    assert!(r.norm_fit.alpha > 0.0);
    assert!(r.relative_rate_error() <= 0.2, "alpha {} mu {}", r.norm_fit.alpha, r.generator_rate);
    assert!(r.energy_monotone() && r.mass_monotone());

    let half = SpatialField::steps_1d(vec![0.5], vec![1.0, 0.0]).unwrap();
    let degenerate = two_species(0.5, [[0.0, 2.0], [1.0, 0.0]], half);
    let sc = Scenario::new("degenerate", degenerate, vec![sine(), SpatialField::zero(1)], schedule.clone());
    let r = decay_study(&sc, 0, &window).unwrap();
    assert!(r.norm_fit.alpha > 0.0 && r.energy_monotone() && r.mass_monotone());
    assert!(r.generator_rate > 0.0);
}

#[test]
fn decay_study_refuses_other_structures() {
    let schedule = ScalingSchedule::new(1, vec![(8, 512.0)]).unwrap();
    let one_way = two_species(0.5, [[0.0, 0.0], [1.0, 0.0]], SpatialField::constant(1, 1.0));
    let sc = Scenario::new("one-way", one_way, vec![sine(), sine()], schedule.clone());
    assert!(matches!(decay_study(&sc, 0, &[0.1, 0.2, 0.3]), Err(AnalysisError::StructureMismatch(_))));

    let general = NetworkCandidate::new(1, vec![SpatialField::constant(1, 0.5); 2])
        .with_rate(0, 1, SpatialField::constant(1, 1.0))
        .with_rate(1, 0, SpatialField::constant(1, 1.0))
        .validate()
        .unwrap();
    let sc = Scenario::new("general", general, vec![sine(), sine()], schedule);
    assert!(matches!(decay_study(&sc, 0, &[0.1, 0.2, 0.3]), Err(AnalysisError::StructureMismatch(_))));
}
