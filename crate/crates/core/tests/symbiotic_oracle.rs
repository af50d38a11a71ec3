//! Scheduler and fusion against exhaustive search and a covariance-form
//! sequential EKF.

mod common;

use cograd::symbiotic::{
    for_each_combination, greedy_subset, ideal_subset, place_in_disc, predicted_trace, schedule_frame, CpeNetwork,
    InformationTerms,
};
use cograd::tracking::{
    detection_probability, measurement_covariance, measurement_jacobian, snr_at, BistaticChannel, MotionModel,
    TargetState, TrackBelief,
};
use common::{augmentation_stats, cpe, random_network, random_sym_belief as random_belief, sym_model as model};
use nalgebra::{Matrix4, Vector2, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Trace after sequential covariance-form updates, one CPE at a time, each
/// with its noise inflated by `1 / P_D`.
fn sequential_ekf_trace(belief: &TrackBelief, model: &MotionModel, cpes: &[BistaticChannel]) -> f64 {
    let mut p = model.f * belief.cov * model.f.transpose() + model.q;
    let at = TargetState::from_vector(&(model.f * belief.mean));
    for c in cpes {
        let snr = snr_at(&at, c).unwrap();
        let pd = detection_probability(snr, c.pfa);
        let r = measurement_covariance(c, snr).unwrap() / pd;
        let h = measurement_jacobian(&at, c).unwrap();
        let s = h * p * h.transpose() + r;
        let k = p * h.transpose() * s.try_inverse().unwrap();
        p -= k * h * p;
        p = (p + p.transpose()) * 0.5;
    }
    p.trace()
}

#[test]
fn fused_trace_matches_sequential_covariance_updates() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let m = model();
    for _ in 0..50 {
        let belief = random_belief(&mut rng);
        let net = CpeNetwork::new(
            place_in_disc(3, Vector2::zeros(), 1000.0, &mut rng).into_iter().map(cpe).collect(),
            3,
            3,
        )
        .unwrap();
        for subset in [vec![], vec![0], vec![1, 2], vec![0, 1, 2]] {
            let got = predicted_trace(&belief, &m, &net, &subset).unwrap();
            let chosen: Vec<_> = subset.iter().map(|&i| net.cpes[i].clone()).collect();
            let want = sequential_ekf_trace(&belief, &m, &chosen);
            assert!((got - want).abs() <= 1e-8 * want.max(1.0), "{subset:?}: {got} vs {want}");
        }
    }
}

/// Greedy forward selection is never better than the exhaustive optimum and
/// is exact for a single pick. Its worst-case ratio on these fixtures is
/// reported; the acceptance run records it against the 1.1 target.
#[test]
fn greedy_ideal_set_against_exhaustive() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let m = model();
    let mut ratios = Vec::new();
    for _ in 0..200 {
        let belief = random_belief(&mut rng);
        let net = random_network(&mut rng, 8, 3, 2);
        let terms = InformationTerms::compute(&belief, &m, &net.cpes).unwrap();
        let pool: Vec<usize> = (0..8).collect();
        let mut best = f64::INFINITY;
        for_each_combination(8, 3, |s| {
            best = best.min(terms.trace(s)?);
            Ok(())
        })
        .unwrap();
        let (_, exhaustive) = ideal_subset(&net, &belief, &m).unwrap();
        assert!((exhaustive - best).abs() <= 1e-12 * best);
        let (_, greedy) = greedy_subset(&terms, &[], &pool, 3).unwrap();
        assert!(greedy >= best * (1.0 - 1e-12));
        let (_, one) = greedy_subset(&terms, &[], &pool, 1).unwrap();
        let single = (0..8).map(|i| terms.trace(&[i]).unwrap()).fold(f64::INFINITY, f64::min);
        assert_eq!(one, single);
        ratios.push(greedy / best);
    }
    ratios.sort_by(f64::total_cmp);
    let over = ratios.iter().filter(|&&r| r > 1.1).count();
    eprintln!(
        "greedy/exhaustive: median {:.3}, worst {:.3}, {over} of {} above 1.1",
        ratios[ratios.len() / 2],
        ratios[ratios.len() - 1],
        ratios.len()
    );
}

/// Greedy returns the smallest n for which some augmentation meets the
/// threshold, and whenever it meets the threshold itself its trace is
/// within 5% of the best subset of that size. It can still stop at the cap
/// unmet while a complementary pair would satisfy the threshold, because
/// the rank-2 terms of two CPEs reduce the trace jointly; those misses and
/// the gap on fixtures no augmentation can satisfy are reported.
#[test]
fn greedy_augmentation_matches_exhaustive_oracle() {
    let s = augmentation_stats(1000, 43, 0.95);
    assert_eq!(s.n_mismatches, 0, "{s:?}");
    assert!(s.beyond_5pct <= s.missed, "{s:?}");
    assert_eq!(s.postcondition_failures, 0, "{s:?}");
    assert!(s.satisfiable > 50 && s.unsatisfiable > 50, "{s:?}");
    eprintln!("{s:?}");
}

#[test]
fn passive_threshold_activates_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let belief = random_belief(&mut rng);
    let net = random_network(&mut rng, 8, 4, 2);
    assert_eq!(schedule_frame(&net, &belief, &model(), 0.0).unwrap().n(), 0);
}

#[test]
fn duplicates_are_chosen_after_distinct_sites() {
    // Four distinct sites on a circle, each duplicated once.
    let sites: Vec<Vector2<f64>> = (0..4)
        .map(|k| {
            let a = std::f64::consts::FRAC_PI_2 * k as f64 + 0.3;
            Vector2::new(300.0 * a.cos(), 300.0 * a.sin())
        })
        .collect();
    let cpes: Vec<_> = sites.iter().chain(sites.iter()).map(|&p| cpe(p)).collect();
    let belief = TrackBelief::new(
        Vector4::new(50.0, 2.0, -40.0, 1.0),
        Matrix4::from_diagonal(&Vector4::new(900.0, 9.0, 900.0, 9.0)),
    )
    .unwrap();
    let terms = InformationTerms::compute(&belief, &model(), &cpes).unwrap();
    let (chosen, _) = greedy_subset(&terms, &[], &(0..8).collect::<Vec<_>>(), 4).unwrap();
    let mut distinct: Vec<usize> = chosen.iter().map(|i| i % 4).collect();
    distinct.sort_unstable();
    distinct.dedup();
    assert_eq!(distinct.len(), 4, "chosen {chosen:?}");
}
