use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use heavytail::dimension_free::{DimensionFreeLearner, DirectionLearner, ReductionParams};
use heavytail::Error;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn direction_iterates_in_unit_ball_and_sum_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for d in [1, 3, 20] {
        let tau = rng.random_range(0.5..5.0);
        let mut learner = DirectionLearner::new(d, tau).unwrap();
        for t in 1..=500 {
            let scale = if t % 7 == 0 { 1e3 } else { 1.0 };
            let g: Vec<f64> = (0..d)
                .map(|_| rng.random_range(-1.0..1.0) * scale)
                .collect();
            learner.update(&g).unwrap();
            assert!(norm(learner.clipped_sum()) <= t as f64 * tau * (1.0 + 1e-12));
            assert!(norm(&learner.predict()) <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn iterate_norm_is_magnitude() {
    let params = ReductionParams {
        dimension: 5,
        sigma: 1.0,
        lipschitz: 1.0,
        moment_power: 1.5,
        delta: 0.1,
        epsilon: 10.0,
        horizon: 300,
    };
    let mut learner = DimensionFreeLearner::new(params).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..300 {
        let w = learner.predict().unwrap();
        let g: Vec<f64> = (0..5)
            .map(|i| {
                if i == 0 {
                    -1.0
                } else {
                    rng.random_range(-0.1..0.1)
                }
            })
            .collect();
        let step = learner.update(&g).unwrap();
        assert!(
            (norm(&w) - step.magnitude.abs() * norm(&step.direction)).abs()
                <= 1e-12 * (1.0 + norm(&w))
        );
    }
}

#[test]
fn wrong_dimension_is_rejected() {
    let mut learner = DirectionLearner::new(3, 1.0).unwrap();
    assert!(matches!(
        learner.update(&[1.0, 2.0]),
        Err(Error::DimensionMismatch {
            expected: 3,
            got: 2
        })
    ));
}
