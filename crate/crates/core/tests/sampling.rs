//! Moment checks of the forward process and of ancestral sampling.

use minority_core::diffusion::{
    ancestral_step, generate, make_plan, perturb, NoiseSchedule, SampleBatch, StepPlan,
};
use minority_core::rng::{standard_normal, stream_rng};
use minority_core::score::{DatasetOracle, GmmComponent, GmmScore, GmmSpec};
use minority_core::stats::{mean, variance};

fn gaussian(mean: f64, var: f64) -> GmmSpec {
    GmmSpec::new(vec![GmmComponent { weight: 1.0, mean: vec![mean], variance: var }]).unwrap()
}

fn within(sample: f64, target: f64, se: f64) -> bool {
    (sample - target).abs() < 4.0 * se
}

#[test]
fn perturbation_marginal_has_closed_form_moments() {
    let s = NoiseSchedule::default_linear();
    let x0 = [1.5, -0.5];
    let n = 100_000;
    for t in [1, 100, 500, 1000] {
        let a = s.alpha(t).unwrap();
        let mut rng = stream_rng(51, t as u64);
        let draws: Vec<Vec<f64>> = (0..n)
            .map(|_| perturb(&x0, t, &standard_normal(&mut rng, 2), &s).unwrap())
            .collect();
        for d in 0..2 {
            let col: Vec<f64> = draws.iter().map(|r| r[d]).collect();
            let v = 1.0 - a;
            assert!(within(mean(&col), a.sqrt() * x0[d], (v / n as f64).sqrt()), "t = {t}");
            assert!(within(variance(&col), v, v * (2.0 / n as f64).sqrt()), "t = {t}");
        }
    }
}

#[test]
fn one_reverse_step_composes_correctly() {
    // x_{t-1} = (x + beta s) / sqrt(1 - beta) + sqrt(beta) z; fixed x and s
    let s = NoiseSchedule::linear(10, 0.05, 0.2).unwrap();
    let (x, score, t) = ([0.7], [-1.3], 6);
    let beta = s.beta(t).unwrap();
    let mut rng = stream_rng(52, 0);
    let n = 100_000;
    let out: Vec<f64> = (0..n)
        .map(|_| ancestral_step(&x, t, &score, &s, &standard_normal(&mut rng, 1)).unwrap()[0])
        .collect();
    let mu = (x[0] + beta * score[0]) / (1.0 - beta).sqrt();
    assert!(within(mean(&out), mu, (beta / n as f64).sqrt()));
    assert!(within(variance(&out), beta, beta * (2.0 / n as f64).sqrt()));
    let zero = ancestral_step(&x, t, &score, &s, &[0.0]).unwrap();
    assert!((zero[0] - mu).abs() < 1e-14);
}

#[test]
fn sampling_reproduces_one_dimensional_gaussians() {
    let s = NoiseSchedule::default_linear();
    let n = 10_000;
    for (m, v) in [(0.0, 1.0), (2.0, 0.25)] {
        let g = gaussian(m, v);
        let out = generate(&GmmScore::new(&g, &s), &s, &StepPlan::full(1000), n, 53).unwrap();
        let xs = out.into_vec();
        assert!(within(mean(&xs), m, (v / n as f64).sqrt()), "mean {} vs {m}", mean(&xs));
        let se = v * (2.0 / n as f64).sqrt();
        // discretization bias of a 1000-step chain is far below this band
        assert!((variance(&xs) - v).abs() < 4.0 * se + 0.01 * v, "var {} vs {v}", variance(&xs));
    }
}

#[test]
fn respaced_plan_keeps_moments() {
    let s = NoiseSchedule::default_linear();
    let g = gaussian(-1.0, 0.5);
    let n = 10_000;
    let xs = generate(&GmmScore::new(&g, &s), &s, &make_plan(1000, 100).unwrap(), n, 54)
        .unwrap()
        .into_vec();
    assert!((mean(&xs) + 1.0).abs() < 0.05, "{}", mean(&xs));
    assert!((variance(&xs) - 0.5).abs() < 0.05, "{}", variance(&xs));
}

#[test]
fn single_point_dataset_collapses_to_the_point() {
    let s = NoiseSchedule::default_linear();
    let data = SampleBatch::new(2, vec![0.8, -1.1]).unwrap();
    let oracle = DatasetOracle::new(&data, &s).unwrap();
    let out = generate(&oracle, &s, &make_plan(1000, 200).unwrap(), 50, 55).unwrap();
    for r in out.rows() {
        assert!((r[0] - 0.8).abs() < 1e-2 && (r[1] + 1.1).abs() < 1e-2, "{r:?}");
    }
}

#[test]
fn generation_is_seeded_and_rejects_empty_requests() {
    let s = NoiseSchedule::linear(50, 1e-3, 0.05).unwrap();
    let g = gaussian(0.0, 1.0);
    let p = GmmScore::new(&g, &s);
    let plan = StepPlan::full(50);
    assert!(generate(&p, &s, &plan, 0, 1).is_err());
    let a = generate(&p, &s, &plan, 64, 7).unwrap();
    let b = generate(&p, &s, &plan, 64, 7).unwrap();
    let c = generate(&p, &s, &plan, 64, 8).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    // prefix property: sample i depends only on (seed, i)
    let short = generate(&p, &s, &plan, 10, 7).unwrap();
    assert_eq!(short.as_slice(), &a.as_slice()[..10]);
}
