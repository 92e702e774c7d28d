use ppsmc::{
    conditional_sample, sample_restricted, ConstraintSet, Poisson, SmcConfig, StreamFactory,
    WeibullRenewal, DEFAULT_MAX_EVENTS,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson as PoissonLaw};

/// Chi-square goodness of fit of event counts against Poisson(`mean`),
/// pooling the upper tail so every bin expects at least five.
fn poisson_fit(counts: &[usize], mean: f64) -> f64 {
    let law = PoissonLaw::new(mean).unwrap();
    let n = counts.len() as f64;
    let mut last = 0;
    while n * (1.0 - (0..=last + 1).map(|k| law.pmf(k)).sum::<f64>()) >= 5.0 {
        last += 1;
    }
    let bins = last as usize + 2;
    let mut observed = vec![0.0; bins];
    for &c in counts {
        observed[c.min(bins - 1)] += 1.0;
    }
    let mut expected: Vec<f64> = (0..bins as u64 - 1).map(|k| n * law.pmf(k)).collect();
    expected.push(n - expected.iter().sum::<f64>());
    let stat: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn restricted_poisson_counts() {
    let model = Poisson::new(2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let counts: Vec<usize> = (0..10_000)
        .map(|_| sample_restricted(&model, &mut rng, DEFAULT_MAX_EVENTS).unwrap().len())
        .collect();
    let p = poisson_fit(&counts, 2.0);
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn conditioned_poisson_keeps_independent_increments() {
    // required events at 0.25 and 0.75 leave the counts in between Poisson(rate / 2)
    let model = Poisson::new(6.0).unwrap();
    let c = ConstraintSet::allowing_all(vec![0.25, 0.75]).unwrap();
    let streams = StreamFactory::new(4);
    let mut middle = Vec::new();
    for r in 0..4000 {
        let res = conditional_sample(&model, &c, &SmcConfig::new(5), &streams.run(r)).unwrap();
        let x = res.samples[0].as_slice();
        middle.push(x.iter().filter(|&&t| t > 0.25 && t < 0.75).count());
    }
    let p = poisson_fit(&middle, 3.0);
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn unconditional_weibull_is_not_poisson() {
    // sanity check of the test itself: regular gaps give under-dispersed counts
    let model = WeibullRenewal::new(4.0, 0.25).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let counts: Vec<usize> = (0..5000)
        .map(|_| sample_restricted(&model, &mut rng, DEFAULT_MAX_EVENTS).unwrap().len())
        .collect();
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    assert!(poisson_fit(&counts, mean) < 1e-6);
}
