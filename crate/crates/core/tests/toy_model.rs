use abc_core::rng::Domain;
use abc_core::stats::{ks_one_sample, mean, variance};
use abc_core::toy::{toy_accept_prob, toy_draw, toy_likelihood_cdf, toy_posterior_functional, toy_posterior_pdf};
use abc_core::{toy_model, Functional, Streams, ToyPosterior};

fn draws(theta: f64, n: u64, seed: u64) -> Vec<f64> {
    let s = Streams::new(seed);
    (0..n)
        .map(|i| toy_draw(theta, &mut s.rng(Domain::Test, 0, i)))
        .collect()
}

#[test]
fn simulator_follows_the_mixture_law() {
    let z = draws(0.7, 100_000, 1);
    let ks = ks_one_sample(&z, |x| toy_likelihood_cdf(x, 0.7));
    assert!(ks.passes(0.001), "{ks:?}");
}

#[test]
fn simulator_moments_at_zero() {
    let z = draws(0.0, 1_000_000, 2);
    assert!((variance(&z) - 0.505).abs() < 0.01, "var {}", variance(&z));
    let inside = z.iter().filter(|x| x.abs() <= 0.09).count() as f64 / z.len() as f64;
    // Half of 2*Phi(0.09)-1 plus half of 2*Phi(0.9)-1.
    assert!((inside - 0.35180).abs() < 0.002, "fraction {inside}");
}

#[test]
fn simulator_is_a_location_family() {
    let z = draws(5.0, 1_000_000, 3);
    assert!((mean(&z) - 5.0).abs() < 0.01);
}

#[test]
fn prior_draws_are_centred_and_inside_the_box() {
    let m = toy_model(10.0).unwrap();
    let s = Streams::new(4);
    let th: Vec<f64> = (0..1_000_000u64)
        .map(|i| m.prior_sample(&mut s.rng(Domain::Test, 1, i))[0])
        .collect();
    assert!(th.iter().all(|t| (-10.0..=10.0).contains(t)));
    assert!(mean(&th).abs() < 0.02);
}

#[test]
fn posterior_oracle() {
    let post = ToyPosterior::new(10.0).unwrap();
    assert!((post.cdf(10.0) - 1.0).abs() < 1e-6);
    assert_eq!(toy_posterior_pdf(11.0, 10.0).unwrap(), 0.0);
    assert_eq!(toy_posterior_pdf(0.0, 10.0).unwrap(), toy_posterior_pdf(-0.0, 10.0).unwrap());
    assert!(toy_posterior_functional(Functional::Mean, 10.0).unwrap().abs() < 1e-9);
    assert!(toy_posterior_functional(Functional::Median, 10.0).unwrap().abs() < 1e-7);
    let q1 = toy_posterior_functional(Functional::Q1, 10.0).unwrap();
    let q3 = toy_posterior_functional(Functional::Q3, 10.0).unwrap();
    assert!((q1 + q3).abs() < 1e-7);
    assert!((q3 - 0.154_363_472_765_566_8).abs() < 1e-6, "q3 {q3}");
}

#[test]
fn acceptance_probability_at_table_tolerance() {
    assert!((toy_accept_prob(0.09, 10.0) - 0.009).abs() < 2e-5);
    assert_eq!(toy_accept_prob(f64::INFINITY, 10.0), 1.0);
}
