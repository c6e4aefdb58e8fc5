//! End-to-end runs through the public API: simulate, calibrate, sample,
//! summarise.

use binclust::harness::{calibrate, simulate_scenario, Scenario};
use binclust::sampler::{run_chain, run_chains};
use binclust::summary::{
    ari, auchips_curve, chips_credible_set, coclustering_matrix, kplus_posterior, minvi_partition,
    sd_ccp, DEFAULT_RESTARTS,
};
use binclust::{PriorSpec, SamplerSpec};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn well_separated_clusters_are_recovered() {
    let sim = simulate_scenario(Scenario::Sparse, 60, 30, 3, 11).unwrap();
    let prior = PriorSpec::new(10, 5);
    let cal = calibrate(60, &prior, 12).unwrap();
    let out = run_chain(&sim.data, &prior, &SamplerSpec::with_iters(1500, 13), Some(&cal.prior), None)
        .unwrap();

    let b = out.z_samples.len();
    assert_eq!(b, 150);
    assert_eq!(out.alpha1_trace.len(), b);
    assert_eq!(out.pi_samples.len(), b * 10 * 30);
    for w in &out.omega_samples {
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    let part = minvi_partition(&out.z_samples, DEFAULT_RESTARTS, 14).unwrap();
    assert!(ari(&part, &sim.truth).unwrap() > 0.9);
    let kp = kplus_posterior(&out.z_samples, 10).unwrap();
    assert_eq!(kp.mode, sim.truth.n_clusters());

    let c = coclustering_matrix(&out.z_samples).unwrap();
    assert!(sd_ccp(&c).unwrap() > 0.3);
    let sub = chips_credible_set(&out.z_samples, 0.5).unwrap();
    assert!(sub.probability >= 0.5 && !sub.below_threshold);
    let curve = auchips_curve(&out.z_samples, 21).unwrap();
    assert!((0.0..=1.0).contains(&curve.auchips));
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let sim = simulate_scenario(Scenario::Uniform, 40, 10, 2, 3).unwrap();
    let prior = PriorSpec::new(8, 4);
    let spec = SamplerSpec::with_iters(400, 5);
    let go = || {
        let cal = calibrate(40, &prior, 4).unwrap();
        let chains = run_chains(&sim.data, &prior, &spec, Some(&cal.prior), None, 3).unwrap();
        let z: Vec<Vec<usize>> = chains.iter().flat_map(|c| c.z_samples.clone()).collect();
        let part = minvi_partition(&z, 4, 6).unwrap();
        (cal.lambda, chains, part)
    };
    let (l1, c1, p1) = in_pool(1, go);
    let (l4, c4, p4) = in_pool(4, go);
    assert_eq!(l1.to_bits(), l4.to_bits());
    assert_eq!(p1, p4);
    for (a, b) in c1.iter().zip(&c4) {
        assert_eq!(a.z_samples, b.z_samples);
        assert_eq!(a.alpha1_trace, b.alpha1_trace);
        assert_eq!(a.pi_samples, b.pi_samples);
    }
}

#[test]
fn symmetric_variant_runs_without_density() {
    let sim = simulate_scenario(Scenario::Uniform, 30, 8, 2, 21).unwrap();
    let prior = PriorSpec::symmetric(6, 0.5);
    let out = run_chain(&sim.data, &prior, &SamplerSpec::with_iters(300, 22), None, None).unwrap();
    assert!(out.alpha1_trace.iter().all(|a| *a == 0.5));
    // The asymmetric model refuses to run without one.
    let asym = PriorSpec::new(6, 3);
    assert!(run_chain(&sim.data, &asym, &SamplerSpec::with_iters(300, 22), None, None).is_err());
}
