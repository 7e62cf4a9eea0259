use tomocume_core::simulate::{
    draw_rates, simulate_links, simulate_traffic, ExperimentSeed, PoissonSampler, RateVector,
};
use tomocume_core::topology::{build_routing_matrix, k_shortest_paths, nsfnet};

#[test]
fn poisson_calibration() {
    let n = 1_000_000;
    for (stream, &lambda) in [0.5, 2.0, 4.0, 13.5].iter().enumerate() {
        let sampler = PoissonSampler::new(&[lambda]).unwrap();
        let mut rng = ExperimentSeed::new(7, stream as u64).rng();
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = f64::from(sampler.sample(&mut rng, 0));
            s1 += x;
            s2 += x * x;
        }
        let nf = n as f64;
        let mean = s1 / nf;
        let var = (s2 - s1 * s1 / nf) / (nf - 1.0);
        let se_mean = (lambda / nf).sqrt();
        let se_var = ((lambda + 2.0 * lambda * lambda) / nf).sqrt();
        assert!(
            (mean - lambda).abs() < 4.0 * se_mean,
            "λ={lambda}: mean {mean}"
        );
        assert!((var - lambda).abs() < 4.0 * se_var, "λ={lambda}: var {var}");
    }
}

#[test]
fn draws_are_uniform_and_reproducible() {
    let seed = ExperimentSeed::new(11, 0);
    let r = draw_rates(20_000, 0.0, 4.0, seed).unwrap();
    assert_eq!(r, draw_rates(20_000, 0.0, 4.0, seed).unwrap());
    assert_ne!(
        r,
        draw_rates(20_000, 0.0, 4.0, ExperimentSeed::new(11, 1)).unwrap()
    );
    assert!(r.as_slice().iter().all(|&v| (0.0..=4.0).contains(&v)));
    let mean = r.as_slice().iter().sum::<f64>() / 20_000.0;
    assert!((mean - 2.0).abs() < 4.0 * (16.0f64 / 12.0 / 20_000.0).sqrt());
    assert!(draw_rates(3, 2.0, 1.0, seed).is_err());
}

#[test]
fn links_are_routed_paths() {
    let a = build_routing_matrix(&k_shortest_paths(&nsfnet(), 2).unwrap()).unwrap();
    let rates = draw_rates(a.paths(), 0.0, 4.0, ExperimentSeed::new(3, 0)).unwrap();
    let seed = ExperimentSeed::new(3, 1);
    let (x, y) = simulate_traffic(&rates, &a, 200, seed).unwrap();
    for (xs, ys) in x.samples().zip(y.samples()) {
        let xf: Vec<f64> = xs.iter().map(|&v| f64::from(v)).collect();
        let want = a.matrix().matvec(&xf).unwrap();
        assert!(want.iter().zip(ys).all(|(w, &v)| *w == f64::from(v)));
    }
    assert_eq!(simulate_links(&rates, &a, 200, seed).unwrap(), y);
    assert_ne!(
        simulate_links(&rates, &a, 200, ExperimentSeed::new(3, 2)).unwrap(),
        y
    );
}

#[test]
fn zero_rate_paths_stay_silent() {
    let a = build_routing_matrix(&k_shortest_paths(&nsfnet(), 1).unwrap()).unwrap();
    let rates = RateVector::new(vec![0.0; a.paths()]).unwrap();
    let y = simulate_links(&rates, &a, 50, ExperimentSeed::new(0, 0)).unwrap();
    assert!(y.as_slice().iter().all(|&v| v == 0));
}
