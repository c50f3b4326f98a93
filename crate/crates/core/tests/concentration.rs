use sieve_lab_core::{
    build_design, gen_error_process, BasisFamily, ErrorProcessSpec, Mapping, Observations,
    SieveSpec,
};

fn pi_hat(n: usize, seed: u64) -> Vec<f64> {
    let spec = SieveSpec {
        time_family: BasisFamily::Fourier,
        space_family: BasisFamily::Fourier,
        mapping: Mapping::algebraic(1.0).unwrap(),
        c: 3,
        d: 4,
        r: 1,
    };
    let y = gen_error_process(&ErrorProcessSpec::tvar2(), n, seed).unwrap();
    let obs = Observations::lagged(y).unwrap();
    let design = build_design(&obs, &spec).unwrap();
    let g = design.w.gram(n as f64);
    g.as_slice().to_vec()
}

fn frobenius(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[test]
fn gram_matrix_settles_as_n_grows() {
    let mut shrinking = 0;
    for seed in 0..20 {
        let small = pi_hat(500, 1000 + seed);
        let mid = pi_hat(2000, 2000 + seed);
        let large = pi_hat(8000, 3000 + seed);
        if frobenius(&large, &mid) <= frobenius(&mid, &small) {
            shrinking += 1;
        }
    }
    assert!(shrinking >= 16, "{shrinking} of 20 seeds");
}
