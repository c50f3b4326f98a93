//! Exact-form p-values under a correctly specified null with exogenous
//! covariates and independent errors.

use sieve_lab_core::{
    fit, gen_case2_panel, test_exact_form, BasisFamily, BootstrapConfig, Coefficient,
    ErrorProcessKind, ErrorProcessSpec, Mapping, Observations, RegressionModelSpec, SieveSpec,
};
use statrs::distribution::{ContinuousCDF, Uniform};

fn zero(_: f64, _: f64) -> f64 {
    0.0
}

fn one(_: f64, _: f64) -> f64 {
    1.0
}

fn white_noise() -> ErrorProcessSpec {
    ErrorProcessSpec::new(ErrorProcessKind::TvAr2 {
        a1: Coefficient::Constant(0.0),
        a2: Coefficient::Constant(0.0),
    })
    .with_burn_in(0)
}

#[test]
fn null_p_values_are_close_to_uniform() {
    let model = RegressionModelSpec::Custom { m: zero, sigma: one };
    let spec = SieveSpec {
        time_family: BasisFamily::Fourier,
        space_family: BasisFamily::Fourier,
        mapping: Mapping::algebraic(1.0).unwrap(),
        c: 2,
        d: 3,
        r: 1,
    };
    let cfg = BootstrapConfig {
        m: 5,
        b_reps: 400,
        seed: 17,
        alpha: 0.1,
        ..BootstrapConfig::default()
    };
    let mut p: Vec<f64> = (0..500u64)
        .map(|seed| {
            let panel = gen_case2_panel(&[model], &white_noise(), &white_noise(), 500, seed).unwrap();
            let obs = Observations::from_panel_matrix(&panel).unwrap();
            let f = fit(&obs, &spec).unwrap();
            let cfg = BootstrapConfig { seed: 10_000 + seed, ..cfg };
            test_exact_form(&f, &obs, &cfg, 1, &zero).unwrap().p_value
        })
        .collect();
    p.sort_by(f64::total_cmp);
    let u = Uniform::new(0.0, 1.0).unwrap();
    let k = p.len() as f64;
    let ks = p
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let c = u.cdf(v);
            (c - i as f64 / k).abs().max(((i + 1) as f64 / k - c).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks <= 0.1, "KS distance {ks}");
}
