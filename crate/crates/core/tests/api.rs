use std::collections::BTreeMap;

use approx::assert_relative_eq;
use gaussglass::closed_forms::{rs_optimal_qbar, rs_pressure, sigma, RsSolution};
use gaussglass::fluctuations::{integrate_triple, CorrelationTriple};
use gaussglass::model::{DisorderSample, ModelParams};
use gaussglass::montecarlo::{quenched_pressure, McConfig, McEstimate, RunRecord, Scheme};
use gaussglass::parisi::{rs_order_parameter, rsb_pressure_functional, PiecewiseOrderParameter};
use gaussglass::sumrules::rs_interpolation_start;
use gaussglass::Error;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn round_trip<T: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug>(x: &T) {
    let s = serde_json::to_string(x).unwrap();
    assert_eq!(&serde_json::from_str::<T>(&s).unwrap(), x);
}

fn cfg(seed: u64) -> McConfig {
    McConfig { n_disorder: 24, n_directions: 256, radial_points: 128, seed, scheme: Scheme::QuadratureIfSmall }
}

#[test]
fn json_round_trips() {
    round_trip(&ModelParams::new(1.2, -0.3, 5).unwrap().with_diagonal_removed(true));
    round_trip(&cfg(4));
    round_trip(&McEstimate { mean: -0.25, std_error: 0.01, n_samples: 10 });
    round_trip(&PiecewiseOrderParameter::new(vec![0.1, 0.4], vec![0.2, 0.7]).unwrap());
    round_trip(&rs_pressure(2.0, 0.1).unwrap());
    round_trip(&integrate_triple(0.4, 0.0, 0.0, 1.0, 200).unwrap());
    round_trip(&DisorderSample::generate(3, 8));
}

#[test]
fn invalid_order_parameter_json_is_rejected() {
    assert!(serde_json::from_str::<PiecewiseOrderParameter>(r#"{"q":[0.5,0.1],"m":[0.2,0.3]}"#).is_err());
    assert!(serde_json::from_str::<PiecewiseOrderParameter>(r#"{"q":[0.1],"m":[1.5]}"#).is_err());
}

#[test]
fn regime_serializes_in_snake_case() {
    let s: RsSolution = rs_pressure(2.0, 0.0).unwrap();
    let v = serde_json::to_value(s).unwrap();
    assert_eq!(v["regime"], "condensed");
    let t: CorrelationTriple = integrate_triple(0.4, 0.0, 0.0, 0.5, 100).unwrap();
    assert_eq!(serde_json::to_value(t).unwrap()["t"], 0.5);
}

#[test]
fn run_record_carries_seed_and_provenance() {
    let p = ModelParams::new(0.5, 0.0, 2).unwrap();
    let rec = RunRecord {
        params: p,
        cfg: cfg(17),
        estimates: BTreeMap::from([("quenched_pressure".to_string(), quenched_pressure(&p, &cfg(17)).unwrap())]),
        git_describe: "v0".into(),
        timestamp: "1970-01-01T00:00:00Z".into(),
    };
    let v: serde_json::Value = serde_json::from_str(&rec.to_json()).unwrap();
    assert_eq!(v["cfg"]["seed"], 17);
    assert_eq!(v["git_describe"], "v0");
    assert!(rec.to_csv().starts_with("name,mean,std_error,n_samples\nquenched_pressure,"));
}

#[test]
fn disorder_bytes_round_trip() {
    let j = DisorderSample::generate(4, 99);
    assert_eq!(DisorderSample::from_bytes(&j.to_bytes()).unwrap(), j);
    assert!(DisorderSample::from_bytes(&j.to_bytes()[..20]).is_err());
}

#[test]
fn results_are_deterministic_and_thread_independent() {
    let p = ModelParams::new(0.8, 0.2, 5).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| quenched_pressure(&p, &cfg(3)).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(1));
    assert_eq!(a, run(3));
    assert_ne!(a, quenched_pressure(&p, &cfg(4)).unwrap());
}

#[test]
fn modules_agree_on_the_rs_value() {
    for (beta, lambda) in [(0.5, 0.0), (2.0, 0.0), (1.1, -0.4)] {
        let rs = rs_pressure(beta, lambda).unwrap();
        let x = rs_order_parameter(rs_optimal_qbar(beta, lambda)).unwrap();
        assert_relative_eq!(rsb_pressure_functional(beta, lambda, &x).unwrap(), rs.pressure, epsilon = 1e-12);
        let start = rs_interpolation_start(beta, lambda, rs.q_bar).unwrap();
        assert_relative_eq!(start + beta * beta * rs.q_bar * rs.q_bar / 4.0, rs.pressure, epsilon = 1e-12);
    }
}

#[test]
fn errors_are_typed() {
    assert!(matches!(sigma(1.0, 2.0, 0.5), Err(Error::Domain(_))));
    assert!(matches!(ModelParams::new(f64::NAN, 0.0, 2), Err(Error::InvalidArgument(_))));
    assert!(matches!(integrate_triple(2.0, 0.0, 0.0, 1.0, 1000), Err(Error::Divergence { .. })));
}
