use std::sync::Arc;
use std::time::Duration;

use num_complex::Complex64;
use periodpoly_core::newform;
use periodpoly_lmfdb::{ClientConfig, FetchRequest, LmfdbClient, LmfdbError, MockTransport};

const GOLDEN: &str = include_str!("fixtures/mf_newforms_11.7.b.a.json");
const ORBIT: &str = include_str!("fixtures/mf_newforms_25.12.b.a.json");
const EMBEDDINGS: &str = include_str!("fixtures/mf_hecke_cc_67890.json");
const EMPTY: &str = r#"{"data":[],"next":null}"#;

fn recorded() -> MockTransport {
    MockTransport::new()
        .route("mf_newforms/?label=11.7.b.a&", 200, GOLDEN)
        .route("mf_newforms/?label=25.12.b.a&", 200, ORBIT)
        .route("mf_hecke_cc/?hecke_orbit_code=67890&", 200, EMBEDDINGS)
        .route("mf_newforms/?label=", 200, EMPTY)
}

fn client(dir: &std::path::Path, mock: Arc<MockTransport>, rate: f64) -> LmfdbClient {
    let config = ClientConfig {
        base_url: "http://lmfdb.test/api".into(),
        cache_dir: dir.to_path_buf(),
        requests_per_second: rate,
        max_age: Duration::from_secs(3600),
    };
    LmfdbClient::new(config, mock)
}

#[test]
fn fetches_golden_form_and_caches_it() {
    let dir = tempfile::tempdir().unwrap();
    let mock = Arc::new(recorded());
    let c = client(dir.path(), mock.clone(), 1000.0);
    let d = c.fetch_newform(&FetchRequest::new("11.7.b.a", 200)).unwrap();
    assert_eq!((d.level(), d.weight(), d.nebentypus()), (11, 7, "11.b"));
    assert!(d.len() >= 200);
    assert_eq!(d.root_number(), None);
    for (n, a) in [(1, 1.0), (2, 0.0), (3, 10.0), (4, 64.0), (5, 74.0)] {
        assert_eq!(d.coefficient(n), Complex64::new(a, 0.0));
    }
    assert!(newform::validate(&d).passed);
    assert_eq!(mock.call_count(), 1);
    assert!(mock.calls()[0].url.starts_with("http://lmfdb.test/api/mf_newforms/?label=11.7.b.a&_format=json"));
    assert!(dir.path().join("11.7.b.a__t256.json").exists());

    let again = c.fetch_newform(&FetchRequest::new("11.7.b.a", 200)).unwrap();
    assert_eq!(mock.call_count(), 1);
    assert_eq!(d, again);
    assert_eq!(d.to_json(), again.to_json());
}

#[test]
fn offline_with_warm_cache_makes_no_calls() {
    let dir = tempfile::tempdir().unwrap();
    let warm = client(dir.path(), Arc::new(recorded()), 1000.0)
        .fetch_newform(&FetchRequest::new("11.7.b.a", 200))
        .unwrap();
    let mock = Arc::new(MockTransport::new().fail("/"));
    let c = client(dir.path(), mock.clone(), 1000.0);
    let cold = c
        .fetch_newform(&FetchRequest::new("11.7.b.a", 150).offline(true))
        .unwrap();
    assert_eq!(warm, cold);
    assert_eq!(mock.call_count(), 0);
}

#[test]
fn offline_with_cold_cache_is_a_network_error() {
    let dir = tempfile::tempdir().unwrap();
    let mock = Arc::new(recorded());
    let err = client(dir.path(), mock.clone(), 1000.0)
        .fetch_newform(&FetchRequest::new("11.7.b.a", 10).offline(true))
        .unwrap_err();
    assert!(matches!(err, LmfdbError::Network { .. }), "{err}");
    assert_eq!(mock.call_count(), 0);
}

#[test]
fn unknown_label_is_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let c = client(dir.path(), Arc::new(recorded()), 1000.0);
    let err = c.fetch_newform(&FetchRequest::new("nonexistent-xyz", 10)).unwrap_err();
    assert!(matches!(err, LmfdbError::NotFound(ref l) if l == "nonexistent-xyz"), "{err}");
    let err = c.fetch_newform(&FetchRequest::new("13.2.a.zz", 10)).unwrap_err();
    assert!(matches!(err, LmfdbError::NotFound(_)), "{err}");
    let err = c.fetch_newform(&FetchRequest::new("11.7.b.a&x=1", 10)).unwrap_err();
    assert!(matches!(err, LmfdbError::NotFound(_)));
    let plain404 = client(dir.path(), Arc::new(MockTransport::new()), 1000.0);
    assert!(matches!(
        plain404.fetch_newform(&FetchRequest::new("2.8.a.a", 10)),
        Err(LmfdbError::NotFound(_))
    ));
}

#[test]
fn too_few_stored_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let c = client(dir.path(), Arc::new(recorded()), 1000.0);
    let err = c.fetch_newform(&FetchRequest::new("11.7.b.a", 5000)).unwrap_err();
    assert!(
        matches!(err, LmfdbError::InsufficientData { available: 1000, requested: 5000, .. }),
        "{err}"
    );
}

#[test]
fn unexpected_shape_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let mock = MockTransport::new().route("mf_newforms", 200, r#"{"rows": 3}"#);
    let err = client(dir.path(), Arc::new(mock), 1000.0)
        .fetch_newform(&FetchRequest::new("11.7.b.a", 10))
        .unwrap_err();
    assert!(matches!(err, LmfdbError::Parse { .. }), "{err}");
}

#[test]
fn transport_failure_falls_back_to_stale_cache() {
    let dir = tempfile::tempdir().unwrap();
    let warm = client(dir.path(), Arc::new(recorded()), 1000.0)
        .fetch_newform(&FetchRequest::new("11.7.b.a", 100))
        .unwrap();
    let mut config = ClientConfig {
        base_url: "http://lmfdb.test/api".into(),
        cache_dir: dir.path().to_path_buf(),
        requests_per_second: 1000.0,
        max_age: Duration::ZERO,
    };
    let failing = Arc::new(MockTransport::new().fail("/"));
    let c = LmfdbClient::new(config.clone(), failing.clone());
    assert_eq!(c.fetch_newform(&FetchRequest::new("11.7.b.a", 100)).unwrap(), warm);
    assert_eq!(failing.call_count(), 1);

    config.cache_dir = dir.path().join("empty");
    let c = LmfdbClient::new(config, failing);
    assert!(matches!(
        c.fetch_newform(&FetchRequest::new("11.7.b.a", 100)),
        Err(LmfdbError::Network { .. })
    ));
}

#[test]
fn server_error_status_is_a_network_error() {
    let dir = tempfile::tempdir().unwrap();
    let mock = MockTransport::new().route("mf_newforms", 503, "busy");
    let err = client(dir.path(), Arc::new(mock), 1000.0)
        .fetch_newform(&FetchRequest::new("11.7.b.a", 10))
        .unwrap_err();
    assert!(matches!(err, LmfdbError::Network { .. }), "{err}");
}

#[test]
fn embeddings_are_selectable() {
    let dir = tempfile::tempdir().unwrap();
    let mock = Arc::new(recorded());
    let c = client(dir.path(), mock.clone(), 1000.0);
    let first = c.fetch_newform(&FetchRequest::new("25.12.b.a", 100)).unwrap();
    assert_eq!(first.label(), "25.12.b.a.24.1");
    assert_eq!(first.nebentypus(), "25.b");
    let a2 = first.coefficient(2);
    assert!((a2 - Complex64::new(0.0, -24.0)).norm() < 1e-9, "{a2}");
    assert!(newform::validate(&first).structural().next().is_none());

    let req = FetchRequest::new("25.12.b.a", 100).with_embedding(Some("24.2".into()));
    let second = c.fetch_newform(&req).unwrap();
    assert_eq!(second.label(), "25.12.b.a.24.2");
    assert!((second.coefficient(2) - a2.conj()).norm() < 1e-9);
    assert_eq!(c.fetch_newform(&req).unwrap(), second);
    assert_eq!(mock.call_count(), 4);

    let missing = FetchRequest::new("25.12.b.a", 100).with_embedding(Some("9.9".into()));
    assert!(matches!(c.fetch_newform(&missing), Err(LmfdbError::NotFound(_))));
}

#[test]
fn non_unimodular_root_number_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let body = GOLDEN.replace(r#""dim":1"#, r#""dim":1,"root_number":[0.0, 2.0]"#);
    let mock = MockTransport::new().route("mf_newforms", 200, body);
    let err = client(dir.path(), Arc::new(mock), 1000.0)
        .fetch_newform(&FetchRequest::new("11.7.b.a", 10))
        .unwrap_err();
    assert!(matches!(err, LmfdbError::Invalid { .. }), "{err}");
    assert!(std::fs::read_dir(dir.path()).map_or(true, |mut d| d.next().is_none()));
}

#[test]
fn zero_coefficients_requested_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let c = client(dir.path(), Arc::new(recorded()), 1000.0);
    assert!(matches!(
        c.fetch_newform(&FetchRequest::new("11.7.b.a", 0)),
        Err(LmfdbError::Invalid { .. })
    ));
}

#[test]
fn rate_limit_spaces_requests() {
    let dir = tempfile::tempdir().unwrap();
    let mock = Arc::new(recorded());
    let rate = 20.0;
    let c = client(dir.path(), mock.clone(), rate);
    for label in ["1.2.a.a", "1.2.a.b", "1.2.a.c", "1.2.a.d"] {
        let _ = c.fetch_newform(&FetchRequest::new(label, 10));
    }
    let calls = mock.calls();
    assert_eq!(calls.len(), 4);
    let min_gap = Duration::from_secs_f64(1.0 / rate);
    for w in calls.windows(2) {
        assert!(w[1].at - w[0].at >= min_gap, "{:?}", w[1].at - w[0].at);
    }
}

#[test]
fn rate_limit_holds_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mock = Arc::new(recorded());
    let rate = 25.0;
    let c = Arc::new(client(dir.path(), mock.clone(), rate));
    let handles: Vec<_> = (0..4)
        .map(|i| {
            let c = c.clone();
            std::thread::spawn(move || {
                let _ = c.fetch_newform(&FetchRequest::new(format!("1.4.a.{}", ["a", "b", "c", "d"][i]), 10));
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    let mut stamps: Vec<_> = mock.calls().into_iter().map(|c| c.at).collect();
    stamps.sort();
    let min_gap = Duration::from_secs_f64(1.0 / rate);
    assert!(stamps.windows(2).all(|w| w[1] - w[0] >= min_gap));
}

#[test]
fn purge_counts() {
    let dir = tempfile::tempdir().unwrap();
    let c = client(dir.path(), Arc::new(recorded()), 1000.0);
    assert_eq!(c.purge_cache(Duration::ZERO).unwrap(), 0);
    c.fetch_newform(&FetchRequest::new("11.7.b.a", 10)).unwrap();
    assert_eq!(c.purge_cache(Duration::MAX).unwrap(), 0);
    assert_eq!(c.purge_cache(Duration::ZERO).unwrap(), 1);
    assert_eq!(c.purge_cache(Duration::ZERO).unwrap(), 0);
}

#[test]
#[ignore = "live network; run with --ignored"]
fn live_golden_fetch() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ClientConfig::from_env();
    config.cache_dir = dir.path().to_path_buf();
    let http = periodpoly_lmfdb::HttpTransport::new(Duration::from_secs(30)).unwrap();
    let c = LmfdbClient::new(config, Arc::new(http));
    let d = c.fetch_newform(&FetchRequest::new("11.7.b.a", 200)).unwrap();
    assert_eq!((d.level(), d.weight()), (11, 7));
}
