use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::routing::get;
use axum::{Json, Router};
use fwdsig::market_data::{DataError, KlineClient, KlineClientConfig, MINUTE_MS};
use serde::Deserialize;
use serde_json::{json, Value};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

const DAY_START: i64 = 1_700_006_400_000;

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct KlineQuery {
    symbol: String,
    interval: String,
    start_time: i64,
    end_time: i64,
    limit: usize,
}

struct Mock {
    /// Open times served, ascending.
    times: Vec<i64>,
    requests: AtomicUsize,
    /// Requests answered with this status before the server behaves.
    failures: usize,
    fail_status: StatusCode,
}

async fn klines(State(mock): State<Arc<Mock>>, Query(q): Query<KlineQuery>) -> Result<Json<Value>, StatusCode> {
    let n = mock.requests.fetch_add(1, Ordering::SeqCst);
    if n < mock.failures {
        return Err(mock.fail_status);
    }
    if q.symbol != "BTCUSDT" || q.interval != "1m" {
        return Err(StatusCode::BAD_REQUEST);
    }
    let rows: Vec<Value> = mock
        .times
        .iter()
        .filter(|&&t| t >= q.start_time && t <= q.end_time)
        .take(q.limit)
        .map(|&t| {
            let i = ((t - DAY_START) / MINUTE_MS) as f64;
            let close = 100.0 + (i * 0.1).sin();
            json!([
                t,
                format!("{close}"),
                format!("{}", close + 0.5),
                format!("{}", close - 0.5),
                format!("{close}"),
                "1.25",
                t + 59_999,
                "0",
                3,
                "0",
                "0",
                "0"
            ])
        })
        .collect();
    Ok(Json(Value::Array(rows)))
}

fn serve(mock: Mock) -> (String, Arc<Mock>) {
    let mock = Arc::new(mock);
    let state = mock.clone();
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(1)
            .enable_all()
            .build()
            .unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            let app = Router::new().route("/api/v3/klines", get(klines)).with_state(state);
            axum::serve(listener, app).await.unwrap();
        });
    });
    let addr = rx.recv().unwrap();
    (format!("http://{addr}/api/v3/klines"), mock)
}

fn day(minutes: usize) -> Vec<i64> {
    (0..minutes as i64).map(|i| DAY_START + i * MINUTE_MS).collect()
}

fn client(url: String, page_size: usize) -> KlineClient {
    KlineClient::new(KlineClientConfig {
        base_url: url,
        page_size,
        backoff_ms: 1,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn one_day_spans_pages_without_duplicates() {
    // a day before and after the request window so boundaries are exercised
    let times: Vec<i64> = (-100..1540).map(|i| DAY_START + i * MINUTE_MS).collect();
    let (url, mock) = serve(Mock {
        times,
        requests: AtomicUsize::new(0),
        failures: 0,
        fail_status: StatusCode::OK,
    });
    let series = client(url, 1000)
        .fetch("BTCUSDT", DAY_START, DAY_START + 1440 * MINUTE_MS)
        .unwrap();
    assert_eq!(series.len(), 1440);
    assert_eq!(series.timestamps(), day(1440));
    assert!(series.is_regular());
    assert_eq!(mock.requests.load(Ordering::SeqCst), 2);
}

#[test]
fn pages_concatenate_seamlessly_for_odd_page_sizes() {
    let (url, mock) = serve(Mock {
        times: day(1440),
        requests: AtomicUsize::new(0),
        failures: 0,
        fail_status: StatusCode::OK,
    });
    for page in [1, 7, 333, 1440, 5000] {
        let series = client(url.clone(), page)
            .fetch("BTCUSDT", DAY_START, DAY_START + 1440 * MINUTE_MS)
            .unwrap();
        assert_eq!(series.timestamps(), day(1440), "page size {page}");
    }
    assert!(mock.requests.load(Ordering::SeqCst) > 1440);
}

#[test]
fn gaps_are_kept_as_gaps() {
    let mut times = day(1440);
    times.retain(|t| (t - DAY_START) / MINUTE_MS % 97 != 5);
    let expected = times.clone();
    let (url, _) = serve(Mock {
        times,
        requests: AtomicUsize::new(0),
        failures: 0,
        fail_status: StatusCode::OK,
    });
    let series = client(url, 100)
        .fetch("BTCUSDT", DAY_START, DAY_START + 1440 * MINUTE_MS)
        .unwrap();
    assert!(series.len() < 1440);
    assert_eq!(series.timestamps(), expected);
    assert_eq!(fwdsig::market_data::regularize(&series).unwrap().len(), 1440);
}

#[test]
fn transient_failures_are_retried() {
    for status in [StatusCode::INTERNAL_SERVER_ERROR, StatusCode::TOO_MANY_REQUESTS] {
        let (url, mock) = serve(Mock {
            times: day(60),
            requests: AtomicUsize::new(0),
            failures: 3,
            fail_status: status,
        });
        let series = client(url, 1000)
            .fetch("BTCUSDT", DAY_START, DAY_START + 60 * MINUTE_MS)
            .unwrap();
        assert_eq!(series.len(), 60);
        assert_eq!(mock.requests.load(Ordering::SeqCst), 4);
    }
}

#[test]
fn persistent_failure_gives_up_after_the_attempt_budget() {
    let (url, mock) = serve(Mock {
        times: day(60),
        requests: AtomicUsize::new(0),
        failures: usize::MAX,
        fail_status: StatusCode::SERVICE_UNAVAILABLE,
    });
    let err = client(url, 1000)
        .fetch("BTCUSDT", DAY_START, DAY_START + 60 * MINUTE_MS)
        .unwrap_err();
    assert!(matches!(err, DataError::Network { attempts: 4, .. }), "{err}");
    assert_eq!(mock.requests.load(Ordering::SeqCst), 4);
}

#[test]
fn client_errors_are_not_retried() {
    let (url, mock) = serve(Mock {
        times: day(60),
        requests: AtomicUsize::new(0),
        failures: 0,
        fail_status: StatusCode::OK,
    });
    let err = client(url, 1000)
        .fetch("ETHUSDT", DAY_START, DAY_START + 60 * MINUTE_MS)
        .unwrap_err();
    assert!(matches!(err, DataError::Network { attempts: 1, .. }));
    assert_eq!(mock.requests.load(Ordering::SeqCst), 1);
}

#[test]
fn empty_range_is_rejected_before_any_request() {
    let c = client("http://127.0.0.1:9/unused".into(), 1000);
    assert!(matches!(c.fetch("BTCUSDT", 10, 10), Err(DataError::InvalidRange { .. })));
}
