use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use mpi_core::inventory::TraitDimension;
use mpi_core::vignette::{
    build_questionnaire, essay_id, Condition, Essay, Generator, SessionDir, SessionStatus,
};
use mpi_server::{router, AppState};

fn essays() -> Vec<Essay> {
    TraitDimension::ALL
        .iter()
        .flat_map(|&d| {
            Condition::ALL.map(|c| Essay {
                id: essay_id(d, c),
                dimension: d,
                condition: c,
                text: format!("I would think it over ({} {}).", d.letter(), c as u8),
                generator: Generator { model: "secret-model-x".into(), method: None },
            })
        })
        .collect()
}

fn study(status: SessionStatus) -> (tempfile::TempDir, SessionDir) {
    let tmp = tempfile::tempdir().unwrap();
    let dir = SessionDir::new(tmp.path().join("s1"));
    let essays = essays();
    dir.save_essays(&essays).unwrap();
    let mut session = build_questionnaire("s1", &essays, 3).unwrap();
    session.status = status;
    dir.save_session(&session).unwrap();
    (tmp, dir)
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value)
}

fn answers(view: &Value, n: usize) -> Vec<Value> {
    view["items"]
        .as_array()
        .unwrap()
        .iter()
        .take(n)
        .map(|item| json!({ "item_id": item["item_id"], "judgment": "increased" }))
        .collect()
}

#[tokio::test]
async fn session_view_is_stable_and_blind() {
    let (_tmp, dir) = study(SessionStatus::Open);
    let app = router(Arc::new(AppState::load(&dir).unwrap()));
    let (status, view) = call(&app, "GET", "/api/session/s1", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view["items"].as_array().unwrap().len(), 10);
    let text = view.to_string();
    for banned in ["positive", "negative", "neutral", "secret-model-x"] {
        assert!(!text.contains(banned));
    }
    let (_, again) = call(&app, "GET", "/api/session/s1", None).await;
    assert_eq!(view, again);
}

#[tokio::test]
async fn unknown_session_is_404() {
    let (_tmp, dir) = study(SessionStatus::Open);
    let app = router(Arc::new(AppState::load(&dir).unwrap()));
    assert_eq!(call(&app, "GET", "/api/session/nope", None).await.0, StatusCode::NOT_FOUND);
    let body = json!({ "rater_id": "r", "answers": [] });
    assert_eq!(call(&app, "POST", "/api/session/nope/ratings", Some(body)).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn closed_session_is_409() {
    let (_tmp, dir) = study(SessionStatus::Closed);
    let app = router(Arc::new(AppState::load(&dir).unwrap()));
    assert_eq!(call(&app, "GET", "/api/session/s1", None).await.0, StatusCode::CONFLICT);
    let body = json!({ "rater_id": "r", "answers": [] });
    assert_eq!(call(&app, "POST", "/api/session/s1/ratings", Some(body)).await.0, StatusCode::CONFLICT);
}

#[tokio::test]
async fn complete_submission_then_duplicate_rater() {
    let (_tmp, dir) = study(SessionStatus::Open);
    let app = router(Arc::new(AppState::load(&dir).unwrap()));
    let (_, view) = call(&app, "GET", "/api/session/s1", None).await;
    let body = json!({ "rater_id": "rater-7", "answers": answers(&view, 10) });
    let (status, ack) = call(&app, "POST", "/api/session/s1/ratings", Some(body.clone())).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ack["recorded"], 10);
    assert_eq!(std::fs::read_to_string(dir.ratings_path()).unwrap().lines().count(), 10);

    let (status, _) = call(&app, "POST", "/api/session/s1/ratings", Some(body)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(std::fs::read_to_string(dir.ratings_path()).unwrap().lines().count(), 10);
}

#[tokio::test]
async fn incomplete_or_malformed_bodies_are_400() {
    let (_tmp, dir) = study(SessionStatus::Open);
    let app = router(Arc::new(AppState::load(&dir).unwrap()));
    let (_, view) = call(&app, "GET", "/api/session/s1", None).await;

    let nine = json!({ "rater_id": "r", "answers": answers(&view, 9) });
    assert_eq!(call(&app, "POST", "/api/session/s1/ratings", Some(nine)).await.0, StatusCode::BAD_REQUEST);

    let mut bad = answers(&view, 10);
    bad[0]["judgment"] = json!("same");
    let bad = json!({ "rater_id": "r", "answers": bad });
    assert_eq!(call(&app, "POST", "/api/session/s1/ratings", Some(bad)).await.0, StatusCode::BAD_REQUEST);

    let no_rater = json!({ "answers": answers(&view, 10) });
    assert_eq!(call(&app, "POST", "/api/session/s1/ratings", Some(no_rater)).await.0, StatusCode::BAD_REQUEST);

    let request = Request::builder()
        .method("POST")
        .uri("/api/session/s1/ratings")
        .body(Body::from("{not json"))
        .unwrap();
    assert_eq!(app.clone().oneshot(request).await.unwrap().status(), StatusCode::BAD_REQUEST);
    assert!(!dir.ratings_path().exists() || std::fs::read_to_string(dir.ratings_path()).unwrap().is_empty());
}

#[tokio::test]
async fn stored_judgments_are_relative_to_neutral() {
    let (_tmp, dir) = study(SessionStatus::Open);
    let app = router(Arc::new(AppState::load(&dir).unwrap()));
    let (_, view) = call(&app, "GET", "/api/session/s1", None).await;
    let body = json!({ "rater_id": "r", "answers": answers(&view, 10) });
    assert_eq!(call(&app, "POST", "/api/session/s1/ratings", Some(body)).await.0, StatusCode::OK);
    let session = dir.load_session().unwrap();
    for record in dir.open_ratings().unwrap().records() {
        let flip = session.comparison(&record.item_id).unwrap().presentation_flip;
        let expected = if flip { "decreased" } else { "increased" };
        assert_eq!(serde_json::to_value(record.judgment).unwrap(), expected);
    }
}
