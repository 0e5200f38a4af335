use loadtune_web::demo;
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn optimizer_run_has_one_frame_per_generation() {
    for method in ["de", "ga", "pso"] {
        let v = parse(demo::run_optimizer(method, "sphere", 12, 10, 1).unwrap());
        let frames = v["frames"].as_array().unwrap();
        assert_eq!(
            frames.len(),
            v["history"].as_array().unwrap().len(),
            "{method}"
        );
        assert_eq!(frames[0].as_array().unwrap().len(), 10);
        let (lo, hi) = (
            v["bounds"][0].as_f64().unwrap(),
            v["bounds"][1].as_f64().unwrap(),
        );
        for p in frames.iter().flat_map(|f| f.as_array().unwrap()) {
            let (x, y) = (p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
            assert!((lo..=hi).contains(&x) && (lo..=hi).contains(&y));
        }
        let best: Vec<f64> = v["history"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r["best_fitness"].as_f64().unwrap())
            .collect();
        assert!(best.windows(2).all(|w| w[1] <= w[0]), "{method}");
    }
}

#[test]
fn unknown_names_are_errors() {
    assert!(demo::run_optimizer("sa", "sphere", 5, 10, 0).is_err());
    assert!(demo::run_optimizer("de", "ackley", 5, 10, 0).is_err());
    assert!(demo::landscape("nope", 10).is_err());
}

#[test]
fn landscape_grid() {
    let v = parse(demo::landscape("sphere", 21).unwrap());
    let values = v["values"].as_array().unwrap();
    assert_eq!(values.len(), 21 * 21);
    // centre of an odd grid over [-5, 5] is the origin
    assert_eq!(values[10 * 21 + 10].as_f64().unwrap(), 0.0);
    assert_eq!(v["min"].as_f64().unwrap(), 0.0);
    assert!(demo::landscape("sphere", 1).is_err());
}

#[test]
fn forecast_demo_returns_a_day() {
    let v = parse(demo::forecast_demo(400, 32, 2, 0.01, 0).unwrap());
    assert_eq!(v["actual_kw"].as_array().unwrap().len(), 24);
    assert_eq!(v["predicted_kw"].as_array().unwrap().len(), 24);
    assert_eq!(v["train_mse"].as_array().unwrap().len(), 3);
    assert!(v["test_mape"].as_f64().unwrap().is_finite());
    assert!(demo::forecast_demo(100, 32, 2, 0.01, 0).is_err());
}
