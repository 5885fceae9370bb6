//! Emitted JSON documents stay conformant with the schema files shipped in
//! `schema/`. The checker interprets the structural subset those schemas
//! use: `type`, `required`, `properties`, `items`, and `const`.

use lanelink::bench::{run_bench, BenchConfig};
use lanelink::phy::NrNumerology;
use lanelink::sim::{run_sim, SimConfig};
use lanelink::{ExecPath, PrecisionMode};
use serde_json::Value;

fn type_matches(name: &str, v: &Value) -> bool {
    match name {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "number" => v.is_number(),
        "integer" => v.is_i64() || v.is_u64(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        other => panic!("schema uses unsupported type {other}"),
    }
}

fn check(schema: &Value, doc: &Value, at: &str, errors: &mut Vec<String>) {
    if let Some(want) = schema.get("const") {
        if doc != want {
            errors.push(format!("{at}: expected const {want}, got {doc}"));
        }
    }
    match schema.get("type") {
        Some(Value::String(t)) if !type_matches(t, doc) => {
            errors.push(format!("{at}: expected {t}"));
        }
        Some(Value::Array(alts)) => {
            if !alts
                .iter()
                .filter_map(Value::as_str)
                .any(|t| type_matches(t, doc))
            {
                errors.push(format!("{at}: matches none of {alts:?}"));
            }
        }
        _ => {}
    }
    if let Some(required) = schema.get("required").and_then(Value::as_array) {
        for key in required.iter().filter_map(Value::as_str) {
            if doc.get(key).is_none() {
                errors.push(format!("{at}: missing required key {key}"));
            }
        }
    }
    if let Some(props) = schema.get("properties").and_then(Value::as_object) {
        for (key, sub) in props {
            if let Some(v) = doc.get(key) {
                check(sub, v, &format!("{at}.{key}"), errors);
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), doc.as_array()) {
        for (i, v) in arr.iter().enumerate() {
            check(items, v, &format!("{at}[{i}]"), errors);
        }
    }
}

fn load_schema(name: &str) -> Value {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../schema/");
    let text = std::fs::read_to_string(format!("{path}{name}")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn assert_conforms(schema: &Value, doc: &Value) {
    let mut errors = Vec::new();
    check(schema, doc, "$", &mut errors);
    assert!(errors.is_empty(), "schema violations:\n{}", errors.join("\n"));
}

#[test]
fn sim_result_conforms_to_shipped_schema() {
    let cfg = SimConfig {
        numerology: NrNumerology::new(15, 1).unwrap(),
        mcs_index: 4,
        n_rx: 2,
        n_tx: 2,
        snr_db_points: vec![10.0, 20.0],
        n_ttis: 2,
        precision: PrecisionMode::Ps,
        path: ExecPath::Vector,
        master_seed: 3,
        channel_profile: "synthetic3".into(),
    };
    let doc: Value = serde_json::from_str(&run_sim(&cfg).unwrap().to_json()).unwrap();
    let schema = load_schema("sim-result.schema.json");
    assert_conforms(&schema, &doc);

    // The checker itself notices a broken document.
    let mut broken = doc.clone();
    broken["records"][0].as_object_mut().unwrap().remove("ser");
    let mut errors = Vec::new();
    check(&schema, &broken, "$", &mut errors);
    assert!(!errors.is_empty());
}

#[test]
fn bench_report_conforms_to_shipped_schema() {
    let cfg = BenchConfig {
        mimo_sizes: vec![[2, 2], [4, 4]],
        numerology: NrNumerology::new(15, 1).unwrap(),
        n_ttis: 3,
        warmup_ttis: 1,
        precisions: vec![PrecisionMode::Ps],
        paths: vec![ExecPath::Scalar, ExecPath::Vector],
        output_dir: "unused".into(),
    };
    let doc: Value = serde_json::from_str(&run_bench(&cfg).unwrap().to_json()).unwrap();
    let schema = load_schema("bench-report.schema.json");
    assert_conforms(&schema, &doc);
}
