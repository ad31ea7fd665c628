//! wasm-bindgen bindings for the browser demo page.
//!
//! Three operations, each returning a JSON string the page renders with
//! plain JavaScript: plan exploration, a full simulated run, and the load
//! comparison curves. Everything is deterministic; no randomness enters
//! from the JS side beyond the seed field.

use num::{BigRational, ToPrimitive};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use cdc_core::engine::run_simulation;
use cdc_core::finite_field::FieldSpec;
use cdc_core::metrics::{
    asymptotic_ratio, fig2_rows, li_optimal_load, to_sig_digits, FamilyParams,
};
use cdc_core::scheme::{build_scheme, communication_load, signal_expression};

const MAX_NODES: u32 = 40;

fn rational_json(r: &BigRational) -> Value {
    json!({
        "num": r.numer().to_string(),
        "den": r.denom().to_string(),
        "float": to_sig_digits(r, 12),
    })
}

fn plan_overview_impl(n: u32, t: u32) -> Result<String, String> {
    if n > MAX_NODES {
        return Err(format!("demo caps n at {MAX_NODES}"));
    }
    let plan = build_scheme(n, t, FieldSpec::gf256()).map_err(|e| e.to_string())?;
    let load = communication_load(&plan);
    let li = li_optimal_load(n.into(), t.into(), t.into()).map_err(|e| e.to_string())?;
    let nodes: Vec<Value> = (0..n)
        .map(|node| {
            let signals: Vec<Value> = (0..n)
                .filter_map(|file| {
                    plan.sender_row(node, file).map(|slot| {
                        json!({
                            "file": file,
                            "slot": slot,
                            "expr": signal_expression(&plan, node, file)
                                .expect("sender checked"),
                        })
                    })
                })
                .collect();
            json!({
                "node": node,
                "stores": plan.placement(node),
                "computes": plan.assignment(node),
                "signals": signals,
            })
        })
        .collect();
    let doc = json!({
        "n": n,
        "t": t,
        "field_width": plan.field().width_bits(),
        "coeffs": plan.coeffs().iter().map(|c| c.value()).collect::<Vec<_>>(),
        "load": rational_json(&load),
        "li_load": rational_json(&li),
        "nodes": nodes,
    });
    Ok(doc.to_string())
}

fn simulate_impl(n: u32, t: u32, seed: u64) -> Result<String, String> {
    if n > MAX_NODES {
        return Err(format!("demo caps n at {MAX_NODES}"));
    }
    let plan = build_scheme(n, t, FieldSpec::gf256()).map_err(|e| e.to_string())?;
    let outcome = run_simulation(plan, 64, seed).map_err(|e| e.to_string())?;
    let functions: Vec<Value> = outcome
        .report
        .producers_per_function
        .iter()
        .map(|(q, producers)| {
            let value = outcome
                .states
                .iter()
                .find_map(|s| s.reduced_outputs.get(q))
                .map(|v| format!("{:#04x}", v.value()));
            json!({ "q": q, "producers": producers, "value": value })
        })
        .collect();
    let doc = json!({
        "n": n,
        "t": t,
        "seed": seed,
        "signals": outcome.transcript.signals.len(),
        "total_bits": outcome.transcript.total_bits(),
        "measured_load": rational_json(&outcome.measured_load),
        "predicted_load": rational_json(&outcome.predicted_load),
        "load_identity": outcome.load_matches(),
        "verification_pass": outcome.report.pass(),
        "functions": functions,
    });
    Ok(doc.to_string())
}

fn load_curves_impl(b_min: u64, b_max: u64) -> Result<String, String> {
    if b_min < 3 || b_max < b_min || b_max > 60 {
        return Err("need 3 <= b_min <= b_max <= 60".to_string());
    }
    let rows = fig2_rows(b_min, b_max).map_err(|e| e.to_string())?;
    let fig2: Vec<Value> = rows
        .iter()
        .map(|row| {
            json!({
                "b": row.b,
                "jiang": row.l_jiang.to_f64(),
                "jiang_frac": format!("{}/{}", row.l_jiang.numer(), row.l_jiang.denom()),
                "ours": row.l_our.to_f64(),
                "ours_frac": format!("{}/{}", row.l_our.numer(), row.l_our.denom()),
            })
        })
        .collect();
    let ratio_trend: Vec<Value> = [3u64, 5, 7, 11, 13]
        .iter()
        .map(|&p| {
            let fp = FamilyParams::new(p, 2, vec![1, 0]).expect("family params valid");
            let ratio = asymptotic_ratio(&fp).expect("admissible for p >= 3");
            json!({
                "p": p,
                "ratio": ratio.to_f64(),
                "frac": format!("{}/{}", ratio.numer(), ratio.denom()),
            })
        })
        .collect();
    Ok(json!({ "fig2": fig2, "ratio_trend": ratio_trend }).to_string())
}

/// Placement, assignment, and every coded-signal expression for (n, t).
#[wasm_bindgen]
pub fn plan_overview(n: u32, t: u32) -> Result<String, JsError> {
    plan_overview_impl(n, t).map_err(|e| JsError::new(&e))
}

/// Full map/shuffle/reduce run with oracle verification.
#[wasm_bindgen]
pub fn simulate(n: u32, t: u32, seed: u64) -> Result<String, JsError> {
    simulate_impl(n, t, seed).map_err(|e| JsError::new(&e))
}

/// The two comparison curves plus the optimality-ratio trend.
#[wasm_bindgen]
pub fn load_curves(b_min: u64, b_max: u64) -> Result<String, JsError> {
    load_curves_impl(b_min, b_max).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_overview_shape() {
        let text = plan_overview_impl(6, 4).unwrap();
        let doc: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["load"]["num"], "1");
        assert_eq!(doc["load"]["den"], "3");
        assert_eq!(doc["li_load"]["num"], "22");
        assert_eq!(doc["nodes"].as_array().unwrap().len(), 6);
        assert_eq!(
            doc["nodes"][0]["signals"][1]["expr"],
            "v[5,0] + v[5,1] + v[5,2] + v[5,3]"
        );
    }

    #[test]
    fn simulate_shape() {
        let text = simulate_impl(6, 4, 7).unwrap();
        let doc: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["verification_pass"], true);
        assert_eq!(doc["load_identity"], true);
        assert_eq!(doc["functions"].as_array().unwrap().len(), 6);
        assert_eq!(doc["functions"][0]["producers"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn load_curves_shape() {
        let text = load_curves_impl(3, 9).unwrap();
        let doc: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["fig2"].as_array().unwrap().len(), 7);
        assert_eq!(doc["fig2"][0]["ours_frac"], "4/13");
        assert_eq!(doc["ratio_trend"].as_array().unwrap().len(), 5);
        let first = doc["ratio_trend"][0]["ratio"].as_f64().unwrap();
        assert!((first - 0.8220).abs() < 1e-3);
    }

    #[test]
    fn errors_surface_as_messages() {
        assert!(plan_overview_impl(5, 3).unwrap_err().contains("3t >= 2n"));
        assert!(load_curves_impl(2, 9).is_err());
        assert!(plan_overview_impl(80, 60).unwrap_err().contains("caps n"));
    }
}
