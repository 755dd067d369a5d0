//! Browser bindings: a counterexample table, the parameter classifier and a
//! small truncation experiment. Every export returns a JSON string.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use fspace_core::grid::{generate_corpus, CorpusSpec, GeneratorKind};
use fspace_core::norms::{self, NormKind};
use fspace_core::spaces;
use fspace_core::truncation_lab;
use fspace_core::{GridBox, SpaceParams};

/// Largest grid level the demo accepts; keeps the page responsive.
pub const MAX_DEMO_LEVEL: u32 = 12;

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("demo values serialize")
}

fn space(text: &str) -> Result<SpaceParams, String> {
    text.trim().parse().map_err(|e: fspace_core::Error| e.to_string())
}

/// Rows `{j, norm_f, norm_abs, ratio}` for `j = 0..=jmax` in dimension one.
pub fn counterexample_rows(s: f64, p: f64, q: f64, jmax: u32) -> Result<String, String> {
    if jmax > 16 {
        return Err("jmax must be at most 16".into());
    }
    let rows = truncation_lab::counterexample_scaling(s, p, q, 1, jmax).map_err(|e| e.to_string())?;
    Ok(json(&rows))
}

/// Truncation verdict with citations for a `B:s:p:q:n` string.
pub fn classify(text: &str) -> Result<String, String> {
    let sp = space(text)?;
    spaces::truncation_verdict(&sp).map(|v| json(&v)).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Demo {
    x: Vec<f64>,
    f: Vec<f64>,
    abs_f: Vec<f64>,
    norm_f: f64,
    norm_abs: f64,
    ratio: f64,
    kind: &'static str,
    flags: Vec<String>,
}

/// One seeded function, its modulus and both norms.
pub fn truncation_run(text: &str, kind: &str, generator: &str, seed: u64, level: u32) -> Result<String, String> {
    let sp = space(text)?;
    if sp.n != 1 {
        return Err("the demo draws one-dimensional functions; use n = 1".into());
    }
    if level > MAX_DEMO_LEVEL {
        return Err(format!("level must be at most {MAX_DEMO_LEVEL}"));
    }
    let kind: NormKind = kind.parse().map_err(|e: fspace_core::Error| e.to_string())?;
    let generator: GeneratorKind = serde_json::from_value(serde_json::Value::String(generator.into()))
        .map_err(|_| format!("unknown generator `{generator}`"))?;
    let spec = CorpusSpec::new(seed, 1, generator).with_zero_mean(true);
    let f = generate_corpus(&spec, level, &GridBox::unit(1), 1)
        .map_err(|e| e.to_string())?
        .remove(0);
    let a = f.abs();
    let nf = norms::evaluate(kind, &f, &sp).map_err(|e| e.to_string())?;
    let na = norms::evaluate(kind, &a, &sp).map_err(|e| e.to_string())?;
    let x = (0..f.len()).map(|i| f.node_coords(i)[0]).collect();
    Ok(json(&Demo {
        x,
        f: f.samples().to_vec(),
        abs_f: a.samples().to_vec(),
        norm_f: nf.value,
        norm_abs: na.value,
        ratio: if nf.value > 0.0 { na.value / nf.value } else { f64::NAN },
        kind: kind.name(),
        flags: nf.flags,
    }))
}

#[wasm_bindgen]
pub fn counterexample_table(s: f64, p: f64, q: f64, jmax: u32) -> Result<String, JsValue> {
    counterexample_rows(s, p, q, jmax).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn classify_point(space: &str) -> Result<String, JsValue> {
    classify(space).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn truncation_demo(space: &str, kind: &str, generator: &str, seed: u32, level: u32) -> Result<String, JsValue> {
    truncation_run(space, kind, generator, u64::from(seed), level).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_follows_power_law() {
        let rows: serde_json::Value = serde_json::from_str(&counterexample_rows(0.5, 2.0, 2.0, 4).unwrap()).unwrap();
        let last = &rows.as_array().unwrap()[4];
        assert!((last["ratio"].as_f64().unwrap() - 4.0).abs() < 1e-12);
        assert!(counterexample_rows(0.5, 2.0, 2.0, 40).is_err());
    }

    #[test]
    fn classify_reports_errors_as_text() {
        let v: serde_json::Value = serde_json::from_str(&classify("B:0.75:2:2:1").unwrap()).unwrap();
        assert_eq!(v["perfect"], "yes");
        assert!(classify("B:0.75:2").unwrap_err().contains("B:s:p:q:n"));
    }

    #[test]
    fn demo_is_seeded_and_consistent() {
        let a = truncation_run("B:0.75:2:2:1", "faber-b", "piecewise-linear-random-knots", 7, 8).unwrap();
        let b = truncation_run("B:0.75:2:2:1", "faber-b", "piecewise-linear-random-knots", 7, 8).unwrap();
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["x"].as_array().unwrap().len(), 257);
        let ratio = v["norm_abs"].as_f64().unwrap() / v["norm_f"].as_f64().unwrap();
        assert!((ratio - v["ratio"].as_f64().unwrap()).abs() < 1e-12);
        assert!(truncation_run("B:0.75:2:2:2", "osc-b", "haar-step", 1, 4).is_err());
        assert!(truncation_run("B:0.75:2:2:1", "osc-b", "spline", 1, 4).is_err());
        assert!(truncation_run("B:0.75:2:2:1", "osc-b", "haar-step", 1, 20).is_err());
    }
}
