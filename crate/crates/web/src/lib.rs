//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export returns a JSON string. The plain-Rust functions in [`demo`]
//! do the work and are what the native tests call.

use wasm_bindgen::prelude::*;

pub mod demo;

/// Optimizer run on a 2-D benchmark; JSON with `bounds`, `history`, `frames` and `best`.
#[wasm_bindgen(js_name = runOptimizer)]
pub fn run_optimizer(
    method: &str,
    function: &str,
    generations: u32,
    pop_size: u32,
    seed: u32,
) -> Result<String, JsValue> {
    demo::run_optimizer(
        method,
        function,
        generations as usize,
        pop_size as usize,
        seed as u64,
    )
    .map_err(|e| JsValue::from_str(&e))
}

/// `resolution x resolution` grid of `log10(1 + f)` over the function's box.
#[wasm_bindgen]
pub fn landscape(function: &str, resolution: u32) -> Result<String, JsValue> {
    demo::landscape(function, resolution as usize).map_err(|e| JsValue::from_str(&e))
}

/// Trains a small GRU on generated load and forecasts one test day.
#[wasm_bindgen(js_name = forecastDemo)]
pub fn forecast_demo(
    hours: u32,
    batch_size: u32,
    epochs: u32,
    learning_rate: f64,
    seed: u32,
) -> Result<String, JsValue> {
    demo::forecast_demo(
        hours as usize,
        batch_size as usize,
        epochs as usize,
        learning_rate,
        seed as u64,
    )
    .map_err(|e| JsValue::from_str(&e))
}
