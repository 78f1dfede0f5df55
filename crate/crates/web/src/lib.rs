//! Browser bindings for the interactive demo in `www/`.
//!
//! Every export returns a flat `Float64Array` that the page plots directly.

use roml::delayed::run_sim_delayed;
use roml::experts::{expected_tau_exact, run_birthday, FtlState};
use roml::harness::{generate_instance, GeneratedInstance, GeneratorKind, InstanceSpec};
use roml::switching::run_sse;
use roml::LossInstance;
use wasm_bindgen::prelude::*;

const MAX_HORIZON: usize = 1 << 16;

fn check_horizon(t: usize) -> Result<(), String> {
    if (2..=MAX_HORIZON).contains(&t) {
        Ok(())
    } else {
        Err(format!("T must lie in 2..={MAX_HORIZON}"))
    }
}

fn loss_instance(spec: &InstanceSpec) -> Result<LossInstance, String> {
    match generate_instance(spec).map_err(|e| e.to_string())? {
        GeneratedInstance::Losses(i) => Ok(i),
        _ => Err("generator does not produce loss vectors".into()),
    }
}

/// `[T_1, E[tau]_1 / sqrt(T_1), T_2, ...]` on `points` log-spaced horizons up to `max_t`.
pub fn tau_curve(max_t: usize, points: usize) -> Result<Vec<f64>, String> {
    check_horizon(max_t)?;
    let points = points.clamp(2, 200);
    let mut out = Vec::with_capacity(2 * points);
    let mut last = 0;
    for j in 0..points {
        let t = ((max_t as f64).ln() * j as f64 / (points - 1) as f64).exp().round() as usize;
        if t <= last {
            continue;
        }
        last = t;
        let tau = expected_tau_exact(t).map_err(|e| e.to_string())?;
        out.extend([t as f64, tau / (t as f64).sqrt()]);
    }
    Ok(out)
}

/// Birthday-Test cumulative regret on the adversarial instance, then on the
/// i.i.d. instance, concatenated (`2T` values). The last two entries are the
/// stopping times (`-1` when the test never fired).
pub fn separation(t: usize, seed: u64) -> Result<Vec<f64>, String> {
    check_horizon(t)?;
    let mut out = Vec::with_capacity(2 * t + 2);
    let mut stops = Vec::new();
    for generator in [GeneratorKind::BirthdayAdversarial, GeneratorKind::IidUniformSupport] {
        let mut spec = InstanceSpec::new(generator, t);
        spec.seed = seed;
        let report = run_birthday(&loss_instance(&spec)?, seed).map_err(|e| e.to_string())?;
        out.extend(&report.trajectory);
        stops.push(report.stop_time.map_or(-1.0, |s| s as f64));
    }
    out.extend(stops);
    Ok(out)
}

/// Cumulative regret of the delayed-feedback simulation (`T` values) and of
/// successive elimination with switching costs (`T` values) on one gap instance.
pub fn block_learners(t: usize, k: usize, gap: f64, delay: usize, seed: u64) -> Result<Vec<f64>, String> {
    check_horizon(t)?;
    let mut spec = InstanceSpec::new(GeneratorKind::GapBandit, t);
    spec.actions = k;
    spec.gap = gap;
    spec.seed = seed;
    let inst = loss_instance(&spec)?;
    let delayed = run_sim_delayed(&inst, delay, FtlState::new, seed).map_err(|e| e.to_string())?;
    let sse = run_sse(&inst, seed).map_err(|e| e.to_string())?;
    let mut out = delayed.report.trajectory;
    out.extend(sse.report.trajectory);
    Ok(out)
}

#[wasm_bindgen(js_name = tauCurve)]
pub fn tau_curve_js(max_t: usize, points: usize) -> Result<Vec<f64>, JsValue> {
    tau_curve(max_t, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = separation)]
pub fn separation_js(t: usize, seed: u32) -> Result<Vec<f64>, JsValue> {
    separation(t, seed.into()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = blockLearners)]
pub fn block_learners_js(t: usize, k: usize, gap: f64, delay: usize, seed: u32) -> Result<Vec<f64>, JsValue> {
    block_learners(t, k, gap, delay, seed.into()).map_err(|e| JsValue::from_str(&e))
}
