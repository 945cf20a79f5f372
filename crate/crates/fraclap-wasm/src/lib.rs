//! wasm-bindgen bindings for the browser demo. Three interactive views:
//! the (k, γ) admissibility sign map, per-mode extension profiles with the
//! recovered Neumann trace, and the spectral-vs-P.V. comparison on a
//! periodized Gaussian. Each export returns a JSON payload; the page in
//! `www/` does the plotting.

use fraclap_core::extension::{solve_mode, MeshSpec};
use fraclap_core::gamma::{admissible, SignOutcome};
use fraclap_core::grid::periodized_gaussian;
use fraclap_core::spectral::{apply_pv, apply_spectral, MultiplierSpec};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn err_json(e: impl std::fmt::Display) -> String {
    json!({ "error": e.to_string() }).to_string()
}

/// Sign of the admissibility ratio over k ∈ [0, n) and a γ grid in (0, n/2):
/// rows of {k, gamma, sign, simple_bound}.
#[wasm_bindgen]
pub fn admissibility_map(n: u32, gamma_steps: usize) -> String {
    if n < 2 || n > 24 || gamma_steps < 2 || gamma_steps > 400 {
        return err_json("admissibility_map: need 2 <= n <= 24, 2 <= gamma_steps <= 400");
    }
    let mut rows = Vec::new();
    for k in 0..n {
        for i in 0..gamma_steps {
            let g = (i as f64 + 0.5) / gamma_steps as f64 * (n as f64 / 2.0 - 0.02) + 0.01;
            match admissible(n, k, g) {
                Ok(r) => rows.push(json!({
                    "k": k,
                    "gamma": g,
                    "sign": match r.ratio_sign {
                        SignOutcome::Positive => 1,
                        SignOutcome::Negative => -1,
                        SignOutcome::Indeterminate => 0,
                    },
                    "simple_bound": r.simple_bound_holds,
                })),
                Err(e) => return err_json(e),
            }
        }
    }
    json!({ "n": n, "rows": rows }).to_string()
}

/// Extension profile U(x) for one mode plus the extrapolated weighted
/// Neumann trace and the |η|^{2γ} reference.
#[wasm_bindgen]
pub fn extension_profile(gamma: f64, eta: f64, nodes: usize) -> String {
    let mesh = MeshSpec {
        nodes: nodes.clamp(200, 20000),
        ..Default::default()
    };
    match solve_mode(eta, gamma, &mesh, 1.0) {
        Ok(p) => {
            // thin the profile for plotting
            let step = (p.x_nodes.len() / 400).max(1);
            let xs: Vec<f64> = p.x_nodes.iter().step_by(step).cloned().collect();
            let us: Vec<f64> = p.u_values.iter().step_by(step).cloned().collect();
            json!({
                "gamma": gamma,
                "eta": eta,
                "x": xs,
                "u": us,
                "dtn": p.dtn_value,
                "reference": -eta.abs().powf(2.0 * gamma),
            })
            .to_string()
        }
        Err(e) => err_json(e),
    }
}

/// Spectral vs P.V. application of Δ^γ on a 1-D periodized Gaussian:
/// curves plus the maximum relative deviation at the compared points.
#[wasm_bindgen]
pub fn spectral_vs_pv(gamma: f64, points: usize, sigma: f64) -> String {
    let pts = points.clamp(32, 1024);
    if !(gamma > 0.0 && gamma < 1.0) {
        return err_json("spectral_vs_pv: gamma must lie in (0,1)");
    }
    if !(sigma > 0.05 && sigma < 1.5) {
        return err_json("spectral_vs_pv: sigma must lie in (0.05, 1.5)");
    }
    let l = 2.0 * std::f64::consts::PI;
    let field = periodized_gaussian(1, pts, sigma, l);
    let spectral = match apply_spectral(&field, &MultiplierSpec::new(gamma)) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let refmax = spectral.max_abs();
    let n_pv = 32.min(pts);
    let mut pv_x = Vec::with_capacity(n_pv);
    let mut pv_y = Vec::with_capacity(n_pv);
    let mut maxdev: f64 = 0.0;
    for i in 0..n_pv {
        let j = i * pts / n_pv;
        match apply_pv(&field, gamma, &[j]) {
            Ok(v) => {
                pv_x.push(j as f64 * l / pts as f64);
                pv_y.push(v.value_re);
                maxdev = maxdev.max((v.value_re - spectral.values()[j].re).abs() / refmax);
            }
            Err(e) => return err_json(e),
        }
    }
    let xs: Vec<f64> = (0..pts).map(|j| j as f64 * l / pts as f64).collect();
    json!({
        "gamma": gamma,
        "sigma": sigma,
        "x": xs,
        "input": field.values().iter().map(|v| v.re).collect::<Vec<_>>(),
        "spectral": spectral.values().iter().map(|v| v.re).collect::<Vec<_>>(),
        "pv_x": pv_x,
        "pv_y": pv_y,
        "max_rel_deviation": maxdev,
    })
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payloads_are_valid_json() {
        let m: serde_json::Value = serde_json::from_str(&admissibility_map(6, 24)).unwrap();
        assert_eq!(m["rows"].as_array().unwrap().len(), 6 * 24);
        let p: serde_json::Value =
            serde_json::from_str(&extension_profile(0.5, 2.0, 2000)).unwrap();
        assert!((p["dtn"].as_f64().unwrap() + 2.0).abs() < 1e-3);
        let s: serde_json::Value = serde_json::from_str(&spectral_vs_pv(0.5, 128, 0.8)).unwrap();
        assert!(s["max_rel_deviation"].as_f64().unwrap() < 1e-3);
    }

    #[test]
    fn bad_inputs_return_error_payloads() {
        let m: serde_json::Value = serde_json::from_str(&admissibility_map(1, 10)).unwrap();
        assert!(m.get("error").is_some());
        let s: serde_json::Value = serde_json::from_str(&spectral_vs_pv(1.5, 128, 0.8)).unwrap();
        assert!(s.get("error").is_some());
    }
}
