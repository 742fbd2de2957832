//! Browser bindings: load a space description, embed it, complete it and
//! trace bounded generators. Every export returns a JSON string.

use serde_json::{json, Value};
use sikorski::compactify::boundize as boundize_at;
use sikorski::completion::{complete as complete_space, Placement};
use sikorski::space::{embed as embed_space, sample, separates_points, DiffSpace, Separation, SmoothFunction};
use sikorski::specfile::{load_spec_str, Entry, SpecFile};
use wasm_bindgen::prelude::*;

pub const BUNDLED: &[(&str, &str)] = &[
    ("real_line_atan", include_str!("../../cli/specs/real_line_atan.spec")),
    ("spiral", include_str!("../../cli/specs/spiral.spec")),
    ("rationals_sqrt2", include_str!("../../cli/specs/rationals_sqrt2.spec")),
    ("unit_interval_compact", include_str!("../../cli/specs/unit_interval_compact.spec")),
    ("parabola_refinement", include_str!("../../cli/specs/parabola_refinement.spec")),
    ("plane_square", include_str!("../../cli/specs/plane_square.spec")),
];

fn load(text: &str) -> Result<SpecFile, String> {
    load_spec_str(text).map_err(|e| e.to_string())
}

/// The family named in the experiment section for `command`, if any.
fn experiment_space(spec: &SpecFile, command: &str) -> Result<DiffSpace, String> {
    let Some(e) = spec.experiment(command).and_then(|x| x.get("family")) else {
        return Ok(spec.space.clone());
    };
    let names = e.names().map_err(|e| e.to_string())?;
    spec.space.sub_family(&names).map_err(|e| e.to_string())
}

pub fn embed_value(text: &str) -> Result<Value, String> {
    let spec = load(text)?;
    let s = experiment_space(&spec, "embed")?;
    let cloud = embed_space(&s).map_err(|e| e.to_string())?;
    let separates = matches!(separates_points(&s).map_err(|e| e.to_string())?, Separation::Separates);
    Ok(json!({
        "name": s.name,
        "params": s.carrier.params(),
        "generators": cloud.generators,
        "points": cloud.points.iter().map(|p| json!({"params": p.params, "coords": p.coords})).collect::<Vec<_>>(),
        "separates": separates,
    }))
}

pub fn complete_value(text: &str, tol: f64, tail: usize) -> Result<Value, String> {
    let spec = load(text)?;
    let s = experiment_space(&spec, "complete")?;
    let probes: Vec<_> = spec.probes.iter().map(|p| p.to_probe(tail)).collect();
    let cs = complete_space(&s, &probes, tol, tail).map_err(|e| e.to_string())?;
    let outcomes: Vec<Value> = cs
        .outcomes
        .iter()
        .map(|o| {
            let placement = match o.placement {
                Some(Placement::Adjoined(i)) => format!("adjoined {i}"),
                Some(Placement::AtSample(i)) => format!("at sample {i}"),
                Some(Placement::SameAs(i)) => format!("same as adjoined {i}"),
                None => String::new(),
            };
            json!({"probe": o.probe, "status": o.status_label(), "placement": placement})
        })
        .collect();
    Ok(json!({
        "name": s.name,
        "generators": cs.generators(),
        "points": cs.base.points.iter().map(|p| &p.coords).collect::<Vec<_>>(),
        "adjoined": cs.adjoined.iter().map(|a| json!({"probe": a.probe, "limit": a.limit})).collect::<Vec<_>>(),
        "probes": outcomes,
    }))
}

pub fn boundize_value(text: &str, function: &str, center: &str) -> Result<Value, String> {
    let spec = load(text)?;
    let s = &spec.space;
    let f = spec
        .function(function)
        .cloned()
        .or_else(|| s.family.index_of(function).map(|_| SmoothFunction::generator(function)))
        .ok_or_else(|| format!("unknown function `{function}`"))?;
    let c = Entry::detached("center", center).numbers().map_err(|e| e.message)?;
    let b = boundize_at(s, &f, &c).map_err(|e| e.to_string())?;
    let gfam = b.gamma_family(s.family.coords().to_vec()).map_err(|e| e.to_string())?;
    let samples = sample(&s.carrier).map_err(|e| e.to_string())?;
    let mut params = Vec::new();
    let mut gammas = Vec::new();
    let mut fs = Vec::new();
    let mut omegas = Vec::new();
    for p in &samples {
        params.push(p.params.clone());
        gammas.push(gfam.eval_all(&p.ambient).map_err(|e| e.to_string())?);
        fs.push(f.eval(&s.family, &p.ambient).map_err(|e| e.to_string())?);
        omegas.push(b.omega1.eval(&gfam, &p.ambient).map_err(|e| e.to_string())?);
    }
    Ok(json!({
        "alphas": b.alphas,
        "y0": b.y0,
        "mu": b.mu,
        "max_abs_gamma": b.max_abs_gamma,
        "local_residual": b.local_residual,
        "params": params,
        "gammas": gammas,
        "f": fs,
        "omega1": omegas,
    }))
}

fn to_js(v: Result<Value, String>) -> Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn bundled_names() -> String {
    json!(BUNDLED.iter().map(|(n, _)| *n).collect::<Vec<_>>()).to_string()
}

#[wasm_bindgen]
pub fn bundled_spec(name: &str) -> Option<String> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| t.to_string())
}

/// Sampled generator embedding.
#[wasm_bindgen]
pub fn embed(spec: &str) -> Result<String, JsError> {
    to_js(embed_value(spec))
}

/// Completion by every declared probe.
#[wasm_bindgen]
pub fn complete(spec: &str, tol: f64, tail: usize) -> Result<String, JsError> {
    to_js(complete_value(spec, tol, tail))
}

/// Bounded generators of `function` around the parameters in `center`.
#[wasm_bindgen]
pub fn boundize(spec: &str, function: &str, center: &str) -> Result<String, JsError> {
    to_js(boundize_value(spec, function, center))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(name: &str) -> &'static str {
        BUNDLED.iter().find(|(n, _)| *n == name).unwrap().1
    }

    #[test]
    fn embeds_the_spiral() {
        let v = embed_value(spec("spiral")).unwrap();
        assert_eq!(v["generators"], json!(["gx", "gy"]));
        assert_eq!(v["points"].as_array().unwrap().len(), 201);
        assert_eq!(v["separates"], json!(true));
    }

    #[test]
    fn completes_the_atan_line() {
        let v = complete_value(spec("real_line_atan"), 1e-4, 50).unwrap();
        let adj = v["adjoined"].as_array().unwrap();
        assert_eq!(adj.len(), 2);
        let up = adj[0]["limit"][0].as_f64().unwrap();
        assert!((up - std::f64::consts::FRAC_PI_2).abs() < 1e-3);
    }

    #[test]
    fn bounded_identity_curve() {
        let v = boundize_value(spec("real_line_atan"), "f", "0").unwrap();
        assert_eq!(v["mu"], json!([2.0]));
        let g: Vec<f64> = v["gammas"].as_array().unwrap().iter().map(|r| r[0].as_f64().unwrap()).collect();
        assert!(g.iter().all(|x| x.abs() <= 1.0));
        assert_eq!(g.len(), 1001);
    }

    #[test]
    fn errors_are_messages() {
        let e = embed_value("[space]\nparams = t\n").unwrap_err();
        assert!(e.contains("domain"), "{e}");
        assert!(boundize_value(spec("real_line_atan"), "nope", "0").unwrap_err().contains("unknown function"));
    }
}
