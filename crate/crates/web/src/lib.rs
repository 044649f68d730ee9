//! Browser bindings for three small demos: sampling a feature geometry with
//! its halfspace depths, packing caps on the circle, and building a flat
//! interpolator on circle data.
//!
//! Every export returns a JSON string so the page needs no generated glue
//! types. Errors come back as `{"error": "..."}`.

use geolab::data::{sample_features, DistSpec, MixtureSpec};
use geolab::depth::{DepthIndex, DepthOptions};
use geolab::flatnet::build_flat_interpolator;
use geolab::numerics::SeedSpec;
use geolab::shatter::pack_caps;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Sample {
    /// (x, y) of each point: the first two coordinates.
    points: Vec<[f64; 2]>,
    depth: Vec<f64>,
}

#[derive(Serialize)]
struct Packing {
    theta: f64,
    angles: Vec<f64>,
    count: usize,
    /// ⌊π/θ⌋, the largest possible count on the circle.
    max_count: usize,
}

#[derive(Serialize)]
struct Flat {
    angles: Vec<f64>,
    labels: Vec<f64>,
    /// Network output on a fine grid of angles.
    curve: Vec<[f64; 2]>,
    width: usize,
    lambda_max: f64,
    bound: f64,
    max_interp_error: f64,
}

fn json<T: Serialize>(r: geolab::Result<T>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e.to_string()),
    }
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

fn dist(kind: &str, alpha: f64, lines: usize, seed: u64) -> geolab::Result<DistSpec> {
    let spec = match kind {
        "beta_radial" => DistSpec::BetaRadial { d: 2, alpha },
        "lines" => DistSpec::MixtureBalls(MixtureSpec::uniform(2, 1, lines, seed)),
        "ball" => DistSpec::Ball { d: 2 },
        "sphere" => DistSpec::Sphere { d: 2 },
        "gaussian" => DistSpec::Gaussian { d: 2 },
        other => return Err(geolab::Error::Spec(format!("unknown geometry `{other}`"))),
    };
    spec.validate()?;
    Ok(spec)
}

/// `n` planar points of a geometry together with their approximate Tukey depths.
#[wasm_bindgen]
pub fn sample_with_depth(kind: &str, n: usize, alpha: f64, lines: usize, seed: u64) -> String {
    json((|| {
        let spec = dist(kind, alpha, lines, seed)?;
        let data = sample_features(&spec, n, SeedSpec::new(seed, 1))?;
        let index = DepthIndex::new(&data, &DepthOptions::default())?;
        let x = data.features();
        let mut points = Vec::with_capacity(n);
        let mut depth = Vec::with_capacity(n);
        for row in x.rows() {
            points.push([row[0], row[1]]);
            depth.push(index.depth(row.as_slice().expect("row-major features"))?);
        }
        Ok(Sample { points, depth })
    })())
}

/// Disjoint caps of Euclidean radius `eps` on the unit circle.
#[wasm_bindgen]
pub fn circle_packing(eps: f64, seed: u64) -> String {
    json((|| {
        let p = pack_caps(2, eps, SeedSpec::new(seed, 2), None)?;
        let angles = p.centers.iter().map(|c| c[1].atan2(c[0])).collect();
        Ok(Packing {
            theta: p.theta,
            count: p.len(),
            max_count: (std::f64::consts::PI / p.theta).floor() as usize,
            angles,
        })
    })())
}

/// Flat interpolator of `n` random points on the circle with labels in [−1, 1].
#[wasm_bindgen]
pub fn flat_interpolator(n: usize, with_bias: bool, seed: u64) -> String {
    json((|| {
        use rand::Rng;
        let x = sample_features(&DistSpec::Sphere { d: 2 }, n, SeedSpec::new(seed, 3))?;
        let mut rng = SeedSpec::new(seed, 4).rng();
        let y = ndarray::Array1::from_shape_simple_fn(n, || rng.random_range(-1.0..=1.0));
        let data = x.with_labels(y.clone(), None)?;
        let rep = build_flat_interpolator(&data, with_bias)?;
        let grid = 720;
        let ts: Vec<f64> = (0..grid).map(|i| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / grid as f64).collect();
        let pts = ndarray::Array2::from_shape_fn((grid, 2), |(i, j)| if j == 0 { ts[i].cos() } else { ts[i].sin() });
        let f = rep.net.forward(pts.view())?;
        let feats = data.features();
        Ok(Flat {
            angles: feats.rows().into_iter().map(|r| r[1].atan2(r[0])).collect(),
            labels: y.to_vec(),
            curve: ts.iter().zip(f.iter()).map(|(&t, &v)| [t, v]).collect(),
            width: rep.width,
            lambda_max: rep.lambda_max().max(rep.lambda_max_blocks),
            bound: rep.bound_rhs,
            max_interp_error: rep.max_interp_error,
        })
    })())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exports_return_json() {
        let s: serde_json::Value = serde_json::from_str(&sample_with_depth("lines", 50, 1.0, 3, 1)).unwrap();
        assert_eq!(s["points"].as_array().unwrap().len(), 50);
        let p: serde_json::Value = serde_json::from_str(&circle_packing(0.3, 1)).unwrap();
        assert!(p["count"].as_u64().unwrap() <= p["max_count"].as_u64().unwrap());
        let f: serde_json::Value = serde_json::from_str(&flat_interpolator(40, true, 1)).unwrap();
        assert!(f["lambda_max"].as_f64().unwrap() <= f["bound"].as_f64().unwrap() + 1e-6);
    }

    #[test]
    fn errors_are_reported_as_json() {
        let e: serde_json::Value = serde_json::from_str(&sample_with_depth("torus", 5, 1.0, 1, 0)).unwrap();
        assert!(e["error"].as_str().unwrap().contains("torus"));
    }
}
