use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Features, labels and the bounds the theory is stated in terms of.
///
/// `radius` and `label_bound` are always the exact maxima over the rows; they are
/// recomputed whenever features or labels change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Array1<f64>,
    radius: f64,
    label_bound: f64,
    component: Option<Vec<usize>>,
    clean_labels: Option<Array1<f64>>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Array1<f64>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::Arity(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if features.iter().chain(labels.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("dataset contains non-finite values".into()));
        }
        let radius = max_row_norm(features.view());
        let label_bound = labels.iter().fold(0.0f64, |m, y| m.max(y.abs()));
        Ok(Self {
            features,
            labels,
            radius,
            label_bound,
            component: None,
            clean_labels: None,
        })
    }

    /// Features with all-zero labels; used by samplers before labelling.
    pub fn features_only(features: Array2<f64>) -> Result<Self> {
        let n = features.nrows();
        Self::new(features, Array1::zeros(n))
    }

    pub fn with_components(mut self, component: Vec<usize>) -> Result<Self> {
        if component.len() != self.n() {
            return Err(Error::Arity("component index length differs from sample count".into()));
        }
        self.component = Some(component);
        Ok(self)
    }

    /// Replace labels (and optionally attach noiseless teacher values).
    pub fn with_labels(mut self, labels: Array1<f64>, clean: Option<Array1<f64>>) -> Result<Self> {
        if labels.len() != self.n() || clean.as_ref().is_some_and(|c| c.len() != self.n()) {
            return Err(Error::Arity("label length differs from sample count".into()));
        }
        if labels.iter().chain(clean.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("labels contain non-finite values".into()));
        }
        self.label_bound = labels.iter().fold(0.0f64, |m, y| m.max(y.abs()));
        self.labels = labels;
        self.clean_labels = clean;
        Ok(self)
    }

    /// Multiply every feature by `scale`.
    pub fn scaled(mut self, scale: f64) -> Result<Self> {
        if !scale.is_finite() {
            return Err(Error::Domain(format!("non-finite feature scale {scale}")));
        }
        self.features.mapv_inplace(|x| x * scale);
        self.radius = max_row_norm(self.features.view());
        Ok(self)
    }

    /// Rows selected by `idx`, keeping labels, clean labels and components aligned.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let features = self.features.select(ndarray::Axis(0), idx);
        let labels = self.labels.select(ndarray::Axis(0), idx);
        let mut out = Dataset::new(features, labels)?;
        out.clean_labels = self.clean_labels.as_ref().map(|c| c.select(ndarray::Axis(0), idx));
        out.component = self.component.as_ref().map(|c| idx.iter().map(|&i| c[i]).collect());
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> ArrayView1<'_, f64> {
        self.labels.view()
    }

    /// max_i ||x_i||
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// max_i |y_i|
    pub fn label_bound(&self) -> f64 {
        self.label_bound
    }

    pub fn component(&self) -> Option<&[usize]> {
        self.component.as_deref()
    }

    pub fn clean_labels(&self) -> Option<ArrayView1<'_, f64>> {
        self.clean_labels.as_ref().map(|c| c.view())
    }
}

fn max_row_norm(x: ArrayView2<'_, f64>) -> f64 {
    x.rows()
        .into_iter()
        .map(|r| r.dot(&r).sqrt())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn bounds_are_row_maxima() {
        let ds = Dataset::new(array![[3.0, 4.0], [0.0, 1.0]], array![-2.0, 1.5]).unwrap();
        assert_eq!(ds.radius(), 5.0);
        assert_eq!(ds.label_bound(), 2.0);
        let ds = ds.with_labels(array![0.5, -0.25], None).unwrap();
        assert_eq!(ds.label_bound(), 0.5);
        let ds = ds.scaled(0.5).unwrap();
        assert_eq!(ds.radius(), 2.5);
    }

    #[test]
    fn rejects_mismatch_and_nan() {
        assert!(Dataset::new(array![[1.0]], array![1.0, 2.0]).is_err());
        assert!(Dataset::new(array![[f64::NAN]], array![1.0]).is_err());
    }
}
