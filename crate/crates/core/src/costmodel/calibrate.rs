use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Least-squares line from predicted FLOPs to measured seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationModel {
    /// Seconds per FLOP.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
    #[serde(default)]
    pub machine: String,
}

/// Fits `seconds = slope * flop + intercept` by ordinary least squares.
pub fn calibrate(samples: &[(f64, f64)]) -> Result<CalibrationModel> {
    if samples.len() < 3 {
        return Err(Error::Calibration(format!("need at least 3 samples, got {}", samples.len())));
    }
    if samples.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Calibration("samples must be finite".into()));
    }
    let mut xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 3 {
        return Err(Error::Calibration(format!(
            "need at least 3 distinct predicted FLOP values, got {}",
            xs.len()
        )));
    }

    let n = samples.len() as f64;
    let mx = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in samples {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    if !(slope > 0.0) {
        return Err(Error::Calibration(format!(
            "fitted slope {slope:e} is not positive; measured time does not grow with predicted cost"
        )));
    }
    let intercept = my - slope * mx;
    let ss_res: f64 = samples
        .iter()
        .map(|&(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(CalibrationModel {
        slope,
        intercept,
        r_squared,
        samples: samples.len(),
        machine: String::new(),
    })
}

/// `slope * flops + intercept`, floored at zero.
pub fn predict_time(model: &CalibrationModel, flops: f64) -> f64 {
    (model.slope * flops + model.intercept).max(0.0)
}

impl CalibrationModel {
    pub fn with_machine(mut self, machine: impl Into<String>) -> Self {
        self.machine = machine.into();
        self
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let m: CalibrationModel = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if !(m.slope > 0.0) || !m.intercept.is_finite() {
            return Err(Error::Calibration(format!("stored model has slope {:e}", m.slope)));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        CalibrationModel::from_toml(&text)
    }
}
