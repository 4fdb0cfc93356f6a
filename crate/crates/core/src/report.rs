//! JSON run report written next to every CLI output.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tv_dual::{GChoice, LambdaMode, MuMode, SolverConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub config: ConfigEcho,
    /// Command-specific parameters (beta, levels, noise sigma, seed, ...).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, serde_json::Value>,
    pub images: Vec<ImageReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum LambdaEcho {
    Constant(f64),
    Provided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub theta: f64,
    pub epsilon: f64,
    pub inner_iters: usize,
    pub dual_dt: f64,
    pub g: GChoice,
    pub mu: MuMode,
    pub lambda: LambdaEcho,
    pub max_outer: usize,
    pub diffusion_dt: f64,
    pub dx: f64,
    pub diffusion_steps: usize,
}

impl From<&SolverConfig> for ConfigEcho {
    fn from(c: &SolverConfig) -> Self {
        Self {
            theta: c.theta,
            epsilon: c.epsilon,
            inner_iters: c.inner_iters,
            dual_dt: c.dual_dt,
            g: c.g_choice,
            mu: c.mu_mode,
            lambda: match &c.lambda_mode {
                LambdaMode::Constant(l) => LambdaEcho::Constant(*l),
                LambdaMode::Field(_) => LambdaEcho::Provided,
            },
            max_outer: c.max_outer,
            diffusion_dt: c.diffusion_dt,
            dx: c.dx,
            diffusion_steps: c.diffusion_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityMetrics {
    /// `f64::INFINITY` for identical images, written as `"inf"`.
    #[serde(with = "db")]
    pub psnr_db: f64,
    pub mssim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleReport {
    pub mu: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ImageReport {
    pub input: String,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_s: f64,
    /// One trace per channel (or per scale for multiscale runs).
    pub energy_trace: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<QualityMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noisy_metrics: Option<QualityMetrics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scales: Vec<ScaleReport>,
    pub outputs: Vec<String>,
}

impl RunReport {
    pub fn new(command: &str, config: &SolverConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config: config.into(),
            params: BTreeMap::new(),
            images: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::Image {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}

mod db {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(de::Error::custom(format!("invalid dB value {t:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn infinite_psnr_is_a_string() {
        let m = QualityMetrics {
            psnr_db: f64::INFINITY,
            mssim: 1.0,
        };
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(text, r#"{"psnr_db":"inf","mssim":1.0}"#);
        assert_eq!(serde_json::from_str::<QualityMetrics>(&text).unwrap(), m);
    }

    #[test]
    fn schema_version_is_written() {
        let r = RunReport::new("decompose", &SolverConfig::default());
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["config"]["lambda"]["value"], 0.5);
        assert_eq!(v["config"]["mu"]["mode"], "constant");
    }

    proptest! {
        #[test]
        fn report_round_trips(
            trace in prop::collection::vec(-1e6f64..1e6, 0..20),
            psnr in prop_oneof![Just(f64::INFINITY), 0.0f64..80.0],
            mssim in -1.0f64..=1.0,
            time in 0.0f64..100.0,
            iterations in 0usize..1000,
        ) {
            let mut r = RunReport::new("denoise-bench", &SolverConfig {
                mu_mode: MuMode::mu1(),
                ..Default::default()
            });
            r.params.insert("seed".into(), serde_json::json!(7u64));
            r.images.push(ImageReport {
                input: "a.png".into(),
                width: 3,
                height: 4,
                channels: 1,
                iterations,
                converged: iterations % 2 == 0,
                wall_time_s: time,
                energy_trace: vec![trace],
                metrics: Some(QualityMetrics { psnr_db: psnr, mssim }),
                noisy_metrics: None,
                scales: vec![],
                outputs: vec!["a_u.png".into()],
            });
            let back = RunReport::from_json(&r.to_json()).unwrap();
            prop_assert_eq!(back, r);
        }
    }
}
