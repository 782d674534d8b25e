use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::aero::{coefficients, integrate_forces, Atmosphere, InflowConditions, SurfaceField};
use crate::geometry::{loft_wing, planform_area, MeshResolution, WingDesign};

use super::{Prediction, Provenance, Surrogate, SurrogateError};

fn default_timeout() -> f64 {
    30.0
}

fn default_retries() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    100
}

fn default_low() -> MeshResolution {
    MeshResolution::new(24, 12)
}

fn default_high() -> MeshResolution {
    MeshResolution::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    /// Base URL; requests go to `{endpoint}/predict`.
    pub endpoint: String,
    /// Per-attempt timeout in seconds.
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    /// Extra attempts after the first failure.
    #[serde(default = "default_retries")]
    pub retries: u32,
    /// First backoff delay; doubles on every retry.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    /// Resolution whose cell centers describe the geometry.
    #[serde(default = "default_low")]
    pub geometry_resolution: MeshResolution,
    /// Resolution whose cell centers are the query points.
    #[serde(default = "default_high")]
    pub query_resolution: MeshResolution,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout: default_timeout(),
            retries: default_retries(),
            backoff_ms: default_backoff_ms(),
            geometry_resolution: default_low(),
            query_resolution: default_high(),
        }
    }

    pub fn validate(&self) -> Result<(), SurrogateError> {
        if self.endpoint.trim().is_empty() {
            return Err(SurrogateError::InvalidInput(
                "remote surrogate requires an endpoint".into(),
            ));
        }
        if !self.endpoint.starts_with("http://") && !self.endpoint.starts_with("https://") {
            return Err(SurrogateError::InvalidInput(format!(
                "endpoint `{}` must be an http(s) URL",
                self.endpoint
            )));
        }
        if !(self.timeout.is_finite() && self.timeout > 0.0) {
            return Err(SurrogateError::InvalidInput("timeout must be positive".into()));
        }
        self.geometry_resolution.validate()?;
        self.query_resolution.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteRequest {
    pub design: WingDesign,
    pub inflow: InflowConditions,
    pub geometry_points: Vec<[f64; 3]>,
    pub query_points: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteResponse {
    pub p_s: Vec<f64>,
    pub tau: Vec<[f64; 3]>,
    pub model_version: String,
}

impl RemoteResponse {
    /// Strict schema check; the error names the first offending field.
    pub fn parse(body: &Value, expected_faces: usize) -> Result<Self, SurrogateError> {
        let bad = |field: &str, detail: String| SurrogateError::Protocol {
            field: field.into(),
            detail,
        };
        let obj = body
            .as_object()
            .ok_or_else(|| bad("$", "response is not a JSON object".into()))?;
        let array = |name: &str| -> Result<&Vec<Value>, SurrogateError> {
            let arr = obj
                .get(name)
                .ok_or_else(|| bad(name, "missing".into()))?
                .as_array()
                .ok_or_else(|| bad(name, "not an array".into()))?;
            if arr.len() != expected_faces {
                return Err(bad(
                    name,
                    format!("{} entries for {} query points", arr.len(), expected_faces),
                ));
            }
            Ok(arr)
        };
        let number = |name: String, v: &Value| -> Result<f64, SurrogateError> {
            v.as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(&name, format!("expected a finite number, got {v}")))
        };
        let p_s = array("p_s")?
            .iter()
            .enumerate()
            .map(|(i, v)| number(format!("p_s[{i}]"), v))
            .collect::<Result<Vec<_>, _>>()?;
        let tau = array("tau")?
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let comps = v
                    .as_array()
                    .filter(|a| a.len() == 3)
                    .ok_or_else(|| bad(&format!("tau[{i}]"), "expected [x, y, z]".into()))?;
                let mut out = [0.0; 3];
                for (k, c) in comps.iter().enumerate() {
                    out[k] = number(format!("tau[{i}][{k}]"), c)?;
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>, SurrogateError>>()?;
        let model_version = obj
            .get("model_version")
            .ok_or_else(|| bad("model_version", "missing".into()))?
            .as_str()
            .ok_or_else(|| bad("model_version", "not a string".into()))?
            .to_string();
        Ok(Self {
            p_s,
            tau,
            model_version,
        })
    }
}

enum Attempt {
    Retry(SurrogateError),
    Fail(SurrogateError),
}

/// Client for an external field-predicting surrogate.
#[derive(Debug, Clone)]
pub struct RemoteSurrogate {
    config: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteSurrogate {
    pub fn new(config: RemoteConfig) -> Result<Self, SurrogateError> {
        config.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self { config, agent })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn url(&self) -> String {
        format!("{}/predict", self.config.endpoint.trim_end_matches('/'))
    }

    fn attempt(&self, request: &RemoteRequest, attempts: u32) -> Result<Value, Attempt> {
        let response = self.agent.post(&self.url()).send_json(request);
        let mut response = match response {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(Attempt::Retry(SurrogateError::Timeout { attempts })),
            Err(e) => {
                return Err(Attempt::Retry(SurrogateError::Transport {
                    attempts,
                    detail: e.to_string(),
                }))
            }
        };
        let status = response.status().as_u16();
        if status >= 500 {
            return Err(Attempt::Retry(SurrogateError::Transport {
                attempts,
                detail: format!("HTTP {status}"),
            }));
        }
        if status >= 400 {
            let body = response.body_mut().read_to_string().unwrap_or_default();
            return Err(Attempt::Fail(SurrogateError::Protocol {
                field: "status".into(),
                detail: format!("HTTP {status}: {body}"),
            }));
        }
        match response.body_mut().read_json::<Value>() {
            Ok(v) => Ok(v),
            Err(ureq::Error::Timeout(_)) => Err(Attempt::Retry(SurrogateError::Timeout { attempts })),
            Err(ureq::Error::Io(e)) => Err(Attempt::Retry(SurrogateError::Transport {
                attempts,
                detail: e.to_string(),
            })),
            Err(e) => Err(Attempt::Fail(SurrogateError::Protocol {
                field: "$".into(),
                detail: format!("body is not JSON: {e}"),
            })),
        }
    }

    /// Posts the request, retrying transport failures with exponential
    /// backoff. Returns the body and the number of retries spent.
    fn exchange(&self, request: &RemoteRequest) -> Result<(Value, u32), SurrogateError> {
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        for retry in 0..=self.config.retries {
            match self.attempt(request, retry + 1) {
                Ok(v) => return Ok((v, retry)),
                Err(Attempt::Fail(e)) => return Err(e),
                Err(Attempt::Retry(e)) if retry == self.config.retries => return Err(e),
                Err(Attempt::Retry(_)) => {
                    thread::sleep(delay);
                    delay *= 2;
                }
            }
        }
        unreachable!("the last attempt returns")
    }
}

impl Surrogate for RemoteSurrogate {
    fn provenance(&self) -> Provenance {
        Provenance {
            surrogate: format!("remote:{}", self.config.endpoint),
            version: "unknown".into(),
        }
    }

    fn predict(
        &self,
        design: &WingDesign,
        inflow: &InflowConditions,
        atm: &Atmosphere,
    ) -> Result<Prediction, SurrogateError> {
        inflow.validate()?;
        atm.validate()?;
        let low = loft_wing(design, &self.config.geometry_resolution)?;
        let high = loft_wing(design, &self.config.query_resolution)?;
        let points =
            |m: &crate::geometry::TriMesh| -> Vec<[f64; 3]> { m.centroids().into_iter().map(Into::into).collect() };
        let request = RemoteRequest {
            design: *design,
            inflow: *inflow,
            geometry_points: points(&low),
            query_points: points(&high),
        };
        let (body, retries) = self.exchange(&request)?;
        let response = RemoteResponse::parse(&body, high.face_count())?;
        let field = SurfaceField {
            p_s: response.p_s,
            tau: response.tau,
        };
        let forces = integrate_forces(&high, &field, atm.p_inf)?;
        let coefficients = coefficients(&forces, inflow, atm, planform_area(design))?;
        Ok(Prediction {
            coefficients,
            surface_field: Some(field),
            field_resolution: Some(self.config.query_resolution),
            provenance: Provenance {
                surrogate: format!("remote:{}", self.config.endpoint),
                version: response.model_version,
            },
            retries,
        })
    }
}
