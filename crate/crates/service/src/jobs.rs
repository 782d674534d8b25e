//! Optimization jobs: a registry of handles and a single-slot runner.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use wingforge::optimize::{optimize, Bounds, Objective, OptimizationResult, OptimizerConfig, Sample, WingObjective};
use wingforge::surrogate::SurrogateError;
use wingforge::{Atmosphere, Surrogate};

use crate::error::{ApiError, ErrorBody};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, Self::Done | Self::Failed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub evaluations: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobHandle {
    pub id: String,
    pub status: JobStatus,
    pub progress: Progress,
    pub backend: String,
    pub config: OptimizerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<OptimizationResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

struct Job {
    handle: JobHandle,
    evaluations: Arc<AtomicU64>,
}

#[derive(Default)]
struct Registry {
    jobs: HashMap<String, Job>,
    /// Idempotency key → (job id, request fingerprint).
    keys: HashMap<String, (String, String)>,
    next: u64,
}

/// Publishes the evaluation count of the wrapped objective.
struct Tracked<'a> {
    inner: &'a dyn Objective,
    counter: &'a AtomicU64,
}

impl Tracked<'_> {
    fn publish(&self) {
        self.counter.store(self.inner.evaluations(), Ordering::Relaxed);
    }
}

impl Objective for Tracked<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn evaluate(&self, x: &[f64]) -> Result<Sample, SurrogateError> {
        let r = self.inner.evaluate(x);
        self.publish();
        r
    }

    fn evaluate_with_gradient(&self, x: &[f64]) -> Option<Result<(Sample, Vec<f64>), SurrogateError>> {
        let r = self.inner.evaluate_with_gradient(x);
        self.publish();
        r
    }

    fn evaluations(&self) -> u64 {
        self.inner.evaluations()
    }
}

pub struct JobRunner {
    registry: Mutex<Registry>,
    slots: Arc<Semaphore>,
    queue_depth: usize,
}

/// Everything a job needs to run off the request path.
pub struct JobSpec {
    pub config: OptimizerConfig,
    pub backend: String,
    pub surrogate: Arc<dyn Surrogate>,
    pub bounds: Bounds,
    pub atmosphere: Atmosphere,
    pub idempotency_key: Option<String>,
}

impl JobRunner {
    /// `concurrency` jobs run at once; up to `queue_depth` more may wait.
    pub fn new(concurrency: usize, queue_depth: usize) -> Self {
        Self {
            registry: Mutex::new(Registry::default()),
            slots: Arc::new(Semaphore::new(concurrency.max(1))),
            queue_depth,
        }
    }

    pub fn get(&self, id: &str) -> Option<JobHandle> {
        let reg = self.registry.lock().unwrap();
        reg.jobs.get(id).map(|job| {
            let mut h = job.handle.clone();
            if !h.status.is_terminal() {
                h.progress.evaluations = job.evaluations.load(Ordering::Relaxed);
            }
            h
        })
    }

    /// Registers a job and starts it in the background. A repeated
    /// idempotency key returns the existing handle when the request is the
    /// same and a conflict otherwise.
    pub fn submit(self: &Arc<Self>, spec: JobSpec) -> Result<(JobHandle, bool), ApiError> {
        let fingerprint = serde_json::to_string(&(&spec.config, &spec.backend)).expect("config serializes");
        let handle;
        let counter = Arc::new(AtomicU64::new(0));
        {
            let mut reg = self.registry.lock().unwrap();
            if let Some(key) = &spec.idempotency_key {
                if let Some((id, fp)) = reg.keys.get(key) {
                    if *fp != fingerprint {
                        return Err(ApiError::new(
                            axum::http::StatusCode::CONFLICT,
                            "conflict",
                            format!("idempotency key `{key}` was already used for a different request"),
                        )
                        .with_field("idempotency_key"));
                    }
                    let id = id.clone();
                    drop(reg);
                    return Ok((self.get(&id).expect("keyed job exists"), false));
                }
            }
            let active = reg.jobs.values().filter(|j| !j.handle.status.is_terminal()).count();
            if active > self.queue_depth {
                return Err(ApiError::new(
                    axum::http::StatusCode::SERVICE_UNAVAILABLE,
                    "queue_full",
                    format!("{active} jobs are already queued or running"),
                ));
            }
            reg.next += 1;
            let id = format!("job-{:06}", reg.next);
            handle = JobHandle {
                id: id.clone(),
                status: JobStatus::Queued,
                progress: Progress {
                    evaluations: 0,
                    budget: spec.config.budget.max_evaluations,
                },
                backend: spec.backend.clone(),
                config: spec.config.clone(),
                result: None,
                error: None,
            };
            if let Some(key) = &spec.idempotency_key {
                reg.keys.insert(key.clone(), (id.clone(), fingerprint));
            }
            reg.jobs.insert(
                id,
                Job {
                    handle: handle.clone(),
                    evaluations: counter.clone(),
                },
            );
        }

        let runner = Arc::clone(self);
        let id = handle.id.clone();
        tokio::spawn(async move {
            let _permit = runner
                .slots
                .clone()
                .acquire_owned()
                .await
                .expect("semaphore is never closed");
            runner.update(&id, |h| h.status = JobStatus::Running);
            let outcome = tokio::task::spawn_blocking(move || {
                let objective = WingObjective::new(spec.surrogate.as_ref(), spec.atmosphere);
                let tracked = Tracked {
                    inner: &objective,
                    counter: &counter,
                };
                optimize(&tracked, &spec.bounds, &spec.config)
            })
            .await;
            runner.update(&id, |h| match outcome {
                Ok(Ok(result)) => {
                    h.progress.evaluations = result.evaluations;
                    h.result = Some(result);
                    h.status = JobStatus::Done;
                }
                Ok(Err(e)) => {
                    if let wingforge::optimize::OptimizeError::Objective { evaluations, .. } = &e {
                        h.progress.evaluations = *evaluations;
                    }
                    h.error = Some(ApiError::from_optimize(e).body);
                    h.status = JobStatus::Failed;
                }
                Err(join) => {
                    h.error = Some(ErrorBody {
                        error: "internal".into(),
                        detail: format!("optimizer panicked: {join}"),
                        field: None,
                    });
                    h.status = JobStatus::Failed;
                }
            });
        });
        Ok((handle, true))
    }

    fn update(&self, id: &str, f: impl FnOnce(&mut JobHandle)) {
        let mut reg = self.registry.lock().unwrap();
        if let Some(job) = reg.jobs.get_mut(id) {
            if !job.handle.status.is_terminal() {
                f(&mut job.handle);
            }
        }
    }
}
