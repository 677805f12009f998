use std::fmt;

use rand::Rng;
use thiserror::Error;

use super::EventTrace;
use crate::fields;
use crate::scenario::ClusterParams;
use crate::time::Millis;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PodPhase {
    Pending,
    Starting,
    Running,
    Deleted,
}

impl fmt::Display for PodPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PodPhase::Pending => "pending",
            PodPhase::Starting => "starting",
            PodPhase::Running => "running",
            PodPhase::Deleted => "deleted",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PodRecord {
    pub id: String,
    pub deployment: String,
    pub workload: String,
    pub phase: PodPhase,
    pub managed_by_deployment: bool,
    pub created_at: Millis,
    pub running_at: Option<Millis>,
    pub deleted_at: Option<Millis>,
}

impl PodRecord {
    pub fn alive(&self) -> bool {
        self.phase != PodPhase::Deleted
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Deployment {
    pub id: String,
    pub workload: String,
    /// Replace deleted pods automatically.
    pub auto_restart: bool,
    next_index: u32,
}

/// Allows `consumer` to receive the logical service `service` from the pods
/// of deployment `provider`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkPolicy {
    pub consumer: String,
    pub service: String,
    pub provider: String,
    pub enabled: bool,
    pub effective_at: Millis,
}

/// Cluster-side completions the owner must schedule and feed back through
/// [`Cluster::apply`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClusterTimer {
    PodRunning { pod: String },
    PolicyEffective { consumer: String, service: String, provider: String },
}

/// A created pod and, unless it started Running, the timer that completes it.
pub type Spawned = (String, Option<(Millis, ClusterTimer)>);

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum KernelError {
    #[error("unknown pod '{0}'")]
    UnknownPod(String),
    #[error("unknown deployment '{0}'")]
    UnknownDeployment(String),
    #[error("no network policy for consumer '{consumer}' and service '{service}'")]
    UnknownService { consumer: String, service: String },
}

#[derive(Clone, Debug)]
pub struct Cluster {
    params: ClusterParams,
    deployments: Vec<Deployment>,
    pods: Vec<PodRecord>,
    policies: Vec<NetworkPolicy>,
}

impl Cluster {
    pub fn new(params: ClusterParams) -> Self {
        Cluster { params, deployments: Vec::new(), pods: Vec::new(), policies: Vec::new() }
    }

    pub fn params(&self) -> &ClusterParams {
        &self.params
    }

    pub fn pods(&self) -> &[PodRecord] {
        &self.pods
    }

    pub fn pod(&self, id: &str) -> Option<&PodRecord> {
        self.pods.iter().find(|p| p.id == id)
    }

    pub fn policies(&self) -> &[NetworkPolicy] {
        &self.policies
    }

    pub fn add_deployment(&mut self, id: &str, workload: &str, auto_restart: bool) {
        self.deployments.push(Deployment {
            id: id.to_string(),
            workload: workload.to_string(),
            auto_restart,
            next_index: 0,
        });
    }

    pub fn deployment(&self, id: &str) -> Option<&Deployment> {
        self.deployments.iter().find(|d| d.id == id)
    }

    fn jittered(&self, base: Millis, rng: &mut impl Rng) -> Millis {
        if self.params.jitter == 0.0 {
            return base;
        }
        let j = self.params.jitter;
        let f = 1.0 + rng.random_range(-j..=j);
        Millis(((base.0 as f64) * f).round().max(1.0) as u64)
    }

    /// Creates a pod for `deployment`. A `bootstrap` pod is Running at once
    /// (initial cluster state); otherwise it is Running after the restart
    /// latency and the returned timer must be scheduled.
    pub fn create_pod(
        &mut self,
        now: Millis,
        deployment: &str,
        bootstrap: bool,
        rng: &mut impl Rng,
        trace: &mut EventTrace,
    ) -> Result<Spawned, KernelError> {
        let d = self
            .deployments
            .iter_mut()
            .find(|d| d.id == deployment)
            .ok_or_else(|| KernelError::UnknownDeployment(deployment.to_string()))?;
        let id = format!("{}-{}", d.id, d.next_index);
        d.next_index += 1;
        let (workload, managed) = (d.workload.clone(), d.auto_restart);
        let mut pod = PodRecord {
            id: id.clone(),
            deployment: deployment.to_string(),
            workload,
            phase: PodPhase::Pending,
            managed_by_deployment: managed,
            created_at: now,
            running_at: None,
            deleted_at: None,
        };
        trace.push(now, "pod", fields!(id = id, deployment = deployment, phase = PodPhase::Pending));
        pod.phase = PodPhase::Starting;
        trace.push(now, "pod", fields!(id = id, deployment = deployment, phase = PodPhase::Starting));
        let timer = if bootstrap {
            pod.phase = PodPhase::Running;
            pod.running_at = Some(now);
            trace.push(now, "pod", fields!(id = id, deployment = deployment, phase = PodPhase::Running));
            None
        } else {
            let at = now + self.jittered(self.params.pod_restart_latency, rng);
            Some((at, ClusterTimer::PodRunning { pod: id.clone() }))
        };
        self.pods.push(pod);
        Ok((id, timer))
    }

    /// Deletes a pod. For a deployment with auto-restart a replacement is
    /// created at the same instant; its id and timer are returned.
    pub fn delete_pod(
        &mut self,
        now: Millis,
        id: &str,
        rng: &mut impl Rng,
        trace: &mut EventTrace,
    ) -> Result<Option<Spawned>, KernelError> {
        let pod = self.pods.iter_mut().find(|p| p.id == id).ok_or_else(|| KernelError::UnknownPod(id.to_string()))?;
        if pod.phase == PodPhase::Deleted {
            trace.push(now, "warning", fields!(what = "delete_deleted_pod", pod = id));
            return Ok(None);
        }
        pod.phase = PodPhase::Deleted;
        pod.deleted_at = Some(now);
        let (deployment, managed) = (pod.deployment.clone(), pod.managed_by_deployment);
        trace.push(now, "pod", fields!(id = id, deployment = deployment, phase = PodPhase::Deleted));
        if !managed {
            return Ok(None);
        }
        self.create_pod(now, &deployment, false, rng, trace).map(Some)
    }

    /// Installs an initial, already effective policy.
    pub fn add_policy(&mut self, consumer: &str, service: &str, provider: &str) {
        self.policies.push(NetworkPolicy {
            consumer: consumer.to_string(),
            service: service.to_string(),
            provider: provider.to_string(),
            enabled: true,
            effective_at: Millis::ZERO,
        });
    }

    /// Disconnects the current provider now and connects `provider` after
    /// the patch latency. Patching to the current provider is a no-op.
    pub fn patch_policy(
        &mut self,
        now: Millis,
        consumer: &str,
        service: &str,
        provider: &str,
        rng: &mut impl Rng,
        trace: &mut EventTrace,
    ) -> Result<Option<(Millis, ClusterTimer)>, KernelError> {
        if self.deployment(provider).is_none() {
            return Err(KernelError::UnknownDeployment(provider.to_string()));
        }
        if !self.policies.iter().any(|p| p.consumer == consumer && p.service == service) {
            return Err(KernelError::UnknownService { consumer: consumer.to_string(), service: service.to_string() });
        }
        let current = self.provider(consumer, service).map(str::to_string);
        if current.as_deref() == Some(provider) {
            trace.push(now, "warning", fields!(what = "patch_to_active_provider", service = service, provider = provider));
            return Ok(None);
        }
        for p in self.policies.iter_mut().filter(|p| p.consumer == consumer && p.service == service) {
            p.enabled = false;
        }
        let at = now + self.jittered(self.params.policy_patch_latency, rng);
        self.policies.push(NetworkPolicy {
            consumer: consumer.to_string(),
            service: service.to_string(),
            provider: provider.to_string(),
            enabled: false,
            effective_at: at,
        });
        trace.push(
            now,
            "policy_patch",
            fields!(
                consumer = consumer,
                service = service,
                from = current.as_deref().unwrap_or("-"),
                to = provider,
                effective_at = at
            ),
        );
        Ok(Some((
            at,
            ClusterTimer::PolicyEffective {
                consumer: consumer.to_string(),
                service: service.to_string(),
                provider: provider.to_string(),
            },
        )))
    }

    /// Applies a due timer. Returns false when it was superseded.
    pub fn apply(&mut self, now: Millis, timer: &ClusterTimer, trace: &mut EventTrace) -> bool {
        match timer {
            ClusterTimer::PodRunning { pod } => {
                let Some(p) = self.pods.iter_mut().find(|p| &p.id == pod) else { return false };
                if p.phase != PodPhase::Starting {
                    return false;
                }
                p.phase = PodPhase::Running;
                p.running_at = Some(now);
                trace.push(now, "pod", fields!(id = pod, deployment = p.deployment, phase = PodPhase::Running));
                true
            }
            ClusterTimer::PolicyEffective { consumer, service, provider } => {
                let latest = self
                    .policies
                    .iter()
                    .rposition(|p| &p.consumer == consumer && &p.service == service)
                    .expect("timer for a policy that was never patched");
                let p = &mut self.policies[latest];
                if &p.provider != provider || p.enabled {
                    return false;
                }
                p.enabled = true;
                trace.push(now, "policy_effective", fields!(consumer = consumer, service = service, provider = provider));
                true
            }
        }
    }

    /// Deployment currently allowed to serve `service` to `consumer`.
    pub fn provider(&self, consumer: &str, service: &str) -> Option<&str> {
        let mut enabled = self.policies.iter().filter(|p| p.consumer == consumer && p.service == service && p.enabled);
        let first = enabled.next();
        debug_assert!(enabled.next().is_none(), "two enabled providers for {consumer}/{service}");
        first.map(|p| p.provider.as_str())
    }
}
