use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::crb::{CrbParams, U2Model};
use crate::error::{Error, Result};
use crate::model::{from_db, ClusterSpec, DataNoise, Network, NetworkConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Clusters with uniformly drawn noise and channel deviations.
    Random,
    /// Three six-sensor clusters described by per-cluster SNR/CNR values.
    ThreeCluster,
}

/// Budget grid in dB, as an inclusive range or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DbGrid {
    Range { start: f64, stop: f64, step: f64 },
    List(Vec<f64>),
}

impl Default for DbGrid {
    fn default() -> Self {
        DbGrid::Range {
            start: -10.0,
            stop: 30.0,
            step: 2.0,
        }
    }
}

impl DbGrid {
    pub fn points(&self) -> Vec<f64> {
        match self {
            DbGrid::List(v) => v.clone(),
            DbGrid::Range { start, stop, step } => {
                if !(*step > 0.0) || stop < start {
                    return Vec::new();
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..n).map(|i| start + i as f64 * step).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomSpec {
    pub clusters: usize,
    pub max_sensors: usize,
    /// Upper end of the uniform range of every standard deviation.
    pub sigma_max: f64,
    /// Draw each sensor's noise deviations separately rather than once per cluster.
    pub per_sensor_noise: bool,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self {
            clusters: 10,
            max_sensors: 10,
            sigma_max: 1.0,
            per_sensor_noise: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThreeClusterSpec {
    pub sensors: usize,
    pub sigma_v_sq: f64,
    /// Observation SNR `σθ² / σn²` per cluster, dB.
    pub gamma_o_db: Vec<f64>,
    /// Sensor-to-head CNR `1 / σq²` per cluster, dB.
    pub gamma_c_db: Vec<f64>,
    /// Head-to-center CNR `σh² / σv²` per cluster, dB.
    pub gamma_d_db: Vec<f64>,
}

impl Default for ThreeClusterSpec {
    fn default() -> Self {
        Self {
            sensors: 6,
            sigma_v_sq: 1.0,
            gamma_o_db: vec![5.0; 3],
            gamma_c_db: vec![5.0; 3],
            gamma_d_db: vec![14.0, 8.0, 2.0],
        }
    }
}

/// How the lower bound on the MSE is evaluated inside sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CrbMode {
    #[default]
    None,
    MonteCarlo,
    Series,
}

/// Experiment description loaded from TOML or JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub trials: usize,
    pub ptot_db: DbGrid,
    pub sigma_theta_sq: f64,
    pub eps: f64,
    pub crb: CrbMode,
    /// Fusion-center samples per cluster and trial for the Monte Carlo bound.
    pub crb_samples: usize,
    /// Gauss-Hermite nodes per axis of the Monte Carlo bound's density.
    pub crb_rule_nodes: usize,
    pub crb_model: U2Model,
    /// Series and grid settings when `crb = "series"`.
    pub crb_series: CrbParams,
    pub data_noise: DataNoise,
    /// Training shares for the fixed-training comparison.
    pub training_fractions: Vec<f64>,
    pub random: RandomSpec,
    pub three_cluster: ThreeClusterSpec,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::Random,
            seed: 1,
            trials: 10_000,
            ptot_db: DbGrid::default(),
            sigma_theta_sq: 1.0,
            eps: crate::numerics::DEFAULT_EPS,
            crb: CrbMode::None,
            crb_samples: 200,
            crb_rule_nodes: 24,
            crb_model: U2Model::Real,
            crb_series: CrbParams::default(),
            data_noise: DataNoise::TwoSigmaV,
            training_fractions: vec![0.05, 0.25, 0.60],
            random: RandomSpec::default(),
            three_cluster: ThreeClusterSpec::default(),
        }
    }
}

impl ScenarioSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ptot_db.points().is_empty() {
            return Err(Error::Config("budget grid is empty".into()));
        }
        if self.crb != CrbMode::None && (self.crb_samples == 0 || self.crb_rule_nodes == 0) {
            return Err(Error::Config(
                "the Monte Carlo bound needs samples and nodes".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::Config("at least one trial is required".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config(format!("eps = {}", self.eps)));
        }
        if self
            .training_fractions
            .iter()
            .any(|f| !(0.0..1.0).contains(f))
        {
            return Err(Error::Config(
                "training fractions must lie in [0, 1)".into(),
            ));
        }
        match self.kind {
            ScenarioKind::Random => {
                let r = &self.random;
                if r.clusters == 0 || r.max_sensors == 0 || !(r.sigma_max > 0.0) {
                    return Err(Error::Config(
                        "random scenario needs clusters, sensors and sigma_max > 0".into(),
                    ));
                }
            }
            ScenarioKind::ThreeCluster => {
                let t = &self.three_cluster;
                let n = t.gamma_d_db.len();
                if n == 0 || t.gamma_o_db.len() != n || t.gamma_c_db.len() != n || t.sensors == 0 {
                    return Err(Error::Config(
                        "SNR/CNR lists must be nonempty and of equal length".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Budget grid in linear units together with the dB labels.
    pub fn grid(&self) -> Vec<(f64, f64)> {
        self.ptot_db
            .points()
            .into_iter()
            .map(|db| (db, from_db(db)))
            .collect()
    }

    /// The network, drawn from stream 0 of the scenario seed when random.
    pub fn network(&self) -> Result<Network> {
        match self.kind {
            ScenarioKind::Random => random_network(
                &self.random,
                self.sigma_theta_sq,
                &mut scenario_rng(self.seed, 0),
            ),
            ScenarioKind::ThreeCluster => {
                three_cluster_network(&self.three_cluster, self.sigma_theta_sq)
            }
        }
    }
}

/// Random stream `stream` of `seed`. Stream 0 draws the network; trial `t`
/// uses stream `t + 1`.
pub fn scenario_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn unit_open<R: Rng + ?Sized>(rng: &mut R, max: f64) -> f64 {
    max * (1.0 - rng.random::<f64>())
}

/// Network whose standard deviations are uniform on `(0, sigma_max]`.
pub fn random_network<R: Rng + ?Sized>(
    spec: &RandomSpec,
    sigma_theta_sq: f64,
    rng: &mut R,
) -> Result<Network> {
    let mut clusters = Vec::with_capacity(spec.clusters);
    for _ in 0..spec.clusters {
        let k = rng.random_range(1..=spec.max_sensors);
        let sh = unit_open(rng, spec.sigma_max);
        let sv = unit_open(rng, spec.sigma_max);
        let (n, q): (Vec<f64>, Vec<f64>) = if spec.per_sensor_noise {
            (0..k)
                .map(|_| {
                    (
                        unit_open(rng, spec.sigma_max).powi(2),
                        unit_open(rng, spec.sigma_max).powi(2),
                    )
                })
                .unzip()
        } else {
            let (n, q) = (
                unit_open(rng, spec.sigma_max).powi(2),
                unit_open(rng, spec.sigma_max).powi(2),
            );
            (vec![n; k], vec![q; k])
        };
        clusters.push(ClusterSpec::diagonal(&n, &q, sh * sh, sv * sv));
    }
    Network::new(NetworkConfig {
        sigma_theta_sq,
        clusters,
    })
}

pub fn three_cluster_network(spec: &ThreeClusterSpec, sigma_theta_sq: f64) -> Result<Network> {
    let clusters = (0..spec.gamma_d_db.len())
        .map(|l| {
            let n = sigma_theta_sq / from_db(spec.gamma_o_db[l]);
            let q = 1.0 / from_db(spec.gamma_c_db[l]);
            let h = from_db(spec.gamma_d_db[l]) * spec.sigma_v_sq;
            ClusterSpec::diagonal(
                &vec![n; spec.sensors],
                &vec![q; spec.sensors],
                h,
                spec.sigma_v_sq,
            )
        })
        .collect();
    Network::new(NetworkConfig {
        sigma_theta_sq,
        clusters,
    })
}
