use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Noise and channel statistics of one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSpec {
    /// Measurement-noise covariance of the cluster's sensors.
    pub sigma_n: DMatrix<f64>,
    /// Diagonal of the sensor-to-head channel-noise covariance.
    pub sigma_q: DVector<f64>,
    /// Half-variance of the head-to-center fading coefficient.
    pub sigma_h_sq: f64,
    /// Half-variance of the head-to-center receiver noise.
    pub sigma_v_sq: f64,
}

impl ClusterSpec {
    pub fn sensors(&self) -> usize {
        self.sigma_q.len()
    }

    /// Cluster with uncorrelated measurement noise.
    pub fn diagonal(sigma_n: &[f64], sigma_q: &[f64], sigma_h_sq: f64, sigma_v_sq: f64) -> Self {
        Self {
            sigma_n: DMatrix::from_diagonal(&DVector::from_column_slice(sigma_n)),
            sigma_q: DVector::from_column_slice(sigma_q),
            sigma_h_sq,
            sigma_v_sq,
        }
    }
}

/// Static description of the whole network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub sigma_theta_sq: f64,
    pub clusters: Vec<ClusterSpec>,
}

impl NetworkConfig {
    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn sensors(&self) -> Vec<usize> {
        self.clusters.iter().map(ClusterSpec::sensors).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.clusters.is_empty() {
            return Err(Error::Config("at least one cluster is required".into()));
        }
        if !(self.sigma_theta_sq > 0.0 && self.sigma_theta_sq.is_finite()) {
            return Err(Error::Config(format!(
                "source variance {} must be positive",
                self.sigma_theta_sq
            )));
        }
        for (l, c) in self.clusters.iter().enumerate() {
            let k = c.sensors();
            if k == 0 {
                return Err(Error::Config(format!("cluster {l} has no sensors")));
            }
            if c.sigma_n.nrows() != k || c.sigma_n.ncols() != k {
                return Err(Error::Config(format!(
                    "cluster {l}: measurement covariance is {}x{} but the cluster has {k} sensors",
                    c.sigma_n.nrows(),
                    c.sigma_n.ncols()
                )));
            }
            if (&c.sigma_n - c.sigma_n.transpose()).amax() > 1e-12 * c.sigma_n.amax().max(1.0) {
                return Err(Error::Config(format!(
                    "cluster {l}: measurement covariance is not symmetric"
                )));
            }
            if Cholesky::new(c.sigma_n.clone()).is_none() {
                return Err(Error::Config(format!(
                    "cluster {l}: measurement covariance is not positive definite"
                )));
            }
            if c.sigma_q.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::Config(format!(
                    "cluster {l}: channel-noise variances must be positive"
                )));
            }
            if !(c.sigma_h_sq > 0.0 && c.sigma_h_sq.is_finite())
                || !(c.sigma_v_sq > 0.0 && c.sigma_v_sq.is_finite())
            {
                return Err(Error::Config(format!(
                    "cluster {l}: fading and receiver-noise variances must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// Per-cluster matrices shared by every formula.
#[derive(Debug, Clone)]
pub struct ClusterDerived {
    pub d: DVector<f64>,
    /// Diagonal of `D = diag(sqrt(d))`.
    pub sqrt_d: DVector<f64>,
    pub rho: DVector<f64>,
    pub pi: DMatrix<f64>,
    pub delta: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    /// True when the measurement noise, and hence `delta`, is diagonal.
    pub diagonal_noise: bool,
}

pub fn derive_cluster(config: &NetworkConfig, l: usize) -> Result<ClusterDerived> {
    let c = config
        .clusters
        .get(l)
        .ok_or_else(|| Error::Domain(format!("cluster index {l} out of range")))?;
    if Cholesky::new(c.sigma_n.clone()).is_none() {
        return Err(Error::Config(format!(
            "cluster {l}: measurement covariance is not positive definite"
        )));
    }
    let k = c.sensors();
    let st = config.sigma_theta_sq;
    let d = DVector::from_fn(k, |i, _| 1.0 / (k as f64 * (st + c.sigma_n[(i, i)])));
    let sqrt_d = d.map(f64::sqrt);
    let rho = sqrt_d.clone();
    let pi = &rho * rho.transpose();
    let delta = DMatrix::from_fn(k, k, |i, j| sqrt_d[i] * c.sigma_n[(i, j)] * sqrt_d[j]);
    let omega = &delta + &pi * st;
    let diagonal_noise = (0..k).all(|i| (0..k).all(|j| i == j || c.sigma_n[(i, j)] == 0.0));
    Ok(ClusterDerived {
        d,
        sqrt_d,
        rho,
        pi,
        delta,
        omega,
        diagonal_noise,
    })
}

/// Validated configuration together with its derived matrices.
#[derive(Debug, Clone)]
pub struct Network {
    pub config: NetworkConfig,
    pub derived: Vec<ClusterDerived>,
    /// Lower Cholesky factors of the measurement covariances, for sampling.
    noise_factors: Vec<DMatrix<f64>>,
}

impl Network {
    pub fn new(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let derived = (0..config.num_clusters())
            .map(|l| derive_cluster(&config, l))
            .collect::<Result<Vec<_>>>()?;
        let noise_factors = config
            .clusters
            .iter()
            .map(|c| Cholesky::new(c.sigma_n.clone()).map(|ch| ch.l()).unwrap())
            .collect();
        Ok(Self {
            config,
            derived,
            noise_factors,
        })
    }

    pub fn num_clusters(&self) -> usize {
        self.config.num_clusters()
    }

    pub fn sigma_theta_sq(&self) -> f64 {
        self.config.sigma_theta_sq
    }

    pub fn cluster(&self, l: usize) -> ClusterView<'_> {
        ClusterView {
            spec: &self.config.clusters[l],
            derived: &self.derived[l],
            sigma_theta_sq: self.config.sigma_theta_sq,
        }
    }

    pub fn clusters(&self) -> impl Iterator<Item = ClusterView<'_>> {
        (0..self.num_clusters()).map(move |l| self.cluster(l))
    }

    pub(crate) fn noise_factor(&self, l: usize) -> &DMatrix<f64> {
        &self.noise_factors[l]
    }
}

/// Solution of `R u = rho` for `R = P Ω + Σq`, with the scalars built from it.
#[derive(Debug, Clone)]
pub struct RtSolve {
    /// `R^{-1} rho`.
    pub u: DVector<f64>,
    /// `tau = rhoᵀ R^{-1} rho`.
    pub tau: f64,
    /// `m = rhoᵀ Σ_P^{-1} rho` with `Σ_P = Σq + P Δ`.
    pub m: f64,
    /// `Σ_P^{-1} rho`.
    pub v: DVector<f64>,
}

/// One cluster's statistics and derived matrices.
#[derive(Debug, Clone, Copy)]
pub struct ClusterView<'a> {
    pub spec: &'a ClusterSpec,
    pub derived: &'a ClusterDerived,
    pub sigma_theta_sq: f64,
}

impl ClusterView<'_> {
    pub fn sensors(&self) -> usize {
        self.spec.sensors()
    }

    pub fn sigma_q_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.spec.sigma_q)
    }

    /// `R = P Ω + Σq`, the covariance of the signals received by the head.
    pub fn r_t(&self, p: f64) -> DMatrix<f64> {
        let mut r = &self.derived.omega * p;
        for i in 0..self.sensors() {
            r[(i, i)] += self.spec.sigma_q[i];
        }
        r
    }

    /// `Σ_P = Σq + P Δ`.
    pub fn sigma_p(&self, p: f64) -> DMatrix<f64> {
        let mut s = &self.derived.delta * p;
        for i in 0..self.sensors() {
            s[(i, i)] += self.spec.sigma_q[i];
        }
        s
    }

    /// Solves with `Σ_P` and applies the rank-one correction for `σθ² P rho rhoᵀ`.
    pub fn solve_rt(&self, p: f64) -> RtSolve {
        let rho = &self.derived.rho;
        let v = if self.derived.diagonal_noise {
            DVector::from_fn(self.sensors(), |i, _| {
                rho[i] / (self.spec.sigma_q[i] + p * self.derived.delta[(i, i)])
            })
        } else {
            Cholesky::<f64, Dyn>::new(self.sigma_p(p))
                .expect("Σq + PΔ is positive definite for P >= 0")
                .solve(rho)
        };
        let m = rho.dot(&v);
        let scale = 1.0 / (1.0 + self.sigma_theta_sq * p * m);
        RtSolve {
            u: &v * scale,
            tau: m * scale,
            m,
            v,
        }
    }

    pub fn quad_sigma_q(&self, w: &DVector<f64>) -> f64 {
        w.iter()
            .zip(self.spec.sigma_q.iter())
            .map(|(a, s)| a * a * s)
            .sum()
    }

    pub fn quad(&self, m: &DMatrix<f64>, w: &DVector<f64>) -> f64 {
        w.dot(&(m * w))
    }

    /// Power the head spends forwarding its fused signal, `wᵀ R w`.
    pub fn ch_transmit_power(&self, p: f64, w: &DVector<f64>) -> f64 {
        self.quad_sigma_q(w) + p * self.quad(&self.derived.omega, w)
    }

    /// Per-cluster share of the network budget, `P + wᵀ R w`.
    pub fn cluster_power(&self, p: f64, w: &DVector<f64>) -> f64 {
        self.quad_sigma_q(w) + p * (1.0 + self.quad(&self.derived.omega, w))
    }

    /// Sensor amplitudes squared, `alpha_k = P d_k`.
    pub fn sensor_powers(&self, p: f64) -> DVector<f64> {
        &self.derived.d * p
    }
}

/// `R = P Ω + Σq` for a cluster.
pub fn r_t(derived: &ClusterDerived, sigma_q: &DVector<f64>, p: f64) -> DMatrix<f64> {
    let mut r = &derived.omega * p;
    for i in 0..sigma_q.len() {
        r[(i, i)] += sigma_q[i];
    }
    r
}
