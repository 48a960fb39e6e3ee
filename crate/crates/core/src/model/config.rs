use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use super::network::{ClusterSpec, NetworkConfig};
use crate::error::{Error, Result};

/// A quantity given as one number, one value per sensor, or a full matrix.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Shaped {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

/// Either one value shared by every cluster or one entry per cluster.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PerCluster<T> {
    All(T),
    Each(Vec<T>),
}

impl<T: Clone> PerCluster<T> {
    fn get(&self, l: usize, n: usize, key: &str) -> Result<T> {
        match self {
            PerCluster::All(v) => Ok(v.clone()),
            PerCluster::Each(v) if v.len() == n => Ok(v[l].clone()),
            PerCluster::Each(v) => Err(Error::Config(format!(
                "`{key}` has {} entries for {n} clusters",
                v.len()
            ))),
        }
    }
}

/// On-disk network description. `sensors` is a count shared by every
/// cluster or a list with one count per cluster. A flat list of numbers for
/// `sigma_n` or `sigma_q` is read as per-sensor values shared by every
/// cluster; per-cluster entries need an outer list.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub sigma_theta_sq: f64,
    pub sensors: PerCluster<usize>,
    #[serde(default)]
    pub clusters: Option<usize>,
    pub sigma_n: PerCluster<Shaped>,
    pub sigma_q: PerCluster<Shaped>,
    pub sigma_h_sq: PerCluster<f64>,
    pub sigma_v_sq: PerCluster<f64>,
}

impl ConfigFile {
    pub fn into_config(self) -> Result<NetworkConfig> {
        let n = match (&self.sensors, self.clusters) {
            (PerCluster::Each(v), Some(c)) if v.len() != c => {
                return Err(Error::Config(format!(
                    "`clusters` = {c} but `sensors` lists {}",
                    v.len()
                )))
            }
            (PerCluster::Each(v), _) => v.len(),
            (PerCluster::All(_), Some(c)) => c,
            (PerCluster::All(_), None) => {
                return Err(Error::Config(
                    "`clusters` is required when `sensors` is a single count".into(),
                ))
            }
        };
        let mut clusters = Vec::with_capacity(n);
        for l in 0..n {
            let k = self.sensors.get(l, n, "sensors")?;
            let sigma_n = match self.sigma_n.get(l, n, "sigma_n")? {
                Shaped::Scalar(s) => DMatrix::from_diagonal_element(k, k, s),
                Shaped::Vector(v) => {
                    check_len(&v, k, l, "sigma_n")?;
                    DMatrix::from_diagonal(&DVector::from_vec(v))
                }
                Shaped::Matrix(rows) => {
                    if rows.len() != k || rows.iter().any(|r| r.len() != k) {
                        return Err(Error::Config(format!(
                            "cluster {l}: `sigma_n` must be {k}x{k}"
                        )));
                    }
                    DMatrix::from_fn(k, k, |i, j| rows[i][j])
                }
            };
            let sigma_q = match self.sigma_q.get(l, n, "sigma_q")? {
                Shaped::Scalar(s) => DVector::from_element(k, s),
                Shaped::Vector(v) => {
                    check_len(&v, k, l, "sigma_q")?;
                    DVector::from_vec(v)
                }
                Shaped::Matrix(_) => {
                    return Err(Error::Config(format!(
                        "cluster {l}: `sigma_q` is diagonal, give a scalar or vector"
                    )))
                }
            };
            clusters.push(ClusterSpec {
                sigma_n,
                sigma_q,
                sigma_h_sq: self.sigma_h_sq.get(l, n, "sigma_h_sq")?,
                sigma_v_sq: self.sigma_v_sq.get(l, n, "sigma_v_sq")?,
            });
        }
        let cfg = NetworkConfig {
            sigma_theta_sq: self.sigma_theta_sq,
            clusters,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn check_len(v: &[f64], k: usize, l: usize, key: &str) -> Result<()> {
    if v.len() == k {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "cluster {l}: `{key}` has {} entries for {k} sensors",
            v.len()
        )))
    }
}

/// Parses a TOML or JSON network description. JSON is detected by a leading `{`.
pub fn parse_config(text: &str) -> Result<NetworkConfig> {
    let file: ConfigFile = if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?
    } else {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?
    };
    file.into_config()
}

pub fn load_config(path: &Path) -> Result<NetworkConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}
