//! Isolated-agent ratio, algebraic connectivity and computation-count reports.

use crate::grouping::CommGraph;
use serde::{Deserialize, Serialize};
use std::fmt::Write;
use thiserror::Error;

/// Off-diagonal Frobenius norm at which the Jacobi sweep stops.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("trace contains no snapshots")]
    EmptyTrace,
    #[error("no team sizes given")]
    NoSizes,
}

/// Eigen-decomposition of a dense symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// columns, `vectors[row][k]` belonging to `values[k]`.
#[allow(clippy::needless_range_loop)]
pub fn symmetric_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let off = |a: &[Vec<f64>]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i][j] * a[i][j];
                }
            }
        }
        s.sqrt()
    };
    for _ in 0..MAX_SWEEPS {
        if off(&a) < JACOBI_TOLERANCE {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = (0..n).map(|r| order.iter().map(|&k| v[r][k]).collect()).collect();
    (values, vectors)
}

/// `L = D - A` for a 0/1 (or weighted) symmetric adjacency matrix.
pub fn laplacian(adjacency: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = adjacency.len();
    (0..n)
        .map(|i| {
            let deg: f64 = adjacency[i].iter().sum();
            (0..n).map(|j| if i == j { deg - adjacency[i][i] } else { -adjacency[i][j] }).collect()
        })
        .collect()
}

/// Second-smallest Laplacian eigenvalue with its eigenvector; `(0, [1])` for one node.
pub fn lambda2_pair(adjacency: &[Vec<f64>]) -> (f64, Vec<f64>) {
    match adjacency.len() {
        0 => (0.0, Vec::new()),
        1 => (0.0, vec![1.0]),
        _ => {
            let (values, vectors) = symmetric_eigen(&laplacian(adjacency));
            let v2 = vectors.iter().map(|row| row[1]).collect();
            // Roundoff can leave a tiny negative value for disconnected graphs.
            (values[1].max(0.0), v2)
        }
    }
}

pub fn lambda2(adjacency: &[Vec<f64>]) -> f64 {
    lambda2_pair(adjacency).0
}

/// Degree-0 node count over node count, pooled across snapshots.
pub fn iso_rate(trace: &[CommGraph]) -> Result<f64, MetricsError> {
    if trace.is_empty() {
        return Err(MetricsError::EmptyTrace);
    }
    let (mut isolated, mut total) = (0usize, 0usize);
    for g in trace {
        let mut degree = vec![0usize; g.nodes.len()];
        for (a, b) in &g.edges {
            for x in [a, b] {
                if let Ok(i) = g.nodes.binary_search(x) {
                    degree[i] += 1;
                }
            }
        }
        isolated += degree.iter().filter(|d| **d == 0).count();
        total += g.nodes.len();
    }
    Ok(if total == 0 { 0.0 } else { isolated as f64 / total as f64 })
}

/// Per-group values for one snapshot: λ₂ for every group of two or more
/// members, and a 0 for each unassigned agent.
pub fn snapshot_lambda2(g: &CommGraph) -> Vec<f64> {
    let grouped: usize = g.groups.iter().map(Vec::len).sum();
    let mut out: Vec<f64> = g.groups.iter().filter(|m| m.len() >= 2).map(|m| lambda2(&g.adjacency(m))).collect();
    out.extend(std::iter::repeat_n(0.0, g.nodes.len().saturating_sub(grouped)));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub algo: String,
    pub iso_rate: f64,
    pub lambda2_values: Vec<f64>,
    pub lambda2_mean: f64,
    /// Population variance.
    pub lambda2_var: f64,
    pub snapshots: usize,
}

impl StructureReport {
    pub const CSV_HEADER: &'static str = "algo,iso_rate,lambda2_mean,lambda2_var,snapshots";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.algo, self.iso_rate, self.lambda2_mean, self.lambda2_var, self.snapshots)
    }

    pub fn to_csv(reports: &[StructureReport]) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for r in reports {
            writeln!(s, "{}", r.csv_row()).unwrap();
        }
        s
    }
}

pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

pub fn structure_report(algo: &str, trace: &[CommGraph]) -> Result<StructureReport, MetricsError> {
    let iso = iso_rate(trace)?;
    let values: Vec<f64> = trace.iter().flat_map(snapshot_lambda2).collect();
    let (mean, var) = mean_and_variance(&values);
    Ok(StructureReport {
        algo: algo.to_string(),
        iso_rate: iso,
        lambda2_values: values,
        lambda2_mean: mean,
        lambda2_var: var,
        snapshots: trace.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub total: u64,
    pub per_agent: f64,
}

impl ScalingRow {
    pub fn new(n: usize, total: u64) -> Self {
        Self { n, total, per_agent: if n == 0 { 0.0 } else { total as f64 / n as f64 } }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
}

impl ScalingReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,total,per_agent\n");
        for r in &self.rows {
            writeln!(s, "{},{},{}", r.n, r.total, r.per_agent).unwrap();
        }
        s
    }

    /// Largest over smallest per-agent count.
    pub fn per_agent_spread(&self) -> f64 {
        let lo = self.rows.iter().map(|r| r.per_agent).fold(f64::INFINITY, f64::min);
        let hi = self.rows.iter().map(|r| r.per_agent).fold(0.0, f64::max);
        hi / lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::EntityId;

    fn complete(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect()
    }

    fn path(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..n).map(|j| if i.abs_diff(j) == 1 { 1.0 } else { 0.0 }).collect()).collect()
    }

    #[test]
    fn known_spectra() {
        assert!((lambda2(&complete(3)) - 3.0).abs() < 1e-9);
        assert!((lambda2(&path(2)) - 2.0).abs() < 1e-9);
        let p4 = 2.0 * (1.0 - (std::f64::consts::PI / 4.0).cos());
        assert!((lambda2(&path(4)) - p4).abs() < 1e-9);
        assert_eq!(lambda2(&vec![vec![0.0; 2]; 2]), 0.0);
        assert_eq!(lambda2(&[vec![0.0]]), 0.0);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn star_is_one() {
        let mut a = vec![vec![0.0; 5]; 5];
        for i in 1..5 {
            a[0][i] = 1.0;
            a[i][0] = 1.0;
        }
        assert!((lambda2(&a) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn residual_small() {
        let a = path(7);
        let l = laplacian(&a);
        let (lam, v) = lambda2_pair(&a);
        for i in 0..7 {
            let lv: f64 = (0..7).map(|j| l[i][j] * v[j]).sum();
            assert!((lv - lam * v[i]).abs() <= 1e-8);
        }
    }

    fn graph(n: u32, edges: &[(u32, u32)], groups: Vec<Vec<u32>>) -> CommGraph {
        CommGraph {
            nodes: (0..n).map(EntityId).collect(),
            edges: edges.iter().map(|&(a, b)| (EntityId(a), EntityId(b))).collect(),
            groups: groups.into_iter().map(|g| g.into_iter().map(EntityId).collect()).collect(),
        }
    }

    #[test]
    fn iso_rate_cases() {
        assert_eq!(iso_rate(&[]), Err(MetricsError::EmptyTrace));
        assert_eq!(iso_rate(&[graph(3, &[], vec![])]), Ok(1.0));
        assert_eq!(iso_rate(&[graph(3, &[(0, 1), (0, 2), (1, 2)], vec![vec![0, 1, 2]])]), Ok(0.0));
        let connected = graph(12, &(1..12).map(|i| (0, i)).collect::<Vec<_>>(), vec![(0..12).collect()]);
        let one_off = graph(12, &(1..11).map(|i| (0, i)).collect::<Vec<_>>(), vec![(0..11).collect(), vec![11]]);
        let mut trace = vec![connected; 500];
        trace.extend(vec![one_off; 500]);
        assert!((iso_rate(&trace).unwrap() - 0.5 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn report_on_triangles() {
        let k3 = graph(3, &[(0, 1), (0, 2), (1, 2)], vec![vec![0, 1, 2]]);
        let r = structure_report("iakrc", &[k3.clone(), k3]).unwrap();
        assert_eq!(r.lambda2_values.len(), 2);
        assert!((r.lambda2_mean - 3.0).abs() < 1e-9);
        assert!(r.lambda2_var < 1e-18);
        assert_eq!(r.snapshots, 2);
    }

    #[test]
    fn unassigned_contribute_zero() {
        let g = graph(4, &[(0, 1)], vec![vec![0, 1], vec![2]]);
        // Group {0,1} -> 2; lone leader 2 skipped; unassigned 3 -> 0.
        assert_eq!(snapshot_lambda2(&g).len(), 2);
        let v = snapshot_lambda2(&g);
        assert!((v[0] - 2.0).abs() < 1e-12 && v[1] == 0.0);
    }

    #[test]
    fn scaling_rows() {
        let r = ScalingRow::new(1, 37);
        assert_eq!(r.per_agent, 37.0);
        let rep = ScalingReport { rows: vec![ScalingRow::new(4, 40), ScalingRow::new(8, 120)] };
        assert_eq!(rep.to_csv(), "n,total,per_agent\n4,40,10\n8,120,15\n");
        assert_eq!(rep.per_agent_spread(), 1.5);
    }
}
