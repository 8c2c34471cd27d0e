//! Cluster partitions, the characteristic matrix and the aggregated initial
//! reduced model.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::feasible::SparsityPattern;
use crate::numkit::{spectral_abscissa, EigenOptions, MatrixRef};
use crate::sysmodel::{positivity_report, StateMatrix, StateSpaceModel};
use crate::{Error, Result};

/// Assignment of `n` nodes to `r` nonempty clusters, 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPartition {
    assignment: Vec<usize>,
    sizes: Vec<usize>,
}

/// On-disk form: `{"n": .., "clusters": [[nodes..], ..]}` with 1-based nodes.
#[derive(Debug, Serialize, Deserialize)]
struct PartitionFile {
    n: usize,
    clusters: Vec<Vec<usize>>,
}

impl ClusterPartition {
    /// `assignment[i]` is the cluster of node `i`; cluster ids must cover
    /// `0..r` with no gaps.
    pub fn from_assignment(assignment: Vec<usize>) -> Result<Self> {
        if assignment.is_empty() {
            return Err(Error::InvalidPartition("partition has no nodes".into()));
        }
        let r = assignment.iter().max().map_or(0, |&c| c + 1);
        let mut sizes = vec![0usize; r];
        for &c in &assignment {
            sizes[c] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidPartition(format!("cluster {} is empty", empty + 1)));
        }
        Ok(Self { assignment, sizes })
    }

    /// Partition from explicit 0-based node lists.
    pub fn from_clusters(n: usize, clusters: &[Vec<usize>]) -> Result<Self> {
        const UNSET: usize = usize::MAX;
        let mut assignment = vec![UNSET; n];
        for (k, nodes) in clusters.iter().enumerate() {
            if nodes.is_empty() {
                return Err(Error::InvalidPartition(format!("cluster {} is empty", k + 1)));
            }
            for &i in nodes {
                if i >= n {
                    return Err(Error::InvalidPartition(format!(
                        "node {} out of range 1..={n}",
                        i + 1
                    )));
                }
                if assignment[i] != UNSET {
                    return Err(Error::InvalidPartition(format!(
                        "node {} is in clusters {} and {}",
                        i + 1,
                        assignment[i] + 1,
                        k + 1
                    )));
                }
                assignment[i] = k;
            }
        }
        if let Some(i) = assignment.iter().position(|&c| c == UNSET) {
            return Err(Error::InvalidPartition(format!("node {} is not assigned", i + 1)));
        }
        Self::from_assignment(assignment)
    }

    /// Every node in its own cluster.
    pub fn singletons(n: usize) -> Result<Self> {
        Self::from_assignment((0..n).collect())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PartitionFile = serde_json::from_str(text)?;
        let clusters: Vec<Vec<usize>> = file
            .clusters
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&i| {
                        i.checked_sub(1).ok_or_else(|| {
                            Error::InvalidPartition("node ids are 1-based; found 0".into())
                        })
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Self::from_clusters(file.n, &clusters)
    }

    pub fn to_json(&self) -> String {
        let clusters = self.clusters().into_iter().map(|c| c.into_iter().map(|i| i + 1).collect()).collect();
        let file = PartitionFile { n: self.n(), clusters };
        serde_json::to_string_pretty(&file).expect("partition serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(fs::write(path, self.to_json())?)
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.sizes.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Sorted 0-based node lists per cluster.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (i, &c) in self.assignment.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

/// The binary `n x r` matrix with `Pi_ij = 1` iff node `i` is in cluster `j`,
/// kept in assignment form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacteristicMatrix {
    partition: ClusterPartition,
}

impl CharacteristicMatrix {
    pub fn n(&self) -> usize {
        self.partition.n()
    }

    pub fn r(&self) -> usize {
        self.partition.num_clusters()
    }

    pub fn partition(&self) -> &ClusterPartition {
        &self.partition
    }

    /// Diagonal of `Pi^T Pi`, the cluster sizes.
    pub fn counts(&self) -> &[usize] {
        self.partition.cluster_sizes()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut pi = DMatrix::zeros(self.n(), self.r());
        for (i, &c) in self.partition.assignment().iter().enumerate() {
            pi[(i, c)] = 1.0;
        }
        pi
    }

    /// `(Pi^T Pi)^{-1} Pi^T M`: rows of `M` averaged per cluster.
    pub fn average_rows(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.r(), m.ncols());
        for (i, &c) in self.partition.assignment().iter().enumerate() {
            for j in 0..m.ncols() {
                out[(c, j)] += m[(i, j)];
            }
        }
        self.scale_rows(&mut out);
        out
    }

    /// `M Pi`: columns of `M` summed per cluster.
    pub fn sum_columns(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(m.nrows(), self.r());
        for (j, &c) in self.partition.assignment().iter().enumerate() {
            for i in 0..m.nrows() {
                out[(i, c)] += m[(i, j)];
            }
        }
        out
    }

    /// `(Pi^T Pi)^{-1} Pi^T A Pi` without forming `Pi`.
    pub fn project_state(&self, a: &StateMatrix) -> DMatrix<f64> {
        let assign = self.partition.assignment();
        let r = self.r();
        let mut out = DMatrix::zeros(r, r);
        match a {
            StateMatrix::Sparse(s) => {
                for (i, j, v) in s.triplets() {
                    out[(assign[i], assign[j])] += v;
                }
            }
            StateMatrix::Dense(d) => {
                for j in 0..d.ncols() {
                    for i in 0..d.nrows() {
                        out[(assign[i], assign[j])] += d[(i, j)];
                    }
                }
            }
        }
        self.scale_rows(&mut out);
        out
    }

    fn scale_rows(&self, m: &mut DMatrix<f64>) {
        for (k, &size) in self.counts().iter().enumerate() {
            m.row_mut(k).scale_mut(1.0 / size as f64);
        }
    }
}

pub fn build_characteristic_matrix(partition: &ClusterPartition) -> CharacteristicMatrix {
    CharacteristicMatrix { partition: partition.clone() }
}

/// How the diagonal shift `alpha` of the initial reduced model is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaPolicy {
    /// `alpha = max(0, sigma + max(0.01 |sigma|, 1e-8))` with `sigma` the
    /// abscissa of the unshifted aggregate.
    Auto,
    Fixed(f64),
}

pub fn auto_alpha(sigma: f64) -> f64 {
    (sigma + (0.01 * sigma.abs()).max(1e-8)).max(0.0)
}

/// Aggregated model `((Pi^T Pi)^{-1} Pi^T A Pi - alpha I, (Pi^T Pi)^{-1} Pi^T B, C Pi)`,
/// returned with the `alpha` used.
///
/// The full model must be positive; an explicit `alpha` that leaves the
/// result unstable is an error.
pub fn initial_reduced_model(
    full: &StateSpaceModel,
    pi: &CharacteristicMatrix,
    alpha: AlphaPolicy,
) -> Result<(StateSpaceModel, f64)> {
    if pi.n() != full.n() {
        return Err(Error::mismatch("partition size", full.n(), pi.n()));
    }
    let report = positivity_report(full, 0.0);
    if !report.is_positive() {
        return Err(Error::InvalidParameter(format!(
            "full model is not positive (worst entry {:e} at {:?})",
            report.worst_violation, report.location
        )));
    }
    let mut ar = pi.project_state(full.a());
    let br = pi.average_rows(full.b());
    let cr = pi.sum_columns(full.c());
    let opts = EigenOptions::default();
    let alpha = match alpha {
        AlphaPolicy::Auto => auto_alpha(spectral_abscissa(MatrixRef::Dense(&ar), &opts)?),
        AlphaPolicy::Fixed(a) if a >= 0.0 && a.is_finite() => a,
        AlphaPolicy::Fixed(a) => {
            return Err(Error::InvalidParameter(format!("alpha must be >= 0, got {a}")))
        }
    };
    for k in 0..ar.nrows() {
        ar[(k, k)] -= alpha;
    }
    let model = StateSpaceModel::dense(ar, br, cr)?;
    model.require_stable("initial reduced A")?;
    Ok((model, alpha))
}

/// Zero sets of an initial reduced model; entries with `|value| <= ztol` are
/// pattern zeros and the diagonal of `A_r` is never patterned.
pub fn reduced_graph_pattern(reduced: &StateSpaceModel, ztol: f64) -> Result<SparsityPattern> {
    SparsityPattern::from_matrices(&reduced.a_dense(), reduced.b(), reduced.c(), ztol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasible::IndexSet;
    use crate::sysmodel::heat2d;

    fn path3() -> StateSpaceModel {
        StateSpaceModel::dense(
            DMatrix::from_row_slice(3, 3, &[-2.0, 1.0, 0.0, 1.0, -2.0, 1.0, 0.0, 1.0, -2.0]),
            DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]),
            DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]),
        )
        .unwrap()
    }

    fn two_clusters() -> ClusterPartition {
        ClusterPartition::from_clusters(3, &[vec![0, 1], vec![2]]).unwrap()
    }

    #[test]
    fn characteristic_matrix_examples() {
        let pi = build_characteristic_matrix(&two_clusters());
        let dense = pi.to_dense();
        assert_eq!(dense, DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0]));
        assert_eq!(dense.transpose() * &dense, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]));
        assert_eq!(pi.counts(), &[2, 1]);
        let id = build_characteristic_matrix(&ClusterPartition::singletons(4).unwrap());
        assert_eq!(id.to_dense(), DMatrix::identity(4, 4));
    }

    #[test]
    fn partition_validation() {
        assert!(ClusterPartition::from_clusters(3, &[vec![0, 1], vec![]]).is_err());
        assert!(ClusterPartition::from_clusters(3, &[vec![0, 1], vec![1, 2]]).is_err());
        assert!(ClusterPartition::from_clusters(3, &[vec![0, 1]]).is_err());
        assert!(ClusterPartition::from_clusters(3, &[vec![0, 1], vec![3]]).is_err());
        assert!(ClusterPartition::from_assignment(vec![0, 2, 2]).is_err());
        assert!(ClusterPartition::from_json(r#"{"n": 2, "clusters": [[0], [1]]}"#).is_err());
    }

    #[test]
    fn json_round_trip_is_one_based() {
        let p = ClusterPartition::from_json(r#"{"n": 3, "clusters": [[1, 2], [3]]}"#).unwrap();
        assert_eq!(p, two_clusters());
        assert_eq!(ClusterPartition::from_json(&p.to_json()).unwrap(), p);
    }

    #[test]
    fn aggregated_model_example() {
        let pi = build_characteristic_matrix(&two_clusters());
        let (red, alpha) = initial_reduced_model(&path3(), &pi, AlphaPolicy::Fixed(0.0)).unwrap();
        assert_eq!(alpha, 0.0);
        assert_eq!(red.a_dense(), DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 1.0, -2.0]));
        assert_eq!(red.b(), &DMatrix::from_row_slice(2, 1, &[0.5, 0.0]));
        assert_eq!(red.c(), &DMatrix::from_row_slice(1, 2, &[0.0, 1.0]));
        let expected = (-3.0 + 3f64.sqrt()) / 2.0;
        assert!((red.spectral_abscissa().unwrap() - expected).abs() < 1e-14);

        // Dense Pi oracle.
        let dense = pi.to_dense();
        let gram_inv = DMatrix::from_diagonal(&(dense.transpose() * &dense).diagonal().map(|d| 1.0 / d));
        let oracle = &gram_inv * dense.transpose() * path3().a_dense() * &dense;
        assert!((oracle - red.a_dense()).norm() < 1e-15);

        // Auto leaves an already stable aggregate alone.
        let (_, alpha) = initial_reduced_model(&path3(), &pi, AlphaPolicy::Auto).unwrap();
        assert_eq!(alpha, 0.0);
    }

    #[test]
    fn identity_partition_reproduces_model() {
        let pi = build_characteristic_matrix(&ClusterPartition::singletons(3).unwrap());
        let (red, _) = initial_reduced_model(&path3(), &pi, AlphaPolicy::Fixed(0.0)).unwrap();
        assert_eq!(red, path3());
    }

    #[test]
    fn auto_alpha_stabilizes_semistable_aggregate() {
        // Row sums zero: the aggregate has eigenvalue 0.
        let full = StateSpaceModel::dense(
            DMatrix::from_row_slice(3, 3, &[-1.0, 1.0, 0.0, 1.0, -2.0, 1.0, 0.0, 1.0, -1.0]),
            DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]),
            DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]),
        )
        .unwrap();
        let pi = build_characteristic_matrix(&two_clusters());
        assert!(matches!(
            initial_reduced_model(&full, &pi, AlphaPolicy::Fixed(0.0)),
            Err(Error::Unstable { .. })
        ));
        let (red, alpha) = initial_reduced_model(&full, &pi, AlphaPolicy::Auto).unwrap();
        assert!(alpha > 0.0 && alpha < 1e-6);
        assert!(red.spectral_abscissa().unwrap() < 0.0);
    }

    #[test]
    fn pattern_examples() {
        let red = StateSpaceModel::dense(
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 1.0, -2.0]),
            DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
        )
        .unwrap();
        let pat = reduced_graph_pattern(&red, 0.0).unwrap();
        assert_eq!(pat.za(), &IndexSet::from([(0, 1)]));
    }

    #[test]
    fn heat_clusters_form_a_grid() {
        let (full, hint) = heat2d(8).unwrap();
        let pi = build_characteristic_matrix(&hint.unwrap());
        let (red, _) = initial_reduced_model(&full, &pi, AlphaPolicy::Auto).unwrap();
        let pat = reduced_graph_pattern(&red, 0.0).unwrap();
        let mut expected = IndexSet::new();
        for i in 0..16usize {
            for j in 0..16usize {
                let (ri, ci, rj, cj) = (i / 4, i % 4, j / 4, j % 4);
                let adjacent = ri.abs_diff(rj) + ci.abs_diff(cj) == 1;
                if i != j && !adjacent {
                    expected.insert((i, j));
                }
            }
        }
        assert_eq!(pat.za(), &expected);
        assert!(crate::feasible::check_irreducible(&red.a_dense()));
    }
}
