//! Datasets: synthetic blob generation, standardization, and deterministic
//! label-stratified splits. File ingestion (CSV, IDX) lives in the
//! companion crate.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::matrix::Matrix;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataError(pub String);

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "data error: {}", self.0)
    }
}

impl core::error::Error for DataError {}

/// Standardization statistics captured from a training split.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizeStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// A labeled dataset with row-per-example features.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    /// Statistics applied to the features, when standardized.
    pub normalization: Option<NormalizeStats>,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<usize>, num_classes: usize) -> Result<Self, DataError> {
        if labels.len() != features.rows() {
            return Err(DataError("label count must match feature rows".into()));
        }
        if num_classes < 2 {
            return Err(DataError("at least two classes required".into()));
        }
        if labels.iter().any(|&l| l >= num_classes) {
            return Err(DataError("label outside [0, num_classes)".into()));
        }
        Ok(Self {
            features,
            labels,
            num_classes,
            normalization: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn example(&self, i: usize) -> (&[f64], usize) {
        (self.features.row(i), self.labels[i])
    }

    /// New dataset from a nonempty subset of row indices.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        assert!(!indices.is_empty(), "cannot select an empty dataset");
        let dim = self.dim();
        let mut entries = Vec::with_capacity(indices.len() * dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            entries.extend_from_slice(self.features.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features: Matrix::new(indices.len(), dim, entries).expect("subset of a valid matrix"),
            labels,
            num_classes: self.num_classes,
            normalization: self.normalization.clone(),
        }
    }
}

/// Gaussian clusters around seeded random centers with pairwise center
/// distance at least `separation`; unit-variance clusters, classes filled
/// round-robin so counts differ by at most one.
pub fn gen_blobs(
    n: usize,
    classes: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset, DataError> {
    if n == 0 {
        return Err(DataError("empty dataset requested".into()));
    }
    if classes < 2 {
        return Err(DataError("at least two classes required".into()));
    }
    if dim == 0 {
        return Err(DataError("dimension must be positive".into()));
    }
    if !(separation >= 0.0) || !separation.is_finite() {
        return Err(DataError("separation must be nonnegative and finite".into()));
    }
    let mut center_rng = RngStream::new(seed, 0);
    // Centers drawn uniformly from a box wide enough that the separation
    // constraint is feasible; resampled as a set until it holds.
    let half_width = separation.max(1.0) * (classes as f64);
    let centers = 'search: {
        for _ in 0..1_000 {
            let candidate: Vec<Vec<f64>> = (0..classes)
                .map(|_| {
                    (0..dim)
                        .map(|_| (center_rng.next_f64() * 2.0 - 1.0) * half_width)
                        .collect()
                })
                .collect();
            let mut ok = true;
            'pairs: for i in 0..classes {
                for j in i + 1..classes {
                    let d2: f64 = candidate[i]
                        .iter()
                        .zip(&candidate[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    if libm::sqrt(d2) < separation {
                        ok = false;
                        break 'pairs;
                    }
                }
            }
            if ok {
                break 'search candidate;
            }
        }
        return Err(DataError(
            "could not place centers at the requested separation".into(),
        ));
    };

    let mut point_rng = RngStream::new(seed, 1);
    let mut entries = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % classes;
        for d in 0..dim {
            entries.push(centers[class][d] + point_rng.next_standard_normal());
        }
        labels.push(class);
    }
    Dataset::new(Matrix::new(n, dim, entries).map_err(|e| DataError(alloc::format!("{e}")))?, labels, classes)
}

/// Standardize each feature to zero mean and unit variance using the
/// dataset's own statistics; zero-variance features pass through. The
/// statistics are stored on the result for later reuse.
pub fn normalize(ds: &Dataset) -> Dataset {
    let n = ds.len();
    let dim = ds.dim();
    let mut means = vec![0.0; dim];
    for i in 0..n {
        for (m, v) in means.iter_mut().zip(ds.features.row(i)) {
            *m += v;
        }
    }
    for m in means.iter_mut() {
        *m /= n as f64;
    }
    let mut vars = vec![0.0; dim];
    for i in 0..n {
        for (s, (v, m)) in vars.iter_mut().zip(ds.features.row(i).iter().zip(&means)) {
            *s += (v - m) * (v - m);
        }
    }
    let stds: Vec<f64> = vars
        .iter()
        .map(|&v| {
            let s = libm::sqrt(v / n as f64);
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let stats = NormalizeStats { means, stds };
    apply_normalization(ds, &stats)
}

/// Standardize with externally supplied statistics (train-split statistics
/// applied to validation or test data).
pub fn apply_normalization(ds: &Dataset, stats: &NormalizeStats) -> Dataset {
    let dim = ds.dim();
    debug_assert_eq!(stats.means.len(), dim);
    let mut entries = Vec::with_capacity(ds.len() * dim);
    for i in 0..ds.len() {
        for (j, v) in ds.features.row(i).iter().enumerate() {
            entries.push((v - stats.means[j]) / stats.stds[j]);
        }
    }
    Dataset {
        features: Matrix::new(ds.len(), dim, entries).expect("normalized copy of a valid matrix"),
        labels: ds.labels.clone(),
        num_classes: ds.num_classes,
        normalization: Some(stats.clone()),
    }
}

/// Deterministic label-stratified split. `fractions` must sum to 1; every
/// part must end up nonempty. Within each class the rows are shuffled by
/// the seed and dealt out by cumulative rounding, so per-split class
/// proportions stay within one sample of expectation.
pub fn split(ds: &Dataset, fractions: &[f64], seed: u64) -> Result<Vec<Dataset>, DataError> {
    if fractions.is_empty() {
        return Err(DataError("at least one fraction required".into()));
    }
    if fractions.iter().any(|&f| f <= 0.0) {
        return Err(DataError("fractions must be positive".into()));
    }
    let total: f64 = fractions.iter().sum();
    if libm::fabs(total - 1.0) > 1e-9 {
        return Err(DataError("fractions must sum to 1".into()));
    }
    let parts = fractions.len();
    let mut per_part_indices: Vec<Vec<usize>> = vec![Vec::new(); parts];
    for class in 0..ds.num_classes {
        let mut rows: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == class).collect();
        let mut rng = RngStream::new(seed, class as u64);
        rng.shuffle(&mut rows);
        let n = rows.len();
        let mut cut_prev = 0usize;
        let mut cum = 0.0;
        for (p, frac) in fractions.iter().enumerate() {
            cum += frac;
            let cut = if p + 1 == parts {
                n
            } else {
                libm::round(cum * n as f64) as usize
            };
            per_part_indices[p].extend_from_slice(&rows[cut_prev..cut.min(n)]);
            cut_prev = cut.min(n);
        }
    }
    let mut out = Vec::with_capacity(parts);
    for (p, mut indices) in per_part_indices.into_iter().enumerate() {
        if indices.is_empty() {
            return Err(DataError(alloc::format!("split part {p} is empty")));
        }
        // Interleave classes rather than leaving them blocked together.
        let mut rng = RngStream::new(seed, 1_000 + p as u64);
        rng.shuffle(&mut indices);
        out.push(ds.select(&indices));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use splitz_oracles::logistic::SoftmaxRegression;

    #[test]
    fn blobs_are_deterministic_per_seed() {
        let a = gen_blobs(100, 3, 2, 4.0, 9).unwrap();
        let b = gen_blobs(100, 3, 2, 4.0, 9).unwrap();
        assert_eq!(a, b);
        let c = gen_blobs(100, 3, 2, 4.0, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn blobs_reject_degenerate_requests() {
        assert!(gen_blobs(0, 2, 2, 1.0, 0).is_err());
        assert!(gen_blobs(10, 1, 2, 1.0, 0).is_err());
        assert!(gen_blobs(10, 2, 0, 1.0, 0).is_err());
        // Far too many classes to separate this widely in one dimension.
        assert!(gen_blobs(10, 64, 1, 1e9, 0).is_err());
    }

    #[test]
    fn well_separated_blobs_are_linearly_separable() {
        let ds = gen_blobs(300, 2, 2, 10.0, 3).unwrap();
        let features: Vec<Vec<f64>> = (0..ds.len()).map(|i| ds.features.row(i).to_vec()).collect();
        let model = SoftmaxRegression::fit(&features, &ds.labels, 2, 400, 0.05);
        assert!(model.accuracy(&features, &ds.labels) >= 0.99);
    }

    #[test]
    fn class_counts_are_balanced() {
        let ds = gen_blobs(301, 3, 2, 3.0, 1).unwrap();
        let mut counts = [0usize; 3];
        for &l in &ds.labels {
            counts[l] += 1;
        }
        assert_eq!(counts.iter().sum::<usize>(), 301);
        assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
    }

    #[test]
    fn normalization_standardizes_and_is_idempotent_in_distribution() {
        let ds = gen_blobs(500, 2, 3, 5.0, 4).unwrap();
        let normed = normalize(&ds);
        let again = normalize(&normed);
        let dim = ds.dim();
        for j in 0..dim {
            let col: Vec<f64> = (0..again.len()).map(|i| again.features.get(i, j)).collect();
            let mean: f64 = col.iter().sum::<f64>() / col.len() as f64;
            let var: f64 =
                col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / col.len() as f64;
            assert!(mean.abs() < 1e-9);
            assert!((var - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_variance_features_pass_through() {
        let features = Matrix::new(3, 2, vec![5.0, 1.0, 5.0, 2.0, 5.0, 3.0]).unwrap();
        let ds = Dataset::new(features, vec![0, 1, 0], 2).unwrap();
        let normed = normalize(&ds);
        for i in 0..3 {
            assert_eq!(normed.features.get(i, 0), 0.0);
        }
        let stats = normed.normalization.as_ref().unwrap();
        assert_eq!(stats.stds[0], 1.0);
    }

    #[test]
    fn test_statistics_come_from_the_training_split() {
        let ds = gen_blobs(200, 2, 2, 6.0, 5).unwrap();
        let splits = split(&ds, &[0.8, 0.2], 0).unwrap();
        let train = normalize(&splits[0]);
        let stats = train.normalization.clone().unwrap();
        let test = apply_normalization(&splits[1], &stats);
        assert_eq!(test.normalization.unwrap(), stats);
    }

    #[test]
    fn split_fractions_must_sum_to_one() {
        let ds = gen_blobs(100, 2, 2, 3.0, 6).unwrap();
        assert!(split(&ds, &[0.5, 0.6], 0).is_err());
        assert!(split(&ds, &[], 0).is_err());
        assert!(split(&ds, &[1.0, -0.0], 0).is_err());
    }

    #[test]
    fn split_is_stratified_within_one_sample() {
        let ds = gen_blobs(400, 4, 2, 3.0, 7).unwrap();
        let parts = split(&ds, &[0.5, 0.25, 0.25], 11).unwrap();
        assert_eq!(parts.iter().map(Dataset::len).sum::<usize>(), 400);
        for (p, frac) in parts.iter().zip(&[0.5, 0.25, 0.25]) {
            for class in 0..4 {
                let count = p.labels.iter().filter(|&&l| l == class).count() as f64;
                let expected = frac * 100.0;
                assert!(
                    (count - expected).abs() <= 1.0,
                    "class {class}: {count} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn split_rejects_empty_parts() {
        let ds = gen_blobs(4, 2, 2, 3.0, 8).unwrap();
        assert!(split(&ds, &[0.999, 0.001], 0).is_err());
    }

    #[test]
    fn dataset_validates_labels() {
        let features = Matrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert!(Dataset::new(features.clone(), vec![0, 2], 2).is_err());
        assert!(Dataset::new(features.clone(), vec![0], 2).is_err());
        assert!(Dataset::new(features, vec![0, 1], 1).is_err());
    }
}
