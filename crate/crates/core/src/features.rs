//! Node feature pipeline: supervised discretization, skew correction, and
//! assembly of the attribute (AFT) and structural (SFT) feature tensors.
//!
//! Attribute values are discretized bottom-up by merging adjacent intervals
//! whose class distributions look independent under the chi-squared test,
//! with a decreasing significance schedule and an inconsistency-rate guard;
//! the resulting bins are one-hot encoded. Structural rows combine degree,
//! flight connectivity, and the per-node motif degrees, max-normalized per
//! column.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::DenseMatrix;
use crate::motifs::NmdVector;

/// Scalar node attributes, one value per family indicator.
///
/// The medical family carries two indicators (ICU beds and the
/// death/confirmed ratio), so six scalars cover the five families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawAttributes {
    pub population_density: f64,
    pub icu_beds_per_1000: f64,
    pub death_rate: f64,
    pub temperature_c: f64,
    pub unemployment_rate: f64,
    pub mobility_mean: f64,
    pub confirmed_14d: u64,
}

/// The discretizable scalar attributes, in AFT column-block order
/// (demographic, medical, geo-climatic, economic, mobility).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttrKind {
    PopulationDensity,
    IcuBedsPer1000,
    DeathRate,
    TemperatureC,
    UnemploymentRate,
    MobilityMean,
}

impl AttrKind {
    pub const ALL: [AttrKind; 6] = [
        AttrKind::PopulationDensity,
        AttrKind::IcuBedsPer1000,
        AttrKind::DeathRate,
        AttrKind::TemperatureC,
        AttrKind::UnemploymentRate,
        AttrKind::MobilityMean,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttrKind::PopulationDensity => "population_density",
            AttrKind::IcuBedsPer1000 => "icu_beds_per_1000",
            AttrKind::DeathRate => "death_rate",
            AttrKind::TemperatureC => "temperature_c",
            AttrKind::UnemploymentRate => "unemployment_rate",
            AttrKind::MobilityMean => "mobility_mean",
        }
    }

    pub fn from_name(name: &str) -> Option<AttrKind> {
        AttrKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl RawAttributes {
    pub fn value(&self, kind: AttrKind) -> f64 {
        match kind {
            AttrKind::PopulationDensity => self.population_density,
            AttrKind::IcuBedsPer1000 => self.icu_beds_per_1000,
            AttrKind::DeathRate => self.death_rate,
            AttrKind::TemperatureC => self.temperature_c,
            AttrKind::UnemploymentRate => self.unemployment_rate,
            AttrKind::MobilityMean => self.mobility_mean,
        }
    }
}

/// Chi-squared statistic of a 2-row contingency table of counts.
///
/// Degenerate cells with zero expected frequency contribute nothing.
pub fn chi2_statistic(row_a: &[u64], row_b: &[u64]) -> Result<f64> {
    assert_eq!(row_a.len(), row_b.len(), "contingency rows differ in length");
    let total: u64 = row_a.iter().chain(row_b).sum();
    if total == 0 {
        return Err(Error::EmptyContingency);
    }
    let n = total as f64;
    let sum_a: u64 = row_a.iter().sum();
    let sum_b: u64 = row_b.iter().sum();
    let mut chi2 = 0.0;
    for j in 0..row_a.len() {
        let col = (row_a[j] + row_b[j]) as f64;
        for (observed, row_sum) in [(row_a[j], sum_a), (row_b[j], sum_b)] {
            let expected = row_sum as f64 * col / n;
            if expected > 0.0 {
                let d = observed as f64 - expected;
                chi2 += d * d / expected;
            }
        }
    }
    Ok(chi2)
}

/// Interval boundaries of one discretized attribute.
///
/// `cuts` are strictly increasing interior boundaries; intervals are
/// left-closed and right-open, with the last interval closed, so a value
/// equal to a cut lands in the higher bin. `degenerate` marks schemes
/// built from fewer than two distinct values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationScheme {
    pub cuts: Vec<f64>,
    #[serde(default)]
    pub degenerate: bool,
}

impl DiscretizationScheme {
    pub fn bin_count(&self) -> usize {
        self.cuts.len() + 1
    }

    /// Bin index of `v`.
    pub fn assign(&self, v: f64) -> usize {
        self.cuts.partition_point(|&c| c <= v)
    }
}

/// Configuration for the chi-squared discretizer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Chi2Config {
    /// Decreasing significance-level schedule for the merge cutoff.
    pub sig_levels: Vec<f64>,
    /// Maximum tolerated inconsistency rate during voluntary merging.
    pub inconsistency_limit: f64,
    /// Hard cap on the number of bins.
    pub max_bins: usize,
}

impl Default for Chi2Config {
    fn default() -> Self {
        Chi2Config {
            sig_levels: vec![0.5, 0.1, 0.05, 0.01, 0.005, 0.001],
            inconsistency_limit: 0.05,
            max_bins: 10,
        }
    }
}

#[derive(Clone)]
struct Interval {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
}

fn inconsistency_rate(intervals: &[Interval], total: u64) -> f64 {
    let conflicting: u64 = intervals
        .iter()
        .map(|iv| {
            let sum: u64 = iv.counts.iter().sum();
            sum - iv.counts.iter().copied().max().unwrap_or(0)
        })
        .sum();
    conflicting as f64 / total as f64
}

fn merged(intervals: &[Interval], idx: usize) -> Interval {
    let mut counts = intervals[idx].counts.clone();
    for (c, o) in counts.iter_mut().zip(&intervals[idx + 1].counts) {
        *c += o;
    }
    Interval {
        lo: intervals[idx].lo,
        hi: intervals[idx + 1].hi,
        counts,
    }
}

/// Supervised bottom-up discretization of one attribute.
///
/// Adjacent intervals merge lowest-chi-squared first while the statistic
/// stays under the current significance cutoff; the schedule decreases
/// until a merge would push the inconsistency rate past the limit, which
/// freezes voluntary merging. The bin count is then capped at `max_bins`
/// by forced lowest-chi-squared merges.
pub fn chi2_discretize(
    values: &[f64],
    labels: &[usize],
    config: &Chi2Config,
) -> Result<DiscretizationScheme> {
    assert_eq!(values.len(), labels.len(), "values and labels differ in length");
    assert!(!values.is_empty(), "empty attribute column");
    let classes = labels.iter().copied().max().unwrap_or(0) + 1;
    let total = values.len() as u64;

    let mut pairs: Vec<(f64, usize)> = values.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("non-finite attribute value"));

    let mut intervals: Vec<Interval> = Vec::new();
    for (v, label) in pairs {
        match intervals.last_mut() {
            Some(last) if last.hi == v => last.counts[label] += 1,
            _ => {
                let mut counts = vec![0u64; classes];
                counts[label] = 1;
                intervals.push(Interval {
                    lo: v,
                    hi: v,
                    counts,
                });
            }
        }
    }

    if intervals.len() < 2 {
        return Ok(DiscretizationScheme {
            cuts: Vec::new(),
            degenerate: true,
        });
    }

    let pair_chi2 = |intervals: &[Interval], idx: usize| -> f64 {
        chi2_statistic(&intervals[idx].counts, &intervals[idx + 1].counts)
            .expect("intervals hold at least one observation each")
    };
    let lowest_pair = |intervals: &[Interval]| -> (usize, f64) {
        (0..intervals.len() - 1)
            .map(|i| (i, pair_chi2(intervals, i)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap()
    };

    // Voluntary merging under the decreasing significance schedule.
    'schedule: for &sig in &config.sig_levels {
        let cutoff = if classes >= 2 {
            ChiSquared::new((classes - 1) as f64)
                .expect("positive degrees of freedom")
                .inverse_cdf(1.0 - sig)
        } else {
            f64::INFINITY
        };
        while intervals.len() > 1 {
            let (idx, chi2) = lowest_pair(&intervals);
            if chi2 >= cutoff {
                break;
            }
            let candidate = merged(&intervals, idx);
            let mut trial: Vec<Interval> = intervals.clone();
            trial[idx] = candidate;
            trial.remove(idx + 1);
            if inconsistency_rate(&trial, total) > config.inconsistency_limit {
                break 'schedule;
            }
            intervals = trial;
        }
    }

    // Hard cap from the target category count.
    while intervals.len() > config.max_bins.max(1) {
        let (idx, _) = lowest_pair(&intervals);
        let candidate = merged(&intervals, idx);
        intervals[idx] = candidate;
        intervals.remove(idx + 1);
    }

    let cuts = intervals
        .windows(2)
        .map(|w| (w[0].hi + w[1].lo) / 2.0)
        .collect();
    Ok(DiscretizationScheme {
        cuts,
        degenerate: false,
    })
}

/// Named discretization schemes, serializable as attribute name to
/// cut-point list so train-time schemes can be reused at predict time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SchemeSet {
    schemes: BTreeMap<AttrKind, DiscretizationScheme>,
}

impl SchemeSet {
    pub fn insert(&mut self, kind: AttrKind, scheme: DiscretizationScheme) {
        self.schemes.insert(kind, scheme);
    }

    pub fn get(&self, kind: AttrKind) -> Option<&DiscretizationScheme> {
        self.schemes.get(&kind)
    }

    pub fn to_json(&self) -> String {
        let map: BTreeMap<&str, &[f64]> = self
            .schemes
            .iter()
            .map(|(k, s)| (k.name(), s.cuts.as_slice()))
            .collect();
        serde_json::to_string_pretty(&map).expect("scheme map serializes")
    }

    pub fn from_json(text: &str) -> Result<SchemeSet> {
        let map: BTreeMap<String, Vec<f64>> = serde_json::from_str(text)?;
        let mut set = SchemeSet::default();
        for (name, cuts) in map {
            let kind = AttrKind::from_name(&name).ok_or_else(|| Error::BadConfig {
                reason: format!("unknown attribute `{name}` in scheme file"),
            })?;
            set.insert(
                kind,
                DiscretizationScheme {
                    degenerate: cuts.is_empty(),
                    cuts,
                },
            );
        }
        Ok(set)
    }

    /// Fit one scheme per requested attribute from a raw table.
    pub fn fit(
        raw: &[RawAttributes],
        labels: &[usize],
        attrs: &[AttrKind],
        config: &Chi2Config,
    ) -> Result<SchemeSet> {
        let mut set = SchemeSet::default();
        for &kind in attrs {
            let column: Vec<f64> = raw.iter().map(|r| r.value(kind)).collect();
            set.insert(kind, chi2_discretize(&column, labels, config)?);
        }
        Ok(set)
    }

    /// Fit schemes on box-cox-transformed columns, then map the cut points
    /// back into raw units. Bin membership still evaluates on raw values,
    /// so the serialized scheme stays self-contained; the transform only
    /// relocates the cuts (it is monotone).
    pub fn fit_with_boxcox(
        raw: &[RawAttributes],
        labels: &[usize],
        attrs: &[AttrKind],
        config: &Chi2Config,
    ) -> Result<SchemeSet> {
        let mut set = SchemeSet::default();
        for &kind in attrs {
            let column: Vec<f64> = raw.iter().map(|r| r.value(kind)).collect();
            let min = column.iter().copied().fold(f64::INFINITY, f64::min);
            let shifted = shift_positive(&column);
            let (transformed, lambda) = boxcox(&shifted)?;
            let mut scheme = chi2_discretize(&transformed, labels, config)?;
            for cut in &mut scheme.cuts {
                *cut = boxcox_inverse(*cut, lambda) + min - 1.0;
            }
            set.insert(kind, scheme);
        }
        Ok(set)
    }
}

/// One-parameter power transform toward symmetry.
///
/// `lambda` 0 maps to the natural log; otherwise `(x^lambda - 1) / lambda`.
pub fn boxcox_with_lambda(values: &[f64], lambda: f64) -> Result<Vec<f64>> {
    for (index, &v) in values.iter().enumerate() {
        if v <= 0.0 || !v.is_finite() {
            return Err(Error::NonPositiveBoxcox { index, value: v });
        }
    }
    Ok(values
        .iter()
        .map(|&x| {
            if lambda == 0.0 {
                x.ln()
            } else {
                (x.powf(lambda) - 1.0) / lambda
            }
        })
        .collect())
}

/// Fit the transform parameter by profile log-likelihood over a grid on
/// [-5, 5] with step 0.01, then transform.
pub fn boxcox(values: &[f64]) -> Result<(Vec<f64>, f64)> {
    for (index, &v) in values.iter().enumerate() {
        if v <= 0.0 || !v.is_finite() {
            return Err(Error::NonPositiveBoxcox { index, value: v });
        }
    }
    let n = values.len() as f64;
    let log_sum: f64 = values.iter().map(|v| v.ln()).sum();
    let mut best = (f64::NEG_INFINITY, 0.0);
    for step in -500..=500 {
        let lambda = step as f64 / 100.0;
        let transformed = boxcox_with_lambda(values, lambda)?;
        let mean = transformed.iter().sum::<f64>() / n;
        let var = transformed.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
        if var <= 0.0 {
            continue;
        }
        let ll = -0.5 * n * var.ln() + (lambda - 1.0) * log_sum;
        if ll > best.0 {
            best = (ll, lambda);
        }
    }
    let lambda = best.1;
    Ok((boxcox_with_lambda(values, lambda)?, lambda))
}

/// Shift a column to strictly positive values: `x - min(x) + 1`.
pub fn shift_positive(values: &[f64]) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values.iter().map(|v| v - min + 1.0).collect()
}

/// Inverse of [`boxcox_with_lambda`] for values inside the transformed range.
pub fn boxcox_inverse(y: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        y.exp()
    } else {
        (1.0 + lambda * y).powf(1.0 / lambda)
    }
}

/// Sample skewness; 0 for constant data.
pub fn skewness(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if m2 == 0.0 {
        return 0.0;
    }
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

/// One-hot vector of length `classes` with a 1 at `category`.
pub fn one_hot(category: usize, classes: usize) -> Result<Vec<f64>> {
    if category >= classes {
        return Err(Error::CategoryOutOfRange { category, classes });
    }
    let mut v = vec![0.0; classes];
    v[category] = 1.0;
    Ok(v)
}

/// Role tag distinguishing the two feature tensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TensorRole {
    Aft,
    Sft,
}

/// Node-by-feature matrix tagged with its role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTensor {
    pub matrix: DenseMatrix,
    pub role: TensorRole,
}

/// Assemble the attribute feature tensor: per node, the concatenation of
/// one-hot blocks for each attribute in `attrs` order.
pub fn build_aft(
    node_ids: &[String],
    raw: &[RawAttributes],
    schemes: &SchemeSet,
    attrs: &[AttrKind],
) -> Result<FeatureTensor> {
    assert_eq!(node_ids.len(), raw.len(), "node ids and attribute rows differ");
    let mut blocks = Vec::with_capacity(attrs.len());
    for &kind in attrs {
        let scheme = schemes.get(kind).ok_or_else(|| Error::MissingScheme {
            attribute: kind.name().to_string(),
        })?;
        blocks.push((kind, scheme));
    }
    let width: usize = blocks.iter().map(|(_, s)| s.bin_count()).sum();
    let mut matrix = DenseMatrix::zeros(raw.len(), width);
    for (node, attrs_row) in raw.iter().enumerate() {
        let mut offset = 0;
        for &(kind, scheme) in &blocks {
            let v = attrs_row.value(kind);
            if !v.is_finite() {
                return Err(Error::MissingAttribute {
                    node: node_ids[node].clone(),
                    attribute: kind.name().to_string(),
                });
            }
            matrix.set(node, offset + scheme.assign(v), 1.0);
            offset += scheme.bin_count();
        }
    }
    Ok(FeatureTensor {
        matrix,
        role: TensorRole::Aft,
    })
}

/// Number of structural feature columns.
pub const SFT_WIDTH: usize = 8;

/// Assemble the structural feature tensor: per node
/// `[degree, flight_degree, transport_freq, mt31..mt43]`, each column
/// scaled to [0, 1] by its maximum.
pub fn build_sft(g: &Graph, nmd: &[NmdVector], transport_freq: &[f64]) -> Result<FeatureTensor> {
    let n = g.node_count();
    if nmd.len() != n {
        return Err(Error::MissingNmd {
            node: g.node_id(nmd.len().min(n.saturating_sub(1))).to_string(),
        });
    }
    assert_eq!(transport_freq.len(), n, "transport frequencies differ in length");
    let mut matrix = DenseMatrix::zeros(n, SFT_WIDTH);
    for v in 0..n {
        let row = matrix.row_mut(v);
        row[0] = g.degree(v) as f64;
        row[1] = g.flight_degree(v) as f64;
        row[2] = transport_freq[v];
        for (k, &c) in nmd[v].counts.iter().enumerate() {
            row[3 + k] = c as f64;
        }
    }
    for col in 0..SFT_WIDTH {
        let max = (0..n).map(|i| matrix.get(i, col)).fold(0.0, f64::max);
        if max > 0.0 {
            for i in 0..n {
                let v = matrix.get(i, col);
                matrix.set(i, col, v / max);
            }
        }
    }
    Ok(FeatureTensor {
        matrix,
        role: TensorRole::Sft,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, ids, EdgeKind, EdgeSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn chi2_uniform_table_is_zero() {
        assert_abs_diff_eq!(chi2_statistic(&[5, 5], &[5, 5]).unwrap(), 0.0);
    }

    #[test]
    fn chi2_diagonal_table() {
        assert_abs_diff_eq!(chi2_statistic(&[10, 0], &[0, 10]).unwrap(), 20.0);
    }

    #[test]
    fn chi2_degenerate_column_contributes_zero() {
        assert_abs_diff_eq!(chi2_statistic(&[1, 0], &[0, 0]).unwrap(), 0.0);
    }

    #[test]
    fn chi2_rejects_all_zero() {
        assert!(matches!(
            chi2_statistic(&[0, 0], &[0, 0]),
            Err(Error::EmptyContingency)
        ));
    }

    #[test]
    fn chi2_permutation_invariant() {
        let a = [3, 7, 1];
        let b = [4, 2, 9];
        let base = chi2_statistic(&a, &b).unwrap();
        // swap rows
        assert_abs_diff_eq!(chi2_statistic(&b, &a).unwrap(), base, epsilon = 1e-12);
        // permute columns on both rows
        let ap = [1, 3, 7];
        let bp = [9, 4, 2];
        assert_abs_diff_eq!(chi2_statistic(&ap, &bp).unwrap(), base, epsilon = 1e-12);
    }

    #[test]
    fn discretize_two_class_example() {
        let scheme = chi2_discretize(
            &[1.0, 2.0, 3.0, 4.0],
            &[0, 0, 1, 1],
            &Chi2Config {
                inconsistency_limit: 0.0,
                ..Chi2Config::default()
            },
        )
        .unwrap();
        assert_eq!(scheme.bin_count(), 2);
        assert_eq!(scheme.cuts.len(), 1);
        assert!(scheme.cuts[0] > 2.0 && scheme.cuts[0] < 3.0);
        assert_eq!(scheme.assign(2.0), 0);
        assert_eq!(scheme.assign(3.0), 1);
    }

    #[test]
    fn discretize_uniform_labels_single_bin() {
        let values: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let labels = vec![0usize; 20];
        let scheme = chi2_discretize(&values, &labels, &Chi2Config::default()).unwrap();
        assert_eq!(scheme.bin_count(), 1);
        assert!(!scheme.degenerate);
    }

    #[test]
    fn discretize_respects_max_bins() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let values: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        let labels: Vec<usize> = (0..100).map(|_| rng.random_range(0..4)).collect();
        let scheme = chi2_discretize(&values, &labels, &Chi2Config::default()).unwrap();
        assert!(scheme.bin_count() <= 10);
        for w in scheme.cuts.windows(2) {
            assert!(w[0] < w[1], "cut points not strictly increasing");
        }
    }

    #[test]
    fn discretize_degenerate_input() {
        let scheme = chi2_discretize(&[2.0, 2.0, 2.0], &[0, 1, 0], &Chi2Config::default()).unwrap();
        assert!(scheme.degenerate);
        assert_eq!(scheme.bin_count(), 1);
    }

    #[test]
    fn bin_assignment_left_closed() {
        let scheme = DiscretizationScheme {
            cuts: vec![1.0, 2.0],
            degenerate: false,
        };
        assert_eq!(scheme.assign(0.5), 0);
        assert_eq!(scheme.assign(1.0), 1); // on the cut: right bin
        assert_eq!(scheme.assign(1.5), 1);
        assert_eq!(scheme.assign(2.0), 2);
        assert_eq!(scheme.assign(99.0), 2);
    }

    #[test]
    fn scheme_set_json_round_trip() {
        let mut set = SchemeSet::default();
        set.insert(
            AttrKind::TemperatureC,
            DiscretizationScheme {
                cuts: vec![0.0, 10.0, 20.0],
                degenerate: false,
            },
        );
        let json = set.to_json();
        assert!(json.contains("temperature_c"));
        let back = SchemeSet::from_json(&json).unwrap();
        assert_eq!(back.get(AttrKind::TemperatureC).unwrap().cuts, vec![0.0, 10.0, 20.0]);
    }

    #[test]
    fn boxcox_lambda_one_is_shift() {
        let xs = [1.0, 2.5, 7.0];
        let ys = boxcox_with_lambda(&xs, 1.0).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert_abs_diff_eq!(y + 1.0, *x, epsilon = 1e-15);
        }
    }

    #[test]
    fn boxcox_lambda_zero_is_log() {
        let ys = boxcox_with_lambda(&[std::f64::consts::E], 0.0).unwrap();
        assert_abs_diff_eq!(ys[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn boxcox_rejects_non_positive() {
        let err = boxcox(&[1.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("shift_positive"));
    }

    #[test]
    fn boxcox_lognormal_lambda_near_zero() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        // exp of a normal via Box-Muller from uniform pairs
        let xs: Vec<f64> = (0..1000)
            .map(|_| {
                let u1: f64 = rng.random::<f64>().max(1e-12);
                let u2: f64 = rng.random();
                let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                z.exp()
            })
            .collect();
        let (ys, lambda) = boxcox(&xs).unwrap();
        assert!(lambda.abs() < 0.2, "lambda = {lambda}");
        assert!(skewness(&ys).abs() <= skewness(&xs).abs());
    }

    #[test]
    fn one_hot_examples() {
        assert_eq!(one_hot(0, 3).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(one_hot(2, 3).unwrap(), vec![0.0, 0.0, 1.0]);
        assert!(matches!(
            one_hot(3, 3),
            Err(Error::CategoryOutOfRange { category: 3, classes: 3 })
        ));
    }

    fn raw(v: f64) -> RawAttributes {
        RawAttributes {
            population_density: v,
            icu_beds_per_1000: v,
            death_rate: v,
            temperature_c: v,
            unemployment_rate: v,
            mobility_mean: v,
            confirmed_14d: 0,
        }
    }

    fn ten_bin_schemes(attrs: &[AttrKind]) -> SchemeSet {
        let mut set = SchemeSet::default();
        for &kind in attrs {
            set.insert(
                kind,
                DiscretizationScheme {
                    cuts: (1..10).map(|i| i as f64).collect(),
                    degenerate: false,
                },
            );
        }
        set
    }

    #[test]
    fn aft_shape_and_row_sum() {
        let attrs = [
            AttrKind::PopulationDensity,
            AttrKind::IcuBedsPer1000,
            AttrKind::TemperatureC,
            AttrKind::UnemploymentRate,
        ];
        let schemes = ten_bin_schemes(&attrs);
        let aft = build_aft(&ids(1), &[raw(3.5)], &schemes, &attrs).unwrap();
        assert_eq!(aft.matrix.rows(), 1);
        assert_eq!(aft.matrix.cols(), 40);
        assert_abs_diff_eq!(aft.matrix.row(0).iter().sum::<f64>(), 4.0);
        assert_eq!(aft.role, TensorRole::Aft);
    }

    #[test]
    fn aft_identical_nodes_identical_rows() {
        let attrs = [AttrKind::PopulationDensity, AttrKind::MobilityMean];
        let schemes = ten_bin_schemes(&attrs);
        let aft = build_aft(&ids(2), &[raw(2.0), raw(2.0)], &schemes, &attrs).unwrap();
        assert_eq!(aft.matrix.row(0), aft.matrix.row(1));
    }

    #[test]
    fn aft_missing_attribute_is_named() {
        let attrs = [AttrKind::DeathRate];
        let schemes = ten_bin_schemes(&attrs);
        let mut bad = raw(1.0);
        bad.death_rate = f64::NAN;
        let err = build_aft(&ids(1), &[bad], &schemes, &attrs).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("n0") && msg.contains("death_rate"));
    }

    #[test]
    fn aft_missing_scheme_is_named() {
        let attrs = [AttrKind::DeathRate];
        let err = build_aft(&ids(1), &[raw(1.0)], &SchemeSet::default(), &attrs).unwrap_err();
        assert!(err.to_string().contains("death_rate"));
    }

    fn simple(edges: &[(usize, usize)], n: usize) -> Graph {
        let node_ids = ids(n);
        let specs: Vec<EdgeSpec> = edges
            .iter()
            .map(|&(u, v)| {
                EdgeSpec::new(
                    node_ids[u].clone(),
                    node_ids[v].clone(),
                    EdgeKind::Adjacent,
                    1.0,
                )
            })
            .collect();
        build_graph(&node_ids, &specs).unwrap()
    }

    #[test]
    fn sft_triangle_normalizes_to_one() {
        let g = simple(&[(0, 1), (0, 2), (1, 2)], 3);
        let nmd = crate::motifs::count_nmd(&g);
        let sft = build_sft(&g, &nmd, &[0.0; 3]).unwrap();
        for v in 0..3 {
            assert_abs_diff_eq!(sft.matrix.get(v, 0), 1.0); // degree column
            assert_abs_diff_eq!(sft.matrix.get(v, 3), 1.0); // mt31 column
            assert_abs_diff_eq!(sft.matrix.get(v, 1), 0.0); // no flights
        }
    }

    #[test]
    fn sft_isolated_node_row_is_zero() {
        let g = simple(&[(0, 1), (0, 2), (1, 2)], 4);
        let nmd = crate::motifs::count_nmd(&g);
        let sft = build_sft(&g, &nmd, &[0.0; 4]).unwrap();
        assert!(sft.matrix.row(3).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sft_star_center_dominates() {
        let g = simple(&[(0, 1), (0, 2), (0, 3)], 4);
        let nmd = crate::motifs::count_nmd(&g);
        let sft = build_sft(&g, &nmd, &[0.0; 4]).unwrap();
        assert!(sft.matrix.get(0, 0) > sft.matrix.get(1, 0));
        assert_abs_diff_eq!(sft.matrix.get(0, 0), 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn discretizer_bins_partition_range(
            mut values in proptest::collection::vec(-100.0f64..100.0, 4..60),
            seed in 0u64..100,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let labels: Vec<usize> = values.iter().map(|_| rng.random_range(0..3)).collect();
            let scheme = chi2_discretize(&values, &labels, &Chi2Config::default()).unwrap();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            // cuts strictly inside the observed range, strictly increasing
            for w in scheme.cuts.windows(2) {
                prop_assert!(w[0] < w[1]);
            }
            if let (Some(first), Some(last)) = (scheme.cuts.first(), scheme.cuts.last()) {
                prop_assert!(*first > values[0]);
                prop_assert!(*last < values[values.len() - 1]);
            }
            // every observed value lands in a valid bin
            for v in &values {
                prop_assert!(scheme.assign(*v) < scheme.bin_count());
            }
        }

        #[test]
        fn boxcox_shift_identity(values in proptest::collection::vec(0.5f64..50.0, 1..40)) {
            // lambda 1 composed with +1 shift is the identity
            let ys = boxcox_with_lambda(&values, 1.0).unwrap();
            for (x, y) in values.iter().zip(&ys) {
                prop_assert!((y + 1.0 - x).abs() < 1e-12);
            }
        }
    }
}
