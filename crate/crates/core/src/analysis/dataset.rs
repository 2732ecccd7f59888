use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::confidence::{bound_multinomial, bound_softmax, RawCounts, SoftmaxSums};
use crate::domain::{argmax_mechanism, CertificationOutcome, ExpectationBounds, ExpectationMode, NoiseConfig};
use crate::ensemble::{certify_ensemble, EnsembleConfig};
use crate::error::{Error, Result};
use crate::mechanisms::{certify, MechanismId, OptimizerSettings};

use super::wilcoxon::{wilcoxon_pratt, WilcoxonResult};

/// Default "meaningfully certified" cutoff on the radius.
pub const DEFAULT_THRESHOLD: f64 = 0.05;

/// Monte-Carlo evidence for one sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Evidence {
    Counts(RawCounts),
    Softmax(SoftmaxSums),
}

impl Evidence {
    pub fn mode(&self) -> ExpectationMode {
        match self {
            Evidence::Counts(_) => ExpectationMode::Multinomial,
            Evidence::Softmax(_) => ExpectationMode::Softmax,
        }
    }

    pub fn n(&self) -> u64 {
        match self {
            Evidence::Counts(c) => c.n(),
            Evidence::Softmax(s) => s.n(),
        }
    }

    pub fn classes(&self) -> usize {
        match self {
            Evidence::Counts(c) => c.classes(),
            Evidence::Softmax(s) => s.classes(),
        }
    }

    pub fn bound(&self, alpha: f64) -> Result<ExpectationBounds> {
        match self {
            Evidence::Counts(c) => bound_multinomial(c, alpha),
            Evidence::Softmax(s) => bound_softmax(s, alpha),
        }
    }
}

/// One sample of a dataset: its evidence, optional ground-truth label and,
/// once certified, the bounds and outcome derived from the evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    sample_id: String,
    label: Option<usize>,
    evidence: Evidence,
    certified: Option<(ExpectationBounds, CertificationOutcome)>,
}

impl SampleRecord {
    pub fn new(sample_id: impl Into<String>, label: Option<usize>, evidence: Evidence) -> Result<Self> {
        let sample_id = sample_id.into();
        if let Some(l) = label {
            if l >= evidence.classes() {
                return Err(Error::invalid(
                    "label",
                    format!("sample {sample_id}: label {l} but only {} classes", evidence.classes()),
                ));
            }
        }
        Ok(SampleRecord {
            sample_id,
            label,
            evidence,
            certified: None,
        })
    }

    /// Attach a previously computed certification.
    pub fn with_certification(mut self, bounds: ExpectationBounds, outcome: CertificationOutcome) -> Result<Self> {
        if bounds.mode() != self.evidence.mode() {
            return Err(Error::ModeMismatch {
                expected: self.evidence.mode(),
                found: bounds.mode(),
            });
        }
        self.certified = Some((bounds, outcome));
        Ok(self)
    }

    pub fn sample_id(&self) -> &str {
        &self.sample_id
    }

    pub fn label(&self) -> Option<usize> {
        self.label
    }

    pub fn evidence(&self) -> &Evidence {
        &self.evidence
    }

    pub fn bounds(&self) -> Option<&ExpectationBounds> {
        self.certified.as_ref().map(|(b, _)| b)
    }

    pub fn outcome(&self) -> Option<&CertificationOutcome> {
        self.certified.as_ref().map(|(_, o)| o)
    }

    /// Predicted class equals the label. `None` when unlabelled or not yet
    /// certified.
    pub fn is_correct(&self) -> Option<bool> {
        Some(self.outcome()?.predicted_class() == self.label?)
    }

    /// Bound the evidence and run the ensemble on it.
    pub fn certify(
        &self,
        alpha: f64,
        noise: &NoiseConfig,
        cfg: &EnsembleConfig,
        opt: &OptimizerSettings,
    ) -> Result<SampleRecord> {
        if self.evidence.mode() != cfg.mode() {
            return Err(Error::ModeMismatch {
                expected: cfg.mode(),
                found: self.evidence.mode(),
            });
        }
        let bounds = self.evidence.bound(alpha)?;
        let outcome = certify_ensemble(&bounds, noise, cfg, opt)?;
        self.clone().with_certification(bounds, outcome)
    }
}

/// Certify every record in parallel; output order follows input order.
pub fn certify_records(
    records: &[SampleRecord],
    alpha: f64,
    noise: &NoiseConfig,
    cfg: &EnsembleConfig,
    opt: &OptimizerSettings,
) -> Result<Vec<SampleRecord>> {
    records
        .par_iter()
        .map(|r| r.certify(alpha, noise, cfg, opt))
        .collect()
}

/// Which radius a metric reads from an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RadiusField {
    Mechanism(MechanismId),
    Ensemble,
}

impl RadiusField {
    pub fn read(self, outcome: &CertificationOutcome) -> f64 {
        match self {
            RadiusField::Mechanism(id) => outcome.radius(id),
            RadiusField::Ensemble => outcome.radius_ensemble(),
        }
    }
}

impl fmt::Display for RadiusField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadiusField::Mechanism(id) => id.fmt(f),
            RadiusField::Ensemble => f.write_str("ensemble"),
        }
    }
}

impl FromStr for RadiusField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("ensemble") {
            Ok(RadiusField::Ensemble)
        } else {
            s.parse().map(RadiusField::Mechanism)
        }
    }
}

fn certified_outcome(r: &SampleRecord) -> Result<&CertificationOutcome> {
    r.outcome()
        .ok_or_else(|| Error::invalid("record", format!("sample {} has not been certified", r.sample_id())))
}

/// `c_A(r)`: the fraction of records predicted correctly with a radius
/// strictly greater than `r`, for each requested `r`.
pub fn certified_accuracy_curve(
    records: &[SampleRecord],
    radii: &[f64],
    field: RadiusField,
) -> Result<Vec<(f64, f64)>> {
    if records.is_empty() {
        return Err(Error::invalid("records", "no samples"));
    }
    let mut certified = Vec::with_capacity(records.len());
    for r in records {
        let outcome = certified_outcome(r)?;
        let label = r
            .label()
            .ok_or_else(|| Error::invalid("label", format!("sample {} has no label", r.sample_id())))?;
        if outcome.predicted_class() == label {
            certified.push(field.read(outcome));
        }
    }
    let total = records.len() as f64;
    Ok(radii
        .iter()
        .map(|&r| (r, certified.iter().filter(|&&c| c > r).count() as f64 / total))
        .collect())
}

/// Per-mechanism columns of a summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSummary {
    pub field: RadiusField,
    pub median_radius: f64,
    pub mean_radius: f64,
    /// Share of samples on which this field is the ensemble winner. Not
    /// meaningful for the ensemble itself, which always reports 1.
    pub proportion_largest: f64,
    pub proportion_above_threshold: f64,
}

/// Ensemble versus a single baseline mechanism, over paired radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImprovementStats {
    pub baseline: MechanismId,
    pub wilcoxon: WilcoxonResult,
    pub proportion_improved: f64,
    pub median_absolute: f64,
    pub mean_absolute: f64,
    /// Over samples with a nonzero baseline radius; `None` if there are none.
    pub median_percent: Option<f64>,
    pub mean_percent: Option<f64>,
    /// Samples where the baseline abstains and the ensemble does not.
    pub infinite_improvements: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSummary {
    pub samples: usize,
    /// `None` when no record carries a label.
    pub top1_accuracy: Option<f64>,
    pub threshold: f64,
    pub mechanisms: Vec<FieldSummary>,
    pub ensemble: FieldSummary,
    pub improvement: ImprovementStats,
}

impl DatasetSummary {
    pub fn field(&self, field: RadiusField) -> Option<&FieldSummary> {
        match field {
            RadiusField::Ensemble => Some(&self.ensemble),
            RadiusField::Mechanism(_) => self.mechanisms.iter().find(|m| m.field == field),
        }
    }
}

/// Median of a sample; the mean of the two central values for even sizes.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Aggregate metrics over certified records.
///
/// Mechanisms are those enabled on every record. The baseline must be one
/// of them.
pub fn summarize(records: &[SampleRecord], threshold: f64, baseline: MechanismId) -> Result<DatasetSummary> {
    if records.is_empty() {
        return Err(Error::invalid("records", "no samples"));
    }
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return Err(Error::invalid("threshold", format!("{threshold} must be finite and nonnegative")));
    }
    let outcomes: Vec<&CertificationOutcome> = records.iter().map(certified_outcome).collect::<Result<_>>()?;
    let ids: Vec<MechanismId> = MechanismId::ALL
        .into_iter()
        .filter(|&id| outcomes.iter().all(|o| o.is_enabled(id)))
        .collect();
    if !ids.contains(&baseline) {
        return Err(Error::invalid("baseline", format!("{baseline} is not enabled on every sample")));
    }
    let total = records.len() as f64;

    let labelled: Vec<bool> = records.iter().filter_map(SampleRecord::is_correct).collect();
    let top1_accuracy =
        (!labelled.is_empty()).then(|| labelled.iter().filter(|&&c| c).count() as f64 / labelled.len() as f64);

    let winners: Vec<Option<MechanismId>> = outcomes
        .iter()
        .map(|o| {
            if o.abstained() {
                None
            } else {
                argmax_mechanism(ids.iter().map(|&id| (id, o.radius(id))))
            }
        })
        .collect();

    let column = |field: RadiusField, largest: f64| {
        let radii: Vec<f64> = outcomes.iter().map(|o| field.read(o)).collect();
        FieldSummary {
            field,
            median_radius: median(&radii),
            mean_radius: mean(&radii),
            proportion_largest: largest,
            proportion_above_threshold: radii.iter().filter(|&&r| r > threshold).count() as f64 / total,
        }
    };
    let mechanisms = ids
        .iter()
        .map(|&id| {
            let won = winners.iter().filter(|w| **w == Some(id)).count() as f64 / total;
            column(RadiusField::Mechanism(id), won)
        })
        .collect();
    let ensemble = column(RadiusField::Ensemble, 1.0);

    let ens: Vec<f64> = outcomes.iter().map(|o| o.radius_ensemble()).collect();
    let base: Vec<f64> = outcomes.iter().map(|o| o.radius(baseline)).collect();
    let wilcoxon = wilcoxon_pratt(&ens, &base)?;
    let diffs: Vec<f64> = ens.iter().zip(&base).map(|(e, b)| e - b).collect();
    let percents: Vec<f64> = ens
        .iter()
        .zip(&base)
        .filter(|(_, &b)| b > 0.0)
        .map(|(e, b)| 100.0 * (e - b) / b)
        .collect();
    let improvement = ImprovementStats {
        baseline,
        wilcoxon,
        proportion_improved: diffs.iter().filter(|&&d| d > 0.0).count() as f64 / total,
        median_absolute: median(&diffs),
        mean_absolute: mean(&diffs),
        median_percent: (!percents.is_empty()).then(|| median(&percents)),
        mean_percent: (!percents.is_empty()).then(|| mean(&percents)),
        infinite_improvements: ens.iter().zip(&base).filter(|(&e, &b)| b == 0.0 && e > 0.0).count(),
    };

    Ok(DatasetSummary {
        samples: records.len(),
        top1_accuracy,
        threshold,
        mechanisms,
        ensemble,
        improvement,
    })
}

/// Mechanism with the largest radius at a sample's bounds, or `None` when
/// every enabled mechanism abstains.
pub fn classify_sample_region(
    bounds: &ExpectationBounds,
    noise: &NoiseConfig,
    mechanisms: &EnsembleConfig,
    opt: &OptimizerSettings,
) -> Result<Option<MechanismId>> {
    if bounds.mode() != mechanisms.mode() {
        return Err(Error::ModeMismatch {
            expected: mechanisms.mode(),
            found: bounds.mode(),
        });
    }
    let radii: Vec<(MechanismId, f64)> = mechanisms
        .enabled()
        .map(|id| certify(id, bounds, noise, opt).map(|r| (id, r)))
        .collect::<Result<_>>()?;
    if radii.iter().all(|&(_, r)| r <= 0.0) {
        return Ok(None);
    }
    Ok(argmax_mechanism(radii))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::make_bounds;

    fn outcome(class: usize, radii: [Option<f64>; 4]) -> CertificationOutcome {
        CertificationOutcome::new(class, radii).unwrap()
    }

    fn record(id: &str, label: Option<usize>, o: CertificationOutcome) -> SampleRecord {
        let counts = RawCounts::new(vec![60, 40]).unwrap();
        let bounds = make_bounds(0.6, 0.4, ExpectationMode::Multinomial).unwrap();
        SampleRecord::new(id, label, Evidence::Counts(counts))
            .unwrap()
            .with_certification(bounds, o)
            .unwrap()
    }

    fn cohen_only(class: usize, r: f64) -> CertificationOutcome {
        outcome(class, [Some(r), None, None, None])
    }

    #[test]
    fn curve_hand_count() {
        let recs = vec![
            record("a", Some(0), cohen_only(0, 1.0)),
            record("b", Some(1), cohen_only(1, 0.5)),
            record("c", Some(1), cohen_only(0, 2.0)),
            record("d", Some(0), cohen_only(0, 0.0)),
        ];
        let curve = certified_accuracy_curve(&recs, &[0.0, 0.6, 5.0], RadiusField::Ensemble).unwrap();
        assert_eq!(curve, vec![(0.0, 0.5), (0.6, 0.25), (5.0, 0.0)]);
    }

    #[test]
    fn curve_needs_labels_and_outcomes() {
        let unlabelled = vec![record("a", None, cohen_only(0, 1.0))];
        assert!(certified_accuracy_curve(&unlabelled, &[0.0], RadiusField::Ensemble).is_err());
        let raw = SampleRecord::new("b", Some(0), Evidence::Counts(RawCounts::new(vec![1, 0]).unwrap())).unwrap();
        assert!(certified_accuracy_curve(&[raw], &[0.0], RadiusField::Ensemble).is_err());
    }

    #[test]
    fn label_out_of_range() {
        let counts = RawCounts::new(vec![1, 0]).unwrap();
        assert!(SampleRecord::new("x", Some(2), Evidence::Counts(counts)).is_err());
    }

    #[test]
    fn improvement_hand_example() {
        let recs = vec![
            record("a", Some(0), outcome(0, [Some(1.0), Some(2.0), None, None])),
            record("b", Some(0), outcome(0, [Some(1.0), Some(3.0), None, None])),
            record("c", Some(0), outcome(0, [Some(1.0), Some(1.0), None, None])),
        ];
        let s = summarize(&recs, DEFAULT_THRESHOLD, MechanismId::Cohen).unwrap();
        assert!((s.improvement.proportion_improved - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.improvement.median_absolute, 1.0);
        assert_eq!(s.improvement.mean_absolute, 1.0);
        assert_eq!(s.improvement.median_percent, Some(100.0));
        assert_eq!(s.improvement.wilcoxon.w_plus, 5.0);
        assert_eq!(s.improvement.wilcoxon.zeros, 1);
        assert_eq!(s.improvement.infinite_improvements, 0);
    }

    #[test]
    fn zero_baseline_counts_as_infinite() {
        let recs = vec![
            record("a", Some(0), outcome(0, [Some(0.0), Some(0.3), None, None])),
            record("b", Some(0), outcome(0, [Some(1.0), Some(1.5), None, None])),
        ];
        let s = summarize(&recs, DEFAULT_THRESHOLD, MechanismId::Cohen).unwrap();
        assert_eq!(s.improvement.infinite_improvements, 1);
        assert_eq!(s.improvement.mean_percent, Some(50.0));
    }

    #[test]
    fn equal_radii_give_null_test() {
        let recs: Vec<_> = (0..5)
            .map(|k| record(&k.to_string(), Some(0), outcome(0, [Some(0.5), Some(0.5), None, None])))
            .collect();
        let s = summarize(&recs, DEFAULT_THRESHOLD, MechanismId::Cohen).unwrap();
        assert_eq!(s.improvement.wilcoxon.statistic(), 0.0);
        assert_eq!(s.improvement.wilcoxon.p_value, 1.0);
        let cohen = s.field(RadiusField::Mechanism(MechanismId::Cohen)).unwrap();
        assert_eq!(cohen.proportion_largest, 1.0);
        assert_eq!(s.field(RadiusField::Mechanism(MechanismId::Li)).unwrap().proportion_largest, 0.0);
    }

    #[test]
    fn proportions_largest_sum_to_one_without_ties() {
        let recs = vec![
            record("a", Some(0), outcome(0, [Some(1.0), Some(2.0), None, None])),
            record("b", Some(1), outcome(0, [Some(3.0), Some(1.0), None, None])),
            record("c", Some(0), outcome(0, [Some(0.04), Some(0.01), None, None])),
        ];
        let s = summarize(&recs, DEFAULT_THRESHOLD, MechanismId::Cohen).unwrap();
        let sum: f64 = s.mechanisms.iter().map(|m| m.proportion_largest).sum();
        assert!((sum - 1.0).abs() < 1e-15);
        assert!((s.top1_accuracy.unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.ensemble.proportion_above_threshold - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn baseline_must_be_enabled() {
        let recs = vec![record("a", Some(0), cohen_only(0, 1.0))];
        assert!(summarize(&recs, DEFAULT_THRESHOLD, MechanismId::Li).is_err());
        assert!(summarize(&[], DEFAULT_THRESHOLD, MechanismId::Cohen).is_err());
    }

    #[test]
    fn region_classification_of_reference_points() {
        let cfg = EnsembleConfig::all(ExpectationMode::Multinomial);
        let opt = OptimizerSettings::default();
        let noise = NoiseConfig::new(1.0).unwrap();
        let at = |e0, e1| {
            let b = make_bounds(e0, e1, ExpectationMode::Multinomial).unwrap();
            classify_sample_region(&b, &noise, &cfg, &opt).unwrap()
        };
        assert_eq!(at(0.7, 0.3), Some(MechanismId::Cohen));
        assert_eq!(at(0.3, 0.1), Some(MechanismId::ImprovedDp));
        assert_eq!(at(0.999, 1e-4), Some(MechanismId::Cohen));
        assert_eq!(at(0.999, 1e-6), Some(MechanismId::Li));
        assert_eq!(at(0.4, 0.4), None);
    }

    #[test]
    fn radius_field_parsing() {
        assert_eq!("ensemble".parse::<RadiusField>().unwrap(), RadiusField::Ensemble);
        assert_eq!(
            "li".parse::<RadiusField>().unwrap(),
            RadiusField::Mechanism(MechanismId::Li)
        );
        assert_eq!(RadiusField::Mechanism(MechanismId::ImprovedDp).to_string(), "improved_dp");
    }
}
