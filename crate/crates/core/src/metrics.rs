//! Error metrics, drag-lift Pareto fronts, polar series and seed aggregation.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aero::AeroCoefficients;
use crate::doe::CaseSpec;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("{name}: prediction has {prediction} values, ground truth {truth}")]
    LengthMismatch {
        name: String,
        prediction: usize,
        truth: usize,
    },
    #[error("{name}: non-finite {which} value at index {index}")]
    NonFinite {
        name: String,
        which: &'static str,
        index: usize,
    },
    #[error("metric undefined: {0}")]
    Undefined(String),
}

/// Predicted and reference values of one field, flattened over entries and
/// components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldPair {
    pub name: String,
    pub prediction: Vec<f64>,
    pub truth: Vec<f64>,
}

impl FieldPair {
    pub fn new(name: impl Into<String>, prediction: Vec<f64>, truth: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            prediction,
            truth,
        }
    }

    /// Vector-valued entries, flattened component-wise.
    pub fn from_vectors(name: impl Into<String>, prediction: &[[f64; 3]], truth: &[[f64; 3]]) -> Self {
        Self::new(
            name,
            prediction.iter().flatten().copied().collect(),
            truth.iter().flatten().copied().collect(),
        )
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        if self.prediction.len() != self.truth.len() {
            return Err(MetricError::LengthMismatch {
                name: self.name.clone(),
                prediction: self.prediction.len(),
                truth: self.truth.len(),
            });
        }
        for (which, values) in [("prediction", &self.prediction), ("truth", &self.truth)] {
            if let Some(index) = values.iter().position(|v| !v.is_finite()) {
                return Err(MetricError::NonFinite {
                    name: self.name.clone(),
                    which,
                    index,
                });
            }
        }
        Ok(())
    }
}

/// `‖pred − truth‖₂ / ‖truth‖₂`.
pub fn relative_l2(pair: &FieldPair) -> Result<f64, MetricError> {
    pair.validate()?;
    // Scale by the largest magnitude so the norms neither overflow nor underflow.
    let scale = pair
        .truth
        .iter()
        .chain(&pair.prediction)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(MetricError::Undefined(format!(
            "{}: ground truth has zero norm",
            pair.name
        )));
    }
    let diff: Vec<f64> = pair
        .prediction
        .iter()
        .zip(&pair.truth)
        .map(|(p, t)| ((p - t) / scale).powi(2))
        .collect();
    let norm: Vec<f64> = pair.truth.iter().map(|t| (t / scale).powi(2)).collect();
    let den = pairwise_sum(&norm);
    if den == 0.0 {
        return Err(MetricError::Undefined(format!(
            "{}: ground truth has zero norm",
            pair.name
        )));
    }
    Ok((pairwise_sum(&diff) / den).sqrt())
}

/// Coefficient of determination `1 − SS_res / SS_tot`.
pub fn r_squared(prediction: &[f64], truth: &[f64]) -> Result<f64, MetricError> {
    FieldPair::new("r_squared", prediction.to_vec(), truth.to_vec()).validate()?;
    if truth.len() < 2 {
        return Err(MetricError::Undefined("R² needs at least two points".into()));
    }
    let mean = pairwise_sum(truth) / truth.len() as f64;
    let ss_tot: Vec<f64> = truth.iter().map(|t| (t - mean).powi(2)).collect();
    let ss_res: Vec<f64> = prediction.iter().zip(truth).map(|(p, t)| (t - p).powi(2)).collect();
    let tot = pairwise_sum(&ss_tot);
    if tot == 0.0 {
        return Err(MetricError::Undefined("R² of a constant ground truth".into()));
    }
    Ok(1.0 - pairwise_sum(&ss_res) / tot)
}

/// Sum with a fixed binary tree, independent of how callers parallelize.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub id: String,
    #[serde(rename = "C_D")]
    pub c_d: f64,
    #[serde(rename = "C_l")]
    pub c_l: f64,
    pub alpha: f64,
    #[serde(rename = "Lambda", default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub in_range: bool,
}

impl PolarPoint {
    pub fn from_case(case: &CaseSpec, c: &AeroCoefficients, in_range: bool) -> Self {
        Self {
            id: case.id.clone(),
            c_d: c.c_d,
            c_l: c.c_l,
            alpha: case.inflow.alpha_deg,
            lambda: Some(case.design.sweep_deg),
            in_range,
        }
    }

    pub fn efficiency(&self) -> Option<f64> {
        (self.c_d > 0.0).then(|| self.c_l / self.c_d)
    }
}

/// Non-dominated points (minimum `C_D`, maximum `C_l`), ascending in `C_D`.
///
/// Points equal in both coefficients are reduced to the one with the lowest
/// id. Non-finite points are skipped.
pub fn pareto_front(points: &[PolarPoint]) -> Vec<PolarPoint> {
    let mut order: Vec<&PolarPoint> = points
        .iter()
        .filter(|p| p.c_d.is_finite() && p.c_l.is_finite())
        .collect();
    order.sort_by(|a, b| {
        a.c_d
            .total_cmp(&b.c_d)
            .then(b.c_l.total_cmp(&a.c_l))
            .then(a.id.cmp(&b.id))
    });
    let mut best = f64::NEG_INFINITY;
    let mut front = Vec::new();
    for p in order {
        if p.c_l > best {
            best = p.c_l;
            front.push(p.clone());
        }
    }
    front
}

/// Front point with the largest `C_l / C_D`, where a line through the origin
/// touches the front.
pub fn best_efficiency(front: &[PolarPoint]) -> Option<&PolarPoint> {
    front
        .iter()
        .filter_map(|p| p.efficiency().map(|e| (e, p)))
        .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.id.cmp(&a.1.id)))
        .map(|(_, p)| p)
}

/// Points sharing one sweep angle, ascending in `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarSeries {
    #[serde(rename = "Lambda")]
    pub lambda: Option<f64>,
    pub points: Vec<PolarPoint>,
}

impl PolarSeries {
    pub fn cl_vs_alpha(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.alpha, p.c_l)).collect()
    }

    pub fn cd_vs_alpha(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.alpha, p.c_d)).collect()
    }

    pub fn cl_vs_cd(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.c_d, p.c_l)).collect()
    }
}

/// Groups points by sweep (ascending, ungrouped first) and sorts each group
/// by `alpha`, then id. Duplicates are kept.
pub fn assemble_polars(points: &[PolarPoint]) -> Vec<PolarSeries> {
    let mut groups: BTreeMap<Option<u64>, Vec<PolarPoint>> = BTreeMap::new();
    // Order-preserving key for f64 sweep values.
    let key = |l: f64| {
        let bits = l.to_bits();
        if l.is_sign_negative() {
            !bits
        } else {
            bits | (1 << 63)
        }
    };
    for p in points {
        groups.entry(p.lambda.map(key)).or_default().push(p.clone());
    }
    groups
        .into_values()
        .filter(|g| !g.is_empty())
        .map(|mut g| {
            g.sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then(a.id.cmp(&b.id)));
            PolarSeries {
                lambda: g[0].lambda,
                points: g,
            }
        })
        .collect()
}

pub fn write_points_csv<W: Write>(out: W, points: &[PolarPoint]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "Lambda", "alpha", "C_D", "C_l", "in_range"])?;
    for p in points {
        w.write_record([
            p.id.clone(),
            p.lambda.map_or(String::new(), |l| l.to_string()),
            p.alpha.to_string(),
            p.c_d.to_string(),
            p.c_l.to_string(),
            p.in_range.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One per-case metric value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub model: String,
    pub test_set: String,
    pub field: String,
    pub seed: u64,
    pub case_id: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub test_set: String,
    pub model: String,
    pub field: String,
    pub mean: f64,
    pub std: f64,
    pub seeds: usize,
    pub cases: usize,
}

pub const AGGREGATION_ORDER: &str =
    "per-case values averaged within each seed, then mean and sample standard deviation (n-1) across seeds";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub aggregation: String,
    pub rows: Vec<AggregateRow>,
}

/// Mean and sample standard deviation across seeds of the per-seed case
/// means, for each `(test_set, model, field)`. Input order does not matter.
pub fn aggregate(records: &[MetricRecord]) -> MetricReport {
    type Key = (String, String, String);
    let mut groups: BTreeMap<Key, BTreeMap<u64, Vec<(String, f64)>>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.test_set.clone(), r.model.clone(), r.field.clone()))
            .or_default()
            .entry(r.seed)
            .or_default()
            .push((r.case_id.clone(), r.value));
    }
    let rows = groups
        .into_iter()
        .map(|((test_set, model, field), seeds)| {
            let mut cases = 0;
            let per_seed: Vec<f64> = seeds
                .into_values()
                .map(|mut v| {
                    v.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
                    cases = cases.max(v.len());
                    let values: Vec<f64> = v.into_iter().map(|(_, x)| x).collect();
                    pairwise_sum(&values) / values.len() as f64
                })
                .collect();
            let (mean, std) = mean_std(&per_seed);
            AggregateRow {
                test_set,
                model,
                field,
                mean,
                std,
                seeds: per_seed.len(),
                cases,
            }
        })
        .collect();
    MetricReport {
        aggregation: AGGREGATION_ORDER.into(),
        rows,
    }
}

/// Mean and sample standard deviation; the deviation of one value is 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(values) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    (mean, (pairwise_sum(&sq) / (n - 1) as f64).sqrt())
}

impl MetricReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["test_set", "model", "field", "mean", "std"])?;
        for r in &self.rows {
            w.write_record([
                r.test_set.as_str(),
                r.model.as_str(),
                r.field.as_str(),
                &format!("{:.4}", r.mean),
                &format!("{:.4}", r.std),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(id: &str, c_d: f64, c_l: f64) -> PolarPoint {
        PolarPoint {
            id: id.into(),
            c_d,
            c_l,
            alpha: 0.0,
            lambda: None,
            in_range: true,
        }
    }

    #[test]
    fn relative_l2_fixtures() {
        let gt = vec![3.0, -4.0, 12.0];
        let l2 = |p: Vec<f64>| relative_l2(&FieldPair::new("p_s", p, gt.clone())).unwrap();
        assert_eq!(l2(gt.clone()), 0.0);
        assert!((l2(vec![0.0; 3]) - 1.0).abs() < 1e-12);
        assert!((l2(gt.iter().map(|v| 2.0 * v).collect()) - 1.0).abs() < 1e-12);
        assert!(matches!(
            relative_l2(&FieldPair::new("p", vec![1.0], vec![0.0])),
            Err(MetricError::Undefined(_))
        ));
        assert!(matches!(
            relative_l2(&FieldPair::new("p", vec![1.0], vec![1.0, 2.0])),
            Err(MetricError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn relative_l2_is_scale_equivariant() {
        let p = FieldPair::from_vectors(
            "tau",
            &[[1.0, 2.0, 3.0], [0.5, 0.0, -1.0]],
            &[[1.1, 2.0, 2.9], [0.4, 0.1, -1.0]],
        );
        let base = relative_l2(&p).unwrap();
        for k in [1e-200, -3.0, 7.5, 1e250] {
            let scaled = FieldPair::new(
                "tau",
                p.prediction.iter().map(|v| v * k).collect(),
                p.truth.iter().map(|v| v * k).collect(),
            );
            assert!((relative_l2(&scaled).unwrap() - base).abs() < 1e-12 * base);
        }
    }

    #[test]
    fn r_squared_fixtures() {
        let gt = [0.0, 1.0, 2.0];
        assert_eq!(r_squared(&gt, &gt).unwrap(), 1.0);
        assert!(r_squared(&[1.0, 1.0, 1.0], &gt).unwrap().abs() < 1e-12);
        assert!((r_squared(&[0.0, 1.0, 1.0], &gt).unwrap() - 0.5).abs() < 1e-12);
        assert!(r_squared(&[1.0, 1.0], &[2.0, 2.0]).is_err());
        assert!(r_squared(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn pareto_fixtures() {
        let pts = [pt("a", 1.0, 1.0), pt("b", 2.0, 3.0), pt("c", 3.0, 2.0)];
        let ids: Vec<String> = pareto_front(&pts).into_iter().map(|p| p.id).collect();
        assert_eq!(ids, ["a", "b"]);
        assert_eq!(pareto_front(&pts[..1]), vec![pts[0].clone()]);
        let same = [pt("z", 1.0, 1.0), pt("x", 1.0, 1.0), pt("y", 1.0, 1.0)];
        assert_eq!(pareto_front(&same), vec![pt("x", 1.0, 1.0)]);
    }

    #[test]
    fn tangent_point_maximizes_efficiency() {
        let pts = [pt("a", 0.01, 0.1), pt("b", 0.02, 0.4), pt("c", 0.05, 0.6)];
        assert_eq!(best_efficiency(&pareto_front(&pts)).unwrap().id, "b");
    }

    #[test]
    fn aggregation_fixtures() {
        let rec = |seed: u64, case: &str, value: f64| MetricRecord {
            model: "m".into(),
            test_set: "ood".into(),
            field: "p_s".into(),
            seed,
            case_id: case.into(),
            value,
        };
        let one = aggregate(&[rec(0, "c1", 0.3), rec(0, "c2", 0.1)]);
        assert_eq!(one.rows[0].std, 0.0);
        assert!((one.rows[0].mean - 0.2).abs() < 1e-15);
        let mut recs = vec![rec(1, "c", 0.1), rec(2, "c", 0.2), rec(3, "c", 0.3)];
        let three = aggregate(&recs);
        assert!((three.rows[0].mean - 0.2).abs() < 1e-12);
        assert!((three.rows[0].std - 0.1).abs() < 1e-12);
        recs.reverse();
        assert_eq!(aggregate(&recs), three);
        let mut csv = Vec::new();
        one.write_csv(&mut csv).unwrap();
        assert_eq!(
            String::from_utf8(csv).unwrap(),
            "test_set,model,field,mean,std\nood,m,p_s,0.2000,0.0000\n"
        );
    }

    #[test]
    fn rows_are_ordered_by_test_set_then_model() {
        let rec = |t: &str, m: &str| MetricRecord {
            model: m.into(),
            test_set: t.into(),
            field: "f".into(),
            seed: 0,
            case_id: "c".into(),
            value: 1.0,
        };
        let r = aggregate(&[rec("b", "x"), rec("a", "y"), rec("a", "x")]);
        let keys: Vec<(&str, &str)> = r.rows.iter().map(|r| (r.test_set.as_str(), r.model.as_str())).collect();
        assert_eq!(keys, [("a", "x"), ("a", "y"), ("b", "x")]);
    }

    #[test]
    fn polars_group_by_sweep() {
        let mut pts = Vec::new();
        for (k, l) in [10.0, 0.0].iter().enumerate() {
            for a in [4.0, -2.0, 0.0] {
                pts.push(PolarPoint {
                    id: format!("{k}-{a}"),
                    c_d: 0.01,
                    c_l: a / 10.0,
                    alpha: a,
                    lambda: Some(*l),
                    in_range: a < 3.0,
                });
            }
        }
        pts.push(PolarPoint {
            id: "dup".into(),
            ..pts[0].clone()
        });
        let series = assemble_polars(&pts);
        assert_eq!(series.len(), 2);
        assert_eq!(series[0].lambda, Some(0.0));
        assert_eq!(series[1].points.len(), 4);
        let alphas: Vec<f64> = series[1].points.iter().map(|p| p.alpha).collect();
        assert_eq!(alphas, [-2.0, 0.0, 4.0, 4.0]);
        assert_eq!(series[1].points[2].id, "0-4");
        assert!(!series[1].points[3].in_range);
    }
}
