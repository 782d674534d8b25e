use serde::{Deserialize, Serialize};

use super::{OptimizationResult, OptimizeError};
use crate::aero::lift_to_drag;
use crate::doe::{nearest_neighbor, CaseSpec};
use crate::space::{DesignVector, ParameterSpace};

/// A dataset case with its coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetCase {
    #[serde(flatten)]
    pub case: CaseSpec,
    #[serde(rename = "C_D")]
    pub c_d: f64,
    #[serde(rename = "C_l")]
    pub c_l: f64,
}

impl DatasetCase {
    pub fn eps(&self) -> Option<f64> {
        lift_to_drag(self.c_d, self.c_l)
    }
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub phi: [f64; 6],
    #[serde(rename = "C_D")]
    pub c_d: Option<f64>,
    #[serde(rename = "C_l")]
    pub c_l: Option<f64>,
    pub eps: f64,
}

impl TableRow {
    fn from_case(label: String, c: &DatasetCase) -> Self {
        Self {
            label,
            steps: None,
            id: Some(c.case.id.clone()),
            phi: c.case.vector().0,
            c_d: Some(c.c_d),
            c_l: Some(c.c_l),
            eps: c.eps().unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRecord {
    pub optimum: TableRow,
    pub nearest: TableRow,
    /// Normalized Euclidean distance from the optimum to its neighbor.
    pub distance: f64,
    /// Optimum ε minus neighbor ε.
    pub delta_eps: f64,
    pub dataset_best: TableRow,
}

/// Compares an optimum with its nearest dataset case and the dataset's best
/// case by ε.
pub fn validate_against_dataset(
    result: &OptimizationResult,
    dataset: &[DatasetCase],
    space: &ParameterSpace,
) -> Result<ValidationRecord, OptimizeError> {
    if dataset.is_empty() {
        return Err(OptimizeError::Undefined("dataset is empty".into()));
    }
    let phi: [f64; 6] = result
        .best_phi
        .as_slice()
        .try_into()
        .map_err(|_| OptimizeError::InvalidConfig("optimum is not a 6-parameter design".into()))?;
    let label = {
        let m = result.method.to_string();
        let mut c = m.chars();
        c.next()
            .map(|f| f.to_ascii_uppercase().to_string() + c.as_str())
            .unwrap_or(m)
    };
    let cases: Vec<CaseSpec> = dataset.iter().map(|d| d.case.clone()).collect();
    let nn = nearest_neighbor(&DesignVector(phi), &cases, space)
        .ok_or_else(|| OptimizeError::Undefined("dataset is empty".into()))?;
    let nearest = TableRow::from_case(format!("{label} (NN)"), &dataset[nn.index]);

    let best = dataset
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.eps().filter(|e| e.is_finite()).map(|e| (i, e)))
        .fold(None::<(usize, f64)>, |acc, (i, e)| match acc {
            Some((_, b)) if b >= e => acc,
            _ => Some((i, e)),
        })
        .ok_or_else(|| OptimizeError::Undefined("no dataset case has a finite ε".into()))?;
    let dataset_best = TableRow::from_case("Best ε in dataset".into(), &dataset[best.0]);

    let optimum = TableRow {
        label,
        steps: Some(result.steps),
        id: None,
        phi,
        c_d: result.coefficients.map(|c| c.c_d),
        c_l: result.coefficients.map(|c| c.c_l),
        eps: result.best_eps,
    };
    Ok(ValidationRecord {
        delta_eps: optimum.eps - nearest.eps,
        distance: nn.distance,
        optimum,
        nearest,
        dataset_best,
    })
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or("-".into(), |v| format!("{v:.digits$}"))
}

/// Fixed-width text table: optima first, then their neighbors, then the
/// dataset best (taken from the first record).
pub fn format_table(records: &[ValidationRecord]) -> String {
    let header = format!(
        "{:<20} {:>7} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>7} {:>7} {:>6}",
        "Method", "# steps", "c_r", "b", "lambda", "Lambda", "U_inf", "alpha", "C_D", "C_l", "eps"
    );
    let line = |r: &TableRow| {
        let p = r.phi;
        format!(
            "{:<20} {:>7} {:>6.3} {:>6.3} {:>6.3} {:>6.2} {:>6.1} {:>6.3} {:>7} {:>7} {:>6.2}",
            r.label,
            r.steps.map_or("-".into(), |s| s.to_string()),
            p[0],
            p[1],
            p[2],
            p[3],
            p[4],
            p[5],
            opt(r.c_d, 4),
            opt(r.c_l, 4),
            r.eps
        )
    };
    let rule = "-".repeat(header.len());
    let mut out = vec![header, rule.clone()];
    out.extend(records.iter().map(|r| line(&r.optimum)));
    out.push(rule);
    out.extend(records.iter().map(|r| line(&r.nearest)));
    if let Some(r) = records.first() {
        out.push(line(&r.dataset_best));
    }
    out.join("\n") + "\n"
}
