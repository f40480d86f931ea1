//! Run reports: a final JSON document and an optional per-node CSV.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use grassmann_holonomy::dynamics::{energy_along, FramePath, ProjectorPath};
use grassmann_holonomy::{ComplexMatrix, GaugeElement};

use crate::config::{rows_from_matrix, ExperimentConfig, MatrixRows};
use crate::error::CliError;

pub const CSV_HEADER: &str = "t,projector_defect,isometry_defect,horizontality_defect,energy";

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct DefectMax {
    pub projector: f64,
    pub isometry: f64,
    pub horizontality: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub holonomy_dynamical: Option<MatrixRows>,
    pub holonomy_geometric: Option<MatrixRows>,
    pub fiber_gap: Option<MatrixRows>,
    pub berry_phase_arg: Option<f64>,
    pub closure_residual: Option<f64>,
    pub defect_max: DefectMax,
    pub wall_time_s: f64,
    /// Command-specific fields, emitted alongside the fixed keys.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl RunReport {
    pub fn new(config: ExperimentConfig) -> Self {
        Self {
            config,
            holonomy_dynamical: None,
            holonomy_geometric: None,
            fiber_gap: None,
            berry_phase_arg: None,
            closure_residual: None,
            defect_max: DefectMax::default(),
            wall_time_s: 0.0,
            extra: Map::new(),
        }
    }

    pub fn put(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("report values serialize");
        self.extra.insert(key.to_string(), v);
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let value = serde_json::to_value(self).expect("report serializes");
        if let Some(path) = first_non_finite(&value, "") {
            return Err(CliError::Invariant(format!("non-finite report field `{path}`")));
        }
        let mut text = serde_json::to_string_pretty(&value).expect("report serializes");
        text.push('\n');
        Ok(text)
    }
}

// serde_json turns NaN and infinities into null, so any float that was not
// finite shows up as a null in a slot where the typed report holds an f64.
// Fields that are legitimately absent are Option and skipped here by name.
fn first_non_finite(v: &Value, path: &str) -> Option<String> {
    const OPTIONAL: [&str; 5] = [
        "holonomy_dynamical",
        "holonomy_geometric",
        "fiber_gap",
        "berry_phase_arg",
        "closure_residual",
    ];
    match v {
        Value::Null if !OPTIONAL.contains(&path) && !path.starts_with("config") => Some(path.to_string()),
        Value::Number(n) if n.as_f64().is_some_and(|x| !x.is_finite()) => Some(path.to_string()),
        Value::Array(a) => a
            .iter()
            .enumerate()
            .find_map(|(i, x)| first_non_finite(x, &format!("{path}[{i}]"))),
        Value::Object(o) => o.iter().find_map(|(k, x)| {
            let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
            first_non_finite(x, &p)
        }),
        _ => None,
    }
}

pub fn matrix(m: &ComplexMatrix) -> MatrixRows {
    rows_from_matrix(m)
}

pub fn gauge(g: &GaugeElement) -> MatrixRows {
    rows_from_matrix(g.matrix())
}

/// One CSV row per grid node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeRow {
    pub t: f64,
    pub projector_defect: f64,
    pub isometry_defect: f64,
    pub horizontality_defect: f64,
    pub energy: f64,
}

/// Rows for a projector path, its horizontal lift and optionally a
/// Schrödinger lift; the isometry column is the larger of the two lifts.
pub fn node_rows(path: &ProjectorPath, transport: &FramePath, flow: Option<&FramePath>) -> Vec<NodeRow> {
    let energy = energy_along(path);
    let horizontality = transport.horizontality();
    path.grid()
        .times()
        .enumerate()
        .map(|(k, t)| {
            let mut iso = transport.samples()[k].defect();
            if let Some(f) = flow {
                iso = iso.max(f.samples()[k].defect());
            }
            NodeRow {
                t,
                projector_defect: path.samples()[k].defect(),
                isometry_defect: iso,
                horizontality_defect: horizontality.map_or(0.0, |h| h[k]),
                energy: energy[k],
            }
        })
        .collect()
}

pub fn to_csv(rows: &[NodeRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e}",
            r.t, r.projector_defect, r.isometry_defect, r.horizontality_defect, r.energy
        )
        .expect("writing to a String");
    }
    out
}

/// Writes `<prefix>.<ext>`, creating parent directories.
pub fn write_output(prefix: &str, ext: &str, contents: &str) -> Result<(), CliError> {
    let path = format!("{prefix}.{ext}");
    if let Some(dir) = Path::new(&path).parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(&path, contents).map_err(|e| CliError::Usage(format!("{path}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_fixed_header_and_one_row_per_node() {
        let row = NodeRow {
            t: 0.5,
            projector_defect: 1e-16,
            isometry_defect: 0.0,
            horizontality_defect: 2.5e-10,
            energy: -1.0,
        };
        let csv = to_csv(&[row, row, row]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "5e-1,1e-16,0e0,2.5e-10,-1e0");
    }

    #[test]
    fn non_finite_fields_are_rejected() {
        let mut r = RunReport::new(ExperimentConfig::default());
        assert!(r.to_json().is_ok());
        r.defect_max.horizontality = f64::NAN;
        assert!(matches!(r.to_json(), Err(CliError::Invariant(_))));
        let mut r = RunReport::new(ExperimentConfig::default());
        r.put("deviation", f64::INFINITY);
        assert!(r.to_json().is_err());
    }

    #[test]
    fn fixed_keys_present() {
        let text = RunReport::new(ExperimentConfig::default()).to_json().unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        for key in [
            "config",
            "holonomy_dynamical",
            "holonomy_geometric",
            "fiber_gap",
            "berry_phase_arg",
            "closure_residual",
            "defect_max",
            "wall_time_s",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
