use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::EvalError;
use crate::model::{validate_instance, AnswerSpace, TaskInstance, TaskType, TemporalScope};

/// Fields copied into every record that does not set them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestDefaults {
    pub task_type: Option<TaskType>,
    pub answer_space: Option<AnswerSpace>,
    pub temporal_scope: Option<TemporalScope>,
}

/// A dataset description in TOML. File paths are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub name: String,
    pub task_family: TaskType,
    pub files: Vec<PathBuf>,
    #[serde(default)]
    pub strata_keys: Vec<String>,
    #[serde(default)]
    pub defaults: ManifestDefaults,
    /// Directory the manifest was read from; `files` resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut m: DatasetManifest = toml::from_str(&text).map_err(|e| EvalError::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    if m.name.trim().is_empty() {
        return Err(EvalError::Manifest {
            path: path.to_path_buf(),
            message: "name must be non-empty".into(),
        });
    }
    if m.files.is_empty() {
        return Err(EvalError::Manifest {
            path: path.to_path_buf(),
            message: "files must list at least one instance file".into(),
        });
    }
    for f in &m.files {
        let p = m.base_dir.join(f);
        if !p.is_file() {
            return Err(EvalError::Manifest {
                path: path.to_path_buf(),
                message: format!("instance file {} does not exist", p.display()),
            });
        }
    }
    Ok(m)
}

/// Reads every JSONL file in the manifest. Blank lines and lines starting
/// with `//` are skipped.
pub fn load_dataset(manifest: &DatasetManifest) -> Result<Vec<TaskInstance>, EvalError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for f in &manifest.files {
        let path = manifest.base_dir.join(f);
        let text = std::fs::read_to_string(&path).map_err(|e| EvalError::Io {
            path: path.clone(),
            message: e.to_string(),
        })?;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with("//") {
                continue;
            }
            let err = |field: &str, message: String| EvalError::Instance {
                path: path.clone(),
                line: line_no,
                field: field.to_string(),
                message,
            };
            let inst = parse_record(trimmed, manifest).map_err(|(field, msg)| err(&field, msg))?;
            if !seen.insert(inst.id.clone()) {
                return Err(err("id", format!("duplicate instance id {}", inst.id)));
            }
            out.push(inst);
        }
    }
    Ok(out)
}

fn parse_record(line: &str, manifest: &DatasetManifest) -> Result<TaskInstance, (String, String)> {
    let mut raw: Value = serde_json::from_str(line).map_err(|e| ("<record>".to_string(), e.to_string()))?;
    let obj = raw
        .as_object_mut()
        .ok_or_else(|| ("<record>".to_string(), "expected a JSON object".to_string()))?;

    let d = &manifest.defaults;
    let task_type = d.task_type.unwrap_or(manifest.task_family);
    obj.entry("task_type").or_insert_with(|| serde_json::to_value(task_type).expect("enum"));
    if let Some(space) = &d.answer_space {
        obj.entry("answer_space").or_insert_with(|| serde_json::to_value(space).expect("space"));
    }
    if !obj.contains_key("temporal_scope") {
        let declared: Option<TaskType> = obj
            .get("task_type")
            .and_then(|v| serde_json::from_value(v.clone()).ok());
        let scope = d
            .temporal_scope
            .unwrap_or_else(|| TemporalScope::infer(declared.unwrap_or(task_type)));
        obj.insert("temporal_scope".into(), serde_json::to_value(scope).expect("scope"));
    }
    if obj.get("ground_truth").map_or(true, Value::is_null) {
        return Err(("ground_truth".into(), "missing; evaluation instances need a ground truth".into()));
    }

    // Strata may sit at the top level or inside `strata`.
    let mut strata: BTreeMap<String, String> = match obj.get("strata") {
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| ("strata".to_string(), e.to_string()))?,
        None => BTreeMap::new(),
    };
    for key in &manifest.strata_keys {
        if strata.contains_key(key) {
            continue;
        }
        match obj.get(key) {
            Some(Value::String(s)) => {
                strata.insert(key.clone(), s.clone());
            }
            Some(v) if !v.is_null() => {
                strata.insert(key.clone(), v.to_string());
            }
            _ => return Err((format!("strata.{key}"), "missing stratum value".into())),
        }
    }
    obj.insert("strata".into(), serde_json::to_value(&strata).expect("map"));

    let inst: TaskInstance = serde_path_to_error::deserialize(&raw).map_err(|e| {
        let field = e.path().to_string();
        (field, e.into_inner().to_string())
    })?;
    let problems = validate_instance(&inst);
    if !problems.is_empty() {
        return Err(("<instance>".into(), problems.join("; ")));
    }
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(dir: &Path, body: &str, lines: &str) -> DatasetManifest {
        std::fs::write(dir.join("data.jsonl"), lines).unwrap();
        std::fs::write(dir.join("m.toml"), body).unwrap();
        load_manifest(&dir.join("m.toml")).unwrap()
    }

    const HEAD: &str = "name = \"toy\"\ntask_family = \"classification\"\nfiles = [\"data.jsonl\"]\n";

    #[test]
    fn minimal_file_loads_one_instance() {
        let dir = tempfile::tempdir().unwrap();
        let rec = r#"{"id":"a","query":"up or down?","series":{"id":"s","channels":[[1,2,3,4]]},"answer_space":{"kind":"labels","labels":["up","down"]},"ground_truth":{"type":"label","value":"up"}}"#;
        let m = manifest(dir.path(), HEAD, rec);
        let ds = load_dataset(&m).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].task_type, TaskType::Classification);
        assert_eq!(ds[0].temporal_scope, TemporalScope::PastPresent);
    }

    #[test]
    fn missing_ground_truth_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let rec = "\n{\"id\":\"a\",\"query\":\"q\",\"series\":{\"id\":\"s\",\"channels\":[[1,2]]},\"answer_space\":{\"kind\":\"labels\",\"labels\":[\"up\"]}}";
        let m = manifest(dir.path(), HEAD, rec);
        match load_dataset(&m) {
            Err(EvalError::Instance { line, field, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(field, "ground_truth");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn error_names_the_bad_field() {
        let dir = tempfile::tempdir().unwrap();
        let rec = r#"{"id":"a","query":"q","series":{"id":"s","channels":[[1,"x"]]},"answer_space":{"kind":"labels","labels":["up"]},"ground_truth":{"type":"label","value":"up"}}"#;
        let m = manifest(dir.path(), HEAD, rec);
        let e = load_dataset(&m).unwrap_err().to_string();
        assert!(e.contains("data.jsonl:1"), "{e}");
        assert!(e.contains("series.channels"), "{e}");
    }

    #[test]
    fn multivariate_names_and_top_level_strata() {
        let dir = tempfile::tempdir().unwrap();
        let head = format!("{HEAD}strata_keys = [\"domain\"]\n[defaults]\nanswer_space = {{ kind = \"labels\", labels = [\"up\", \"down\"] }}\n");
        let rec = r#"{"id":"a","query":"q","domain":"energy","series":{"id":"s","channels":[[1,2],[3,4],[5,6]],"channel_names":["x","y","z"]},"ground_truth":{"type":"label","value":"down"}}"#;
        let m = manifest(dir.path(), &head, rec);
        let ds = load_dataset(&m).unwrap();
        assert_eq!(ds[0].series.dim(), 3);
        assert_eq!(ds[0].series.channel_names, vec!["x", "y", "z"]);
        assert_eq!(ds[0].strata["domain"], "energy");
    }

    #[test]
    fn missing_file_rejects_manifest() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("m.toml"), HEAD).unwrap();
        assert!(load_manifest(&dir.path().join("m.toml")).is_err());
    }
}
