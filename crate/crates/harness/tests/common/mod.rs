#![allow(dead_code)]

use std::path::Path;

/// A small 2-D mixture sweep writing into `dir`.
pub fn mixture_config(dir: &Path, extra: &str) -> String {
    format!(
        r#"{{
    "schema_version": 1,
    "seed": 5,
    "target": {{"kind": "fixture", "name": "mixture_2d"}},
    "basis": {{"orders": [2, 3, [3, 4]]}},
    "batch": {{"per_basis": [10, 20]}},
    "evaluation": {{"kl_samples": 3000, "fisher_samples": 1000, "q_samples": 500}},
    "output": {{"dir": {dir:?}}}{extra}
}}"#,
        dir = dir.display().to_string()
    )
}

pub fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}
