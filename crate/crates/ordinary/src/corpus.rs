//! The shipped surfaces, each with the catalog group whose predicted
//! density it is checked against.

use ordinary_core::surfaces::{parse_surface, SurfaceModel};

pub const SHIPPED_CORPUS: &str = include_str!("../data/corpus.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub label: String,
    pub spec: String,
    pub group: String,
    pub model: SurfaceModel,
}

/// Parses `label surface group` lines; `#` starts a comment.
pub fn parse_corpus(text: &str) -> Result<Vec<CorpusEntry>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [label, spec, group] = fields[..] else {
            return Err(format!("line {}: expected `label surface group`", n + 1));
        };
        let model = parse_surface(spec).map_err(|e| format!("line {}: {e}", n + 1))?;
        out.push(CorpusEntry { label: label.into(), spec: spec.into(), group: group.into(), model });
    }
    Ok(out)
}

pub fn shipped_corpus() -> Vec<CorpusEntry> {
    parse_corpus(SHIPPED_CORPUS).expect("shipped corpus parses")
}
