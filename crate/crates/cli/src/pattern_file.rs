//! Pattern files: one bit string per line, `#` starts a comment, blank lines are skipped.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use qam_core::{BinaryPattern, PatternSet};

pub fn parse(text: &str) -> Result<PatternSet> {
    let mut patterns = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let p: BinaryPattern = line
            .parse()
            .with_context(|| format!("line {}: {line:?} is not a bit string", lineno + 1))?;
        patterns.push(p);
    }
    if patterns.is_empty() {
        bail!(qam_core::QamError::Input("pattern file holds no patterns".into()));
    }
    Ok(PatternSet::new(patterns)?)
}

pub fn read(path: &Path) -> Result<PatternSet> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse(&text).with_context(|| format!("in {}", path.display()))
}
