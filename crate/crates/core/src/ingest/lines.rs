//! Line splitting and indent-based hierarchy construction.

use crate::model::{SentenceElement, ShapeId};

/// One non-blank line of a text object.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawLine {
    pub text: String,
    pub indent: u32,
    pub source_object: ShapeId,
}

/// Splits object text at newlines, pairing line `k` with `levels[k]`
/// (0 when absent). Blank lines are dropped after their level is consumed.
pub fn split_lines(content: &str, levels: &[u32], source_object: &ShapeId) -> Vec<RawLine> {
    content
        .split('\n')
        .enumerate()
        .filter_map(|(k, line)| {
            let text = line.trim_end_matches('\r').trim();
            (!text.is_empty()).then(|| RawLine {
                text: text.to_string(),
                indent: levels.get(k).copied().unwrap_or(0),
                source_object: source_object.clone(),
            })
        })
        .collect()
}

/// Builds the element forest for `lines`, numbering elements `s1`, `s2`, ...
pub fn build_hierarchy(lines: &[RawLine]) -> Vec<SentenceElement> {
    build_hierarchy_from(lines, 1)
}

/// As [`build_hierarchy`], with the first element numbered `first_id`.
///
/// A line's parent is the nearest preceding line with a strictly smaller
/// indent, so preorder traversal reproduces the input order.
pub fn build_hierarchy_from(lines: &[RawLine], first_id: usize) -> Vec<SentenceElement> {
    let mut parent: Vec<Option<usize>> = Vec::with_capacity(lines.len());
    let mut open: Vec<usize> = Vec::new();
    for (k, line) in lines.iter().enumerate() {
        while open.last().is_some_and(|&top| lines[top].indent >= line.indent) {
            open.pop();
        }
        parent.push(open.last().copied());
        open.push(k);
    }

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); lines.len()];
    let mut roots = Vec::new();
    for (k, p) in parent.iter().enumerate() {
        match p {
            Some(p) => children[*p].push(k),
            None => roots.push(k),
        }
    }

    fn assemble(k: usize, lines: &[RawLine], children: &[Vec<usize>], first_id: usize) -> SentenceElement {
        SentenceElement {
            shape_id: ShapeId::element(first_id + k),
            content: lines[k].text.clone(),
            indent: lines[k].indent,
            position: None,
            children: children[k].iter().map(|&c| assemble(c, lines, children, first_id)).collect(),
        }
    }
    roots.into_iter().map(|k| assemble(k, lines, &children, first_id)).collect()
}
