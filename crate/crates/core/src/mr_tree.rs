//! Linearized tree-structured meaning representations.
//!
//! An MR is a forest of bracketed nodes. A token starting with `[` opens a
//! node (`[DG_INFORM`), a bare `]` closes the innermost open node, and every
//! other whitespace-separated token is terminal text belonging to the node
//! that contains it:
//!
//! ```text
//! [DS_JUSTIFY [DG_RECOMMEND [ATTIRE_NOT jacket ] ] [DG_INFORM [CONDITION light rain ] ] ]
//! ```
//!
//! Labels starting `DS_` are discourse relations, `DG_` dialog acts, and all
//! other labels are arguments. Terminal tokens may not contain brackets;
//! there is no escape mechanism.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Role of a node, inferred from its label prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    DiscourseRelation,
    DialogAct,
    Argument,
}

impl NodeKind {
    /// Kind is a pure function of the label prefix.
    pub fn from_label(label: &str) -> NodeKind {
        if label.starts_with("DS_") {
            NodeKind::DiscourseRelation
        } else if label.starts_with("DG_") {
            NodeKind::DialogAct
        } else {
            NodeKind::Argument
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::DiscourseRelation => f.write_str("discourse relation"),
            NodeKind::DialogAct => f.write_str("dialog act"),
            NodeKind::Argument => f.write_str("argument"),
        }
    }
}

/// One entry in a node body: either a child node or a run of terminal text.
///
/// Keeping children and terminals in a single ordered list preserves their
/// interleaving, which annotated responses rely on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeItem {
    Child(MrNode),
    Text(String),
}

/// A labeled node holding interleaved children and terminal text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MrNode {
    label: String,
    items: Vec<NodeItem>,
}

impl MrNode {
    /// Create an empty node.
    ///
    /// Panics if the label is empty, contains brackets or whitespace, or is
    /// not an uppercase identifier; use [`parse_mr`] for untrusted input.
    pub fn new(label: impl Into<String>) -> MrNode {
        let label = label.into();
        assert!(
            is_valid_label(&label),
            "invalid MR node label: {label:?}"
        );
        MrNode {
            label,
            items: Vec::new(),
        }
    }

    fn new_unchecked(label: String) -> MrNode {
        MrNode {
            label,
            items: Vec::new(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> NodeKind {
        NodeKind::from_label(&self.label)
    }

    pub fn items(&self) -> &[NodeItem] {
        &self.items
    }

    pub fn push_child(&mut self, child: MrNode) {
        self.items.push(NodeItem::Child(child));
    }

    /// Append terminal text. Whitespace is normalized to single spaces;
    /// empty text is ignored. Panics on bracket characters.
    pub fn push_text(&mut self, text: &str) {
        assert!(
            !text.contains('[') && !text.contains(']'),
            "terminal text may not contain brackets: {text:?}"
        );
        let normalized = crate::text::normalize_spaces(text);
        if normalized.is_empty() {
            return;
        }
        // Merge with a preceding text run so equal content compares equal
        // regardless of how it was pushed.
        if let Some(NodeItem::Text(prev)) = self.items.last_mut() {
            prev.push(' ');
            prev.push_str(&normalized);
        } else {
            self.items.push(NodeItem::Text(normalized));
        }
    }

    /// Builder-style variants for fixture construction.
    pub fn with_child(mut self, child: MrNode) -> MrNode {
        self.push_child(child);
        self
    }

    pub fn with_text(mut self, text: &str) -> MrNode {
        self.push_text(text);
        self
    }

    pub fn children(&self) -> impl Iterator<Item = &MrNode> {
        self.items.iter().filter_map(|item| match item {
            NodeItem::Child(c) => Some(c),
            NodeItem::Text(_) => None,
        })
    }

    /// Terminal text runs directly under this node, in order.
    pub fn terminals(&self) -> impl Iterator<Item = &str> {
        self.items.iter().filter_map(|item| match item {
            NodeItem::Text(t) => Some(t.as_str()),
            NodeItem::Child(_) => None,
        })
    }

    /// All terminal text in this subtree, interleaved in linear order.
    pub fn text(&self) -> String {
        let mut parts: Vec<&str> = Vec::new();
        self.collect_text(&mut parts);
        parts.join(" ")
    }

    fn collect_text<'a>(&'a self, parts: &mut Vec<&'a str>) {
        for item in &self.items {
            match item {
                NodeItem::Text(t) => parts.push(t),
                NodeItem::Child(c) => c.collect_text(parts),
            }
        }
    }
}

/// A parsed MR: an ordered forest of top-level nodes plus the original
/// linearized string it came from.
#[derive(Debug, Clone)]
pub struct MrTree {
    roots: Vec<MrNode>,
    source_text: String,
}

/// Equality is structural: two trees are equal when their forests are, no
/// matter what surface string they were parsed from.
impl PartialEq for MrTree {
    fn eq(&self, other: &Self) -> bool {
        self.roots == other.roots
    }
}

impl Eq for MrTree {}

impl MrTree {
    /// Build a tree from nodes; the source text is the canonical serialization.
    pub fn from_roots(roots: Vec<MrNode>) -> MrTree {
        let mut tree = MrTree {
            roots,
            source_text: String::new(),
        };
        tree.source_text = serialize(&tree);
        tree
    }

    pub fn from_root(root: MrNode) -> MrTree {
        MrTree::from_roots(vec![root])
    }

    pub fn roots(&self) -> &[MrNode] {
        &self.roots
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    /// Non-terminal skeleton; see [`StructureSignature`].
    pub fn signature(&self) -> StructureSignature {
        StructureSignature(
            self.roots
                .iter()
                .map(signature_node)
                .collect::<Vec<_>>()
                .join(" "),
        )
    }

    /// Check the nesting conventions; an empty list means the tree is valid.
    ///
    /// Violations are data, not errors: annotated model output is routinely
    /// malformed and callers need to report rather than fail.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        for (i, root) in self.roots.iter().enumerate() {
            validate_node(root, &format!("/{}[{i}]", root.label()), &mut violations);
        }
        violations
    }

    /// Depth-first list of (argument label, subtree text) for every argument
    /// node with nonempty text.
    pub fn slot_values(&self) -> Vec<(String, String)> {
        let mut slots = Vec::new();
        for root in &self.roots {
            collect_slots(root, &mut slots);
        }
        slots
    }

    /// All node labels in the forest, depth-first.
    pub fn labels(&self) -> Vec<String> {
        let mut labels = Vec::new();
        for root in &self.roots {
            collect_labels(root, &mut labels);
        }
        labels
    }
}

impl fmt::Display for MrTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize(self))
    }
}

/// The canonical string encoding of a label tree with all terminals removed.
///
/// Two trees get the same signature exactly when their labels, order, and
/// nesting agree; argument values and free text never influence it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StructureSignature(String);

impl StructureSignature {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StructureSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn signature_node(node: &MrNode) -> String {
    let mut parts = vec![format!("[{}", node.label())];
    for child in node.children() {
        parts.push(signature_node(child));
    }
    parts.push("]".to_string());
    parts.join(" ")
}

/// A broken nesting rule at a specific node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Slash-separated path of labels with sibling indices, e.g.
    /// `/DS_JUSTIFY[0]/DG_INFORM[1]`.
    pub path: String,
    pub rule: String,
}

fn validate_node(node: &MrNode, path: &str, violations: &mut Vec<Violation>) {
    for (i, child) in node.children().enumerate() {
        let child_path = format!("{path}/{}[{i}]", child.label());
        let ok = match (node.kind(), child.kind()) {
            (NodeKind::DiscourseRelation, NodeKind::DiscourseRelation) => true,
            (NodeKind::DiscourseRelation, NodeKind::DialogAct) => true,
            (NodeKind::DiscourseRelation, NodeKind::Argument) => false,
            (NodeKind::DialogAct, NodeKind::Argument) => true,
            (NodeKind::DialogAct, _) => false,
            (NodeKind::Argument, NodeKind::Argument) => true,
            (NodeKind::Argument, _) => false,
        };
        if !ok {
            violations.push(Violation {
                path: child_path.clone(),
                rule: format!(
                    "a {} may not contain a {} ({})",
                    node.kind(),
                    child.kind(),
                    child.label()
                ),
            });
        }
        validate_node(child, &child_path, violations);
    }
}

fn collect_slots(node: &MrNode, slots: &mut Vec<(String, String)>) {
    if node.kind() == NodeKind::Argument {
        let value = node.text();
        if !value.is_empty() {
            slots.push((node.label().to_string(), value));
        }
    }
    for child in node.children() {
        collect_slots(child, slots);
    }
}

fn collect_labels(node: &MrNode, labels: &mut Vec<String>) {
    labels.push(node.label().to_string());
    for child in node.children() {
        collect_labels(child, labels);
    }
}

/// Errors from [`parse_mr`]. Positions are byte offsets into the input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MrParseError {
    #[error("empty input")]
    EmptyInput,
    #[error("unbalanced brackets at byte {position}")]
    UnbalancedBrackets { position: usize },
    #[error("bad label {token:?} at byte {position}")]
    BadLabel { position: usize, token: String },
    #[error("text outside any node at byte {position}")]
    TopLevelText { position: usize },
}

fn is_valid_label(label: &str) -> bool {
    let mut chars = label.chars();
    match chars.next() {
        Some(c) if c.is_ascii_uppercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

/// Parse a linearized MR string into a tree.
///
/// Whitespace between tokens is normalized to single spaces in terminal
/// runs; child order and terminal positions are preserved.
pub fn parse_mr(input: &str) -> Result<MrTree, MrParseError> {
    if input.trim().is_empty() {
        return Err(MrParseError::EmptyInput);
    }

    let mut stack: Vec<(usize, MrNode)> = Vec::new();
    let mut roots: Vec<MrNode> = Vec::new();

    for (position, token) in tokens_with_positions(input) {
        if let Some(label) = token.strip_prefix('[') {
            if !is_valid_label(label) {
                return Err(MrParseError::BadLabel {
                    position,
                    token: token.to_string(),
                });
            }
            stack.push((position, MrNode::new_unchecked(label.to_string())));
        } else if token == "]" {
            let (_, node) = stack
                .pop()
                .ok_or(MrParseError::UnbalancedBrackets { position })?;
            match stack.last_mut() {
                Some((_, parent)) => parent.items.push(NodeItem::Child(node)),
                None => roots.push(node),
            }
        } else if token.contains('[') || token.contains(']') {
            return Err(MrParseError::BadLabel {
                position,
                token: token.to_string(),
            });
        } else {
            match stack.last_mut() {
                Some((_, node)) => node.push_text(token),
                None => return Err(MrParseError::TopLevelText { position }),
            }
        }
    }

    if let Some((position, _)) = stack.first() {
        return Err(MrParseError::UnbalancedBrackets {
            position: *position,
        });
    }

    Ok(MrTree {
        roots,
        source_text: input.to_string(),
    })
}

fn tokens_with_positions(input: &str) -> impl Iterator<Item = (usize, &str)> {
    input.split_whitespace().map(move |tok| {
        // offset of this token slice within the original string
        let position = tok.as_ptr() as usize - input.as_ptr() as usize;
        (position, tok)
    })
}

/// Serialize a tree to its canonical linearized form: one space after
/// `[LABEL`, one space before `]`, single spaces between tokens.
pub fn serialize(tree: &MrTree) -> String {
    tree.roots
        .iter()
        .map(serialize_node)
        .collect::<Vec<_>>()
        .join(" ")
}

fn serialize_node(node: &MrNode) -> String {
    let mut parts = vec![format!("[{}", node.label())];
    for item in &node.items {
        match item {
            NodeItem::Text(t) => parts.push(t.clone()),
            NodeItem::Child(c) => parts.push(serialize_node(c)),
        }
    }
    parts.push("]".to_string());
    parts.join(" ")
}
