//! The template DSL and renderer that turn an MR into template-guided text.
//!
//! A registry maps node labels (and helper names) to templates. Rendering a
//! node looks up the template matching its label and walks the body:
//!
//! ```text
//! DG_INFORM_CONDITION  [DG_INFORM there will be [CONDITION $condition ] DATETIME_AND_LOCATION ]
//! ```
//!
//! - `$condition` substitutes the value of the `CONDITION` argument child of
//!   the node being rendered;
//! - `DATETIME_AND_LOCATION` invokes either a child node with that label or
//!   another template evaluated against the same node;
//! - `[DG_INFORM` / `]` are structural markers, emitted only in
//!   [`RenderMode::Annotated`];
//! - `Optional(...)` renders to empty text when any `$var` inside is unset;
//! - `IsSet($condition) ? A : B` dispatches on argument presence.
//!
//! Template files are UTF-8 text with one `NAME<TAB>BODY` template per line;
//! `#`-prefixed lines are comments.

use std::collections::BTreeMap;
use std::io::BufRead;

use thiserror::Error;

use crate::mr_tree::{MrNode, MrTree, NodeItem, NodeKind};

/// A named template.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub name: String,
    pub body: TemplateAst,
}

/// Parsed template body: an ordered item sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateAst {
    pub items: Vec<AstItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AstItem {
    /// Verbatim text token.
    Literal(String),
    /// `$name`: the value of the argument child whose label is `NAME`.
    VarRef(String),
    /// `NAME`: render a matching child node, or redirect to a template.
    Invoke(String),
    /// `Optional(...)`: skipped when any variable inside is unset.
    Optional(Vec<AstItem>),
    /// `IsSet($v) ? then : else`.
    Conditional {
        predicate: Predicate,
        then_items: Vec<AstItem>,
        else_items: Vec<AstItem>,
    },
    /// `[LABEL`: structural span opener, annotated mode only.
    StructOpen(String),
    /// `]`: structural span closer, annotated mode only.
    StructClose,
}

/// Predicates usable in conditionals. `IsSet` is the only one the DSL
/// defines today; the enum is the extension point.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    IsSet(String),
}

/// Output flavor of [`TemplateRegistry::render`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderMode {
    /// Prose only; structural markers dropped, punctuation attached.
    Plain,
    /// Bracketed spans around dialog acts and arguments, space-separated so
    /// the output re-parses with [`crate::mr_tree::parse_mr`].
    Annotated,
}

/// Errors from template parsing and registry loading.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemplateError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown function {name:?} (only IsSet and Optional exist)")]
    UnknownFunction { name: String },
    #[error("duplicate template {name:?}")]
    DuplicateTemplate { name: String },
    #[error("line {line}: expected NAME<TAB>BODY")]
    BadLine { line: usize },
    #[error("line {line} ({name}): {source}")]
    InTemplate {
        line: usize,
        name: String,
        #[source]
        source: Box<TemplateError>,
    },
    #[error("read failed: {0}")]
    Io(String),
}

/// Errors from rendering.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("no template or child matches {label:?} at {path}")]
    MissingTemplate { label: String, path: String },
    #[error("variable ${name} is unset at {path}")]
    UnboundVariable { name: String, path: String },
    #[error("template recursion limit hit at {path}")]
    RecursionLimit { path: String },
}

const MAX_REDIRECT_DEPTH: usize = 64;

/// An immutable name → template map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TemplateRegistry {
    templates: BTreeMap<String, Template>,
}

impl TemplateRegistry {
    pub fn new() -> TemplateRegistry {
        TemplateRegistry::default()
    }

    pub fn insert(&mut self, template: Template) -> Result<(), TemplateError> {
        if self.templates.contains_key(&template.name) {
            return Err(TemplateError::DuplicateTemplate {
                name: template.name,
            });
        }
        self.templates.insert(template.name.clone(), template);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Template> {
        self.templates.get(name)
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    /// Render a whole forest; roots render in order into one string.
    pub fn render(&self, mr: &MrTree, mode: RenderMode) -> Result<String, RenderError> {
        let mut out: Vec<String> = Vec::new();
        for (i, root) in mr.roots().iter().enumerate() {
            let path = format!("/{}[{i}]", root.label());
            self.render_node(root, &path, mode, &mut out, 0)?;
        }
        Ok(match mode {
            RenderMode::Plain => crate::text::join_with_punctuation(&out),
            RenderMode::Annotated => out.join(" "),
        })
    }

    fn render_node(
        &self,
        node: &MrNode,
        path: &str,
        mode: RenderMode,
        out: &mut Vec<String>,
        depth: usize,
    ) -> Result<(), RenderError> {
        if depth > MAX_REDIRECT_DEPTH {
            return Err(RenderError::RecursionLimit {
                path: path.to_string(),
            });
        }
        if let Some(template) = self.get(node.label()) {
            let items = template.body.items.clone();
            self.render_items(&items, node, path, mode, out, depth + 1)
        } else if node.kind() == NodeKind::Argument {
            // Arguments without a template render as their own span.
            if mode == RenderMode::Annotated {
                out.push(format!("[{}", node.label()));
            }
            render_argument_content(node, mode, out);
            if mode == RenderMode::Annotated {
                out.push("]".to_string());
            }
            Ok(())
        } else {
            Err(RenderError::MissingTemplate {
                label: node.label().to_string(),
                path: path.to_string(),
            })
        }
    }

    fn render_items(
        &self,
        items: &[AstItem],
        node: &MrNode,
        path: &str,
        mode: RenderMode,
        out: &mut Vec<String>,
        depth: usize,
    ) -> Result<(), RenderError> {
        if depth > MAX_REDIRECT_DEPTH {
            return Err(RenderError::RecursionLimit {
                path: path.to_string(),
            });
        }
        for item in items {
            match item {
                AstItem::Literal(text) => out.push(text.clone()),
                AstItem::StructOpen(label) => {
                    if mode == RenderMode::Annotated {
                        out.push(format!("[{label}"));
                    }
                }
                AstItem::StructClose => {
                    if mode == RenderMode::Annotated {
                        out.push("]".to_string());
                    }
                }
                AstItem::VarRef(name) => {
                    let label = name.to_uppercase();
                    let arg = set_argument_child(node, &label).ok_or_else(|| {
                        RenderError::UnboundVariable {
                            name: name.clone(),
                            path: path.to_string(),
                        }
                    })?;
                    render_argument_content(arg, mode, out);
                }
                AstItem::Invoke(name) => {
                    let matching: Vec<(usize, &MrNode)> = node
                        .children()
                        .enumerate()
                        .filter(|(_, c)| c.label() == name)
                        .collect();
                    if !matching.is_empty() {
                        for (i, child) in matching {
                            let child_path = format!("{path}/{name}[{i}]");
                            self.render_node(child, &child_path, mode, out, depth + 1)?;
                        }
                    } else if let Some(template) = self.get(name) {
                        // Redirect: evaluate another template against the
                        // same node, as in conditional dispatch.
                        let items = template.body.items.clone();
                        self.render_items(&items, node, path, mode, out, depth + 1)?;
                    } else {
                        return Err(RenderError::MissingTemplate {
                            label: name.clone(),
                            path: path.to_string(),
                        });
                    }
                }
                AstItem::Optional(seq) => {
                    if optional_is_active(seq, node) {
                        self.render_items(seq, node, path, mode, out, depth + 1)?;
                    }
                }
                AstItem::Conditional {
                    predicate,
                    then_items,
                    else_items,
                } => {
                    let Predicate::IsSet(name) = predicate;
                    let branch = if is_set(node, name) {
                        then_items
                    } else {
                        else_items
                    };
                    self.render_items(branch, node, path, mode, out, depth + 1)?;
                }
            }
        }
        Ok(())
    }
}

/// `IsSet($name)`: the node has an argument child labeled `NAME` with
/// nonempty text.
fn is_set(node: &MrNode, var_name: &str) -> bool {
    set_argument_child(node, &var_name.to_uppercase()).is_some()
}

fn set_argument_child<'a>(node: &'a MrNode, label: &str) -> Option<&'a MrNode> {
    node.children()
        .find(|c| c.kind() == NodeKind::Argument && c.label() == label && !c.text().is_empty())
}

/// An `Optional(...)` renders only when every `$var` inside it is set.
/// A variable-free optional always renders.
fn optional_is_active(items: &[AstItem], node: &MrNode) -> bool {
    items.iter().all(|item| match item {
        AstItem::VarRef(name) => is_set(node, name),
        AstItem::Optional(seq) => optional_is_active(seq, node),
        AstItem::Conditional {
            then_items,
            else_items,
            ..
        } => optional_is_active(then_items, node) && optional_is_active(else_items, node),
        _ => true,
    })
}

/// Emit an argument's value: terminal text interleaved with sub-argument
/// spans. In annotated mode sub-arguments keep their own markers so the
/// output signature matches the input tree.
fn render_argument_content(arg: &MrNode, mode: RenderMode, out: &mut Vec<String>) {
    for item in arg.items() {
        match item {
            NodeItem::Text(text) => out.extend(text.split_whitespace().map(str::to_string)),
            NodeItem::Child(sub) => {
                if mode == RenderMode::Annotated {
                    out.push(format!("[{}", sub.label()));
                }
                render_argument_content(sub, mode, out);
                if mode == RenderMode::Annotated {
                    out.push("]".to_string());
                }
            }
        }
    }
}

/// Parse one template body into a [`Template`].
pub fn parse_template(name: &str, body: &str) -> Result<Template, TemplateError> {
    if body.trim().is_empty() {
        return Err(TemplateError::Syntax {
            position: 0,
            message: "empty template body".to_string(),
        });
    }
    let tokens = lex(body)?;
    let mut pos = 0;
    let items = parse_seq(&tokens, &mut pos, &[])?;
    if pos != tokens.len() {
        return Err(TemplateError::Syntax {
            position: tokens[pos].position,
            message: format!("unexpected {:?}", tokens[pos].kind),
        });
    }
    Ok(Template {
        name: name.to_string(),
        body: TemplateAst { items },
    })
}

/// Load a registry from `NAME<TAB>BODY` lines.
pub fn load_registry(reader: impl BufRead) -> Result<TemplateRegistry, TemplateError> {
    let mut registry = TemplateRegistry::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| TemplateError::Io(e.to_string()))?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (name, body) = line
            .split_once('\t')
            .ok_or(TemplateError::BadLine { line: line_no })?;
        let name = name.trim();
        let template = parse_template(name, body.trim()).map_err(|e| match e {
            TemplateError::DuplicateTemplate { .. } => e,
            other => TemplateError::InTemplate {
                line: line_no,
                name: name.to_string(),
                source: Box::new(other),
            },
        })?;
        if registry.insert(template).is_err() {
            return Err(TemplateError::DuplicateTemplate {
                name: name.to_string(),
            });
        }
    }
    Ok(registry)
}

// ---------------------------------------------------------------------------
// DSL lexer/parser

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Word(String),
    Var(String),
    Open(String),
    Close,
    LParen,
    RParen,
    Question,
    Colon,
}

#[derive(Debug, Clone, PartialEq)]
struct Tok {
    kind: TokKind,
    position: usize,
}

const TRAILING_PUNCT: &[char] = &[',', '.', ';', '!', '?'];

fn lex(body: &str) -> Result<Vec<Tok>, TemplateError> {
    let mut tokens = Vec::new();
    let bytes = body.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c == '(' {
            tokens.push(Tok {
                kind: TokKind::LParen,
                position: i,
            });
            i += 1;
        } else if c == ')' {
            tokens.push(Tok {
                kind: TokKind::RParen,
                position: i,
            });
            i += 1;
        } else {
            let start = i;
            while i < bytes.len() {
                let ch = bytes[i] as char;
                if ch.is_whitespace() || ch == '(' || ch == ')' {
                    break;
                }
                i += 1;
            }
            lex_chunk(&body[start..i], start, &mut tokens)?;
        }
    }
    Ok(tokens)
}

/// Split one whitespace-delimited chunk into tokens: trailing punctuation
/// peels off as literal words, then the stem classifies.
fn lex_chunk(chunk: &str, position: usize, tokens: &mut Vec<Tok>) -> Result<(), TemplateError> {
    let mut stem = chunk;
    let mut trailing: Vec<char> = Vec::new();
    while stem.len() > 1 {
        match stem.chars().last() {
            Some(c) if TRAILING_PUNCT.contains(&c) => {
                trailing.push(c);
                stem = &stem[..stem.len() - c.len_utf8()];
            }
            _ => break,
        }
    }

    let kind = if stem == "?" {
        TokKind::Question
    } else if stem == ":" {
        TokKind::Colon
    } else if stem == "]" {
        TokKind::Close
    } else if let Some(label) = stem.strip_prefix('[') {
        if label.is_empty() || !is_uppercase_ident(label) {
            return Err(TemplateError::Syntax {
                position,
                message: format!("bad span label {stem:?}"),
            });
        }
        TokKind::Open(label.to_string())
    } else if let Some(var) = stem.strip_prefix('$') {
        if var.is_empty() || !is_var_ident(var) {
            return Err(TemplateError::Syntax {
                position,
                message: format!("bad variable {stem:?}"),
            });
        }
        TokKind::Var(var.to_string())
    } else {
        TokKind::Word(stem.to_string())
    };
    tokens.push(Tok { kind, position });

    let mut offset = position + stem.len();
    for c in trailing.into_iter().rev() {
        tokens.push(Tok {
            kind: TokKind::Word(c.to_string()),
            position: offset,
        });
        offset += c.len_utf8();
    }
    Ok(())
}

fn is_uppercase_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase())
        && s.chars()
            .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

fn is_var_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && s.chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stop {
    RParen,
    Colon,
}

fn parse_seq(
    tokens: &[Tok],
    pos: &mut usize,
    stops: &[Stop],
) -> Result<Vec<AstItem>, TemplateError> {
    let mut items = Vec::new();
    while *pos < tokens.len() {
        let tok = &tokens[*pos];
        match &tok.kind {
            TokKind::RParen if stops.contains(&Stop::RParen) => break,
            TokKind::Colon if stops.contains(&Stop::Colon) => break,
            TokKind::Word(w) if followed_by_lparen(tokens, *pos) => {
                let call_pos = tok.position;
                let name = w.clone();
                ensure_balanced_call(tokens, *pos + 1)?;
                if name != "IsSet" && name != "Optional" {
                    return Err(TemplateError::UnknownFunction { name });
                }
                *pos += 2; // word + '('
                if name == "Optional" {
                    let seq = parse_seq(tokens, pos, &[Stop::RParen])?;
                    expect_rparen(tokens, pos, call_pos)?;
                    items.push(AstItem::Optional(seq));
                } else {
                    let var = match tokens.get(*pos).map(|t| &t.kind) {
                        Some(TokKind::Var(v)) => v.clone(),
                        _ => {
                            return Err(TemplateError::Syntax {
                                position: call_pos,
                                message: "IsSet takes a single $variable".to_string(),
                            })
                        }
                    };
                    *pos += 1;
                    expect_rparen(tokens, pos, call_pos)?;
                    match tokens.get(*pos).map(|t| &t.kind) {
                        Some(TokKind::Question) => *pos += 1,
                        _ => {
                            return Err(TemplateError::Syntax {
                                position: call_pos,
                                message: "expected `?` after IsSet(...)".to_string(),
                            })
                        }
                    }
                    let mut then_stops = stops.to_vec();
                    then_stops.push(Stop::Colon);
                    let then_items = parse_seq(tokens, pos, &then_stops)?;
                    match tokens.get(*pos).map(|t| &t.kind) {
                        Some(TokKind::Colon) => *pos += 1,
                        _ => {
                            return Err(TemplateError::Syntax {
                                position: call_pos,
                                message: "expected `:` in conditional".to_string(),
                            })
                        }
                    }
                    let else_items = parse_seq(tokens, pos, stops)?;
                    items.push(AstItem::Conditional {
                        predicate: Predicate::IsSet(var),
                        then_items,
                        else_items,
                    });
                }
            }
            TokKind::Word(w) => {
                if is_uppercase_ident(w) {
                    items.push(AstItem::Invoke(w.clone()));
                } else {
                    items.push(AstItem::Literal(w.clone()));
                }
                *pos += 1;
            }
            TokKind::Var(v) => {
                items.push(AstItem::VarRef(v.clone()));
                *pos += 1;
            }
            TokKind::Open(label) => {
                items.push(AstItem::StructOpen(label.clone()));
                *pos += 1;
            }
            TokKind::Close => {
                items.push(AstItem::StructClose);
                *pos += 1;
            }
            TokKind::LParen | TokKind::RParen | TokKind::Question | TokKind::Colon => {
                return Err(TemplateError::Syntax {
                    position: tok.position,
                    message: format!("unexpected {:?}", tok.kind),
                });
            }
        }
    }
    Ok(items)
}

fn followed_by_lparen(tokens: &[Tok], pos: usize) -> bool {
    matches!(tokens.get(pos + 1).map(|t| &t.kind), Some(TokKind::LParen))
}

/// Check that the call opening at `lparen_pos` has a matching `)`, before
/// any name-based checks, so `Foo(` reports a syntax error.
fn ensure_balanced_call(tokens: &[Tok], lparen_pos: usize) -> Result<(), TemplateError> {
    let mut depth = 0usize;
    for tok in &tokens[lparen_pos..] {
        match tok.kind {
            TokKind::LParen => depth += 1,
            TokKind::RParen => {
                depth -= 1;
                if depth == 0 {
                    return Ok(());
                }
            }
            _ => {}
        }
    }
    Err(TemplateError::Syntax {
        position: tokens[lparen_pos].position,
        message: "unbalanced parenthesis".to_string(),
    })
}

fn expect_rparen(tokens: &[Tok], pos: &mut usize, call_pos: usize) -> Result<(), TemplateError> {
    match tokens.get(*pos).map(|t| &t.kind) {
        Some(TokKind::RParen) => {
            *pos += 1;
            Ok(())
        }
        _ => Err(TemplateError::Syntax {
            position: call_pos,
            message: "unbalanced parenthesis".to_string(),
        }),
    }
}
