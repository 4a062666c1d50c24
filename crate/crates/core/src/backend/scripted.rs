//! Deterministic scripted backend: an ordered rule table mapping
//! (purpose, input pattern) to response templates with arithmetic holes.
//! A pure function of the request — identical requests give identical
//! responses — which is what makes desk-scale episodes reproducible.

use std::collections::BTreeMap;
use std::path::Path;

use regex::{Regex, RegexBuilder};

use crate::backend::expr;
use crate::backend::{BackendRequest, Purpose, Reasoner};
use crate::error::BackendError;
use crate::types::Value;

#[derive(Debug, Clone)]
enum Segment {
    Literal(String),
    /// `{expr}` hole: a bare identifier substitutes its text value,
    /// anything else evaluates as arithmetic over the numeric environment.
    Expr(String),
}

#[derive(Debug, Clone)]
pub struct Template {
    segments: Vec<Segment>,
}

impl Template {
    pub fn parse(src: &str) -> Result<Template, BackendError> {
        let mut segments = Vec::new();
        let mut literal = String::new();
        let mut chars = src.chars().peekable();
        while let Some(c) = chars.next() {
            match c {
                '{' if chars.peek() == Some(&'{') => {
                    chars.next();
                    literal.push('{');
                }
                '}' if chars.peek() == Some(&'}') => {
                    chars.next();
                    literal.push('}');
                }
                '{' => {
                    if !literal.is_empty() {
                        segments.push(Segment::Literal(std::mem::take(&mut literal)));
                    }
                    let mut inner = String::new();
                    let mut depth = 1;
                    for c in chars.by_ref() {
                        match c {
                            '{' => {
                                depth += 1;
                                inner.push(c);
                            }
                            '}' => {
                                depth -= 1;
                                if depth == 0 {
                                    break;
                                }
                                inner.push(c);
                            }
                            _ => inner.push(c),
                        }
                    }
                    if depth != 0 {
                        return Err(BackendError::Template("unterminated '{'".into()));
                    }
                    segments.push(Segment::Expr(inner.trim().to_string()));
                }
                '\\' => match chars.next() {
                    Some('n') => literal.push('\n'),
                    Some('t') => literal.push('\t'),
                    Some('\\') => literal.push('\\'),
                    Some(other) => {
                        literal.push('\\');
                        literal.push(other);
                    }
                    None => literal.push('\\'),
                },
                _ => literal.push(c),
            }
        }
        if !literal.is_empty() {
            segments.push(Segment::Literal(literal));
        }
        Ok(Template { segments })
    }

    pub fn render(
        &self,
        text_env: &BTreeMap<String, String>,
        num_env: &BTreeMap<String, f64>,
    ) -> Result<String, BackendError> {
        let mut out = String::new();
        for segment in &self.segments {
            match segment {
                Segment::Literal(s) => out.push_str(s),
                Segment::Expr(src) => {
                    if let Some(text) = text_env.get(src) {
                        // bare identifier with a known text value
                        if text.parse::<f64>().is_err() {
                            out.push_str(text);
                            continue;
                        }
                    }
                    let value = expr::eval(src, num_env)?;
                    out.push_str(Value::number(value).as_str());
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct ScriptedRule {
    /// None matches any purpose (`*` in the rules file).
    pub purpose: Option<Purpose>,
    pattern: Regex,
    template: Template,
    pub line: usize,
}

/// Ordered rule set; the first matching rule wins.
#[derive(Clone)]
pub struct ScriptedBackend {
    rules: Vec<ScriptedRule>,
    label: String,
}

impl ScriptedBackend {
    /// Parse a plain-text rules file. One rule per line:
    ///
    /// ```text
    /// # comment
    /// <purpose> :: <regex over the rendered input> :: <response template>
    /// ```
    ///
    /// Purpose is `reflect | extract | match | infer | act | *`. An empty
    /// pattern matches everything. Templates may hold `{expr}` holes whose
    /// identifiers resolve against named regex captures and any
    /// `name = value` lines found in the input.
    pub fn from_rules_text(text: &str) -> Result<Self, BackendError> {
        let mut rules = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            // left-trim only: an empty trailing template field stays valid
            let parts: Vec<&str> = raw.trim_start().splitn(3, " :: ").collect();
            if parts.len() != 3 {
                return Err(BackendError::BadRule {
                    line,
                    reason: "expected '<purpose> :: <pattern> :: <template>'".into(),
                });
            }
            let purpose = match parts[0].trim() {
                "*" => None,
                p => Some(Purpose::parse(p).ok_or_else(|| BackendError::BadRule {
                    line,
                    reason: format!("unknown purpose '{p}'"),
                })?),
            };
            let pattern_src = parts[1].trim();
            let pattern = RegexBuilder::new(if pattern_src.is_empty() {
                ""
            } else {
                pattern_src
            })
            .dot_matches_new_line(true)
            .build()
            .map_err(|e| BackendError::BadRule {
                line,
                reason: format!("bad pattern: {e}"),
            })?;
            let template = Template::parse(parts[2]).map_err(|e| BackendError::BadRule {
                line,
                reason: e.to_string(),
            })?;
            rules.push(ScriptedRule {
                purpose,
                pattern,
                template,
                line,
            });
        }
        Ok(ScriptedBackend {
            rules,
            label: "scripted".into(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path).map_err(|e| BackendError::Transport {
            attempts: 0,
            message: format!("cannot read rules file {}: {e}", path.display()),
        })?;
        let mut backend = Self::from_rules_text(&text)?;
        backend.label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scripted".into());
        Ok(backend)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }
}

/// Pull `name = value` lines out of an input text into the rule environment.
fn auto_env(input: &str) -> (BTreeMap<String, String>, BTreeMap<String, f64>) {
    let mut text_env = BTreeMap::new();
    let mut num_env = BTreeMap::new();
    for line in input.lines() {
        let Some((key, value)) = line.split_once('=') else {
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty()
            || !key
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
            || !key.chars().next().unwrap().is_ascii_alphabetic()
        {
            continue;
        }
        text_env.insert(key.to_string(), value.to_string());
        if let Ok(n) = value.parse::<f64>() {
            num_env.insert(key.to_string(), n);
        }
    }
    (text_env, num_env)
}

impl Reasoner for ScriptedBackend {
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError> {
        request.validate()?;
        let input = request.rendered_input();
        for rule in &self.rules {
            if let Some(p) = rule.purpose {
                if p != request.purpose {
                    continue;
                }
            }
            let Some(captures) = rule.pattern.captures(&input) else {
                continue;
            };
            let (mut text_env, mut num_env) = auto_env(&input);
            for name in rule.pattern.capture_names().flatten() {
                if let Some(m) = captures.name(name) {
                    let value = m.as_str().trim().to_string();
                    if let Ok(n) = value.parse::<f64>() {
                        num_env.insert(name.to_string(), n);
                    }
                    text_env.insert(name.to_string(), value);
                }
            }
            return rule.template.render(&text_env, &num_env);
        }
        Err(BackendError::NoRule {
            purpose: request.purpose.name().into(),
        })
    }

    fn name(&self) -> &str {
        &self.label
    }
}
