//! Text formats for prompts and model outputs.
//!
//! ```text
//! Graph: [(a b) (c d) ...]
//! Task: S to T1 or T2 ?
//! ```
//!
//! and, for a chain of thought,
//!
//! ```text
//! <Strategy>: [n1 n2 ...]
//! Decision: [d]
//! ```
//!
//! Single spaces everywhere, LF line breaks, no trailing newline. Labels are
//! written as `label + label_offset`.

use thiserror::Error;

use crate::graph::Graph;
use crate::strategy::Strategy;
use crate::task::ConnectivityTask;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("parse error at byte {offset}: {reason}")]
    Parse { offset: usize, reason: String },
}

/// Output text that cannot be read as a chain of thought.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("format violation at byte {offset}: {reason}")]
pub struct FormatViolation {
    pub offset: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedPrompt {
    pub graph: Graph,
    pub source: usize,
    pub target1: usize,
    pub target2: usize,
}

/// A model output read leniently: node lists may be cut short and the
/// decision line may be missing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedOutput {
    /// Header before the colon, e.g. `DFS`; empty if the text was empty.
    pub tag: String,
    pub cot: Vec<usize>,
    pub decision: Option<usize>,
    /// Whether the node list was closed with `]`.
    pub complete: bool,
}

impl ParsedOutput {
    pub fn strategy(&self) -> Option<Strategy> {
        self.tag.parse().ok()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Codec {
    pub label_offset: usize,
}

impl Codec {
    pub fn new(label_offset: usize) -> Self {
        Codec { label_offset }
    }

    pub fn format_prompt(&self, task: &ConnectivityTask) -> String {
        let off = self.label_offset;
        let edges: Vec<String> = task
            .graph
            .edges()
            .iter()
            .map(|&(u, v)| format!("({} {})", u + off, v + off))
            .collect();
        format!(
            "Graph: [{}]\nTask: {} to {} or {} ?",
            edges.join(" "),
            task.source + off,
            task.target1 + off,
            task.target2 + off
        )
    }

    pub fn parse_prompt(&self, text: &str) -> Result<ParsedPrompt, CodecError> {
        let mut cur = Cursor::new(text, self.label_offset);
        cur.expect("Graph: [")?;
        let mut edges = Vec::new();
        let mut max_label = 0usize;
        if !cur.eat("]") {
            loop {
                let at = cur.pos;
                cur.expect("(")?;
                let u = cur.label()?;
                cur.expect(" ")?;
                let v = cur.label()?;
                cur.expect(")")?;
                max_label = max_label.max(u).max(v);
                edges.push((at, u, v));
                if cur.eat("]") {
                    break;
                }
                cur.expect(" ")?;
            }
        }
        cur.expect("\nTask: ")?;
        let source = cur.label()?;
        cur.expect(" to ")?;
        let target1 = cur.label()?;
        cur.expect(" or ")?;
        let target2 = cur.label()?;
        cur.expect(" ?")?;
        if cur.pos != text.len() {
            return Err(cur.error("trailing characters"));
        }
        let n = [max_label, source, target1, target2].into_iter().max().unwrap_or(0) + 1;
        let mut graph = Graph::new(n);
        for (at, u, v) in edges {
            graph.add_edge(u, v).map_err(|e| CodecError::Parse {
                offset: at,
                reason: e.to_string(),
            })?;
        }
        Ok(ParsedPrompt {
            graph,
            source,
            target1,
            target2,
        })
    }

    pub fn format_example(&self, strategy: &Strategy, cot: &[usize], decision: usize) -> String {
        let nodes: Vec<String> = cot.iter().map(|&v| (v + self.label_offset).to_string()).collect();
        format!(
            "{strategy}: [{}]\nDecision: [{}]",
            nodes.join(" "),
            decision + self.label_offset
        )
    }

    /// Reads a model output. Truncated text yields a partial node list and no
    /// decision; a non-integer token anywhere is a [`FormatViolation`].
    pub fn parse_output(&self, text: &str) -> Result<ParsedOutput, FormatViolation> {
        let violation = |offset: usize, reason: &str| FormatViolation {
            offset,
            reason: reason.to_string(),
        };
        let mut out = ParsedOutput {
            tag: String::new(),
            cot: Vec::new(),
            decision: None,
            complete: false,
        };
        let lead = text.len() - text.trim_start().len();
        if text[lead..].is_empty() {
            return Ok(out);
        }
        let Some(colon) = text.find(':') else {
            // Only a (possibly partial) header was produced.
            if text.contains(['[', ']']) {
                return Err(violation(lead, "missing ':' after strategy tag"));
            }
            out.tag = text.trim().to_string();
            return Ok(out);
        };
        out.tag = text[..colon].trim().to_string();
        let mut pos = colon + 1;
        let bytes = text.as_bytes();
        while pos < bytes.len() && bytes[pos] == b' ' {
            pos += 1;
        }
        if pos == bytes.len() {
            return Ok(out);
        }
        if bytes[pos] != b'[' {
            return Err(violation(pos, "expected '['"));
        }
        pos += 1;
        let close = text[pos..].find(']').map(|i| i + pos);
        let body_end = close.unwrap_or(text.len());
        let mut tok_start = pos;
        for tok in text[pos..body_end].split(|c: char| c.is_whitespace()) {
            if !tok.is_empty() {
                out.cot.push(
                    self.read_label(tok)
                        .ok_or_else(|| violation(tok_start, "node token is not a label"))?,
                );
            }
            tok_start += tok.len() + 1;
        }
        let Some(close) = close else {
            return Ok(out);
        };
        out.complete = true;
        let rest = &text[close + 1..];
        let rest_at = close + 1;
        let trimmed = rest.trim_start();
        let skip = rest.len() - trimmed.len();
        if trimmed.is_empty() {
            return Ok(out);
        }
        const KEY: &str = "Decision:";
        if trimmed.len() < KEY.len() {
            return if KEY.starts_with(trimmed) {
                Ok(out)
            } else {
                Err(violation(rest_at + skip, "expected 'Decision:'"))
            };
        }
        let Some(after) = trimmed.strip_prefix(KEY) else {
            return Err(violation(rest_at + skip, "expected 'Decision:'"));
        };
        let after_at = rest_at + skip + KEY.len();
        let inner = after.trim_start();
        let inner_at = after_at + (after.len() - inner.len());
        if inner.is_empty() {
            return Ok(out);
        }
        let Some(inner) = inner.strip_prefix('[') else {
            return Err(violation(inner_at, "expected '[' after 'Decision:'"));
        };
        let Some(end) = inner.find(']') else {
            // Cut off inside the decision brackets.
            return Ok(out);
        };
        let tok = inner[..end].trim();
        out.decision = Some(
            self.read_label(tok)
                .ok_or_else(|| violation(inner_at + 1, "decision is not a label"))?,
        );
        Ok(out)
    }

    fn read_label(&self, tok: &str) -> Option<usize> {
        if tok.is_empty() || !tok.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        tok.parse::<usize>().ok()?.checked_sub(self.label_offset)
    }
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, offset: usize) -> Self {
        Cursor { text, pos: 0, offset }
    }

    fn error(&self, reason: &str) -> CodecError {
        CodecError::Parse {
            offset: self.pos,
            reason: reason.to_string(),
        }
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.text[self.pos..].starts_with(lit) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<(), CodecError> {
        if self.eat(lit) {
            Ok(())
        } else {
            Err(self.error(&format!("expected {lit:?}")))
        }
    }

    fn label(&mut self) -> Result<usize, CodecError> {
        let digits = self.text[self.pos..].bytes().take_while(u8::is_ascii_digit).count();
        if digits == 0 {
            return Err(self.error("expected a node label"));
        }
        let raw: usize = self.text[self.pos..self.pos + digits]
            .parse()
            .map_err(|_| self.error("label overflows"))?;
        let v = raw
            .checked_sub(self.offset)
            .ok_or_else(|| self.error("label below the label offset"))?;
        self.pos += digits;
        Ok(v)
    }
}
