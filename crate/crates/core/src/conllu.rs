//! Reading and writing treebanks in CoNLL-U format.
//!
//! Only ID, FORM, UPOS, HEAD and DEPREL are interpreted. The remaining
//! columns, multiword-token range lines and empty-node lines are carried
//! through unchanged so that a parse/serialize round trip is lossless.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConlluError {
    #[error("line {line}: expected 10 tab-separated columns, found {found}")]
    Columns { line: usize, found: usize },

    #[error("line {line}: invalid {column} value '{value}'")]
    InvalidField {
        line: usize,
        column: &'static str,
        value: String,
    },

    #[error("line {line}: empty FORM")]
    EmptyForm { line: usize },

    #[error("sentence '{sent_id}': token ids must be 1..n without gaps (found {found} at position {expected})")]
    IdSequence {
        sent_id: String,
        expected: usize,
        found: usize,
    },

    #[error("sentence '{sent_id}': head {head} of token {token} is out of range 0..={len}")]
    HeadOutOfRange {
        sent_id: String,
        token: usize,
        head: usize,
        len: usize,
    },
}

/// One syntactic word of a sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: String,
    /// 0 denotes the pseudo root.
    pub head: usize,
    pub deprel: String,
    pub deps: String,
    pub misc: String,
}

impl Token {
    /// A token with the pass-through columns set to `_`.
    pub fn new(id: usize, form: &str, upos: &str, head: usize, deprel: &str) -> Self {
        Token {
            id,
            form: form.to_owned(),
            lemma: "_".to_owned(),
            upos: upos.to_owned(),
            xpos: "_".to_owned(),
            feats: "_".to_owned(),
            head,
            deprel: deprel.to_owned(),
            deps: "_".to_owned(),
            misc: "_".to_owned(),
        }
    }

    pub fn is_punct(&self) -> bool {
        self.upos == "PUNCT"
    }
}

/// A comment line of a sentence block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Comment {
    /// `# key = value`
    Meta { key: String, value: String },
    /// Any other comment, stored without the leading `#`.
    Other(String),
}

/// A multiword-token range line or an empty-node line, kept verbatim.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawLine {
    /// Number of regular tokens preceding this line.
    pub before_token: usize,
    pub line: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sentence {
    pub comments: Vec<Comment>,
    pub tokens: Vec<Token>,
    pub raw_lines: Vec<RawLine>,
}

impl Sentence {
    pub fn from_tokens(tokens: Vec<Token>) -> Self {
        Sentence {
            tokens,
            ..Default::default()
        }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| match c {
            Comment::Meta { key: k, value } if k == key => Some(value.as_str()),
            _ => None,
        })
    }

    /// Sets a metadata value, replacing an existing entry in place.
    pub fn set_meta(&mut self, key: &str, value: &str) {
        for c in &mut self.comments {
            if let Comment::Meta { key: k, value: v } = c {
                if k == key {
                    *v = value.to_owned();
                    return;
                }
            }
        }
        self.comments.push(Comment::Meta {
            key: key.to_owned(),
            value: value.to_owned(),
        });
    }

    pub fn sent_id(&self) -> Option<&str> {
        self.meta("sent_id")
    }

    /// Year of the sentence from `# decade = YYYY` or `# date = YYYY-MM-DD`.
    pub fn year(&self) -> Option<i32> {
        if let Some(d) = self.meta("decade") {
            if let Ok(y) = d.trim().parse() {
                return Some(y);
            }
        }
        let date = self.meta("date")?;
        date.trim().get(..4)?.parse().ok()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.form.as_str())
    }

    fn label(&self, index: usize) -> String {
        self.sent_id()
            .map(str::to_owned)
            .unwrap_or_else(|| format!("#{}", index + 1))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Treebank {
    pub sentences: Vec<Sentence>,
    pub source: String,
}

impl Treebank {
    pub fn new(sentences: Vec<Sentence>) -> Self {
        Treebank {
            sentences,
            source: String::new(),
        }
    }

    /// Identifier of the sentence at `index`: its `sent_id`, or a
    /// positional fallback `#<index+1>`.
    pub fn sentence_key(&self, index: usize) -> String {
        self.sentences[index].label(index)
    }
}

/// Parses CoNLL-U text.
pub fn parse_conllu(text: &str) -> Result<Treebank, ConlluError> {
    let mut sentences = Vec::new();
    let mut current = Sentence::default();
    let mut open = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if open {
                sentences.push(std::mem::take(&mut current));
                open = false;
            }
            continue;
        }
        open = true;

        if let Some(body) = line.strip_prefix('#') {
            current.comments.push(parse_comment(body));
            continue;
        }

        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(ConlluError::Columns {
                line: line_no,
                found: cols.len(),
            });
        }

        if cols[0].contains('-') || cols[0].contains('.') {
            current.raw_lines.push(RawLine {
                before_token: current.tokens.len(),
                line: line.to_owned(),
            });
            continue;
        }

        let id = parse_index(cols[0], line_no, "ID")?;
        let head = parse_index(cols[6], line_no, "HEAD")?;
        if cols[1].is_empty() {
            return Err(ConlluError::EmptyForm { line: line_no });
        }
        current.tokens.push(Token {
            id,
            form: cols[1].to_owned(),
            lemma: cols[2].to_owned(),
            upos: cols[3].to_owned(),
            xpos: cols[4].to_owned(),
            feats: cols[5].to_owned(),
            head,
            deprel: cols[7].to_owned(),
            deps: cols[8].to_owned(),
            misc: cols[9].to_owned(),
        });
    }
    if open {
        sentences.push(current);
    }

    for (i, s) in sentences.iter().enumerate() {
        check_sentence(s, i)?;
    }

    Ok(Treebank::new(sentences))
}

fn parse_comment(body: &str) -> Comment {
    let trimmed = body.trim_start();
    if let Some((key, value)) = trimmed.split_once('=') {
        let key = key.trim();
        if !key.is_empty() && !key.contains(char::is_whitespace) {
            return Comment::Meta {
                key: key.to_owned(),
                value: value.trim().to_owned(),
            };
        }
    }
    Comment::Other(body.to_owned())
}

fn parse_index(value: &str, line: usize, column: &'static str) -> Result<usize, ConlluError> {
    value.parse().map_err(|_| ConlluError::InvalidField {
        line,
        column,
        value: value.to_owned(),
    })
}

fn check_sentence(s: &Sentence, index: usize) -> Result<(), ConlluError> {
    let n = s.tokens.len();
    for (pos, tok) in s.tokens.iter().enumerate() {
        if tok.id != pos + 1 {
            return Err(ConlluError::IdSequence {
                sent_id: s.label(index),
                expected: pos + 1,
                found: tok.id,
            });
        }
        if tok.head > n {
            return Err(ConlluError::HeadOutOfRange {
                sent_id: s.label(index),
                token: tok.id,
                head: tok.head,
                len: n,
            });
        }
    }
    Ok(())
}

/// Serializes a treebank. Every sentence block ends with a blank line.
pub fn serialize_conllu(tb: &Treebank) -> String {
    let mut out = String::new();
    for s in &tb.sentences {
        write_sentence(&mut out, s);
    }
    out
}

fn write_sentence(out: &mut String, s: &Sentence) {
    for c in &s.comments {
        match c {
            Comment::Meta { key, value } => {
                let _ = writeln!(out, "# {} = {}", key, value);
            }
            Comment::Other(text) => {
                let _ = writeln!(out, "#{}", text);
            }
        }
    }
    let mut raw = s.raw_lines.iter().peekable();
    for (pos, t) in s.tokens.iter().enumerate() {
        while let Some(r) = raw.next_if(|r| r.before_token <= pos) {
            out.push_str(&r.line);
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            t.id, t.form, t.lemma, t.upos, t.xpos, t.feats, t.head, t.deprel, t.deps, t.misc
        );
    }
    for r in raw {
        out.push_str(&r.line);
        out.push('\n');
    }
    out.push('\n');
}
