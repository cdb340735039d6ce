//! Streaming reader for CoNLL-U treebanks.
//!
//! Only the columns the analysis needs are kept: form, lemma, UPOS, the
//! gender/number/case subset of FEATS, head and relation. Multiword-token
//! ranges (`4-5`) and empty nodes (`5.1`) are skipped.
//!
//! ```
//! use gendermi::conllu::{Reader, ParseMode};
//!
//! let text = "1\tpuente\tpuente\tNOUN\t_\tGender=Masc|Number=Sing\t0\troot\t_\t_\n\n";
//! let mut reader = Reader::new(text.as_bytes(), ParseMode::Lenient);
//! let sentence = reader.next().unwrap().unwrap();
//! assert_eq!(sentence.tokens[0].lemma, "puente");
//! ```

use std::fmt;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: expected 10 tab-separated columns, found {found}")]
    MalformedLine { line: usize, found: usize },
    #[error("line {line}: invalid token id {id:?}")]
    InvalidId { line: usize, id: String },
    #[error("line {line}: head {head} out of range for a sentence of {len} tokens")]
    InvalidHead { line: usize, head: usize, len: usize },
    #[error("line {line}: head {value:?} is not a token index")]
    NonNumericHead { line: usize, value: String },
    #[error("line {line}: malformed feature segment {segment:?}")]
    MalformedFeature { line: usize, segment: String },
    #[error("line {line}: input is not valid UTF-8")]
    InvalidUtf8 { line: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Strict mode aborts on the first structural problem; lenient mode drops
/// the offending sentence and counts it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseMode {
    Strict,
    #[default]
    Lenient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    Masc,
    Fem,
    Neut,
}

impl Gender {
    pub const ALL: [Gender; 3] = [Gender::Masc, Gender::Fem, Gender::Neut];

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Masc => "Masc",
            Gender::Fem => "Fem",
            Gender::Neut => "Neut",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Number {
    Sing,
    Plur,
}

impl Number {
    pub fn as_str(self) -> &'static str {
        match self {
            Number::Sing => "Sing",
            Number::Plur => "Plur",
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Case {
    Nom,
    Acc,
    Gen,
    Dat,
    Ins,
    Loc,
    Voc,
    Other(String),
}

impl Case {
    fn from_label(label: &str) -> Case {
        match label {
            "Nom" => Case::Nom,
            "Acc" => Case::Acc,
            "Gen" => Case::Gen,
            "Dat" => Case::Dat,
            "Ins" => Case::Ins,
            "Loc" => Case::Loc,
            "Voc" => Case::Voc,
            other => Case::Other(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Case::Nom => "Nom",
            Case::Acc => "Acc",
            Case::Gen => "Gen",
            Case::Dat => "Dat",
            Case::Ins => "Ins",
            Case::Loc => "Loc",
            Case::Voc => "Voc",
            Case::Other(label) => label,
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The morphological features the analysis uses. `None` means the feature
/// was not annotated.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MorphFeatures {
    pub gender: Option<Gender>,
    pub number: Option<Number>,
    pub case: Option<Case>,
}

impl MorphFeatures {
    /// Parses a FEATS column. Keys other than Gender/Number/Case are ignored,
    /// as are unrecognized Gender/Number values. Segments without `=` are an
    /// error only in strict mode.
    pub fn parse(column: &str, mode: ParseMode) -> Result<MorphFeatures, String> {
        let mut feats = MorphFeatures::default();
        if column == "_" || column.is_empty() {
            return Ok(feats);
        }
        for segment in column.split('|') {
            let Some((key, value)) = segment.split_once('=') else {
                if mode == ParseMode::Strict {
                    return Err(segment.to_string());
                }
                continue;
            };
            match key {
                "Gender" => {
                    feats.gender = match value {
                        "Masc" => Some(Gender::Masc),
                        "Fem" => Some(Gender::Fem),
                        "Neut" => Some(Gender::Neut),
                        _ => None,
                    }
                }
                "Number" => {
                    feats.number = match value {
                        "Sing" => Some(Number::Sing),
                        "Plur" => Some(Number::Plur),
                        _ => None,
                    }
                }
                "Case" => feats.case = Some(Case::from_label(value)),
                _ => {}
            }
        }
        Ok(feats)
    }

    fn render(&self) -> String {
        // UD orders features alphabetically by key.
        let mut parts = Vec::new();
        if let Some(case) = &self.case {
            parts.push(format!("Case={case}"));
        }
        if let Some(gender) = self.gender {
            parts.push(format!("Gender={gender}"));
        }
        if let Some(number) = self.number {
            parts.push(format!("Number={number}"));
        }
        if parts.is_empty() {
            "_".to_string()
        } else {
            parts.join("|")
        }
    }
}

/// Lenient-mode FEATS parsing.
pub fn parse_feats(column: &str) -> MorphFeatures {
    MorphFeatures::parse(column, ParseMode::Lenient).unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub feats: MorphFeatures,
    /// 0 is the artificial root.
    pub head: usize,
    pub deprel: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub source_id: Option<String>,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token with the given 1-based id.
    pub fn token(&self, id: usize) -> Option<&Token> {
        id.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    /// Head token of `token`, `None` for the root.
    pub fn head_of(&self, token: &Token) -> Option<&Token> {
        self.token(token.head)
    }

    pub fn write_conllu<W: Write>(&self, out: &mut W) -> io::Result<()> {
        if let Some(id) = &self.source_id {
            writeln!(out, "# sent_id = {id}")?;
        }
        for t in &self.tokens {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t_\t{}\t{}\t{}\t_\t_",
                t.id,
                t.form,
                t.lemma,
                t.upos,
                t.feats.render(),
                t.head,
                t.deprel
            )?;
        }
        writeln!(out)
    }
}

/// Iterator over the sentences of a CoNLL-U stream.
///
/// Memory is bounded by the largest sentence. In lenient mode broken
/// sentences are dropped and counted in [`Reader::skipped`].
pub struct Reader<R> {
    input: R,
    mode: ParseMode,
    line_no: usize,
    buf: Vec<u8>,
    skipped: usize,
    done: bool,
}

enum LineKind {
    Token(Token),
    Skip,
}

impl<R: BufRead> Reader<R> {
    pub fn new(input: R, mode: ParseMode) -> Self {
        Reader {
            input,
            mode,
            line_no: 0,
            buf: Vec::new(),
            skipped: 0,
            done: false,
        }
    }

    /// Sentences dropped in lenient mode so far.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    fn read_line(&mut self) -> Result<Option<Result<String, ParseError>>, io::Error> {
        self.buf.clear();
        if self.input.read_until(b'\n', &mut self.buf)? == 0 {
            return Ok(None);
        }
        self.line_no += 1;
        while matches!(self.buf.last(), Some(b'\n' | b'\r')) {
            self.buf.pop();
        }
        Ok(Some(match std::str::from_utf8(&self.buf) {
            Ok(s) => Ok(s.to_string()),
            Err(_) => Err(ParseError::InvalidUtf8 { line: self.line_no }),
        }))
    }

    fn parse_token_line(&self, line: &str) -> Result<LineKind, ParseError> {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(ParseError::MalformedLine {
                line: self.line_no,
                found: cols.len(),
            });
        }
        let id_col = cols[0];
        if id_col.contains('-') || id_col.contains('.') {
            return Ok(LineKind::Skip);
        }
        let id = id_col
            .parse::<usize>()
            .ok()
            .filter(|&id| id >= 1)
            .ok_or_else(|| ParseError::InvalidId {
                line: self.line_no,
                id: id_col.to_string(),
            })?;
        let head = cols[6].parse::<usize>().map_err(|_| ParseError::NonNumericHead {
            line: self.line_no,
            value: cols[6].to_string(),
        })?;
        let feats = MorphFeatures::parse(cols[5], self.mode).map_err(|segment| {
            ParseError::MalformedFeature {
                line: self.line_no,
                segment,
            }
        })?;
        Ok(LineKind::Token(Token {
            id,
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            feats,
            head,
            deprel: cols[7].to_string(),
        }))
    }

    /// Consumes lines up to the next blank line (or EOF). Returns `None` at EOF
    /// with nothing pending.
    fn next_block(&mut self) -> Option<Result<Sentence, ParseError>> {
        let mut sentence = Sentence::default();
        // first error in the block, with the line it happened on
        let mut error: Option<ParseError> = None;
        let mut token_lines = Vec::new();
        let mut saw_content = false;
        loop {
            let line = match self.read_line() {
                Ok(Some(line)) => line,
                Ok(None) => break,
                Err(e) => return Some(Err(e.into())),
            };
            let line = match line {
                Ok(line) => line,
                Err(e) => {
                    saw_content = true;
                    error.get_or_insert(e);
                    continue;
                }
            };
            if line.trim().is_empty() {
                if saw_content {
                    break;
                }
                continue;
            }
            saw_content = true;
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(id) = comment.trim_start().strip_prefix("sent_id") {
                    let id = id.trim_start().trim_start_matches('=').trim();
                    sentence.source_id = Some(id.to_string());
                }
                continue;
            }
            if error.is_some() {
                continue;
            }
            match self.parse_token_line(&line) {
                Ok(LineKind::Token(tok)) => {
                    token_lines.push(self.line_no);
                    sentence.tokens.push(tok);
                }
                Ok(LineKind::Skip) => {}
                Err(e) => error = Some(e),
            }
        }
        if !saw_content {
            return None;
        }
        if error.is_none() {
            error = validate(&sentence, &token_lines).err();
        }
        match error {
            None => Some(Ok(sentence)),
            Some(e) => Some(Err(e)),
        }
    }
}

fn validate(sentence: &Sentence, lines: &[usize]) -> Result<(), ParseError> {
    let len = sentence.tokens.len();
    for (i, (tok, &line)) in sentence.tokens.iter().zip(lines).enumerate() {
        if tok.id != i + 1 {
            return Err(ParseError::InvalidId {
                line,
                id: tok.id.to_string(),
            });
        }
        if tok.head > len || tok.head == tok.id {
            return Err(ParseError::InvalidHead {
                line,
                head: tok.head,
                len,
            });
        }
    }
    Ok(())
}

impl<R: BufRead> Iterator for Reader<R> {
    type Item = Result<Sentence, ParseError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            match self.next_block() {
                None => self.done = true,
                Some(Ok(s)) if s.is_empty() => {} // comment-only block
                Some(Ok(s)) => return Some(Ok(s)),
                Some(Err(ParseError::Io(e))) => {
                    self.done = true;
                    return Some(Err(ParseError::Io(e)));
                }
                Some(Err(e)) => match self.mode {
                    ParseMode::Strict => {
                        self.done = true;
                        return Some(Err(e));
                    }
                    ParseMode::Lenient => self.skipped += 1,
                },
            }
        }
        None
    }
}

/// Convenience wrapper over [`Reader::new`].
pub fn parse_conllu<R: BufRead>(input: R, mode: ParseMode) -> Reader<R> {
    Reader::new(input, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const BRIDGE: &str = "# sent_id = bridge\n\
1\tYo\tyo\tPRON\t_\tNumber=Sing|Person=1\t2\tnsubj\t_\t_\n\
2\tquiero\tquerer\tVERB\t_\tMood=Ind|Number=Sing\t0\troot\t_\t_\n\
3\tcruzar\tcruzar\tVERB\t_\tVerbForm=Inf\t2\txcomp\t_\t_\n\
4\tun\tuno\tDET\t_\tGender=Masc|Number=Sing\t5\tdet\t_\t_\n\
5\tpuente\tpuente\tNOUN\t_\tGender=Masc|Number=Sing\t3\tobj\t_\t_\n\
6\trobusto\trobusto\tADJ\t_\tGender=Masc|Number=Sing\t5\tamod\t_\t_\n\n";

    fn parse_all(text: &str, mode: ParseMode) -> (Vec<Sentence>, usize) {
        let mut r = Reader::new(text.as_bytes(), mode);
        let out: Vec<_> = r.by_ref().map(|s| s.unwrap()).collect();
        (out, r.skipped())
    }

    #[test]
    fn bridge_sentence() {
        let (sents, skipped) = parse_all(BRIDGE, ParseMode::Strict);
        assert_eq!(skipped, 0);
        assert_eq!(sents.len(), 1);
        let s = &sents[0];
        assert_eq!(s.len(), 6);
        assert_eq!(s.source_id.as_deref(), Some("bridge"));
        let puente = s.token(5).unwrap();
        assert_eq!(puente.lemma, "puente");
        assert_eq!(puente.feats.gender, Some(Gender::Masc));
        assert_eq!(puente.feats.number, Some(Number::Sing));
        assert_eq!(puente.feats.case, None);
        assert_eq!(s.head_of(puente).unwrap().lemma, "cruzar");
    }

    #[test]
    fn empty_input() {
        assert!(parse_all("", ParseMode::Strict).0.is_empty());
        assert!(parse_all("\n\n# only a comment\n\n", ParseMode::Strict).0.is_empty());
    }

    #[test]
    fn lenient_drops_bad_head() {
        let bad = BRIDGE.replace("4\tun\tuno\tDET\t_\tGender=Masc|Number=Sing\t5", "4\tun\tuno\tDET\t_\tGender=Masc|Number=Sing\t9");
        let text = format!("{bad}{BRIDGE}");
        let (sents, skipped) = parse_all(&text, ParseMode::Lenient);
        assert_eq!(sents.len(), 1);
        assert_eq!(skipped, 1);
    }

    #[test]
    fn strict_reports_line_number() {
        let bad = BRIDGE.replace("\t5\tamod", "\t9\tamod");
        let err = Reader::new(bad.as_bytes(), ParseMode::Strict)
            .next()
            .unwrap()
            .unwrap_err();
        match err {
            ParseError::InvalidHead { line, head, len } => {
                assert_eq!((line, head, len), (7, 9, 6));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_column_count() {
        let text = "1\ta\ta\tNOUN\t_\t_\t0\n\n";
        let err = Reader::new(text.as_bytes(), ParseMode::Strict)
            .next()
            .unwrap()
            .unwrap_err();
        assert!(matches!(err, ParseError::MalformedLine { line: 1, found: 7 }));
        assert_eq!(parse_all(text, ParseMode::Lenient).1, 1);
    }

    #[test]
    fn skips_ranges_and_empty_nodes() {
        let text = "1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n\
1\tde\tde\tADP\t_\t_\t3\tcase\t_\t_\n\
2\tel\tel\tDET\t_\t_\t3\tdet\t_\t_\n\
2.1\tx\tx\tX\t_\t_\t_\t_\t_\t_\n\
3\tmar\tmar\tNOUN\t_\tGender=Masc\t0\troot\t_\t_\n\n";
        let (sents, skipped) = parse_all(text, ParseMode::Strict);
        assert_eq!(skipped, 0);
        assert_eq!(sents[0].len(), 3);
    }

    #[test]
    fn crlf_and_missing_trailing_blank() {
        let text = BRIDGE.trim_end().replace('\n', "\r\n");
        let (sents, _) = parse_all(&text, ParseMode::Strict);
        assert_eq!(sents.len(), 1);
        assert_eq!(sents[0].tokens[5].deprel, "amod");
    }

    #[test]
    fn self_loop_is_invalid() {
        let text = "1\ta\ta\tNOUN\t_\t_\t1\troot\t_\t_\n\n";
        assert_eq!(parse_all(text, ParseMode::Lenient).1, 1);
    }

    #[test]
    fn feats_mapping() {
        let f = parse_feats("Gender=Masc|Number=Sing");
        assert_eq!(f, MorphFeatures { gender: Some(Gender::Masc), number: Some(Number::Sing), case: None });
        assert_eq!(parse_feats("_"), MorphFeatures::default());
        let f = parse_feats("Case=Dat|Gender=Fem|Number=Plur|Definite=Def");
        assert_eq!(f, MorphFeatures { gender: Some(Gender::Fem), number: Some(Number::Plur), case: Some(Case::Dat) });
        assert_eq!(parse_feats("Case=Abl").case, Some(Case::Other("Abl".into())));
    }

    #[test]
    fn malformed_feature_segment() {
        assert_eq!(parse_feats("Gender=Fem|oops").gender, Some(Gender::Fem));
        assert_eq!(MorphFeatures::parse("Gender=Fem|oops", ParseMode::Strict), Err("oops".to_string()));
    }

    #[test]
    fn concatenated_copies() {
        let text = BRIDGE.repeat(5);
        assert_eq!(parse_all(&text, ParseMode::Strict).0.len(), 5);
    }
}
