//! ARPA n-gram language models with Katz backoff scoring.
//!
//! Scores are returned in natural-log units; the file stores log10.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";
/// Score of an out-of-vocabulary word when the model has no `<unk>`.
pub const OOV_FLOOR_LN: f64 = -20.0;

const UNKNOWN_ID: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    log10_prob: f64,
    log10_backoff: f64,
}

#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    counts: Vec<usize>,
    words: Vec<String>,
    ids: HashMap<String, u32>,
    /// `tables[n - 1]` holds the n-grams, keyed by their word ids.
    tables: Vec<HashMap<Vec<u32>, Entry>>,
    unk: Option<u32>,
}

impl NGramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Entry counts per order, as declared in the header.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn has_unk(&self) -> bool {
        self.unk.is_some()
    }

    /// Unigram vocabulary, in file order.
    pub fn vocabulary(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.ids.contains_key(word)
    }

    fn id(&self, word: &str) -> u32 {
        self.ids
            .get(word)
            .copied()
            .or(self.unk)
            .unwrap_or(UNKNOWN_ID)
    }

    fn log10_prob(&self, ctx: &[u32], word: u32) -> f64 {
        let mut key = ctx.to_vec();
        key.push(word);
        if let Some(e) = self.tables[ctx.len()].get(&key) {
            return e.log10_prob;
        }
        if ctx.is_empty() {
            // Only reachable for ids missing from the unigram table.
            return OOV_FLOOR_LN / std::f64::consts::LN_10;
        }
        let backoff = self.tables[ctx.len() - 1]
            .get(ctx)
            .map_or(0.0, |e| e.log10_backoff);
        backoff + self.log10_prob(&ctx[1..], word)
    }

    /// ln P(word | context). Only the last `order - 1` context words are used.
    pub fn score_word<S: AsRef<str>>(&self, context: &[S], word: &str) -> f64 {
        let w = self.id(word);
        if w == UNKNOWN_ID {
            return OOV_FLOOR_LN;
        }
        let keep = context.len().min(self.order - 1);
        let ctx: Vec<u32> = context[context.len() - keep..]
            .iter()
            .map(|c| self.id(c.as_ref()))
            .collect();
        // An unknown context word cuts the usable history at that point.
        let start = ctx.iter().rposition(|&c| c == UNKNOWN_ID).map_or(0, |i| i + 1);
        self.log10_prob(&ctx[start..], w) * std::f64::consts::LN_10
    }

    /// ln P(words) from `<s>` through `</s>`.
    pub fn score_sequence<S: AsRef<str>>(&self, words: &[S]) -> f64 {
        let mut ctx: Vec<&str> = vec![BOS];
        let mut total = 0.0;
        for w in words.iter().map(|w| w.as_ref()).chain(std::iter::once(EOS)) {
            total += self.score_word(&ctx, w);
            ctx.push(w);
        }
        total
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = if bytes.starts_with(&[0x1f, 0x8b]) {
            let mut s = String::new();
            flate2::read::GzDecoder::new(bytes.as_slice())
                .read_to_string(&mut s)
                .map_err(|e| Error::io(path, e))?;
            s
        } else {
            String::from_utf8(bytes)
                .map_err(|_| Error::Format(format!("{} is not UTF-8", path.display())))?
        };
        parse_arpa(&text)
    }
}

/// Parses ARPA text.
pub fn parse_arpa(text: &str) -> Result<NGramModel> {
    let err = |line: usize, message: String| Error::Arpa { line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    let mut declared: Vec<usize> = Vec::new();
    loop {
        match lines.next() {
            Some((_, "\\data\\")) => break,
            Some(_) => continue,
            None => return Err(err(0, "missing \\data\\ header".into())),
        }
    }
    let mut section = loop {
        let Some((ln, line)) = lines.next() else {
            return Err(err(0, "unexpected end of file in header".into()));
        };
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("ngram ") {
            let (n, c) = rest
                .split_once('=')
                .ok_or_else(|| err(ln, format!("malformed count line {line:?}")))?;
            let n: usize = n.trim().parse().map_err(|_| err(ln, format!("bad order in {line:?}")))?;
            let c: usize = c.trim().parse().map_err(|_| err(ln, format!("bad count in {line:?}")))?;
            if n != declared.len() + 1 {
                return Err(err(ln, format!("expected ngram {} count", declared.len() + 1)));
            }
            declared.push(c);
        } else if let Some(n) = section_header(line) {
            break (ln, n);
        } else {
            return Err(err(ln, format!("unexpected header line {line:?}")));
        }
    };
    let order = declared.len();
    if order == 0 {
        return Err(err(section.0, "no ngram counts declared".into()));
    }

    let mut model = NGramModel {
        order,
        counts: declared.clone(),
        words: Vec::new(),
        ids: HashMap::new(),
        tables: vec![HashMap::new(); order],
        unk: None,
    };
    let mut ended = false;
    'sections: loop {
        let (hdr_line, n) = section;
        if n == 0 || n > order {
            return Err(err(hdr_line, format!("section \\{n}-grams: not declared in header")));
        }
        let mut seen = 0usize;
        loop {
            let Some((ln, line)) = lines.next() else {
                check_count(n, seen, declared[n - 1], hdr_line)?;
                break 'sections;
            };
            if line.is_empty() {
                continue;
            }
            if line == "\\end\\" {
                check_count(n, seen, declared[n - 1], hdr_line)?;
                ended = true;
                break 'sections;
            }
            if let Some(next) = section_header(line) {
                check_count(n, seen, declared[n - 1], hdr_line)?;
                section = (ln, next);
                continue 'sections;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != n + 1 && fields.len() != n + 2 {
                return Err(err(ln, format!("expected {n}-gram entry, got {line:?}")));
            }
            let parse = |s: &str| -> Result<f64> {
                let v: f64 = s.parse().map_err(|_| err(ln, format!("bad number {s:?}")))?;
                if v.is_nan() || v == f64::INFINITY {
                    return Err(err(ln, format!("bad number {s:?}")));
                }
                Ok(v)
            };
            let log10_prob = parse(fields[0])?;
            if log10_prob > 0.0 {
                return Err(err(ln, format!("positive log probability {log10_prob}")));
            }
            let log10_backoff = if fields.len() == n + 2 { parse(fields[n + 1])? } else { 0.0 };
            let tokens = &fields[1..=n];
            let key: Vec<u32> = if n == 1 {
                let w = tokens[0];
                if model.ids.contains_key(w) {
                    return Err(err(ln, format!("duplicate unigram {w:?}")));
                }
                let id = model.words.len() as u32;
                model.ids.insert(w.to_string(), id);
                model.words.push(w.to_string());
                vec![id]
            } else {
                tokens
                    .iter()
                    .map(|t| {
                        model
                            .ids
                            .get(*t)
                            .copied()
                            .ok_or_else(|| err(ln, format!("word {t:?} missing from unigrams")))
                    })
                    .collect::<Result<_>>()?
            };
            if n > 1 && !model.tables[n - 2].contains_key(&key[..n - 1]) {
                return Err(err(ln, format!("context of {line:?} is not a listed {}-gram", n - 1)));
            }
            if model.tables[n - 1]
                .insert(key, Entry { log10_prob, log10_backoff })
                .is_some()
            {
                return Err(err(ln, format!("duplicate {n}-gram {line:?}")));
            }
            seen += 1;
        }
    }
    if !ended {
        return Err(err(text.lines().count(), "missing \\end\\ marker".into()));
    }
    for (n, &c) in declared.iter().enumerate() {
        if model.tables[n].len() != c {
            return Err(err(0, format!("{}-gram section missing: header declares {c}", n + 1)));
        }
    }
    model.unk = model.ids.get(UNK).copied();
    Ok(model)
}

fn section_header(line: &str) -> Option<usize> {
    line.strip_prefix('\\')?.strip_suffix("-grams:")?.parse().ok()
}

fn check_count(n: usize, seen: usize, declared: usize, line: usize) -> Result<()> {
    if seen != declared {
        return Err(Error::Arpa {
            line,
            message: format!("{n}-gram count mismatch: header declares {declared}, found {seen}"),
        });
    }
    Ok(())
}

#[cfg(test)]
pub(crate) const TOY_ARPA: &str = "\\data\\
ngram 1=5
ngram 2=4

\\1-grams:
-1.0 </s>
-99 <s> -0.3
-0.30103 a -0.2
-0.69897 b -0.1
-0.39794 c -0.25

\\2-grams:
-0.2 <s> a
-0.4 a b
-0.1 b </s>
-0.5 a c

\\end\\
";

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_10;

    fn toy() -> NGramModel {
        parse_arpa(TOY_ARPA).unwrap()
    }

    #[test]
    fn header_counts_and_order() {
        let m = toy();
        assert_eq!(m.order(), 2);
        assert_eq!(m.counts(), &[5, 4]);
        assert!(!m.has_unk());
    }

    #[test]
    fn three_unigram_two_bigram_model() {
        let text = "\\data\\\nngram 1=3\nngram 2=2\n\n\\1-grams:\n-0.5 <s> -0.1\n-0.5 x -0.1\n-0.5 </s>\n\n\\2-grams:\n-0.1 <s> x\n-0.2 x </s>\n\\end\\\n";
        let m = parse_arpa(text).unwrap();
        assert_eq!((m.order(), m.counts().to_vec()), (2, vec![3, 2]));
    }

    #[test]
    fn unigram_probability() {
        let m = toy();
        assert!((m.score_word::<&str>(&[], "a").exp() - 0.5).abs() < 1e-5);
    }

    #[test]
    fn listed_bigram_is_echoed() {
        assert!((toy().score_word(&["a"], "b") - (-0.4 * LN_10)).abs() < 1e-12);
    }

    #[test]
    fn backoff_arithmetic() {
        // b -> a is unlisted: backoff(b) + P(a) = -0.1 + -0.30103
        let got = toy().score_word(&["b"], "a");
        assert!((got - LN_10 * (-0.1 - 0.30103)).abs() < 1e-12);
        let text = "\\data\\\nngram 1=3\nngram 2=1\n\\1-grams:\n-1.0 x -0.2\n-1.0 y\n-1.0 <s>\n\\2-grams:\n-0.5 <s> x\n\\end\\\n";
        let m = parse_arpa(text).unwrap();
        assert!((m.score_word(&["x"], "y") - LN_10 * -1.2).abs() < 1e-12);
    }

    #[test]
    fn oov_without_unk_gets_floor() {
        assert_eq!(toy().score_word(&["a"], "zebra"), OOV_FLOOR_LN);
    }

    #[test]
    fn oov_with_unk_uses_unk() {
        let text = "\\data\\\nngram 1=2\n\\1-grams:\n-1.5 <unk>\n-0.1 x\n\\end\\\n";
        let m = parse_arpa(text).unwrap();
        assert!(m.has_unk());
        assert!((m.score_word::<&str>(&[], "zebra") - -1.5 * LN_10).abs() < 1e-12);
    }

    #[test]
    fn empty_sequence_scores_end_of_sentence() {
        let m = toy();
        assert_eq!(m.score_sequence::<&str>(&[]), m.score_word(&["<s>"], "</s>"));
    }

    #[test]
    fn sequence_is_hand_computed_chain() {
        let m = toy();
        // <s> a: listed -0.2; a b: listed -0.4; b </s>: listed -0.1
        let got = m.score_sequence(&["a", "b"]);
        assert!((got - LN_10 * (-0.2 - 0.4 - 0.1)).abs() < 1e-12);
        // <s> c: backoff(<s>) -0.3 + P(c) -0.39794; c </s>: backoff(c) -0.25 + P(</s>) -1.0
        let got = m.score_sequence(&["c"]);
        assert!((got - LN_10 * (-0.3 - 0.39794 - 0.25 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn sequence_equals_sum_of_word_scores() {
        let m = toy();
        let words = ["a", "c", "b", "b"];
        let mut ctx = vec!["<s>"];
        let mut sum = 0.0;
        for w in words.iter().chain(std::iter::once(&"</s>")) {
            sum += m.score_word(&ctx, w);
            ctx.push(w);
        }
        assert_eq!(m.score_sequence(&words), sum);
    }

    #[test]
    fn count_mismatch_names_order() {
        let bad = TOY_ARPA.replace("ngram 2=4", "ngram 2=5");
        match parse_arpa(&bad) {
            Err(Error::Arpa { message, .. }) => assert!(message.contains("2-gram"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let bad = TOY_ARPA.replace("-0.4 a b", "-0.4 a");
        match parse_arpa(&bad) {
            Err(Error::Arpa { line, .. }) => assert_eq!(line, 14),
            other => panic!("{other:?}"),
        }
        let bad = TOY_ARPA.replace("-0.4 a b", "oops a b");
        assert!(matches!(parse_arpa(&bad), Err(Error::Arpa { line: 14, .. })));
    }

    #[test]
    fn orphan_bigram_context_is_rejected() {
        let bad = TOY_ARPA.replace("-0.5 a c", "-0.5 q c");
        assert!(parse_arpa(&bad).is_err());
    }

    #[test]
    fn gzip_is_detected() {
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.arpa.gz");
        let mut enc = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(TOY_ARPA.as_bytes()).unwrap();
        std::fs::write(&path, enc.finish().unwrap()).unwrap();
        assert_eq!(NGramModel::load(&path).unwrap().counts(), &[5, 4]);
    }

    /// Closed-vocabulary bigram model whose backoff weights are solved so
    /// every context's distribution sums to one.
    fn normalized_model() -> String {
        let vocab = ["</s>", "x", "y", "z"];
        let uni = [0.1f64, 0.4, 0.3, 0.2];
        let listed: &[(&str, &str, f64)] = &[("<s>", "x", 0.6), ("x", "y", 0.5), ("y", "z", 0.7), ("x", "</s>", 0.2)];
        let mut out = String::from("\\data\\\nngram 1=5\nngram 2=4\n\\1-grams:\n");
        let ctxs = ["<s>", "x", "y", "z"];
        let mut backoff = std::collections::HashMap::new();
        for c in ctxs {
            let mass: f64 = listed.iter().filter(|l| l.0 == c).map(|l| l.2).sum();
            let covered: f64 = listed
                .iter()
                .filter(|l| l.0 == c)
                .map(|l| uni[vocab.iter().position(|v| *v == l.1).unwrap()])
                .sum();
            backoff.insert(c, ((1.0 - mass) / (1.0 - covered)).log10());
        }
        out.push_str(&format!("-99 <s> {}\n", backoff["<s>"]));
        for (w, p) in vocab.iter().zip(uni) {
            match backoff.get(w) {
                Some(b) => out.push_str(&format!("{} {w} {b}\n", p.log10())),
                None => out.push_str(&format!("{} {w}\n", p.log10())),
            }
        }
        out.push_str("\\2-grams:\n");
        for (c, w, p) in listed {
            out.push_str(&format!("{} {c} {w}\n", p.log10()));
        }
        out.push_str("\\end\\\n");
        out
    }

    #[test]
    fn distributions_normalize() {
        let m = parse_arpa(&normalized_model()).unwrap();
        for ctx in ["<s>", "x", "y", "z"] {
            let total: f64 = ["</s>", "x", "y", "z"]
                .iter()
                .map(|w| m.score_word(&[ctx], w).exp())
                .sum();
            assert!((0.99..=1.01).contains(&total), "{ctx}: {total}");
        }
    }

    proptest::proptest! {
        #[test]
        fn sequence_score_is_additive(
            a in proptest::collection::vec(0usize..3, 0..5),
            b in proptest::collection::vec(0usize..3, 1..5),
        ) {
            // For a bigram model the split point carries one word of context.
            let m = toy();
            let names = ["a", "b", "c"];
            let a: Vec<&str> = a.iter().map(|&i| names[i]).collect();
            let b: Vec<&str> = b.iter().map(|&i| names[i]).collect();
            let whole: Vec<&str> = a.iter().chain(&b).copied().collect();
            let mut ctx = vec!["<s>"];
            ctx.extend(&a);
            let mut tail = 0.0;
            for w in b.iter().chain(std::iter::once(&"</s>")) {
                tail += m.score_word(&ctx, w);
                ctx.push(w);
            }
            let head = m.score_sequence(&a) - m.score_word(&[*a.last().unwrap_or(&"<s>")], "</s>");
            proptest::prop_assert!((m.score_sequence(&whole) - (head + tail)).abs() < 1e-9);
        }
    }
}
