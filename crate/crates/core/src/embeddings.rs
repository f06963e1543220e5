//! Vocabulary, pre-trained vector ingestion and index encoding.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndmath::{Rng, Tensor};

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;
/// Width of the Twitter-trained vectors.
pub const DEFAULT_DIM: usize = 200;
pub const DEFAULT_MAX_LEN: usize = 70;
/// Range of the uniform init given to tokens missing from the vector file.
pub const OOV_INIT_RANGE: f64 = 0.05;

/// Token ↔ index map. Index 0 is PAD and index 1 is UNK.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    index_to_token: Vec<String>,
    token_to_index: HashMap<String, usize>,
}

impl Default for Vocab {
    fn default() -> Self {
        Self::from_tokens(Vec::<String>::new()).expect("empty vocab is valid")
    }
}

impl Vocab {
    /// Builds a vocab from the non-special tokens in index order (from 2 up).
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut index_to_token = vec![PAD.to_string(), UNK.to_string()];
        index_to_token.extend(tokens.into_iter().map(Into::into));
        let mut token_to_index = HashMap::with_capacity(index_to_token.len());
        for (i, t) in index_to_token.iter().enumerate() {
            if token_to_index.insert(t.clone(), i).is_some() {
                return Err(Error::Input(format!("duplicate vocabulary token '{t}'")));
            }
        }
        Ok(Self {
            index_to_token,
            token_to_index,
        })
    }

    pub fn len(&self) -> usize {
        self.index_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, token: &str) -> Option<usize> {
        self.token_to_index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.index_to_token.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.index_to_token
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
        for t in &self.index_to_token {
            writeln!(f, "{t}").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let lines: Vec<String> = BufReader::new(f)
            .lines()
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::io(path, e))?;
        Self::try_from(lines)
    }
}

impl TryFrom<Vec<String>> for Vocab {
    type Error = Error;

    fn try_from(all: Vec<String>) -> Result<Self> {
        if all.len() < 2 || all[PAD_INDEX] != PAD || all[UNK_INDEX] != UNK {
            return Err(Error::Input(format!("vocabulary must start with {PAD} and {UNK}")));
        }
        Vocab::from_tokens(all.into_iter().skip(2))
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.index_to_token
    }
}

/// Tokens with frequency ≥ `min_freq`, ordered by frequency descending then
/// token ascending, after PAD and UNK.
pub fn build_vocab<S: AsRef<str>>(corpus: &[Vec<S>], min_freq: usize) -> Result<Vocab> {
    if min_freq == 0 {
        return Err(Error::Config("min_freq must be at least 1".into()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for seq in corpus {
        for t in seq {
            let t = t.as_ref();
            if t != PAD && t != UNK {
                *counts.entry(t).or_default() += 1;
            }
        }
    }
    let mut kept: Vec<(&str, usize)> = counts.into_iter().filter(|&(_, n)| n >= min_freq).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Vocab::from_tokens(kept.into_iter().map(|(t, _)| t.to_string()))
}

/// `|V| × d` embedding rows together with the vocabulary they index.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    pub vocab: Vocab,
    pub matrix: Tensor,
    /// Non-special vocabulary tokens whose vector came from the file.
    pub found: usize,
}

impl EmbeddingMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    /// Share of non-special vocabulary tokens that had a pre-trained vector.
    pub fn coverage(&self) -> f64 {
        let candidates = self.vocab.len() - 2;
        if candidates == 0 {
            0.0
        } else {
            self.found as f64 / candidates as f64
        }
    }

    /// Every row drawn from the OOV init, PAD zeroed.
    pub fn random(vocab: Vocab, dim: usize, rng: &mut Rng) -> Self {
        let mut matrix = Tensor::zeros(&[vocab.len(), dim]);
        for row in 1..vocab.len() {
            for v in matrix.row_mut(row) {
                *v = rng.uniform(-OOV_INIT_RANGE, OOV_INIT_RANGE);
            }
        }
        Self {
            vocab,
            matrix,
            found: 0,
        }
    }
}

/// Reads `token v1 … vd` lines. Tokens of `vocab` found in the file take
/// their file vector; the rest get a seeded uniform(−0.05, 0.05) init and PAD
/// is zero.
pub fn load_embeddings(path: &Path, vocab: &Vocab, dim: usize, rng: &mut Rng) -> Result<EmbeddingMatrix> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let display = path.display().to_string();
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; vocab.len()];
    let mut file_dim: Option<usize> = None;
    for (lineno, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line_no = lineno + 1;
        let mut fields = line.split_ascii_whitespace();
        let Some(token) = fields.next() else {
            continue;
        };
        let values: Vec<&str> = fields.collect();
        match file_dim {
            None => {
                if values.len() != dim {
                    return Err(Error::Dimension {
                        expected: dim,
                        found: values.len(),
                        context: format!("{display}:{line_no}"),
                    });
                }
                file_dim = Some(values.len());
            }
            Some(d) if d != values.len() => {
                return Err(Error::Parse {
                    path: display,
                    line: line_no,
                    message: format!("expected {d} values, found {}", values.len()),
                });
            }
            Some(_) => {}
        }
        let parsed = values
            .iter()
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| Error::Parse {
                path: display.clone(),
                line: line_no,
                message: "non-numeric vector component".into(),
            })?;
        if let Some(i) = vocab.index(token) {
            if i != PAD_INDEX && rows[i].is_none() {
                rows[i] = Some(parsed);
            }
        }
    }
    let mut matrix = Tensor::zeros(&[vocab.len(), dim]);
    let mut found = 0;
    for (i, row) in rows.into_iter().enumerate() {
        if i == PAD_INDEX {
            continue;
        }
        // Draw for every row so OOV values do not depend on file coverage.
        let draws: Vec<f64> = (0..dim).map(|_| rng.uniform(-OOV_INIT_RANGE, OOV_INIT_RANGE)).collect();
        let dst = matrix.row_mut(i);
        match row {
            Some(v) => {
                dst.copy_from_slice(&v);
                if i != UNK_INDEX {
                    found += 1;
                }
            }
            None => dst.copy_from_slice(&draws),
        }
    }
    Ok(EmbeddingMatrix {
        vocab: vocab.clone(),
        matrix,
        found,
    })
}

/// Maps tokens to indices (UNK for unknown), keeping at most `max_len` from
/// the head. An empty input encodes as `[UNK]`.
pub fn encode<S: AsRef<str>>(tokens: &[S], vocab: &Vocab, max_len: usize) -> Vec<usize> {
    let max_len = max_len.max(1);
    let ids: Vec<usize> = tokens
        .iter()
        .take(max_len)
        .map(|t| vocab.index(t.as_ref()).unwrap_or(UNK_INDEX))
        .collect();
    if ids.is_empty() {
        vec![UNK_INDEX]
    } else {
        ids
    }
}

pub fn decode(ids: &[usize], vocab: &Vocab) -> Vec<String> {
    ids.iter().map(|&i| vocab.token(i).unwrap_or(UNK).to_string()).collect()
}

/// Number of distinct non-special vocabulary tokens present in `file_tokens`.
pub fn intersection_count<'a>(vocab: &Vocab, file_tokens: impl IntoIterator<Item = &'a str>) -> usize {
    let file: HashSet<&str> = file_tokens.into_iter().collect();
    vocab.tokens()[2..].iter().filter(|t| file.contains(t.as_str())).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndmath::Rng;
    use proptest::prelude::*;

    fn corpus(seqs: &[&[&str]]) -> Vec<Vec<String>> {
        seqs.iter().map(|s| s.iter().map(|t| t.to_string()).collect()).collect()
    }

    #[test]
    fn build_vocab_examples() {
        let c = corpus(&[&["a", "b"], &["a"]]);
        let v = build_vocab(&c, 1).unwrap();
        assert_eq!(v.tokens(), [PAD, UNK, "a", "b"]);
        let v = build_vocab(&c, 2).unwrap();
        assert_eq!(v.tokens(), [PAD, UNK, "a"]);
        let c = corpus(&[&["c", "b", "c", "b", "a", "a", "a"]]);
        assert_eq!(build_vocab(&c, 1).unwrap().tokens(), [PAD, UNK, "a", "b", "c"]);
        let empty: Vec<Vec<String>> = vec![];
        assert_eq!(build_vocab(&empty, 1).unwrap().len(), 2);
        assert!(build_vocab(&empty, 0).is_err());
    }

    #[test]
    fn encode_examples() {
        let v = build_vocab(&corpus(&[&["a", "b"], &["a"]]), 1).unwrap();
        assert_eq!(encode(&["a", "b"], &v, 70), [2, 3]);
        assert_eq!(encode(&["z"], &v, 70), [UNK_INDEX]);
        let long: Vec<&str> = (0..100).map(|i| if i % 2 == 0 { "a" } else { "b" }).collect();
        let ids = encode(&long, &v, 70);
        assert_eq!(ids.len(), 70);
        assert_eq!(ids, encode(&long[..70], &v, 70));
        let none: [&str; 0] = [];
        assert_eq!(encode(&none, &v, 70), [UNK_INDEX]);
    }

    fn write_file(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn load_embeddings_pass_through_oov_and_pad() {
        let dir = tempfile::tempdir().unwrap();
        let vals: Vec<String> = (0..200).map(|i| format!("{}", i as f64 / 1000.0)).collect();
        let body = format!("a {}\nzzz {}\n", vals.join(" "), vals.join(" "));
        let p = write_file(&dir, "e.txt", &body);
        let v = Vocab::from_tokens(["a", "b"]).unwrap();
        let e = load_embeddings(&p, &v, 200, &mut Rng::new(1)).unwrap();
        let expect: Vec<f64> = (0..200).map(|i| i as f64 / 1000.0).collect();
        assert_eq!(e.matrix.row(2), expect.as_slice());
        assert!(e.matrix.row(3).iter().all(|x| x.abs() <= 0.05));
        assert!(e.matrix.row(PAD_INDEX).iter().all(|&x| x == 0.0));
        assert_eq!(e.found, 1);
        assert_eq!(e.coverage(), 0.5);
        let again = load_embeddings(&p, &v, 200, &mut Rng::new(1)).unwrap();
        assert_eq!(e, again);
        assert_eq!(intersection_count(&v, ["a", "zzz"]), e.found);
    }

    #[test]
    fn load_embeddings_errors() {
        let dir = tempfile::tempdir().unwrap();
        let v = Vocab::from_tokens(["a"]).unwrap();
        let p = write_file(&dir, "d.txt", "a 1 2 3\n");
        let err = load_embeddings(&p, &v, 4, &mut Rng::new(0)).unwrap_err();
        assert!(matches!(
            err,
            Error::Dimension {
                expected: 4,
                found: 3,
                ..
            }
        ));
        let p = write_file(&dir, "arity.txt", "a 1 2\nb 1 2 3\n");
        let err = load_embeddings(&p, &v, 2, &mut Rng::new(0)).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let p = write_file(&dir, "nan.txt", "a 1 2\nb 1 x\n");
        let err = load_embeddings(&p, &v, 2, &mut Rng::new(0)).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let missing = dir.path().join("nope.txt");
        assert!(matches!(
            load_embeddings(&missing, &v, 2, &mut Rng::new(0)),
            Err(Error::MissingPath(_))
        ));
    }

    #[test]
    fn vocab_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let v = Vocab::from_tokens(["x", "y", "!"]).unwrap();
        let p = dir.path().join("vocab.txt");
        v.save(&p).unwrap();
        assert_eq!(Vocab::load(&p).unwrap(), v);
        std::fs::write(&p, "x\ny\n").unwrap();
        assert!(Vocab::load(&p).is_err());
    }

    proptest! {
        #[test]
        fn decode_encode_keeps_in_vocab_tokens(
            seqs in proptest::collection::vec(
                proptest::collection::vec("[a-f]{1,3}", 0..8), 1..6),
            min_freq in 1usize..3,
        ) {
            let v = build_vocab(&seqs, min_freq).unwrap();
            for s in &seqs {
                let ids = encode(s, &v, 70);
                let back = decode(&ids, &v);
                if s.is_empty() {
                    prop_assert_eq!(back, vec![UNK.to_string()]);
                    continue;
                }
                for (orig, dec) in s.iter().zip(&back) {
                    if v.index(orig).is_some() {
                        prop_assert_eq!(orig, dec);
                    } else {
                        prop_assert_eq!(dec.as_str(), UNK);
                    }
                }
            }
        }
    }
}
