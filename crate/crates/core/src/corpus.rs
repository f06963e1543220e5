//! Corpus CSV reading and writing.
//!
//! The default header is `id,text,harassment,IndirectH,PhysicalH,SexualH,split`
//! with an optional trailing `provenance` column. Other layouts are read
//! through a [`ColumnMap`].

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::dataset::{Category, Dataset, Example, LabelVector, Split};
use crate::error::{Error, Result};

/// Header names of the logical corpus fields.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnMap {
    pub id: String,
    pub text: String,
    pub harassment: String,
    pub indirect: String,
    pub sexual: String,
    pub physical: String,
    pub split: String,
    pub provenance: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            id: "id".into(),
            text: "text".into(),
            harassment: Category::Harassment.column().into(),
            indirect: Category::Indirect.column().into(),
            sexual: Category::Sexual.column().into(),
            physical: Category::Physical.column().into(),
            split: "split".into(),
            provenance: "provenance".into(),
        }
    }
}

impl ColumnMap {
    fn label(&self, c: Category) -> &str {
        match c {
            Category::Harassment => &self.harassment,
            Category::Indirect => &self.indirect,
            Category::Sexual => &self.sexual,
            Category::Physical => &self.physical,
        }
    }
}

/// Parses `field=header` pairs separated by commas, e.g.
/// `text=tweet,harassment=label`.
impl FromStr for ColumnMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut map = ColumnMap::default();
        for pair in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (field, header) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("column mapping '{pair}' is not field=header")))?;
            let header = header.trim().to_string();
            let slot = match field.trim() {
                "id" => &mut map.id,
                "text" => &mut map.text,
                "harassment" => &mut map.harassment,
                "indirect" | "IndirectH" => &mut map.indirect,
                "sexual" | "SexualH" => &mut map.sexual,
                "physical" | "PhysicalH" => &mut map.physical,
                "split" => &mut map.split,
                "provenance" => &mut map.provenance,
                other => return Err(Error::Config(format!("unknown corpus field '{other}'"))),
            };
            *slot = header;
        }
        Ok(map)
    }
}

fn parse_label(raw: &str) -> Option<bool> {
    match raw.trim() {
        "1" | "1.0" | "true" | "True" | "TRUE" => Some(true),
        "0" | "0.0" | "false" | "False" | "FALSE" | "" => Some(false),
        _ => None,
    }
}

/// Reads a labeled corpus. Every row needs an id, text, the four labels and a
/// split; ill-formed label combinations are logged but kept.
pub fn read_corpus<R: Read>(reader: R, origin: &Path, columns: &ColumnMap) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h.trim(), i)).collect();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.display().to_string(),
        line,
        message,
    };
    let col = |name: &str| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| parse_err(1, format!("missing column '{name}'")))
    };
    let id_col = col(&columns.id)?;
    let text_col = col(&columns.text)?;
    let split_col = col(&columns.split)?;
    let mut label_cols = [0; 4];
    for c in Category::ALL {
        label_cols[c.index()] = col(columns.label(c))?;
    }
    let prov_col = index.get(columns.provenance.as_str()).copied();

    let mut examples = Vec::new();
    let mut ill_formed = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| record.get(i).unwrap_or("");
        let mut labels = LabelVector::default();
        for (c, &i) in Category::ALL.iter().zip(&label_cols) {
            let v = parse_label(field(i))
                .ok_or_else(|| parse_err(line, format!("label {} must be 0 or 1, got '{}'", c.column(), field(i))))?;
            labels.set(*c, v);
        }
        if !labels.is_well_formed() {
            ill_formed += 1;
            log::debug!("row {line}: ill-formed label combination {:?}", labels.as_array());
        }
        let split = Split::from_str(field(split_col)).map_err(|e| parse_err(line, e.to_string()))?;
        let id = field(id_col).to_string();
        if id.is_empty() {
            return Err(parse_err(line, "empty id".into()));
        }
        let provenance = prov_col.map(field).filter(|p| !p.is_empty()).map(str::to_string);
        examples.push(Example {
            id,
            text: field(text_col).to_string(),
            labels,
            split,
            provenance,
        });
    }
    if ill_formed > 0 {
        log::warn!(
            "{}: {ill_formed} rows have a label combination other than none or harassment plus one type",
            origin.display()
        );
    }
    Ok(Dataset::new(examples))
}

pub fn load_corpus(path: &Path, columns: &ColumnMap) -> Result<Dataset> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(std::io::BufReader::new(file), path, columns)
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Writes the default layout. The provenance column is emitted only when some
/// example has one; `extra` appends named columns computed per example.
pub fn write_corpus<W: Write>(
    writer: W,
    dataset: &Dataset,
    extra: &[(&str, &dyn Fn(&Example) -> String)],
) -> Result<()> {
    let with_prov = dataset.examples.iter().any(|e| e.provenance.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id", "text", "harassment", "IndirectH", "PhysicalH", "SexualH", "split"];
    if with_prov {
        header.push("provenance");
    }
    header.extend(extra.iter().map(|(name, _)| *name));
    w.write_record(&header)?;
    for e in &dataset.examples {
        let mut row = vec![
            e.id.clone(),
            e.text.clone(),
            flag(e.labels.harassment).into(),
            flag(e.labels.indirect).into(),
            flag(e.labels.physical).into(),
            flag(e.labels.sexual).into(),
            e.split.name().into(),
        ];
        if with_prov {
            row.push(e.provenance.clone().unwrap_or_default());
        }
        row.extend(extra.iter().map(|(_, f)| f(e)));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(Path::new("<csv>"), e))?;
    Ok(())
}

pub fn save_corpus(path: &Path, dataset: &Dataset) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_corpus(std::io::BufWriter::new(file), dataset, &[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn read(s: &str) -> Result<Dataset> {
        read_corpus(s.as_bytes(), Path::new("mem.csv"), &ColumnMap::default())
    }

    const SAMPLE: &str = "id,text,harassment,IndirectH,PhysicalH,SexualH,split\n\
        1,\"hello, world\",0,0,0,0,train\n\
        2,you are vile,1,1,0,0,val\n\
        3,\"she said \"\"hi\"\"\",1,0,0,1,test\n";

    #[test]
    fn reads_default_layout() {
        let d = read(SAMPLE).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.examples[0].text, "hello, world");
        assert_eq!(d.examples[1].split, Split::Validation);
        assert!(d.examples[1].labels.indirect);
        assert!(d.examples[2].labels.sexual && !d.examples[2].labels.physical);
        assert_eq!(d.examples[2].text, "she said \"hi\"");
    }

    #[test]
    fn errors_carry_row_numbers() {
        let bad = "id,text,harassment,IndirectH,PhysicalH,SexualH,split\n1,a,0,0,0,0,train\n2,b,2,0,0,0,train\n";
        match read(bad) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("harassment"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let split = "id,text,harassment,IndirectH,PhysicalH,SexualH,split\n1,a,0,0,0,0,holdout\n";
        assert!(matches!(read(split), Err(Error::Parse { line: 2, .. })));
        let missing = "id,text,harassment,split\n";
        assert!(matches!(read(missing), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn column_map_renames_fields() {
        let map: ColumnMap = "text=tweet,harassment=label".parse().unwrap();
        let src = "tweet,id,label,IndirectH,PhysicalH,SexualH,split\nhey,7,1,0,1,0,train\n";
        let d = read_corpus(src.as_bytes(), Path::new("x"), &map).unwrap();
        assert_eq!(d.examples[0].id, "7");
        assert!(d.examples[0].labels.physical);
        assert!("bogus=x".parse::<ColumnMap>().is_err());
        assert!("text".parse::<ColumnMap>().is_err());
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_corpus(Path::new("/nonexistent/c.csv"), &ColumnMap::default()),
            Err(Error::MissingPath(_))
        ));
    }

    fn arb_example() -> impl Strategy<Value = Example> {
        (
            "[a-z0-9]{1,8}",
            "[ -~\u{e9}\u{1f600}\n]{0,40}",
            any::<[bool; 4]>(),
            0..3usize,
            proptest::option::of("[a-z:]{1,12}"),
        )
            .prop_map(|(id, text, l, s, provenance)| Example {
                id,
                text,
                labels: LabelVector::new(l[0], l[1], l[2], l[3]),
                split: Split::ALL[s],
                provenance,
            })
    }

    proptest! {
        #[test]
        fn write_read_round_trip(examples in proptest::collection::vec(arb_example(), 0..20)) {
            let d = Dataset::new(examples);
            let mut buf = Vec::new();
            write_corpus(&mut buf, &d, &[]).unwrap();
            let back = read_corpus(buf.as_slice(), Path::new("mem"), &ColumnMap::default()).unwrap();
            prop_assert_eq!(back, d);
        }
    }
}
