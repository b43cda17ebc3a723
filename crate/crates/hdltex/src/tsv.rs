//! Three-column TSV (`parent<TAB>child<TAB>text`) and the WOS release layout.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use hdltex_core::corpus::Dataset;

use crate::error::{Error, Result};

/// Reads a dataset. Blank lines and lines starting with `#` are skipped;
/// document ids follow the order of the remaining lines.
pub fn parse_tsv(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tsv_str(path, &text)
}

/// Parses TSV content. `path` only labels error messages.
pub fn parse_tsv_str(path: &Path, text: &str) -> Result<Dataset> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let (Some(parent), Some(child), Some(body)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::parse(path, lineno, "expected 3 tab-separated fields"));
        };
        if parent.is_empty() || child.is_empty() {
            return Err(Error::parse(path, lineno, "empty label"));
        }
        records.push((parent.to_string(), child.to_string(), body.to_string(), lineno));
    }
    let lines: Vec<usize> = records.iter().map(|r| r.3).collect();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::from_records(&name, records.into_iter().map(|(p, c, t, _)| (p, c, t))).map_err(|e| match e {
        hdltex_core::Error::EmptyDocument { id } => Error::parse(path, lines[id], "text is empty after cleaning"),
        source => Error::Data {
            path: path.to_path_buf(),
            source,
        },
    })
}

/// Writes `parent<TAB>child<TAB>text` lines. Tabs and newlines inside the
/// text become spaces so the file parses back to the same records.
pub fn write_tsv(path: &Path, ds: &Dataset) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for d in &ds.documents {
        let text: String = d
            .text
            .chars()
            .map(|c| if matches!(c, '\t' | '\n' | '\r') { ' ' } else { c })
            .collect();
        writeln!(out, "{}\t{}\t{}", d.parent_label, d.child_label, text).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Names for the integer codes of a WOS release.
///
/// File format, one entry per line, tab separated:
/// `parent<TAB>yl1<TAB>name` names a domain and
/// `child<TAB>yl1<TAB>yl2<TAB>name` names an area inside it.
/// Codes without an entry fall back to `domain{yl1}` and `area{yl1}_{yl2}`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelMap {
    pub parents: BTreeMap<u32, String>,
    pub children: BTreeMap<(u32, u32), String>,
}

impl LabelMap {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut map = LabelMap::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let code = |s: &str| {
                s.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::parse(path, i + 1, format!("bad label code {s:?}")))
            };
            match fields.as_slice() {
                ["parent", a, name] => {
                    map.parents.insert(code(a)?, name.to_string());
                }
                ["child", a, b, name] => {
                    map.children.insert((code(a)?, code(b)?), name.to_string());
                }
                _ => return Err(Error::parse(path, i + 1, "expected `parent` or `child` entry")),
            }
        }
        Ok(map)
    }

    pub fn parent(&self, yl1: u32) -> String {
        self.parents.get(&yl1).cloned().unwrap_or_else(|| format!("domain{yl1}"))
    }

    pub fn child(&self, yl1: u32, yl2: u32) -> String {
        self.children
            .get(&(yl1, yl2))
            .cloned()
            .unwrap_or_else(|| format!("area{yl1}_{yl2}"))
    }
}

fn read_codes(path: &Path) -> Result<Vec<u32>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("bad label code {:?}", l.trim())))
        })
        .collect()
}

/// Reads `X.txt`, `YL1.txt` and `YL2.txt` from `dir`. `YL2` codes are
/// local to their domain, as in the public release.
pub fn read_wos(dir: &Path, map: &LabelMap) -> Result<Dataset> {
    let x = dir.join("X.txt");
    let docs = fs::read_to_string(&x).map_err(|e| Error::io(&x, e))?;
    let docs: Vec<&str> = docs.lines().filter(|l| !l.trim().is_empty()).collect();
    let yl1 = read_codes(&dir.join("YL1.txt"))?;
    let yl2 = read_codes(&dir.join("YL2.txt"))?;
    if yl1.len() != docs.len() || yl2.len() != docs.len() {
        return Err(Error::parse(
            &x,
            0,
            format!("{} documents but {} YL1 and {} YL2 codes", docs.len(), yl1.len(), yl2.len()),
        ));
    }
    let records = docs
        .iter()
        .zip(yl1.iter().zip(&yl2))
        .map(|(text, (&a, &b))| (map.parent(a), map.child(a, b), text.to_string()));
    Dataset::from_records(&dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(), records)
        .map_err(|source| Error::Data { path: x.clone(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let ds = parse_tsv_str(Path::new("t.tsv"), "A\ta1\thello\nA\ta2\tworld\n").unwrap();
        assert_eq!(ds.labels.parents, ["A"]);
        assert_eq!(ds.labels.children("A"), ["a1", "a2"]);
        assert_eq!(ds.documents[1].id, 1);
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let ds = parse_tsv_str(Path::new("t.tsv"), "# header\n\nA\ta1\tx\tand tab\n").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.documents[0].text, "x\tand tab");
    }

    #[test]
    fn malformed_line_reports_number() {
        let err = parse_tsv_str(Path::new("t.tsv"), "A\ta1\tok\nbroken line\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn empty_file() {
        let err = parse_tsv_str(Path::new("t.tsv"), "").unwrap_err();
        assert!(err.to_string().contains("no documents"));
    }

    #[test]
    fn child_under_two_parents() {
        let err = parse_tsv_str(Path::new("t.tsv"), "A\tx\tone\nB\tx\ttwo\n").unwrap_err();
        assert!(matches!(err, Error::Data { source: hdltex_core::Error::InconsistentChild { .. }, .. }));
    }

    #[test]
    fn empty_text_names_line() {
        let err = parse_tsv_str(Path::new("t.tsv"), "A\ta\tfine\nA\ta\t!!!\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn label_map_fallbacks() {
        let mut map = LabelMap::default();
        map.parents.insert(0, "CS".into());
        assert_eq!(map.parent(0), "CS");
        assert_eq!(map.parent(3), "domain3");
        assert_eq!(map.child(1, 2), "area1_2");
    }
}
