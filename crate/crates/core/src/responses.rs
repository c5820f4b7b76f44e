//! Response data: raw Likert codes, key-corrected scores and the transforms between them.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::questionnaire::{Key, LikertScale, Questionnaire};

/// One raw answer; `None` is a missing answer or non-response.
pub type Code = Option<u8>;

/// Respondents × items matrix of raw answer codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseMatrix {
    pub respondents: Vec<String>,
    pub item_ids: Vec<String>,
    /// Row-major, `respondents.len()` rows of `item_ids.len()` entries.
    pub scores: Vec<Vec<Code>>,
    pub provenance: String,
}

impl ResponseMatrix {
    /// Builds a matrix after checking shape, scale range and item order against `q`.
    pub fn new(
        q: &Questionnaire,
        respondents: Vec<String>,
        item_ids: Vec<String>,
        scores: Vec<Vec<Code>>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let m = ResponseMatrix {
            respondents,
            item_ids,
            scores,
            provenance: provenance.into(),
        };
        m.validate(q)?;
        Ok(m)
    }

    pub fn validate(&self, q: &Questionnaire) -> Result<()> {
        if self.scores.len() != self.respondents.len() {
            return Err(Error::Data(format!(
                "{} respondent ids for {} rows",
                self.respondents.len(),
                self.scores.len()
            )));
        }
        let index = q.index_map();
        let mut last = None;
        for id in &self.item_ids {
            let pos = *index
                .get(id.as_str())
                .ok_or_else(|| Error::Data(format!("item `{id}` not in questionnaire {}", q.name)))?;
            if last.is_some_and(|l| pos <= l) {
                return Err(Error::Data(format!("item `{id}` out of questionnaire order")));
            }
            last = Some(pos);
        }
        for (r, row) in self.scores.iter().enumerate() {
            if row.len() != self.item_ids.len() {
                return Err(Error::Data(format!("row {r} has {} entries, expected {}", row.len(), self.item_ids.len())));
            }
            for code in row.iter().flatten() {
                if !q.scale.contains(*code as i64) {
                    return Err(Error::Domain(format!("code {code} outside scale in row {r}")));
                }
            }
        }
        Ok(())
    }

    pub fn n_respondents(&self) -> usize {
        self.respondents.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = Code> + '_ {
        self.scores.iter().map(move |row| row[j])
    }

    pub fn item_position(&self, id: &str) -> Option<usize> {
        self.item_ids.iter().position(|i| i == id)
    }

    /// Keeps only the listed columns, in their current order.
    pub fn select_items(&self, keep: &[usize]) -> ResponseMatrix {
        ResponseMatrix {
            respondents: self.respondents.clone(),
            item_ids: keep.iter().map(|&j| self.item_ids[j].clone()).collect(),
            scores: self.scores.iter().map(|row| keep.iter().map(|&j| row[j]).collect()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Raw codes as reals with missing entries replaced by the neutral code. No key flipping.
    pub fn imputed(&self, scale: &LikertScale) -> DMatrix<f64> {
        let neutral = scale.neutral_code as f64;
        DMatrix::from_fn(self.n_respondents(), self.n_items(), |i, j| {
            self.scores[i][j].map(f64::from).unwrap_or(neutral)
        })
    }

    /// Writes the matrix as CSV. `header_lines` are emitted first, each prefixed with `# `.
    pub fn write_csv<W: Write>(&self, mut out: W, header_lines: &[String]) -> Result<()> {
        for line in header_lines {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["respondent".to_string()];
        header.extend(self.item_ids.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in self.respondents.iter().zip(&self.scores) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Key-corrected scores on a single common scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredMatrix {
    pub respondents: Vec<String>,
    pub item_ids: Vec<String>,
    pub values: DMatrix<f64>,
}

impl ScoredMatrix {
    pub fn item_position(&self, id: &str) -> Option<usize> {
        self.item_ids.iter().position(|i| i == id)
    }

    pub fn column_of(&self, id: &str) -> Option<Vec<f64>> {
        self.item_position(id).map(|j| self.values.column(j).iter().copied().collect())
    }

    /// Sub-matrix of the listed item ids (in the given order).
    pub fn columns(&self, ids: &[&str]) -> Result<DMatrix<f64>> {
        let idx = ids
            .iter()
            .map(|id| self.item_position(id).ok_or_else(|| Error::Data(format!("item `{id}` not in scored matrix"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.values.select_columns(&idx))
    }
}

/// Reverse-scores false-key items with `(max + min) - raw`; true-key items pass through.
pub fn flip_score(raw: i64, key: Key, scale: &LikertScale) -> Result<f64> {
    if !scale.contains(raw) {
        return Err(Error::Domain(format!(
            "code {raw} outside scale {}..={}",
            scale.min_code(),
            scale.max_code()
        )));
    }
    Ok(match key {
        Key::True => raw as f64,
        Key::False => (scale.max_code() as i64 + scale.min_code() as i64 - raw) as f64,
    })
}

/// Imputes the neutral code for missing entries, then key-corrects every entry.
pub fn score_matrix(responses: &ResponseMatrix, q: &Questionnaire) -> Result<ScoredMatrix> {
    let index = q.index_map();
    let keys = responses
        .item_ids
        .iter()
        .map(|id| {
            index
                .get(id.as_str())
                .map(|&i| q.items[i].key)
                .ok_or_else(|| Error::Data(format!("item `{id}` not in questionnaire {}", q.name)))
        })
        .collect::<Result<Vec<_>>>()?;
    let neutral = q.scale.neutral_code as i64;
    let mut values = DMatrix::zeros(responses.n_respondents(), responses.n_items());
    for (i, row) in responses.scores.iter().enumerate() {
        for (j, code) in row.iter().enumerate() {
            let raw = code.map(i64::from).unwrap_or(neutral);
            values[(i, j)] = flip_score(raw, keys[j], &q.scale)?;
        }
    }
    Ok(ScoredMatrix {
        respondents: responses.respondents.clone(),
        item_ids: responses.item_ids.clone(),
        values,
    })
}

/// Per-respondent sum of key-corrected scores over the facet's items present in `scored`.
pub fn facet_sum_score(scored: &ScoredMatrix, q: &Questionnaire, facet: &str) -> Result<Vec<f64>> {
    if q.facet(facet).is_none() {
        return Err(Error::Structural(format!("unknown facet `{facet}`")));
    }
    let cols: Vec<usize> = q
        .facet_items(facet)
        .iter()
        .filter_map(|it| scored.item_position(&it.id))
        .collect();
    Ok((0..scored.values.nrows())
        .map(|r| cols.iter().map(|&c| scored.values[(r, c)]).sum())
        .collect())
}

/// Centers each column and scales it to unit sample standard deviation (n - 1).
pub fn standardize(matrix: &DMatrix<f64>, names: &[String]) -> Result<DMatrix<f64>> {
    let n = matrix.nrows();
    if n < 2 {
        return Err(Error::Data("standardization needs at least two rows".into()));
    }
    let mut out = matrix.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let mean = col.mean();
        let ss: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
        let sd = (ss / (n - 1) as f64).sqrt();
        if sd <= f64::EPSILON * mean.abs().max(1.0) {
            let item = names.get(j).cloned().unwrap_or_else(|| format!("column {j}"));
            return Err(Error::ZeroVariance { item });
        }
        col.apply(|v| *v = (*v - mean) / sd);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroVarianceDrop {
    pub matrix: ResponseMatrix,
    pub dropped: Vec<String>,
    /// Structural warnings, e.g. facets left with fewer than three items.
    pub warnings: Vec<String>,
}

/// Removes items whose non-missing answers are all equal (or that have no answers).
pub fn drop_zero_variance_items(responses: &ResponseMatrix, q: &Questionnaire) -> ZeroVarianceDrop {
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..responses.n_items() {
        let mut values = responses.column(j).flatten();
        let constant = match values.next() {
            None => true,
            Some(first) => values.all(|v| v == first),
        };
        if constant {
            dropped.push(responses.item_ids[j].clone());
        } else {
            keep.push(j);
        }
    }
    let matrix = responses.select_items(&keep);
    let mut warnings = Vec::new();
    if keep.is_empty() && responses.n_items() > 0 {
        warnings.push("all items have zero variance; nothing left to analyze".to_string());
    }
    let remaining: HashSet<&str> = matrix.item_ids.iter().map(String::as_str).collect();
    let present: HashSet<&str> = responses.item_ids.iter().map(String::as_str).collect();
    for facet in &q.facets {
        let before = q.facet_items(&facet.id).iter().filter(|i| present.contains(i.id.as_str())).count();
        if before == 0 {
            continue;
        }
        let after = q.facet_items(&facet.id).iter().filter(|i| remaining.contains(i.id.as_str())).count();
        if after < 3 {
            warnings.push(format!("facet `{}` has {after} item(s) left after dropping zero-variance items", facet.id));
        }
    }
    ZeroVarianceDrop {
        matrix,
        dropped,
        warnings,
    }
}

#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    /// Skip columns that are not questionnaire items instead of failing.
    pub ignore_unknown_columns: bool,
    /// Keep only rows without missing answers.
    pub require_complete: bool,
}

/// Reads a response CSV (comma or tab separated). The header names item ids; an optional
/// leading `respondent` column carries ids. Lines starting with `#` are ignored. Blank cells
/// and integers outside the scale (the public IPIP dump uses 0) become missing.
pub fn load_response_csv(path: impl AsRef<Path>, q: &Questionnaire, opts: &CsvOptions) -> Result<ResponseMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_response_csv(file, path, q, opts)
}

pub fn read_response_csv<R: Read>(mut reader: R, path: &Path, q: &Questionnaire, opts: &CsvOptions) -> Result<ResponseMatrix> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let header_line = text
        .lines()
        .find(|l| !l.starts_with('#') && !l.trim().is_empty())
        .ok_or_else(|| Error::parse(path, None, "missing header row"))?;
    let delimiter = if header_line.contains('\t') { b'\t' } else { b',' };

    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let header_lineno = headers.position().map(|p| p.line() as usize);

    let index = q.index_map();
    let mut id_col = None;
    let mut columns: Vec<(usize, usize)> = Vec::new(); // (csv column, questionnaire index)
    for (c, name) in headers.iter().enumerate() {
        let name = name.trim();
        if c == 0 && matches!(name.to_ascii_lowercase().as_str(), "respondent" | "id" | "respondent_id") {
            id_col = Some(c);
            continue;
        }
        match index.get(name) {
            Some(&qi) => columns.push((c, qi)),
            None if opts.ignore_unknown_columns => {}
            None => return Err(Error::parse(path, header_lineno, format!("unknown item `{name}` in header"))),
        }
    }
    columns.sort_by_key(|&(_, qi)| qi);
    let mut seen = HashSet::new();
    for &(_, qi) in &columns {
        if !seen.insert(qi) {
            return Err(Error::parse(path, header_lineno, format!("duplicate column `{}`", q.items[qi].id)));
        }
    }

    let mut respondents = Vec::new();
    let mut scores = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize);
        if record.len() != headers.len() {
            return Err(Error::parse(
                path,
                line,
                format!("row has {} fields, header has {}", record.len(), headers.len()),
            ));
        }
        let mut row = Vec::with_capacity(columns.len());
        for &(c, _) in &columns {
            let cell = record[c].trim();
            if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
                row.push(None);
                continue;
            }
            let v: i64 = cell
                .parse()
                .map_err(|_| Error::parse(path, line, format!("non-integer cell `{cell}`")))?;
            row.push(if q.scale.contains(v) { Some(v as u8) } else { None });
        }
        if opts.require_complete && row.iter().any(Option::is_none) {
            continue;
        }
        respondents.push(match id_col {
            Some(c) => record[c].to_string(),
            None => format!("r{}", r + 1),
        });
        scores.push(row);
    }
    let item_ids = columns.iter().map(|&(_, qi)| q.items[qi].id.clone()).collect();
    ResponseMatrix::new(q, respondents, item_ids, scores, format!("csv:{}", path.display()))
}

/// Header metadata lines (`# key=value; ...`) at the top of a CSV written by this crate.
pub fn read_header_metadata(path: impl AsRef<Path>) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut meta = HashMap::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        for part in line.trim_start_matches('#').split(';') {
            if let Some((k, v)) = part.split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
    }
    Ok(meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn five() -> LikertScale {
        LikertScale::five_point()
    }

    fn ipip_row(q: &Questionnaire, code: Code) -> ResponseMatrix {
        ResponseMatrix::new(q, vec!["a".into()], q.item_ids(), vec![vec![code; q.items.len()]], "test").unwrap()
    }

    #[test]
    fn flip_examples() {
        assert_eq!(flip_score(5, Key::False, &five()).unwrap(), 1.0);
        assert_eq!(flip_score(3, Key::False, &five()).unwrap(), 3.0);
        assert_eq!(flip_score(2, Key::True, &five()).unwrap(), 2.0);
        assert!(matches!(flip_score(6, Key::True, &five()), Err(Error::Domain(_))));
        assert!(matches!(flip_score(0, Key::False, &five()), Err(Error::Domain(_))));
    }

    #[test]
    fn missing_row_scores_neutral() {
        let q = Questionnaire::ipip_bffm();
        let s = score_matrix(&ipip_row(&q, None), &q).unwrap();
        assert!(s.values.iter().all(|&v| v == 3.0));
    }

    #[test]
    fn agree_row_scores_five_and_one() {
        let q = Questionnaire::ipip_bffm();
        let s = score_matrix(&ipip_row(&q, Some(5)), &q).unwrap();
        for (j, id) in s.item_ids.iter().enumerate() {
            let expected = if q.item(id).unwrap().key.is_true() { 5.0 } else { 1.0 };
            assert_eq!(s.values[(0, j)], expected);
        }
    }

    #[test]
    fn consistent_respondent_maps_to_constant() {
        let q = Questionnaire::ipip_bffm();
        let row = q
            .items
            .iter()
            .map(|it| Some(if it.key.is_true() { 5 } else { 1 }))
            .collect();
        let m = ResponseMatrix::new(&q, vec!["a".into()], q.item_ids(), vec![row], "t").unwrap();
        let s = score_matrix(&m, &q).unwrap();
        assert!(s.values.iter().all(|&v| v == 5.0));
    }

    #[test]
    fn score_matrix_rejects_unknown_items() {
        let q = Questionnaire::ipip_bffm();
        let m = ResponseMatrix {
            respondents: vec!["a".into()],
            item_ids: vec!["NOPE".into()],
            scores: vec![vec![Some(1)]],
            provenance: String::new(),
        };
        assert!(matches!(score_matrix(&m, &q), Err(Error::Data(_))));
    }

    #[test]
    fn facet_sums() {
        let q = Questionnaire::bfi2();
        let m = ResponseMatrix::new(&q, vec!["a".into()], q.item_ids(), vec![vec![Some(3); 60]], "t").unwrap();
        let s = score_matrix(&m, &q).unwrap();
        assert_eq!(facet_sum_score(&s, &q, "E").unwrap(), vec![36.0]);

        let row = q.items.iter().map(|it| Some(if it.key.is_true() { 5 } else { 1 })).collect();
        let m = ResponseMatrix::new(&q, vec!["a".into()], q.item_ids(), vec![row], "t").unwrap();
        let s = score_matrix(&m, &q).unwrap();
        assert_eq!(facet_sum_score(&s, &q, "O").unwrap(), vec![60.0]);
        assert!(facet_sum_score(&s, &q, "Z").is_err());
    }

    #[test]
    fn standardize_examples() {
        let m = DMatrix::from_column_slice(5, 1, &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let z = standardize(&m, &["x".into()]).unwrap();
        assert!(z.column(0).mean().abs() < 1e-12);
        let sd = (z.column(0).iter().map(|v| v * v).sum::<f64>() / 4.0).sqrt();
        assert!((sd - 1.0).abs() < 1e-12);

        let c = DMatrix::from_element(4, 2, 2.0);
        match standardize(&c, &["a".into(), "b".into()]) {
            Err(Error::ZeroVariance { item }) => assert_eq!(item, "a"),
            other => panic!("expected zero variance error, got {other:?}"),
        }
    }

    #[test]
    fn drop_examples() {
        let q = Questionnaire::ipip_bffm();
        let mut rows = vec![];
        for r in 0..6u8 {
            rows.push(q.items.iter().enumerate().map(|(j, _)| Some(if j == 3 { 4 } else { 1 + (r + j as u8) % 5 })).collect());
        }
        let m = ResponseMatrix::new(&q, (0..6).map(|i| i.to_string()).collect(), q.item_ids(), rows, "t").unwrap();
        let d = drop_zero_variance_items(&m, &q);
        assert_eq!(d.dropped, vec![q.items[3].id.clone()]);
        assert_eq!(d.matrix.n_items(), 49);
        assert!(d.warnings.is_empty());

        let again = drop_zero_variance_items(&d.matrix, &q);
        assert!(again.dropped.is_empty());
        assert_eq!(again.matrix, d.matrix);

        let constant = ipip_row(&q, Some(2));
        let d = drop_zero_variance_items(&constant, &q);
        assert_eq!(d.dropped.len(), 50);
        assert!(d.warnings.iter().any(|w| w.contains("all items")));
    }

    #[test]
    fn csv_parse_and_errors() {
        let q = Questionnaire::ipip_bffm();
        let dir = tempfile::tempdir().unwrap();
        let ok = dir.path().join("ok.csv");
        std::fs::write(&ok, "# meta=1\nEXT1,EST1,AGR1\n1,2,3\n0,5,\n4,4,9\n").unwrap();
        let m = load_response_csv(&ok, &q, &CsvOptions::default()).unwrap();
        assert_eq!(m.n_respondents(), 3);
        assert_eq!(m.scores[1], vec![None, Some(5), None]);
        assert_eq!(m.scores[2], vec![Some(4), Some(4), None]);
        assert_eq!(read_header_metadata(&ok).unwrap()["meta"], "1");

        let complete = load_response_csv(&ok, &q, &CsvOptions { require_complete: true, ..Default::default() }).unwrap();
        assert_eq!(complete.n_respondents(), 1);

        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "EXT1,XYZ\n1,2\n").unwrap();
        match load_response_csv(&bad, &q, &CsvOptions::default()) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, Some(1));
                assert!(message.contains("XYZ"));
            }
            other => panic!("{other:?}"),
        }
        let lenient = load_response_csv(&bad, &q, &CsvOptions { ignore_unknown_columns: true, ..Default::default() }).unwrap();
        assert_eq!(lenient.item_ids, vec!["EXT1".to_string()]);

        let short = dir.path().join("short.csv");
        std::fs::write(&short, "EXT1,EST1\n1,2\n3\n").unwrap();
        match load_response_csv(&short, &q, &CsvOptions::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, Some(3)),
            other => panic!("{other:?}"),
        }

        let tsv = dir.path().join("data.tsv");
        std::fs::write(&tsv, "EST1\tEXT1\n2\t1\n").unwrap();
        let m = load_response_csv(&tsv, &q, &CsvOptions::default()).unwrap();
        assert_eq!(m.item_ids, vec!["EXT1".to_string(), "EST1".to_string()]);
        assert_eq!(m.scores[0], vec![Some(1), Some(2)]);
    }

    #[test]
    fn csv_write_read_back() {
        let q = Questionnaire::ipip_bffm();
        let m = ResponseMatrix::new(
            &q,
            vec!["x".into(), "y".into()],
            vec!["EXT1".into(), "AGR1".into()],
            vec![vec![Some(1), None], vec![Some(5), Some(2)]],
            "t",
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf, &["tool=test".into()]).unwrap();
        let back = read_response_csv(buf.as_slice(), Path::new("mem"), &q, &CsvOptions::default()).unwrap();
        assert_eq!(back.scores, m.scores);
        assert_eq!(back.respondents, m.respondents);
    }

    proptest! {
        #[test]
        fn flip_is_involution(code in 1i64..=5, reverse in any::<bool>()) {
            let key = if reverse { Key::False } else { Key::True };
            let once = flip_score(code, key, &five()).unwrap();
            let twice = flip_score(once as i64, key, &five()).unwrap();
            prop_assert_eq!(twice, code as f64);
        }

        #[test]
        fn sum_score_matches_brute_force(rows in proptest::collection::vec(proptest::collection::vec(proptest::option::of(1u8..=5), 60), 1..8)) {
            let q = Questionnaire::bfi2();
            let n = rows.len();
            let m = ResponseMatrix::new(&q, (0..n).map(|i| i.to_string()).collect(), q.item_ids(), rows.clone(), "p").unwrap();
            let s = score_matrix(&m, &q).unwrap();
            for facet in ["E", "A", "C", "N", "O"] {
                let got = facet_sum_score(&s, &q, facet).unwrap();
                for (r, row) in rows.iter().enumerate() {
                    let mut expected = 0.0;
                    for (j, item) in q.items.iter().enumerate() {
                        if item.facet != facet { continue; }
                        let raw = row[j].unwrap_or(3) as f64;
                        expected += if item.key == Key::True { raw } else { 6.0 - raw };
                    }
                    prop_assert_eq!(got[r], expected);
                }
            }
        }

        #[test]
        fn standardize_moments(data in proptest::collection::vec(-50.0f64..50.0, 12)) {
            let m = DMatrix::from_column_slice(6, 2, &data);
            let names = vec!["a".to_string(), "b".to_string()];
            if let Ok(z) = standardize(&m, &names) {
                for col in z.column_iter() {
                    let mean = col.mean();
                    let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0).sqrt();
                    prop_assert!(mean.abs() < 1e-10);
                    prop_assert!((sd - 1.0).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn drop_is_idempotent(rows in proptest::collection::vec(proptest::collection::vec(proptest::option::of(1u8..=3), 50), 2..6)) {
            let q = Questionnaire::ipip_bffm();
            let n = rows.len();
            let m = ResponseMatrix::new(&q, (0..n).map(|i| i.to_string()).collect(), q.item_ids(), rows, "p").unwrap();
            let once = drop_zero_variance_items(&m, &q);
            let twice = drop_zero_variance_items(&once.matrix, &q);
            prop_assert!(twice.dropped.is_empty());
            prop_assert_eq!(twice.matrix, once.matrix);
        }
    }
}
