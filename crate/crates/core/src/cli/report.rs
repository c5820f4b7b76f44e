use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::output::{config_hash, csv_writer, file_digest, fmt_num, parse_num, write_text, Header, InputMeta};
use super::{ReportArgs, StageOutput};
use crate::cfa::{BuiltinModel, ModelFit, CFI_MIN, RMSEA_MAX, TLI_MIN};
use crate::error::{Error, Result};
use crate::reliability::{Gate, ReliabilityReport};

/// Appended to a report whenever a reliability gate fails.
pub const NON_INTERPRETABLE_NOTE: &str = "Reliability coefficients marked not interpretable come from data whose \
measurement model does not fit (CFI >= 0.95, TLI >= 0.95 and RMSEA <= 0.06 are required); they are shown for \
completeness and must not be read as reliability, even where the values look acceptable.";

fn flag(v: Option<f64>, pass: impl Fn(f64) -> bool) -> String {
    match v {
        Some(x) if pass(x) => "pass".into(),
        Some(_) => "fail".into(),
        None => "NA".into(),
    }
}

fn mean_all(values: &[Option<f64>]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let v: Option<Vec<f64>> = values.iter().copied().collect();
    v.map(|v| v.iter().sum::<f64>() / v.len() as f64)
}

/// One row per fit, then for every per-facet builtin model a `mean` row averaging the
/// indices over facets (NA when any facet is NA).
pub fn write_cfa_summary(path: &Path, header: &Header, fits: &[ModelFit]) -> Result<()> {
    let mut w = csv_writer(path, header)?;
    w.write_record([
        "model", "facet", "label", "converged", "valid", "n", "n_items", "chi_square", "df", "cfi", "tli", "rmsea",
        "cfi_pass", "tli_pass", "rmsea_pass", "dropped", "issues",
    ])?;
    let row = |model: &str, facet: &str, label: &str, conv: bool, valid: bool, n: String, items: String, chi: Option<f64>, df: String, idx: [Option<f64>; 3], dropped: String, issues: String| {
        vec![
            model.to_string(),
            facet.to_string(),
            label.to_string(),
            conv.to_string(),
            valid.to_string(),
            n,
            items,
            fmt_num(chi, 4),
            df,
            fmt_num(idx[0], 4),
            fmt_num(idx[1], 4),
            fmt_num(idx[2], 4),
            flag(idx[0], |x| x >= CFI_MIN),
            flag(idx[1], |x| x >= TLI_MIN),
            flag(idx[2], |x| x <= RMSEA_MAX),
            dropped,
            issues,
        ]
    };
    for f in fits {
        let r = &f.report;
        let model = f.kind.map(|k| k.name().to_string()).unwrap_or_else(|| r.model.clone());
        let facet = match (&f.facet, f.kind) {
            (Some(facet), _) => facet.clone(),
            (None, Some(_)) => "all".into(),
            (None, None) => String::new(),
        };
        w.write_record(row(
            &model,
            &facet,
            &r.label,
            r.converged,
            r.valid,
            r.n.to_string(),
            r.n_items.to_string(),
            Some(r.chi_square),
            r.df.to_string(),
            [r.cfi, r.tli, r.rmsea],
            f.dropped.join(" "),
            r.issues.join(" | "),
        ))?;
    }
    for kind in BuiltinModel::ALL.into_iter().filter(|k| k.per_facet()) {
        let group: Vec<&ModelFit> = fits.iter().filter(|f| f.kind == Some(kind)).collect();
        if group.is_empty() {
            continue;
        }
        let idx = |get: fn(&ModelFit) -> Option<f64>| mean_all(&group.iter().map(|f| get(f)).collect::<Vec<_>>());
        let na = group.iter().filter(|f| f.report.cfi.is_none()).count();
        w.write_record(row(
            kind.name(),
            "mean",
            &format!("mean/{}", kind.name()),
            group.iter().all(|f| f.report.converged),
            group.iter().all(|f| f.report.valid),
            group[0].report.n.to_string(),
            String::new(),
            None,
            String::new(),
            [idx(|f| f.report.cfi), idx(|f| f.report.tli), idx(|f| f.report.rmsea)],
            String::new(),
            if na > 0 { format!("{na} of {} facets NA", group.len()) } else { String::new() },
        ))?;
    }
    w.flush()?;
    Ok(())
}

/// One row per facet, then a `mean` row (NA when any facet is NA).
pub fn write_reliability_csv(path: &Path, header: &Header, reports: &[ReliabilityReport]) -> Result<()> {
    let mut w = csv_writer(path, header)?;
    w.write_record(["facet", "alpha", "omega_h", "interpretable", "reason", "source_fits"])?;
    for r in reports {
        let reason = match &r.gating {
            Gate::Interpretable => String::new(),
            Gate::NotInterpretable(why) => why.clone(),
        };
        w.write_record([
            r.facet.clone(),
            fmt_num(r.alpha.value(), 4),
            fmt_num(r.omega_h.value(), 4),
            r.gating.is_interpretable().to_string(),
            reason,
            r.source_fits.join(" "),
        ])?;
    }
    if !reports.is_empty() {
        let alpha = mean_all(&reports.iter().map(|r| r.alpha.value()).collect::<Vec<_>>());
        let omega = mean_all(&reports.iter().map(|r| r.omega_h.value()).collect::<Vec<_>>());
        let bad = reports.iter().filter(|r| !r.gating.is_interpretable()).count();
        w.write_record([
            "mean".to_string(),
            fmt_num(alpha, 4),
            fmt_num(omega, 4),
            (bad == 0).to_string(),
            if bad > 0 { format!("{bad} of {} facets not interpretable", reports.len()) } else { String::new() },
            String::new(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn find_outputs(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
    entries.sort();
    for path in entries {
        if path.is_dir() {
            find_outputs(&path, out)?;
        } else if matches!(path.file_name().and_then(|n| n.to_str()), Some("cfa_summary.csv" | "reliability.csv")) {
            out.push(path);
        }
    }
    Ok(())
}

fn read_rows(path: &Path) -> Result<Vec<BTreeMap<String, String>>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.push(headers.iter().zip(rec.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect());
    }
    Ok(out)
}

#[derive(Debug, Default, Clone)]
struct Cell {
    alpha: Option<f64>,
    omega: Option<f64>,
    interpretable: Option<bool>,
    /// Mean (CFI, TLI, RMSEA) per builtin model.
    fits: BTreeMap<String, [Option<f64>; 3]>,
    have_reliability: bool,
    have_cfa: bool,
}

const FIT_COLUMNS: [(&str, &str); 4] = [
    ("single", "single_component"),
    ("three", "three_subcomponents"),
    ("acq", "three_plus_acquiescence"),
    ("full", "full_five_factor"),
];

fn context_order(c: &str) -> usize {
    match c {
        "in-context" => 0,
        "no-context" => 1,
        _ => 2,
    }
}

/// Merges stage outputs found under `--input` into `report.csv` and `report.md`: one row per
/// label and persona setting, in-context and no-context values joined by a slash.
pub fn cmd_report(args: &ReportArgs) -> Result<StageOutput> {
    if !args.input.is_dir() {
        return Err(Error::Usage(format!("{} is not a directory", args.input.display())));
    }
    let mut paths = Vec::new();
    find_outputs(&args.input, &mut paths)?;
    if paths.is_empty() {
        return Err(Error::Usage(format!(
            "no stage outputs (cfa_summary.csv, reliability.csv) under {}",
            args.input.display()
        )));
    }

    let mut questionnaire: Option<String> = None;
    let mut seeds = Vec::new();
    let mut digests = Vec::new();
    // (label, setting) -> context -> cell
    let mut table: BTreeMap<(String, String), BTreeMap<String, Cell>> = BTreeMap::new();
    for path in &paths {
        let meta = InputMeta::read(path)?;
        let q = meta.questionnaire.clone().unwrap_or_else(|| "unknown".into());
        match &questionnaire {
            None => questionnaire = Some(q),
            Some(prev) if *prev != q => {
                return Err(Error::Consistency(format!(
                    "stage outputs mix questionnaires {prev} and {q} ({})",
                    path.display()
                )))
            }
            _ => {}
        }
        seeds.push(meta.seed);
        let rel = path.strip_prefix(&args.input).unwrap_or(path).to_string_lossy().replace('\\', "/");
        digests.push(json!([rel, file_digest(path)?]));
        let label = meta.label.clone().unwrap_or_else(|| "unlabelled".into());
        let regime = meta.regime.clone().unwrap_or_else(|| "unspecified".into());
        let (context, setting) = match regime.split_once('/') {
            Some((c, s)) => (c.to_string(), s.to_string()),
            None => (regime.clone(), String::new()),
        };
        let cell = table.entry((label.clone(), setting)).or_default().entry(context).or_default();
        let rows = read_rows(path)?;
        let duplicate = || Error::Consistency(format!("two {} outputs for label {label}, regime {regime}", path.file_name().unwrap_or_default().to_string_lossy()));
        if path.ends_with("reliability.csv") {
            if cell.have_reliability {
                return Err(duplicate());
            }
            cell.have_reliability = true;
            if let Some(mean) = rows.iter().find(|r| r.get("facet").map(String::as_str) == Some("mean")) {
                cell.alpha = mean.get("alpha").and_then(|v| parse_num(v));
                cell.omega = mean.get("omega_h").and_then(|v| parse_num(v));
                cell.interpretable = mean.get("interpretable").map(|v| v == "true");
            }
        } else {
            if cell.have_cfa {
                return Err(duplicate());
            }
            cell.have_cfa = true;
            for r in &rows {
                let facet = r.get("facet").map(String::as_str).unwrap_or("");
                if facet != "mean" && facet != "all" {
                    continue;
                }
                let get = |k: &str| r.get(k).and_then(|v| parse_num(v));
                cell.fits.insert(r.get("model").cloned().unwrap_or_default(), [get("cfi"), get("tli"), get("rmsea")]);
            }
        }
    }

    let mut columns = vec!["label".to_string(), "setting".into(), "regimes".into(), "alpha".into(), "omega_h".into(), "interpretable".into()];
    for (short, _) in FIT_COLUMNS {
        for idx in ["cfi", "tli", "rmsea"] {
            columns.push(format!("{short}_{idx}"));
        }
    }
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut any_gate_failed = false;
    for ((label, setting), contexts) in &table {
        let mut ordered: Vec<(&String, &Cell)> = contexts.iter().collect();
        ordered.sort_by_key(|(c, _)| (context_order(c), (*c).clone()));
        let join = |f: &dyn Fn(&Cell) -> String| ordered.iter().map(|(_, c)| f(c)).collect::<Vec<_>>().join("/");
        any_gate_failed |= ordered.iter().any(|(_, c)| c.interpretable == Some(false));
        let mut row = vec![
            label.clone(),
            setting.clone(),
            ordered.iter().map(|(c, _)| c.as_str()).collect::<Vec<_>>().join("/"),
            join(&|c| fmt_num(c.alpha, 2)),
            join(&|c| fmt_num(c.omega, 2)),
            join(&|c| match c.interpretable {
                Some(true) => "yes".into(),
                Some(false) => "no".into(),
                None => "NA".into(),
            }),
        ];
        for (_, model) in FIT_COLUMNS {
            for (i, pass) in [
                (0usize, &(|x: f64| x >= CFI_MIN) as &dyn Fn(f64) -> bool),
                (1, &|x: f64| x >= TLI_MIN),
                (2, &|x: f64| x <= RMSEA_MAX),
            ] {
                row.push(join(&|c| {
                    let v = c.fits.get(model).and_then(|f| f[i]);
                    match v {
                        Some(x) => format!("{} {}", fmt_num(Some(x), 2), if pass(x) { "pass" } else { "fail" }),
                        None => "NA".into(),
                    }
                }));
            }
        }
        rows.push(row);
    }

    let common_seed = match seeds.first() {
        Some(s) if seeds.iter().all(|x| x == s) => *s,
        _ => None,
    };
    let header = Header {
        command: "report".into(),
        config: config_hash(&json!({ "command": "report", "inputs": digests })),
        seed: common_seed,
        questionnaire: questionnaire.unwrap_or_default(),
        label: "report".into(),
        regime: "all".into(),
    };
    std::fs::create_dir_all(&args.out)?;

    let csv_path = args.out.join("report.csv");
    let mut w = csv_writer(&csv_path, &header)?;
    w.write_record(&columns)?;
    for r in &rows {
        w.write_record(r)?;
    }
    let mut inner = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    if any_gate_failed {
        writeln!(inner, "# note: {NON_INTERPRETABLE_NOTE}")?;
    }
    inner.flush()?;

    let mut md = String::new();
    md.push_str("| ");
    md.push_str(&columns.join(" | "));
    md.push_str(" |\n|");
    md.push_str(&" --- |".repeat(columns.len()));
    md.push('\n');
    for r in &rows {
        md.push_str("| ");
        md.push_str(&r.join(" | "));
        md.push_str(" |\n");
    }
    md.push_str("\nValues left of a slash are in-context results, right of it no-context results; index cells carry pass/fail against CFI >= 0.95, TLI >= 0.95, RMSEA <= 0.06. Fit indices are averaged over facets for per-facet models.\n");
    if any_gate_failed {
        md.push_str(&format!("\nNote: {NON_INTERPRETABLE_NOTE}\n"));
    }
    let md_path = args.out.join("report.md");
    write_text(&md_path, &header, "<!-- ", "")?;
    // Close each header comment line.
    let text = std::fs::read_to_string(&md_path)?;
    let closed: String = text.lines().map(|l| format!("{l} -->\n")).collect();
    std::fs::write(&md_path, format!("{closed}\n{md}"))?;

    Ok(StageOutput {
        files: vec![csv_path, md_path],
        messages: vec![format!("{} rows from {} stage outputs", rows.len(), paths.len())],
        exit_code: 0,
    })
}
