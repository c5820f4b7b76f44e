use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::output::{config_hash, csv_writer, file_digest, file_stem, fmt_num, questionnaire_digest, write_text, Header, InputMeta};
use super::report::{write_cfa_summary, write_reliability_csv};
use super::{jobs_or_default, AnalysisArgs, BiasArgs, CfaArgs, PcaArgs, ReliabilityArgs, StageOutput};
use crate::bias::{agree_bias, bias_histogram, histogram_svg, percentile_test, write_histogram_csv, ReferenceDistribution};
use crate::cfa::{
    applicable_models, fit_builtin, fit_responses, parse_model, BuiltinModel, CovarianceInput, FitOptions, ModelFit,
};
use crate::efa::{exploratory_analysis, loadings_heatmap_svg, write_loadings_csv};
use crate::error::{Error, Result};
use crate::questionnaire::Questionnaire;
use crate::reliability::facet_reliability;
use crate::responses::{load_response_csv, score_matrix, CsvOptions, ResponseMatrix};

/// Significance level of the agree-bias percentile test.
pub const BIAS_LEVEL: f64 = 0.005;

struct Input {
    q: Questionnaire,
    responses: ResponseMatrix,
    meta: InputMeta,
    digest: String,
}

impl Input {
    fn load(args: &AnalysisArgs) -> Result<Input> {
        let q = Questionnaire::resolve(&args.questionnaire)?;
        let meta = InputMeta::read(&args.responses)?;
        if let Some(name) = &meta.questionnaire {
            if *name != q.name {
                return Err(Error::Consistency(format!(
                    "{} was written for questionnaire {name}, not {}",
                    args.responses.display(),
                    q.name
                )));
            }
        }
        let responses = load_response_csv(&args.responses, &q, &CsvOptions::default())?;
        if responses.n_respondents() == 0 {
            return Err(Error::Data(format!("{} has no respondents", args.responses.display())));
        }
        std::fs::create_dir_all(&args.out)?;
        Ok(Input {
            digest: file_digest(&args.responses)?,
            q,
            responses,
            meta,
        })
    }

    fn header(&self, args: &AnalysisArgs, command: &str, options: Value) -> Header {
        let config = json!({
            "command": command,
            "questionnaire": questionnaire_digest(&self.q),
            "responses": self.digest,
            "options": options,
        });
        let regime = match args.regime {
            Some(r) => {
                let context = if r == super::RegimeArg::InContext { "in-context" } else { "no-context" };
                // Keep the persona part of a recorded regime.
                match self.meta.regime.as_deref().and_then(|m| m.split_once('/')) {
                    Some((_, rest)) => format!("{context}/{rest}"),
                    None => context.to_string(),
                }
            }
            None => self.meta.regime.clone().unwrap_or_else(|| "unspecified".into()),
        };
        Header {
            command: command.into(),
            config: config_hash(&config),
            seed: args.seed.or(self.meta.seed),
            questionnaire: self.q.name.clone(),
            label: args
                .label
                .clone()
                .or_else(|| self.meta.label.clone())
                .unwrap_or_else(|| "unlabelled".into()),
            regime,
        }
    }
}

fn write_svg(path: &Path, header: &Header, svg: &str) -> Result<()> {
    let comment: String = header.lines().iter().map(|l| format!("<!-- {l} -->\n")).collect();
    std::fs::write(path, format!("{comment}{svg}"))?;
    Ok(())
}

/// Writes `bias.csv`, `bias_summary.csv`, `bias_histogram.csv` and `bias_histogram.svg`.
pub fn cmd_bias(args: &BiasArgs) -> Result<StageOutput> {
    let input = Input::load(&args.input)?;
    let q = &input.q;
    let result = agree_bias(&score_matrix(&input.responses, q)?, q)?;
    let reference = match &args.reference {
        Some(path) => {
            let opts = CsvOptions {
                ignore_unknown_columns: true,
                require_complete: args.reference_complete_only,
            };
            let human = load_response_csv(path, q, &opts)?;
            let values = agree_bias(&score_matrix(&human, q)?, q)?.values();
            Some((ReferenceDistribution::new(values)?, file_digest(path)?))
        }
        None => None,
    };
    let header = input.header(
        &args.input,
        "bias",
        json!({
            "reference": reference.as_ref().map(|r| r.1.clone()),
            "complete_only": args.reference_complete_only,
            "bins": args.bins,
        }),
    );
    let out = &args.input.out;
    let mut files = Vec::new();

    let path = out.join("bias.csv");
    let mut w = csv_writer(&path, &header)?;
    w.write_record(["respondent", "agree_bias"])?;
    for (id, a) in &result.per_respondent {
        w.write_record([id.clone(), fmt_num(Some(*a), 6)])?;
    }
    w.flush()?;
    files.push(path);

    let test = reference.as_ref().map(|(r, _)| (r.n(), percentile_test(result.mean_bias, r)));
    let path = out.join("bias_summary.csv");
    let mut w = csv_writer(&path, &header)?;
    w.write_record([
        "label",
        "n",
        "mean",
        "min",
        "max",
        "reference_n",
        "percentile",
        "p_value",
        "rejects_at_0.005",
    ])?;
    w.write_record([
        header.label.clone(),
        result.per_respondent.len().to_string(),
        fmt_num(Some(result.mean_bias), 6),
        fmt_num(Some(result.min()), 6),
        fmt_num(Some(result.max()), 6),
        test.map(|t| t.0.to_string()).unwrap_or_else(|| "NA".into()),
        fmt_num(test.map(|t| t.1.percentile), 6),
        fmt_num(test.map(|t| t.1.p_value), 6),
        test.map(|t| t.1.rejects_at(BIAS_LEVEL).to_string()).unwrap_or_else(|| "NA".into()),
    ])?;
    w.flush()?;
    files.push(path);

    let hist_values = match &reference {
        Some((r, _)) => r.values().to_vec(),
        None => result.values(),
    };
    let bins = bias_histogram(&hist_values, args.bins)?;
    let path = out.join("bias_histogram.csv");
    write_histogram_csv(BufWriter::new(File::create(&path)?), &header.lines(), &bins)?;
    files.push(path);
    let path = out.join("bias_histogram.svg");
    write_svg(&path, &header, &histogram_svg(&bins, &[(header.label.clone(), result.mean_bias)]))?;
    files.push(path);

    let mut messages = vec![format!("mean agree bias {:.3} over {} respondents", result.mean_bias, result.per_respondent.len())];
    if let Some((n, t)) = test {
        messages.push(format!("percentile {:.3} of {n} reference values, p = {:.4}", t.percentile, t.p_value));
    }
    Ok(StageOutput {
        files,
        messages,
        exit_code: 0,
    })
}

/// Writes `pca_loadings.csv`, `pca_items.csv`, `pca_summary.csv` and `pca_heatmap.svg`.
pub fn cmd_pca(args: &PcaArgs) -> Result<StageOutput> {
    let input = Input::load(&args.input)?;
    let q = &input.q;
    let ncomp = args.ncomp.unwrap_or(q.facets.len());
    let header = input.header(&args.input, "pca", json!({ "ncomp": ncomp }));
    let ex = exploratory_analysis(&input.responses, q, ncomp)?;
    let loadings = &ex.alignment.loadings;
    let out = &args.input.out;
    let mut files = Vec::new();

    let path = out.join("pca_loadings.csv");
    write_loadings_csv(BufWriter::new(File::create(&path)?), &header.lines(), loadings, q)?;
    files.push(path);

    let path = out.join("pca_items.csv");
    let mut w = csv_writer(&path, &header)?;
    w.write_record(["item", "facet", "key", "dominant", "dominant_loading", "hit", "key_sign_ok"])?;
    for d in &ex.structure.items {
        w.write_record([
            d.item_id.clone(),
            d.facet.clone(),
            d.key.marker().to_string(),
            d.dominant.clone(),
            fmt_num(Some(d.dominant_loading), 4),
            d.hit.to_string(),
            d.key_sign_ok.to_string(),
        ])?;
    }
    w.flush()?;
    files.push(path);

    let (t_fail, f_fail) = ex.structure.key_sign_failures();
    let congruences = &ex.alignment.congruences;
    let path = out.join("pca_summary.csv");
    let mut w = csv_writer(&path, &header)?;
    w.write_record([
        "label",
        "n_respondents",
        "n_items",
        "dropped",
        "hit_rate",
        "key_separation_rate",
        "true_key_sign_failures",
        "false_key_sign_failures",
        "mean_congruence",
        "varimax_converged",
    ])?;
    w.write_record([
        header.label.clone(),
        input.responses.n_respondents().to_string(),
        loadings.n_items().to_string(),
        ex.dropped.join(" "),
        fmt_num(Some(ex.structure.hit_rate), 4),
        fmt_num(Some(ex.structure.key_separation_rate), 4),
        t_fail.to_string(),
        f_fail.to_string(),
        fmt_num(Some(congruences.iter().sum::<f64>() / congruences.len() as f64), 4),
        loadings.converged.to_string(),
    ])?;
    w.flush()?;
    files.push(path);

    let path = out.join("pca_heatmap.svg");
    write_svg(&path, &header, &loadings_heatmap_svg(loadings, q, &format!("{} ({})", header.label, header.regime)))?;
    files.push(path);

    let mut messages = vec![format!(
        "hit rate {:.3}, key separation {:.3}",
        ex.structure.hit_rate, ex.structure.key_separation_rate
    )];
    if !ex.dropped.is_empty() {
        messages.push(format!("dropped zero-variance items: {}", ex.dropped.join(", ")));
    }
    messages.extend(ex.warnings);
    Ok(StageOutput {
        files,
        messages,
        exit_code: 0,
    })
}

fn fit_options(correlation: bool, ridge: bool) -> FitOptions {
    FitOptions {
        ridge,
        input: if correlation {
            CovarianceInput::Correlation
        } else {
            CovarianceInput::Covariance
        },
        ..FitOptions::default()
    }
}

enum ModelChoice {
    Builtin(BuiltinModel),
    File(PathBuf),
}

fn resolve_models(q: &Questionnaire, names: &[String]) -> Result<Vec<ModelChoice>> {
    let mut out = Vec::new();
    for name in names {
        let name = name.trim();
        if name == "all" {
            out.extend(applicable_models(q).into_iter().map(ModelChoice::Builtin));
        } else if let Some(kind) = BuiltinModel::from_name(name) {
            if !applicable_models(q).contains(&kind) {
                return Err(Error::Usage(format!("model `{name}` needs sub-facets, which {} does not define", q.name)));
            }
            out.push(ModelChoice::Builtin(kind));
        } else if Path::new(name).is_file() {
            out.push(ModelChoice::File(PathBuf::from(name)));
        } else {
            let known: Vec<&str> = BuiltinModel::ALL.iter().map(|m| m.name()).collect();
            return Err(Error::Usage(format!(
                "unknown model `{name}`: expected `all`, one of {}, or a model file",
                known.join(", ")
            )));
        }
    }
    Ok(out)
}

/// Writes one text report per fit under `cfa/` and `cfa_summary.csv`. Non-convergence and
/// improper solutions are results (NA rows), not failures.
pub fn cmd_cfa(args: &CfaArgs) -> Result<StageOutput> {
    let input = Input::load(&args.input)?;
    let q = &input.q;
    let choices = resolve_models(q, &args.model)?;
    let opts = fit_options(args.correlation, args.ridge);
    let kinds: Vec<BuiltinModel> = choices
        .iter()
        .filter_map(|c| match c {
            ModelChoice::Builtin(k) => Some(*k),
            ModelChoice::File(_) => None,
        })
        .collect();
    let mut fits = fit_builtin(q, &input.responses, &kinds, &opts, jobs_or_default(args.input.jobs))?;
    let mut model_digests = Vec::new();
    for c in &choices {
        if let ModelChoice::File(path) = c {
            let text = std::fs::read_to_string(path)?;
            let model = parse_model(&text, q)?;
            model_digests.push(super::output::sha256_hex(text.as_bytes()));
            let label = model.name.clone();
            fits.push(ModelFit {
                kind: None,
                facet: None,
                dropped: Vec::new(),
                report: fit_responses(&model, &label, &input.responses, q, &opts)?,
            });
        }
    }
    let header = input.header(
        &args.input,
        "cfa",
        json!({
            "builtin": kinds.iter().map(|k| k.name()).collect::<Vec<_>>(),
            "files": model_digests,
            "correlation": args.correlation,
            "ridge": args.ridge,
        }),
    );
    let out = &args.input.out;
    let dir = out.join("cfa");
    std::fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    for fit in &fits {
        let path = dir.join(format!("{}.txt", file_stem(&fit.report.label)));
        write_text(&path, &header, "# ", &fit.report.to_text())?;
        files.push(path);
    }
    let path = out.join("cfa_summary.csv");
    write_cfa_summary(&path, &header, &fits)?;
    files.push(path);

    let na = fits.iter().filter(|f| f.report.cfi.is_none()).count();
    Ok(StageOutput {
        files,
        messages: vec![format!("{} fits, {na} without fit indices (NA)", fits.len())],
        exit_code: 0,
    })
}

/// Writes `reliability.csv`: α and ω_h per facet with the fit gate, plus a mean row.
pub fn cmd_reliability(args: &ReliabilityArgs) -> Result<StageOutput> {
    let input = Input::load(&args.input)?;
    let q = &input.q;
    let omega_model = BuiltinModel::from_name(&args.omega_model)
        .ok_or_else(|| Error::Usage(format!("unknown model `{}`", args.omega_model)))?;
    if !applicable_models(q).contains(&omega_model) {
        return Err(Error::Usage(format!(
            "model `{}` needs sub-facets, which {} does not define",
            omega_model.name(),
            q.name
        )));
    }
    let mut kinds = vec![BuiltinModel::SingleComponent];
    if omega_model != BuiltinModel::SingleComponent {
        kinds.push(omega_model);
    }
    let opts = fit_options(args.correlation, args.ridge);
    let fits = fit_builtin(q, &input.responses, &kinds, &opts, jobs_or_default(args.input.jobs))?;
    let reports = facet_reliability(q, &input.responses, &fits, omega_model)?;
    let header = input.header(
        &args.input,
        "reliability",
        json!({ "omega_model": omega_model.name(), "correlation": args.correlation, "ridge": args.ridge }),
    );
    let path = args.input.out.join("reliability.csv");
    write_reliability_csv(&path, &header, &reports)?;
    let gated = reports.iter().filter(|r| !r.gating.is_interpretable()).count();
    Ok(StageOutput {
        files: vec![path],
        messages: vec![format!("{gated} of {} facets not interpretable", reports.len())],
        exit_code: 0,
    })
}
