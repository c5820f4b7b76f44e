//! Agree bias: the mean key-corrected score on true-key items minus the mean on false-key
//! items, and an empirical test of a model's bias against a human reference sample.

use std::io::Write;

use crate::error::{Error, Result};
use crate::questionnaire::Questionnaire;
use crate::responses::ScoredMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct AgreeBiasResult {
    /// `(respondent id, a_i)` in matrix row order.
    pub per_respondent: Vec<(String, f64)>,
    pub mean_bias: f64,
}

impl AgreeBiasResult {
    pub fn values(&self) -> Vec<f64> {
        self.per_respondent.iter().map(|(_, a)| *a).collect()
    }

    pub fn min(&self) -> f64 {
        self.values().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn agree_bias(scored: &ScoredMatrix, q: &Questionnaire) -> Result<AgreeBiasResult> {
    let mut true_cols = Vec::new();
    let mut false_cols = Vec::new();
    for (j, id) in scored.item_ids.iter().enumerate() {
        let item = q
            .item(id)
            .ok_or_else(|| Error::Data(format!("item `{id}` not in questionnaire {}", q.name)))?;
        if item.key.is_true() {
            true_cols.push(j);
        } else {
            false_cols.push(j);
        }
    }
    if true_cols.is_empty() || false_cols.is_empty() {
        return Err(Error::Structural(
            "agree bias needs at least one true-key and one false-key item".into(),
        ));
    }
    let per_respondent: Vec<(String, f64)> = scored
        .respondents
        .iter()
        .enumerate()
        .map(|(r, id)| {
            let t = true_cols.iter().map(|&j| scored.values[(r, j)]).sum::<f64>() / true_cols.len() as f64;
            let f = false_cols.iter().map(|&j| scored.values[(r, j)]).sum::<f64>() / false_cols.len() as f64;
            (id.clone(), t - f)
        })
        .collect();
    let mean_bias = if per_respondent.is_empty() {
        f64::NAN
    } else {
        per_respondent.iter().map(|(_, a)| a).sum::<f64>() / per_respondent.len() as f64
    };
    Ok(AgreeBiasResult {
        per_respondent,
        mean_bias,
    })
}

/// Sorted agree-bias values of a reference (human) sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceDistribution {
    values: Vec<f64>,
}

impl ReferenceDistribution {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Data("reference distribution needs at least two values".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Data("reference distribution contains NaN".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(ReferenceDistribution { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PercentileTest {
    /// Fraction of reference values strictly below the model's bias.
    pub percentile: f64,
    /// One-sided add-one p-value `(#{ref >= bias} + 1) / (n + 1)`.
    pub p_value: f64,
}

impl PercentileTest {
    pub fn rejects_at(&self, level: f64) -> bool {
        self.p_value < level
    }
}

pub fn percentile_test(model_bias: f64, reference: &ReferenceDistribution) -> PercentileTest {
    let n = reference.n();
    let below = reference.values.partition_point(|&v| v < model_bias);
    let at_or_above = n - below;
    PercentileTest {
        percentile: below as f64 / n as f64,
        p_value: (at_or_above + 1) as f64 / (n + 1) as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

/// Equal-width bins over the observed range. The last bin is closed on the right.
pub fn bias_histogram(values: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::Domain("histogram needs at least one bin".into()));
    }
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin {
            left: lo + b as f64 * width,
            right: if b + 1 == bins { hi } else { lo + (b + 1) as f64 * width },
            count: 0,
        })
        .collect();
    for &v in values {
        let b = (((v - lo) / width).floor() as usize).min(bins - 1);
        out[b].count += 1;
    }
    Ok(out)
}

pub fn write_histogram_csv<W: Write>(mut out: W, header_lines: &[String], bins: &[HistogramBin]) -> Result<()> {
    for line in header_lines {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "bin_left,bin_right,count")?;
    for b in bins {
        writeln!(out, "{:.6},{:.6},{}", b.left, b.right, b.count)?;
    }
    Ok(())
}

/// Bar chart of the histogram with optional vertical markers (label, x position).
pub fn histogram_svg(bins: &[HistogramBin], markers: &[(String, f64)]) -> String {
    let (w, h, pad) = (640.0, 360.0, 40.0);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    if bins.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let lo = bins[0].left.min(markers.iter().map(|m| m.1).fold(f64::INFINITY, f64::min));
    let hi = bins[bins.len() - 1].right.max(markers.iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max));
    let max_count = bins.iter().map(|b| b.count).max().unwrap_or(1).max(1) as f64;
    let x = |v: f64| pad + (v - lo) / (hi - lo).max(f64::EPSILON) * (w - 2.0 * pad);
    let y = |c: f64| h - pad - c / max_count * (h - 2.0 * pad);
    for b in bins {
        svg.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#7a9cc6\" stroke=\"#34495e\" stroke-width=\"0.5\"/>\n",
            x(b.left),
            y(b.count as f64),
            (x(b.right) - x(b.left)).max(0.5),
            h - pad - y(b.count as f64)
        ));
    }
    for (label, v) in markers {
        svg.push_str(&format!(
            "<line x1=\"{0:.2}\" y1=\"{1}\" x2=\"{0:.2}\" y2=\"{2}\" stroke=\"#c0392b\" stroke-width=\"2\"/>\n\
             <text x=\"{0:.2}\" y=\"{3}\" font-size=\"11\" text-anchor=\"middle\" fill=\"#c0392b\">{4}</text>\n",
            x(*v),
            pad,
            h - pad,
            pad - 6.0,
            xml_escape(label)
        ));
    }
    svg.push_str(&format!(
        "<line x1=\"{pad}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n\
         <text x=\"{pad}\" y=\"{2}\" font-size=\"11\">{lo:.2}</text>\n\
         <text x=\"{1}\" y=\"{2}\" font-size=\"11\" text-anchor=\"end\">{hi:.2}</text>\n\
         <text x=\"{3}\" y=\"{2}\" font-size=\"12\" text-anchor=\"middle\">agree bias</text>\n</svg>\n",
        h - pad,
        w - pad,
        h - pad + 16.0,
        w / 2.0
    ));
    svg
}

pub(crate) fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
