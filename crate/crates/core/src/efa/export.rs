use std::io::Write;

use super::LoadingMatrix;
use crate::bias::xml_escape;
use crate::error::Result;
use crate::questionnaire::Questionnaire;

/// Row order for display: facet order, true-key before false-key, then questionnaire order.
pub fn heatmap_row_order(loadings: &LoadingMatrix, q: &Questionnaire) -> Vec<usize> {
    let mut rows: Vec<(usize, usize, usize, usize)> = loadings
        .item_ids
        .iter()
        .enumerate()
        .map(|(r, id)| match q.item_index(id) {
            Some(qi) => {
                let item = &q.items[qi];
                let f = q.facets.iter().position(|f| f.id == item.facet).unwrap_or(usize::MAX);
                (f, usize::from(!item.key.is_true()), qi, r)
            }
            None => (usize::MAX, 0, usize::MAX, r),
        })
        .collect();
    rows.sort();
    rows.into_iter().map(|(_, _, _, r)| r).collect()
}

/// Loading CSV: `item,key,<component labels...>`, cells rounded to four decimals.
pub fn write_loadings_csv<W: Write>(mut out: W, header_lines: &[String], loadings: &LoadingMatrix, q: &Questionnaire) -> Result<()> {
    for line in header_lines {
        writeln!(out, "# {line}")?;
    }
    let labels = loadings.labels();
    writeln!(out, "item,key,{}", labels.join(","))?;
    for (i, id) in loadings.item_ids.iter().enumerate() {
        let key = q.item(id).map(|it| it.key.marker()).unwrap_or('?');
        let cells: Vec<String> = loadings.loadings.row(i).iter().map(|v| format_loading(*v)).collect();
        writeln!(out, "{id},{key},{}", cells.join(","))?;
    }
    Ok(())
}

fn format_loading(v: f64) -> String {
    let r = (v * 1e4).round() / 1e4;
    // Avoid "-0.0000".
    if r == 0.0 {
        "0.0000".to_string()
    } else {
        format!("{r:.4}")
    }
}

fn diverging(v: f64) -> String {
    let t = v.clamp(-1.0, 1.0);
    let (r, g, b) = if t >= 0.0 {
        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
    } else {
        (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

/// Heatmap of loadings with facet row blocks and +/- key markers.
pub fn loadings_heatmap_svg(loadings: &LoadingMatrix, q: &Questionnaire, title: &str) -> String {
    let order = heatmap_row_order(loadings, q);
    let labels = loadings.labels();
    let (cell_w, cell_h, left, top) = (56.0, 12.0, 90.0, 40.0);
    let width = left + cell_w * labels.len() as f64 + 20.0;
    let height = top + cell_h * order.len() as f64 + 20.0;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{left}\" y=\"16\" font-size=\"13\">{}</text>\n",
        xml_escape(title)
    );
    for (g, label) in labels.iter().enumerate() {
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            left + cell_w * (g as f64 + 0.5),
            top - 6.0,
            xml_escape(label)
        ));
    }
    let mut last_facet: Option<String> = None;
    for (row, &i) in order.iter().enumerate() {
        let id = &loadings.item_ids[i];
        let item = q.item(id);
        let y = top + cell_h * row as f64;
        let facet = item.map(|it| it.facet.clone());
        if row > 0 && facet != last_facet {
            svg.push_str(&format!(
                "<line x1=\"0\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"black\" stroke-width=\"1\"/>\n",
                left + cell_w * labels.len() as f64
            ));
        }
        last_facet = facet;
        let marker = item.map(|it| it.key.marker()).unwrap_or('?');
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"9\" text-anchor=\"end\">{} ({marker})</text>\n",
            left - 4.0,
            y + cell_h - 2.5,
            xml_escape(id)
        ));
        for g in 0..labels.len() {
            let v = loadings.loadings[(i, g)];
            svg.push_str(&format!(
                "<rect x=\"{:.1}\" y=\"{y:.1}\" width=\"{cell_w}\" height=\"{cell_h}\" fill=\"{}\"><title>{:.3}</title></rect>\n",
                left + cell_w * g as f64,
                diverging(v),
                v
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn csv_layout_and_order() {
        let q = Questionnaire::bfi2();
        let ids: Vec<String> = ["E1", "E0", "A0"].iter().map(|s| s.to_string()).collect();
        let l = LoadingMatrix {
            item_ids: ids,
            loadings: DMatrix::from_row_slice(3, 2, &[0.123456, -0.5, -0.00001, 0.25, 0.0, 1.0]),
            eigenvalues: vec![1.0, 1.0],
            explained_variance_ratio: vec![0.5, 0.5],
            component_labels: Some(vec!["E".into(), "A".into()]),
            rotation: None,
            converged: true,
        };
        let mut buf = Vec::new();
        write_loadings_csv(&mut buf, &[], &l, &q).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "item,key,E,A");
        assert_eq!(lines[1], "E1,-,0.1235,-0.5000");
        assert_eq!(lines[2], "E0,+,0.0000,0.2500");
        // E facet first, true key (E0) before false key (E1), then A.
        assert_eq!(heatmap_row_order(&l, &q), vec![1, 0, 2]);
        let svg = loadings_heatmap_svg(&l, &q, "t");
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("E1 (-)"));
    }
}
