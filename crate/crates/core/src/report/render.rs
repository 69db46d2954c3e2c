//! Plain-text, markdown, delimited and JSON renderings of an audit report.

use super::{AuditReport, Format, LambdaMode, ReportError};
use crate::emmeans::format_letters;
use crate::inference::{round_significant, P_VALUE_DIGITS};

/// Smallest p-value printed as a number.
const P_FLOOR: f64 = 2.2e-16;

/// One output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub name: String,
    pub content: String,
}

/// `x` to `digits` significant digits: fixed notation for magnitudes in
/// [1e-4, 1e6), otherwise `d.ddde-XX`.
pub fn format_significant(x: f64, digits: i32) -> String {
    if x.is_nan() {
        return "NA".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "Inf".into() } else { "-Inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let r = round_significant(x, digits);
    let e = r.abs().log10().floor() as i32;
    if !(-4..6).contains(&e) {
        let s = format!("{:.*e}", (digits - 1).max(0) as usize, r);
        let (mantissa, exp) = s.split_once('e').expect("exponent");
        let exp: i32 = exp.parse().expect("integer exponent");
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        format!("{:.*}", (digits - 1 - e).max(0) as usize, r)
    }
}

pub fn format_p_value(p: f64) -> String {
    if p < P_FLOOR {
        format!("<{}", format_significant(P_FLOOR, 2))
    } else {
        format_significant(p, P_VALUE_DIGITS)
    }
}

/// Inverse of [`format_p_value`]; the floor marker parses as 0.
pub fn parse_p_value(text: &str) -> Option<f64> {
    if text.starts_with('<') {
        return Some(0.0);
    }
    if text == "NA" {
        return Some(f64::NAN);
    }
    text.parse().ok()
}

fn num(x: f64) -> String {
    format_significant(x, 4)
}

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self { headers: headers.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn plain(&self) -> String {
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|c| {
                std::iter::once(&self.headers[c])
                    .chain(self.rows.iter().map(|r| &r[c]))
                    .map(|s| s.chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (i, cell) in cells.iter().enumerate() {
                if i > 0 {
                    s.push_str("  ");
                }
                s.push_str(cell);
                s.extend(std::iter::repeat_n(' ', widths[i] - cell.chars().count()));
            }
            s.trim_end().to_string() + "\n"
        };
        let mut out = line(&self.headers);
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        out.push_str(&line(&rule));
        for r in &self.rows {
            out.push_str(&line(r));
        }
        out
    }

    fn markdown(&self) -> String {
        let esc = |s: &String| s.replace('|', "\\|");
        let mut out = format!("| {} |\n", self.headers.iter().map(esc).collect::<Vec<_>>().join(" | "));
        out.push_str(&format!("|{}\n", "---|".repeat(self.headers.len())));
        for r in &self.rows {
            out.push_str(&format!("| {} |\n", r.iter().map(esc).collect::<Vec<_>>().join(" | ")));
        }
        out
    }

    fn delimited(&self, delimiter: u8) -> Result<String, ReportError> {
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(Vec::new());
        let io = |e: csv::Error| ReportError::Io { path: "<delimited output>".into(), message: e.to_string() };
        w.write_record(&self.headers).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| ReportError::Io { path: "<delimited output>".into(), message: e.to_string() })?;
        Ok(String::from_utf8(bytes).expect("utf-8 cells"))
    }
}

/// A titled block of text lines and sub-titled tables.
struct Section {
    title: String,
    lines: Vec<String>,
    tables: Vec<(Option<String>, Table)>,
}

fn focus_factors(report: &AuditReport) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for m in &report.models {
        for f in &m.emmeans {
            if !out.iter().any(|(name, _)| *name == f.summary.focus) {
                out.push((f.summary.focus.clone(), f.label.clone()));
            }
        }
    }
    out
}

fn anova_table(model: &super::ModelReport) -> Table {
    let mut t = Table::new(["Exp. Variable", "Df", "F-value", "P-value", "Significance"]);
    for row in &model.anova.rows {
        let p = format_p_value(row.p_value);
        t.push(vec![row.term.clone(), row.df.to_string(), num(row.f_value), p, row.stars.clone()]);
    }
    t
}

fn emmeans_rows(label: &str, summary: &crate::emmeans::EmmSummary) -> Table {
    let mut t = Table::new([label, "Emmean", "Lower CL", "Upper CL", "CIs"]);
    for r in &summary.rows {
        let (e, lo, hi) = match r.original {
            Some(o) => (o.emmean, o.lower, o.upper),
            None => (r.emmean, r.lower, r.upper),
        };
        t.push(vec![r.level.clone(), num(e), num(lo), num(hi), format_letters(&r.groups)]);
    }
    t
}

fn sections(report: &AuditReport) -> Vec<Section> {
    let p = &report.provenance;
    let mut out = Vec::new();

    let mut lines = vec![format!("Tool: {}", p.tool), format!("Config sha256: {}", p.config_sha256)];
    if let (Some(input), Some(hash)) = (&p.input, &p.input_sha256) {
        lines.push(format!("Input: {input} (sha256 {hash})"));
    }
    let log = &p.ingest;
    lines.push(format!(
        "Rows: {} read, {} kept, {} filtered, {} errored",
        log.rows_in, log.rows_kept, log.rows_filtered, log.rows_errored
    ));
    for (filter, count) in &log.filter_counts {
        lines.push(format!("Filter {filter}: {count} row(s) dropped"));
    }
    if !log.unknown_columns.is_empty() {
        lines.push(format!("Ignored columns: {}", log.unknown_columns.join(", ")));
    }
    if !p.derived_covariates.is_empty() {
        lines.push(format!("Derived covariates: {}", p.derived_covariates.join(", ")));
    }
    lines.push(match (report.lambda.mode, report.lambda.lambda) {
        (LambdaMode::Fixed, Some(l)) => format!("Box-Cox lambda: {} (fixed)", num(l)),
        (LambdaMode::Shared, Some(l)) => format!(
            "Box-Cox lambda: {} (estimated on {}, profile log-likelihood {})",
            num(l),
            report.lambda.fitted_on.as_deref().unwrap_or("?"),
            num(report.lambda.log_likelihood.unwrap_or(f64::NAN))
        ),
        _ => "Box-Cox lambda: estimated per model".to_string(),
    });
    out.push(Section { title: "Demographic bias audit".into(), lines, tables: Vec::new() });

    let mut summary = Table::new([
        "Model",
        "N",
        "Residual Df",
        "Lambda",
        "R-squared",
        "Residual skewness",
        "Residual excess kurtosis",
    ]);
    for m in &report.models {
        summary.push(vec![
            m.name.clone(),
            m.nobs.to_string(),
            m.df_residual.to_string(),
            num(m.lambda),
            num(m.r_squared),
            num(m.residual_skewness),
            num(m.residual_excess_kurtosis),
        ]);
    }
    out.push(Section { title: "Models".into(), lines: Vec::new(), tables: vec![(None, summary)] });

    if !report.correlations.is_empty() {
        let mut t = Table::new(["Covariate", "Transform", "r", "n"]);
        for c in &report.correlations {
            let transform = serde_json::to_value(c.transform).ok().and_then(|v| v.as_str().map(String::from));
            t.push(vec![c.covariate.clone(), transform.unwrap_or_default(), num(c.r), c.n.to_string()]);
        }
        out.push(Section {
            title: "Correlations with the transformed response".into(),
            lines: Vec::new(),
            tables: vec![(None, t)],
        });
    }

    let tables = report.models.iter().map(|m| (Some(m.title.clone()), anova_table(m))).collect();
    out.push(Section {
        title: "Type III ANOVA".into(),
        lines: vec!["Significance: *** p < 0.001, ** p < 0.01, * p < 0.05".into()],
        tables,
    });

    let anchor = match report.covariate_anchor {
        crate::emmeans::CovariateAnchor::TransformedMean => "the mean of each transformed covariate",
        crate::emmeans::CovariateAnchor::RawMean => "the transformed raw mean of each covariate",
    };
    for (focus, label) in focus_factors(report) {
        let mut tables = Vec::new();
        let mut m_levels = None;
        for m in &report.models {
            if let Some(f) = m.emmeans.iter().find(|f| f.summary.focus == focus) {
                m_levels = Some(f.summary.rows.len());
                tables.push((Some(m.title.clone()), emmeans_rows(&label, &f.summary)));
            }
        }
        let confidence = format_significant(100.0 * (1.0 - report.alpha), 4);
        out.push(Section {
            title: format!("{}% CIs of marginal means by {label}", confidence.trim_end_matches('0').trim_end_matches('.')),
            lines: vec![format!(
                "Sidak-adjusted over {} levels; original response scale; {} weights over the other factors; covariates at {anchor}. Levels sharing a letter have overlapping intervals.",
                m_levels.unwrap_or(0),
                report.emmeans_weighting
            )],
            tables,
        });
    }
    out
}

fn plain(report: &AuditReport) -> String {
    let mut s = String::new();
    for (i, sec) in sections(report).iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        s.push_str(&sec.title);
        s.push('\n');
        s.push_str(&"=".repeat(sec.title.chars().count()));
        s.push('\n');
        for l in &sec.lines {
            s.push_str(l);
            s.push('\n');
        }
        for (sub, t) in &sec.tables {
            s.push('\n');
            if let Some(sub) = sub {
                s.push_str(sub);
                s.push('\n');
            }
            s.push_str(&t.plain());
        }
    }
    s
}

fn markdown(report: &AuditReport) -> String {
    let mut s = String::new();
    for (i, sec) in sections(report).iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        s.push_str(&format!("{} {}\n", if i == 0 { "#" } else { "##" }, sec.title));
        if !sec.lines.is_empty() {
            s.push('\n');
        }
        for l in &sec.lines {
            s.push_str(&format!("{l}  \n"));
        }
        for (sub, t) in &sec.tables {
            s.push('\n');
            if let Some(sub) = sub {
                s.push_str(&format!("### {sub}\n\n"));
            }
            s.push_str(&t.markdown());
        }
    }
    s
}

fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn delimited(report: &AuditReport, delimiter: u8) -> Result<Vec<Document>, ReportError> {
    let ext = if delimiter == b'\t' { "tsv" } else { "csv" };
    let mut docs = Vec::new();

    let mut anova = Table::new(["Model", "Exp. Variable", "Df", "F-value", "P-value", "Significance"]);
    for m in &report.models {
        for r in anova_table(m).rows {
            anova.push(std::iter::once(m.name.clone()).chain(r).collect());
        }
    }
    docs.push(Document { name: format!("anova.{ext}"), content: anova.delimited(delimiter)? });

    for (focus, label) in focus_factors(report) {
        let mut t = Table::new(["Model", label.as_str(), "Emmean", "Lower CL", "Upper CL", "CIs"]);
        for m in &report.models {
            if let Some(f) = m.emmeans.iter().find(|f| f.summary.focus == focus) {
                for r in emmeans_rows(&label, &f.summary).rows {
                    t.push(std::iter::once(m.name.clone()).chain(r).collect());
                }
            }
        }
        docs.push(Document { name: format!("emmeans_{}.{ext}", file_stem(&focus)), content: t.delimited(delimiter)? });
    }

    let mut models = Table::new([
        "Model",
        "N",
        "Residual Df",
        "Lambda",
        "R-squared",
        "Residual skewness",
        "Residual excess kurtosis",
    ]);
    for m in &report.models {
        models.push(vec![
            m.name.clone(),
            m.nobs.to_string(),
            m.df_residual.to_string(),
            num(m.lambda),
            num(m.r_squared),
            num(m.residual_skewness),
            num(m.residual_excess_kurtosis),
        ]);
    }
    docs.push(Document { name: format!("models.{ext}"), content: models.delimited(delimiter)? });
    Ok(docs)
}

/// Renders `report` in one format. Output depends only on the report.
pub fn render_tables(report: &AuditReport, format: Format, delimiter: u8) -> Result<Vec<Document>, ReportError> {
    Ok(match format {
        Format::Plain => vec![Document { name: "report.txt".into(), content: plain(report) }],
        Format::Markdown => vec![Document { name: "report.md".into(), content: markdown(report) }],
        Format::Delimited => delimited(report, delimiter)?,
        Format::Json => vec![Document {
            name: "report.json".into(),
            content: serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        }],
    })
}
