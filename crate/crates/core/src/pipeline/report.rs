use crate::extract::Animacy;

use super::{AnalysisResult, CellOutcome, Variable};

fn to_string(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is UTF-8")
}

/// Token and type counts per (animacy class, variable).
pub fn emit_counts(result: &AnalysisResult) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["animacy", "variable", "status", "tokens", "types", "noun_types", "partner_types"])
        .expect("in-memory write");
    for cell in &result.cells {
        let status = if cell.is_na() { "N/A" } else { "ok" };
        let c = &cell.counts;
        w.write_record([
            cell.animacy.as_str().to_string(),
            cell.variable.to_string(),
            status.to_string(),
            c.tokens.to_string(),
            c.types.to_string(),
            c.noun_types.to_string(),
            c.partner_types.to_string(),
        ])
        .expect("in-memory write");
    }
    to_string(w)
}

/// Display form of an MI value: four decimals, `< 0.001` below that, and
/// `**…**` around significant values.
pub fn render_mi(mi: f64, significant: bool) -> String {
    let text = if mi < 0.001 { "< 0.001".to_string() } else { format!("{mi:.4}") };
    if significant {
        format!("**{text}**")
    } else {
        text
    }
}

/// One row per variable, with MI, both p-values and the rendered value for
/// each selected animacy class.
pub fn emit_mi_table(result: &AnalysisResult) -> String {
    let classes: Vec<Animacy> = [Animacy::Inanimate, Animacy::Animate]
        .into_iter()
        .filter(|c| result.settings.animacy.contains(c))
        .collect();
    let mut variables: Vec<Variable> = result.cells.iter().map(|c| c.variable).collect();
    variables.sort();
    variables.dedup();

    let mut header = vec!["variable".to_string()];
    for class in &classes {
        for col in ["mi", "p_paper", "p_conservative", "significant", "display"] {
            header.push(format!("{class}_{col}"));
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for variable in variables {
        let mut row = vec![variable.to_string()];
        for &class in &classes {
            match result.cell(class, variable).map(|c| &c.outcome) {
                Some(CellOutcome::Analyzed { test, .. }) => row.extend([
                    format!("{:.6}", test.observed_mi),
                    format!("{:.4}", test.p_paper),
                    format!("{:.4}", test.p_conservative),
                    test.significant.to_string(),
                    render_mi(test.observed_mi, test.significant),
                ]),
                _ => row.extend(["N/A"; 5].map(String::from)),
            }
        }
        w.write_record(&row).expect("in-memory write");
    }
    to_string(w)
}
