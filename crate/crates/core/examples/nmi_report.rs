//! MI and the six NMI variants of a contingency table.
//!
//! Rows are separated by `/`, cells by `,`:
//!
//! ```text
//! cargo run --example nmi_report -- "30,5,1/2,20,9"
//! ```

use gendermi::info::{nmi_report, ContingencyTable, NmiValue};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let arg = std::env::args().nth(1).unwrap_or_else(|| "40,10,6,2/8,30,4,12".into());
    let rows = arg
        .split('/')
        .map(|row| row.split(',').map(|c| c.trim().parse::<u64>()).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let table = ContingencyTable::from_rows(rows)?;
    let report = nmi_report(&table);

    println!("{} x {} table, {} observations", table.n_rows(), table.n_cols(), table.total());
    println!("MI      {:.6} bits", report.mi);
    println!("H(row)  {:.6}", report.h_row);
    println!("H(col)  {:.6}", report.h_col);
    for (normalizer, value) in &report.values {
        match value {
            NmiValue::Defined(v) => println!("{:<11} {v:.6}", normalizer.to_string()),
            NmiValue::Undefined(_) => println!("{:<11} undefined", normalizer.to_string()),
        }
    }
    Ok(())
}
