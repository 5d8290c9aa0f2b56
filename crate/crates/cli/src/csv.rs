use std::fmt::Write as _;
use std::path::Path;

use crate::error::CliError;
use crate::run::Table;

/// Seventeen significant digits round-trip every `f64`.
fn number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn to_csv(t: &Table) -> String {
    let mut out = t.columns.join(",");
    out.push('\n');
    for row in &t.rows {
        let cells: Vec<String> = row.iter().map(|&x| number(x)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

pub fn emit_csv(t: &Table, path: &Path) -> Result<(), CliError> {
    std::fs::write(path, to_csv(t)).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// Gnuplot script plotting every column against the first.
pub fn gnuplot_script(t: &Table, csv_name: &str) -> String {
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\nset xlabel '");
    s.push_str(&t.columns[0]);
    s.push_str("'\nplot ");
    let series: Vec<String> = (2..=t.columns.len()).map(|c| format!("'{csv_name}' using 1:{c} with lines")).collect();
    s.push_str(&series.join(", \\\n     "));
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_survive_a_text_round_trip() {
        let t = Table { columns: vec!["t".into(), "x".into()], rows: vec![vec![0.1, 1.0 / 3.0], vec![2.0, f64::NAN]] };
        let csv = to_csv(&t);
        assert!(csv.starts_with("t,x\n"));
        assert!(!csv.contains('\r'));
        let second: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(second[1].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert!(csv.lines().nth(2).unwrap().ends_with(",nan"));
    }

    #[test]
    fn script_names_every_series() {
        let t = Table { columns: vec!["t".into(), "a".into(), "b".into()], rows: vec![] };
        let s = gnuplot_script(&t, "out.csv");
        assert!(s.contains("using 1:2") && s.contains("using 1:3"));
    }
}
