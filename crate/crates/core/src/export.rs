//! CSV series with a versioned header comment line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::measure::DiscreteMeasure;

pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Column sets of every exported series.
pub mod columns {
    pub const PARTITION: &[&str] = &["level", "label", "left", "right", "length"];
    pub const DENSITY: &[&str] = &["bin", "value"];
    pub const ATOMS: &[&str] = &["point", "weight"];
    pub const DK_SERIES: &[&str] = &["level", "q_n", "d_n", "uncertainty", "verdict"];
    pub const DENJOY_TABLE: &[&str] = &["n", "left", "right", "length"];
    pub const RESIDUALS: &[&str] = &["iteration", "residual"];
    pub const SIGMA: &[&str] = &["point", "n", "sigma"];
    pub const LEVEL_SERIES: &[&str] = &["level", "q_n", "value"];
    pub const RETURNS: &[&str] = &["q", "p", "signed_gap", "distance"];
    pub const PARTITION_SUMMARY: &[&str] = &[
        "level",
        "count",
        "expected",
        "covering_defect",
        "overlap_defect",
        "multiplicity_star",
        "multiplicity_double_star",
        "max_adjacent_ratio",
    ];
    pub const LYAPUNOV: &[&str] = &["point", "estimate", "bound"];
    pub const OMEGA: &[&str] = &[
        "level",
        "long_max",
        "long_min",
        "short_max",
        "short_min",
        "short_to_long_max",
        "b_hat",
        "skipped",
    ];
    pub const COBOUND: &[&str] = &["k", "q_k", "direct", "closed_form", "max_disagreement", "scaled"];
    pub const AGREEMENT: &[&str] = &["s", "q_n", "l1", "residual", "converged"];
}

/// `# circle-lab <kind> v<version> seed=<seed>` followed by the column header.
pub fn header(kind: &str, columns: &[&str], seed: u64) -> String {
    format!(
        "# circle-lab {kind} v{CSV_SCHEMA_VERSION} seed={seed}\n{}\n",
        columns.join(",")
    )
}

pub fn write_csv<W: Write, I: IntoIterator<Item = String>>(
    out: &mut W,
    kind: &str,
    columns: &[&str],
    seed: u64,
    rows: I,
) -> io::Result<()> {
    out.write_all(header(kind, columns, seed).as_bytes())?;
    for row in rows {
        out.write_all(row.as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_csv_file<I: IntoIterator<Item = String>>(
    path: &Path,
    kind: &str,
    columns: &[&str],
    seed: u64,
    rows: I,
) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_csv(&mut out, kind, columns, seed, rows)?;
    out.flush()
}

/// Rows `(bin, value)` for grids or `(point, weight)` for atomic measures.
pub fn measure_rows(measure: &DiscreteMeasure) -> (&'static [&'static str], Vec<String>) {
    match measure {
        DiscreteMeasure::Grid { values } => (
            columns::DENSITY,
            values
                .iter()
                .enumerate()
                .map(|(i, v)| format!("{i},{v:.17e}"))
                .collect(),
        ),
        DiscreteMeasure::Atomic { points, weights } => (
            columns::ATOMS,
            points
                .iter()
                .zip(weights)
                .map(|(x, w)| format!("{x:.17e},{w:.17e}"))
                .collect(),
        ),
    }
}
