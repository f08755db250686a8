//! Parsing for the sweep and ratio CSV schemas, with row/column
//! diagnostics on malformed input.

use blade::bench::SWEEP_CSV_HEADER;

/// One successfully-measured sweep row (error rows are skipped).
#[derive(Clone, Debug)]
pub struct SweepRecord {
    pub problem: String,
    pub variant: String,
    pub schedule: String,
    pub n: usize,
    pub clients: u32,
    pub mean_generations: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub mean_total_evals: f64,
}

pub const RATIO_CSV_HEADER: &str = "problem,variant,schedule,n,clients,ratio";

#[derive(Clone, Debug)]
pub struct RatioRecord {
    pub variant: String,
    pub n: usize,
    pub clients: u32,
    pub ratio: f64,
}

fn field<'a>(fields: &[&'a str], row: usize, col: usize, name: &str) -> Result<&'a str, String> {
    fields
        .get(col)
        .copied()
        .ok_or_else(|| format!("row {row}: missing column {} ({name})", col + 1))
}

fn parse_field<T: std::str::FromStr>(
    fields: &[&str],
    row: usize,
    col: usize,
    name: &str,
) -> Result<T, String> {
    let raw = field(fields, row, col, name)?;
    raw.parse().map_err(|_| {
        format!(
            "row {row}, column {} ({name}): cannot parse '{raw}'",
            col + 1
        )
    })
}

/// Parse sweep-schema CSV text. Rows whose stats column carries an
/// `ERROR:` marker are skipped (they have no data to plot). Any other
/// malformed content is an error naming the row and column.
pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRecord>, String> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == SWEEP_CSV_HEADER => {}
        Some((_, header)) => {
            return Err(format!(
                "row 1: header mismatch: expected '{SWEEP_CSV_HEADER}', got '{}'",
                header.trim()
            ))
        }
        None => return Err("empty input".into()),
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let row = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 12 {
            return Err(format!("row {row}: expected 12 columns, got {}", fields.len()));
        }
        if fields[6].starts_with("ERROR:") {
            continue;
        }
        // columns the consumers never read are still validated
        let _: u32 = parse_field(&fields, row, 5, "runs")?;
        let _: u32 = parse_field(&fields, row, 10, "nonconverged")?;
        let _: u64 = parse_field(&fields, row, 11, "seed")?;
        records.push(SweepRecord {
            problem: field(&fields, row, 0, "problem")?.to_string(),
            variant: field(&fields, row, 1, "variant")?.to_string(),
            schedule: field(&fields, row, 2, "schedule")?.to_string(),
            n: parse_field(&fields, row, 3, "n")?,
            clients: parse_field(&fields, row, 4, "clients")?,
            mean_generations: parse_field(&fields, row, 6, "mean_generations")?,
            ci95_low: parse_field(&fields, row, 7, "ci95_low")?,
            ci95_high: parse_field(&fields, row, 8, "ci95_high")?,
            mean_total_evals: parse_field(&fields, row, 9, "mean_total_evals")?,
        });
    }
    Ok(records)
}

pub fn parse_ratio_csv(text: &str) -> Result<Vec<RatioRecord>, String> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == RATIO_CSV_HEADER => {}
        Some((_, header)) => {
            return Err(format!(
                "row 1: header mismatch: expected '{RATIO_CSV_HEADER}', got '{}'",
                header.trim()
            ))
        }
        None => return Err("empty input".into()),
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let row = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(format!("row {row}: expected 6 columns, got {}", fields.len()));
        }
        field(&fields, row, 0, "problem")?;
        field(&fields, row, 2, "schedule")?;
        records.push(RatioRecord {
            variant: field(&fields, row, 1, "variant")?.to_string(),
            n: parse_field(&fields, row, 3, "n")?,
            clients: parse_field(&fields, row, 4, "clients")?,
            ratio: parse_field(&fields, row, 5, "ratio")?,
        });
    }
    Ok(records)
}
