//! CSV input and output. Files are UTF-8, comma separated, with a header
//! row and `.` as the decimal separator.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Snap(#[from] snap::Error),
}

impl CliError {
    /// 1 for unreadable or unwritable files, 2 for bad arguments or data the
    /// requested operation cannot accept.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Csv { .. } => 1,
            CliError::Invalid(_) | CliError::Snap(_) => 2,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Numeric table with its header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn csv_error(path: &Path, message: impl ToString) -> CliError {
    CliError::Csv {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Reads a rectangular numeric CSV file. `-` reads standard input.
pub fn read_table(path: &Path) -> CliResult<Table> {
    let mut text = String::new();
    if path == Path::new("-") {
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::io(path, e))?;
    } else {
        text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    }
    parse_table(&text, path)
}

pub fn parse_table(text: &str, path: &Path) -> CliResult<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    csv_error(path, format!("row {}: `{field}` is not a number", line + 1))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(csv_error(path, "no data rows"));
    }
    Ok(Table { header, rows })
}

/// Rows as permutations; every value must be a non-negative integer.
pub fn table_to_rankings(table: &Table) -> CliResult<Vec<Vec<usize>>> {
    table
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|&v| {
                    if v >= 0.0 && v.fract() == 0.0 {
                        Ok(v as usize)
                    } else {
                        Err(CliError::Invalid(format!(
                            "ranking entry {v} is not an index"
                        )))
                    }
                })
                .collect()
        })
        .collect()
}

/// The single column of a one-column table.
pub fn table_to_series(table: &Table) -> CliResult<Vec<f64>> {
    if table.header.len() != 1 {
        return Err(CliError::Invalid(format!(
            "expected one column, found {}",
            table.header.len()
        )));
    }
    Ok(table.rows.iter().map(|r| r[0]).collect())
}

/// Serialized CSV text with a header row.
pub fn csv_string<S: AsRef<str>>(header: &[S], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header.iter().map(|h| h.as_ref()))
        .expect("writing to memory");
    for row in rows {
        w.write_record(row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is UTF-8")
}

pub fn numeric_csv<S: AsRef<str>>(header: &[S], rows: &[Vec<f64>]) -> String {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| r.iter().map(|v| v.to_string()).collect())
        .collect();
    csv_string(header, &rows)
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Writes to `dir/name` when a directory is given, otherwise to stdout.
pub fn emit(dir: Option<&Path>, name: &str, contents: &str) -> CliResult<Option<PathBuf>> {
    match dir {
        Some(dir) => {
            let path = dir.join(name);
            write_file(&path, contents)?;
            Ok(Some(path))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
            Ok(None)
        }
    }
}
