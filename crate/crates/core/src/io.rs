//! State files and report writers.
//!
//! A state file is a JSON object
//!
//! ```json
//! {"dims": [2, 2, 2], "matrix": [[[0.5, 0.0], [0.0, 0.0], ...], ...]}
//! ```
//!
//! with the density matrix stored row-major as `[re, im]` pairs. Row `(a·dB + b)·dC + c`
//! corresponds to the basis vector `|a⟩⊗|b⟩⊗|c⟩`. Floats are written in shortest
//! round-trip form and parsed with exact rounding, so a write/read cycle
//! reproduces every bit.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::entropy::{Dims, TripartiteState};
use crate::error::{Error, Result};
use crate::lab::DeficitRecord;
use crate::linalg::CMatrix;

pub const FORMAT_VERSION: u32 = 1;

/// Serde adapter for complex matrices as nested `[[ [re, im], ... ], ...]` rows.
pub mod complex_matrix {
    use serde::de::Error as _;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::{c64, CMatrix};

    struct Row<'a>(&'a CMatrix, usize);

    impl Serialize for Row<'_> {
        fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
            let mut seq = serializer.serialize_seq(Some(self.0.ncols()))?;
            for j in 0..self.0.ncols() {
                let z = self.0[(self.1, j)];
                seq.serialize_element(&[z.re, z.im])?;
            }
            seq.end()
        }
    }

    pub fn serialize<S: Serializer>(m: &CMatrix, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(m.nrows()))?;
        for i in 0..m.nrows() {
            seq.serialize_element(&Row(m, i))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(deserializer)?;
        if rows.is_empty() || rows[0].is_empty() {
            return Err(D::Error::custom("matrix must have at least one row and column"));
        }
        let ncols = rows[0].len();
        if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
            return Err(D::Error::custom(format!(
                "row {i} has {} entries, expected {ncols}",
                rows[i].len()
            )));
        }
        Ok(CMatrix::from_fn(rows.len(), ncols, |i, j| c64(rows[i][j][0], rows[i][j][1])))
    }
}

/// On-disk form of a tripartite state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dims: Dims,
    #[serde(with = "complex_matrix")]
    pub matrix: CMatrix,
}

impl StateFile {
    pub fn from_state(s: &TripartiteState) -> Self {
        StateFile {
            dims: s.dims(),
            matrix: s.rho().clone(),
        }
    }

    pub fn into_state(self) -> Result<TripartiteState> {
        TripartiteState::new(self.matrix, self.dims)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// One matrix row per line.
    pub fn to_json(&self) -> String {
        let mut out = format!("{{\n  \"dims\": {},\n  \"matrix\": [\n", serde_json::to_string(&self.dims).unwrap());
        let n = self.matrix.nrows();
        for i in 0..n {
            let row: Vec<[f64; 2]> = (0..self.matrix.ncols())
                .map(|j| [self.matrix[(i, j)].re, self.matrix[(i, j)].im])
                .collect();
            out.push_str("    ");
            out.push_str(&serde_json::to_string(&row).unwrap());
            out.push_str(if i + 1 < n { ",\n" } else { "\n" });
        }
        out.push_str("  ]\n}\n");
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }
}

pub fn read_state(path: &Path) -> Result<TripartiteState> {
    StateFile::read(path)?.into_state()
}

pub const CSV_COLUMNS: [&str; 8] = [
    "state_id",
    "cmi",
    "dist_mm",
    "dist_mdm",
    "comm_norm",
    "deficit_conj",
    "deficit_comm",
    "class_label",
];

pub fn csv_row(r: &DeficitRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        r.state_id, r.cmi, r.dist_mm, r.dist_mdm, r.comm_norm, r.deficit_conj, r.deficit_comm, r.class_label
    )
}

pub fn write_csv<W: Write>(mut w: W, records: &[DeficitRecord]) -> Result<()> {
    writeln!(w, "{}", CSV_COLUMNS.join(","))?;
    for r in records {
        writeln!(w, "{}", csv_row(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Header line followed by one record per line.
pub fn write_jsonl<W: Write, H: Serialize>(mut w: W, header: &H, records: &[DeficitRecord]) -> Result<()> {
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn create_file(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Byte offset to 1-based line and column.
pub(crate) fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, column)
}

pub(crate) fn parse_error(text: &str, offset: Option<usize>, message: String) -> Error {
    let (line, column) = offset.map_or((0, 0), |o| line_col(text, o));
    Error::Parse { line, column, message }
}
