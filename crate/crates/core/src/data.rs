//! Regression data: response vector and design matrix.

use crate::error::{Error, Result};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::{DMatrix, DVector};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Magic bytes of the binary dataset container.
pub const BINARY_MAGIC: &[u8; 4] = b"ESB1";

/// A fixed regression instance: `y` (length n) and design `X` (n x p).
///
/// Immutable after construction and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: DVector<f64>,
    x: DMatrix<f64>,
}

impl Dataset {
    /// Validates shapes and finiteness: `n >= 1`, `p >= 1`, no NaN/inf.
    pub fn new(y: DVector<f64>, x: DMatrix<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::InvalidData("empty response vector".into()));
        }
        if x.ncols() == 0 {
            return Err(Error::InvalidData("design matrix has no columns".into()));
        }
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "design has {} rows but response has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite entry in response".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite entry in design".into()));
        }
        Ok(Dataset { y, x })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn column(&self, j: usize) -> nalgebra::DVectorView<'_, f64> {
        self.x.column(j)
    }

    /// Squared Euclidean norms of all design columns.
    pub fn column_norms_squared(&self) -> Vec<f64> {
        (0..self.p()).map(|j| self.x.column(j).norm_squared()).collect()
    }

    /// Reads the CSV layout: header row, first column the response, the
    /// remaining columns the design. Errors name the offending row.
    pub fn from_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let width = rdr
            .headers()
            .map_err(|e| Error::InvalidData(format!("bad CSV header: {e}")))?
            .len();
        if width < 2 {
            return Err(Error::InvalidData(
                "CSV needs a response column plus at least one design column".into(),
            ));
        }
        let p = width - 1;
        let mut ys = Vec::new();
        let mut rows: Vec<f64> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 2; // 1-based, counting the header line
            let rec = rec.map_err(|e| Error::InvalidData(format!("row {row}: {e}")))?;
            if rec.len() != width {
                return Err(Error::InvalidData(format!(
                    "row {row}: expected {width} fields, found {}",
                    rec.len()
                )));
            }
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::InvalidData(format!("row {row}: field {} is not a number", j + 1))
                })?;
                if j == 0 {
                    ys.push(v);
                } else {
                    rows.push(v);
                }
            }
        }
        if ys.is_empty() {
            return Err(Error::InvalidData("CSV contains no data rows".into()));
        }
        let n = ys.len();
        let x = DMatrix::from_row_slice(n, p, &rows);
        Dataset::new(DVector::from_vec(ys), x)
    }

    /// Reads the little-endian binary container: magic `ESB1`, `u64 n`,
    /// `u64 p`, then `n` response values followed by the design in
    /// row-major order, all `f64`.
    pub fn from_binary<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut r = BufReader::new(std::fs::File::open(path.as_ref())?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::InvalidData("bad magic, expected ESB1".into()));
        }
        let n = r.read_u64::<LittleEndian>()? as usize;
        let p = r.read_u64::<LittleEndian>()? as usize;
        if n == 0 || p == 0 {
            return Err(Error::InvalidData("binary header declares empty data".into()));
        }
        if (n as u128) * (p as u128) > 1u128 << 34 {
            return Err(Error::InvalidData("binary header declares oversized data".into()));
        }
        let mut y = DVector::zeros(n);
        for i in 0..n {
            y[i] = r.read_f64::<LittleEndian>()?;
        }
        let mut rows = vec![0f64; n * p];
        for v in rows.iter_mut() {
            *v = r.read_f64::<LittleEndian>()?;
        }
        Dataset::new(y, DMatrix::from_row_slice(n, p, &rows))
    }

    /// Writes the binary container described in [`Dataset::from_binary`].
    pub fn to_binary<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path.as_ref())?);
        w.write_all(BINARY_MAGIC)?;
        w.write_u64::<LittleEndian>(self.n() as u64)?;
        w.write_u64::<LittleEndian>(self.p() as u64)?;
        for i in 0..self.n() {
            w.write_f64::<LittleEndian>(self.y[i])?;
        }
        for i in 0..self.n() {
            for j in 0..self.p() {
                w.write_f64::<LittleEndian>(self.x[(i, j)])?;
            }
        }
        Ok(())
    }
}
