//! Field files: `SWF1` binary (16-byte header, little-endian `f32`,
//! row-major interior samples, one field after another) and a plain CSV
//! form with one `i,j,<field>...` row per cell.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Field, SimState};
use crate::num::Real;

pub const MAGIC: &[u8; 4] = b"SWF1";

/// Interior samples of one or more equally sized fields.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSet {
    pub nx: usize,
    pub ny: usize,
    pub names: Vec<String>,
    pub fields: Vec<Vec<f32>>,
}

impl FieldSet {
    pub fn new(nx: usize, ny: usize, names: Vec<String>, fields: Vec<Vec<f32>>) -> Result<Self> {
        if names.len() != fields.len() {
            return Err(Error::Dimension(format!(
                "{} names for {} fields",
                names.len(),
                fields.len()
            )));
        }
        if let Some(f) = fields.iter().find(|f| f.len() != nx * ny) {
            return Err(Error::Dimension(format!(
                "field of {} samples, expected {nx}x{ny}",
                f.len()
            )));
        }
        Ok(Self {
            nx,
            ny,
            names,
            fields,
        })
    }

    pub fn from_state<T: Real>(state: &SimState<T>) -> Self {
        let g = state.geometry;
        let cast = |f: &Field<T>| {
            f.interior()
                .into_iter()
                .map(|v| v.as_f64() as f32)
                .collect()
        };
        Self {
            nx: g.nx,
            ny: g.ny,
            names: vec!["eta".into(), "hu".into(), "hv".into()],
            fields: vec![cast(&state.eta), cast(&state.hu), cast(&state.hv)],
        }
    }

    pub fn field(&self, name: &str) -> Option<&[f32]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|k| self.fields[k].as_slice())
    }

    /// Field `k` with the given halo (ghosts zero), converted to `T`.
    pub fn to_field<T: Real>(&self, k: usize, halo: usize) -> Result<Field<T>> {
        let data: Vec<T> = self.fields[k].iter().map(|&v| T::lit(v as f64)).collect();
        Field::from_interior(self.nx, self.ny, halo, &data)
    }
}

pub fn write_swf(mut w: impl Write, set: &FieldSet) -> Result<()> {
    w.write_all(MAGIC)?;
    for v in [set.nx, set.ny, set.fields.len()] {
        let v = u32::try_from(v)
            .map_err(|_| Error::Dimension(format!("{v} does not fit the header")))?;
        w.write_all(&v.to_le_bytes())?;
    }
    for f in &set.fields {
        for v in f {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_swf(mut r: impl Read) -> Result<FieldSet> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)
        .map_err(|_| Error::Dimension("truncated SWF1 header".into()))?;
    if &header[..4] != MAGIC {
        return Err(Error::Dimension("missing SWF1 magic".into()));
    }
    let word = |k: usize| u32::from_le_bytes(header[4 * k..4 * k + 4].try_into().unwrap()) as usize;
    let (nx, ny, nfields) = (word(1), word(2), word(3));
    if nx == 0 || ny == 0 {
        return Err(Error::Dimension(format!("empty grid {nx}x{ny}")));
    }
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 4 * nx * ny * nfields {
        return Err(Error::Dimension(format!(
            "{} data bytes, expected {}",
            bytes.len(),
            4 * nx * ny * nfields
        )));
    }
    let fields = bytes
        .chunks_exact(4 * nx * ny)
        .map(|c| {
            c.chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect()
        })
        .collect();
    let names = (0..nfields).map(default_name).collect();
    Ok(FieldSet {
        nx,
        ny,
        names,
        fields,
    })
}

fn default_name(k: usize) -> String {
    match k {
        0 => "eta".into(),
        1 => "hu".into(),
        2 => "hv".into(),
        _ => format!("field{k}"),
    }
}

pub fn write_csv(w: impl Write, set: &FieldSet) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["i".to_string(), "j".to_string()];
    header.extend(set.names.iter().cloned());
    out.write_record(&header)?;
    for j in 0..set.ny {
        for i in 0..set.nx {
            let mut row = vec![i.to_string(), j.to_string()];
            // `{:?}` prints the shortest string that parses back to the same f32
            row.extend(
                set.fields
                    .iter()
                    .map(|f| format!("{:?}", f[j * set.nx + i])),
            );
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv(r: impl Read) -> Result<FieldSet> {
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    let header = rd.headers()?.clone();
    if header.len() < 3 || &header[0] != "i" || &header[1] != "j" {
        return Err(Error::Parse {
            line: 1,
            message: "expected header 'i,j,<field>...'".into(),
        });
    }
    let names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
    let mut rows = Vec::new();
    for (n, rec) in rd.records().enumerate() {
        let line = n + 2;
        let rec = rec?;
        let parse_err = |message: String| Error::Parse { line, message };
        if rec.len() != header.len() {
            return Err(parse_err(format!(
                "{} columns, expected {}",
                rec.len(),
                header.len()
            )));
        }
        let i: usize = rec[0]
            .parse()
            .map_err(|_| parse_err(format!("bad index '{}'", &rec[0])))?;
        let j: usize = rec[1]
            .parse()
            .map_err(|_| parse_err(format!("bad index '{}'", &rec[1])))?;
        let vals = rec
            .iter()
            .skip(2)
            .map(|s| {
                s.parse::<f32>()
                    .map_err(|_| parse_err(format!("bad value '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((i, j, vals));
    }
    let nx = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
    let ny = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
    if rows.len() != nx * ny || nx == 0 {
        return Err(Error::Dimension(format!(
            "{} rows do not cover a {nx}x{ny} grid",
            rows.len()
        )));
    }
    let mut fields = vec![vec![f32::NAN; nx * ny]; names.len()];
    let mut seen = vec![false; nx * ny];
    for (i, j, vals) in rows {
        let at = j * nx + i;
        if std::mem::replace(&mut seen[at], true) {
            return Err(Error::Dimension(format!("cell ({i}, {j}) listed twice")));
        }
        for (f, v) in fields.iter_mut().zip(vals) {
            f[at] = v;
        }
    }
    Ok(FieldSet {
        nx,
        ny,
        names,
        fields,
    })
}

/// Reads either format, recognising `SWF1` by its magic bytes.
pub fn read_fields(path: &Path) -> Result<FieldSet> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.starts_with(MAGIC) {
        read_swf(bytes.as_slice())
    } else {
        read_csv(bytes.as_slice())
    }
}

/// Writes CSV for a `.csv` extension and `SWF1` otherwise.
pub fn write_fields(path: &Path, set: &FieldSet) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        write_csv(w, set)
    } else {
        write_swf(w, set)
    }
}
