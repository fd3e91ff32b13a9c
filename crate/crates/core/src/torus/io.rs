//! Binary field files with a JSON sidecar.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic   b"KHSF"
//! u32     format version
//! u32     field kind (0 = potential, 1 = density, 2 = form)
//! u32     complex dimension n
//! u32     points per axis N
//! f64[]   payload, row-major over (x_1, y_1, …, x_n, y_n)
//! ```
//!
//! Scalars store one value per point. Forms store the full `n × n` matrix
//! per point, row-major, each entry as `(re, im)`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{pack, packed_len};
use super::{DensityField, FieldError, FormField, GridFunction, Result, TorusGrid};
use crate::algebra::HermitianMatrix;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"KHSF";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Potential,
    Density,
    Form,
}

impl FieldKind {
    fn code(self) -> u32 {
        match self {
            FieldKind::Potential => 0,
            FieldKind::Density => 1,
            FieldKind::Form => 2,
        }
    }

    fn from_code(c: u32) -> Result<Self> {
        match c {
            0 => Ok(FieldKind::Potential),
            1 => Ok(FieldKind::Density),
            2 => Ok(FieldKind::Form),
            other => Err(FieldError::Format(format!("unknown field kind {other}"))),
        }
    }
}

/// Contents of the JSON sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub format_version: u32,
    pub kind: FieldKind,
    pub n: usize,
    #[serde(rename = "N")]
    pub points_per_axis: usize,
    pub axis_order: Vec<String>,
    pub byte_order: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StoredField {
    Potential(GridFunction),
    Density(DensityField),
    Form(FormField),
}

impl StoredField {
    pub fn kind(&self) -> FieldKind {
        match self {
            StoredField::Potential(_) => FieldKind::Potential,
            StoredField::Density(_) => FieldKind::Density,
            StoredField::Form(_) => FieldKind::Form,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        match self {
            StoredField::Potential(f) => f.grid(),
            StoredField::Density(f) => f.grid(),
            StoredField::Form(f) => f.grid(),
        }
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

fn axis_names(n: usize) -> Vec<String> {
    (1..=n)
        .flat_map(|j| [format!("x{j}"), format!("y{j}")])
        .collect()
}

/// Writes `field` to `path` and its sidecar to `path` + `.json`.
/// Returns both paths.
pub fn write_field(
    path: &Path,
    field: &StoredField,
    attributes: BTreeMap<String, String>,
) -> Result<(PathBuf, PathBuf)> {
    let grid = field.grid();
    let n = grid.n();
    let mut buf = Vec::with_capacity(20 + 8 * grid.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&field.kind().code().to_le_bytes());
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.size() as u32).to_le_bytes());
    match field {
        StoredField::Potential(f) => f.values().iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes())),
        StoredField::Density(f) => f.values().iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes())),
        StoredField::Form(f) => {
            for i in 0..grid.len() {
                let m = f.at(i);
                for r in 0..n {
                    for c in 0..n {
                        let z = m.get(r, c);
                        buf.extend_from_slice(&z.re.to_le_bytes());
                        buf.extend_from_slice(&z.im.to_le_bytes());
                    }
                }
            }
        }
    }
    fs::File::create(path)?.write_all(&buf)?;

    let meta = FieldMeta {
        format_version: FORMAT_VERSION,
        kind: field.kind(),
        n,
        points_per_axis: grid.size(),
        axis_order: axis_names(n),
        byte_order: "little".into(),
        attributes,
    };
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(&meta)
        .map_err(|e| FieldError::Format(e.to_string()))?;
    fs::write(&side, json + "\n")?;
    Ok((path.to_path_buf(), side))
}

/// Reads a field written by [`write_field`]. The sidecar is optional but,
/// when present, must agree with the binary header.
pub fn read_field(path: &Path) -> Result<(StoredField, Option<FieldMeta>)> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 20 || &bytes[0..4] != MAGIC {
        return Err(FieldError::Format("missing magic header".into()));
    }
    let word = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = word(4);
    if version != FORMAT_VERSION {
        return Err(FieldError::Format(format!("unsupported version {version}")));
    }
    let kind = FieldKind::from_code(word(8))?;
    let n = word(12) as usize;
    let size = word(16) as usize;
    let grid = TorusGrid::new(n, size)?;
    let per_point = if kind == FieldKind::Form { 2 * n * n } else { 1 };
    let expected = 20 + 8 * per_point * grid.len();
    if bytes.len() != expected {
        return Err(FieldError::Format(format!(
            "payload is {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let floats: Vec<f64> = bytes[20..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let field = match kind {
        FieldKind::Potential => StoredField::Potential(GridFunction::new(grid, floats)?),
        FieldKind::Density => StoredField::Density(DensityField::signed(grid, floats)?),
        FieldKind::Form => {
            let pl = packed_len(n);
            let mut packed = vec![0.0; pl * grid.len()];
            for (i, slot) in packed.chunks_mut(pl).enumerate() {
                let entries: Vec<Complex64> = floats[i * 2 * n * n..(i + 1) * 2 * n * n]
                    .chunks_exact(2)
                    .map(|c| Complex64::new(c[0], c[1]))
                    .collect();
                let m = HermitianMatrix::from_rows(n, &entries)?;
                pack(&m, slot);
            }
            StoredField::Form(FormField::from_packed(grid, packed))
        }
    };

    let side = sidecar_path(path);
    let meta = if side.exists() {
        let meta: FieldMeta = serde_json::from_str(&fs::read_to_string(&side)?)
            .map_err(|e| FieldError::Format(format!("sidecar: {e}")))?;
        if meta.kind != kind || meta.n != n || meta.points_per_axis != size {
            return Err(FieldError::Format("sidecar disagrees with header".into()));
        }
        Some(meta)
    } else {
        None
    };
    Ok((field, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn potential_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = TorusGrid::new(2, 4).unwrap();
        let phi = GridFunction::from_fn(&g, |x| (2.0 * PI * x[0]).sin() / 3.0 + x[3]);
        let path = dir.path().join("phi.bin");
        let mut attrs = BTreeMap::new();
        attrs.insert("name".to_string(), "phi".to_string());
        write_field(&path, &StoredField::Potential(phi.clone()), attrs).unwrap();
        let (back, meta) = read_field(&path).unwrap();
        let StoredField::Potential(back) = back else { panic!() };
        assert!(back
            .values()
            .iter()
            .zip(phi.values())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        let meta = meta.unwrap();
        assert_eq!(meta.axis_order, vec!["x1", "y1", "x2", "y2"]);
        assert_eq!(meta.attributes["name"], "phi");
    }

    #[test]
    fn form_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = TorusGrid::new(2, 4).unwrap();
        let phi = GridFunction::from_fn(&g, |x| (2.0 * PI * (x[0] + x[3])).cos() / 7.0);
        let form = crate::torus::ddc(&phi);
        let path = dir.path().join("form.bin");
        write_field(&path, &StoredField::Form(form.clone()), BTreeMap::new()).unwrap();
        let (back, _) = read_field(&path).unwrap();
        let StoredField::Form(back) = back else { panic!() };
        let (a, b) = (form.packed(), back.packed());
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn rejects_truncated_payload() {
        let dir = tempfile::tempdir().unwrap();
        let g = TorusGrid::new(1, 4).unwrap();
        let path = dir.path().join("f.bin");
        write_field(
            &path,
            &StoredField::Density(DensityField::constant(&g, 1.0)),
            BTreeMap::new(),
        )
        .unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 8);
        fs::write(&path, bytes).unwrap();
        assert!(matches!(read_field(&path), Err(FieldError::Format(_))));
    }
}
