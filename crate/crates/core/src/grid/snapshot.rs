//! Field snapshots: raw little-endian `f64` samples in row-major order plus a
//! sidecar text record with `n`, `N` and the field name.

use std::fs;
use std::path::{Path, PathBuf};

use super::{GridSpec, ScalarField};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DATA_EXT: &str = "f64";
pub const META_EXT: &str = "meta";

/// Writes `<dir>/<name>.f64` and `<dir>/<name>.meta`; returns the data path.
pub fn write_snapshot<T: Real>(dir: &Path, name: &str, field: &ScalarField<T>) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let data = dir.join(format!("{name}.{DATA_EXT}"));
    let meta = dir.join(format!("{name}.{META_EXT}"));
    let mut bytes = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        bytes.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    fs::write(&data, bytes).map_err(|e| Error::io(&data, e))?;
    let grid = field.grid();
    let text = format!(
        "n = {}\nN = {}\nname = {}\n",
        grid.complex_dim(),
        grid.points_per_axis(),
        name
    );
    fs::write(&meta, text).map_err(|e| Error::io(&meta, e))?;
    Ok(data)
}

/// Reads a snapshot given either the data path or the path without extension.
pub fn read_snapshot<T: Real>(path: &Path) -> Result<(String, ScalarField<T>)> {
    let data = if path.extension().and_then(|e| e.to_str()) == Some(DATA_EXT) {
        path.to_path_buf()
    } else {
        path.with_extension(DATA_EXT)
    };
    let meta = data.with_extension(META_EXT);
    let text = fs::read_to_string(&meta).map_err(|e| Error::io(&meta, e))?;

    let mut n = None;
    let mut points = None;
    let mut name = None;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Snapshot(format!("malformed metadata line {line:?}")))?;
        let value = value.trim();
        match key.trim() {
            "n" => n = value.parse::<usize>().ok(),
            "N" => points = value.parse::<usize>().ok(),
            "name" => name = Some(value.to_string()),
            other => return Err(Error::Snapshot(format!("unknown metadata key {other:?}"))),
        }
    }
    let (n, points, name) = match (n, points, name) {
        (Some(n), Some(p), Some(name)) => (n, p, name),
        _ => {
            return Err(Error::Snapshot(format!(
                "incomplete metadata in {}",
                meta.display()
            )))
        }
    };
    let grid = GridSpec::new(n, points)?;

    let bytes = fs::read(&data).map_err(|e| Error::io(&data, e))?;
    if bytes.len() != grid.len() * 8 {
        return Err(Error::Snapshot(format!(
            "{} holds {} bytes, expected {}",
            data.display(),
            bytes.len(),
            grid.len() * 8
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
        .collect();
    Ok((name, ScalarField::new(grid, values)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::new(1, 8).unwrap();
        let f = ScalarField::from_fn(grid, |x: &[f64; 4]| (x[0] * 7.3).sin() / 3.0 + x[1]);
        let path = write_snapshot(dir.path(), "F", &f).unwrap();
        let (name, g) = read_snapshot::<f64>(&path).unwrap();
        assert_eq!(name, "F");
        for (a, b) in f.values().iter().zip(g.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let (_, h) = read_snapshot::<f64>(&dir.path().join("F")).unwrap();
        assert_eq!(h.values(), f.values());
    }

    #[test]
    fn truncated_data_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::new(1, 8).unwrap();
        let path = write_snapshot(dir.path(), "u", &ScalarField::<f64>::zeros(grid)).unwrap();
        std::fs::write(&path, [0u8; 12]).unwrap();
        assert!(read_snapshot::<f64>(&path).is_err());
    }
}
