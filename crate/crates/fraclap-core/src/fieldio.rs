//! Field file formats.
//!
//! The `.field` format is a JSON document
//! `{dims, box_lengths, dtype: "c128", layout: "row-major", ...}` carrying
//! the samples either inline (`data_base64`: little-endian interleaved re/im
//! f64 pairs, base64) or in a sibling raw file (`data_file`). A plain CSV
//! mode (one row per sample: index tuple, re, im) is provided for small
//! grids.

use crate::error::{Error, Result};
use crate::grid::PeriodicField;
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
struct FieldHeader {
    dims: Vec<usize>,
    box_lengths: Vec<f64>,
    dtype: String,
    layout: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    data_base64: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    data_file: Option<String>,
}

fn values_to_bytes(values: &[Complex64]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(values.len() * 16);
    for v in values {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    bytes
}

fn bytes_to_values(bytes: &[u8]) -> Result<Vec<Complex64>> {
    if bytes.len() % 16 != 0 {
        return Err(Error::Format(format!(
            "field payload length {} is not a multiple of 16 (re/im f64 pairs)",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect())
}

/// Write a field as JSON. With `inline` the payload is base64 inside the
/// document; otherwise it goes to `<path>.bin` referenced by the header.
pub fn write_field(path: &Path, field: &PeriodicField, inline: bool) -> Result<()> {
    let bytes = values_to_bytes(field.values());
    let header = if inline {
        FieldHeader {
            dims: field.dims().to_vec(),
            box_lengths: field.box_lengths().to_vec(),
            dtype: "c128".into(),
            layout: "row-major".into(),
            data_base64: Some(B64.encode(&bytes)),
            data_file: None,
        }
    } else {
        let bin_name = format!(
            "{}.bin",
            path.file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "field".into())
        );
        let bin_path = path.with_file_name(&bin_name);
        let mut f = std::fs::File::create(&bin_path)?;
        f.write_all(&bytes)?;
        FieldHeader {
            dims: field.dims().to_vec(),
            box_lengths: field.box_lengths().to_vec(),
            dtype: "c128".into(),
            layout: "row-major".into(),
            data_base64: None,
            data_file: Some(bin_name),
        }
    };
    let json = serde_json::to_string_pretty(&header)
        .map_err(|e| Error::Format(format!("field header encode: {e}")))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<PeriodicField> {
    let text = std::fs::read_to_string(path)?;
    let header: FieldHeader =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("field header: {e}")))?;
    if header.dtype != "c128" {
        return Err(Error::Format(format!(
            "unsupported dtype {:?} (only c128)",
            header.dtype
        )));
    }
    if header.layout != "row-major" {
        return Err(Error::Format(format!(
            "unsupported layout {:?} (only row-major)",
            header.layout
        )));
    }
    let bytes = match (&header.data_base64, &header.data_file) {
        (Some(b64), _) => B64
            .decode(b64)
            .map_err(|e| Error::Format(format!("field base64: {e}")))?,
        (None, Some(name)) => {
            let bin_path = path.with_file_name(name);
            let mut buf = Vec::new();
            std::fs::File::open(&bin_path)?.read_to_end(&mut buf)?;
            buf
        }
        (None, None) => {
            return Err(Error::Format(
                "field header carries neither data_base64 nor data_file".into(),
            ))
        }
    };
    PeriodicField::new(header.dims, header.box_lengths, bytes_to_values(&bytes)?)
}

/// CSV mode for small grids: a header row `# dims=..;box_lengths=..`, then
/// one row per sample: the index tuple, re, im.
pub fn write_field_csv(path: &Path, field: &PeriodicField) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!(
        "# dims={};box_lengths={}\n",
        field
            .dims()
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("x"),
        field
            .box_lengths()
            .iter()
            .map(|l| format!("{l:.17e}"))
            .collect::<Vec<_>>()
            .join("x")
    ));
    let nd = field.ndim();
    let mut idx = vec![0usize; nd];
    for (flat, v) in field.values().iter().enumerate() {
        field.unravel(flat, &mut idx);
        for i in &idx {
            out.push_str(&format!("{i},"));
        }
        out.push_str(&format!("{:.17e},{:.17e}\n", v.re, v.im));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_field_csv(path: &Path) -> Result<PeriodicField> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty field CSV".into()))?;
    let header = header
        .strip_prefix("# ")
        .ok_or_else(|| Error::Format("field CSV must start with '# dims=..'".into()))?;
    let mut dims = Vec::new();
    let mut ls = Vec::new();
    for part in header.split(';') {
        if let Some(d) = part.strip_prefix("dims=") {
            dims = d
                .split('x')
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("field CSV dims: {e}")))?;
        } else if let Some(l) = part.strip_prefix("box_lengths=") {
            ls = l
                .split('x')
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("field CSV box_lengths: {e}")))?;
        }
    }
    let total: usize = dims.iter().product();
    let mut values = vec![Complex64::default(); total];
    let nd = dims.len();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != nd + 2 {
            return Err(Error::Format(format!(
                "field CSV line {}: expected {} columns, got {}",
                lineno + 2,
                nd + 2,
                cols.len()
            )));
        }
        let mut flat = 0usize;
        for a in 0..nd {
            let i: usize = cols[a]
                .parse()
                .map_err(|e| Error::Format(format!("field CSV line {}: {e}", lineno + 2)))?;
            if i >= dims[a] {
                return Err(Error::Format(format!(
                    "field CSV line {}: index {i} out of range",
                    lineno + 2
                )));
            }
            flat = flat * dims[a] + i;
        }
        let re: f64 = cols[nd]
            .parse()
            .map_err(|e| Error::Format(format!("field CSV line {}: {e}", lineno + 2)))?;
        let im: f64 = cols[nd + 1]
            .parse()
            .map_err(|e| Error::Format(format!("field CSV line {}: {e}", lineno + 2)))?;
        values[flat] = Complex64::new(re, im);
    }
    PeriodicField::new(dims, ls, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_field() -> PeriodicField {
        PeriodicField::from_fn(vec![4, 3], vec![1.0, 2.5], |y| {
            Complex64::new(y[0] + 0.1, y[1] - 0.2)
        })
        .unwrap()
    }

    #[test]
    fn json_roundtrip_inline_and_sidecar() {
        let dir = std::env::temp_dir().join(format!("fraclap-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let f = sample_field();
        for inline in [true, false] {
            let p = dir.join(if inline { "a.field" } else { "b.field" });
            write_field(&p, &f, inline).unwrap();
            let g = read_field(&p).unwrap();
            assert_eq!(f, g);
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn csv_roundtrip(seed in 0u64..100) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let f = PeriodicField::from_fn(vec![3, 5], vec![1.0, 0.5], |_| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            }).unwrap();
            let dir = std::env::temp_dir().join(format!("fraclap-csv-{}-{seed}", std::process::id()));
            std::fs::create_dir_all(&dir).unwrap();
            let p = dir.join("f.csv");
            write_field_csv(&p, &f).unwrap();
            let g = read_field_csv(&p).unwrap();
            prop_assert_eq!(f, g);
            std::fs::remove_dir_all(&dir).ok();
        }
    }

    #[test]
    fn malformed_inputs_are_format_errors() {
        let dir = std::env::temp_dir().join(format!("fraclap-bad-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("bad.field");
        std::fs::write(&p, "{\"dims\": [4]}").unwrap();
        assert!(read_field(&p).is_err());
        std::fs::write(
            &p,
            "{\"dims\":[2],\"box_lengths\":[1.0],\"dtype\":\"f32\",\"layout\":\"row-major\"}",
        )
        .unwrap();
        assert!(read_field(&p).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
