//! File formats: density CSV with JSON sidecar, and the flat binary
//! eigenvalue-sample format.

use crate::error::{Error, Result};
use crate::model::DensityCurve;
use crate::montecarlo::EigenvalueSample;
use std::io::{Read, Write};
use std::path::Path;

/// Write `x,density` CSV with 17 significant digits (lossless f64 round-trip).
pub fn write_density_csv(path: &Path, curve: &DensityCurve) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "x,density")?;
    for (x, v) in curve.grid.iter().zip(&curve.values) {
        writeln!(f, "{:.16e},{:.16e}", x, v)?;
    }
    Ok(())
}

pub fn read_density_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue; // header
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let x = parts
            .next()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::InvalidConfig(format!("bad CSV line {}", i + 1)))?;
        let v = parts
            .next()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::InvalidConfig(format!("bad CSV line {}", i + 1)))?;
        xs.push(x);
        vs.push(v);
    }
    Ok((xs, vs))
}

/// Write `<stem>.csv` plus a `<stem>.json` sidecar carrying the full curve
/// (method, spec echo, tolerances, error bars).
pub fn write_curve_with_sidecar(dir: &Path, stem: &str, curve: &DensityCurve) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_density_csv(&dir.join(format!("{stem}.csv")), curve)?;
    let json = serde_json::to_string_pretty(curve)?;
    std::fs::write(dir.join(format!("{stem}.json")), json)?;
    Ok(())
}

const SAMPLE_MAGIC: &[u8; 4] = b"WSPC";
const SAMPLE_VERSION: u8 = 1;

/// Header (32 bytes): magic, version, beta, p, n, padding, seed, count;
/// then `count` records of `p` little-endian f64 eigenvalues each.
pub struct SampleFileHeader {
    pub beta: u8,
    pub p: u16,
    pub n: u16,
    pub seed: u64,
    pub count: u64,
}

pub fn write_samples(
    path: &Path,
    header: &SampleFileHeader,
    samples: &[EigenvalueSample],
) -> Result<()> {
    debug_assert_eq!(header.count as usize, samples.len());
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut head = [0u8; 32];
    head[0..4].copy_from_slice(SAMPLE_MAGIC);
    head[4] = SAMPLE_VERSION;
    head[5] = header.beta;
    head[6..8].copy_from_slice(&header.p.to_le_bytes());
    head[8..10].copy_from_slice(&header.n.to_le_bytes());
    head[16..24].copy_from_slice(&header.seed.to_le_bytes());
    head[24..32].copy_from_slice(&header.count.to_le_bytes());
    f.write_all(&head)?;
    for s in samples {
        for &v in &s.values {
            f.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_samples(path: &Path) -> Result<(SampleFileHeader, Vec<EigenvalueSample>)> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut head = [0u8; 32];
    f.read_exact(&mut head)?;
    if &head[0..4] != SAMPLE_MAGIC {
        return Err(Error::InvalidConfig("not a sample file (bad magic)".into()));
    }
    if head[4] != SAMPLE_VERSION {
        return Err(Error::InvalidConfig(format!(
            "unsupported sample file version {}",
            head[4]
        )));
    }
    let header = SampleFileHeader {
        beta: head[5],
        p: u16::from_le_bytes([head[6], head[7]]),
        n: u16::from_le_bytes([head[8], head[9]]),
        seed: u64::from_le_bytes(head[16..24].try_into().unwrap()),
        count: u64::from_le_bytes(head[24..32].try_into().unwrap()),
    };
    let mut samples = Vec::with_capacity(header.count as usize);
    let mut buf = vec![0u8; header.p as usize * 8];
    for _ in 0..header.count {
        f.read_exact(&mut buf)?;
        let values = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        samples.push(EigenvalueSample { values });
    }
    Ok((header, samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Beta, DensityMethod, EnsembleSpec};

    #[test]
    fn csv_round_trip_is_lossless() {
        let dir = std::env::temp_dir().join("wishart_spectra_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let spec = EnsembleSpec::new(Beta::Two, vec![1.0], vec![1.0]);
        let curve = DensityCurve::new(
            vec![0.1, 1.0 / 3.0, 2.5],
            vec![0.123456789012345678, 1e-300, 0.9999999999999999],
            DensityMethod::ComplexExact,
            spec,
            1e-9,
        )
        .unwrap();
        let path = dir.join("curve.csv");
        write_density_csv(&path, &curve).unwrap();
        let (xs, vs) = read_density_csv(&path).unwrap();
        assert_eq!(xs, curve.grid);
        assert_eq!(vs, curve.values);
    }

    #[test]
    fn sample_file_round_trip() {
        let dir = std::env::temp_dir().join("wishart_spectra_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("samples.bin");
        let samples = vec![
            EigenvalueSample {
                values: vec![0.25, 1.5],
            },
            EigenvalueSample {
                values: vec![0.5, 3.75],
            },
        ];
        let header = SampleFileHeader {
            beta: 2,
            p: 2,
            n: 5,
            seed: 42,
            count: 2,
        };
        write_samples(&path, &header, &samples).unwrap();
        let (h, back) = read_samples(&path).unwrap();
        assert_eq!(h.beta, 2);
        assert_eq!(h.p, 2);
        assert_eq!(h.n, 5);
        assert_eq!(h.seed, 42);
        assert_eq!(back, samples);
        // header is exactly 32 bytes + 4 doubles
        let len = std::fs::metadata(&path).unwrap().len();
        assert_eq!(len, 32 + 4 * 8);
    }
}
