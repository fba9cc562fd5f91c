//! RGR1 radargram files.
//!
//! Layout: the magic `RGR1`, then little-endian `u32` trace count, `u32`
//! sample count, `f64` dt (s), `f64` t0 (s), `f64` dx (m), `f64` x0 (m),
//! then every sample as `f32`, trace after trace.

use std::fs;
use std::io::Write;
use std::path::Path;

use voidscan::{Radargram, Trace};

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"RGR1";
const HEADER_LEN: usize = 4 + 4 + 4 + 4 * 8;

pub fn encode(r: &Radargram) -> CliResult<Vec<u8>> {
    let nt = u32::try_from(r.n_traces()).map_err(|_| CliError::invalid("radargram has too many traces"))?;
    let ns = u32::try_from(r.n_samples()).map_err(|_| CliError::invalid("traces are too long"))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * r.n_traces() * r.n_samples());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&nt.to_le_bytes());
    out.extend_from_slice(&ns.to_le_bytes());
    for v in [r.dt(), r.t0(), r.dx, r.x0] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for t in &r.traces {
        for &s in &t.samples {
            out.extend_from_slice(&(s as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> CliResult<Radargram> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(CliError::invalid("not an RGR1 file"));
    }
    let u32_at = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().expect("4 bytes"));
    let f64_at = |k: usize| f64::from_le_bytes(bytes[k..k + 8].try_into().expect("8 bytes"));
    let nt = u32_at(4) as usize;
    let ns = u32_at(8) as usize;
    let (dt, t0, dx, x0) = (f64_at(12), f64_at(20), f64_at(28), f64_at(36));
    let expected = nt
        .checked_mul(ns)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| CliError::invalid("RGR1 header sizes overflow"))?;
    if bytes.len() != expected {
        return Err(CliError::invalid(format!(
            "RGR1 file holds {} bytes, header announces {expected}",
            bytes.len()
        )));
    }
    let data = &bytes[HEADER_LEN..];
    let traces = (0..nt)
        .map(|i| {
            let samples = data[i * ns * 4..(i + 1) * ns * 4]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
                .collect();
            Trace::new(samples, dt, t0, x0 + i as f64 * dx)
        })
        .collect::<voidscan::Result<Vec<_>>>()?;
    Ok(Radargram::new(traces, dx, x0)?)
}

pub fn read(path: &Path) -> CliResult<Radargram> {
    decode(&crate::read_input(path)?)
}

pub fn write(path: &Path, r: &Radargram) -> CliResult<()> {
    write_atomic(path, &encode(r)?)
}

/// Writes through a temporary file in the same directory and renames it over
/// `path`, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| CliError::invalid(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::Runtime(format!("cannot write {}: {e}", path.display())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Radargram {
        let traces = (0..3)
            .map(|i| Trace::new((0..5).map(|k| (i * 5 + k) as f64 * 0.25 - 1.0).collect(), 1e-11, 2e-10, 0.0).unwrap())
            .collect();
        Radargram::new(traces, 0.02, 0.45).unwrap()
    }

    #[test]
    fn header_layout() {
        let b = encode(&sample()).unwrap();
        assert_eq!(&b[..4], b"RGR1");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 5);
        assert_eq!(f64::from_le_bytes(b[12..20].try_into().unwrap()), 1e-11);
        assert_eq!(f64::from_le_bytes(b[36..44].try_into().unwrap()), 0.45);
        assert_eq!(b.len(), 44 + 3 * 5 * 4);
    }

    #[test]
    fn round_trip() {
        let r = sample();
        let back = decode(&encode(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let b = encode(&sample()).unwrap();
        assert!(decode(&b[..b.len() - 1]).is_err());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        assert!(decode(b"RGR1").is_err());
    }
}
