//! Grayscale image and CSV export.

use voidscan::{Radargram, Trace};

use crate::error::{CliError, CliResult};

pub const CSV_HEADER: &str = "x_m,t_ns,amplitude";

/// Magnitude below which `percentile` percent of the absolute amplitudes lie
/// (nearest rank).
fn clip_level(r: &Radargram, percentile: f64) -> f64 {
    let mut mags: Vec<f64> = r.traces.iter().flat_map(|t| t.samples.iter().map(|v| v.abs())).collect();
    mags.sort_by(f64::total_cmp);
    let rank = ((percentile / 100.0) * mags.len() as f64).ceil() as usize;
    mags[rank.clamp(1, mags.len()) - 1]
}

/// Binary PGM (P5) with one column per trace and one row per sample. Zero
/// maps to mid-gray 128; amplitudes are clipped symmetrically at the given
/// percentile of their magnitudes.
pub fn export_image(r: &Radargram, clip_percentile: f64) -> CliResult<Vec<u8>> {
    if !(clip_percentile > 50.0 && clip_percentile <= 100.0) {
        return Err(CliError::invalid("clip percentile must lie in (50, 100]"));
    }
    if r.n_traces() == 0 || r.n_samples() == 0 {
        return Err(CliError::invalid("cannot draw an empty radargram"));
    }
    let clip = clip_level(r, clip_percentile);
    let (w, h) = (r.n_traces(), r.n_samples());
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h);
    for k in 0..h {
        for t in &r.traces {
            let v = if clip > 0.0 { (t.samples[k] / clip).clamp(-1.0, 1.0) } else { 0.0 };
            out.push((128.0 + 127.0 * v).round() as u8);
        }
    }
    Ok(out)
}

/// Long-format CSV: one `x_m,t_ns,amplitude` row per sample.
pub fn export_csv(r: &Radargram) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for t in &r.traces {
        for (k, v) in t.samples.iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", t.x, t.time(k) * 1e9, v));
        }
    }
    s
}

/// Reads a file written by [`export_csv`]. Rows of a trace must be
/// contiguous and in time order.
pub fn import_csv(text: &str) -> CliResult<Radargram> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CSV_HEADER) {
        return Err(CliError::invalid(format!("CSV must start with the header '{CSV_HEADER}'")));
    }
    let mut columns: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || CliError::invalid(format!("CSV line {}: expected three numbers", n + 2));
        let mut it = line.split(',').map(|f| f.trim().parse::<f64>());
        let (Some(Ok(x)), Some(Ok(t)), Some(Ok(a)), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return Err(bad());
        };
        match columns.last_mut() {
            Some((cx, rows)) if *cx == x => rows.push((t, a)),
            _ => columns.push((x, vec![(t, a)])),
        }
    }
    if columns.is_empty() {
        return Ok(Radargram { traces: Vec::new(), dx: 1.0, x0: 0.0 });
    }
    let rows = &columns[0].1;
    let dt = if rows.len() > 1 { (rows[rows.len() - 1].0 - rows[0].0) / (rows.len() - 1) as f64 * 1e-9 } else { 1.0 };
    let t0 = rows[0].0 * 1e-9;
    let x0 = columns[0].0;
    let dx = if columns.len() > 1 { (columns[columns.len() - 1].0 - x0) / (columns.len() - 1) as f64 } else { 1.0 };
    let traces = columns
        .iter()
        .map(|(x, rows)| Trace::new(rows.iter().map(|r| r.1).collect(), dt, t0, *x))
        .collect::<voidscan::Result<Vec<_>>>()?;
    Ok(Radargram::new(traces, dx, x0)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn radargram(rows: Vec<Vec<f64>>) -> Radargram {
        let traces = rows.into_iter().map(|s| Trace::new(s, 1e-10, 0.0, 0.0).unwrap()).collect();
        Radargram::new(traces, 0.02, 0.0).unwrap()
    }

    fn pixels(img: &[u8]) -> &[u8] {
        let mut newlines = 0;
        let start = img.iter().position(|&b| {
            newlines += (b == b'\n') as usize;
            newlines == 3
        });
        &img[start.unwrap() + 1..]
    }

    #[test]
    fn zeros_are_mid_gray() {
        let img = export_image(&radargram(vec![vec![0.0; 4]; 3]), 100.0).unwrap();
        assert!(img.starts_with(b"P5\n3 4\n255\n"));
        assert!(pixels(&img).iter().all(|&p| p == 128));
    }

    #[test]
    fn extremes_map_to_the_ends() {
        let img = export_image(&radargram(vec![vec![0.5, 2.0], vec![-2.0, 0.0]]), 100.0).unwrap();
        // Row-major over samples: (t0: 0.5, -2.0), (t1: 2.0, 0.0).
        assert_eq!(pixels(&img), &[160, 1, 255, 128]);
    }

    #[test]
    fn percentile_sets_full_scale() {
        let row: Vec<f64> = (1..=100).map(|k| k as f64).collect();
        let img = export_image(&radargram(vec![row]), 99.0).unwrap();
        let p = pixels(&img);
        assert_eq!(p[98], 255);
        assert_eq!(p[99], 255);
        assert!(p[97] < 255);
    }

    #[test]
    fn percentile_is_checked() {
        let r = radargram(vec![vec![1.0, 0.5]]);
        assert!(export_image(&r, 50.0).is_err());
        assert!(export_image(&r, 100.5).is_err());
    }

    #[test]
    fn csv_layout_and_round_trip() {
        let r = radargram(vec![vec![0.25, -1.5]]);
        let text = export_csv(&r);
        assert_eq!(text.lines().count(), 3);
        assert_eq!(text.lines().next(), Some(CSV_HEADER));
        let back = import_csv(&text).unwrap();
        assert_eq!(back.traces[0].samples, r.traces[0].samples);

        let r = radargram(vec![vec![0.1, 0.2, 0.3], vec![-0.1, -0.2, -0.3]]);
        let back = import_csv(&export_csv(&r)).unwrap();
        assert_eq!(back.n_traces(), 2);
        assert!((back.dx - 0.02).abs() < 1e-12);
        assert!((back.dt() - 1e-10).abs() < 1e-20);
        for (a, b) in back.traces.iter().zip(&r.traces) {
            for (x, y) in a.samples.iter().zip(&b.samples) {
                assert!((x - y).abs() <= f32::EPSILON as f64 * y.abs());
            }
        }
    }

    #[test]
    fn empty_radargram_has_header_only() {
        let r = Radargram { traces: Vec::new(), dx: 1.0, x0: 0.0 };
        assert_eq!(export_csv(&r), format!("{CSV_HEADER}\n"));
        assert_eq!(import_csv(&export_csv(&r)).unwrap().n_traces(), 0);
    }
}
