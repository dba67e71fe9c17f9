//! Text formats for curves, matrices, weights, maps and experiment reports.
//!
//! Numbers are written with 15 significant digits. Image and pixel numbers in
//! files are 1-based.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use serde::{Serialize, Serializer};

use crate::deconv::PerfusionTriple;
use crate::error::{PlpError, Result};
use crate::experiments::{ConsistencyReport, PanoramaEntry, SurfaceGrid};
use crate::model::{build_uniform_grid, AifCurve, TimeGrid};
use crate::pca::PixelSeriesMatrix;
use crate::weights::{centered_correlation, sign_changes, tail_divergence, MethodTag, WeightVector};

/// `%.15g`-style formatting: shortest of fixed/scientific, trailing zeros
/// trimmed, `inf`/`-inf`/`nan` for non-finite values.
pub fn format_g(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" { "0".into() } else { t.to_string() }
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    let f = field.trim();
    match f {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => f
            .parse()
            .map_err(|_| PlpError::Parse(format!("line {line}: '{f}' is not a number"))),
    }
}

fn parse_row(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',').map(|f| parse_f64(f, lineno)).collect()
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(format_g).collect::<Vec<_>>().join(",")
}

fn opt_g(v: Option<f64>) -> String {
    v.map(format_g).unwrap_or_else(|| "undefined".into())
}

type NumberedLines = Vec<(usize, String)>;

/// Numbered non-empty lines, with `#` comments split off.
fn content_lines(reader: impl BufRead) -> Result<(NumberedLines, Vec<String>)> {
    let mut data = Vec::new();
    let mut comments = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if let Some(c) = trimmed.strip_prefix('#') {
            comments.push(c.trim().to_string());
        } else if !trimmed.is_empty() {
            data.push((i + 1, trimmed.to_string()));
        }
    }
    Ok((data, comments))
}

pub fn write_aif(mut w: impl Write, aif: &AifCurve) -> Result<()> {
    writeln!(w, "# K0={}", format_g(aif.value_at_zero()))?;
    writeln!(w, "t,value")?;
    for (t, v) in aif.grid().instants().iter().zip(aif.values()) {
        writeln!(w, "{},{}", format_g(*t), format_g(*v))?;
    }
    Ok(())
}

pub fn read_aif(reader: impl BufRead) -> Result<AifCurve> {
    let (lines, comments) = content_lines(reader)?;
    let mut k0 = 0.0;
    for c in &comments {
        if let Some(v) = c.strip_prefix("K0=") {
            k0 = parse_f64(v, 0)?;
        }
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in lines {
        if line.starts_with('t') {
            continue;
        }
        let row = parse_row(&line, lineno)?;
        if row.len() != 2 {
            return Err(PlpError::Parse(format!("line {lineno}: expected 't,value'")));
        }
        times.push(row[0]);
        values.push(row[1]);
    }
    AifCurve::new(TimeGrid::from_instants(times)?, values, k0)
}

pub fn write_matrix(mut w: impl Write, m: &DMatrix<f64>) -> Result<()> {
    for r in 0..m.nrows() {
        writeln!(w, "{}", join(m.row(r).iter().copied()))?;
    }
    Ok(())
}

pub fn read_matrix(reader: impl BufRead) -> Result<DMatrix<f64>> {
    let (lines, _) = content_lines(reader)?;
    let rows = lines
        .iter()
        .map(|(n, l)| parse_row(l, *n))
        .collect::<Result<Vec<_>>>()?;
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PlpError::Parse("matrix rows have different lengths".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn write_spectrum(mut w: impl Write, lambda: &[f64]) -> Result<()> {
    writeln!(w, "index,lambda")?;
    for (i, l) in lambda.iter().enumerate() {
        writeln!(w, "{},{}", i + 1, format_g(*l))?;
    }
    Ok(())
}

/// Weight CSV; several vectors share one header and are told apart by `method`.
pub fn write_weights(mut w: impl Write, vectors: &[WeightVector]) -> Result<()> {
    writeln!(w, "index,t,weight_raw,weight_normalized,method")?;
    for weights in vectors {
        let normalized = weights.normalize()?;
        let rows = weights.grid().instants().iter().zip(weights.weights()).zip(normalized.weights());
        for (i, ((t, raw), unit)) in rows.enumerate() {
            writeln!(
                w,
                "{},{},{},{},{}",
                i + 1,
                format_g(*t),
                format_g(*raw),
                format_g(*unit),
                weights.method()
            )?;
        }
    }
    Ok(())
}

fn finite_or_string<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&format_g(*v))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Correlation {
    pub with: MethodTag,
    #[serde(serialize_with = "finite_or_string")]
    pub correlation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodMetrics {
    pub method: MethodTag,
    pub sign_changes: usize,
    #[serde(serialize_with = "finite_or_string")]
    pub tail_divergence: f64,
    pub correlations: Vec<Correlation>,
}

/// Quality metrics of each weight vector plus its correlation with every other.
pub fn weight_metrics(vectors: &[WeightVector], tail_fraction: f64) -> Result<Vec<MethodMetrics>> {
    vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let correlations = vectors
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, o)| {
                    Ok(Correlation {
                        with: o.method(),
                        correlation: centered_correlation(v.weights(), o.weights())?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MethodMetrics {
                method: v.method(),
                sign_changes: sign_changes(v.weights()),
                tail_divergence: tail_divergence(v.weights(), tail_fraction)?,
                correlations,
            })
        })
        .collect()
}

pub fn write_json<T: Serialize>(mut w: impl Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Pixel series: `P,N` header, an optional `# t=` comment with the sample
/// instants, then one row per pixel.
pub fn write_pixel_series(mut w: impl Write, data: &PixelSeriesMatrix) -> Result<()> {
    let rows = data.rows();
    writeln!(w, "{},{}", rows.nrows(), rows.ncols())?;
    writeln!(w, "# t={}", data.grid().instants().iter().map(|t| format_g(*t)).collect::<Vec<_>>().join(" "))?;
    write_matrix(w, rows)
}

/// Reads a pixel series file. The grid comes from the `# t=` comment when
/// present, else from a uniform `step`.
pub fn read_pixel_series(reader: impl BufRead, step: Option<f64>) -> Result<PixelSeriesMatrix> {
    let (lines, comments) = content_lines(reader)?;
    let mut it = lines.into_iter();
    let (hline, header) = it
        .next()
        .ok_or_else(|| PlpError::Parse("empty pixel series file".into()))?;
    let dims: Vec<usize> = header
        .split(',')
        .map(|f| f.trim().parse().map_err(|_| PlpError::Parse(format!("line {hline}: header must be 'P,N'"))))
        .collect::<Result<_>>()?;
    let [p, n] = dims[..] else {
        return Err(PlpError::Parse(format!("line {hline}: header must be 'P,N'")));
    };
    let rows = it.map(|(k, l)| parse_row(&l, k).map(|r| (k, r))).collect::<Result<Vec<_>>>()?;
    if rows.len() != p {
        return Err(PlpError::Parse(format!("header declares {p} pixels, found {}", rows.len())));
    }
    if let Some((k, r)) = rows.iter().find(|(_, r)| r.len() != n) {
        return Err(PlpError::Parse(format!("line {k}: expected {n} values, found {}", r.len())));
    }
    let grid = match (comments.iter().find_map(|c| c.strip_prefix("t=")), step) {
        (None, Some(d)) => build_uniform_grid(n, d)?,
        (None, None) => return Err(PlpError::invalid("pixel file has no '# t=' line; pass the sampling interval")),
        (Some(t), _) => {
            let instants = t.split_whitespace().map(|v| parse_f64(v, 0)).collect::<Result<Vec<_>>>()?;
            if instants.len() != n {
                return Err(PlpError::Parse(format!("'# t=' lists {} instants, header says {n}", instants.len())));
            }
            TimeGrid::from_instants(instants)?
        }
    };
    PixelSeriesMatrix::new(grid, DMatrix::from_fn(p, n, |i, j| rows[i].1[j]))
}

pub fn read_mask(reader: impl BufRead) -> Result<Vec<bool>> {
    let (lines, _) = content_lines(reader)?;
    lines
        .into_iter()
        .map(|(k, l)| match l.as_str() {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(PlpError::Parse(format!("line {k}: mask entries must be 0 or 1"))),
        })
        .collect()
}

pub fn write_map(mut w: impl Write, values: &[f64]) -> Result<()> {
    writeln!(w, "pixel,P_FPC")?;
    for (p, v) in values.iter().enumerate() {
        writeln!(w, "{},{}", p + 1, format_g(*v))?;
    }
    Ok(())
}

pub fn write_surface(mut w: impl Write, surface: &SurfaceGrid) -> Result<()> {
    writeln!(w, "a,b,value")?;
    for (a, b, v) in surface.iter() {
        writeln!(w, "{},{},{}", format_g(a), format_g(b), format_g(v))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub method: MethodTag,
    pub strategy: String,
    #[serde(serialize_with = "finite_or_string")]
    pub correlation: f64,
    #[serde(serialize_with = "finite_or_string")]
    pub max_abs_diff: f64,
    #[serde(serialize_with = "finite_or_string")]
    pub tail_divergence: f64,
    pub sign_changes: usize,
}

pub fn report_rows(report: &ConsistencyReport) -> Vec<ReportRow> {
    report
        .entries
        .iter()
        .map(|e| ReportRow {
            method: report.method,
            strategy: e.strategy.to_string(),
            correlation: e.stats.correlation,
            max_abs_diff: e.stats.max_abs_diff,
            tail_divergence: e.tail_divergence,
            sign_changes: e.sign_changes,
        })
        .collect()
}

pub fn write_ground_truth(mut w: impl Write, truth: &[PerfusionTriple]) -> Result<()> {
    writeln!(w, "pixel,Vb,Fb,Tmtt")?;
    for (p, t) in truth.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{}",
            p + 1,
            format_g(t.blood_volume),
            format_g(t.blood_flow),
            opt_g(t.mean_transit_time)
        )?;
    }
    Ok(())
}

#[allow(clippy::needless_range_loop)]
pub fn write_panorama(mut w: impl Write, entries: &[PanoramaEntry]) -> Result<()> {
    writeln!(w, "rank,index,t,volume_raw,volume_normalized,flow_raw,flow_normalized")?;
    for e in entries {
        let vn = e.volume.normalize()?;
        let fnorm = e.flow.normalize()?;
        let t = e.volume.grid().instants();
        for i in 0..e.volume.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                e.rank,
                i + 1,
                format_g(t[i]),
                format_g(e.volume.weights()[i]),
                format_g(vn.weights()[i]),
                format_g(e.flow.weights()[i]),
                format_g(fnorm.weights()[i])
            )?;
        }
    }
    Ok(())
}

pub fn write_recovered(mut w: impl Write, results: &[(PerfusionTriple, Vec<f64>)]) -> Result<()> {
    let n = results.first().map_or(0, |r| r.1.len());
    let mut header = String::from("pixel,Vb,Fb,Tmtt");
    for i in 1..=n {
        header.push_str(&format!(",R_{i}"));
    }
    writeln!(w, "{header}")?;
    for (p, (t, r)) in results.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{}",
            p + 1,
            format_g(t.blood_volume),
            format_g(t.blood_flow),
            opt_g(t.mean_transit_time),
            join(r.iter().copied())
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gamma_aif, GammaAifParams};

    #[test]
    fn format_g_matches_printf() {
        assert_eq!(format_g(0.0), "0");
        assert_eq!(format_g(1.0), "1");
        assert_eq!(format_g(-2.5), "-2.5");
        assert_eq!(format_g(1.0 / 3.0), "0.333333333333333");
        assert_eq!(format_g(2.0 / 3.0), "0.666666666666667");
        assert_eq!(format_g(123456.0), "123456");
        assert_eq!(format_g(1e-7), "1e-7");
        assert_eq!(format_g(1.5e20), "1.5e20");
        assert_eq!(format_g(0.0001), "0.0001");
        assert_eq!(format_g(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn aif_roundtrip() {
        let g = build_uniform_grid(60, 1.0).unwrap();
        let aif = gamma_aif(GammaAifParams::new(3.0, 2.0 / 3.0).unwrap(), &g).unwrap();
        let mut buf = Vec::new();
        write_aif(&mut buf, &aif).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# K0=0\nt,value\n"));
        assert_eq!(text.lines().count(), 62);
        let back = read_aif(buf.as_slice()).unwrap();
        for (a, b) in back.values().iter().zip(aif.values()) {
            assert!((a - b).abs() <= 1e-14 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn pixel_series_roundtrip() {
        let g = TimeGrid::from_instants(vec![0.5, 1.0, 2.0]).unwrap();
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -4.0, 0.25, 6.0]);
        let data = PixelSeriesMatrix::new(g.clone(), m.clone()).unwrap();
        let mut buf = Vec::new();
        write_pixel_series(&mut buf, &data).unwrap();
        let back = read_pixel_series(buf.as_slice(), None).unwrap();
        assert_eq!(back.rows(), &m);
        assert_eq!(back.grid(), &g);
        assert_eq!(read_pixel_series(buf.as_slice(), Some(2.0)).unwrap().grid(), &g);
        let uniform = read_pixel_series("1,3\n1,2,3\n".as_bytes(), Some(2.0)).unwrap();
        assert_eq!(uniform.grid().instants(), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn pixel_series_rejects_bad_counts() {
        assert!(read_pixel_series("3,2\n1,2\n3,4\n".as_bytes(), Some(1.0)).is_err());
        assert!(read_pixel_series("2,2\n1,2\n3\n".as_bytes(), Some(1.0)).is_err());
        assert!(read_pixel_series("2,2\n1,2\n3,4\n".as_bytes(), None).is_err());
    }

    #[test]
    fn mask_and_undefined_mtt() {
        assert_eq!(read_mask("1\n0\n1\n".as_bytes()).unwrap(), vec![true, false, true]);
        assert!(read_mask("2\n".as_bytes()).is_err());
        let mut buf = Vec::new();
        write_ground_truth(&mut buf, &[PerfusionTriple::from_volume_flow(0.0, 0.0)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "pixel,Vb,Fb,Tmtt\n1,0,0,undefined\n");
    }

    #[test]
    fn matrix_roundtrip() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NEG_INFINITY, 1e-9, 3.0]);
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        assert_eq!(read_matrix(buf.as_slice()).unwrap(), m);
    }
}
