//! Multivariate time series container, CSV ingestion, detrending and the
//! frequency-axis conventions used by every spectral quantity.
//!
//! Frequencies are carried as normalized angular frequencies `ω ∈ [0, π]`
//! (rad/sample). The physical frequency is `f = ω·fs/(2π)` so the grid spans
//! `[0, fs/2]` Hz.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{PdgcError, Result};

/// An `M × L` block of samples (channels in rows) with labels and a sampling
/// frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateSeries {
    data: DMatrix<f64>,
    labels: Vec<String>,
    fs: f64,
}

impl MultivariateSeries {
    /// Validates and wraps `data` (channels × samples).
    pub fn new(data: DMatrix<f64>, labels: Vec<String>, fs: f64) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(PdgcError::Argument(format!(
                "sampling frequency must be positive, got {fs}"
            )));
        }
        let (m, l) = data.shape();
        if m < 2 {
            return Err(PdgcError::Validation(format!(
                "at least 2 channels required, got {m}"
            )));
        }
        if l < 2 {
            return Err(PdgcError::Validation(format!(
                "at least 2 samples required, got {l}"
            )));
        }
        if labels.len() != m {
            return Err(PdgcError::Validation(format!(
                "{} labels for {m} channels",
                labels.len()
            )));
        }
        for i in 0..m {
            for t in 0..l {
                if !data[(i, t)].is_finite() {
                    return Err(PdgcError::Validation(format!(
                        "non-finite value in channel '{}' at sample {t}",
                        labels[i]
                    )));
                }
            }
        }
        Ok(Self { data, labels, fs })
    }

    /// Builds a series with default labels `ch0..ch{M-1}`.
    pub fn from_channels(data: DMatrix<f64>, fs: f64) -> Result<Self> {
        let labels = default_labels(data.nrows());
        Self::new(data, labels, fs)
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn n_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn channel(&self, i: usize) -> Vec<f64> {
        self.data.row(i).iter().copied().collect()
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Returns a new series with the listed channels, in the listed order.
    pub fn select(&self, channels: &[usize]) -> Result<Self> {
        let mut data = DMatrix::zeros(channels.len(), self.len());
        let mut labels = Vec::with_capacity(channels.len());
        for (row, &ch) in channels.iter().enumerate() {
            if ch >= self.n_channels() {
                return Err(PdgcError::Argument(format!(
                    "channel index {ch} out of range (M = {})",
                    self.n_channels()
                )));
            }
            data.set_row(row, &self.data.row(ch));
            labels.push(self.labels[ch].clone());
        }
        Self::new(data, labels, self.fs)
    }

    /// Same labels and sampling frequency, new samples.
    pub fn with_data(&self, data: DMatrix<f64>) -> Result<Self> {
        Self::new(data, self.labels.clone(), self.fs)
    }

    /// Writes one sample per row with a header of labels; values carry 12
    /// significant digits.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| PdgcError::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| PdgcError::io(path, e))
    }

    pub fn write_csv_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{}", self.labels.join(","))?;
        for t in 0..self.len() {
            let row: Vec<String> = (0..self.n_channels())
                .map(|i| format!("{:.11e}", self.data[(i, t)]))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn default_labels(m: usize) -> Vec<String> {
    (0..m).map(|i| format!("ch{i}")).collect()
}

/// Loads a comma-separated table with one channel per column. A first row
/// containing any non-numeric field is taken as the header.
pub fn load_csv(path: impl AsRef<Path>, fs: f64) -> Result<MultivariateSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| PdgcError::io(path, e))?;
    read_csv(file, fs)
}

pub fn read_csv<R: Read>(reader: R, fs: f64) -> Result<MultivariateSeries> {
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(PdgcError::Argument(format!(
            "sampling frequency must be positive, got {fs}"
        )));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut labels: Option<Vec<String>> = None;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| PdgcError::Parse {
            row,
            message: e.to_string(),
        })?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if row == 0 && record.iter().any(|f| f.parse::<f64>().is_err()) {
            labels = Some(record.iter().map(str::to_owned).collect());
            continue;
        }
        let width = labels
            .as_ref()
            .map(Vec::len)
            .or_else(|| (!columns.is_empty()).then_some(columns.len()))
            .unwrap_or(record.len());
        if columns.is_empty() {
            columns = vec![Vec::new(); width];
        }
        if record.len() != width {
            return Err(PdgcError::Parse {
                row,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| PdgcError::Parse {
                row,
                message: format!("column {col}: '{field}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(PdgcError::Validation(format!(
                    "non-finite value at row {row}, column {col}"
                )));
            }
            columns[col].push(v);
        }
    }

    let m = labels.as_ref().map(Vec::len).unwrap_or(columns.len());
    let l = columns.first().map(Vec::len).unwrap_or(0);
    let labels = labels.unwrap_or_else(|| default_labels(m));
    if m < 2 {
        return Err(PdgcError::Validation(format!(
            "at least 2 channels required, got {m}"
        )));
    }
    let data = DMatrix::from_fn(m, l, |i, t| columns[i][t]);
    MultivariateSeries::new(data, labels, fs)
}

/// Removes the channel means and, if `detrend_cutoff` (cycles/sample) is
/// given, first subtracts a zero-phase low-pass trend from every channel.
pub fn preprocess(
    series: &MultivariateSeries,
    detrend_cutoff: Option<f64>,
) -> Result<MultivariateSeries> {
    let pole = match detrend_cutoff {
        Some(fc) if fc > 0.0 && fc < 0.5 => Some(lowpass_pole(fc)),
        Some(fc) => {
            return Err(PdgcError::Argument(format!(
                "detrend cutoff must lie in (0, 0.5) cycles/sample, got {fc}"
            )))
        }
        None => None,
    };
    let mut data = series.data().clone();
    for mut row in data.row_iter_mut() {
        let mut x: Vec<f64> = row.iter().copied().collect();
        if let Some(a) = pole {
            let trend = zero_phase_smooth(&x, a);
            for (v, tr) in x.iter_mut().zip(&trend) {
                *v -= tr;
            }
        }
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        for (dst, v) in row.iter_mut().zip(&x) {
            *dst = v - mean;
        }
    }
    series.with_data(data)
}

/// Pole of `y[n] = (1-a) x[n] + a y[n-1]` such that the forward-backward
/// cascade has `|H|² = 1/2` at `fc` cycles/sample.
pub fn lowpass_pole(fc: f64) -> f64 {
    let b = 2.0 - (2.0 * PI * fc).cos();
    b - (b * b - 1.0).sqrt()
}

fn zero_phase_smooth(x: &[f64], a: f64) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    let mut state = x[0];
    for (yi, &xi) in y.iter_mut().zip(x) {
        state = (1.0 - a) * xi + a * state;
        *yi = state;
    }
    let mut state = y[y.len() - 1];
    for yi in y.iter_mut().rev() {
        state = (1.0 - a) * *yi + a * state;
        *yi = state;
    }
    y
}

/// Uniform grid of normalized angular frequencies on `[0, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
    fs: f64,
}

pub const DEFAULT_GRID_SIZE: usize = 1000;

impl FrequencyGrid {
    pub fn uniform(n: usize, fs: f64) -> Result<Self> {
        if n < 16 {
            return Err(PdgcError::Argument(format!(
                "frequency grid needs at least 16 points, got {n}"
            )));
        }
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(PdgcError::Argument(format!(
                "sampling frequency must be positive, got {fs}"
            )));
        }
        let step = PI / (n - 1) as f64;
        let mut omegas: Vec<f64> = (0..n).map(|k| k as f64 * step).collect();
        omegas[n - 1] = PI;
        Ok(Self { omegas, fs })
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn to_hz(&self, omega: f64) -> f64 {
        omega * self.fs / (2.0 * PI)
    }

    pub fn to_omega(&self, hz: f64) -> f64 {
        2.0 * PI * hz / self.fs
    }

    pub fn hz(&self) -> Vec<f64> {
        self.omegas.iter().map(|&w| self.to_hz(w)).collect()
    }
}

/// A named frequency band in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub name: String,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Band {
    pub fn new(name: impl Into<String>, f_lo: f64, f_hi: f64) -> Result<Self> {
        let name = name.into();
        if !(f_lo >= 0.0 && f_lo < f_hi && f_hi.is_finite()) {
            return Err(PdgcError::Argument(format!(
                "band '{name}' needs 0 <= f_lo < f_hi, got [{f_lo}, {f_hi}]"
            )));
        }
        Ok(Self { name, f_lo, f_hi })
    }

    /// Checks the band against the Nyquist frequency of `fs`.
    pub fn validate(&self, fs: f64) -> Result<()> {
        if self.f_hi > fs / 2.0 * (1.0 + 1e-12) {
            return Err(PdgcError::Argument(format!(
                "band '{}' upper edge {} Hz exceeds fs/2 = {} Hz",
                self.name,
                self.f_hi,
                fs / 2.0
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_channel(a: Vec<f64>, b: Vec<f64>) -> MultivariateSeries {
        let l = a.len();
        let data = DMatrix::from_fn(2, l, |i, t| if i == 0 { a[t] } else { b[t] });
        MultivariateSeries::from_channels(data, 1.0).unwrap()
    }

    #[test]
    fn loads_header_and_shape() {
        let mut text = String::from("resp,sap,map,hp,mcbv\n");
        for t in 0..250 {
            let t = t as f64;
            text.push_str(&format!("{},{},{},{},{}\n", t, t * 2.0, -t, 0.5, t.sin()));
        }
        let s = read_csv(text.as_bytes(), 1.05).unwrap();
        assert_eq!(s.n_channels(), 5);
        assert_eq!(s.len(), 250);
        assert_eq!(s.labels()[3], "hp");
        assert_eq!(s.fs(), 1.05);
    }

    #[test]
    fn headerless_gets_default_labels() {
        let s = read_csv("1,2\n3,4\n5,6\n".as_bytes(), 2.0).unwrap();
        assert_eq!(s.labels(), &["ch0", "ch1"]);
        assert_eq!(s.data()[(1, 2)], 6.0);
    }

    #[test]
    fn single_column_rejected() {
        let err = read_csv("x\n1\n2\n3\n".as_bytes(), 1.0).unwrap_err();
        assert!(matches!(err, PdgcError::Validation(_)), "{err}");
    }

    #[test]
    fn nan_cell_rejected_with_location() {
        let err = read_csv("a,b\n1,2\n3,NaN\n".as_bytes(), 1.0).unwrap_err();
        match err {
            PdgcError::Validation(msg) => assert!(msg.contains("row 2") && msg.contains("column 1")),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn ragged_row_reports_index() {
        let err = read_csv("a,b\n1,2\n3\n".as_bytes(), 1.0).unwrap_err();
        assert!(matches!(err, PdgcError::Parse { row: 2, .. }), "{err}");
    }

    #[test]
    fn non_positive_fs_rejected() {
        let err = read_csv("1,2\n3,4\n".as_bytes(), 0.0).unwrap_err();
        assert!(matches!(err, PdgcError::Argument(_)));
    }

    #[test]
    fn csv_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = DMatrix::from_fn(3, 40, |_, _| rng.random_range(-1e3..1e3));
        let s = MultivariateSeries::from_channels(data, 4.0).unwrap();
        let mut buf = Vec::new();
        s.write_csv_to(&mut buf).unwrap();
        let back = read_csv(buf.as_slice(), 4.0).unwrap();
        assert_eq!(back.labels(), s.labels());
        for (x, y) in back.data().iter().zip(s.data().iter()) {
            assert!((x - y).abs() <= 1e-11 * y.abs().max(1e-300));
        }
    }

    #[test]
    fn constant_channel_becomes_zero() {
        let s = two_channel(vec![3.5; 50], (0..50).map(|t| t as f64).collect());
        let out = preprocess(&s, None).unwrap();
        assert!(out.channel(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_mean_noise_is_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut a: Vec<f64> = (0..500).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        a.iter_mut().for_each(|v| *v -= mean);
        let mut b = a.clone();
        b.reverse();
        let s = two_channel(a, b);
        let out = preprocess(&s, None).unwrap();
        for (x, y) in out.data().iter().zip(s.data().iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        let again = preprocess(&out, None).unwrap();
        for (x, y) in again.data().iter().zip(out.data().iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
    }

    #[test]
    fn pole_matches_half_power_point() {
        for &fc in &[0.0156, 0.05, 0.2, 0.45] {
            let a = lowpass_pole(fc);
            assert!(a > 0.0 && a < 1.0);
            let w = 2.0 * PI * fc;
            let gain2 = (1.0 - a).powi(2) / (1.0 - 2.0 * a * w.cos() + a * a);
            assert_abs_diff_eq!(gain2, 0.5, epsilon = 1e-12);
        }
    }

    fn least_squares_detrend(x: &[f64]) -> Vec<f64> {
        let n = x.len() as f64;
        let tm = (n - 1.0) / 2.0;
        let xm = x.iter().sum::<f64>() / n;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (t, &v) in x.iter().enumerate() {
            sxy += (t as f64 - tm) * (v - xm);
            sxx += (t as f64 - tm).powi(2);
        }
        let slope = sxy / sxx;
        x.iter()
            .enumerate()
            .map(|(t, &v)| v - xm - slope * (t as f64 - tm))
            .collect()
    }

    fn amplitude_at(x: &[f64], f: f64) -> f64 {
        let (mut c, mut s) = (0.0, 0.0);
        for (t, &v) in x.iter().enumerate() {
            let ph = 2.0 * PI * f * t as f64;
            c += v * ph.cos();
            s += v * ph.sin();
        }
        2.0 * (c * c + s * s).sqrt() / x.len() as f64
    }

    #[test]
    fn detrend_removes_ramp_keeps_oscillation() {
        let l = 500;
        let ramp: Vec<f64> = (0..l).map(|t| 0.02 * t as f64).collect();
        let sine: Vec<f64> = (0..l).map(|t| (2.0 * PI * 0.1 * t as f64).sin()).collect();
        let mixed: Vec<f64> = ramp.iter().zip(&sine).map(|(a, b)| a + b).collect();

        // The filter is linear, so the ramp residual can be measured alone.
        let s = two_channel(ramp.clone(), mixed.clone());
        let out = preprocess(&s, Some(0.0156)).unwrap();

        let ramp_mean = ramp.iter().sum::<f64>() / l as f64;
        let ramp_power: f64 =
            ramp.iter().map(|v| (v - ramp_mean).powi(2)).sum::<f64>() / l as f64;
        let resid_power: f64 = out.channel(0).iter().map(|v| v * v).sum::<f64>() / l as f64;
        assert!(resid_power < 0.01 * ramp_power, "{resid_power} vs {ramp_power}");

        let reference = least_squares_detrend(&mixed);
        let amp_ref = amplitude_at(&reference, 0.1);
        let amp_out = amplitude_at(&out.channel(1), 0.1);
        assert!(amp_out > 0.95 * amp_ref, "{amp_out} vs {amp_ref}");
        assert!(amp_out < 1.01 * amp_ref);
    }

    #[test]
    fn cutoff_out_of_range_rejected() {
        let s = two_channel(vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 0.0]);
        assert!(matches!(
            preprocess(&s, Some(0.5)),
            Err(PdgcError::Argument(_))
        ));
        assert!(matches!(
            preprocess(&s, Some(0.0)),
            Err(PdgcError::Argument(_))
        ));
    }

    #[test]
    fn grid_endpoints_and_hz_mapping() {
        let g = FrequencyGrid::uniform(1000, 1.05).unwrap();
        assert_eq!(g.omegas()[0], 0.0);
        assert_eq!(g.omegas()[999], PI);
        assert!(g.omegas().windows(2).all(|w| w[1] > w[0]));
        assert_abs_diff_eq!(g.hz()[999], 1.05 / 2.0, epsilon = 1e-15);
        assert!(FrequencyGrid::uniform(15, 1.0).is_err());
    }

    #[test]
    fn band_validation() {
        assert!(Band::new("bad", 0.2, 0.1).is_err());
        let b = Band::new("hf", 0.15, 0.4).unwrap();
        assert!(b.validate(1.0).is_ok());
        assert!(b.validate(0.6).is_err());
    }
}
