//! Analysis settings: a flat TOML file, overridden key by key by flags.
//!
//! ```toml
//! input = "recording.csv"      # relative to the config file
//! fs = 1.0                     # Hz
//! target = "HP"
//! drivers = "RESP,SAP"
//! bands = "lf=0.03:0.15,hf=0.15:0.4"
//! order_min = 3
//! order_max = 12
//! nfreq = 1000
//! surrogates = 100             # 0 disables the significance test
//! percentile = 95.0
//! iaaft_max_iter = 200
//! seed = 0
//! detrend_cutoff = 0.01        # cycles/sample; omit for mean removal only
//! out = "results"
//! ```

use std::path::{Path, PathBuf};

use pdgc::surrogate::SurrogateConfig;
use pdgc::Band;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Every key is optional here; [`Settings::resolve`] applies defaults and
/// checks what is required.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub input: Option<PathBuf>,
    pub fs: Option<f64>,
    pub target: Option<String>,
    pub drivers: Option<String>,
    pub bands: Option<String>,
    pub order_min: Option<usize>,
    pub order_max: Option<usize>,
    pub nfreq: Option<usize>,
    pub surrogates: Option<usize>,
    pub percentile: Option<f64>,
    pub iaaft_max_iter: Option<usize>,
    pub seed: Option<u64>,
    pub detrend_cutoff: Option<f64>,
    pub out: Option<PathBuf>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    /// Reads a config file; a relative `input` is taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let (Some(input), Some(dir)) = (&cfg.input, path.parent()) {
            if input.is_relative() {
                cfg.input = Some(dir.join(input));
            }
        }
        Ok(cfg)
    }

    /// Keys set in `flags` replace those in `self`.
    pub fn overridden_by(self, flags: ConfigFile) -> Self {
        Self {
            input: flags.input.or(self.input),
            fs: flags.fs.or(self.fs),
            target: flags.target.or(self.target),
            drivers: flags.drivers.or(self.drivers),
            bands: flags.bands.or(self.bands),
            order_min: flags.order_min.or(self.order_min),
            order_max: flags.order_max.or(self.order_max),
            nfreq: flags.nfreq.or(self.nfreq),
            surrogates: flags.surrogates.or(self.surrogates),
            percentile: flags.percentile.or(self.percentile),
            iaaft_max_iter: flags.iaaft_max_iter.or(self.iaaft_max_iter),
            seed: flags.seed.or(self.seed),
            detrend_cutoff: flags.detrend_cutoff.or(self.detrend_cutoff),
            out: flags.out.or(self.out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSetting {
    pub name: String,
    pub f_lo: f64,
    pub f_hi: f64,
}

/// Fully resolved settings of one analysis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub input: PathBuf,
    pub fs: f64,
    pub target: String,
    pub drivers: Vec<String>,
    pub bands: Vec<BandSetting>,
    pub order_min: usize,
    pub order_max: usize,
    pub nfreq: usize,
    pub surrogates: usize,
    pub percentile: f64,
    pub iaaft_max_iter: usize,
    pub seed: u64,
    pub detrend_cutoff: Option<f64>,
    pub out: PathBuf,
}

fn required<T>(v: Option<T>, key: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Config(format!("missing required setting '{key}'")))
}

/// `lf=0.03:0.15,hf=0.15:0.4` → bands.
pub fn parse_bands(text: &str) -> CliResult<Vec<BandSetting>> {
    let mut out: Vec<BandSetting> = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let bad = || CliError::Config(format!("band '{item}' is not of the form name=lo:hi"));
        let (name, range) = item.split_once('=').ok_or_else(bad)?;
        let (lo, hi) = range.split_once(':').ok_or_else(bad)?;
        let name = name.trim().to_string();
        let f_lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let f_hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        if name.is_empty() {
            return Err(bad());
        }
        if out.iter().any(|b| b.name == name) {
            return Err(CliError::Config(format!("band '{name}' given twice")));
        }
        out.push(BandSetting { name, f_lo, f_hi });
    }
    Ok(out)
}

pub fn parse_list(text: &str) -> Vec<String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

impl Settings {
    pub fn resolve(cfg: ConfigFile) -> CliResult<Self> {
        let fs = required(cfg.fs, "fs")?;
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(CliError::Config(format!("fs must be positive, got {fs}")));
        }
        let target = required(cfg.target, "target")?;
        let drivers = parse_list(&required(cfg.drivers, "drivers")?);
        if drivers.is_empty() || drivers.len() > 4 {
            return Err(CliError::Config(format!(
                "between 1 and 4 drivers required, got {}",
                drivers.len()
            )));
        }
        for (i, d) in drivers.iter().enumerate() {
            if *d == target {
                return Err(CliError::Config(format!("'{d}' is both target and driver")));
            }
            if drivers[..i].contains(d) {
                return Err(CliError::Config(format!("driver '{d}' listed twice")));
            }
        }
        let bands = match cfg.bands {
            Some(b) => parse_bands(&b)?,
            None => Vec::new(),
        };
        let settings = Settings {
            input: required(cfg.input, "input")?,
            fs,
            target,
            drivers,
            bands,
            order_min: cfg.order_min.unwrap_or(3),
            order_max: cfg.order_max.unwrap_or(12),
            nfreq: cfg.nfreq.unwrap_or(pdgc::series::DEFAULT_GRID_SIZE),
            surrogates: cfg.surrogates.unwrap_or(100),
            percentile: cfg.percentile.unwrap_or(95.0),
            iaaft_max_iter: cfg.iaaft_max_iter.unwrap_or(200),
            seed: cfg.seed.unwrap_or(0),
            detrend_cutoff: cfg.detrend_cutoff,
            out: required(cfg.out, "out")?,
        };
        settings.check()?;
        Ok(settings)
    }

    fn check(&self) -> CliResult<()> {
        if self.order_min == 0 || self.order_min > self.order_max {
            return Err(CliError::Config(format!(
                "order range must satisfy 1 <= order_min <= order_max, got {}..{}",
                self.order_min, self.order_max
            )));
        }
        if self.nfreq < 16 {
            return Err(CliError::Config(format!("nfreq must be at least 16, got {}", self.nfreq)));
        }
        if let Some(fc) = self.detrend_cutoff {
            if !(fc > 0.0 && fc < 0.5) {
                return Err(CliError::Config(format!(
                    "detrend_cutoff must lie in (0, 0.5) cycles/sample, got {fc}"
                )));
            }
        }
        self.bands()?;
        if self.surrogates > 0 {
            self.surrogate_config().validate()?;
        }
        Ok(())
    }

    pub fn bands(&self) -> CliResult<Vec<Band>> {
        self.bands
            .iter()
            .map(|b| {
                if b.name == pdgc::spectral::WHOLE_BAND {
                    return Err(CliError::Config(format!("band name '{}' is reserved", b.name)));
                }
                let band = Band::new(b.name.clone(), b.f_lo, b.f_hi)?;
                band.validate(self.fs)?;
                Ok(band)
            })
            .collect()
    }

    pub fn surrogate_config(&self) -> SurrogateConfig {
        SurrogateConfig {
            n_surrogates: self.surrogates,
            max_iter: self.iaaft_max_iter,
            tol: 0.0,
            percentile: self.percentile,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ConfigFile {
        ConfigFile::parse(
            r#"
            input = "x.csv"
            fs = 2.0
            target = "y"
            drivers = "a, b"
            bands = "lf=0.03:0.15,hf=0.15:0.4"
            out = "o"
            "#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let s = Settings::resolve(base()).unwrap();
        assert_eq!(s.drivers, vec!["a", "b"]);
        assert_eq!((s.order_min, s.order_max, s.nfreq, s.surrogates), (3, 12, 1000, 100));
        assert_eq!(s.percentile, 95.0);
        assert_eq!(s.bands.len(), 2);
        assert_eq!(s.bands[1].name, "hf");
    }

    #[test]
    fn flags_win() {
        let flags = ConfigFile {
            target: Some("a".into()),
            drivers: Some("b,y".into()),
            order_max: Some(5),
            ..Default::default()
        };
        let s = Settings::resolve(base().overridden_by(flags)).unwrap();
        assert_eq!(s.target, "a");
        assert_eq!(s.order_max, 5);
        assert_eq!(s.fs, 2.0);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(ConfigFile::parse("colour = 1"), Err(CliError::Config(_))));
    }

    #[test]
    fn invalid_settings_are_config_errors() {
        let cases = [
            ConfigFile { drivers: Some("y".into()), ..base() },
            ConfigFile { drivers: Some("a,a".into()), ..base() },
            ConfigFile { drivers: Some("a,b,c,d,e".into()), ..base() },
            ConfigFile { bands: Some("lf=0.3:0.1".into()), ..base() },
            ConfigFile { bands: Some("lf=0.3:1.5".into()), ..base() },
            ConfigFile { bands: Some("whole=0.1:0.2".into()), ..base() },
            ConfigFile { bands: Some("lf:0.1".into()), ..base() },
            ConfigFile { order_min: Some(5), order_max: Some(4), ..base() },
            ConfigFile { surrogates: Some(10), ..base() },
            ConfigFile { percentile: Some(40.0), ..base() },
            ConfigFile { nfreq: Some(8), ..base() },
            ConfigFile { fs: None, ..base() },
            ConfigFile { detrend_cutoff: Some(0.7), ..base() },
        ];
        for c in cases {
            let r = Settings::resolve(c.clone());
            assert!(matches!(r, Err(CliError::Config(_))), "{c:?} -> {r:?}");
        }
    }

    #[test]
    fn zero_surrogates_disables_test() {
        let s = Settings::resolve(ConfigFile { surrogates: Some(0), ..base() }).unwrap();
        assert_eq!(s.surrogates, 0);
    }

    #[test]
    fn relative_input_follows_config_dir() {
        let dir = std::env::temp_dir().join(format!("pdgc-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(&path, "input = \"data.csv\"\n").unwrap();
        let cfg = ConfigFile::load(&path).unwrap();
        assert_eq!(cfg.input.unwrap(), dir.join("data.csv"));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
