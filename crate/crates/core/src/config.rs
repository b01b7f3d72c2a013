//! `key = value` pipeline configuration.
//!
//! Relative paths are resolved against the directory holding the config file.
//! Inputs left unset fall back to the files the `simulate` stage writes into
//! the output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::classify::ClassifyConfig;
use crate::detect::DetectConfig;
use crate::detrend::{DetrendMethod, StlParams};
use crate::simulate::{ProbePolicy, SimSpan};
use crate::textio::read_input;
use crate::{Error, Result, DAY_SECS};

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
    pub observations: Option<String>,
    pub ever_active: Option<String>,
    pub geo: Option<String>,
    pub profiles: Option<String>,
    pub output: String,
    pub seed: u64,
    /// 0 picks the available parallelism.
    pub workers: usize,
    pub sim_start: i64,
    pub sim_days: u32,
    pub sim_observers: usize,
    pub probe_budget: u8,
    pub stop_on_first: bool,
    pub strict_offsets: bool,
    pub classify: ClassifyConfig,
    pub detrend_method: DetrendMethod,
    pub stl: StlParams,
    pub detect: DetectConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let classify = ClassifyConfig::default();
        PipelineConfig {
            base_dir: PathBuf::from("."),
            observations: None,
            ever_active: None,
            geo: None,
            profiles: None,
            output: "out".into(),
            seed: 1,
            workers: 0,
            sim_start: 18_262 * DAY_SECS,
            sim_days: 63,
            sim_observers: 5,
            probe_budget: 15,
            stop_on_first: true,
            strict_offsets: false,
            stl: StlParams::new(classify.samples_per_day),
            classify,
            detrend_method: DetrendMethod::Stl,
            detect: DetectConfig::default(),
        }
    }
}

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {raw:?}")))
}

fn flag(key: &str, raw: &str) -> Result<bool> {
    match raw {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {raw:?}"))),
    }
}

/// Non-negative hours, returned in seconds.
fn hours(key: &str, raw: &str) -> Result<i64> {
    let h: f64 = value(key, raw)?;
    if !(h >= 0.0) || !h.is_finite() {
        return Err(Error::Config(format!("{key} must be non-negative")));
    }
    Ok((h * 3600.0).round() as i64)
}

/// 0 in the file means "derive from the period".
fn window(key: &str, raw: &str) -> Result<Option<usize>> {
    let w: usize = value(key, raw)?;
    Ok((w > 0).then_some(w))
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_input(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = PipelineConfig {
            base_dir: base_dir.to_path_buf(),
            ..Self::default()
        };
        let mut seen = std::collections::HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, raw) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: {key} given twice", i + 1)));
            }
            cfg.set(key, raw)
                .map_err(|e| Error::Config(format!("line {}: {}", i + 1, e.to_string().trim_start_matches("config: "))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let path = || (!raw.is_empty()).then(|| raw.to_string());
        match key {
            "observations" => self.observations = path(),
            "ever_active" => self.ever_active = path(),
            "geo" => self.geo = path(),
            "profiles" => self.profiles = path(),
            "output" => self.output = raw.to_string(),
            "seed" => self.seed = value(key, raw)?,
            "workers" => self.workers = value(key, raw)?,
            "sim_start" => {
                self.sim_start = match crate::parse_day(raw) {
                    Some(day) => day * DAY_SECS,
                    None => value(key, raw)?,
                }
            }
            "sim_days" => self.sim_days = value(key, raw)?,
            "sim_observers" => self.sim_observers = value(key, raw)?,
            "probe_budget" => self.probe_budget = value(key, raw)?,
            "stop_on_first" => self.stop_on_first = flag(key, raw)?,
            "strict_offsets" => self.strict_offsets = flag(key, raw)?,
            "baseline_days" => {
                self.classify.baseline_days = value(key, raw)?;
                self.detect.baseline_days = self.classify.baseline_days;
            }
            "samples_per_day" => {
                self.classify.samples_per_day = value(key, raw)?;
                self.stl.period = self.classify.samples_per_day;
            }
            "diurnal_threshold" => self.classify.diurnal_threshold = value(key, raw)?,
            "diurnal_harmonics" => self.classify.harmonics = value(key, raw)?,
            "swing_threshold" => self.classify.swing_threshold = value(key, raw)?,
            "swing_days" => self.classify.swing_days = value(key, raw)?,
            "swing_window" => self.classify.swing_window = value(key, raw)?,
            "detrend_method" => {
                self.detrend_method = raw.parse().map_err(|e: String| Error::Config(format!("{key}: {e}")))?
            }
            "stl_seasonal_window" => self.stl.seasonal_window = value(key, raw)?,
            "stl_trend_window" => self.stl.trend_window = window(key, raw)?,
            "stl_low_pass_window" => self.stl.low_pass_window = window(key, raw)?,
            "stl_inner" => self.stl.inner = value(key, raw)?,
            "stl_outer" => self.stl.outer = value(key, raw)?,
            "stl_robust" => self.stl.robust = flag(key, raw)?,
            "cusum_h" => self.detect.h = value(key, raw)?,
            "cusum_k" => self.detect.k = value(key, raw)?,
            "cusum_min_scale" => self.detect.min_scale = value(key, raw)?,
            "cusum_weekly" => self.detect.weekly = flag(key, raw)?,
            "outage_gap_hours" => self.detect.outage_gap = hours(key, raw)?,
            "merge_gap_hours" => self.detect.merge_gap = hours(key, raw)?,
            "suppress_days" => self.detect.suppress_days = value(key, raw)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        let c = &self.classify;
        if c.samples_per_day < 2 {
            return fail("samples_per_day must be at least 2");
        }
        if !(c.diurnal_threshold > 0.0 && c.diurnal_threshold <= 1.0) {
            return fail("diurnal_threshold must be in (0, 1]");
        }
        if c.harmonics == 0 {
            return fail("diurnal_harmonics must be positive");
        }
        if c.swing_threshold == 0 || c.swing_days == 0 || c.swing_window == 0 {
            return fail("swing_threshold, swing_days and swing_window must be positive");
        }
        if c.swing_days > c.swing_window {
            return fail("swing_days cannot exceed swing_window");
        }
        if !(self.detect.h > 0.0) || !(self.detect.k >= 0.0) || !(self.detect.min_scale >= 0.0) {
            return fail("cusum_h must be positive, cusum_k and cusum_min_scale non-negative");
        }
        if self.stl.seasonal_window < 3 || self.stl.inner == 0 {
            return fail("stl_seasonal_window must be at least 3 and stl_inner positive");
        }
        if ProbePolicy::new(self.probe_budget, self.stop_on_first).is_err() {
            return fail("probe_budget must be in 1..=16");
        }
        if self.sim_observers == 0 {
            return fail("sim_observers must be positive");
        }
        if self.sim_start.rem_euclid(DAY_SECS) != 0 {
            return fail("sim_start must be a UTC midnight");
        }
        if self.sim_days < 7 {
            return fail("sim_days must be at least 7");
        }
        if self.output.is_empty() {
            return fail("output must be set");
        }
        Ok(())
    }

    pub fn resolve(&self, raw: &str) -> PathBuf {
        let p = Path::new(raw);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output)
    }

    fn input(&self, configured: &Option<String>, default_name: &str) -> PathBuf {
        match configured {
            Some(raw) => self.resolve(raw),
            None => self.output_dir().join(default_name),
        }
    }

    pub fn observations_path(&self) -> PathBuf {
        self.input(&self.observations, "observations.txt")
    }

    pub fn ever_active_path(&self) -> PathBuf {
        self.input(&self.ever_active, "ever_active.txt")
    }

    pub fn geo_path(&self) -> PathBuf {
        self.input(&self.geo, "geo.txt")
    }

    pub fn profiles_path(&self) -> Option<PathBuf> {
        self.profiles.as_deref().map(|p| self.resolve(p))
    }

    pub fn probe_policy(&self) -> ProbePolicy {
        ProbePolicy::new(self.probe_budget, self.stop_on_first).expect("validated")
    }

    pub fn sim_span(&self) -> SimSpan {
        SimSpan {
            start: self.sim_start,
            days: self.sim_days,
        }
    }

    /// Every setting except `output`, one `key = value` per line, fixed order.
    pub fn dump(&self) -> String {
        // resolved, so the copy in the output directory still points at the inputs
        let opt = |v: &Option<String>| match v {
            Some(raw) => {
                let p = self.resolve(raw);
                std::path::absolute(&p).unwrap_or(p).to_string_lossy().into_owned()
            }
            None => String::new(),
        };
        let win = |v: Option<usize>| v.unwrap_or(0);
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("observations", opt(&self.observations));
        put("ever_active", opt(&self.ever_active));
        put("geo", opt(&self.geo));
        put("profiles", opt(&self.profiles));
        put("seed", self.seed.to_string());
        put(
            "sim_start",
            if self.sim_start.rem_euclid(DAY_SECS) == 0 {
                crate::format_day(self.sim_start / DAY_SECS)
            } else {
                self.sim_start.to_string()
            },
        );
        put("sim_days", self.sim_days.to_string());
        put("sim_observers", self.sim_observers.to_string());
        put("probe_budget", self.probe_budget.to_string());
        put("stop_on_first", self.stop_on_first.to_string());
        put("strict_offsets", self.strict_offsets.to_string());
        put("baseline_days", self.classify.baseline_days.to_string());
        put("samples_per_day", self.classify.samples_per_day.to_string());
        put("diurnal_threshold", self.classify.diurnal_threshold.to_string());
        put("diurnal_harmonics", self.classify.harmonics.to_string());
        put("swing_threshold", self.classify.swing_threshold.to_string());
        put("swing_days", self.classify.swing_days.to_string());
        put("swing_window", self.classify.swing_window.to_string());
        put("detrend_method", self.detrend_method.to_string());
        put("stl_seasonal_window", self.stl.seasonal_window.to_string());
        put("stl_trend_window", win(self.stl.trend_window).to_string());
        put("stl_low_pass_window", win(self.stl.low_pass_window).to_string());
        put("stl_inner", self.stl.inner.to_string());
        put("stl_outer", self.stl.outer.to_string());
        put("stl_robust", self.stl.robust.to_string());
        put("cusum_h", self.detect.h.to_string());
        put("cusum_k", self.detect.k.to_string());
        put("cusum_min_scale", self.detect.min_scale.to_string());
        put("cusum_weekly", self.detect.weekly.to_string());
        put("outage_gap_hours", (self.detect.outage_gap as f64 / 3600.0).to_string());
        put("merge_gap_hours", (self.detect.merge_gap as f64 / 3600.0).to_string());
        put("suppress_days", self.detect.suppress_days.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = PipelineConfig::parse("# c\noutput = res\ncusum_h=4\nstl_trend_window = 0\n", Path::new("/base")).unwrap();
        assert_eq!(cfg.detect.h, 4.0);
        assert_eq!(cfg.detect.k, 0.5);
        assert_eq!(cfg.stl.trend_window, None);
        assert_eq!(cfg.output_dir(), PathBuf::from("/base/res"));
        assert_eq!(cfg.observations_path(), PathBuf::from("/base/res/observations.txt"));
    }

    #[test]
    fn malformed() {
        for text in ["nonsense", "colour = red", "cusum_h = -1", "seed = x", "seed = 1\nseed = 2", "probe_budget = 17"] {
            assert!(matches!(PipelineConfig::parse(text, Path::new(".")), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn dump_parses_back() {
        let cfg = PipelineConfig::parse("geo = g.txt\nswing_threshold = 6\noutage_gap_hours = 12\n", Path::new("/b")).unwrap();
        let mut again = PipelineConfig::parse(&cfg.dump(), Path::new("/elsewhere")).unwrap();
        assert_eq!(again.geo_path(), cfg.geo_path());
        again.geo = cfg.geo.clone();
        again.base_dir = cfg.base_dir.clone();
        assert_eq!(again, cfg);
    }
}
