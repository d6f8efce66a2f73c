//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cusp_soliton::evolution::{PsiGrid, TimeParam};
use cusp_soliton::geometry::AsymptoticProbes;
use cusp_soliton::phase::IntegratorControls;
use cusp_soliton::separatrix::ShootConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Plot,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "plot" => Ok(Format::Plot),
            _ => Err(format!("unknown format {s:?} (csv, json, plot)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub offset: f64,
    pub r_max: f64,
    pub h_floor: f64,
    pub saddle_radius: f64,
    pub f_switch: f64,
    pub series_order: usize,
    /// Keep every `stride`-th sample in per-sample tables.
    pub stride: usize,
    pub isocline_points: usize,
    pub cusp_r: f64,
    pub flat_r: f64,
    pub psi_points: usize,
    pub psi_y_max: f64,
    pub t_grid: Vec<f64>,
    pub delta_grid: Vec<f64>,
    pub history_t_max: f64,
    pub history_points: usize,
    /// Values of `F` whose points are followed in time.
    pub history_anchors: Vec<f64>,
    pub out_dir: PathBuf,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        let shoot = ShootConfig::default();
        let probes = AsymptoticProbes::default();
        let psi = PsiGrid::default();
        Self {
            rel_tol: shoot.controls.rel_tol,
            abs_tol: shoot.controls.abs_tol,
            max_step: shoot.controls.max_step,
            offset: shoot.offset,
            r_max: shoot.r_max,
            h_floor: shoot.h_floor,
            saddle_radius: shoot.saddle_radius,
            f_switch: shoot.f_switch,
            series_order: shoot.series_order,
            stride: 10,
            isocline_points: 400,
            cusp_r: probes.cusp_r,
            flat_r: probes.flat_r,
            psi_points: psi.points,
            psi_y_max: psi.y_max,
            t_grid: vec![-0.7, -0.2, 0.0, 1.0, 10.0],
            delta_grid: vec![
                -0.9, -0.7, -0.5, -0.3, -0.2, -0.1, -0.05, -0.01, 0.0, 0.5, 1.0, 10.0,
            ],
            history_t_max: 1e3,
            history_points: 200,
            history_anchors: vec![-1.0, -10.0],
            out_dir: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse()
        .map_err(|_| ConfigError(format!("{key}: cannot parse {v:?}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return err(format!("line {}: expected key = value", n + 1));
            };
            cfg.set(k.trim(), v.trim())
                .map_err(|e| ConfigError(format!("line {}: {}", n + 1, e.0)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "rel_tol" => self.rel_tol = parse(key, v)?,
            "abs_tol" => self.abs_tol = parse(key, v)?,
            "max_step" => self.max_step = parse(key, v)?,
            "offset" => self.offset = parse(key, v)?,
            "r_max" => self.r_max = parse(key, v)?,
            "h_floor" => self.h_floor = parse(key, v)?,
            "saddle_radius" => self.saddle_radius = parse(key, v)?,
            "f_switch" => self.f_switch = parse(key, v)?,
            "series_order" => self.series_order = parse(key, v)?,
            "stride" => self.stride = parse(key, v)?,
            "isocline_points" => self.isocline_points = parse(key, v)?,
            "cusp_r" => self.cusp_r = parse(key, v)?,
            "flat_r" => self.flat_r = parse(key, v)?,
            "psi_points" => self.psi_points = parse(key, v)?,
            "psi_y_max" => self.psi_y_max = parse(key, v)?,
            "t_grid" => self.t_grid = parse_list(key, v)?,
            "delta_grid" => self.delta_grid = parse_list(key, v)?,
            "history_t_max" => self.history_t_max = parse(key, v)?,
            "history_points" => self.history_points = parse(key, v)?,
            "history_anchors" => self.history_anchors = parse_list(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "format" => self.format = v.parse().map_err(ConfigError)?,
            _ => return err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.shoot_config()
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        if self.stride == 0 || self.isocline_points < 2 || self.psi_points < 2 || self.history_points < 8 {
            return err("stride must be positive; isocline_points, psi_points >= 2; history_points >= 8");
        }
        if !(self.cusp_r < 0.0 && self.flat_r > 0.0 && self.flat_r <= self.r_max) {
            return err("need cusp_r < 0 < flat_r <= r_max");
        }
        if !(self.psi_y_max > 1.0 && self.history_t_max > 0.0) {
            return err("psi_y_max must exceed 1 and history_t_max must be positive");
        }
        for &t in self.t_grid.iter().chain(&self.delta_grid) {
            TimeParam::new(t).map_err(|e| ConfigError(format!("t = {t}: {e}")))?;
        }
        if self.t_grid.is_empty() {
            return err("t_grid is empty");
        }
        if let Some(f) = self
            .history_anchors
            .iter()
            .find(|f| !(**f < 0.0 && **f > -self.f_switch))
        {
            return err(format!("history anchor F = {f} must lie in (-f_switch, 0)"));
        }
        Ok(())
    }

    pub fn shoot_config(&self) -> ShootConfig {
        ShootConfig {
            offset: self.offset,
            controls: IntegratorControls {
                rel_tol: self.rel_tol,
                abs_tol: self.abs_tol,
                max_step: self.max_step,
                ..Default::default()
            },
            h_floor: self.h_floor,
            saddle_radius: self.saddle_radius,
            r_max: self.r_max,
            f_switch: self.f_switch,
            series_order: self.series_order,
            ..Default::default()
        }
    }

    pub fn probes(&self) -> AsymptoticProbes {
        AsymptoticProbes {
            cusp_r: self.cusp_r,
            flat_r: self.flat_r,
            ..Default::default()
        }
    }

    pub fn psi_grid(&self) -> PsiGrid {
        PsiGrid {
            points: self.psi_points,
            y_max: self.psi_y_max,
        }
    }

    /// Snapshot as ordered strings, so the manifest is stable.
    pub fn snapshot(&self) -> BTreeMap<&'static str, String> {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        BTreeMap::from([
            ("rel_tol", self.rel_tol.to_string()),
            ("abs_tol", self.abs_tol.to_string()),
            ("max_step", self.max_step.to_string()),
            ("offset", self.offset.to_string()),
            ("r_max", self.r_max.to_string()),
            ("h_floor", self.h_floor.to_string()),
            ("saddle_radius", self.saddle_radius.to_string()),
            ("f_switch", self.f_switch.to_string()),
            ("series_order", self.series_order.to_string()),
            ("stride", self.stride.to_string()),
            ("isocline_points", self.isocline_points.to_string()),
            ("cusp_r", self.cusp_r.to_string()),
            ("flat_r", self.flat_r.to_string()),
            ("psi_points", self.psi_points.to_string()),
            ("psi_y_max", self.psi_y_max.to_string()),
            ("t_grid", list(&self.t_grid)),
            ("delta_grid", list(&self.delta_grid)),
            ("history_t_max", self.history_t_max.to_string()),
            ("history_points", self.history_points.to_string()),
            ("history_anchors", list(&self.history_anchors)),
            ("out_dir", self.out_dir.display().to_string()),
            ("format", format!("{:?}", self.format).to_lowercase()),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_overrides_and_comments() {
        let cfg = RunConfig::parse_str("# run\nrel_tol = 1e-9\nt_grid = 0, 1 ,10 # trailing\nformat=json\n")
            .unwrap();
        assert_eq!(cfg.rel_tol, 1e-9);
        assert_eq!(cfg.t_grid, vec![0.0, 1.0, 10.0]);
        assert_eq!(cfg.format, Format::Json);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(RunConfig::parse_str("rtol = 1")
            .unwrap_err()
            .0
            .contains("unknown key"));
        assert!(RunConfig::parse_str("rel_tol = -1").is_err());
        assert!(RunConfig::parse_str("t_grid = -1").is_err());
        assert!(RunConfig::parse_str("stride").is_err());
        assert!(RunConfig::parse_str("history_anchors = -30").is_err());
    }

    #[test]
    fn snapshot_covers_every_key() {
        let cfg = RunConfig::default();
        let mut copy = RunConfig {
            rel_tol: 0.5,
            ..Default::default()
        };
        for (k, v) in cfg.snapshot() {
            copy.set(k, &v).unwrap();
        }
        assert_eq!(copy, cfg);
    }
}
