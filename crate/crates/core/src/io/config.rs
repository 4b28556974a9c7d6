//! Plain-text `key = value` run configuration.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::export::{fmt_f64, parse_f64};
use crate::bethe::{Parity, SolverConfig};
use crate::continuation::{ContinuationConfig, GridSpec};
use crate::eigensystem::OracleConfig;
use crate::error::{Error, Result};
use crate::holonomy::{KeyholeSpec, Ordering, TransportConfig, TruncationSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub residual_tol: f64,
    pub newton_max: usize,
    pub proxy_infinity: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub proximity: f64,
    pub grid_re_min: f64,
    pub grid_re_max: f64,
    pub grid_im_min: f64,
    pub grid_im_max: f64,
    pub grid_n_re: usize,
    pub grid_n_im: usize,
    pub parity: Parity,
    pub n_levels: usize,
    pub transport_rtol: f64,
    pub transport_atol: f64,
    pub ordering: Ordering,
    pub loop_radius: f64,
    pub loop_segments: usize,
    pub dodge: f64,
    pub ep_search_radius: f64,
    pub ep_search_starts: usize,
    pub oracle_nodes: usize,
    pub oracle_dg: f64,
    /// Where results go; `-` is stdout. Not part of the hash.
    pub output: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-12,
            newton_max: 50,
            proxy_infinity: 1e6,
            max_step: 0.05,
            min_step: 1e-12,
            proximity: 1e-4,
            grid_re_min: -8.0,
            grid_re_max: 2.0,
            grid_im_min: -5.0,
            grid_im_max: 5.0,
            grid_n_re: 201,
            grid_n_im: 201,
            parity: Parity::Even,
            n_levels: 12,
            transport_rtol: 1e-10,
            transport_atol: 1e-12,
            ordering: Ordering::AntiPathOrdered,
            loop_radius: 1e-3,
            loop_segments: 64,
            dodge: 0.1,
            ep_search_radius: 2.0,
            ep_search_starts: 20,
            oracle_nodes: 256,
            oracle_dg: 1e-5,
            output: "-".into(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "residual_tol",
    "newton_max",
    "proxy_infinity",
    "max_step",
    "min_step",
    "proximity",
    "grid_re_min",
    "grid_re_max",
    "grid_im_min",
    "grid_im_max",
    "grid_n_re",
    "grid_n_im",
    "parity",
    "n_levels",
    "transport_rtol",
    "transport_atol",
    "ordering",
    "loop_radius",
    "loop_segments",
    "dodge",
    "ep_search_radius",
    "ep_search_starts",
    "oracle_nodes",
    "oracle_dg",
    "output",
];

fn ordering_name(o: Ordering) -> &'static str {
    match o {
        Ordering::AntiPathOrdered => "anti-path-ordered",
        Ordering::PathOrdered => "path-ordered",
    }
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: expected a non-negative integer, got `{v}`")))
}

fn parse_float(key: &str, v: &str) -> Result<f64> {
    parse_f64(v).map_err(|_| Error::Config(format!("{key}: expected a number, got `{v}`")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "residual_tol" => self.residual_tol = parse_float(key, v)?,
            "newton_max" => self.newton_max = parse_usize(key, v)?,
            "proxy_infinity" => self.proxy_infinity = parse_float(key, v)?,
            "max_step" => self.max_step = parse_float(key, v)?,
            "min_step" => self.min_step = parse_float(key, v)?,
            "proximity" => self.proximity = parse_float(key, v)?,
            "grid_re_min" => self.grid_re_min = parse_float(key, v)?,
            "grid_re_max" => self.grid_re_max = parse_float(key, v)?,
            "grid_im_min" => self.grid_im_min = parse_float(key, v)?,
            "grid_im_max" => self.grid_im_max = parse_float(key, v)?,
            "grid_n_re" => self.grid_n_re = parse_usize(key, v)?,
            "grid_n_im" => self.grid_n_im = parse_usize(key, v)?,
            "parity" => self.parity = v.parse().map_err(|_| Error::Config(format!("parity: `{v}`")))?,
            "n_levels" => self.n_levels = parse_usize(key, v)?,
            "transport_rtol" => self.transport_rtol = parse_float(key, v)?,
            "transport_atol" => self.transport_atol = parse_float(key, v)?,
            "ordering" => {
                self.ordering = match v {
                    "anti-path-ordered" => Ordering::AntiPathOrdered,
                    "path-ordered" => Ordering::PathOrdered,
                    _ => return Err(Error::Config(format!("ordering: `{v}`"))),
                }
            }
            "loop_radius" => self.loop_radius = parse_float(key, v)?,
            "loop_segments" => self.loop_segments = parse_usize(key, v)?,
            "dodge" => self.dodge = parse_float(key, v)?,
            "ep_search_radius" => self.ep_search_radius = parse_float(key, v)?,
            "ep_search_starts" => self.ep_search_starts = parse_usize(key, v)?,
            "oracle_nodes" => self.oracle_nodes = parse_usize(key, v)?,
            "oracle_dg" => self.oracle_dg = parse_float(key, v)?,
            "output" => self.output = v.to_string(),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("residual_tol", self.residual_tol),
            ("max_step", self.max_step),
            ("min_step", self.min_step),
            ("proximity", self.proximity),
            ("transport_rtol", self.transport_rtol),
            ("transport_atol", self.transport_atol),
            ("loop_radius", self.loop_radius),
            ("dodge", self.dodge),
            ("ep_search_radius", self.ep_search_radius),
            ("oracle_dg", self.oracle_dg),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{k} must be strictly positive, got {v}")));
            }
        }
        if !(self.proxy_infinity >= 1e4 && self.proxy_infinity.is_finite()) {
            return Err(Error::Config(format!(
                "proxy_infinity must be at least 1e4, got {}",
                self.proxy_infinity
            )));
        }
        if self.min_step > self.max_step {
            return Err(Error::Config("min_step exceeds max_step".into()));
        }
        if self.n_levels < 2 {
            return Err(Error::Config("n_levels must be at least 2".into()));
        }
        if self.grid_n_re < 2 || self.grid_n_im < 2 {
            return Err(Error::Config("grid needs at least 2 points per axis".into()));
        }
        if self.grid_re_min >= self.grid_re_max || self.grid_im_min >= self.grid_im_max {
            return Err(Error::Config("empty grid window".into()));
        }
        if self.loop_radius < 1e-4 {
            return Err(Error::Config("loop_radius must be at least 1e-4".into()));
        }
        if self.loop_segments < 3 || self.newton_max == 0 || self.oracle_nodes < 2 || self.ep_search_starts == 0 {
            return Err(Error::Config("counts out of range".into()));
        }
        Ok(())
    }

    fn value(&self, key: &str) -> String {
        match key {
            "residual_tol" => fmt_f64(self.residual_tol),
            "newton_max" => self.newton_max.to_string(),
            "proxy_infinity" => fmt_f64(self.proxy_infinity),
            "max_step" => fmt_f64(self.max_step),
            "min_step" => fmt_f64(self.min_step),
            "proximity" => fmt_f64(self.proximity),
            "grid_re_min" => fmt_f64(self.grid_re_min),
            "grid_re_max" => fmt_f64(self.grid_re_max),
            "grid_im_min" => fmt_f64(self.grid_im_min),
            "grid_im_max" => fmt_f64(self.grid_im_max),
            "grid_n_re" => self.grid_n_re.to_string(),
            "grid_n_im" => self.grid_n_im.to_string(),
            "parity" => self.parity.name().to_string(),
            "n_levels" => self.n_levels.to_string(),
            "transport_rtol" => fmt_f64(self.transport_rtol),
            "transport_atol" => fmt_f64(self.transport_atol),
            "ordering" => ordering_name(self.ordering).to_string(),
            "loop_radius" => fmt_f64(self.loop_radius),
            "loop_segments" => self.loop_segments.to_string(),
            "dodge" => fmt_f64(self.dodge),
            "ep_search_radius" => fmt_f64(self.ep_search_radius),
            "ep_search_starts" => self.ep_search_starts.to_string(),
            "oracle_nodes" => self.oracle_nodes.to_string(),
            "oracle_dg" => fmt_f64(self.oracle_dg),
            "output" => self.output.clone(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Full `key = value` listing, parseable by [`RunConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for k in KEYS {
            let _ = writeln!(s, "{k} = {}", self.value(k));
        }
        s
    }

    /// Sorted listing of every key that influences results.
    pub fn canonical(&self) -> String {
        let mut keys: Vec<&str> = KEYS.iter().copied().filter(|k| *k != "output").collect();
        keys.sort_unstable();
        let mut s = String::new();
        for k in keys {
            let _ = writeln!(s, "{k}={}", self.value(k));
        }
        s
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            residual_tol: self.residual_tol,
            max_newton: self.newton_max,
            proxy_infinity: self.proxy_infinity,
            ..SolverConfig::default()
        }
    }

    pub fn continuation(&self) -> ContinuationConfig {
        ContinuationConfig {
            residual_tol: self.residual_tol,
            proximity: self.proximity,
            ..ContinuationConfig::default()
        }
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            re_min: self.grid_re_min,
            re_max: self.grid_re_max,
            im_min: self.grid_im_min,
            im_max: self.grid_im_max,
            n_re: self.grid_n_re,
            n_im: self.grid_n_im,
        }
    }

    pub fn truncation(&self) -> Result<TruncationSpec> {
        TruncationSpec::new(self.parity, self.n_levels)
    }

    pub fn transport(&self) -> TransportConfig {
        TransportConfig {
            rtol: self.transport_rtol,
            atol: self.transport_atol,
            ordering: self.ordering,
            continuation: self.continuation(),
            ..TransportConfig::default()
        }
    }

    pub fn keyhole(&self) -> KeyholeSpec {
        KeyholeSpec {
            radius: self.loop_radius,
            segments: self.loop_segments,
            dodge: self.dodge,
        }
    }

    pub fn oracle(&self) -> OracleConfig {
        OracleConfig {
            nodes: self.oracle_nodes,
            dg: self.oracle_dg,
            ..OracleConfig::default()
        }
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
    fn parse_overrides_and_comments() {
        let c = RunConfig::parse("# run\nn_levels = 8\nparity=odd  # family\nproxy_infinity = 1e5\n").unwrap();
        assert_eq!(c.n_levels, 8);
        assert_eq!(c.parity, Parity::Odd);
        assert_eq!(c.proxy_infinity, 1e5);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::parse("residual_tol = 0").is_err());
        assert!(RunConfig::parse("proxy_infinity = 100").is_err());
        assert!(RunConfig::parse("bogus = 1").is_err());
        assert!(RunConfig::parse("n_levels").is_err());
        assert!(RunConfig::parse("transport_atol = -1").is_err());
    }

    #[test]
    fn text_round_trip_and_hash() {
        let mut c = RunConfig {
            loop_radius: 2.5e-3,
            ordering: Ordering::PathOrdered,
            ..RunConfig::default()
        };
        let back = RunConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        let mut d = c.clone();
        d.output = "elsewhere.csv".into();
        assert_eq!(d.hash(), c.hash());
        d.n_levels = 16;
        assert_ne!(d.hash(), c.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn derived_settings_follow_keys() {
        let c = RunConfig::parse("n_levels = 6\nparity = odd\nloop_radius = 2e-3\nproximity = 1e-5").unwrap();
        let t = c.truncation().unwrap();
        assert_eq!(t.levels(), vec![1, 3, 5, 7, 9, 11]);
        assert_eq!(c.keyhole().radius, 2e-3);
        assert_eq!(c.transport().continuation.proximity, 1e-5);
        assert_eq!(c.grid().n_re, 201);
        assert_eq!(c.solver().proxy_infinity, 1e6);
    }
}
