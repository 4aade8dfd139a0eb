//! Flat `key = value` run configuration.
//!
//! Every key is checked on its own first (type and range), then against the
//! chosen profile kind, preset and scheme. The echo lists the effective
//! values of all keys that apply, in a fixed order, so that parsing an echo
//! reproduces it exactly.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::GeometryError;
use crate::flow::{GhostRule, GraphState, Scheme, StepperConfig};
use crate::geometry::{
    build_grid, make_circle_profile, make_interval_profile, make_star_profile, DomainGrid, ProfileCurve,
    Resolution, TrigSeries,
};
use crate::mms::{Constant, ManufacturedCase, RadialCos, RadialFrame};

/// A single-line configuration error, rendered as `key: constraint`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(key: &str, message: impl Into<String>) -> Self {
        Self {
            key: Some(key.to_string()),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(k) => write!(f, "{k}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Interval { r0: f64, r1: f64 },
    Circle { center: [f64; 2], a: f64 },
    Star { center: [f64; 2], cos: Vec<f64>, sin: Vec<f64> },
}

impl ProfileSpec {
    pub fn dimension(&self) -> usize {
        match self {
            ProfileSpec::Interval { .. } => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    /// `u ≡ amplitude`.
    Const { amplitude: f64 },
    /// `amplitude · cos(k π s)`.
    RadialCos { amplitude: f64, k: f64 },
    /// `amplitude · (1 + cos(π s)) / 2`; `amplitude > 2π` wraps more than once.
    Wrap { amplitude: f64 },
    /// Radial `(s, u)` table, linearly interpolated.
    Table { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmsKind {
    Cos,
    Const,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsSpec {
    pub kind: MmsKind,
    pub amplitude: f64,
    pub growth: f64,
    pub t_final: f64,
    /// Coarsest resolution: `n` in 1D, `ns = nphi` in 2D.
    pub base: usize,
    pub order_min: f64,
    pub order_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub profile: ProfileSpec,
    pub resolution: Resolution,
    pub initial: InitialSpec,
    pub stepper: StepperConfig,
    /// Step limit; 0 means none.
    pub max_steps: usize,
    pub cadence: usize,
    pub levels: Vec<f64>,
    /// `h2v2_max` cap as a multiple of its initial value.
    pub h2v2_factor: f64,
    pub output_dir: PathBuf,
    /// Snapshot every this many steps; 0 writes only the first and last.
    pub snapshot_every: usize,
    pub mms: MmsSpec,
    /// Directory that relative paths are resolved against. Not echoed.
    pub base_dir: PathBuf,
}

#[derive(Clone, Copy)]
enum Kind {
    F64,
    Positive,
    NonNegative,
    Sigma,
    Cap,
    List,
    Count(usize),
    Text,
    Choice(&'static [&'static str]),
}

const KEYS: &[(&str, Kind)] = &[
    ("profile.kind", Kind::Choice(&["interval", "circle", "star"])),
    ("profile.r0", Kind::Positive),
    ("profile.r1", Kind::Positive),
    ("profile.center_y", Kind::F64),
    ("profile.center_r", Kind::Positive),
    ("profile.a", Kind::Positive),
    ("profile.cos", Kind::List),
    ("profile.sin", Kind::List),
    ("grid.n", Kind::Count(3)),
    ("grid.ns", Kind::Count(8)),
    ("grid.nphi", Kind::Count(8)),
    ("initial.preset", Kind::Choice(&["const", "radial_cos", "wrap", "table"])),
    ("initial.amplitude", Kind::F64),
    ("initial.k", Kind::Positive),
    ("initial.table", Kind::Text),
    ("stepper.sigma", Kind::Sigma),
    ("stepper.scheme", Kind::Choice(&["euler", "rk4", "rkl2"])),
    ("stepper.stages", Kind::Count(3)),
    ("stepper.t_final", Kind::Positive),
    ("stepper.osc_tol", Kind::NonNegative),
    ("stepper.vtilde_cap", Kind::Cap),
    ("stepper.max_steps", Kind::Count(0)),
    ("diagnostics.cadence", Kind::Count(1)),
    ("diagnostics.levels", Kind::List),
    ("diagnostics.h2v2_factor", Kind::Positive),
    ("output.dir", Kind::Text),
    ("output.snapshot_every", Kind::Count(0)),
    ("mms.case", Kind::Choice(&["cos", "const"])),
    ("mms.amplitude", Kind::F64),
    ("mms.growth", Kind::F64),
    ("mms.t_final", Kind::Positive),
    ("mms.base", Kind::Count(3)),
    ("mms.order_min", Kind::F64),
    ("mms.order_max", Kind::F64),
    ("debug.ghost_rule", Kind::Choice(&["neumann", "faulty"])),
];

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(ConfigError::at(key, format!("expected a finite number, got '{v}'"))),
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| parse_f64(key, x.trim())).collect()
}

fn check_value(key: &str, kind: Kind, v: &str) -> Result<(), ConfigError> {
    match kind {
        Kind::F64 => parse_f64(key, v).map(|_| ()),
        Kind::Positive => {
            if parse_f64(key, v)? > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::at(key, "must be > 0"))
            }
        }
        Kind::NonNegative => {
            if parse_f64(key, v)? >= 0.0 {
                Ok(())
            } else {
                Err(ConfigError::at(key, "must be ≥ 0"))
            }
        }
        Kind::Sigma => {
            let x = parse_f64(key, v)?;
            if x > 0.0 && x <= 0.5 {
                Ok(())
            } else {
                Err(ConfigError::at(key, format!("sigma ∈ (0, 0.5], got {x}")))
            }
        }
        Kind::Cap => {
            if parse_f64(key, v)? > 1.0 {
                Ok(())
            } else {
                Err(ConfigError::at(key, "must be > 1"))
            }
        }
        Kind::List => parse_list(key, v).map(|_| ()),
        Kind::Count(min) => match v.parse::<usize>() {
            Ok(n) if n >= min => Ok(()),
            Ok(_) => Err(ConfigError::at(key, format!("must be ≥ {min}"))),
            Err(_) => Err(ConfigError::at(key, format!("expected a non-negative integer, got '{v}'"))),
        },
        Kind::Text => {
            if v.is_empty() {
                Err(ConfigError::at(key, "must not be empty"))
            } else {
                Ok(())
            }
        }
        Kind::Choice(opts) => {
            if opts.contains(&v) {
                Ok(())
            } else {
                Err(ConfigError::at(key, format!("expected one of {}, got '{v}'", opts.join(" | "))))
            }
        }
    }
}

/// Raw key/value pairs with tracking of which keys were consumed.
struct Entries {
    map: BTreeMap<String, String>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn f64(&mut self, key: &str, default: f64) -> f64 {
        self.take(key).map_or(default, |v| v.parse().unwrap())
    }

    fn usize(&mut self, key: &str, default: usize) -> usize {
        self.take(key).map_or(default, |v| v.parse().unwrap())
    }

    fn list(&mut self, key: &str, default: &[f64]) -> Vec<f64> {
        self.take(key)
            .map_or_else(|| default.to_vec(), |v| parse_list(key, &v).unwrap())
    }

    fn text(&mut self, key: &str, default: &str) -> String {
        self.take(key).unwrap_or_else(|| default.to_string())
    }
}

fn geometry_key(e: &GeometryError, kind: &str) -> &'static str {
    match (e, kind) {
        (GeometryError::EmptyInterval { .. }, _) => "profile.r1",
        (GeometryError::TouchesAxis | GeometryError::NonPositiveRadius, "circle") => "profile.a",
        (GeometryError::RadiusNonPositive { .. } | GeometryError::ExitsHalfPlane { .. }, _) => "profile.cos",
        (GeometryError::GridFold { .. }, _) => "profile.sin",
        (GeometryError::OddAngularResolution(_), _) => "grid.nphi",
        _ => "profile.kind",
    }
}

/// Parses and validates a configuration. Relative paths resolve against the
/// current directory; see [`parse_config_file`] for file-relative paths.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut map = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError {
                key: None,
                message: format!("line {}: expected 'key = value'", no + 1),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        let Some(&(_, kind)) = KEYS.iter().find(|(name, _)| *name == k) else {
            return Err(ConfigError::at(k, format!("unknown key (line {})", no + 1)));
        };
        check_value(k, kind, v)?;
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(ConfigError::at(k, "given more than once"));
        }
    }
    let mut e = Entries { map };
    let not_used = |e: &Entries, keys: &[&str], why: &str| -> Result<(), ConfigError> {
        match keys.iter().find(|k| e.map.contains_key(**k)) {
            Some(k) => Err(ConfigError::at(k, format!("not used by {why}"))),
            None => Ok(()),
        }
    };

    let kind = e.text("profile.kind", "interval");
    let profile = match kind.as_str() {
        "interval" => {
            not_used(
                &e,
                &["profile.center_y", "profile.center_r", "profile.a", "profile.cos", "profile.sin", "grid.ns", "grid.nphi"],
                "profile.kind = interval",
            )?;
            ProfileSpec::Interval {
                r0: e.f64("profile.r0", 1.0),
                r1: e.f64("profile.r1", 2.0),
            }
        }
        "circle" => {
            not_used(&e, &["profile.r0", "profile.r1", "profile.cos", "profile.sin", "grid.n"], "profile.kind = circle")?;
            ProfileSpec::Circle {
                center: [e.f64("profile.center_y", 0.0), e.f64("profile.center_r", 2.0)],
                a: e.f64("profile.a", 0.5),
            }
        }
        _ => {
            not_used(&e, &["profile.r0", "profile.r1", "profile.a", "grid.n"], "profile.kind = star")?;
            let center = [e.f64("profile.center_y", 0.0), e.f64("profile.center_r", 2.0)];
            let cos = e.list("profile.cos", &[0.5]);
            if cos.is_empty() {
                return Err(ConfigError::at("profile.cos", "needs at least the constant term"));
            }
            let sin = e.list("profile.sin", &[]);
            ProfileSpec::Star { center, cos, sin }
        }
    };
    let resolution = if profile.dimension() == 1 {
        Resolution::Interval(e.usize("grid.n", 129))
    } else {
        Resolution::Polar {
            ns: e.usize("grid.ns", 64),
            nphi: e.usize("grid.nphi", 64),
        }
    };

    let preset = e.text("initial.preset", "radial_cos");
    let initial = match preset.as_str() {
        "const" => {
            not_used(&e, &["initial.k", "initial.table"], "initial.preset = const")?;
            InitialSpec::Const {
                amplitude: e.f64("initial.amplitude", 0.0),
            }
        }
        "radial_cos" => {
            not_used(&e, &["initial.table"], "initial.preset = radial_cos")?;
            InitialSpec::RadialCos {
                amplitude: e.f64("initial.amplitude", 1.0),
                k: e.f64("initial.k", 1.0),
            }
        }
        "wrap" => {
            not_used(&e, &["initial.k", "initial.table"], "initial.preset = wrap")?;
            InitialSpec::Wrap {
                amplitude: e.f64("initial.amplitude", 3.0 * PI),
            }
        }
        _ => {
            not_used(&e, &["initial.k", "initial.amplitude"], "initial.preset = table")?;
            match e.take("initial.table") {
                Some(p) => InitialSpec::Table { path: PathBuf::from(p) },
                None => return Err(ConfigError::at("initial.table", "required by initial.preset = table")),
            }
        }
    };

    let scheme = match e.text("stepper.scheme", "euler").as_str() {
        "euler" => Scheme::Euler,
        "rk4" => Scheme::Rk4,
        _ => Scheme::Rkl2 {
            stages: e.usize("stepper.stages", 40),
        },
    };
    not_used(&e, &["stepper.stages"], "this stepper.scheme")?;
    let ghost_rule = match e.text("debug.ghost_rule", "neumann").as_str() {
        "faulty" => GhostRule::Faulty,
        _ => GhostRule::Neumann,
    };
    let stepper = StepperConfig {
        sigma: e.f64("stepper.sigma", 0.2),
        scheme,
        t_final: e.f64("stepper.t_final", 10.0),
        vtilde_cap: e.f64("stepper.vtilde_cap", 1e3),
        osc_tol: e.f64("stepper.osc_tol", 1e-4),
        ghost_rule,
        parallel: false,
    };
    let max_steps = e.usize("stepper.max_steps", 0);
    let cadence = e.usize("diagnostics.cadence", 10);
    let mut levels = e.list("diagnostics.levels", &[0.5, 1.0, 1.5, 2.0, 2.5, 3.0]);
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConfigError::at("diagnostics.levels", "must be strictly increasing"));
    }
    levels.dedup();
    let h2v2_factor = e.f64("diagnostics.h2v2_factor", 100.0);
    let output_dir = PathBuf::from(e.text("output.dir", "out"));
    let snapshot_every = e.usize("output.snapshot_every", 0);

    let one_d = profile.dimension() == 1;
    let mms_kind = match e.text("mms.case", "cos").as_str() {
        "const" => MmsKind::Const,
        _ => MmsKind::Cos,
    };
    let mms = MmsSpec {
        kind: mms_kind,
        amplitude: e.f64("mms.amplitude", if one_d { 1.0 } else { 0.3 }),
        growth: e.f64("mms.growth", if one_d { 0.0 } else { 1.0 }),
        t_final: e.f64("mms.t_final", if one_d { 0.05 } else { 0.02 }),
        base: e.usize("mms.base", if one_d { 33 } else { 8 }),
        order_min: e.f64("mms.order_min", if one_d { 1.8 } else { 1.7 }),
        order_max: e.f64("mms.order_max", if one_d { 2.2 } else { 2.3 }),
    };
    if mms.order_min > mms.order_max {
        return Err(ConfigError::at("mms.order_min", "must be ≤ mms.order_max"));
    }
    if let Some(k) = e.map.keys().next() {
        return Err(ConfigError::at(k, "not used by this configuration"));
    }

    let cfg = RunConfig {
        profile,
        resolution,
        initial,
        stepper,
        max_steps,
        cadence,
        levels,
        h2v2_factor,
        output_dir,
        snapshot_every,
        mms,
        base_dir: PathBuf::from("."),
    };
    // geometry is validated up front so errors name a key
    cfg.grid()?;
    cfg.stepper
        .validate()
        .map_err(|err| ConfigError::at("stepper.scheme", err.to_string()))?;
    Ok(cfg)
}

/// Reads and parses a config file; relative paths in it resolve against the
/// file's directory.
pub fn parse_config_file(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        key: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let mut cfg = parse_config(&text)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    Ok(cfg)
}

fn list_text(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    pub fn dimension(&self) -> usize {
        self.profile.dimension()
    }

    /// Canonical text of the effective configuration.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        match &self.profile {
            ProfileSpec::Interval { r0, r1 } => {
                kv("profile.kind", "interval".into());
                kv("profile.r0", format!("{r0:?}"));
                kv("profile.r1", format!("{r1:?}"));
            }
            ProfileSpec::Circle { center, a } => {
                kv("profile.kind", "circle".into());
                kv("profile.center_y", format!("{:?}", center[0]));
                kv("profile.center_r", format!("{:?}", center[1]));
                kv("profile.a", format!("{a:?}"));
            }
            ProfileSpec::Star { center, cos, sin } => {
                kv("profile.kind", "star".into());
                kv("profile.center_y", format!("{:?}", center[0]));
                kv("profile.center_r", format!("{:?}", center[1]));
                kv("profile.cos", list_text(cos));
                kv("profile.sin", list_text(sin));
            }
        }
        match self.resolution {
            Resolution::Interval(n) => kv("grid.n", n.to_string()),
            Resolution::Polar { ns, nphi } => {
                kv("grid.ns", ns.to_string());
                kv("grid.nphi", nphi.to_string());
            }
        }
        match &self.initial {
            InitialSpec::Const { amplitude } => {
                kv("initial.preset", "const".into());
                kv("initial.amplitude", format!("{amplitude:?}"));
            }
            InitialSpec::RadialCos { amplitude, k } => {
                kv("initial.preset", "radial_cos".into());
                kv("initial.amplitude", format!("{amplitude:?}"));
                kv("initial.k", format!("{k:?}"));
            }
            InitialSpec::Wrap { amplitude } => {
                kv("initial.preset", "wrap".into());
                kv("initial.amplitude", format!("{amplitude:?}"));
            }
            InitialSpec::Table { path } => {
                kv("initial.preset", "table".into());
                kv("initial.table", path.display().to_string());
            }
        }
        let s = &self.stepper;
        kv("stepper.sigma", format!("{:?}", s.sigma));
        kv("stepper.scheme", s.scheme.name().into());
        if let Scheme::Rkl2 { stages } = s.scheme {
            kv("stepper.stages", stages.to_string());
        }
        kv("stepper.t_final", format!("{:?}", s.t_final));
        kv("stepper.osc_tol", format!("{:?}", s.osc_tol));
        kv("stepper.vtilde_cap", format!("{:?}", s.vtilde_cap));
        kv("stepper.max_steps", self.max_steps.to_string());
        kv("diagnostics.cadence", self.cadence.to_string());
        kv("diagnostics.levels", list_text(&self.levels));
        kv("diagnostics.h2v2_factor", format!("{:?}", self.h2v2_factor));
        kv("output.dir", self.output_dir.display().to_string());
        kv("output.snapshot_every", self.snapshot_every.to_string());
        let m = &self.mms;
        kv("mms.case", if m.kind == MmsKind::Const { "const" } else { "cos" }.into());
        kv("mms.amplitude", format!("{:?}", m.amplitude));
        kv("mms.growth", format!("{:?}", m.growth));
        kv("mms.t_final", format!("{:?}", m.t_final));
        kv("mms.base", m.base.to_string());
        kv("mms.order_min", format!("{:?}", m.order_min));
        kv("mms.order_max", format!("{:?}", m.order_max));
        if s.ghost_rule == GhostRule::Faulty {
            kv("debug.ghost_rule", "faulty".into());
        }
        out
    }

    /// SHA-256 of the echo text, lowercase hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.echo().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn profile_curve(&self) -> Result<ProfileCurve, ConfigError> {
        let (res, kind) = match &self.profile {
            ProfileSpec::Interval { r0, r1 } => (make_interval_profile(*r0, *r1), "interval"),
            ProfileSpec::Circle { center, a } => (make_circle_profile(*center, *a), "circle"),
            ProfileSpec::Star { center, cos, sin } => {
                (make_star_profile(*center, TrigSeries::new(cos.clone(), sin.clone())), "star")
            }
        };
        res.map_err(|e| ConfigError::at(geometry_key(&e, kind), e.to_string()))
    }

    pub fn grid(&self) -> Result<DomainGrid, ConfigError> {
        let profile = self.profile_curve()?;
        let kind = match self.profile {
            ProfileSpec::Interval { .. } => "interval",
            ProfileSpec::Circle { .. } => "circle",
            ProfileSpec::Star { .. } => "star",
        };
        build_grid(&profile, self.resolution).map_err(|e| ConfigError::at(geometry_key(&e, kind), e.to_string()))
    }

    /// Initial state and any compatibility warnings.
    pub fn initial_state(&self, grid: Arc<DomainGrid>) -> Result<(GraphState, Vec<String>), ConfigError> {
        let mut warnings = Vec::new();
        let state = match &self.initial {
            InitialSpec::Const { amplitude } => GraphState::constant(grid, *amplitude),
            InitialSpec::RadialCos { amplitude, k } => {
                if k.fract() != 0.0 {
                    warnings.push(format!(
                        "initial.k = {k} is not an integer: u0 has nonzero normal slope at the boundary"
                    ));
                }
                let (a, w) = (*amplitude, k * PI);
                GraphState::from_fn(grid, |n| a * (w * n.s).cos())
            }
            InitialSpec::Wrap { amplitude } => {
                let a = *amplitude;
                GraphState::from_fn(grid, |n| a * (1.0 + (PI * n.s).cos()) / 2.0)
            }
            InitialSpec::Table { path } => {
                let full = self.base_dir.join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| ConfigError::at("initial.table", format!("cannot read {}: {e}", full.display())))?;
                let table = RadialTable::parse(&text).map_err(|m| ConfigError::at("initial.table", m))?;
                let slope = table.end_slope();
                if slope.abs() > 1e-8 {
                    warnings.push(format!(
                        "initial.table has slope {slope:e} at s = 1: data is not Neumann-compatible"
                    ));
                }
                GraphState::from_fn(grid, |n| table.eval(n.s))
            }
        };
        Ok((state, warnings))
    }

    pub fn stepper_config(&self, parallel: bool) -> StepperConfig {
        StepperConfig {
            parallel,
            ..self.stepper.clone()
        }
    }

    pub fn manufactured_case(&self) -> Result<ManufacturedCase, ConfigError> {
        let m = &self.mms;
        if m.kind == MmsKind::Const {
            return Ok(ManufacturedCase::new(Arc::new(Constant(m.amplitude)), m.t_final, "constant"));
        }
        let profile = self.profile_curve()?;
        let frame =
            RadialFrame::for_profile(&profile).map_err(|e| ConfigError::at("mms.case", e.to_string()))?;
        let f = RadialCos {
            frame,
            amp: m.amplitude,
            k: 1.0,
            growth: m.growth,
        };
        let desc = format!("(1 + {:?} t) {:?} cos(pi s)", m.growth, m.amplitude);
        Ok(ManufacturedCase::new(Arc::new(f), m.t_final, desc))
    }

    pub fn mms_base(&self) -> Resolution {
        if self.dimension() == 1 {
            Resolution::Interval(self.mms.base)
        } else {
            Resolution::Polar {
                ns: self.mms.base,
                nphi: self.mms.base,
            }
        }
    }
}

/// Piecewise-linear `u(s)` from `(s, u)` rows, constant beyond the ends.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTable {
    s: Vec<f64>,
    u: Vec<f64>,
}

impl RadialTable {
    /// Rows of two numbers separated by whitespace or a comma; `#` starts a
    /// comment. `s` must be strictly increasing.
    pub fn parse(text: &str) -> Result<Self, String> {
        let (mut s, mut u) = (Vec::new(), Vec::new());
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|x| !x.is_empty()).collect();
            let nums: Option<Vec<f64>> = cols.iter().map(|x| x.parse().ok().filter(|v: &f64| v.is_finite())).collect();
            match nums.as_deref() {
                Some([a, b]) => {
                    if s.last().is_some_and(|&l| *a <= l) {
                        return Err(format!("line {}: s must be strictly increasing", no + 1));
                    }
                    s.push(*a);
                    u.push(*b);
                }
                _ => return Err(format!("line {}: expected two numbers", no + 1)),
            }
        }
        if s.len() < 2 {
            return Err("needs at least two rows".into());
        }
        Ok(Self { s, u })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.s.len();
        if x <= self.s[0] {
            return self.u[0];
        }
        if x >= self.s[n - 1] {
            return self.u[n - 1];
        }
        let i = self.s.partition_point(|&v| v <= x) - 1;
        let w = (x - self.s[i]) / (self.s[i + 1] - self.s[i]);
        self.u[i] + w * (self.u[i + 1] - self.u[i])
    }

    /// Slope of the last segment.
    pub fn end_slope(&self) -> f64 {
        let n = self.s.len();
        (self.u[n - 1] - self.u[n - 2]) / (self.s[n - 1] - self.s[n - 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_echo_round_trips() {
        let cfg = parse_config("profile.kind = circle\nprofile.center_r = 2.0\nprofile.a = 0.5\ngrid.ns = 16\n").unwrap();
        let echo = cfg.echo();
        let again = parse_config(&echo).unwrap();
        assert_eq!(again.echo(), echo);
        assert_eq!(again, cfg);
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.dimension(), 1);
        assert_eq!(parse_config(&cfg.echo()).unwrap().echo(), cfg.echo());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn star_and_rkl2_round_trip() {
        let text = "profile.kind = star\nprofile.cos = 0.5, 0.0, 0.05\nprofile.sin = 0.02\n\
                    stepper.scheme = rkl2\nstepper.stages = 20\ndiagnostics.levels = 1, 2\n\
                    debug.ghost_rule = faulty # test hook\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.stepper.scheme, Scheme::Rkl2 { stages: 20 });
        assert_eq!(cfg.stepper.ghost_rule, GhostRule::Faulty);
        assert_eq!(parse_config(&cfg.echo()).unwrap().echo(), cfg.echo());
    }

    #[test]
    fn error_messages() {
        let err = |t: &str| parse_config(t).unwrap_err().to_string();
        assert_eq!(err("profile.a = -1"), "profile.a: must be > 0");
        assert!(err("stepper.sigma = 0.7").contains("sigma ∈ (0, 0.5]"));
        assert!(err("stepper.sigma = 0.7").starts_with("stepper.sigma: "));
        assert!(err("bogus = 1").starts_with("bogus: unknown key"));
        assert!(err("grid.n = x").starts_with("grid.n: expected"));
        assert_eq!(err("profile.a = 0.5"), "profile.a: not used by profile.kind = interval");
        assert_eq!(
            err("profile.kind = circle\nprofile.center_r = 0.3"),
            "profile.a: profile touches rotation axis"
        );
        assert!(err("profile.r0 = 2\nprofile.r1 = 1").starts_with("profile.r1: "));
        assert!(err("grid.n = 3\ngrid.n = 4").contains("more than once"));
        assert!(err("stepper.stages = 5").starts_with("stepper.stages: not used"));
        assert!(err("initial.preset = table").starts_with("initial.table: required"));
        assert!(err("no equals sign").contains("expected 'key = value'"));
    }

    #[test]
    fn table_interpolates() {
        let t = RadialTable::parse("# s u\n0 1\n0.5, 2\n1 2\n").unwrap();
        assert_eq!(t.eval(0.25), 1.5);
        assert_eq!(t.eval(2.0), 2.0);
        assert_eq!(t.end_slope(), 0.0);
        assert!(RadialTable::parse("0 1\n0 2\n").is_err());
        assert!(RadialTable::parse("0 1 3\n").is_err());
    }

    #[test]
    fn presets_are_compatible() {
        for preset in ["initial.preset = wrap", "initial.preset = radial_cos\ninitial.k = 2"] {
            let cfg = parse_config(&format!("profile.kind = circle\ngrid.ns = 16\ngrid.nphi = 16\n{preset}")).unwrap();
            let (s, warn) = cfg.initial_state(Arc::new(cfg.grid().unwrap())).unwrap();
            assert!(warn.is_empty());
            let d = crate::flow::boundary_normal_derivative(&s);
            assert!(d.iter().all(|x| x.abs() < 1e-10));
        }
        let cfg = parse_config("initial.k = 1.5").unwrap();
        let (_, warn) = cfg.initial_state(Arc::new(cfg.grid().unwrap())).unwrap();
        assert_eq!(warn.len(), 1);
    }
}
