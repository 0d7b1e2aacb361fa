//! Run configuration: sectioned key-value text with unit-suffixed keys.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;

use crate::lifshitz::{LifshitzSettings, MatsubaraCutoff, DEFAULT_MAX_TERMS};
use crate::optics::{
    gold_optical_table, read_optical_table, DrudeParams, OpticalTable, PermittivityMode,
    PermittivitySpec, DEFAULT_CORE_CUTOFF_EV, DEFAULT_KK_TOLERANCE, DEFAULT_TAIL_EXPONENT,
};
use crate::sphere_plate::{
    Averaging, CorrectionDirection, OscillatorGeometry, Roughness, RoughnessBin, VibrationFactor,
};
use crate::stats::SigmaMode;
use crate::units::{METERS_PER_NM, METERS_PER_UM};

use super::CliError;

/// Value of `table_path` selecting the embedded gold table.
pub const BUILTIN_GOLD: &str = "builtin:gold";

const SECTIONS: [&str; 7] = [
    "optics",
    "thermal",
    "geometry",
    "grid",
    "eps",
    "stats",
    "correction",
];

#[derive(Debug, Clone, PartialEq)]
pub enum TableSource {
    BuiltinGold,
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct OpticsConfig {
    pub table: TableSource,
    pub modes: Vec<PermittivityMode>,
    pub drude: DrudeParams,
    pub core_cutoff_ev: f64,
    pub tail_exponent: f64,
    pub kk_tolerance: f64,
}

#[derive(Debug, Clone)]
pub struct GeometryConfig {
    pub geometry: OscillatorGeometry,
    pub averaging: Averaging,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub z_min_um: f64,
    pub z_max_um: f64,
    pub points: usize,
    pub spacing: Spacing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsConfig {
    pub xi_ev: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsConfig {
    pub dataset_path: PathBuf,
    pub sigma_mode: SigmaMode,
    pub n_fit_params: usize,
    pub exclusion_threshold_sigma: f64,
    pub reference_partial_drude: f64,
    pub reference_partial_plasma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionConfig {
    pub which: VibrationFactor,
    pub direction: CorrectionDirection,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: PathBuf,
    pub optics: OpticsConfig,
    pub thermal: LifshitzSettings,
    pub geometry: Option<GeometryConfig>,
    pub grid: Option<GridConfig>,
    pub eps: EpsConfig,
    pub stats: Option<StatsConfig>,
    pub correction: Option<CorrectionConfig>,
}

/// Keys of one section; every key must be consumed.
struct Section {
    name: &'static str,
    entries: BTreeMap<String, String>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).filter(|v| !v.is_empty())
    }

    fn require(&mut self, key: &str) -> Result<String, CliError> {
        self.take(key)
            .ok_or_else(|| CliError::Config(format!("missing key `{key}` in [{}]", self.name)))
    }

    fn parse<T: FromStr>(&self, key: &str, raw: &str) -> Result<T, CliError> {
        raw.parse::<T>()
            .map_err(|_| CliError::Config(format!("[{}] {key}: cannot parse `{raw}`", self.name)))
    }

    fn get<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        match self.take(key) {
            Some(raw) => self.parse(key, &raw).map(Some),
            None => Ok(None),
        }
    }

    fn get_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn get_required<T: FromStr>(&mut self, key: &str) -> Result<T, CliError> {
        let raw = self.require(key)?;
        self.parse(key, &raw)
    }

    fn finish(self) -> Result<(), CliError> {
        match self.entries.keys().next() {
            Some(key) => Err(CliError::Config(format!(
                "unknown key `{key}` in [{}]",
                self.name
            ))),
            None => Ok(()),
        }
    }
}

fn load_sections(text: &str, source: &Path) -> Result<BTreeMap<&'static str, Section>, CliError> {
    let ini = Ini::load_from_str_noescape(text)
        .map_err(|e| CliError::Config(format!("{}: {e}", source.display())))?;
    let mut sections: BTreeMap<&'static str, Section> = BTreeMap::new();
    for (name, props) in ini.iter() {
        let Some(name) = name else {
            if let Some((key, _)) = props.iter().next() {
                return Err(CliError::Config(format!(
                    "key `{key}` outside of any section"
                )));
            }
            continue;
        };
        let lowered = name.trim().to_ascii_lowercase();
        let canonical = SECTIONS
            .iter()
            .find(|s| **s == lowered)
            .ok_or_else(|| CliError::Config(format!("unknown section [{name}]")))?;
        let section = sections.entry(canonical).or_insert_with(|| Section {
            name: canonical,
            entries: BTreeMap::new(),
        });
        for (key, value) in props.iter() {
            let key = key.trim().to_ascii_lowercase();
            if section
                .entries
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(CliError::Config(format!(
                    "duplicate key `{key}` in [{canonical}]"
                )));
            }
        }
    }
    Ok(sections)
}

fn parse_list<T: FromStr>(raw: &str, what: &str) -> Result<Vec<T>, CliError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| CliError::Config(format!("invalid {what} `{s}`")))
        })
        .collect()
}

pub fn parse_modes(raw: &str) -> Result<Vec<PermittivityMode>, CliError> {
    parse_list(raw, "permittivity mode")
}

impl RunConfig {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    /// Parse config text; relative paths resolve against `source`'s directory.
    pub fn parse(text: &str, source: &Path) -> Result<Self, CliError> {
        let base = source.parent().map(Path::to_path_buf).unwrap_or_default();
        let resolve = |p: &str| {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let mut sections = load_sections(text, source)?;
        let mut take = |name: &'static str| {
            sections.remove(name).unwrap_or(Section {
                name,
                entries: BTreeMap::new(),
            })
        };

        let mut s = take("optics");
        let table = match s.take("table_path") {
            None => TableSource::BuiltinGold,
            Some(p) if p.eq_ignore_ascii_case(BUILTIN_GOLD) => TableSource::BuiltinGold,
            Some(p) => TableSource::File(resolve(&p)),
        };
        let modes = match (s.take("modes"), s.take("mode")) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "[optics] give either `mode` or `modes`, not both".into(),
                ))
            }
            (Some(raw), None) | (None, Some(raw)) => parse_modes(&raw)?,
            (None, None) => Vec::new(),
        };
        let omega_p = s.get_or("omega_p_ev", DrudeParams::GOLD.omega_p)?;
        let gamma = s.get_or("gamma_ev", DrudeParams::GOLD.gamma)?;
        let drude = DrudeParams::new(omega_p, gamma)
            .map_err(|e| CliError::Config(format!("[optics] {e}")))?;
        let optics = OpticsConfig {
            table,
            modes,
            drude,
            core_cutoff_ev: s.get_or("core_cutoff_ev", DEFAULT_CORE_CUTOFF_EV)?,
            tail_exponent: s.get_or("tail_exponent", DEFAULT_TAIL_EXPONENT)?,
            kk_tolerance: s.get_or("kk_tolerance", DEFAULT_KK_TOLERANCE)?,
        };
        s.finish()?;

        let mut s = take("thermal");
        let defaults = LifshitzSettings::default();
        let l_max = match s.take("l_max") {
            None => MatsubaraCutoff::Auto,
            Some(raw) if raw.eq_ignore_ascii_case("auto") => MatsubaraCutoff::Auto,
            Some(raw) => MatsubaraCutoff::Fixed(s.parse("l_max", &raw)?),
        };
        let thermal = LifshitzSettings {
            temperature_k: s.get_or("temperature_k", defaults.temperature_k)?,
            l_max,
            max_terms: s.get_or("max_terms", DEFAULT_MAX_TERMS)?,
            term_tolerance: s.get_or("term_tolerance", defaults.term_tolerance)?,
            k_quad_tolerance: s.get_or("k_quad_tolerance", defaults.k_quad_tolerance)?,
            zero_t_mode: s.get_or("zero_t_mode", defaults.zero_t_mode)?,
        };
        thermal
            .validate()
            .map_err(|e| CliError::Config(format!("[thermal] {e}")))?;
        s.finish()?;

        let mut s = take("geometry");
        let geometry = if s.entries.is_empty() {
            None
        } else {
            let r_um: f64 = s.get_required("r_sphere_um")?;
            let f0: f64 = s.get_required("f0_hz")?;
            let kappa: f64 = s.get_required("kappa_n_per_m")?;
            let a_rms_nm: f64 = s.get_required("a_rms_nm")?;
            let roughness = match s.take("roughness_path") {
                Some(p) => read_roughness(&resolve(&p))?,
                None => Roughness::smooth(),
            };
            let averaging = match s.take("averaging") {
                Some(raw) => raw
                    .parse()
                    .map_err(|e| CliError::Config(format!("[geometry] {e}")))?,
                None => Averaging::Exact,
            };
            let geometry = OscillatorGeometry::new(
                r_um * METERS_PER_UM,
                f0,
                kappa,
                a_rms_nm * METERS_PER_NM,
                roughness,
            )
            .map_err(|e| CliError::Config(format!("[geometry] {e}")))?;
            Some(GeometryConfig {
                geometry,
                averaging,
            })
        };
        s.finish()?;

        let mut s = take("grid");
        let grid = if s.entries.is_empty() {
            None
        } else {
            let spacing = match s
                .take("spacing")
                .as_deref()
                .map(str::to_ascii_lowercase)
                .as_deref()
            {
                None | Some("lin") | Some("linear") => Spacing::Linear,
                Some("log") => Spacing::Log,
                Some(other) => {
                    return Err(CliError::Config(format!(
                        "[grid] unknown spacing `{other}`"
                    )))
                }
            };
            let grid = GridConfig {
                z_min_um: s.get_required("z_min_um")?,
                z_max_um: s.get_required("z_max_um")?,
                points: s.get_required("points")?,
                spacing,
            };
            grid.validate()?;
            Some(grid)
        };
        s.finish()?;

        let mut s = take("eps");
        let eps = match s.take("xi_values_ev") {
            Some(raw) => {
                if s.entries
                    .keys()
                    .any(|k| k.starts_with("xi_m") || k == "points")
                {
                    return Err(CliError::Config(
                        "[eps] xi_values_ev excludes a xi range".into(),
                    ));
                }
                EpsConfig {
                    xi_ev: parse_list(&raw, "xi value")?,
                }
            }
            None => {
                let xi_min: f64 = s.get_or("xi_min_ev", 1e-3)?;
                let xi_max: f64 = s.get_or("xi_max_ev", 1e2)?;
                let points: usize = s.get_or("points", 51)?;
                EpsConfig {
                    xi_ev: GridConfig {
                        z_min_um: xi_min,
                        z_max_um: xi_max,
                        points,
                        spacing: Spacing::Log,
                    }
                    .values()
                    .map_err(|e| CliError::Config(format!("[eps] {}", e.message())))?,
                }
            }
        };
        if eps.xi_ev.is_empty() || eps.xi_ev.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(CliError::Config(
                "[eps] xi values must be positive and finite".into(),
            ));
        }
        s.finish()?;

        let mut s = take("stats");
        let stats = if s.entries.is_empty() {
            None
        } else {
            let sigma_mode = match s.take("sigma_mode") {
                Some(raw) => raw
                    .parse()
                    .map_err(|e| CliError::Config(format!("[stats] {e}")))?,
                None => SigmaMode::FOnly,
            };
            Some(StatsConfig {
                dataset_path: resolve(&s.require("dataset_path")?),
                sigma_mode,
                n_fit_params: s.get_required("n_fit_params")?,
                exclusion_threshold_sigma: s.get_or("exclusion_threshold_sigma", 1.0)?,
                reference_partial_drude: s.get_or("reference_partial_chi2_drude", 300.0)?,
                reference_partial_plasma: s.get_or("reference_partial_chi2_plasma", 419.0)?,
            })
        };
        s.finish()?;

        let mut s = take("correction");
        let which = s.take("which").map(|w| w.to_ascii_lowercase());
        let direction = s.take("direction");
        let correction = match (which.as_deref(), direction) {
            (None | Some("none"), None) => None,
            (None | Some("none"), Some(_)) => {
                return Err(CliError::Config(
                    "[correction] direction given without a factor".into(),
                ))
            }
            (Some(w), None) => {
                return Err(CliError::Config(format!(
                    "[correction] which = {w} requires direction = multiply|divide"
                )))
            }
            (Some(w), Some(d)) => Some(CorrectionConfig {
                which: w
                    .parse()
                    .map_err(|e| CliError::Config(format!("[correction] {e}")))?,
                direction: d
                    .parse()
                    .map_err(|e| CliError::Config(format!("[correction] {e}")))?,
            }),
        };
        s.finish()?;

        Ok(Self {
            source: source.to_path_buf(),
            optics,
            thermal,
            geometry,
            grid,
            eps,
            stats,
            correction,
        })
    }

    pub fn require_geometry(&self) -> Result<&GeometryConfig, CliError> {
        self.geometry.as_ref().ok_or_else(|| {
            CliError::Config(
                "missing [geometry] section (r_sphere_um, f0_hz, kappa_n_per_m, a_rms_nm)".into(),
            )
        })
    }

    pub fn require_grid(&self) -> Result<&GridConfig, CliError> {
        self.grid
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [grid] section".into()))
    }

    pub fn require_stats(&self) -> Result<&StatsConfig, CliError> {
        self.stats
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [stats] section".into()))
    }

    /// The optical table, loaded only when some requested mode needs it.
    pub fn load_table(&self, modes: &[PermittivityMode]) -> Result<Option<OpticalTable>, CliError> {
        if !modes.iter().any(|m| m.is_tabulated()) {
            return Ok(None);
        }
        match &self.optics.table {
            TableSource::BuiltinGold => Ok(Some(gold_optical_table())),
            TableSource::File(path) => {
                if !path.is_file() {
                    return Err(CliError::Input(format!(
                        "optical table not found: {}",
                        path.display()
                    )));
                }
                read_optical_table(path)
                    .map(Some)
                    .map_err(|e| CliError::Input(e.to_string()))
            }
        }
    }

    pub fn permittivity(
        &self,
        mode: PermittivityMode,
        table: Option<&OpticalTable>,
    ) -> Result<PermittivitySpec, CliError> {
        let table = if mode.is_tabulated() {
            table.cloned()
        } else {
            None
        };
        PermittivitySpec::with_options(
            mode,
            self.optics.drude,
            table,
            self.optics.core_cutoff_ev,
            self.optics.tail_exponent,
            self.optics.kk_tolerance,
        )
        .map_err(|e| CliError::Config(format!("[optics] {e}")))
    }
}

impl GridConfig {
    fn validate(&self) -> Result<(), CliError> {
        self.values().map(|_| ())
    }

    /// Grid values in the configured unit; the endpoints are exact.
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let (lo, hi, n) = (self.z_min_um, self.z_max_um, self.points);
        if !(lo > 0.0 && lo.is_finite() && hi.is_finite()) {
            return Err(CliError::Config(format!(
                "[grid] bounds must be positive, got [{lo}, {hi}]"
            )));
        }
        if n == 0 {
            return Err(CliError::Config("[grid] points must be at least 1".into()));
        }
        if n == 1 {
            return Ok(vec![lo]);
        }
        if !(hi > lo) {
            return Err(CliError::Config(format!(
                "[grid] need max > min, got [{lo}, {hi}]"
            )));
        }
        let last = (n - 1) as f64;
        Ok((0..n)
            .map(|i| {
                if i == n - 1 {
                    return hi;
                }
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => lo + t * (hi - lo),
                    Spacing::Log => lo * (hi / lo).powf(t),
                }
            })
            .collect())
    }

    pub fn separations_m(&self) -> Result<Vec<f64>, CliError> {
        Ok(self
            .values()?
            .into_iter()
            .map(|z| z * METERS_PER_UM)
            .collect())
    }
}

/// Roughness histogram: `height_nm,weight` rows, `#` comments.
pub fn read_roughness(path: &Path) -> Result<Roughness, CliError> {
    let input = |m: String| CliError::Input(format!("roughness {}: {m}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| input(e.to_string()))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| input(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["height_nm", "weight"] {
        return Err(input("header must be `height_nm,weight`".into()));
    }
    let mut bins = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| input(e.to_string()))?;
        let field = |i: usize| -> Result<f64, CliError> {
            let raw = record.get(i).unwrap_or("");
            raw.parse()
                .map_err(|_| input(format!("cannot parse `{raw}`")))
        };
        bins.push(RoughnessBin {
            height: field(0)? * METERS_PER_NM,
            weight: field(1)?,
        });
    }
    Roughness::new(bins).map_err(|e| input(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "
[optics]
modes = tabulated_drude, pure_plasma
omega_p_ev = 7.54
[thermal]
temperature_k = 300
l_max = auto
[geometry]
r_sphere_um = 100
f0_hz = 5e4
kappa_n_per_m = 1
a_rms_nm = 10
averaging = first_term
[grid]
z_min_um = 0.118
z_max_um = 0.230
points = 5
[correction]
which = eta
direction = divide
";

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        RunConfig::parse(text, Path::new("/tmp/run.ini"))
    }

    #[test]
    fn parses_full_config() {
        let c = parse(FULL).unwrap();
        assert_eq!(
            c.optics.modes,
            vec![
                PermittivityMode::TabulatedDrude,
                PermittivityMode::PurePlasma
            ]
        );
        assert_eq!(c.optics.table, TableSource::BuiltinGold);
        let g = c.require_geometry().unwrap();
        assert_eq!(g.averaging, Averaging::FirstTerm);
        assert!((g.geometry.a_rms - 10e-9).abs() < 1e-24);
        let grid = c.require_grid().unwrap().values().unwrap();
        assert_eq!(grid.len(), 5);
        assert_eq!((grid[0], grid[4]), (0.118, 0.230));
        assert_eq!(
            c.correction,
            Some(CorrectionConfig {
                which: VibrationFactor::Eta,
                direction: CorrectionDirection::Divide
            })
        );
        assert!(c.stats.is_none());
        assert_eq!(c.eps.xi_ev.len(), 51);
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        assert!(
            matches!(parse("[optics]\nomega_p = 7\n"), Err(CliError::Config(m)) if m.contains("omega_p"))
        );
        assert!(matches!(parse("[plot]\nx = 1\n"), Err(CliError::Config(_))));
        assert!(parse("[correction]\nwhich = eta\n").is_err());
        assert!(parse("[geometry]\nr_sphere_um = 100\n").is_err());
        assert!(parse("[thermal]\nl_max = many\n").is_err());
    }

    #[test]
    fn relative_paths_follow_the_config() {
        let c = parse("[optics]\ntable_path = au.csv\n").unwrap();
        assert_eq!(
            c.optics.table,
            TableSource::File(PathBuf::from("/tmp/au.csv"))
        );
    }

    #[test]
    fn log_grid_endpoints() {
        let g = GridConfig {
            z_min_um: 1e-3,
            z_max_um: 1e2,
            points: 6,
            spacing: Spacing::Log,
        };
        let v = g.values().unwrap();
        assert_eq!((v[0], v[5]), (1e-3, 1e2));
        assert!((v[2] / 1e-1 - 1.0).abs() < 1e-12);
    }
}
