//! JSON experiment configs, built-in figure recipes and the CSV writers.
//!
//! One config describes one experiment: a coverage curve, an ISR sweep over
//! the normalised distance `x`, or an ASE sweep over the small-cell density.
//! Omitted fields take their defaults, unknown keys are rejected.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::curve::{check_grid, CoverageCurve, Z95};
use crate::error::{Error, Result};
use crate::hexgrid::{mc_coverage_macro, Direction, MacroNetwork, PropagationParams, TddMix};
use crate::macro_analytic::{InverseMethod, MacroModel};
use crate::ppp_model::{
    ase, coverage_curve_ppp, mc_ase, mc_coverage_ppp_with, Association, CellOffset, Environment,
    QuadratureControl, SmallCellScenario,
};
use crate::specfun::{SeriesControl, ShadowingSpec};

/// Environment variable overriding the default output directory.
pub const OUT_DIR_ENV: &str = "TDDGEOM_OUT";
/// Output directory used when neither the command line, the environment
/// nor the config names one.
pub const DEFAULT_OUT_DIR: &str = "tddgeom-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    #[default]
    Macro,
    Ppp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    #[default]
    Coverage,
    IsrSweep,
    AseSweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Analytic,
    Mc,
    Both,
}

/// Small-cell parameters besides the shared propagation and TDD mix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmallCellParams {
    pub lambda: f64,
    pub window_radius: f64,
    pub p_small_dbm: f64,
    pub p_small_star_dbm: f64,
    pub cell_offset: CellOffset,
    pub association: Association,
    /// When set, the Monte Carlo window radius is `window_scale / sqrt(lambda)`
    /// instead of `window_radius`, so sweeps over the density keep the same
    /// number of points per draw.
    pub window_scale: Option<f64>,
}

impl Default for SmallCellParams {
    fn default() -> Self {
        let s = SmallCellScenario::default();
        SmallCellParams {
            lambda: s.lambda,
            window_radius: s.window_radius,
            p_small_dbm: s.p_small_dbm,
            p_small_star_dbm: s.p_small_star_dbm,
            cell_offset: s.cell_offset,
            association: Association::Model,
            window_scale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Base name of the emitted files.
    pub name: String,
    pub geometry: Geometry,
    pub kind: Kind,
    pub direction: Direction,
    pub mode: Mode,
    pub prop: PropagationParams,
    pub mix: TddMix,
    pub network: MacroNetwork,
    pub small_cells: SmallCellParams,
    /// Log-normal ISR shadowing of the macro analysis, dB.
    pub shadowing_db: Option<f64>,
    pub inverse: InverseMethod,
    pub series: SeriesControl,
    pub quadrature: QuadratureControl,
    pub gamma_grid_db: Vec<f64>,
    pub x_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub n_draws: usize,
    pub seed: u64,
    /// Output directory, used when neither `--out` nor the environment
    /// variable is set.
    pub output: Option<PathBuf>,
    /// Also write a gnuplot script next to the CSV.
    pub gnuplot: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "experiment".into(),
            geometry: Geometry::Macro,
            kind: Kind::Coverage,
            direction: Direction::Dl,
            mode: Mode::Analytic,
            prop: PropagationParams::default(),
            mix: TddMix::default(),
            network: MacroNetwork::default(),
            small_cells: SmallCellParams::default(),
            shadowing_db: None,
            inverse: InverseMethod::Bisection,
            series: SeriesControl::default(),
            quadrature: QuadratureControl::default(),
            gamma_grid_db: (-15..=15).map(|g| 2.0 * g as f64).collect(),
            x_grid: (1..=57).map(|i| 0.01 * i as f64).collect(),
            lambda_grid: vec![5.0, 10.0, 20.0, 30.0, 40.0, 50.0],
            n_draws: 20_000,
            seed: 1,
            output: None,
            gnuplot: false,
        }
    }
}

impl ExperimentConfig {
    /// Checks every constraint and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let mut collect = |r: Result<()>| match r {
            Ok(()) => {}
            Err(Error::Config(more)) => errs.extend(more),
            Err(e) => errs.push(e.to_string()),
        };
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            collect(Err(Error::config("name must be a non-empty file stem")));
        }
        collect(self.prop.validate());
        collect(self.mix.validate());
        collect(self.series.validate());
        match self.geometry {
            Geometry::Macro => collect(self.network.validate()),
            Geometry::Ppp => collect(self.scenario().validate()),
        }
        if let Some(w) = self.small_cells.window_scale {
            if !(w >= 5.0 && w.is_finite()) {
                collect(Err(Error::config("small_cells.window_scale must be >= 5")));
            }
        }
        if let Some(s) = self.shadowing_db {
            collect(ShadowingSpec::new(s).map(|_| ()));
        }
        match self.kind {
            Kind::Coverage => collect(check_grid(&self.gamma_grid_db, "gamma")),
            Kind::IsrSweep => {
                collect(check_grid(&self.x_grid, "x"));
                let limit = self.network.radius_ratio();
                if self.x_grid.iter().any(|&x| !(0.0..=limit).contains(&x)) {
                    collect(Err(Error::config(format!("x_grid entries must lie in [0, R/delta = {limit:.4}]"))));
                }
                if self.geometry != Geometry::Macro {
                    collect(Err(Error::config("isr_sweep requires geometry = macro")));
                }
                if self.mode != Mode::Analytic {
                    collect(Err(Error::config("isr_sweep is analytic only")));
                }
            }
            Kind::AseSweep => {
                collect(check_grid(&self.lambda_grid, "lambda"));
                if self.lambda_grid.first().is_some_and(|l| *l <= 0.0) {
                    collect(Err(Error::config("lambda_grid entries must be positive")));
                }
                if self.geometry != Geometry::Ppp {
                    collect(Err(Error::config("ase_sweep requires geometry = ppp")));
                }
            }
        }
        if self.mode != Mode::Analytic && self.n_draws == 0 {
            collect(Err(Error::config("n_draws must be >= 1 for Monte Carlo modes")));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Small-cell scenario at the configured density.
    pub fn scenario(&self) -> SmallCellScenario {
        self.scenario_at(self.small_cells.lambda)
    }

    fn scenario_at(&self, lambda: f64) -> SmallCellScenario {
        let s = &self.small_cells;
        SmallCellScenario {
            lambda,
            window_radius: match s.window_scale {
                Some(scale) => scale / lambda.sqrt(),
                // keep the Monte Carlo window large enough at low densities
                None => s.window_radius.max(5.0 / lambda.sqrt()),
            },
            p_small_dbm: s.p_small_dbm,
            p_small_star_dbm: s.p_small_star_dbm,
            prop: self.prop,
            mix: self.mix,
            cell_offset: s.cell_offset,
        }
    }

    pub fn macro_model(&self) -> Result<MacroModel> {
        let shadowing = self.shadowing_db.map(ShadowingSpec::new).transpose()?;
        MacroModel::new(self.network, self.prop, self.mix, shadowing, self.series)
    }
}

/// Parses a config; an empty document yields all defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = if text.trim().is_empty() {
        ExperimentConfig::default()
    } else {
        serde_json::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}

/// Canonical JSON form of a config, with every field spelled out.
pub fn dump_config(cfg: &ExperimentConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config is always serialisable")
}

pub const RECIPES: &[&str] = &[
    "fig1-isr-dl",
    "fig2-isr-ul",
    "fig4-cov-dl-macro",
    "fig5-cov-ul-macro",
    "fig6-fpc",
    "fig7-cov-dl-ppp",
    "fig8-cov-ul-ppp",
    "fig9-ase-dl",
    "fig10-ase-ul",
];

/// Configs reproducing one figure, one per plotted curve.
pub fn recipe(name: &str) -> Result<Vec<ExperimentConfig>> {
    let base = ExperimentConfig::default();
    let macro_cov = |direction: Direction, alpha_d: f64, two_b: f64| ExperimentConfig {
        name: format!("{name}-2b{two_b}-ad{alpha_d}"),
        direction,
        mode: Mode::Both,
        mix: TddMix { alpha_d },
        prop: PropagationParams { two_b, ..base.prop },
        gamma_grid_db: (-30..=30).map(f64::from).collect(),
        ..base.clone()
    };
    let ppp = |kind: Kind, direction: Direction, alpha_d: f64, env: Environment| ExperimentConfig {
        name: format!("{name}-{}-ad{alpha_d}", match env {
            Environment::Outdoor => "outdoor",
            Environment::Indoor => "indoor",
        }),
        geometry: Geometry::Ppp,
        kind,
        direction,
        mode: Mode::Both,
        mix: TddMix { alpha_d },
        prop: PropagationParams { a_db: env.a_db(), ..base.prop },
        gamma_grid_db: (-20..=30).step_by(2).map(f64::from).collect(),
        ..base.clone()
    };
    // ASE is sensitive to the interference cut at the window edge
    let ase_sweep = |direction: Direction, alpha_d: f64, env: Environment| {
        let mut c = ppp(Kind::AseSweep, direction, alpha_d, env);
        c.n_draws = 10_000;
        c.small_cells.window_scale = Some(22.0);
        c
    };
    let envs = [Environment::Outdoor, Environment::Indoor];
    let configs = match name {
        "fig1-isr-dl" | "fig2-isr-ul" => {
            let direction = if name == "fig1-isr-dl" { Direction::Dl } else { Direction::Ul };
            [2.5, 3.5]
                .iter()
                .map(|&two_b| ExperimentConfig {
                    name: format!("{name}-2b{two_b}"),
                    kind: Kind::IsrSweep,
                    direction,
                    prop: PropagationParams { two_b, ..base.prop },
                    ..base.clone()
                })
                .collect()
        }
        "fig4-cov-dl-macro" => [2.5, 3.5]
            .iter()
            .flat_map(|&tb| [1.0, 0.75, 0.5].map(|a| macro_cov(Direction::Dl, a, tb)))
            .collect(),
        "fig5-cov-ul-macro" => [2.5, 3.5]
            .iter()
            .flat_map(|&tb| [0.0, 0.25, 0.5].map(|a| macro_cov(Direction::Ul, a, tb)))
            .collect(),
        "fig6-fpc" => [Direction::Dl, Direction::Ul]
            .iter()
            .flat_map(|&dir| {
                [0.0, 0.4, 0.8, 1.0].map(|k| ExperimentConfig {
                    name: format!("{name}-{dir}-k{k}"),
                    prop: PropagationParams { k, ..base.prop },
                    ..macro_cov(dir, 0.5, 3.5)
                })
            })
            .collect(),
        "fig7-cov-dl-ppp" => envs
            .iter()
            .flat_map(|&e| [1.0, 0.5].map(|a| ppp(Kind::Coverage, Direction::Dl, a, e)))
            .collect(),
        "fig8-cov-ul-ppp" => envs
            .iter()
            .flat_map(|&e| [0.0, 0.5].map(|a| ppp(Kind::Coverage, Direction::Ul, a, e)))
            .collect(),
        "fig9-ase-dl" => envs
            .iter()
            .flat_map(|&e| [1.0, 0.5].map(|a| ase_sweep(Direction::Dl, a, e)))
            .collect(),
        "fig10-ase-ul" => envs
            .iter()
            .flat_map(|&e| [0.0, 0.5].map(|a| ase_sweep(Direction::Ul, a, e)))
            .collect(),
        _ => {
            return Err(Error::config(format!(
                "unknown recipe {name:?}; known: {}",
                RECIPES.join(", ")
            )))
        }
    };
    Ok(configs)
}

/// Rows of numbers under a header; the common shape of every emitted CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::config("empty CSV"))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::config(format!("CSV row {}: {e}", i + 1)))?;
            if row.len() != header.len() {
                return Err(Error::config(format!("CSV row {} has {} cells, header {}", i + 1, row.len(), header.len())));
            }
            rows.push(row);
        }
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// gnuplot script drawing every column against the first.
    pub fn gnuplot_script(&self, csv_name: &str, title: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "set datafile separator ','");
        let _ = writeln!(s, "set key autotitle columnhead");
        let _ = writeln!(s, "set title '{title}'");
        let _ = writeln!(s, "set xlabel '{}'", self.header[0]);
        let _ = writeln!(s, "set grid");
        let plots: Vec<String> = (2..=self.header.len())
            .filter(|&c| !self.header[c - 1].contains("ci_halfwidth"))
            .map(|c| format!("'{csv_name}' using 1:{c} with linespoints"))
            .collect();
        let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
        s
    }
}

fn coverage_table(analytic: Option<&CoverageCurve>, mc: Option<&CoverageCurve>) -> Table {
    match (analytic, mc) {
        (Some(a), Some(m)) => {
            let mut t = Table::new(&["gamma_db", "analytic", "mc", "mc_ci_halfwidth"]);
            for i in 0..a.len() {
                t.rows.push(vec![a.gamma_db[i], a.value[i], m.value[i], m.ci_halfwidth[i]]);
            }
            t
        }
        (Some(c), None) | (None, Some(c)) => {
            let mut t = Table::new(&["gamma_db", "value", "ci_halfwidth"]);
            for i in 0..c.len() {
                t.rows.push(vec![c.gamma_db[i], c.value[i], c.ci_halfwidth[i]]);
            }
            t
        }
        (None, None) => unreachable!("at least one curve is computed"),
    }
}

/// Computes the experiment's table without touching the file system.
pub fn compute(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let analytic = cfg.mode != Mode::Mc;
    let mc = cfg.mode != Mode::Analytic;
    match cfg.kind {
        Kind::IsrSweep => {
            let model = cfg.macro_model()?;
            let mut t = Table::new(&["x", "dl_to_dl", "ul_to_dl", "ul_to_ul", "dl_to_ul", "total_dl", "total_ul"]);
            for &x in &cfg.x_grid {
                let i = model.isr(x)?;
                t.rows.push(vec![x, i.dl_to_dl, i.ul_to_dl, i.ul_to_ul, i.dl_to_ul, i.total_dl, i.total_ul]);
            }
            Ok(t)
        }
        Kind::Coverage => {
            let grid = &cfg.gamma_grid_db;
            let (a, m) = match cfg.geometry {
                Geometry::Macro => {
                    let a = if analytic {
                        Some(cfg.macro_model()?.coverage_curve(grid, cfg.direction, cfg.inverse)?)
                    } else {
                        None
                    };
                    let m = if mc {
                        Some(mc_coverage_macro(&cfg.network, &cfg.prop, cfg.mix, cfg.direction, grid, cfg.n_draws, cfg.seed)?)
                    } else {
                        None
                    };
                    (a, m)
                }
                Geometry::Ppp => {
                    let scen = cfg.scenario();
                    let a = if analytic {
                        Some(coverage_curve_ppp(grid, cfg.direction, &scen, cfg.quadrature)?)
                    } else {
                        None
                    };
                    let m = if mc {
                        Some(mc_coverage_ppp_with(
                            &scen,
                            cfg.direction,
                            cfg.small_cells.association,
                            grid,
                            cfg.n_draws,
                            cfg.seed,
                        )?)
                    } else {
                        None
                    };
                    (a, m)
                }
            };
            Ok(coverage_table(a.as_ref(), m.as_ref()))
        }
        Kind::AseSweep => {
            let mut t = match cfg.mode {
                Mode::Both => Table::new(&["lambda", "analytic", "mc", "mc_ci_halfwidth"]),
                _ => Table::new(&["lambda", "ase", "ci_halfwidth"]),
            };
            for &lambda in &cfg.lambda_grid {
                let scen = cfg.scenario_at(lambda);
                let a = if analytic { Some(ase(&scen, cfg.direction, cfg.quadrature)?) } else { None };
                let m = if mc { Some(mc_ase(&scen, cfg.direction, cfg.n_draws, cfg.seed)?) } else { None };
                t.rows.push(match (a, m) {
                    (Some(a), Some(m)) => vec![lambda, a, m.mean, Z95 * m.std_error],
                    (Some(a), None) => vec![lambda, a, 0.0],
                    (None, Some(m)) => vec![lambda, m.mean, Z95 * m.std_error],
                    (None, None) => unreachable!("at least one estimate is computed"),
                });
            }
            Ok(t)
        }
    }
}

/// Sidecar metadata written next to every CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub version: String,
    pub wall_time_s: f64,
    pub files: Vec<String>,
}

/// Crate version, with the `git describe` output of the build when known.
pub fn version() -> String {
    match option_env!("TDDGEOM_GIT_DESCRIBE") {
        Some(g) if !g.is_empty() => format!("{} ({g})", env!("CARGO_PKG_VERSION")),
        _ => env!("CARGO_PKG_VERSION").to_string(),
    }
}

/// Output directory: explicit argument, then the environment variable, then
/// the config's `output`, then [`DEFAULT_OUT_DIR`].
pub fn resolve_out_dir(explicit: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_DIR_ENV).filter(|p| !p.is_empty()) {
        return PathBuf::from(p);
    }
    cfg.output.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Paths written by [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub csv: PathBuf,
    pub metadata: PathBuf,
    pub gnuplot: Option<PathBuf>,
    pub table: Table,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Runs the experiment and writes `<name>.csv`, `<name>.meta.json` and,
/// when requested, `<name>.gp` into `out_dir`.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    let start = Instant::now();
    let table = compute(cfg)?;
    fs::create_dir_all(out_dir).map_err(|source| Error::Io { path: out_dir.to_path_buf(), source })?;
    let csv = out_dir.join(format!("{}.csv", cfg.name));
    write(&csv, &table.to_csv())?;
    let mut files = vec![csv.file_name().unwrap().to_string_lossy().into_owned()];
    let gnuplot = if cfg.gnuplot {
        let gp = out_dir.join(format!("{}.gp", cfg.name));
        write(&gp, &table.gnuplot_script(&files[0], &cfg.name))?;
        files.push(gp.file_name().unwrap().to_string_lossy().into_owned());
        Some(gp)
    } else {
        None
    };
    let meta = RunMetadata {
        config: cfg.clone(),
        seed: cfg.seed,
        version: version(),
        wall_time_s: start.elapsed().as_secs_f64(),
        files,
    };
    let metadata = out_dir.join(format!("{}.meta.json", cfg.name));
    write(&metadata, &serde_json::to_string_pretty(&meta)?)?;
    Ok(RunOutput { csv, metadata, gnuplot, table })
}
