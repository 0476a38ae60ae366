use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "gtd", version, about = "Geometrothermodynamics checks and scans")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Catalog inspection.
    Systems {
        #[command(subcommand)]
        action: SystemsAction,
    },
    /// Equilibrium metric components.
    Metric {
        #[command(subcommand)]
        action: MetricAction,
    },
    /// Curvature over a grid.
    Curvature {
        #[command(subcommand)]
        action: CurvatureAction,
    },
    /// Legendre invariance of the phase-space metric.
    Legendre {
        #[command(subcommand)]
        action: LegendreAction,
    },
    /// Kind III coordinate change diagnostics.
    Gtd3 {
        #[command(subcommand)]
        action: Gtd3Action,
    },
    /// Hessian-structure obstructions.
    Hessian {
        #[command(subcommand)]
        action: HessianAction,
    },
    /// Second-order remainder of the potential.
    Fluctuation {
        #[command(subcommand)]
        action: FluctuationAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum SystemsAction {
    List {
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Debug, Subcommand)]
pub enum MetricAction {
    Eval {
        #[command(flatten)]
        system: SystemArg,
        #[command(flatten)]
        kind: KindArgs,
        #[command(flatten)]
        at: AtArg,
    },
}

#[derive(Debug, Subcommand)]
pub enum CurvatureAction {
    Scan {
        #[command(flatten)]
        system: SystemArg,
        #[command(flatten)]
        kind: KindArgs,
        /// Per-variable `NAME=min:max:count`, comma separated.
        #[arg(long)]
        grid: String,
        /// `|R|` above this raises a curvature flag.
        #[arg(long, default_value_t = 1e4)]
        threshold: f64,
        /// Fail (exit 3) if any `|R|` exceeds this.
        #[arg(long)]
        max_abs_r: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Debug, Subcommand)]
pub enum LegendreAction {
    Check {
        #[command(flatten)]
        kind: KindArgs,
        /// 1-based indices to transform, comma separated; `total` or `none`.
        #[arg(long, default_value = "total")]
        spec: String,
        /// Number of extensive variables.
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum Gtd3Action {
    Check {
        #[arg(long, allow_negative_numbers = true)]
        k: i32,
        #[arg(long, value_enum, default_value_t = Variant::Corrected)]
        variant: Variant,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid points per axis of the control-manifold flatness check.
        #[arg(long, default_value_t = 3)]
        grid_count: usize,
        /// System for the Hessian witness.
        #[arg(long, default_value = "ideal_gas")]
        system: String,
        #[command(flatten)]
        at: AtArg,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum HessianAction {
    Obstructions {
        #[command(flatten)]
        system: SystemArg,
        #[arg(long, value_enum, default_value_t = PotentialMetric::Hessian)]
        potential_metric: PotentialMetric,
        #[command(flatten)]
        at: AtArg,
        /// Bound on the relative obstructions.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum FluctuationAction {
    Check {
        #[command(flatten)]
        system: SystemArg,
        #[command(flatten)]
        at: AtArg,
        /// Displacement direction, comma separated; defaults to all ones.
        #[arg(long, allow_hyphen_values = true)]
        direction: Option<String>,
        #[arg(long, default_value_t = 1e-4)]
        h_min: f64,
        #[arg(long, default_value_t = 1e-2)]
        h_max: f64,
        #[arg(long, default_value_t = 2.9)]
        min_slope: f64,
    },
}

#[derive(Debug, Args)]
pub struct SystemArg {
    /// Catalog name or path to a `.toml` system file.
    #[arg(long)]
    pub system: String,
}

#[derive(Debug, Args)]
pub struct AtArg {
    /// State as `NAME=value,...`; defaults to the system's reference state.
    #[arg(long, allow_hyphen_values = true)]
    pub at: Option<String>,
}

#[derive(Debug, Args)]
pub struct KindArgs {
    #[arg(long, value_enum)]
    pub kind: KindName,
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<i32>,
    /// Diagonal of xi for kinds I and II, comma separated.
    #[arg(long)]
    pub xi: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindName {
    #[value(name = "I")]
    I,
    #[value(name = "II")]
    Ii,
    #[value(name = "III")]
    Iii,
}

impl KindName {
    pub fn as_str(self) -> &'static str {
        match self {
            KindName::I => "I",
            KindName::Ii => "II",
            KindName::Iii => "III",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Paper,
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PotentialMetric {
    Weinhold,
    Ruppeiner,
    Hessian,
}
