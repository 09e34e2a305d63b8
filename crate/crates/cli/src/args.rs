use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qdcav_core::sweep::{Axis, Spacing};

#[derive(Debug, Parser)]
#[command(name = "qdcav", version, about = "Single-photon emission from a dephased quantum dot in a cavity")]
pub struct Cli {
    #[command(flatten)]
    pub globals: Globals,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Globals {
    /// Dot-cavity coupling
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub g: Option<f64>,
    /// Cavity escape rate into the output mode
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    /// Dot decay rate into non-cavity modes
    #[arg(long, global = true, allow_hyphen_values = true, default_value_t = 0.0)]
    pub gamma: f64,
    /// Pure dephasing rate
    #[arg(long = "gamma-p", global = true, allow_hyphen_values = true, default_value_t = 0.0)]
    pub gamma_p: f64,
    /// Dot frequency
    #[arg(long = "omega-d", global = true, allow_hyphen_values = true, conflicts_with_all = ["detuning", "resonant"])]
    pub omega_d: Option<f64>,
    /// Cavity frequency
    #[arg(long = "omega-c", global = true, allow_hyphen_values = true, default_value_t = 0.0)]
    pub omega_c: f64,
    /// omega_d - omega_c
    #[arg(long, global = true, allow_hyphen_values = true, conflicts_with = "resonant")]
    pub detuning: Option<f64>,
    /// Dot on resonance with the cavity (the default when no dot frequency is given)
    #[arg(long, global = true)]
    pub resonant: bool,
    /// Unit convention: μeV with ħ = 1, or every rate in units of g
    #[arg(long, global = true, value_enum, default_value_t = Units::Uev)]
    pub units: Units,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Output format; curves default to CSV, scalar reports to JSON
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for grids and the validation battery
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Units {
    /// μeV, ħ = 1, time in ħ/μeV
    Uev,
    /// rates in units of g, time in τ_g = ħ/g
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Survival probability P(t) of the excited dot
    Survival(CurveArgs),
    /// Decay rate and its ratio to the undephased rate
    DecayRate,
    /// Emitted pulse intensity f(τ)
    Pulse(CurveArgs),
    /// Glauber spectrum S(k) with its norm, mean and width
    Spectrum(SpectrumArgs),
    /// Mean photon energy and energy given to the dephasing reservoir
    Energies,
    /// Asymptotic photon density matrix ρ(u, u') on a square grid
    DensityMatrix(GridArgs),
    /// Trace, purity and coincidence probability
    Purity,
    /// Purity over a (κ/g, γ_p/g) grid
    PurityMap(MapArgs),
    /// Purity and efficiency of time-filtered photons
    TimeFilter(FilterArgs),
    /// Run the oracle and invariant battery
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Largest time, or `auto` for 30/Γ
    #[arg(long = "t-max", default_value = "auto")]
    pub t_max: Auto<Wrapped>,
    /// Samples per axis
    #[arg(long, default_value_t = 401, value_parser = clap::value_parser!(u32).range(2..))]
    pub points: u32,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Largest retarded time, or `auto` for 30/Γ
    #[arg(long = "t-max", default_value = "auto")]
    pub t_max: Auto<Wrapped>,
    /// Samples per axis
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(2..))]
    pub points: u32,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// MIN:MAX in the reporting frame, or `auto`
    #[arg(long = "k-range", default_value = "auto", allow_hyphen_values = true)]
    pub k_range: Auto<Range>,
    #[arg(long, default_value_t = 2001, value_parser = clap::value_parser!(u32).range(2..))]
    pub points: u32,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    /// κ/g axis as MIN:MAX:COUNT[:log]
    #[arg(long = "kappa-axis", default_value = "0.01:100:40:log")]
    pub kappa_axis: AxisSpec,
    /// γ_p/g axis as MIN:MAX:COUNT[:log]
    #[arg(long = "gamma-p-axis", default_value = "0.01:100:40:log")]
    pub gamma_p_axis: AxisSpec,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// T/τ_g axis as MIN:MAX:COUNT[:log], or `auto` (up to 30/Γ)
    #[arg(long = "t-axis", default_value = "auto")]
    pub t_axis: Auto<AxisSpec>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Machine-readable report
    #[arg(long)]
    pub json: bool,
    /// Flip the sign of one density-matrix residue before the oracle check
    #[arg(long = "inject-dm-sign-error", hide = true)]
    pub inject_dm_sign_error: bool,
}

/// A value or the literal `auto`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Auto<T> {
    Auto,
    Value(T),
}

impl<T: FromStr<Err = String>> FromStr for Auto<T> {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            Ok(Auto::Auto)
        } else {
            s.parse().map(Auto::Value)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl FromStr for Range {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max] = parts[..] else {
            return Err(format!("expected MIN:MAX, got `{s}`"));
        };
        let (min, max) = (number(min)?, number(max)?);
        if !(max > min) {
            return Err(format!("range needs MIN < MAX, got `{s}`"));
        }
        Ok(Range { min, max })
    }
}

/// Newtype so clap can parse `MIN:MAX:COUNT[:log]` straight into an [`Axis`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec(pub Axis);

impl FromStr for AxisSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let (min, max, count, spacing) = match parts[..] {
            [a, b, n] => (a, b, n, Spacing::Linear),
            [a, b, n, "log"] => (a, b, n, Spacing::Log),
            [a, b, n, "lin" | "linear"] => (a, b, n, Spacing::Linear),
            _ => return Err(format!("expected MIN:MAX:COUNT[:log], got `{s}`")),
        };
        let count: usize = count.parse().map_err(|_| format!("bad point count `{count}`"))?;
        Axis::new(number(min)?, number(max)?, count, spacing).map(AxisSpec).map_err(|e| e.to_string())
    }
}

impl FromStr for Wrapped {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        number(s).map(Wrapped)
    }
}

/// f64 with a `String` parse error, so it fits [`Auto`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrapped(pub f64);

fn number(s: &str) -> Result<f64, String> {
    let x: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_specs() {
        let a: AxisSpec = "0.1:10:5:log".parse().unwrap();
        assert_eq!(a.0.spacing, Spacing::Log);
        assert_eq!(a.0.count, 5);
        assert!("1:2".parse::<AxisSpec>().is_err());
        assert!("1:2:1".parse::<AxisSpec>().is_err());
        assert!("0:2:4:log".parse::<AxisSpec>().is_err());
        assert!("1:2:3:cubic".parse::<AxisSpec>().is_err());
    }

    #[test]
    fn ranges_and_auto() {
        assert_eq!("-5:5".parse::<Range>().unwrap(), Range { min: -5.0, max: 5.0 });
        assert!("5:-5".parse::<Range>().is_err());
        assert_eq!("auto".parse::<Auto<Range>>().unwrap(), Auto::Auto);
    }
}
