//! Subcommand parameters. Every field is optional so that a JSON config file
//! and command-line flags can be merged before validation.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowArgs {
    /// Lattice JSON (window_start, a, b).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Polynomial coefficients c_0,c_1,… of p(λ).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub poly: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub time: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DarbouxArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Real ζ with |ζ| > 1; the step uses energy ζ + 1/ζ.
    #[arg(long, allow_negative_numbers = true)]
    pub zeta: Option<f64>,
    /// Number of steps at ζ = steps/time (with --time).
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub time: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdeArgs {
    /// Lattice JSON; not needed with --family.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub time: Option<f64>,
    /// Output times; defaults to the final time only.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// `open` or `periodic`; ignored with --family.
    #[arg(long)]
    pub boundary: Option<String>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    /// `growing` or `exploding`: start from the exact family on --window,
    /// with boundary values supplied by the same formulas.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Site range lo,hi for --family.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub window: Option<Vec<i64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleArgs {
    /// Ring length.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub l: Option<usize>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mean_b: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Negative control: add --bias-shift to b at this site (1-based) before evolving.
    #[arg(long)]
    pub bias_site: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub bias_shift: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of random envelope pairs.
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Series length (at most 64).
    #[arg(long)]
    pub terms: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelftestArgs {
    /// Run only these criteria, e.g. A1,A7.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<String>>,
}

/// Config file contents overlaid with the non-empty flags.
///
/// The file may also carry `out`, which is returned separately.
pub fn merge<T>(flags: &T, file: Option<&Path>) -> Result<(T, Option<PathBuf>), CliError>
where
    T: Serialize + DeserializeOwned,
{
    let mut base = match file {
        None => Map::new(),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => return Err(CliError::Config("config file must hold a JSON object".into())),
                Err(e) => return Err(CliError::Config(format!("{}: {e}", p.display()))),
            }
        }
    };
    let out = match base.remove("out") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(_) => return Err(CliError::Config("`out` must be a string".into())),
    };
    let over = serde_json::to_value(flags).map_err(|e| CliError::Config(e.to_string()))?;
    if let Value::Object(m) = over {
        for (k, v) in m {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
    let merged = serde_json::from_value(Value::Object(base)).map_err(|e| CliError::Config(e.to_string()))?;
    Ok((merged, out))
}

pub fn require<T: Copy>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("missing parameter `{name}`")))
}
