//! Scenario files: a flat `key = value` format with `#` comments,
//! mirroring the scenario configuration field by field plus the two
//! channel knobs. Absent keys keep their defaults; unknown keys are
//! rejected so typos surface as configuration errors.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use tocsim_core::{CavOption, RsuOption, ScenarioConfig, Scheme, SearchBudget};

use crate::CliError;

/// A scenario plus the channel model it should run under.
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    pub scenario: ScenarioConfig,
    /// Maximum sender-receiver distance for a frame to arrive (m);
    /// unlimited when absent.
    pub comm_range: Option<f64>,
    /// Independent per-frame loss probability.
    pub p_loss: f64,
}

pub fn load_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Parses the file body; errors carry the 1-based line number.
pub fn parse_config_str(text: &str) -> Result<FileConfig, String> {
    let mut cfg = FileConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {lineno}: expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(format!("line {lineno}: key `{key}` has no value"));
        }
        apply_key(&mut cfg, key, value)
            .map_err(|reason| format!("line {lineno}: {reason}"))?;
    }
    cfg.scenario
        .validate()
        .map_err(|e| format!("invalid scenario: {e}"))?;
    if !(0.0..=1.0).contains(&cfg.p_loss) {
        return Err(format!("p_loss {} outside [0, 1]", cfg.p_loss));
    }
    Ok(cfg)
}

fn apply_key(cfg: &mut FileConfig, key: &str, value: &str) -> Result<(), String> {
    let s = &mut cfg.scenario;
    match key {
        "scheme" => s.scheme = parse_scheme(value)?,
        "denm_d_mrm" => s.denm_d_mrm = parse_budget(value)?,
        "mcm_rsu_option" => s.mcm_rsu_option = parse_rsu_option(value)?,
        "mcm_cav_option" => s.mcm_cav_option = parse_cav_option(value)?,
        "relevance_distance" => s.relevance_distance = parse_num(key, value)?,
        "max_toc_range" => s.max_toc_range = parse_num(key, value)?,
        "s_len" => s.s_len = parse_num(key, value)?,
        "y_margin" => s.y_margin = parse_num(key, value)?,
        "timestep" => s.timestep = parse_num(key, value)?,
        "n_sections" => s.n_sections = parse_num(key, value)?,
        "spot_sections" => s.spot_sections = parse_num(key, value)?,
        "spot_count" => s.spot_count = parse_num(key, value)?,
        "comm_range" => {
            cfg.comm_range = match value {
                "unlimited" => None,
                _ => Some(parse_num(key, value)?),
            }
        }
        "p_loss" => cfg.p_loss = parse_num(key, value)?,
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| format!("key `{key}`: bad value `{value}`: {e}"))
}

fn parse_scheme(value: &str) -> Result<Scheme, String> {
    match value {
        "denm" => Ok(Scheme::Denm),
        "mcm" => Ok(Scheme::Mcm),
        _ => Err(format!("scheme must be `denm` or `mcm`, got `{value}`")),
    }
}

fn parse_budget(value: &str) -> Result<SearchBudget, String> {
    match value {
        "0" | "zero" => Ok(SearchBudget::Zero),
        "50" | "fifty" => Ok(SearchBudget::Fifty),
        "unlimited" => Ok(SearchBudget::Unlimited),
        _ => Err(format!(
            "denm_d_mrm must be `0`, `50`, or `unlimited`, got `{value}`"
        )),
    }
}

fn parse_rsu_option(value: &str) -> Result<RsuOption, String> {
    match value {
        "min_dmrm" => Ok(RsuOption::MinDmrm),
        "distr_toc" => Ok(RsuOption::DistrToc),
        _ => Err(format!(
            "mcm_rsu_option must be `min_dmrm` or `distr_toc`, got `{value}`"
        )),
    }
}

fn parse_cav_option(value: &str) -> Result<CavOption, String> {
    match value {
        "rsu_advice" => Ok(CavOption::RsuAdvice),
        "cav_decision" => Ok(CavOption::CavDecision),
        _ => Err(format!(
            "mcm_cav_option must be `rsu_advice` or `cav_decision`, got `{value}`"
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_an_empty_file() {
        let cfg = parse_config_str("").unwrap();
        assert_eq!(cfg.scenario, ScenarioConfig::default());
        assert_eq!(cfg.comm_range, None);
        assert_eq!(cfg.p_loss, 0.0);
    }

    #[test]
    fn full_file_parses_with_comments_and_blank_lines() {
        let text = "\
# messaging
scheme = mcm
mcm_rsu_option = distr_toc
mcm_cav_option = cav_decision

# geometry
relevance_distance = 500
max_toc_range = 700   # cap under test
spot_count = 2
comm_range = 300
p_loss = 0.25
";
        let cfg = parse_config_str(text).unwrap();
        assert_eq!(cfg.scenario.scheme, Scheme::Mcm);
        assert_eq!(cfg.scenario.mcm_rsu_option, RsuOption::DistrToc);
        assert_eq!(cfg.scenario.mcm_cav_option, CavOption::CavDecision);
        assert_eq!(cfg.scenario.max_toc_range, 700.0);
        assert_eq!(cfg.scenario.spot_count, 2);
        assert_eq!(cfg.comm_range, Some(300.0));
        assert_eq!(cfg.p_loss, 0.25);
    }

    #[test]
    fn unknown_keys_and_malformed_lines_are_rejected_with_line_numbers() {
        let err = parse_config_str("scheme = denm\nspeed = 99\n").unwrap_err();
        assert!(err.contains("line 2"), "{err}");
        assert!(err.contains("unknown key"), "{err}");
        let err = parse_config_str("just words\n").unwrap_err();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn inconsistent_geometry_is_rejected_at_parse_time() {
        // Relevance must equal the grid length; 19 sections break that.
        let err = parse_config_str("n_sections = 19\n").unwrap_err();
        assert!(err.contains("invalid scenario"), "{err}");
    }

    #[test]
    fn out_of_range_loss_probability_is_rejected() {
        let err = parse_config_str("p_loss = 1.5\n").unwrap_err();
        assert!(err.contains("p_loss"), "{err}");
    }
}
