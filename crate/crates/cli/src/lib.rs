//! Library side of the `toric-quant` command-line tool: config loading,
//! command execution and report emission.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{normalize_command, run};
pub use config::{load_config, CliError, ExperimentConfig, Overrides};
pub use report::{emit, Format, RunReport};

/// Comma-separated reals; empty input gives an empty list.
pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse()
                .map_err(|_| CliError::new("E_USAGE", format!("bad number {p:?} in --t")))
        })
        .collect()
}

pub fn parse_ints(s: &str) -> Result<Vec<i64>, CliError> {
    s.split(',')
        .map(str::trim)
        .map(|p| {
            p.parse()
                .map_err(|_| CliError::new("E_USAGE", format!("bad integer {p:?}")))
        })
        .collect()
}

/// Matrix rows separated by `;`, entries by `,`.
pub fn parse_matrix(s: &str) -> Result<Vec<Vec<i64>>, CliError> {
    s.split(';').map(parse_ints).collect()
}

/// Caps the global thread pool from `TORIC_QUANT_THREADS`.
pub fn configure_threads() -> Result<Option<usize>, CliError> {
    let Ok(v) = std::env::var("TORIC_QUANT_THREADS") else {
        return Ok(None);
    };
    let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::new(
            "E_USAGE",
            format!("TORIC_QUANT_THREADS must be a positive integer, got {v:?}"),
        )
    })?;
    #[cfg(feature = "parallel")]
    {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(Some(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list("8,16, 32").unwrap(), vec![8.0, 16.0, 32.0]);
        assert!(parse_list("").unwrap().is_empty());
        assert!(parse_list("8,x").is_err());
        assert_eq!(parse_ints("1,-2").unwrap(), vec![1, -2]);
        assert_eq!(
            parse_matrix("1,0;0,1").unwrap(),
            vec![vec![1, 0], vec![0, 1]]
        );
    }
}
