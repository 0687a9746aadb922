use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use schwarz_dd::harness::{
    emit_csv, parse_counts, parse_spaces, run_scaling, run_single, write_json, ExperimentConfig, RunRecord,
};
use schwarz_dd::problem::CoefficientKind;
use schwarz_dd::Result;

/// Two-level additive Schwarz experiments on heterogeneous diffusion problems.
///
/// Flags override values read from `--config`.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Subdomains per side (1/H).
    #[arg(long)]
    subdomains: Option<usize>,
    /// Elements per subdomain side (H/h).
    #[arg(long)]
    hh: Option<usize>,
    /// Overlap layers.
    #[arg(long)]
    overlap: Option<usize>,
    /// constant, inclusions or channels.
    #[arg(long)]
    coeff: Option<CoefficientKind>,
    #[arg(long)]
    contrast: Option<f64>,
    /// Comma-separated list from none, gdsw, rgdsw, ams.
    #[arg(long)]
    spaces: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Also compute the dense spectrum of the preconditioned operator.
    #[arg(long)]
    spectrum: bool,
    /// Weak-scaling sweep over these subdomain counts, e.g. 2,4,8.
    #[arg(long)]
    sweep: Option<String>,
    /// Results table; a `.json` file with full records is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Coefficient raster (one line per element row).
    #[arg(long)]
    dump_coeff: Option<PathBuf>,
    /// Coarse basis rasters of every two-level space.
    #[arg(long)]
    dump_basis: Option<PathBuf>,
}

fn configure(cli: Cli) -> Result<ExperimentConfig> {
    let mut c = match &cli.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(k) = cli.subdomains {
        c.subdomains_per_side = k;
        c.elements_per_side = None;
    }
    if let Some(hh) = cli.hh {
        c.elements_per_subdomain = hh;
        c.elements_per_side = None;
    }
    if let Some(v) = cli.overlap {
        c.overlap = v;
    }
    if let Some(v) = cli.coeff {
        if v != c.coefficient {
            c.geometry = None;
        }
        c.coefficient = v;
    }
    if let Some(v) = cli.contrast {
        c.contrast = v;
    }
    if let Some(v) = &cli.spaces {
        c.spaces = parse_spaces(v)?;
    }
    if let Some(v) = cli.tol {
        c.tol = v;
    }
    if let Some(v) = cli.max_iter {
        c.max_iter = v;
    }
    if cli.spectrum {
        c.spectrum = true;
    }
    if let Some(v) = &cli.sweep {
        c.sweep = parse_counts(v)?;
    }
    if cli.out.is_some() {
        c.out = cli.out;
    }
    if cli.dump_coeff.is_some() {
        c.dump_coeff = cli.dump_coeff;
    }
    if cli.dump_basis.is_some() {
        c.dump_basis = cli.dump_basis;
    }
    c.validate()?;
    Ok(c)
}

fn print_summary(records: &[RunRecord]) {
    println!(
        "{:>6} {:>5} {:>6} {:>7} {:>6} {:>5} {:>11} {:>11} {:>11} {:>9}",
        "space", "1/H", "n", "coarse", "iters", "conv", "kappa", "lambda_min", "lambda_max", "time[s]"
    );
    for r in records {
        if let Some(e) = &r.error {
            println!("1/H={}: {e}", r.inv_h);
        }
        for s in &r.results {
            match (&s.report, &s.error) {
                (Some(rep), _) => println!(
                    "{:>6} {:>5} {:>6} {:>7} {:>6} {:>5} {:>11.4e} {:>11.4e} {:>11.4e} {:>9.3}",
                    s.space.name(),
                    r.inv_h,
                    r.elements_per_side,
                    s.coarse_dim.unwrap_or(0),
                    rep.iterations,
                    rep.converged,
                    rep.kappa,
                    rep.lambda_min,
                    rep.lambda_max,
                    rep.walltime_s
                ),
                (None, Some(e)) => println!(
                    "{:>6} {:>5} {:>6} failed: {e}",
                    s.space.name(),
                    r.inv_h,
                    r.elements_per_side
                ),
                (None, None) => {}
            }
            if let Some(sp) = &s.spectrum {
                println!(
                    "{:>6} spectrum: {} eigenvalues in [{:.4e}, {:.4e}]",
                    "",
                    sp.size,
                    sp.lambda_min(),
                    sp.lambda_max()
                );
            }
            if let Some(e) = &s.spectrum_error {
                println!("{:>6} spectrum skipped: {e}", "");
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = configure(cli)?;
    let records = if config.sweep.is_empty() {
        vec![run_single(&config)?]
    } else {
        run_scaling(&config, &config.sweep)
    };
    print_summary(&records);
    if let Some(out) = &config.out {
        emit_csv(&records, out)?;
        write_json(&records, out.with_extension("json"))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use schwarz_dd::harness::{read_csv, SpaceChoice, CSV_HEADER};
    use schwarz_dd::Error;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("schwarz-dd").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn sweep_writes_csv_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("sweep.csv");
        let out_arg = out.to_str().unwrap();
        run(cli(&[
            "--coeff",
            "inclusions",
            "--sweep",
            "2,4",
            "--spaces",
            "none,ams",
            "--out",
            out_arg,
        ]))
        .unwrap();

        let text = std::fs::read_to_string(&out).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        let rows = read_csv(&out).unwrap();
        assert_eq!(rows.iter().map(|r| r.inv_h).collect::<Vec<_>>(), vec![2, 2, 4, 4]);
        assert!(rows.iter().all(|r| r.converged && r.n == r.inv_h * 8));

        let json = std::fs::read_to_string(out.with_extension("json")).unwrap();
        let records: Vec<RunRecord> = serde_json::from_str(&json).unwrap();
        assert_eq!(records.len(), 2);
        let ams = records[1].result(SpaceChoice::Ams).unwrap();
        assert_eq!(ams.coarse_dim, Some(9));
        assert_eq!(rows[3].iterations, ams.report.as_ref().map(|r| r.iterations));
    }

    #[test]
    fn flags_override_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(
            &path,
            r#"{"subdomains": 2, "hh": 16, "coeff": "channels", "tol": 1e-6}"#,
        )
        .unwrap();
        let c = configure(cli(&[
            "--config",
            path.to_str().unwrap(),
            "--hh",
            "8",
            "--coeff",
            "constant",
        ]))
        .unwrap();
        assert_eq!(c.elements(), 16);
        assert_eq!(c.coefficient, CoefficientKind::Constant);
        assert_eq!(c.tol, 1e-6);
    }

    #[test]
    fn usage_errors_name_the_field() {
        let field = |args: &[&str]| match configure(cli(args)) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        };
        assert_eq!(field(&["--hh", "2", "--spaces", "gdsw"]), "elements_per_subdomain");
        assert_eq!(field(&["--spaces", "bddc"]), "spaces");
        assert_eq!(field(&["--sweep", "2,0"]), "sweep");
    }
}
