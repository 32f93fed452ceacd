use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use nmmo::campaign::{run_campaign, spec_from_cli, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let spec = match spec_from_cli(&cli) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run_campaign(&spec) {
        Ok(report) => {
            for (seed, err) in &report.failures {
                eprintln!("seed {seed} failed: {err}");
            }
            if let Some(last) = report.summary.last() {
                println!(
                    "{} runs, final hypervolume median {} (iqr {} .. {})",
                    last.n_runs, last.hv_median, last.hv_q25, last.hv_q75
                );
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
