//! `verify`: re-hash every output recorded in a directory's manifest and
//! report mismatches.

use crate::error::CliError;
use crate::manifest::verify_dir;
use std::path::PathBuf;

#[derive(clap::Args, Debug)]
pub struct VerifyArgs {
    /// Artifact directory containing a manifest.ini.
    #[arg(long, default_value = ".")]
    pub dir: PathBuf,
}

pub fn run(args: &VerifyArgs) -> Result<(), CliError> {
    let report = verify_dir(&args.dir)?;
    for failure in &report.failures {
        eprintln!("{failure}");
    }
    if report.failures.is_empty() {
        println!("verify: {} files ok in {}", report.checked, args.dir.display());
        Ok(())
    } else {
        Err(CliError::data(format!(
            "{} of {} files failed verification in {}",
            report.failures.len(),
            report.checked,
            args.dir.display()
        )))
    }
}
