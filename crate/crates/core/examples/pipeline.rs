//! The command-line pipeline end to end, writing into a temporary directory.

use clap::Parser;
use llm_psychometrics::cli::{run, Cli};

fn step(args: &[&str]) -> llm_psychometrics::Result<()> {
    let cli = Cli::parse_from(std::iter::once("llm-psychometrics").chain(args.iter().copied()));
    let out = run(&cli)?;
    for m in out.messages {
        println!("{}: {m}", args[0]);
    }
    Ok(())
}

fn main() -> llm_psychometrics::Result<()> {
    let dir = tempfile::tempdir()?;
    let root = dir.path().to_str().unwrap().to_string();
    let responses = format!("{root}/collect/responses.csv");
    step(&["administer", "--transport", "simulator", "--personas", "none", "--runs", "300", "--out", &format!("{root}/collect")])?;
    step(&["bias", "--responses", &responses, "--out", &format!("{root}/bias")])?;
    step(&["pca", "--responses", &responses, "--out", &format!("{root}/pca")])?;
    step(&["cfa", "--responses", &responses, "--out", &format!("{root}/cfa")])?;
    step(&["reliability", "--responses", &responses, "--out", &format!("{root}/reliability")])?;
    step(&["report", "--input", &root, "--out", &format!("{root}/report")])?;
    print!("{}", std::fs::read_to_string(format!("{root}/report/report.md"))?);
    Ok(())
}
