use clap::Parser;
use llm_psychometrics::cli::{error_exit_code, run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            for m in &out.messages {
                eprintln!("{m}");
            }
            for f in &out.files {
                println!("{}", f.display());
            }
            std::process::exit(out.exit_code);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(error_exit_code(&e));
        }
    }
}
