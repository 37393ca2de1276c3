use clap::Parser;
use quermass::cli;

fn main() {
    let parsed = cli::Cli::parse();
    let out = cli::out_path(&parsed);
    match cli::run(parsed) {
        Ok(result) => {
            if let Err(e) = cli::emit(&result.bytes, &out) {
                eprint!("{}", cli::error_record(&e));
                std::process::exit(cli::exit_code(&e));
            }
            std::process::exit(if result.violations > 0 { 1 } else { 0 });
        }
        Err(e) => {
            eprint!("{}", cli::error_record(&e));
            std::process::exit(cli::exit_code(&e));
        }
    }
}
