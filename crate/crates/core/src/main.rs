use std::process::ExitCode;

use eprb::cli::{parse_config, run, Parsed};

fn main() -> ExitCode {
    let request = match parse_config(std::env::args_os()) {
        Ok(Parsed::Run(request)) => request,
        Ok(Parsed::Print(text)) => {
            print!("{text}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("eprb: {e}");
            return ExitCode::from(1);
        }
    };
    match run(&request) {
        Ok(manifest) => {
            for path in &manifest.outputs {
                println!("{path}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("eprb: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
