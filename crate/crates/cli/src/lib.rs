//! Command-line front end for the `dyadic` crate.
//!
//! Every command writes its artifacts under the output directory, prints its
//! main JSON object on standard output and maps the verdict to an exit code:
//! 0 on success, 1 when a check fails, 2 on malformed input and 3 on a
//! numeric failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;

use config::{parse, ParseExit};

/// Parses `argv` (without the program name), runs the command and returns
/// the process exit code.
pub fn main_with(argv: &[String]) -> i32 {
    let cfg = match parse(argv) {
        Ok(c) => c,
        Err(ParseExit::Help(text)) => {
            print!("{text}");
            return 0;
        }
        Err(ParseExit::Malformed(msg)) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    let result = run::run(&cfg).and_then(|out| {
        run::write_resolved_config(&cfg)?;
        Ok(out)
    });
    match result {
        Ok(out) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&out.json).unwrap_or_default()
            );
            if out.pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {}: {}", e.name(), e);
            run::exit_code(&e)
        }
    }
}
