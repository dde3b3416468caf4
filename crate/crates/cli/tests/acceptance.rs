use std::process::ExitCode;

use delayed_hedge_cli::acceptance_suite;

fn main() -> ExitCode {
    let suite = match acceptance_suite(7) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("acceptance suite could not run: {e}");
            return ExitCode::FAILURE;
        }
    };
    for c in &suite.criteria {
        println!("{}", c.line());
    }
    let failed = suite.criteria.iter().filter(|c| !c.passed).count();
    println!("acceptance: {} passed, {failed} failed", suite.criteria.len() - failed);
    if suite.criteria.len() == 11 && failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
