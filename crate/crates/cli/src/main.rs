use std::io::Write;

use topcite_cli::{execute, CommandPlan};

fn main() {
    let plan = match CommandPlan::parse_args(std::env::args_os()) {
        Ok(plan) => plan,
        // clap exits 2 on usage errors and 0 for --help/--version
        Err(e) => e.exit(),
    };
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    if let Err(e) = execute(&plan, &mut out) {
        let _ = out.flush();
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
    if out.flush().is_err() {
        std::process::exit(1);
    }
}
