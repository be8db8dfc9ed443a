use std::io::{stderr, stdout};
use std::process::ExitCode;

use reset_ldp::{run_cli, SEED_ENV};

fn main() -> ExitCode {
    let env_seed = std::env::var(SEED_ENV).ok();
    let code = run_cli(std::env::args_os(), env_seed.as_deref(), &mut stdout().lock(), &mut stderr().lock());
    ExitCode::from(code as u8)
}
