use std::process::ExitCode;

fn main() -> ExitCode {
    let code = std::panic::catch_unwind(|| baire::cli::run(std::env::args_os())).unwrap_or(2);
    ExitCode::from(u8::try_from(code).unwrap_or(2))
}
