use std::process::ExitCode;

fn main() -> ExitCode {
    let result = trtk::run_command(std::env::args_os());
    print!("{}", result.output);
    ExitCode::from(result.exit_code as u8)
}
