use std::io::Write;

fn main() {
    let env = std::env::vars().collect();
    let code = {
        let stdout = std::io::stdout();
        let stderr = std::io::stderr();
        let code = omega_cli::run(std::env::args_os(), &env, &mut stdout.lock(), &mut stderr.lock());
        let _ = std::io::stdout().flush();
        code
    };
    std::process::exit(code);
}
