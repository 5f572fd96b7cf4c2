use std::io::Write;

fn main() {
    let run = genshift_cli::run(std::env::args_os());
    print!("{}", run.stdout);
    eprint!("{}", run.stderr);
    let _ = std::io::stdout().flush();
    std::process::exit(run.code);
}
