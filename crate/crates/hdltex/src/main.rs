use std::io;

fn main() {
    let mut out = io::stdout().lock();
    let mut err = io::stderr();
    let code = hdltex::cli::run(std::env::args_os(), hdltex::cli::Io { out: &mut out, err: &mut err });
    std::process::exit(code);
}
