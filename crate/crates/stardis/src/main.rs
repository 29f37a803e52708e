use clap::Parser;

fn main() {
    let cli = stardis::cli::Cli::parse();
    if let Err(e) = stardis::cli::run(cli) {
        // A closed downstream pipe is not a failure of the run.
        if let stardis::Error::Io(io) = &e {
            if io.kind() == std::io::ErrorKind::BrokenPipe {
                return;
            }
        }
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
