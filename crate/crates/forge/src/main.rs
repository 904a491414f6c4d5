use clap::Parser;

fn main() {
    let cli = forge::cli::Cli::parse();
    match forge::cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}
