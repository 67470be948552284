use clap::Parser;

fn main() {
    let cli = nci::cli::Cli::parse();
    match nci::cli::run(&cli) {
        Ok(summary) => print!("{summary}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
