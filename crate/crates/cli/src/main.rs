use clap::Parser;

fn main() {
    let cli = offload_cli::Cli::parse();
    match offload_cli::run(cli) {
        Ok(report) => print!("{report}"),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(offload_cli::exit_code(&err));
        }
    }
}
