use clap::Parser;

/// Exit codes: 0 success, 2 rejected input / parse or I/O failure, 3 an
/// embedded experiment assertion failed.
fn main() {
    let cli = stochlab_cli::Cli::parse();
    if let Err(err) = stochlab_cli::configure_workers_from_env() {
        eprintln!("error: {err}");
        std::process::exit(2);
    }
    match stochlab_cli::run(cli) {
        Ok((json_path, csv_path)) => {
            println!("wrote {}", json_path.display());
            println!("wrote {}", csv_path.display());
        }
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(if err.is_assertion() { 3 } else { 2 });
        }
    }
}
