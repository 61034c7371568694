use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = mipw_workbench::cli::Cli::parse();
    if let Err(e) = mipw_workbench::cli::execute(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
