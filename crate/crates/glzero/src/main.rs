use clap::Parser;

fn main() {
    if let Ok(v) = std::env::var("GLZERO_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
    let cli = glzero::cli::Cli::parse();
    if let Err(e) = glzero::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
