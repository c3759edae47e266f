use clap::Parser;

fn main() {
    let cli = walklab_cli::Cli::parse();
    match walklab_cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            // Machine-readable error on stderr.
            let doc = serde_json::json!({ "error": format!("{err:#}") });
            eprintln!("{doc}");
            std::process::exit(2);
        }
    }
}
