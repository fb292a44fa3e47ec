fn main() {
    let seed = std::env::var(fdpi::cli::SEED_VAR).ok();
    let code = fdpi::cli::run(std::env::args_os(), seed, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
