fn main() {
    let env_seed = std::env::var(sbvsim::cli::SEED_ENV).ok();
    std::process::exit(sbvsim::cli::run(std::env::args_os(), env_seed));
}
