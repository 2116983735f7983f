fn main() {
    let outcome = ensemblab::cli::run_from_args(std::env::args_os());
    if outcome.exit_code == 0 {
        println!("{}", outcome.summary.trim_end());
    } else {
        eprintln!("{}", outcome.summary.trim_end());
    }
    std::process::exit(outcome.exit_code);
}
