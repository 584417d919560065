fn main() {
    let (code, _) = l1weak_cli::dispatch(std::env::args_os());
    std::process::exit(code);
}
