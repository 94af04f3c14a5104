fn main() {
    let config = match segserve::Config::from_env() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("segserve: {e}");
            std::process::exit(2);
        }
    };
    let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
    if let Err(e) = runtime.block_on(segserve::serve(config)) {
        eprintln!("segserve: {e}");
        std::process::exit(1);
    }
}
