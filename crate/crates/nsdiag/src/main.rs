use mimalloc::MiMalloc;

#[global_allocator]
static GLOBAL: MiMalloc = MiMalloc;

fn main() {
    std::process::exit(nsdiag::cli::main_with_args(std::env::args_os()));
}
