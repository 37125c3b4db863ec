use clap::Parser;
use evmgen_cli::{cmd_bench, cmd_run, exit, Cli, Command};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            std::process::exit(if usage { exit::INPUT_ERROR } else { 0 });
        }
    };
    let code = match cli.command {
        Command::Run(args) => match cmd_run(&args) {
            Ok((code, outcome, files)) => {
                let r = &outcome.report;
                println!(
                    "{}: covered {}/{} branches in {} iterations ({})",
                    r.contract,
                    r.branches_covered,
                    r.branches_found,
                    r.iterations,
                    files.suite.display()
                );
                code
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::Bench(args) => match cmd_bench(&args) {
            Ok(summary) => {
                print!("{}", summary.table);
                exit::FULL_COVERAGE
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
    };
    std::process::exit(code);
}
