use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(evmgen_fixtures::checked_in_dir);
    evmgen_fixtures::write_all(&dir)?;
    println!("wrote {} fixtures to {}", evmgen_fixtures::all().len(), dir.display());
    Ok(())
}
