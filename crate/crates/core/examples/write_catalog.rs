//! Writes the catalog polytopes as JSON files into the directory given on the command line
//! (default `data/polytopes`).

use std::fs;
use std::path::PathBuf;

use toric_ma::io::write_polytope;
use toric_ma::polytope::catalog;

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/polytopes".into()));
    fs::create_dir_all(&dir).expect("create output directory");
    for p in catalog::all() {
        let name = p.name.clone().expect("catalog polytopes are named");
        let path = dir.join(format!("{name}.json"));
        fs::write(&path, write_polytope(&p).expect("catalog polytope serializes")).expect("write polytope");
        println!("{}", path.display());
    }
}
