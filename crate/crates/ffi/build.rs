use std::env;
use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let config = cbindgen::Config::from_file(dir.join("cbindgen.toml")).expect("cbindgen.toml");
    let bindings = cbindgen::Builder::new().with_crate(&dir).with_config(config).generate().expect("header generation");
    let out = PathBuf::from(env::var("OUT_DIR").unwrap()).join("twinbeam.h");
    bindings.write_to_file(&out);
    bindings.write_to_file(dir.join("include").join("twinbeam.h"));
}
