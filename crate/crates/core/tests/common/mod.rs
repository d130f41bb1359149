#![allow(dead_code)]

pub mod chrf_reference;

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Seed under which the 12-file fixture loses exactly the planted files.
pub const FIXTURE_SEED: u64 = 10;

const WORDS: &[&str] = &[
    "item", "count", "total", "index", "value", "buffer", "node", "left", "right", "key", "cache",
    "limit", "offset", "score", "name", "path", "entry", "queue", "stack", "width",
];

fn ident(rng: &mut impl Rng) -> String {
    let a = WORDS[rng.random_range(0..WORDS.len())];
    let b = WORDS[rng.random_range(0..WORDS.len())];
    format!("{a}_{b}")
}

fn python_file(rng: &mut impl Rng) -> String {
    let mut out = String::new();
    for _ in 0..rng.random_range(2..5) {
        let f = ident(rng);
        let (a, b) = (ident(rng), ident(rng));
        out.push_str(&format!("def {f}({a}, {b}):\n"));
        for _ in 0..rng.random_range(2..6) {
            let v = ident(rng);
            out.push_str(&format!(
                "    {v} = {a} + {b} * {}\n",
                rng.random_range(1..9)
            ));
        }
        out.push_str(&format!("    return {a}\n"));
    }
    out
}

fn java_file(rng: &mut impl Rng, class: &str) -> String {
    let mut out = format!("class {class} {{\n");
    for _ in 0..rng.random_range(2..4) {
        let (m, a) = (ident(rng), ident(rng));
        out.push_str(&format!("    int {m}(int {a}) {{\n"));
        for _ in 0..rng.random_range(1..4) {
            out.push_str(&format!(
                "        {a} = {a} * {} + {};\n",
                rng.random_range(2..9),
                rng.random_range(0..9)
            ));
        }
        out.push_str(&format!("        return {a};\n    }}\n"));
    }
    out.push_str("}\n");
    out
}

fn go_file(rng: &mut impl Rng) -> String {
    let mut out = String::from("package gen\n");
    for _ in 0..rng.random_range(2..4) {
        let (f, a) = (ident(rng), ident(rng));
        out.push_str(&format!("func {f}({a} int) int {{\n"));
        for _ in 0..rng.random_range(1..4) {
            out.push_str(&format!("\t{a} = {a} + {}\n", rng.random_range(1..9)));
        }
        out.push_str(&format!("\treturn {a}\n}}\n"));
    }
    out
}

fn rust_file(rng: &mut impl Rng) -> String {
    let mut out = String::new();
    for _ in 0..rng.random_range(2..4) {
        let (f, a) = (ident(rng), ident(rng));
        out.push_str(&format!("pub fn {f}({a}: u32) -> u32 {{\n"));
        for _ in 0..rng.random_range(1..4) {
            out.push_str(&format!(
                "    let {a} = {a}.wrapping_mul({});\n",
                rng.random_range(2..9)
            ));
        }
        out.push_str(&format!("    {a}\n}}\n"));
    }
    out
}

/// Write a deterministic multi-language repository of `files` files spread
/// over nested directories.
pub fn synthetic_repo(root: &Path, files: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs = [
        "",
        "src",
        "src/core",
        "src/core/impl",
        "src/util",
        "lib",
        "lib/io",
        "tests",
    ];
    std::fs::write(
        root.join("repo-meta.toml"),
        format!("name = \"synthetic{seed}\"\ntopic = \"generated\"\nage_years = \"4\"\nstars = \"300\"\n"),
    )
    .unwrap();
    for i in 0..files {
        let dir = root.join(dirs[i % dirs.len()]);
        std::fs::create_dir_all(&dir).unwrap();
        let (name, text) = match i % 4 {
            0 => (format!("mod_{i}.py"), python_file(&mut rng)),
            1 => {
                let class = format!("Gen{i}");
                (format!("{class}.java"), java_file(&mut rng, &class))
            }
            2 => (format!("gen_{i}.go"), go_file(&mut rng)),
            _ => (format!("gen_{i}.rs"), rust_file(&mut rng)),
        };
        std::fs::write(dir.join(name), text).unwrap();
    }
}

/// Copy a fixture directory tree into `dest`.
pub fn copy_tree(src: &Path, dest: &Path) {
    for entry in walkdir::WalkDir::new(src) {
        let entry = entry.unwrap();
        let rel = entry.path().strip_prefix(src).unwrap();
        let target = dest.join(rel);
        if entry.file_type().is_dir() {
            std::fs::create_dir_all(&target).unwrap();
        } else {
            std::fs::copy(entry.path(), &target).unwrap();
        }
    }
}
