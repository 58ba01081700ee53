#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use omega_core::sdl::serialize_sdl;
use omega_core::{Column, Dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn omega(args: &[&str], env: &BTreeMap<String, String>) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("omega").chain(args.iter().copied());
    let code = omega_cli::run(argv, env, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

pub fn home_env(home: &Path) -> BTreeMap<String, String> {
    BTreeMap::from([("OMEGA_HOME".to_string(), home.to_string_lossy().into_owned())])
}

/// Two Gaussian classes separated along `x`; `y` is noise.
pub fn two_class(name: &str, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut label = Vec::new();
    for i in 0..n {
        let class = i % 2;
        x.push(class as f64 * 4.0 + rng.gen_range(-1.0..1.0));
        y.push(rng.gen_range(-1.0..1.0));
        label.push(if class == 0 { "a" } else { "b" });
    }
    Dataset::new(
        name,
        vec![Column::real("x", x), Column::real("y", y), Column::categorical("label", &label)],
    )
    .unwrap()
}

/// A class signal on `signal` next to a feature of much larger scale.
pub fn scaled(name: &str, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut signal = Vec::new();
    let mut noise = Vec::new();
    let mut label = Vec::new();
    for i in 0..n {
        let class = i % 2;
        signal.push(class as f64 + rng.gen_range(-0.1..0.1));
        noise.push(rng.gen_range(0.0..1000.0));
        label.push(if class == 0 { "a" } else { "b" });
    }
    Dataset::new(
        name,
        vec![
            Column::real("signal", signal),
            Column::real("noise", noise),
            Column::categorical("label", &label),
        ],
    )
    .unwrap()
}

pub fn write_dataset(dir: &Path, file: &str, d: &Dataset) -> PathBuf {
    let path = dir.join(file);
    std::fs::write(&path, serialize_sdl(d)).unwrap();
    path
}

pub fn write_task(dir: &Path, file: &str, body: &str) -> PathBuf {
    let path = dir.join(file);
    std::fs::write(&path, format!("task {{ {body} }}\n")).unwrap();
    path
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
