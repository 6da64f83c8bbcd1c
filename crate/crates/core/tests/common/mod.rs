#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qtail::dgp::simulate_study_fixture;
use qtail::pipeline::{PoolSpec, Role, SeriesSpec, StudyConfig};
use qtail::timeseries::io::write_frame_path;

/// Writes a simulated level-form fixture and returns a study config for it.
pub fn fixture_config(dir: &Path, periods: usize, seed: u64, pool: &str) -> StudyConfig {
    let input = dir.join("fixture.csv");
    let frame = simulate_study_fixture(periods, seed).unwrap();
    write_frame_path(&frame, &input).unwrap();
    let mut cfg = StudyConfig {
        input,
        output: dir.join("out"),
        pool: PoolSpec::Preset(pool.into()),
        seed,
        ..StudyConfig::default()
    };
    for (name, column, role) in [
        ("inflation", "cpi", Role::PriceLevel),
        ("gap", "gdp", Role::GdpLevel),
        ("expectations", "expectations", Role::Expectations),
        ("imported", "import_price", Role::ImportedIndex),
    ] {
        cfg.series.insert(
            name.into(),
            SeriesSpec {
                column: column.into(),
                role,
            },
        );
    }
    cfg
}

/// Relative path to file contents for every file under `root`.
pub fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}
