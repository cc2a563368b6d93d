//! Acceptance criterion 9: every subcommand, run twice with the same config
//! and seed, produces byte-identical artifacts, also across different
//! worker counts.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use pomdp_approx_cli::{run, CommandKind};

const ALL_COMMANDS: [CommandKind; 8] = [
    CommandKind::Discretize,
    CommandKind::SolveBelief,
    CommandKind::SolveWindow,
    CommandKind::LearnWindow,
    CommandKind::LearnBelief,
    CommandKind::Bounds,
    CommandKind::Evaluate,
    CommandKind::Sweep,
];

fn small_config(out_dir: &Path) -> String {
    format!(
        r#"
seed = 20240917
output_dir = "{}"

[model]
name = "finite-toy"

[quantizers]
state_bins = [2]
obs_bins = [2]
simplex_resolution = 8

[window]
length = 1

[build]
n_samples = 2000

[learning]
steps = 5000
checkpoints = [1000]

[evaluation]
n_paths = 200

[stability]
t_max = 3
n_paths = 200
ltv_budget = 30
k_samples = 30

[sweep]
obs_bins = [2, 4]
windows = [0, 1]
simplex_resolutions = [8]
"#,
        out_dir.display()
    )
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_file() {
            out.insert(
                path.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&path).unwrap(),
            );
        }
    }
    out
}

#[test]
fn criterion_09_artifact_determinism() {
    let t0 = Instant::now();
    let work = tempfile::tempdir().unwrap();
    for kind in ALL_COMMANDS {
        let out_dir = work.path().join(format!("out-{}", kind.name()));
        let config_path = work.path().join(format!("{}.toml", kind.name()));
        let mut f = std::fs::File::create(&config_path).unwrap();
        f.write_all(small_config(&out_dir).as_bytes()).unwrap();
        drop(f);

        run(kind, &config_path, None, None, &[]).unwrap();
        let first = snapshot(&out_dir);
        assert!(!first.is_empty());

        // Same config and seed again.
        run(kind, &config_path, None, None, &[]).unwrap();
        let second = snapshot(&out_dir);
        assert_eq!(
            first.keys().collect::<Vec<_>>(),
            second.keys().collect::<Vec<_>>()
        );
        for (name, bytes) in &first {
            assert_eq!(
                bytes, &second[name],
                "{}: artifact {name} differs between identical runs",
                kind.name()
            );
        }

        // Different worker count.
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        pool.install(|| run(kind, &config_path, None, None, &[]).unwrap());
        let third = snapshot(&out_dir);
        for (name, bytes) in &first {
            assert_eq!(
                bytes, &third[name],
                "{}: artifact {name} differs under a single-thread pool",
                kind.name()
            );
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    println!("criterion 09 determinism: PASS in {elapsed:.2}s (budget 300s): 8 subcommands x 3 runs");
    assert!(elapsed < 300.0);
}
