use std::path::{Path, PathBuf};

use genealab_cli::config::{parse, Initial, KernelConfig};
use genealab_cli::{worker_count, CliError, Kind, Overrides};

const BASE: &str = r#"
seed = 7

[equilibrium]
horizon = 5.0
lambdas = [0.5]
reps = 10
dual_reps = 10
triples = 2

[equilibrium.model]
individuals = 50
resampling_rate = 1.0
"#;

fn message(e: CliError) -> String {
    match e {
        CliError::Config(m) => m,
        other => panic!("config error expected, got {other}"),
    }
}

#[test]
fn defaults_are_filled_in() {
    let file = parse(BASE)
        .unwrap()
        .resolve(Kind::Equilibrium, &Overrides::default())
        .unwrap();
    assert_eq!(file.experiment, Some(Kind::Equilibrium));
    assert_eq!(file.tolerance.z, 3.0);
    assert_eq!(file.tolerance.bias, Some(10.0 / 50.0));
    assert_eq!(file.output, Some(PathBuf::from("genealab-out/equilibrium")));
    let model = &file.equilibrium.as_ref().unwrap().model;
    assert_eq!(model.mutation_rate, 0.0);
    assert_eq!(model.mutation_kernel, vec![vec![1.0]]);
    assert_eq!(model.initial, Initial::SingleAncestor);

    let text = file.to_toml();
    assert!(text.contains("bias = 0.2"));
    assert!(text.contains("kind = \"single_ancestor\""));
    let again = parse(&text)
        .unwrap()
        .resolve(Kind::Equilibrium, &Overrides::default())
        .unwrap();
    assert_eq!(again, file);
}

#[test]
fn overrides_replace_file_values() {
    let overrides = Overrides {
        seed: Some(99),
        reps: Some(3),
        out: Some(PathBuf::from("elsewhere")),
        workers: None,
    };
    let file = parse(BASE)
        .unwrap()
        .resolve(Kind::Equilibrium, &overrides)
        .unwrap();
    assert_eq!(file.seed, 99);
    assert_eq!(file.equilibrium.as_ref().unwrap().reps, 3);
    assert_eq!(file.output_dir(), Path::new("elsewhere"));
}

#[test]
fn errors_carry_the_path_of_the_offending_key() {
    let missing = BASE.replace("individuals = 50\n", "");
    let m = message(parse(&missing).unwrap_err());
    assert!(
        m.contains("equilibrium.model") && m.contains("missing field `individuals`"),
        "{m}"
    );

    let wrong_type = BASE.replace("\nreps = 10", "\nreps = \"ten\"");
    let m = message(parse(&wrong_type).unwrap_err());
    assert!(m.contains("equilibrium.reps"), "{m}");

    let unknown = BASE.replace("triples = 2", "triples = 2\ntriple = 3");
    let m = message(parse(&unknown).unwrap_err());
    assert!(m.contains("triple"), "{m}");

    let kernel = "seed = 1\n[infdiv]\nlevel = 1.0\n[[infdiv.laplace]]\nreps = 1\n\
                  polynomial = { order = 1, kernel = { kind = \"gaussian\" } }\n";
    let m = message(parse(kernel).unwrap_err());
    assert!(m.contains("gaussian"), "{m}");
}

#[test]
fn subcommand_and_sections_must_agree() {
    let file = parse(BASE).unwrap();
    assert!(message(
        file.clone()
            .resolve(Kind::StrongDuality, &Overrides::default())
            .unwrap_err()
    )
    .contains("[equilibrium]"));
    let declared = format!("experiment = \"strong-duality\"\n{BASE}");
    assert!(message(
        parse(&declared)
            .unwrap()
            .resolve(Kind::Equilibrium, &Overrides::default())
            .unwrap_err()
    )
    .contains("strong-duality"));
    let empty = parse("seed = 1\n").unwrap();
    assert!(message(
        empty
            .resolve(Kind::Diagnostics, &Overrides::default())
            .unwrap_err()
    )
    .contains("missing section [diagnostics]"));
}

#[test]
fn kernels_and_initial_states_parse() {
    let text = r#"
seed = 2
[duality]
horizon = 1.0
forward_reps = 1
dual_reps = 1
[duality.polynomial]
order = 3
kernel = { kind = "threshold", cap = 1.5 }
[duality.model]
individuals = 3
resampling_rate = 1.0
initial = { kind = "individuals", types = [0, 0, 0] }
"#;
    let file = parse(text)
        .unwrap()
        .resolve(Kind::DualityCheck, &Overrides::default())
        .unwrap();
    let s = file.duality.unwrap();
    assert_eq!(s.polynomial.kernel, KernelConfig::Threshold { cap: 1.5 });
    assert_eq!(s.dual_start, vec![0, 0, 0]);
    assert_eq!(
        s.model.initial,
        Initial::Individuals {
            locations: vec![0, 0, 0],
            types: vec![0, 0, 0]
        }
    );
    assert_eq!(s.model.build(Path::new(".")).unwrap().n, 3);
}

#[test]
fn explicit_worker_counts_win() {
    assert_eq!(worker_count(Some(3)).unwrap(), 3);
    assert!(worker_count(Some(0)).unwrap() >= 1);
}
