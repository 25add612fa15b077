use std::process::{Command, Output};

fn entperc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entperc"))
        .args(args)
        .env_remove("ENTPERC_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Header plus data rows, metadata comments dropped.
fn rows(o: &Output) -> Vec<Vec<String>> {
    stdout(o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(o: &Output, name: &str) -> Vec<String> {
    let r = rows(o);
    let i = r[0].iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
    r[1..].iter().map(|row| row[i].clone()).collect()
}

#[test]
fn threshold_square_example() {
    let o = entperc(&["threshold", "--geometry", "square", "--size", "128", "--trials", "400", "--seed", "1"]);
    assert!(o.status.success());
    let p: f64 = column(&o, "p_hat")[0].parse().unwrap();
    assert!((0.48..=0.52).contains(&p), "{p}");
    assert!(stdout(&o).lines().next().unwrap().contains("seed=1"));
}

#[test]
fn distill_recycling_example() {
    let o = entperc(&["distill", "--scheme", "recycling", "--n", "4", "--alpha", "0.5", "--lambda", "1.0"]);
    assert!(o.status.success());
    assert_eq!(column(&o, "scp"), ["0.875"]);
    assert_eq!(column(&o, "stderr"), ["0.0"]);
}

#[test]
fn verify_pcm_example() {
    let o = entperc(&["verify", "--suite", "pcm", "--draws", "1000", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    for col in ["max_prob_error", "max_state_error"] {
        let e: f64 = column(&o, col)[0].parse().unwrap();
        assert!(e < 1e-10);
    }
}

#[test]
fn verify_failure_exits_2() {
    let o = entperc(&["verify", "--suite", "swap", "--draws", "50", "--tolerance", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validation_errors_exit_1() {
    let o = entperc(&["distill", "--scheme", "recycling", "--n", "4", "--alpha", "1.5", "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0 <= value <= 1"));
    let o = entperc(&["threshold", "--geometry", "hexagonal", "--size", "8"]);
    assert_eq!(o.status.code(), Some(1));
    let o = entperc(&["threshold", "--geometry", "square", "--size", "8", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    let o = entperc(&["percolate", "--geometry", "square", "--size", "8", "--p", "1.2"]);
    assert_eq!(o.status.code(), Some(1));
    let o = entperc(&[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unwritable_output_exits_1() {
    let o = entperc(&["strategy", "--output", "/nonexistent-dir/out.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent-dir/out.csv"));
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let args = ["percolate", "--geometry", "triangular", "--size", "16", "--p-grid", "0.3,0.35,0.4", "--trials", "50", "--seed", "9", "--deterministic"];
    let (a, b) = (entperc(&args), entperc(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(!stdout(&a).contains("timestamp"));
    let o = entperc(&args[..args.len() - 1]);
    assert!(stdout(&o).lines().next().unwrap().contains("timestamp="));
}

#[test]
fn different_seeds_differ() {
    let run = |seed: &str| {
        entperc(&["percolate", "--geometry", "square", "--size", "16", "--p", "0.5", "--trials", "50", "--seed", seed])
    };
    assert_ne!(column(&run("1"), "theta_hat"), column(&run("2"), "theta_hat"));
}

#[test]
fn config_file_matches_flags() {
    let dir = std::env::temp_dir().join(format!("entperc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.toml");
    std::fs::write(
        &cfg,
        r#"
command = "distill"
seed = 3
deterministic = true

[params]
scheme = "recycling"
n = [2, 4, 6]
alpha = 0.5
lambda = [0.8, 1.0]
"#,
    )
    .unwrap();
    let from_file = entperc(&["--config", cfg.to_str().unwrap()]);
    assert!(from_file.status.success(), "{}", String::from_utf8_lossy(&from_file.stderr));
    let from_flags = entperc(&[
        "distill", "--scheme", "recycling", "--n", "2,4,6", "--alpha", "0.5", "--lambda", "0.8,1.0", "--seed", "3",
    ]);
    assert_eq!(rows(&from_file), rows(&from_flags));
    assert_eq!(rows(&from_file).len(), 7);
    assert!(stdout(&from_file).contains("seed=3"));

    std::fs::write(&cfg, "command = \"distill\"\n[params]\nschem = \"recycling\"\n").unwrap();
    assert_eq!(entperc(&["--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    std::fs::write(&cfg, "command = \"distill\"\nsede = 1\n").unwrap();
    assert_eq!(entperc(&["--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn help_documents_every_column() {
    let expected: &[(&str, &[&str])] = &[
        ("verify", &["suite", "draws", "max_prob_error", "max_state_error", "tolerance", "passed"]),
        ("distill", &["scheme", "n", "alpha", "lambda", "scp", "stderr"]),
        ("percolate", &["geometry", "L", "p", "spanning_freq", "theta_hat", "stderr"]),
        ("threshold", &["geometry", "L", "p_hat", "ci_low", "ci_high", "trials", "converged"]),
        ("route", &["protocol", "success", "rounds", "messages", "path_length", "path"]),
        ("strategy", &["alpha", "beta", "lambda", "nu", "p_cep", "p_d", "p_h", "p_d_star"]),
        ("square", &["alpha", "p_sq", "p_cep_tilde", "p_c", "alpha_hat", "alpha_tilde"]),
        ("hierarchy", &["kind", "iteration", "alpha", "p_cep", "p_hybrid_hat", "stderr"]),
    ];
    for (cmd, cols) in expected {
        let help = stdout(&entperc(&[cmd, "--help"]));
        let section = help.split("CSV columns:").nth(1).unwrap_or_else(|| panic!("{cmd} help lacks columns"));
        let documented: Vec<&str> = section.lines().filter_map(|l| l.split_whitespace().next()).collect();
        assert_eq!(&documented, cols, "{cmd}");
    }
}

#[test]
fn route_on_edge_list() {
    let dir = std::env::temp_dir().join(format!("entperc-route-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let edges = dir.join("g.txt");
    std::fs::write(&edges, "# ring\n0 1\n1 2\n2 3\n3 4\n4 0\n").unwrap();
    let e = edges.to_str().unwrap();
    for protocol in ["controller", "burning", "ghz"] {
        let o = entperc(&["route", "--protocol", protocol, "--edges", e, "--b", "2"]);
        assert!(o.status.success(), "{protocol}");
        assert_eq!(column(&o, "success"), ["true"]);
        assert_eq!(column(&o, "path"), ["0-1-2"]);
    }
    let o = entperc(&["route", "--protocol", "burning", "--edges", e, "--b", "2"]);
    assert_eq!(column(&o, "rounds"), ["4"]);
    let trace = dir.join("trace.json");
    let o = entperc(&["route", "--protocol", "ghz", "--edges", e, "--trace-out", trace.to_str().unwrap()]);
    assert!(o.status.success());
    let t: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert!(t["ops"].as_array().is_some_and(|ops| !ops.is_empty()));
    std::fs::write(&edges, "0 1\n2 3\n").unwrap();
    let o = entperc(&["route", "--protocol", "burning", "--edges", e]);
    assert_eq!(column(&o, "success"), ["false"]);
    std::fs::write(&edges, "0 1 2\n").unwrap();
    assert_eq!(entperc(&["route", "--protocol", "burning", "--edges", e]).status.code(), Some(1));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn windows_reported_with_data() {
    let o = entperc(&["square", "--lambda", "0.98", "--nu", "0.98"]);
    let window = stdout(&o).lines().find(|l| l.starts_with("# hybrid_only_window=")).unwrap().to_string();
    assert!(window.contains('[') && !window.contains("none"));
    let o = entperc(&["strategy"]);
    assert!(stdout(&o).contains("# fcc_hybrid_only_window=[0.65"));
}

#[test]
fn hierarchy_exact_and_sampled_agree() {
    let base = ["hierarchy", "--kind", "diamond", "--iteration", "2", "--lambda", "0.9", "--nu", "0.9", "--alpha-step", "0.1"];
    let exact = entperc(&[&base[..], &["--exact"]].concat());
    let mc = entperc(&[&base[..], &["--trials", "20000"]].concat());
    let p: Vec<f64> = column(&exact, "p_hybrid_hat").iter().map(|s| s.parse().unwrap()).collect();
    let q: Vec<f64> = column(&mc, "p_hybrid_hat").iter().map(|s| s.parse().unwrap()).collect();
    let se: Vec<f64> = column(&mc, "stderr").iter().map(|s| s.parse().unwrap()).collect();
    assert_eq!(p.len(), 6);
    for i in 0..p.len() {
        assert!((p[i] - q[i]).abs() <= 4.0 * se[i] + 1e-12, "{i}: {} vs {}", p[i], q[i]);
    }
}

#[test]
fn threads_flag_and_env() {
    let o = Command::new(env!("CARGO_BIN_EXE_entperc"))
        .args(["strategy", "--alpha-step", "0.25"])
        .env("ENTPERC_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
    let o = entperc(&["strategy", "--threads", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn json_output() {
    let o = entperc(&["distill", "--scheme", "dss", "--n", "2,3", "--alpha", "0.5", "--lambda", "1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["meta"]["seed"], 1);
    assert_eq!(v["rows"][0]["scp"], 0.5);
    assert_eq!(v["rows"][1]["scp"], 0.75);
}
