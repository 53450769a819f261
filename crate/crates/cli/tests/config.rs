use std::path::PathBuf;

use relboltz_cli::config::{LimitKind, SigmaKind};
use relboltz_cli::output::sci;
use relboltz_cli::{CliError, RunConfig};
use relboltz_core::collision_op::Representation;
use relboltz_core::limit_harness::ComponentKind;
use relboltz_core::solver::TrajectoryFormat;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("relboltz-cli-config-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn table_file(name: &str) -> PathBuf {
    let path = scratch(name).join("b_table.txt");
    std::fs::write(&path, "# theta value\n0.0 1.0\n1.5 0.5\n3.141592653589793 0.25\n").unwrap();
    path
}

#[test]
fn empty_file_gives_defaults() {
    let cfg = RunConfig::parse_str("", &[]).unwrap();
    assert_eq!(cfg, RunConfig::default());
    assert_eq!(cfg.dim, 2);
    assert_eq!(cfg.c_list, vec![2.0, 4.0, 8.0, 16.0, 32.0]);
    assert_eq!((cfg.alpha, cfg.beta, cfg.b), (1.0, 1.0, 1e-3));
    assert_eq!((cfg.cutoff_b, cfg.cutoff_a, cfg.t_final), (1.0, 0.5, 1.0));
    assert_eq!((cfg.n_t, cfg.n_x, cfg.n_p, cfg.n_omega), (16, 24, 24, 16));
    assert_eq!(cfg.seed, 42);
}

#[test]
fn comments_and_blank_lines_are_ignored() {
    let text = "# header\n\n  b = 2e-3  # trailing\nN=3\n";
    let cfg = RunConfig::parse_str(text, &[]).unwrap();
    assert_eq!(cfg.b, 2e-3);
    assert_eq!(cfg.dim, 3);
}

#[test]
fn overrides_win_over_the_file() {
    let cfg = RunConfig::parse_str("c_list=1,10\n", &["c_list=2,4".to_string()]).unwrap();
    assert_eq!(cfg.c_list, vec![2.0, 4.0]);
}

#[test]
fn unknown_key_reports_its_line() {
    let err = RunConfig::parse_str("b=1e-3\n# note\nbogus=1\n", &[]).unwrap_err();
    assert!(matches!(err, CliError::Config { line: 3, .. }), "{err}");
    let msg = err.to_string();
    assert!(msg.contains("line 3") && msg.contains("bogus"), "{msg}");
}

#[test]
fn malformed_value_reports_its_line() {
    let err = RunConfig::parse_str("n_x=24\nn_p=twelve\n", &[]).unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
    let err = RunConfig::parse_str("c_list=1,,2\n", &[]).unwrap_err();
    assert!(err.to_string().contains("line 1"), "{err}");
    let err = RunConfig::parse_str("just text\n", &[]).unwrap_err();
    assert!(err.to_string().contains("line 1"), "{err}");
}

#[test]
fn bad_override_is_named() {
    let err = RunConfig::parse_str("", &["seed=-1".to_string()]).unwrap_err();
    assert!(err.to_string().contains("seed=-1"), "{err}");
}

#[test]
fn missing_config_file_is_an_error() {
    let path = scratch("missing").join("absent.cfg");
    let err = RunConfig::load(Some(&path), &[]).unwrap_err();
    assert!(matches!(err, CliError::Io { .. }));
    assert!(err.to_string().contains("absent.cfg"));
}

#[test]
fn israel_without_table_names_the_missing_key() {
    let err = RunConfig::parse_str("sigma.kind=israel\n", &[]).unwrap_err();
    assert!(err.to_string().contains("sigma.b_table"), "{err}");
}

#[test]
fn israel_table_must_exist_and_parse() {
    let err = RunConfig::parse_str("sigma.kind=israel\nsigma.b_table=/nonexistent/table.txt\n", &[]).unwrap_err();
    assert!(err.to_string().contains("sigma.b_table"), "{err}");

    let bad = scratch("bad-table").join("b_table.txt");
    std::fs::write(&bad, "0.0 1.0\n2.0 oops\n").unwrap();
    let err = RunConfig::parse_str(&format!("sigma.kind=israel\nsigma.b_table={}\n", bad.display()), &[]).unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");

    let good = table_file("good-table");
    let cfg = RunConfig::parse_str(&format!("sigma.kind=israel\nsigma.b_table={}\n", good.display()), &[]).unwrap();
    assert_eq!(cfg.sigma_kind, SigmaKind::Israel);
    assert!(cfg.cross_section().is_ok());
}

#[test]
fn range_checks_reject_bad_values() {
    for bad in ["N=4", "c_list=4,2", "c_list=0,1", "n_omega=5", "a=1.5", "B=0", "picard_tol=0", "limit.measure_samples=10"] {
        assert!(RunConfig::parse_str(bad, &[]).is_err(), "{bad} accepted");
    }
}

#[test]
fn enumerated_settings_parse() {
    let cfg = RunConfig::parse_str(
        "representation=cm\nsolve.format=binary\nlimit.kind=phat_diff\nsigma.kind=moller\nn_ω=8\nc_list=1,inf\n",
        &[],
    )
    .unwrap();
    assert_eq!(cfg.representation, Representation::Cm);
    assert_eq!(cfg.solve_format, TrajectoryFormat::Binary);
    assert_eq!(cfg.limit_kind, LimitKind::One(ComponentKind::PhatDiff));
    assert_eq!(cfg.sigma_kind, SigmaKind::Moller);
    assert_eq!(cfg.n_omega, 8);
    assert_eq!(cfg.c_list, vec![1.0, f64::INFINITY]);
    assert_eq!(RunConfig::parse_str("kind=solution", &[]).unwrap().limit_kind, LimitKind::Solution);
}

#[test]
fn echo_reparses_to_the_same_config() {
    let table = table_file("echo");
    let text = format!(
        "N=3\nc_list=1.5,3,0.1,inf\nalpha=0.7\nb=3.3e-4\nT=0.75\nseed=7\nsigma.kind=israel\nsigma.b_table={}\n\
         representation=cm\nsolve.format=binary\nlimit.kind=KERNEL_DIFF\nenvelope.A2=0.25\nenvelope.gamma=1.5\nout=some/dir\n",
        table.display()
    )
    .replace("1.5,3,0.1,inf", "0.1,1.5,3,inf");
    let cfg = RunConfig::parse_str(&text, &["verify.solver=true".to_string()]).unwrap();
    let again = RunConfig::parse_str(&cfg.echo(), &[]).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(again.echo(), cfg.echo());

    let defaults = RunConfig::default();
    assert_eq!(RunConfig::parse_str(&defaults.echo(), &[]).unwrap(), defaults);
}

#[test]
fn echo_lists_every_key_once() {
    let echo = RunConfig::default().echo();
    let keys: Vec<&str> = echo.lines().map(|l| l.split_once('=').unwrap().0).collect();
    let mut unique = keys.clone();
    unique.sort();
    unique.dedup();
    assert_eq!(unique.len(), keys.len());
    for k in ["N", "c_list", "sigma.b_table", "n_omega", "seed", "T", "B"] {
        assert!(keys.contains(&k), "{k} missing");
    }
}

#[test]
fn scientific_format_matches_c() {
    assert_eq!(sci(1e-3), "1.000000000000e-03");
    assert_eq!(sci(0.0), "0.000000000000e+00");
    assert_eq!(sci(-2.5e100), "-2.500000000000e+100");
    assert_eq!(sci(123.456), "1.234560000000e+02");
    assert_eq!(sci(f64::INFINITY), "inf");
    assert_eq!(sci(f64::NAN), "nan");
}
