use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use piezo_cli::output::{SUMMARY_HEADER, TIMESERIES_HEADER};
use piezo_cli::{resolve, Overrides, Preset, RunConfig};
use piezo_core::{BeamParameters, ControllerFamily, ControllerSpec, Scenario};

fn piezo(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_piezo"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn empty_config_gives_paper_defaults() {
    let cfg = resolve(&Overrides::default()).unwrap();
    assert_eq!(cfg.params, BeamParameters::PAPER);
    let sc = Scenario::paper(ControllerSpec::constant(None));
    assert_eq!(
        (cfg.n, cfg.dt, cfg.t_end, cfg.record_every),
        (sc.n, sc.dt, sc.t_end, sc.record_every)
    );
    assert_eq!(sc.n, 16);
    assert_eq!(cfg.strain_target, 1.0);
    assert_eq!(cfg.controller, ControllerSpec::constant(None));

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("empty.json");
    fs::write(&file, "{}").unwrap();
    let from_file = resolve(&Overrides {
        config: Some(file),
        ..Default::default()
    })
    .unwrap();
    assert_eq!(from_file, cfg);
}

#[test]
fn flags_override_file_override_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.json");
    fs::write(
        &file,
        r#"{"N": 32, "params": {"b": 3.0}, "controller": {"family": "OutputShaping", "Kp": 1.0, "Ki": 0.3}}"#,
    )
    .unwrap();
    let cfg = resolve(&Overrides {
        config: Some(file),
        set: vec!["N=8".into(), "controller.Kp=2".into()],
        ..Default::default()
    })
    .unwrap();
    assert_eq!(cfg.n, 8);
    assert_eq!(cfg.params.damping, 3.0);
    assert_eq!(cfg.params.stiffness, 0.75);
    assert_eq!(cfg.controller.family, ControllerFamily::OutputShaping);
    assert_eq!((cfg.controller.kp, cfg.controller.ki), (2.0, 0.3));
}

#[test]
fn errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    fs::write(
        &file,
        r#"{"controller": {"family": "InputShaping", "Kq": 1}}"#,
    )
    .unwrap();
    let err = resolve(&Overrides {
        config: Some(file),
        ..Default::default()
    })
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("controller.Kq"), "{err}");

    let err = resolve(&Overrides {
        set: vec!["dt=fast".into()],
        ..Default::default()
    })
    .unwrap_err();
    assert!(err.to_string().contains("dt"), "{err}");

    let err = resolve(&Overrides {
        preset: Some("fig9".into()),
        ..Default::default()
    })
    .unwrap_err();
    assert!(err.to_string().contains("preset"), "{err}");

    let err = resolve(&Overrides {
        set: vec!["N=1".into()],
        ..Default::default()
    })
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn presets_round_trip_and_expand_idempotently() {
    let dir = tempfile::tempdir().unwrap();
    for p in Preset::ALL {
        let cfg = resolve(&Overrides {
            preset: Some(p.name().into()),
            ..Default::default()
        })
        .unwrap();
        let file = dir.path().join(format!("{p}.json"));
        fs::write(&file, serde_json::to_string(&cfg).unwrap()).unwrap();
        let again = resolve(&Overrides {
            config: Some(file),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(again, cfg, "{p}");
        assert_eq!(again.jobs(), cfg.jobs(), "{p}");
        let back: RunConfig =
            serde_json::from_str(&serde_json::to_string(&again).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}

#[test]
fn preset_contents() {
    let cfg = |p: Preset| {
        resolve(&Overrides {
            preset: Some(p.name().into()),
            ..Default::default()
        })
        .unwrap()
    };
    let jobs = cfg(Preset::Fig4Case1).jobs();
    assert_eq!(jobs.len(), 2);
    assert_eq!(
        jobs[0].scenario.controller,
        ControllerSpec::output_shaping_bar(0.5, 1.35, true)
    );
    assert_eq!(
        jobs[1].scenario.controller,
        ControllerSpec::input_shaping_bar(0.45, 1.4, true)
    );
    let jobs = cfg(Preset::Fig4Case2).jobs();
    assert_eq!(
        jobs[0].scenario.controller,
        ControllerSpec::output_shaping_bar(0.25, 0.65, true)
    );
    assert_eq!(
        jobs[1].scenario.controller,
        ControllerSpec::input_shaping_bar(0.1, 0.5, true)
    );

    let kp: Vec<f64> = cfg(Preset::Fig2a)
        .jobs()
        .iter()
        .map(|j| j.scenario.controller.kp)
        .collect();
    assert_eq!(kp, [0.0, 0.5, 2.0, 5.0]);
    let ki: Vec<f64> = cfg(Preset::Fig2b)
        .jobs()
        .iter()
        .map(|j| j.scenario.controller.ki)
        .collect();
    assert_eq!(ki, [0.0, 0.1, 0.3, 0.5]);
    let c = cfg(Preset::Fig3a).jobs();
    assert!(c
        .iter()
        .all(|j| !j.scenario.controller.reference_on && j.scenario.controller.kp == 0.0));
    assert!(cfg(Preset::Fig3c)
        .jobs()
        .iter()
        .all(|j| j.scenario.controller.ki == 0.5));
    assert_eq!(cfg(Preset::PaperOpenLoop).jobs().len(), 1);
    assert!(cfg(Preset::Fig4Case1).rows().is_err());
    assert_eq!(cfg(Preset::Fig2c).rows().unwrap().len(), 1);
}

#[test]
fn simulate_writes_csv_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = piezo(&["simulate"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let mut rdr = csv::Reader::from_path(dir.path().join("timeseries.csv")).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        TIMESERIES_HEADER
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let sc = Scenario::paper(ControllerSpec::constant(None));
    let steps = (sc.t_end / sc.dt).round() as usize;
    assert_eq!(rows.len(), steps / sc.record_every + 1);
    let last = rows.len() - 1;
    let u: f64 = rows[0][1].parse().unwrap();
    assert_eq!(u, -7.5);
    let mantissa = rows[10][4]
        .trim_start_matches('-')
        .split('e')
        .next()
        .unwrap()
        .replace('.', "");
    assert_eq!(mantissa.len(), 17);

    let m = read_json(&dir.path().join("metrics.json"));
    let run = &m["runs"][0];
    assert_eq!(run["status"], "ok");
    assert_eq!(run["cfl_warning"], false);
    let sse = run["metrics"]["steady_state_error_pct"].as_f64().unwrap();
    let tip: f64 = rows[last][4].parse().unwrap();
    assert!((sse - (tip - 1.0).abs() * 100.0).abs() < 1e-12);
    assert!(run["limit_error_pct"].as_f64().unwrap() < 1e-10);
}

#[test]
fn simulate_output_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = piezo(&["simulate", "--set", "t_end=1"], d.path());
        assert!(out.status.success());
    }
    assert_eq!(
        fs::read(a.path().join("timeseries.csv")).unwrap(),
        fs::read(b.path().join("timeseries.csv")).unwrap()
    );
}

#[test]
fn tuned_preset_gives_two_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = piezo(&["simulate", "--preset", "fig4-case1"], dir.path());
    assert!(out.status.success());
    assert!(dir.path().join("timeseries_case1-A.csv").exists());
    assert!(dir.path().join("timeseries_case1-B.csv").exists());
    let m = read_json(&dir.path().join("metrics.json"));
    assert_eq!(m["runs"].as_array().unwrap().len(), 2);
}

#[test]
fn large_step_warns_or_aborts() {
    let dir = tempfile::tempdir().unwrap();
    let out = piezo(&["simulate", "--set", "dt=1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let m = read_json(&dir.path().join("metrics.json"));
    assert_eq!(m["runs"][0]["cfl_warning"], true);

    let out = piezo(
        &[
            "simulate",
            "--preset",
            "fig4-case1",
            "--set",
            "dt=0.5",
            "--set",
            "t_end=200",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let m = read_json(&dir.path().join("metrics.json"));
    assert_eq!(m["runs"][0]["status"], "aborted");
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["simulate", "--set", "N=1"],
        vec!["verify", "--set", "params.b=-1"],
        vec!["sweep", "--set", "params.nope=1"],
        vec!["sweep", "--preset", "fig4-case1"],
    ] {
        let out = piezo(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));
    }
}

#[test]
fn sweep_writes_cells_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = piezo(&["sweep", "--preset", "fig2a"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for g in ["0", "0.5", "2", "5"] {
        let cell = dir.path().join(format!("fig2a_Kp_{g}"));
        assert!(cell.join("timeseries.csv").exists(), "{g}");
        assert!(cell.join("metrics.json").exists(), "{g}");
    }
    let mut rdr = csv::Reader::from_path(dir.path().join("sweep_summary.csv")).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        SUMMARY_HEADER
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    let vib: Vec<u32> = rows.iter().map(|r| r[7].parse().unwrap()).collect();
    assert!(vib.windows(2).all(|w| w[1] <= w[0]));
    assert!(rows.iter().all(|r| &r[2] == "ok"));
}

#[test]
fn verify_default_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = piezo(&["verify"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let v = read_json(&dir.path().join("verify.json"));
    assert_eq!(v["pass"], true);
    let names: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    for prefix in [
        "power_balance",
        "oracle_equivalence",
        "spectral_abscissa",
        "storage_balance",
        "sd_monotonicity",
        "sandwich_bounds",
        "convergence",
    ] {
        assert!(names.iter().any(|n| n.starts_with(prefix)), "{prefix}");
    }
}

#[test]
fn verify_reports_failures_with_exit_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = piezo(
        &[
            "verify",
            "--set",
            r#"controller={"family":"OutputShaping","gain_form":"Raw","Kp":1e6,"Ki":1e6}"#,
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
    let v = read_json(&dir.path().join("verify.json"));
    let spectral = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"].as_str().unwrap().starts_with("spectral_abscissa"))
        .unwrap();
    assert!(spectral["value"].is_number());
    assert!(spectral["threshold"].is_number());
}
