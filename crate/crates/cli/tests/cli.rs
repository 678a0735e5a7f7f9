use std::process::Command;

use fhl_core::classifier::Verdict;
use fhl_core::iterate::Certificate;
use fhl_core::solutions::SolutionRecipe;
use serde_json::Value;

struct Run {
    code: i32,
    json: Value,
    stdout: String,
}

fn fhl_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fhl"));
    cmd.args(args).env_remove("FHL_QUAD_TOL");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let json = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    Run { code: out.status.code().unwrap_or(-1), json, stdout }
}

/// Runs a whitespace-separated command line.
fn fhl(line: &str) -> Run {
    fhl_env(&line.split_whitespace().collect::<Vec<_>>(), &[])
}

const INSTANCE: &str = "--N 3 --s 0.5 --theta 0 --p 2";

#[test]
fn roots_examples() {
    let r = fhl("roots --N 3 --s 0.5 --mu 0");
    assert_eq!(r.code, 0);
    assert_eq!(r.json["schema_version"], "1");
    assert_eq!(r.json["result"]["tau_minus"].as_f64().unwrap(), -2.0);
    assert_eq!(r.json["result"]["tau_plus"].as_f64().unwrap(), 0.0);
    let r = fhl("roots --N 3 --s 0.5 --mu -0.6366197723675814");
    assert_eq!(r.json["result"]["degenerate"], true);
    let r = fhl("spectrum --N 3 --s 0.5 --mu -1");
    assert_eq!(r.code, 2);
    assert_eq!(r.json["error"]["kind"], "subcritical_mu");
    assert!(r.json["error"]["message"].as_str().unwrap().contains("below mu0"));
}

#[test]
fn output_uses_sorted_keys_and_fixed_floats() {
    let r = fhl("roots --N 3 --s 0.5 --mu mu0");
    let keys: Vec<&str> = r.json.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["command", "inputs", "result", "schema_version", "warnings"]);
    let pos = |k: &str| r.stdout.find(k).unwrap();
    assert!(pos("\"command\"") < pos("\"inputs\"") && pos("\"result\"") < pos("\"schema_version\""));
    assert!(r.stdout.contains("\"mu0\": -0.63661977236758"));
    assert!(r.stdout.contains("\"s\": 0.50000000000000000"));
    assert_eq!(r.json["inputs"]["mu"], "mu0");
}

#[test]
fn classify_examples_and_round_trips() {
    let r = fhl(&format!("classify {INSTANCE} --mu mu0 --domain punctured"));
    assert_eq!(r.code, 0);
    assert_eq!((&r.json["result"]["verdict"], &r.json["result"]["rule"]), (&"nonexistence".into(), &"P1".into()));
    let v: Verdict = serde_json::from_value(r.json["result"].clone()).unwrap();
    assert!(v.certificate().is_some());

    let r = fhl(&format!("classify {INSTANCE} --mu 0 --domain whole-space"));
    assert_eq!(r.json["result"]["rule"], "W3");
    let v: Verdict = serde_json::from_value(r.json["result"].clone()).unwrap();
    let Some(SolutionRecipe::PurePower { tau, amplitude, .. }) = v.recipe() else { panic!("{v:?}") };
    assert_eq!(*tau, -1.0);
    assert!((amplitude - 2.0 / std::f64::consts::PI).abs() < 1e-15);
    assert!(!r.json["warnings"].as_array().unwrap().is_empty());

    let r = fhl("classify --N 3 --s 0.5 --mu 0 --theta -3 --p 2 --domain whole-space");
    assert_eq!((r.code, &r.json["result"]["verdict"]), (0, &"unknown".into()));
}

#[test]
fn invalid_instances_are_usage_errors() {
    let r = fhl(&format!("classify {INSTANCE} --mu 0 --domain punctured --q-low -1"));
    assert_eq!((r.code, &r.json["error"]["kind"]), (2, &"invalid_instance".into()));
    assert_eq!(fhl(&format!("classify {INSTANCE} --mu 0 --domain mars")).code, 2);
    assert_eq!(fhl(&format!("classify {INSTANCE} --mu zero --domain punctured")).code, 2);
}

#[test]
fn certificates_replay_or_explain() {
    let r = fhl("certificate --N 3 --s 0.5 --mu -0.5 --theta 0 --p 5 --domain punctured");
    assert_eq!(r.code, 0);
    assert_eq!(r.json["result"]["verified"], true);
    let _: Certificate = serde_json::from_value(r.json["result"]["certificate"].clone()).unwrap();

    let r = fhl("certificate --N 3 --s 0.5 --mu 0.5 --theta 0 --p 1 --domain exterior");
    assert_eq!(r.json["result"]["certificate"]["kind"], "BootstrapExterior");

    let r = fhl(&format!("certificate {INSTANCE} --mu 0 --domain whole-space"));
    assert_eq!((r.code, &r.json["result"]["certifiable"]), (0, &false.into()));
    assert!(r.json["result"]["reason"].is_string());
}

#[test]
fn recipes_verify_through_the_cli() {
    let p5 = "--N 3 --s 0.5 --mu -0.5 --theta -1.3 --p 0.4 --domain punctured --q-up 1";
    let r = fhl(&format!("recipe {p5}"));
    let recipe: SolutionRecipe = serde_json::from_value(r.json["result"]["recipe"].clone()).unwrap();
    assert!(matches!(recipe, SolutionRecipe::LogPower { m: 2, .. }));
    let r = fhl(&format!("verify-recipe --tol 1e-6 --t-factor 10 {p5}"));
    assert_eq!((r.code, &r.json["result"]["passed"]), (0, &true.into()));
    assert_eq!(r.json["result"]["rows"].as_array().unwrap().len(), 10);

    let r = fhl(&format!("verify-recipe {INSTANCE} --mu mu0 --domain punctured"));
    assert_eq!((r.code, &r.json["error"]["kind"]), (2, &"no_recipe".into()));
    let r = fhl(&format!("recipe {INSTANCE} --mu mu0 --domain punctured"));
    assert_eq!((r.code, &r.json["result"]["recipe"]), (0, &Value::Null));
}

#[test]
fn verify_examples() {
    let r = fhl("verify power --N 3 --s 0.5 --tau -1 --radii 0.5,1,2 --tol 1e-5");
    assert_eq!(r.code, 0);
    let row = &r.json["result"]["rows"][0];
    for k in ["r", "numeric", "closed_form", "abs_diff", "rel_diff", "error_estimate", "evaluations"] {
        assert!(!row[k].is_null(), "missing {k}");
    }

    let r = fhl("verify lemma51 --N 3 --s 0.5 --mu -0.5 --m 2 --radii 0.1,0.2");
    assert_eq!((r.code, &r.json["command"]), (0, &"verify log-power".into()));
    assert!(r.json["warnings"][0].as_str().unwrap().contains("C(m, i)"));
    assert!(r.json["result"]["rows"][0]["uncorrected_rel_diff"].as_f64().unwrap() > 1e-2);

    assert_eq!(fhl("verify kelvin --N 3 --s 0.5 --tau -1.2 --radii 0.5,2").code, 0);

    let r = fhl("verify fundamental --N 3 --s 0.5 --mu mu0 --radii 0.3,1,3");
    assert_eq!((r.code, r.json["result"]["rows"].as_array().unwrap().len()), (0, 6));

    let r = fhl("verify power --N 3 --s 0.5 --tau -1 --radii 1 --tol 1e-18");
    assert_eq!((r.code, &r.json["result"]["passed"]), (3, &false.into()));
    assert_eq!(fhl("verify power --N 3 --s 0.5 --tau 1 --radii 1").code, 2);
    assert_eq!(fhl("verify power --N 3 --s 0.5 --tau -1 --radii -1").code, 2);
}

#[test]
fn quadrature_settings_from_env_and_file() {
    let args = ["verify", "power", "--N", "3", "--s", "0.5", "--tau", "-1", "--radii", "1"];
    let loose = fhl_env(&args, &[("FHL_QUAD_TOL", "1e-3")]);
    let tight = fhl_env(&args, &[]);
    assert_eq!((loose.code, tight.code), (0, 0));
    let evals = |r: &Run| r.json["result"]["rows"][0]["evaluations"].as_u64().unwrap();
    assert!(evals(&loose) < evals(&tight));
    assert_eq!(fhl_env(&args, &[("FHL_QUAD_TOL", "tight")]).code, 2);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("q.json");
    let with_config = |path: &std::path::Path, env: &[(&str, &str)]| {
        fhl_env(&[&["--config", path.to_str().unwrap()][..], &args].concat(), env)
    };
    std::fs::write(&cfg, r#"{"rel_tol": 1e-3}"#).unwrap();
    assert_eq!(evals(&with_config(&cfg, &[("FHL_QUAD_TOL", "1e-8")])), evals(&loose));
    std::fs::write(&cfg, r#"{"rel_tolerance": 1e-3}"#).unwrap();
    assert_eq!(with_config(&cfg, &[]).code, 2);
    assert_eq!(with_config(&dir.path().join("absent.json"), &[]).code, 1);
}

#[test]
fn phase_grid_csv() {
    // Inside P2 at mu = -0.5: p# = 1 + (1 + theta)/0.5.
    let r = fhl("phase --N 3 --s 0.5 --mu -0.5 --domain punctured --theta 0,0.5,2 --p 5,6,2");
    assert_eq!(r.code, 0);
    let mut rd = csv::Reader::from_reader(r.stdout.as_bytes());
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|row| &row[2] == "N" && &row[3] == "P2"));
    assert_eq!(rows[1][1].parse::<f64>().unwrap(), 6.0);

    // Straddling theta = -2s.
    let r = fhl("phase --N 3 --s 0.5 --mu -0.5 --domain punctured --theta -1.5,-0.5,3 --p 3,3.5,2");
    let rules: Vec<String> =
        csv::Reader::from_reader(r.stdout.as_bytes()).records().map(|x| x.unwrap()[3].to_string()).collect();
    assert_eq!(rules.first().map(String::as_str), Some("P4"));
    assert_eq!(rules.last().map(String::as_str), Some("P2"));

    assert_eq!(fhl("phase --N 3 --s 0.5 --mu 0 --domain exterior --theta -1,1,2 --p -2,-1,2").code, 2);
    assert_eq!(fhl("phase --N 3 --s 0.5 --mu 0 --domain exterior --theta 1,-1,4 --p 1,2,2").code, 2);
}

#[test]
fn manifest_check_passes() {
    let r = fhl("manifest check");
    assert_eq!(r.code, 0);
    assert_eq!(r.json["result"]["rules"], 20);
}
