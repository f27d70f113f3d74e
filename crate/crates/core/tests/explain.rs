mod common;

use std::path::{Path, PathBuf};

use cat_core::archive::CatModelArchive;
use cat_core::cli::{cmd_explain, cmd_train, Overrides, ARCHIVE_FILE};
use cat_core::Parameterized;
use common::*;

fn train_bypass(dir: &Path, names: &[&str], f: impl Fn(&[f64]) -> f64) -> (PathBuf, PathBuf) {
    let (data, spec) = write_dataset(dir, &synthetic_csv(names, 1500, 0.01, 3, f), &one_feature_spec(names));
    let overrides = Overrides {
        bypass_encoders: true,
        rank: Some(4),
        ..Overrides::default()
    };
    let out = dir.join("run");
    cmd_train(&data, &spec, None, &overrides, &out).unwrap();
    (out.join(ARCHIVE_FILE), data)
}

#[test]
fn explain_files_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (archive, data) = train_bypass(dir.path(), &["a", "b", "c"], quadratic);
    let first = cmd_explain(&archive, &data, &dir.path().join("e1")).unwrap();
    let second = cmd_explain(&archive, &data, &dir.path().join("e2")).unwrap();
    assert_eq!(first.files.len(), 7);
    for (a, b) in first.files.iter().zip(&second.files) {
        assert_eq!(a.file_name(), b.file_name());
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap(), "{}", a.display());
    }
}

#[test]
fn quadratic_generator_signs_are_recovered() {
    let dir = tempfile::tempdir().unwrap();
    let (archive, data) = train_bypass(dir.path(), &["a", "b", "c"], quadratic);
    let s = cmd_explain(&archive, &data, &dir.path().join("explain")).unwrap();
    let coef = |label: &str| {
        s.contributions
            .entries
            .iter()
            .find(|c| c.monomial == label)
            .unwrap_or_else(|| panic!("{label} missing"))
            .coefficients[0]
    };
    for (label, positive) in [("z1", true), ("z2", false), ("z1^2", true), ("z1*z2", true), ("z2*z3", false)] {
        assert_eq!(coef(label) > 0.0, positive, "{label}: {}", coef(label));
        assert!(s.polynomial.contains(label), "{label} not in\n{}", s.polynomial);
    }
    // generator terms outrank absent ones
    let top: Vec<&str> = s.contributions.ranked().take(5).map(|c| c.monomial.as_str()).collect();
    for label in ["z1", "z2", "z1^2", "z1*z2", "z2*z3"] {
        assert!(top.contains(&label), "{top:?}");
    }
    assert!(s.polynomial.starts_with("# z1 = a\n# z2 = b\n# z3 = c\n"));
}

#[test]
fn six_concept_order_two_model_has_27_terms() {
    let dir = tempfile::tempdir().unwrap();
    let names = ["c1", "c2", "c3", "c4", "c5", "c6"];
    let (archive, data) = train_bypass(dir.path(), &names, |x| x.iter().sum::<f64>() + x[0] * x[5]);
    let s = cmd_explain(&archive, &data, &dir.path().join("explain")).unwrap();
    let entries = &s.contributions.entries;
    assert_eq!(entries.len(), 27);
    assert_eq!(entries.iter().filter(|c| c.degree == 1).count(), 6);
    assert_eq!(entries.iter().filter(|c| c.exponents.contains(&2)).count(), 6);
    assert_eq!(entries.iter().filter(|c| c.degree == 2 && !c.exponents.contains(&2)).count(), 15);
    let csv = std::fs::read_to_string(dir.path().join("explain/contributions.csv")).unwrap();
    assert_eq!(csv.lines().count(), 28);
    assert_eq!(s.shapes.concepts.len(), 6);
}

#[test]
fn zero_model_explains_as_constant() {
    let dir = tempfile::tempdir().unwrap();
    let (archive, data) = train_bypass(dir.path(), &["a", "b"], |x| x[0] - x[1]);
    let mut a = CatModelArchive::load(&archive).unwrap();
    for p in a.model.net.params_mut() {
        p.values.iter_mut().for_each(|v| *v = 0.0);
    }
    let zeroed = dir.path().join("zero.json");
    a.save(&zeroed).unwrap();
    let s = cmd_explain(&zeroed, &data, &dir.path().join("explain")).unwrap();
    assert_eq!(s.polynomial.lines().last(), Some("0"));
    assert!(s.contributions.ranking.is_empty());
    assert_eq!(s.contributions.entries.len(), 5);
    let svg = std::fs::read_to_string(dir.path().join("explain/contributions.svg")).unwrap();
    assert!(svg.contains("no nonzero terms"));
    assert!(!svg.contains("<rect"));
}

#[test]
fn shifted_expansion_point_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (archive, data) = train_bypass(dir.path(), &["a", "b"], |x| x[0] - x[1]);
    let mut a = CatModelArchive::load(&archive).unwrap();
    a.model.net.expansion_point[1] = 0.5;
    let shifted = dir.path().join("shifted.json");
    a.save(&shifted).unwrap();
    let o = cat_model(&["explain", p(&shifted), p(&data), "--out", p(&dir.path().join("x"))]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_line(&o).0, "EXPANSION_UNSUPPORTED");
}
