use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsdebate_core::calc::{self, CalcValue};
use tsdebate_core::model::TimeSeriesRecord;
use tsdebate_core::series::{self, stats, Position};

const ALPHABET: &[&str] = &[
    "0", "1", "2", "9", ".", "e", "+", "-", "*", "/", "^", "(", ")", "[", "]", ",", " ", "<", ">", "=", "!",
    "series", "mean", "std", "min", "max", "sum", "abs", "diff", "len", "\"", "x", "ch0", "×", "÷", "1e308",
    "import", ";", "{", "}", "__", "λ", "\n",
];

fn random_source(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(0..40);
    (0..n).map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())]).collect()
}

#[test]
fn ten_thousand_random_strings_terminate() {
    let s = TimeSeriesRecord::multivariate("s", vec![(0..50).map(|v| v as f64).collect(), vec![1.0; 50]]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let started = Instant::now();
    for _ in 0..10_000 {
        let src = if rng.random_bool(0.1) {
            // deep nesting and long products
            let d = rng.random_range(1..200);
            format!("{}1{}", "(".repeat(d), ")".repeat(d))
        } else {
            random_source(&mut rng)
        };
        let t0 = Instant::now();
        let out = calc::execute(&src, &s);
        assert!(t0.elapsed() < Duration::from_secs(1), "slow on {src:?}");
        if let Ok(o) = out {
            let _ = o.render();
        }
    }
    assert!(started.elapsed() < Duration::from_secs(60));
}

#[test]
fn arbitrary_unicode_never_panics() {
    let s = TimeSeriesRecord::univariate("s", vec![1.0, 2.0, 3.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..2_000 {
        let n = rng.random_range(0..30);
        let src: String = (0..n).map(|_| rng.random::<char>()).collect();
        let _ = calc::execute(&src, &s);
    }
}

fn rel_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn scalar(v: CalcValue) -> f64 {
    match v {
        CalcValue::Scalar(x) => x,
        other => panic!("expected scalar, got {other:?}"),
    }
}

#[test]
fn range_statistics_agree_with_lookup_tools() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let channels: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..120).map(|_| rng.random_range(-100.0..100.0)).collect())
        .collect();
    let s = TimeSeriesRecord::multivariate("s", channels);
    for _ in 0..100 {
        let ch = rng.random_range(0..3usize);
        let a = rng.random_range(0..120usize);
        let b = rng.random_range(a..120usize);
        let slice = series::get_values(&s, Some(&ch.to_string()), Some(&Position::from(a)), Some(&Position::from(b))).unwrap();
        let col = slice.column(0);
        let summary = stats::summarize(&col);
        let expected = [
            ("mean", summary.mean.unwrap()),
            ("std", summary.std.unwrap()),
            ("min", summary.min.unwrap()),
            ("max", summary.max.unwrap()),
            ("sum", stats::sum(&col)),
            ("len", col.len() as f64),
        ];
        for (f, want) in expected {
            let src = format!("{f}(series({ch}, {a}, {b}))");
            let got = scalar(calc::execute(&src, &s).unwrap().value);
            assert!(rel_eq(got, want), "{src}: {got} vs {want}");
        }
        // Independent of both: a plain two-pass computation.
        let raw = &s.channels[ch][a..=b];
        let m = raw.iter().sum::<f64>() / raw.len() as f64;
        let got = scalar(calc::execute(&format!("mean(series({ch}, {a}, {b}))"), &s).unwrap().value);
        assert!((got - m).abs() <= 1e-9 * m.abs().max(1.0));
    }
}

#[test]
fn missing_cells_are_skipped_consistently() {
    let s = TimeSeriesRecord::univariate("s", vec![1.0, f64::NAN, 3.0, 5.0]);
    let got = scalar(calc::execute("mean(series(0))", &s).unwrap().value);
    assert_eq!(got, 3.0);
    assert_eq!(series::get_info(&s).stats[0].mean, Some(3.0));
}
