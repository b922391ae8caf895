use kitty_core::analysis::{boost_sweep, channel_sensitivity, memory_report, sweep_csv};
use kitty_core::{generate_synthetic, HeadMatrix, KittyConfig, SyntheticSpec};

fn tensor(tokens: usize, outliers: Vec<usize>, seed: u64) -> HeadMatrix {
    generate_synthetic(&SyntheticSpec {
        tokens,
        channels: 64,
        outlier_channels: outliers,
        outlier_gain: 8.0,
        base_std: 1.0,
        seed,
    })
    .unwrap()
}

#[test]
fn sensitivity_report_csv() {
    let k = tensor(256, vec![7], 1);
    let q = tensor(8, vec![], 2);
    let report = channel_sensitivity(&[q], &[k], 2).unwrap();
    assert_eq!(report.ranking[0][0], 7);
    let csv = report.to_csv();
    assert!(csv.starts_with("q_head,channel,mse,rank\n"));
    assert_eq!(csv.lines().count(), 65);
    assert!(csv
        .lines()
        .any(|l| l.starts_with("0,7,") && l.ends_with(",0")));
}

#[test]
fn sweep_rows_are_ordered_and_deterministic() {
    let k = tensor(256, vec![7, 30], 3);
    let q = tensor(8, vec![], 4);
    let a = boost_sweep(std::slice::from_ref(&q), std::slice::from_ref(&k), &[0.0, 0.25, 1.0], true, &[1, 2]).unwrap();
    let b = boost_sweep(&[q], &[k], &[0.0, 0.25, 1.0], true, &[1, 2]).unwrap();
    assert_eq!(a, b);
    let order: Vec<_> = a.iter().map(|r| (r.fraction, r.heuristic)).collect();
    assert_eq!(
        order,
        vec![
            (0.0, "magnitude"),
            (0.0, "random"),
            (0.25, "magnitude"),
            (0.25, "random"),
            (1.0, "magnitude"),
            (1.0, "random")
        ]
    );
    assert_eq!(sweep_csv(&a).lines().count(), 7);
}

#[test]
fn memory_report_grows_toward_payload_ratio() {
    let cfg = KittyConfig::default();
    let ratios: Vec<f64> = [512, 2048, 8192, 65536]
        .iter()
        .map(|&l| memory_report(&cfg, l).ratio)
        .collect();
    assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
    assert!(ratios[3] < 8.0);
    let r = memory_report(&cfg, 8192);
    assert_eq!(r.total, r.keys.total() + r.values.total());
    assert!(r.summary().contains("compression_ratio: "));
}
