use accmarket::data_io::{
    load_csv, read_csv, rebalance, restrict_features, sample_gaussian_market, split, subsample, write_csv, SplitSpec,
};
use accmarket::threshold::GaussianMarketSpec;
use accmarket::Dataset;
use proptest::prelude::*;

fn dataset() -> impl Strategy<Value = Dataset> {
    (2usize..=40, 1usize..=4).prop_flat_map(|(m, d)| {
        (
            prop::collection::vec(prop::collection::vec(-1e6f64..1e6, d), m),
            prop::collection::vec(any::<bool>(), m),
        )
            .prop_map(|(rows, ys)| Dataset::new(rows, ys.into_iter().map(|y| if y { 1 } else { -1 }).collect()).unwrap())
    })
}

fn sorted_rows(d: &Dataset) -> Vec<(Vec<u64>, i8)> {
    let mut v: Vec<_> = (0..d.len())
        .map(|j| (d.row(j).iter().map(|x| x.to_bits()).collect(), d.label(j)))
        .collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_is_exact(data in dataset()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_csv(&data, &path, "label").unwrap();
        let back = load_csv(&path, "label", "1").unwrap();
        prop_assert_eq!(back.len(), data.len());
        for j in 0..data.len() {
            prop_assert_eq!(back.row(j), data.row(j));
            prop_assert_eq!(back.label(j), data.label(j));
        }
    }

    #[test]
    fn split_partitions_the_rows(data in dataset(), f in 0.05f64..0.95, seed in any::<u64>()) {
        let (train, test) = split(&data, &SplitSpec { test_fraction: f, seed }).unwrap();
        prop_assert!(!train.is_empty() && !test.is_empty());
        prop_assert_eq!(train.len() + test.len(), data.len());
        let mut both = sorted_rows(&train);
        both.extend(sorted_rows(&test));
        both.sort();
        prop_assert_eq!(both, sorted_rows(&data));
        let again = split(&data, &SplitSpec { test_fraction: f, seed }).unwrap();
        prop_assert_eq!(sorted_rows(&again.0), sorted_rows(&train));
    }

    #[test]
    fn rebalance_reaches_the_target(data in dataset(), target in 0.2f64..0.8, seed in any::<u64>()) {
        let pos = data.positive_count();
        prop_assume!(pos > 0 && pos < data.len());
        let out = rebalance(&data, target, seed).unwrap();
        prop_assert!(out.len() >= data.len());
        for j in 0..data.len() {
            prop_assert_eq!(out.row(j), data.row(j));
        }
        // One extra row moves the fraction by at most 1 / len.
        let step = 1.0 / out.len() as f64;
        prop_assert!((out.positive_fraction() - target).abs() <= step);
    }

    #[test]
    fn subsample_keeps_distinct_rows_in_order(data in dataset(), k in 1usize..40, seed in any::<u64>()) {
        prop_assume!(k <= data.len());
        let out = subsample(&data, k, seed).unwrap();
        prop_assert_eq!(out.len(), k);
        let mut cursor = 0;
        for j in 0..k {
            while cursor < data.len() && data.row(cursor) != out.row(j) {
                cursor += 1;
            }
            prop_assert!(cursor < data.len());
            cursor += 1;
        }
    }
}

#[test]
fn gaussian_samples_follow_the_spec() {
    let spec = GaussianMarketSpec::new(1.5, 2.0, 0.5, 0.3).unwrap();
    let d = sample_gaussian_market(&spec, 100_000, 9).unwrap();
    assert_eq!(d.dim(), 1);
    assert!((d.positive_fraction() - 0.3).abs() < 0.01);
    let (mut sum_pos, mut n_pos, mut sum_neg, mut n_neg) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..d.len() {
        if d.label(j) == 1 {
            sum_pos += d.value(j, 0);
            n_pos += 1.0;
        } else {
            sum_neg += d.value(j, 0);
            n_neg += 1.0;
        }
    }
    assert!((sum_pos / n_pos - 1.5).abs() < 0.02);
    assert!((sum_neg / n_neg + 1.5).abs() < 0.05);
    assert_eq!(d.labels(), sample_gaussian_market(&spec, 100_000, 9).unwrap().labels());
}

#[test]
fn labels_match_textually_or_numerically() {
    let text = "a,y,b\n1,yes,2\n3,no,4\n5,yes,6\n";
    let d = read_csv(text.as_bytes(), "y", "yes").unwrap();
    assert_eq!(d.labels(), &[1, -1, 1]);
    assert_eq!(d.dim(), 2);
    assert_eq!(d.row(1), &[3.0, 4.0]);
    let numeric = read_csv("x,y\n0.5,1.0\n1.5,0\n".as_bytes(), "y", "1").unwrap();
    assert_eq!(numeric.labels(), &[1, -1]);
}

#[test]
fn malformed_csv_is_rejected() {
    assert!(read_csv("x,y\n1,1\n".as_bytes(), "label", "1").is_err());
    assert!(read_csv("x,y\nfoo,1\n".as_bytes(), "y", "1").is_err());
    assert!(read_csv("x,y\n1,1,3\n".as_bytes(), "y", "1").is_err());
    assert!(read_csv("x,y\n".as_bytes(), "y", "1").is_err());
    assert!(load_csv("/nonexistent/file.csv", "y", "1").is_err());
}

#[test]
fn feature_restriction_keeps_leading_columns() {
    let d = Dataset::new(vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]], vec![1, -1]).unwrap();
    let r = restrict_features(&d, 2).unwrap();
    assert_eq!(r.row(1), &[4.0, 5.0]);
    assert!(restrict_features(&d, 0).is_err());
    assert!(restrict_features(&d, 4).is_err());
}
