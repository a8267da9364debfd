use proptest::prelude::*;
use shellkit::{load_dataset, load_model, save_dataset, save_model, Dataset};
use shellkit_core::{train, AncestorMeans, DatasetMatrix, FitOptions, Vector};

fn matrix() -> impl Strategy<Value = DatasetMatrix> {
    (1usize..6, 1usize..5).prop_flat_map(|(n, k)| {
        prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO, n * k)
            .prop_map(move |v| DatasetMatrix::new(n, k, v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn datasets_round_trip(m in matrix(), labeled in any::<bool>(), binary in any::<bool>()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(if binary { "d.shlk" } else { "d.csv" });
        let mut ds = Dataset::new(m.clone());
        if labeled {
            ds = ds.with_labels((0..m.n_rows()).map(|i| format!("c{i}")).collect());
        }
        save_dataset(&path, &ds).unwrap();
        let back = load_dataset(&path, false).unwrap();
        prop_assert_eq!(back.matrix.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                        m.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn normalized_datasets_keep_their_flag(m in matrix()) {
        prop_assume!(m.rows().all(|r| r.iter().any(|&x| x != 0.0)));
        let dir = tempfile::tempdir().unwrap();
        let ds = Dataset::new(m).unit_normalized().unwrap();
        for name in ["u.csv", "u.shlk"] {
            let path = dir.path().join(name);
            save_dataset(&path, &ds).unwrap();
            let back = load_dataset(&path, false).unwrap();
            prop_assert!(back.normalized || name.ends_with(".csv"));
            prop_assert_eq!(&back.matrix, &ds.matrix);
        }
    }

    #[test]
    fn models_round_trip(seed in 0u64..1000, stacked in any::<bool>()) {
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| {
                let a = (seed as f64 + 1.0) * 0.1 + i as f64;
                vec![a.cos(), a.sin(), 0.3 * (2.0 * a).cos()]
            })
            .collect();
        let data = DatasetMatrix::from_rows(&rows).unwrap().unit_normalized().unwrap();
        let means = if stacked {
            shellkit_core::build_ancestor_means(&data.mean(), &[Vector::new(vec![0.2, -0.1, 0.3]).unwrap()]).unwrap()
        } else {
            AncestorMeans::shell_one(3)
        };
        let model = train(&data, &means, "class", 1e-3, &FitOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_model(&path, &model).unwrap();
        prop_assert_eq!(load_model(&path).unwrap(), model);
    }
}
