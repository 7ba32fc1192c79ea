use ism_core::container::IsmContainer;
use ism_core::fft::roll;
use ism_core::optics::{psf_stack, OpticalConfig, PsfStack, ScanGrid, Shift, ShiftVectors};
use ism_core::reconstruct::{apr, rl_deconvolve, sum_image, RlOptions};
use ism_core::resample::{downsample, zero_upsample};
use ism_core::simulate::{forward, DataType, IsmDataset};
use ndarray::{Array2, Array3};
use proptest::prelude::*;
use std::sync::OnceLock;

const N: usize = 24;

fn stack() -> &'static PsfStack {
    static STACK: OnceLock<PsfStack> = OnceLock::new();
    STACK.get_or_init(|| {
        psf_stack(
            &OpticalConfig::default(),
            &ScanGrid::square(N, 50.0).unwrap(),
            true,
        )
        .unwrap()
    })
}

fn image() -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(0.0f64..100.0, N * N)
        .prop_map(|v| Array2::from_shape_vec((N, N), v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn forward_is_linear(a in image(), b in image(), s in 0.1f64..5.0) {
        let combined = &a * s + &b;
        let lhs = forward(&combined, stack()).unwrap().data;
        let rhs = forward(&a, stack()).unwrap().data * s + forward(&b, stack()).unwrap().data;
        let scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in lhs.iter().zip(rhs.iter()) {
            prop_assert!((x - y).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn rl_conserves_flux(
        data in prop::collection::vec(0u32..200, N * N * 25),
        iterations in 1usize..8,
    ) {
        let data = Array3::from_shape_vec((N, N, 25), data.into_iter().map(f64::from).collect()).unwrap();
        prop_assume!(data.sum() > 0.0);
        let ds = IsmDataset::new(data, DataType::Counts, stack().grid, stack().detector.clone()).unwrap();
        let out = rl_deconvolve(&ds, stack(), &RlOptions::with_iterations(iterations)).unwrap();
        prop_assert!((out.image.sum() / ds.total() - 1.0).abs() <= 1e-9);
        prop_assert!(out.image.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn apr_preserves_flux(
        img in image(),
        shifts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 25),
    ) {
        prop_assume!(img.sum() > 0.0);
        let ds = forward(&img, stack()).unwrap();
        let vectors = shifts.iter().map(|&(y, x)| Shift { x: x * 50.0, y: y * 50.0 }).collect();
        let sv = ShiftVectors::from_vectors(vectors, ds.detector.clone());
        let out = apr(&ds, &sv).unwrap();
        prop_assert!((out.image.sum() / ds.total() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn integer_apr_matches_rolled_sum(img in image(), dy in -4isize..=4, dx in -4isize..=4) {
        let ds = forward(&img, stack()).unwrap();
        let sv = ShiftVectors::from_vectors(
            vec![Shift { x: dx as f64 * 50.0, y: dy as f64 * 50.0 }; 25],
            ds.detector.clone(),
        );
        let out = apr(&ds, &sv).unwrap();
        let expected = roll(&sum_image(&ds).image, -dy, -dx);
        for (x, y) in out.image.iter().zip(expected.iter()) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn downsample_inverts_zero_upsample(data in prop::collection::vec(0u32..1000, 8 * 6 * 9)) {
        let data = Array3::from_shape_vec((8, 6, 9), data.into_iter().map(f64::from).collect()).unwrap();
        let ds = IsmDataset::new(
            data,
            DataType::Counts,
            ScanGrid::new(8, 6, 120.0, 150.0).unwrap(),
            ism_core::optics::DetectorMap::full(3, 160.0),
        )
        .unwrap();
        let up = zero_upsample(&ds);
        prop_assert_eq!(up.total(), ds.total());
        let back = downsample(&up);
        prop_assert_eq!(back.data, ds.data);
        prop_assert_eq!(back.grid, ds.grid);
    }

    #[test]
    fn container_bytes_round_trip(values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 12)) {
        let img = Array2::from_shape_vec((3, 4), values).unwrap();
        let c = IsmContainer::from_image(&img, ScanGrid::new(3, 4, 10.0, 20.0).unwrap(), None, None, Default::default());
        let bytes = c.to_bytes().unwrap();
        let back = IsmContainer::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes().unwrap(), bytes);
        let round = back.to_image().unwrap();
        prop_assert!(round.iter().zip(img.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
