use lipscope::random::{derive_substream, gaussian_matrix, stream_new, RngStream};
use proptest::prelude::*;

proptest! {
    #[test]
    fn same_seed_same_stream(seed in any::<u64>()) {
        let mut a = stream_new(seed);
        let mut b = stream_new(seed);
        for _ in 0..64 {
            prop_assert_eq!(a.next_u64(), b.next_u64());
        }
        prop_assert_eq!(a.next_standard_normal().to_bits(), b.next_standard_normal().to_bits());
    }

    #[test]
    fn substreams_are_reproducible_and_distinct(master in any::<u64>(), i in 0u64..1000, j in 0u64..1000) {
        prop_assume!(i != j);
        let head = |k| {
            let mut s = derive_substream(master, k);
            (0..4).map(|_| s.next_u64()).collect::<Vec<_>>()
        };
        prop_assert_eq!(head(i), head(i));
        prop_assert_ne!(head(i), head(j));
    }

    #[test]
    fn uniforms_in_unit_interval(seed in any::<u64>()) {
        let mut s = stream_new(seed);
        for _ in 0..256 {
            let u = s.next_uniform();
            prop_assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn bounded_draws_stay_below(seed in any::<u64>(), n in 1u64..1_000_000) {
        let mut s = stream_new(seed);
        for _ in 0..64 {
            prop_assert!(s.next_below(n) < n);
        }
    }

    #[test]
    fn gaussian_matrix_is_homogeneous(seed in any::<u64>(), rows in 1usize..6, cols in 1usize..6, sigma in 0.01f64..10.0) {
        let unit = gaussian_matrix(&mut stream_new(seed), rows, cols, 1.0).unwrap();
        let scaled = gaussian_matrix(&mut stream_new(seed), rows, cols, sigma).unwrap();
        for (u, s) in unit.data().iter().zip(scaled.data()) {
            prop_assert_eq!((sigma * u).to_bits(), s.to_bits());
        }
    }

    #[test]
    fn shuffle_is_a_permutation(seed in any::<u64>(), n in 0usize..50) {
        let mut v: Vec<usize> = (0..n).collect();
        RngStream::new(seed).shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
    }
}

#[test]
fn substream_draw_order_is_independent_of_interleaving() {
    let seq: Vec<u64> = (0..8).map(|k| derive_substream(9, k).next_u64()).collect();
    let rev: Vec<u64> = (0..8).rev().map(|k| derive_substream(9, k).next_u64()).collect();
    assert_eq!(seq, rev.into_iter().rev().collect::<Vec<_>>());
}
