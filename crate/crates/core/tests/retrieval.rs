mod common;

use common::retrieval::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use varp_core::gateway::{Embedder, LocalTrigramEmbedder, LOCAL_DIM};
use varp_core::memory::*;
use varp_core::par::Exec;

#[test]
fn curate_matches_brute_force() {
    assert_eq!(curate_mismatches(7), 0);
}

#[test]
fn self_similarity_is_one() {
    let e = LocalTrigramEmbedder::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for text in ["dodge twice then attack", "counter for Bullguard triple_chop", "x"] {
        let v = e.embed(text).unwrap();
        assert!((varp_core::gateway::cosine(&v, &v) - 1.0).abs() <= 1e-9);
    }
    for _ in 0..100 {
        let v = unit(&mut rng, LOCAL_DIM);
        assert!((varp_core::gateway::cosine(&v, &v) - 1.0).abs() <= 1e-9);
    }
    let f = random_frame(&mut rng);
    let fv = frame_features(&f);
    assert!((fv.cosine(&fv) - 1.0).abs() <= 1e-9);
}

#[test]
fn guidance_matches_brute_force() {
    assert_eq!(guidance_mismatches(11), 0);
}

#[test]
fn empty_guided_library_is_not_found() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let err = HumanGuidedLibrary::new().query_guidance(&random_frame(&mut rng), 4, Exec::Sequential).unwrap_err();
    assert!(matches!(err, varp_core::VarpError::NotFound(_)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn curate_is_sorted_and_sized(seed in 0u64..10_000, size in 1usize..60, k in 0usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lib = random_library(&mut rng, size);
        let q = unit(&mut rng, LOCAL_DIM);
        let got = lib.curate_skills(&q, k, Exec::Sequential);
        prop_assert_eq!(got.len(), k.min(size));
        for w in got.windows(2) {
            prop_assert!(w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0.name < w[1].0.name));
        }
        for (_, s) in &got {
            prop_assert!(*s <= 1.0 + 1e-9 && *s >= -1.0 - 1e-9);
        }
    }

    #[test]
    fn features_are_unit(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = frame_features(&random_frame(&mut rng));
        prop_assert_eq!(f.values.len(), FEATURE_DIM);
        prop_assert!((f.norm() - 1.0).abs() < 1e-9);
    }
}
