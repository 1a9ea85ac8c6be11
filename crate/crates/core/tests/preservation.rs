//! The translation preserves typing: every output formula checks at the
//! double-continuation type over the translated result type, and
//! normalization does not change that type. On ground types the type
//! translation is the identity embedding.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wpk_core::cps::{cps_term, cps_type, normalize};
use wpk_core::gen::{enumerate_ground_types, gen_any_ty, gen_typed_term, GenInstance};
use wpk_core::target::{ground_to_target, typecheck_target, TargetType};

#[test]
fn translated_terms_check_at_the_double_continuation_type() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xcafe_0001);
    for instance in [GenInstance::Trace, GenInstance::Cost] {
        let sig = instance.signature();
        for i in 0..110u32 {
            let ty = gen_any_ty(&mut rng, instance, 1 + i % 3);
            let p = gen_typed_term(&mut rng, instance, &ty);
            let out = cps_term(&sig, &p.term)
                .unwrap_or_else(|e| panic!("translation failed: {e:?}\n{}", p.text));
            let expected = TargetType::pred(TargetType::pred(cps_type(&out.source_ty)));
            assert_eq!(out.target_ty, expected, "advertised type mismatch on: {}", p.text);
            let checked = typecheck_target(&sig, &[], &out.term)
                .unwrap_or_else(|e| panic!("output failed to typecheck: {e}\n{}", p.text));
            assert_eq!(checked, expected, "checked type mismatch on: {}", p.text);
            let reduced = normalize(&out.term);
            let rechecked = typecheck_target(&sig, &[], &reduced)
                .unwrap_or_else(|e| panic!("normalized output failed to typecheck: {e}\n{}", p.text));
            assert_eq!(rechecked, expected, "normalization changed the type on: {}", p.text);
        }
    }
}

#[test]
fn ground_type_translation_is_the_identity() {
    let types = enumerate_ground_types(6, &["nat", "real"]);
    assert!(types.len() > 100, "enumeration too small: {}", types.len());
    for ty in &types {
        let translated = cps_type(ty);
        let embedded = ground_to_target(ty)
            .unwrap_or_else(|e| panic!("ground embedding failed on {ty}: {e}"));
        assert_eq!(translated, embedded, "translation moved ground type {ty}");
    }
}
