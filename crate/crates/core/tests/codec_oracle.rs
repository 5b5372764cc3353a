use proptest::prelude::*;
use qcsm_core::codec::{canonical_json, decode_cbor, encode_cbor};
use serde_json::{json, Map, Number, Value};

fn reference_encode(v: &Value) -> Vec<u8> {
    let mut out = Vec::new();
    ciborium::into_writer(v, &mut out).unwrap();
    out
}

fn reference_decode(bytes: &[u8]) -> Value {
    ciborium::from_reader(bytes).unwrap()
}

fn number() -> impl Strategy<Value = Value> {
    prop_oneof![
        any::<u64>().prop_map(Value::from),
        any::<i64>().prop_map(Value::from),
        (-1000i64..1000).prop_map(Value::from),
        any::<f64>()
            .prop_filter("finite", |f| f.is_finite())
            .prop_map(|f| Value::Number(Number::from_f64(f).unwrap())),
        (-1000i32..1000, 0u32..4).prop_map(|(m, e)| json!(m as f64 / 10f64.powi(e as i32))),
        prop::sample::select(vec![0.5, 1.0, -0.0, 65504.0, 5.960464477539063e-8, 1.0e300, 3.4028234663852886e38])
            .prop_map(|f| json!(f)),
    ]
}

fn document() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        number(),
        "\\PC{0,24}".prop_map(Value::String),
    ];
    leaf.prop_recursive(4, 64, 8, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..8).prop_map(Value::Array),
            prop::collection::btree_map("\\PC{0,8}", inner, 0..8)
                .prop_map(|m| Value::Object(m.into_iter().collect::<Map<_, _>>())),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, rng_seed: proptest::test_runner::RngSeed::Fixed(7), ..ProptestConfig::default() })]

    #[test]
    fn round_trip_is_identity(doc in document()) {
        let bytes = encode_cbor(&doc);
        prop_assert_eq!(decode_cbor(&bytes).unwrap(), doc);
    }

    #[test]
    fn encoding_matches_reference_codec(doc in document()) {
        let ours = encode_cbor(&doc);
        prop_assert_eq!(hex::encode(&ours), hex::encode(reference_encode(&doc)));
        prop_assert_eq!(reference_decode(&ours), doc);
    }

    #[test]
    fn reference_output_decodes(doc in document()) {
        prop_assert_eq!(decode_cbor(&reference_encode(&doc)).unwrap(), doc);
    }

    #[test]
    fn canonical_text_survives_cbor(doc in document()) {
        let text = canonical_json(&doc);
        let again = decode_cbor(&encode_cbor(&serde_json::from_str(&text).unwrap())).unwrap();
        prop_assert_eq!(canonical_json(&again), text);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..64)) {
        let _ = decode_cbor(&bytes);
    }
}

#[test]
fn fixtures_match_reference_codec() {
    let fixtures = [
        (json!({}), "a0"),
        (json!({"a": 1}), "a1616101"),
        (json!([1, [2, 3]]), "8201820203"),
        (json!({"a": [true, null], "b": -1.5}), "a2616182f5f66162f9be00"),
    ];
    for (doc, hex_bytes) in fixtures {
        let ours = encode_cbor(&doc);
        assert_eq!(hex::encode(&ours), hex_bytes);
        assert_eq!(ours, reference_encode(&doc));
        assert_eq!(decode_cbor(&ours).unwrap(), doc);
    }
}

#[test]
fn indefinite_length_misuse_rejected_by_both() {
    assert!(decode_cbor(&[0x1f]).is_err());
    assert!(ciborium::from_reader::<ciborium::Value, _>(&[0x1fu8][..]).is_err());
}
