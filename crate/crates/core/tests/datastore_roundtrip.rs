use proptest::prelude::*;
use wingforge::datastore::{CaseRecord, Dataset, FieldBlob};
use wingforge::doe::CaseSpec;
use wingforge::space::{DesignVector, ParameterSpace};

fn bits(b: &FieldBlob) -> Vec<u32> {
    b.data.iter().map(|v| v.to_bits()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn blobs_and_manifests_round_trip_bit_exactly(
        raw in prop::collection::vec(any::<u32>(), 0..300),
        components in 1u32..4,
        phi in prop::array::uniform6(-1e3f64..1e3),
        c_d in any::<f64>().prop_filter("finite", |v| v.is_finite()),
        c_l in any::<f64>().prop_filter("finite", |v| v.is_finite()),
    ) {
        let n = raw.len() - raw.len() % components as usize;
        let blob = FieldBlob::new("field", components, raw[..n].iter().map(|&b| f32::from_bits(b)).collect()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let mut ds = Dataset::create(dir.path(), ParameterSpace::default()).unwrap();
        let rec = CaseRecord::new(CaseSpec::from_vector("case-1", &DesignVector(phi))).with_coefficients(c_d, c_l);
        let stored = ds.write_case(rec, std::slice::from_ref(&blob)).unwrap();

        let reopened = Dataset::open(dir.path()).unwrap();
        let (back, blobs) = reopened.read_case("case-1").unwrap();
        prop_assert_eq!(&back, &stored);
        let k = back.coefficients.unwrap();
        prop_assert_eq!((k.c_d.to_bits(), k.c_l.to_bits()), (c_d.to_bits(), c_l.to_bits()));
        prop_assert_eq!(bits(&blobs[0]), bits(&blob));
        prop_assert_eq!(reopened.rebuild_index().unwrap(), ds.index().clone());
    }
}
