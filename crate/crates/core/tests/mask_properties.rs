use proptest::prelude::*;

use unlock_core::{rle_decode, rle_encode, BinaryMask};

fn mask() -> impl Strategy<Value = BinaryMask> {
    (1usize..16, 1usize..16)
        .prop_flat_map(|(h, w)| {
            (
                Just(h),
                Just(w),
                prop::collection::vec(any::<bool>(), h * w),
            )
        })
        .prop_map(|(h, w, bits)| BinaryMask::from_bools(h, w, &bits))
}

fn pair() -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
    (1usize..16, 1usize..16)
        .prop_flat_map(|(h, w)| {
            (
                Just(h),
                Just(w),
                prop::collection::vec(any::<bool>(), h * w),
                prop::collection::vec(any::<bool>(), h * w),
            )
        })
        .prop_map(|(h, w, a, b)| {
            (
                BinaryMask::from_bools(h, w, &a),
                BinaryMask::from_bools(h, w, &b),
            )
        })
}

proptest! {
    #[test]
    fn rle_round_trips(m in mask()) {
        let runs = rle_encode(&m);
        prop_assert_eq!(runs.total(), (m.height() * m.width()) as u64);
        prop_assert!(runs.as_slice().iter().skip(1).all(|&r| r > 0));
        prop_assert_eq!(rle_decode(&runs, m.height(), m.width()).unwrap(), m);
    }

    #[test]
    fn set_algebra_laws((a, b) in pair()) {
        let and = a.and(&b).unwrap();
        let or = a.or(&b).unwrap();
        prop_assert_eq!(&and, &b.and(&a).unwrap());
        prop_assert_eq!(&or, &b.or(&a).unwrap());
        prop_assert_eq!(and.complement(), a.complement().or(&b.complement()).unwrap());
        prop_assert_eq!(or.complement(), a.complement().and(&b.complement()).unwrap());
        prop_assert_eq!(a.diff(&b).unwrap(), a.and(&b.complement()).unwrap());
        prop_assert_eq!(and.area() + or.area(), a.area() + b.area());
        prop_assert_eq!(a.intersection_area(&b).unwrap(), and.area());
        prop_assert_eq!(a.union_area(&b).unwrap(), or.area());
        prop_assert!(and.is_subset_of(&a).unwrap() && a.is_subset_of(&or).unwrap());
        prop_assert!(a.diff(&b).unwrap().is_disjoint(&b).unwrap());
        prop_assert_eq!(a.iou(&b).unwrap(), b.iou(&a).unwrap());
    }

    #[test]
    fn erosion_and_dilation_bracket_the_mask(m in mask(), r in 0usize..3) {
        let e = m.erode(r);
        let d = m.dilate(r);
        prop_assert!(e.is_subset_of(&m).unwrap());
        prop_assert!(m.is_subset_of(&d).unwrap());
        prop_assert_eq!(m.complement().dilate(r).complement().and(&e).unwrap(), e.clone());
    }
}
