//! Property tests for the algebraic invariants of the op set.

use farm_tensor::{Tape, Tensor};
use proptest::prelude::*;

fn finite_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-50.0f64..50.0, len)
}

proptest! {
    #[test]
    fn softmax_rows_are_distributions(data in finite_vec(12)) {
        let tape = Tape::<f64>::inference();
        let x = Tensor::from_vec(data, &[3, 4]).unwrap();
        let y = tape.softmax(&x, 1).unwrap();
        for r in 0..3 {
            let row: f64 = (0..4).map(|c| y.at2(r, c)).sum();
            prop_assert!((row - 1.0).abs() < 1e-6);
            for c in 0..4 {
                prop_assert!(y.at2(r, c) >= 0.0);
            }
        }
    }

    #[test]
    fn flatten_then_reshape_is_identity_on_the_buffer(data in finite_vec(24)) {
        let tape = Tape::<f64>::inference();
        let x = Tensor::from_vec(data, &[4, 6]).unwrap();
        let back = tape.reshape(&tape.flatten(&x).unwrap(), &[4, 6]).unwrap();
        prop_assert!(back.bits_eq(&x));
    }

    #[test]
    fn slice_of_concat_round_trips(a in finite_vec(8), b in finite_vec(12)) {
        let tape = Tape::<f64>::inference();
        let ta = Tensor::from_vec(a, &[4, 2]).unwrap();
        let tb = Tensor::from_vec(b, &[4, 3]).unwrap();
        let c = tape.concat(&[&ta, &tb], 1).unwrap();
        prop_assert!(tape.slice(&c, 1, 0, 2).unwrap().bits_eq(&ta));
        prop_assert!(tape.slice(&c, 1, 2, 5).unwrap().bits_eq(&tb));
    }

    #[test]
    fn transpose_is_an_involution(data in finite_vec(15)) {
        let tape = Tape::<f64>::inference();
        let x = Tensor::from_vec(data, &[3, 5]).unwrap();
        let twice = tape.transpose(&tape.transpose(&x).unwrap()).unwrap();
        prop_assert!(twice.bits_eq(&x));
    }
}
