//! Contracts for the network blocks: exact encoder output shapes,
//! ConvLSTM stability and purity, language-encoder determinism, and
//! head behavior.

use farm_tensor::gradcheck::check_params_against_fd;
use farm_tensor::{ParamMap, Tape, Tensor};
use farm_nets::{LanguageEncoder, ObservationEncoder, PolicyValueHeads};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rand_image(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Tensor<f32> {
    let data: Vec<f32> = (0..3 * h * w).map(|_| rng.gen_range(0.0..1.0)).collect();
    Tensor::from_vec(data, &[3, h, w]).unwrap()
}

#[test]
fn encoder_output_is_12x12x32_for_99px_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut params = ParamMap::<f32>::new();
    let enc = ObservationEncoder::new(&mut params, "enc", &mut rng, (99, 99));
    let tape = Tape::inference();
    let (z, state) = enc.forward(&tape, &rand_image(&mut rng, 99, 99), &enc.zero_state()).unwrap();
    assert_eq!(state.h.shape(), &[32, 12, 12]);
    assert_eq!(z.shape(), &[144, 32]);
}

#[test]
fn encoder_output_is_7x7x32_for_56px_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut params = ParamMap::<f32>::new();
    let enc = ObservationEncoder::new(&mut params, "enc", &mut rng, (56, 56));
    let tape = Tape::inference();
    let (z, state) = enc.forward(&tape, &rand_image(&mut rng, 56, 56), &enc.zero_state()).unwrap();
    assert_eq!(state.h.shape(), &[32, 7, 7]);
    assert_eq!(z.shape(), &[49, 32]);
}

#[test]
fn encoder_rejects_wrong_channel_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut params = ParamMap::<f32>::new();
    let enc = ObservationEncoder::new(&mut params, "enc", &mut rng, (56, 56));
    let tape = Tape::<f32>::inference();
    let bad = Tensor::<f32>::zeros(&[1, 56, 56]);
    assert!(enc.forward(&tape, &bad, &enc.zero_state()).is_err());
}

#[test]
fn encoder_is_stateful_and_resettable() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut params = ParamMap::<f32>::new();
    let enc = ObservationEncoder::new(&mut params, "enc", &mut rng, (56, 56));
    let tape = Tape::inference();
    let img = rand_image(&mut rng, 56, 56);

    let (z1, s1) = enc.forward(&tape, &img, &enc.zero_state()).unwrap();
    let (z2, _) = enc.forward(&tape, &img, &enc.zero_state()).unwrap();
    assert!(z1.bits_eq(&z2), "reset state must reproduce Z exactly");

    let (z3, _) = enc.forward(&tape, &img, &s1).unwrap();
    assert!(!z1.bits_eq(&z3), "carried state should change Z");
}

#[test]
fn convlstm_zero_input_stays_bounded_over_100_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut params = ParamMap::<f32>::new();
    let cell = farm_nets::ConvLstmCell::new(&mut params, "cl", &mut rng, 4, 8, 3);
    let tape = Tape::inference();
    let x = Tensor::<f32>::zeros(&[4, 5, 5]);
    let mut state = cell.zero_state(5, 5);
    for _ in 0..100 {
        state = cell.step(&tape, &x, &state).unwrap();
        assert_eq!(state.h.shape(), &[8, 5, 5]);
    }
    let max_h = state.h.data().iter().fold(0.0f32, |m, &v| m.max(v.abs()));
    assert!(max_h <= 1.0, "|h| = {max_h} blew past 1");
}

#[test]
fn cells_are_pure_functions_of_input_state_params() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut params = ParamMap::<f32>::new();
    let cell = farm_nets::LstmCell::new(&mut params, "lstm", &mut rng, 6, 8);
    let tape = Tape::inference();
    let x = Tensor::from_vec((0..6).map(|i| i as f32 * 0.1).collect(), &[1, 6]).unwrap();
    let s0 = cell.zero_state();
    let a = cell.step(&tape, &x, &s0).unwrap();
    let b = cell.step(&tape, &x, &s0).unwrap();
    assert!(a.h.bits_eq(&b.h) && a.c.bits_eq(&b.c));
}

#[test]
fn lstm_forget_bias_initialized_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut params = ParamMap::<f32>::new();
    let hidden = 5;
    let _cell = farm_nets::LstmCell::new(&mut params, "lstm", &mut rng, 3, hidden);
    let bias = params.get("lstm/b").unwrap().value();
    let b = bias.data();
    assert!(b[..hidden].iter().all(|&v| v == 0.0)); // input gate
    assert!(b[hidden..2 * hidden].iter().all(|&v| v == 1.0)); // forget gate
    assert!(b[2 * hidden..].iter().all(|&v| v == 0.0));
}

#[test]
fn empty_instruction_encodes_to_zero_vector() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut params = ParamMap::<f32>::new();
    let words = vec!["circle".to_string(), "cw".to_string(), "ccw".to_string()];
    let enc = LanguageEncoder::new(&mut params, "lang", &mut rng, &words, 16, 128);
    let tape = Tape::inference();
    let out = enc.encode_tokens(&tape, &[]).unwrap();
    assert_eq!(out.shape(), &[1, 128]);
    assert!(out.data().iter().all(|&v| v == 0.0));
}

#[test]
fn same_tokens_encode_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut params = ParamMap::<f32>::new();
    let words = vec!["circle".to_string(), "cw".to_string()];
    let enc = LanguageEncoder::new(&mut params, "lang", &mut rng, &words, 16, 32);
    let tape = Tape::inference();
    let toks = vec!["circle".to_string(), "cw".to_string()];
    let a = enc.encode_tokens(&tape, &toks).unwrap();
    let b = enc.encode_tokens(&tape, &toks).unwrap();
    assert!(a.bits_eq(&b));
}

#[test]
fn out_of_range_token_id_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut params = ParamMap::<f32>::new();
    let enc = LanguageEncoder::new(&mut params, "lang", &mut rng, &[], 8, 8);
    let tape = Tape::inference();
    assert!(enc.encode_ids(&tape, &[farm_nets::MAX_VOCAB]).is_err());
}

#[test]
fn differing_instructions_encode_differently_across_random_inits() {
    // "circle cw" vs "circle ccw" should differ under essentially any init
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let mut params = ParamMap::<f32>::new();
        let words = vec!["circle".to_string(), "cw".to_string(), "ccw".to_string()];
        let enc = LanguageEncoder::new(&mut params, "lang", &mut rng, &words, 16, 32);
        let tape = Tape::inference();
        let a = enc
            .encode_tokens(&tape, &["circle".to_string(), "cw".to_string()])
            .unwrap();
        let b = enc
            .encode_tokens(&tape, &["circle".to_string(), "ccw".to_string()])
            .unwrap();
        assert!(!a.bits_eq(&b), "seed {seed}: encodings collided");
    }
}

#[test]
fn zero_input_gives_uniform_policy_after_softmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut params = ParamMap::<f32>::new();
    let heads = PolicyValueHeads::new(&mut params, "heads", &mut rng, 16, 200, 7);
    let tape = Tape::inference();
    let (logits, value) = heads.forward(&tape, &Tensor::zeros(&[1, 16])).unwrap();
    assert_eq!(logits.shape(), &[1, 7]);
    let probs = tape.softmax(&logits, 1).unwrap();
    for c in 0..7 {
        assert!((probs.at2(0, c) - 1.0 / 7.0).abs() < 1e-6);
    }
    assert_eq!(value.data(), &[0.0]);
}

#[test]
fn head_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut params = ParamMap::<f64>::new();
    let mut heads = PolicyValueHeads::new(&mut params, "heads", &mut rng, 5, 6, 4);
    // zero-init output layers have zero grads through relu paths otherwise
    params
        .get("heads/policy/out/W")
        .unwrap()
        .set(farm_tensor::init::fan_in_trunc_normal(&mut rng, &[6, 4]))
        .unwrap();
    params
        .get("heads/value/out/W")
        .unwrap()
        .set(farm_tensor::init::fan_in_trunc_normal(&mut rng, &[6, 1]))
        .unwrap();
    let _ = &mut heads;
    let x: Vec<f64> = (0..5).map(|i| 0.3 * (i as f64) - 0.7).collect();
    let forward = |params_heads: &PolicyValueHeads<f64>, want_grad: bool| {
        let tape = if want_grad { Tape::new() } else { Tape::inference() };
        let input = Tensor::from_vec(x.clone(), &[1, 5]).unwrap();
        let (logits, value) = params_heads.forward(&tape, &input).unwrap();
        let both = tape.concat(&[&logits, &value], 1).unwrap();
        let loss = tape.sum(&tape.mul(&both, &both).unwrap()).unwrap();
        (tape, loss)
    };
    let (tape, loss) = forward(&heads, true);
    tape.backward(&loss).unwrap();
    let report = check_params_against_fd(&params, 1e-5, || forward(&heads, false).1.data()[0]);
    assert!(
        report.max_rel_err <= 1e-5,
        "max rel err {:.3e} at {}[{}]",
        report.max_rel_err,
        report.worst_param,
        report.worst_index
    );
}
