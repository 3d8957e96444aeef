//! GRU-based instruction encoder with a fixed-capacity vocabulary.

use std::collections::HashMap;

use farm_tensor::{init, Param, ParamMap, Result, Scalar, Tape, Tensor, TensorError};
use rand::Rng;

pub const MAX_VOCAB: usize = 1000;
pub const UNK_ID: usize = 0;

struct GruCell<S: Scalar> {
    hidden: usize,
    w_ih: Param<S>, // [in, 3H], gate order (r, z, n)
    w_hh: Param<S>, // [H, 3H]
    b_ih: Param<S>,
    b_hh: Param<S>,
}

impl<S: Scalar> GruCell<S> {
    fn new(
        params: &mut ParamMap<S>,
        prefix: &str,
        rng: &mut impl Rng,
        input: usize,
        hidden: usize,
    ) -> Self {
        GruCell {
            hidden,
            w_ih: params.create(
                format!("{prefix}/W_ih"),
                init::fan_in_trunc_normal(rng, &[input, 3 * hidden]),
            ),
            w_hh: params.create(
                format!("{prefix}/W_hh"),
                crate::lstm::per_gate_orthogonal(rng, hidden, 3),
            ),
            b_ih: params.create(format!("{prefix}/b_ih"), init::zeros_param(&[3 * hidden])),
            b_hh: params.create(format!("{prefix}/b_hh"), init::zeros_param(&[3 * hidden])),
        }
    }

    fn step(&self, tape: &Tape<S>, x: &Tensor<S>, h: &Tensor<S>) -> Result<Tensor<S>> {
        let hs = self.hidden;
        let gi = tape.add(&tape.matmul(x, &self.w_ih.value())?, &self.b_ih.value())?;
        let gh = tape.add(&tape.matmul(h, &self.w_hh.value())?, &self.b_hh.value())?;
        let r = tape.sigmoid(&tape.add(
            &tape.slice(&gi, 1, 0, hs)?,
            &tape.slice(&gh, 1, 0, hs)?,
        )?)?;
        let z = tape.sigmoid(&tape.add(
            &tape.slice(&gi, 1, hs, 2 * hs)?,
            &tape.slice(&gh, 1, hs, 2 * hs)?,
        )?)?;
        let n = tape.tanh(&tape.add(
            &tape.slice(&gi, 1, 2 * hs, 3 * hs)?,
            &tape.mul(&r, &tape.slice(&gh, 1, 2 * hs, 3 * hs)?)?,
        )?)?;
        // h' = (1 - z) * n + z * h
        let one_minus_z = tape.sub(&Tensor::ones(&[1, hs]), &z)?;
        tape.add(&tape.mul(&one_minus_z, &n)?, &tape.mul(&z, h)?)
    }
}

/// Maps token lists to a fixed-size embedding via word embeddings and a
/// GRU. The empty instruction encodes to the zero vector; unknown words map
/// to a reserved UNK id. The embedding table always has [`MAX_VOCAB`] rows.
pub struct LanguageEncoder<S: Scalar> {
    vocab: HashMap<String, usize>,
    embedding: Param<S>,
    gru: GruCell<S>,
    hidden: usize,
}

impl<S: Scalar> LanguageEncoder<S> {
    pub fn new(
        params: &mut ParamMap<S>,
        prefix: &str,
        rng: &mut impl Rng,
        words: &[String],
        embed_dim: usize,
        hidden: usize,
    ) -> Self {
        assert!(
            words.len() < MAX_VOCAB,
            "vocabulary exceeds {MAX_VOCAB} words"
        );
        let mut vocab = HashMap::new();
        for (i, w) in words.iter().enumerate() {
            let prev = vocab.insert(w.clone(), i + 1); // 0 is UNK
            assert!(prev.is_none(), "duplicate vocabulary word {w:?}");
        }
        let embedding = params.create(
            format!("{prefix}/embedding"),
            init::trunc_normal(rng, &[MAX_VOCAB, embed_dim], 0.1),
        );
        let gru = GruCell::new(params, &format!("{prefix}/gru"), rng, embed_dim, hidden);
        LanguageEncoder {
            vocab,
            embedding,
            gru,
            hidden,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    pub fn token_id(&self, word: &str) -> usize {
        self.vocab.get(word).copied().unwrap_or(UNK_ID)
    }

    /// Final GRU hidden state over the id sequence; `[]` gives zeros.
    pub fn encode_ids(&self, tape: &Tape<S>, ids: &[usize]) -> Result<Tensor<S>> {
        let mut h = Tensor::zeros(&[1, self.hidden]);
        for &id in ids {
            if id >= MAX_VOCAB {
                return Err(TensorError::BadShape {
                    op: "encode_ids",
                    expected: format!("token id < {MAX_VOCAB}"),
                    got: vec![id],
                });
            }
            let x = tape.slice(&self.embedding.value(), 0, id, id + 1)?;
            h = self.gru.step(tape, &x, &h)?;
        }
        Ok(h)
    }

    pub fn encode_tokens(&self, tape: &Tape<S>, tokens: &[String]) -> Result<Tensor<S>> {
        let ids: Vec<usize> = tokens.iter().map(|t| self.token_id(t)).collect();
        self.encode_ids(tape, &ids)
    }
}
