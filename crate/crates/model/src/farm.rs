//! Modular recurrent state representation.
//!
//! Each of n modules owns an LSTM whose input concatenates three pieces:
//! its context (task embedding, previous hidden state, previous action,
//! previous reward), a feature-attended readout of the observation matrix,
//! and a multihead retrieval over every module's previous state with an
//! appended null row. The module hidden states concatenate into the agent
//! state in fixed module order.

use farm_tensor::{init, Param, ParamMap, Result, Scalar, Tape, Tensor};
use farm_nets::{LstmCell, LstmState};
use rand::Rng;

use crate::config::FarmConfig;

const MASK_NEG: f64 = -1e30;

/// Feature projections shared by all modules.
struct SharedProj<S: Scalar> {
    w1: Param<S>, // [d_z, proj]
    w2: Param<S>, // [proj, proj]
}

struct ShareHead<S: Scalar> {
    w_q: Param<S>, // [context, d_h]
    w_k: Param<S>, // [d_h, d_h]
    w_v: Param<S>, // [d_h, d_h / heads]
}

struct FarmModule<S: Scalar> {
    w_att: Param<S>, // [context, proj]
    heads: Vec<ShareHead<S>>,
    lstm: LstmCell<S>,
    h0: Param<S>,
    c0: Param<S>,
}

/// Per-step diagnostics used by readout traces and tests.
pub struct ModuleTrace<S: Scalar> {
    /// Feature coefficients in (0,1)^proj, when feature attention is on.
    pub coefficients: Option<Tensor<S>>,
    /// Retrieval weights over n+1 rows, one `[1, n+1]` tensor per head.
    pub share_weights: Vec<Tensor<S>>,
}

pub struct FarmStepTrace<S: Scalar> {
    pub modules: Vec<ModuleTrace<S>>,
}

pub struct Farm<S: Scalar> {
    pub config: FarmConfig,
    pub feature_dim: usize,
    pub num_positions: usize,
    shared: SharedProj<S>,
    modules: Vec<FarmModule<S>>,
}

impl<S: Scalar> Farm<S> {
    pub fn new(
        params: &mut ParamMap<S>,
        prefix: &str,
        rng: &mut impl Rng,
        config: FarmConfig,
        feature_dim: usize,
        num_positions: usize,
    ) -> Self {
        config.validate().expect("valid farm config");
        let shared = SharedProj {
            w1: params.create(
                format!("{prefix}/shared/W1"),
                init::fan_in_trunc_normal(rng, &[feature_dim, config.proj_dim]),
            ),
            w2: params.create(
                format!("{prefix}/shared/W2"),
                init::fan_in_trunc_normal(rng, &[config.proj_dim, config.proj_dim]),
            ),
        };
        let ctx = config.context_len();
        let dh = config.d_hidden;
        let head_v = dh / config.sharing_heads;
        let lstm_input = ctx + num_positions * config.proj_dim + dh;
        let modules = (0..config.n_modules)
            .map(|i| {
                let mp = format!("{prefix}/module{i}");
                let w_att = params.create(
                    format!("{mp}/W_att"),
                    init::fan_in_trunc_normal(rng, &[ctx, config.proj_dim]),
                );
                let heads = (0..config.sharing_heads)
                    .map(|h| ShareHead {
                        w_q: params.create(
                            format!("{mp}/share/head{h}/W_q"),
                            init::fan_in_trunc_normal(rng, &[ctx, dh]),
                        ),
                        w_k: params.create(
                            format!("{mp}/share/head{h}/W_k"),
                            init::fan_in_trunc_normal(rng, &[dh, dh]),
                        ),
                        w_v: params.create(
                            format!("{mp}/share/head{h}/W_v"),
                            init::fan_in_trunc_normal(rng, &[dh, head_v]),
                        ),
                    })
                    .collect();
                let lstm = LstmCell::new(params, &format!("{mp}/lstm"), rng, lstm_input, dh);
                // distinct learned initial state per module
                let h0 = params.create(format!("{mp}/h0"), init::normal(rng, &[1, dh], 0.1));
                let c0 = params.create(format!("{mp}/c0"), init::normal(rng, &[1, dh], 0.1));
                FarmModule {
                    w_att,
                    heads,
                    lstm,
                    h0,
                    c0,
                }
            })
            .collect();
        Farm {
            config,
            feature_dim,
            num_positions,
            shared,
            modules,
        }
    }

    /// Learned initial states. Gradients flow into them when an episode
    /// starts inside a differentiated unroll.
    pub fn initial_module_states(&self) -> Vec<LstmState<S>> {
        self.modules
            .iter()
            .map(|m| LstmState {
                h: m.h0.value(),
                c: m.c0.value(),
            })
            .collect()
    }

    /// Builds the context [task, h_prev, action one-hot, reward].
    pub fn module_context(
        &self,
        tape: &Tape<S>,
        task: &Tensor<S>,
        h_prev: &Tensor<S>,
        prev_action: Option<usize>,
        prev_reward: S,
    ) -> Result<Tensor<S>> {
        let mut onehot = vec![S::zero(); self.config.num_actions];
        if let Some(a) = prev_action {
            onehot[a] = S::one();
        }
        let action = Tensor::from_vec(onehot, &[1, self.config.num_actions])?;
        let reward = Tensor::from_vec(vec![prev_reward], &[1, 1])?;
        tape.concat(&[task, h_prev, &action, &reward], 1)
    }

    /// Projects the observation rows, scales every row by the context's
    /// sigmoid feature coefficients, and projects again: `(Z W1 .* s) W2`
    /// with `s = sigmoid(W_att c)` applied identically at every position.
    /// Returns the `[m, proj]` readout and the coefficient vector.
    pub fn feature_attention(
        &self,
        tape: &Tape<S>,
        module: usize,
        z: &Tensor<S>,
        context: &Tensor<S>,
    ) -> Result<(Tensor<S>, Option<Tensor<S>>)> {
        let projected = tape.matmul(z, &self.shared.w1.value())?;
        let (gated, coeff) = if self.config.feature_attention {
            let coeff = tape.sigmoid(&tape.matmul(context, &self.modules[module].w_att.value())?)?;
            (tape.mul(&projected, &coeff)?, Some(coeff))
        } else {
            (projected, None)
        };
        Ok((tape.matmul(&gated, &self.shared.w2.value())?, coeff))
    }

    /// Multihead retrieval over previous module states plus a null row.
    /// Per head: weights = softmax((c Wq)(H Wk)^T / sqrt(d_h)), output =
    /// weights (H Wv); head outputs concatenate back to d_h. No
    /// projection carries a bias, so selecting the null row retrieves an
    /// exact zero. `mask`, when given, removes real rows (true = keep).
    pub fn share_information(
        &self,
        tape: &Tape<S>,
        module: usize,
        context: &Tensor<S>,
        all_prev: &[LstmState<S>],
        mask: Option<&[bool]>,
    ) -> Result<(Tensor<S>, Vec<Tensor<S>>)> {
        let n = all_prev.len();
        let null_row = Tensor::zeros(&[1, self.config.d_hidden]);
        let mut rows: Vec<&Tensor<S>> = all_prev.iter().map(|s| &s.h).collect();
        rows.push(&null_row);
        let h_mat = tape.concat(&rows, 0)?; // [n+1, d_h]

        let mask_tensor = mask.map(|m| {
            assert_eq!(m.len(), n, "mask covers the real rows");
            let mut v = vec![S::zero(); n + 1];
            for (i, &keep) in m.iter().enumerate() {
                if !keep {
                    v[i] = S::from_f64(MASK_NEG);
                }
            }
            Tensor::from_vec(v, &[1, n + 1]).expect("finite mask")
        });

        let scale = self.config.head_scale::<S>();
        let mut outputs = Vec::with_capacity(self.config.sharing_heads);
        let mut weights_out = Vec::with_capacity(self.config.sharing_heads);
        for head in &self.modules[module].heads {
            let q = tape.matmul(context, &head.w_q.value())?; // [1, d_h]
            let k = tape.matmul(&h_mat, &head.w_k.value())?; // [n+1, d_h]
            let mut logits = tape.scale(&tape.matmul(&q, &tape.transpose(&k)?)?, scale)?;
            if let Some(m) = &mask_tensor {
                logits = tape.add(&logits, m)?;
            }
            let weights = tape.softmax(&logits, 1)?; // [1, n+1]
            let v = tape.matmul(&h_mat, &head.w_v.value())?; // [n+1, d_h/heads]
            outputs.push(tape.matmul(&weights, &v)?);
            weights_out.push(weights);
        }
        let refs: Vec<&Tensor<S>> = outputs.iter().collect();
        Ok((tape.concat(&refs, 1)?, weights_out))
    }

    /// One module update against a snapshot of all previous states.
    pub fn module_step(
        &self,
        tape: &Tape<S>,
        module: usize,
        z: &Tensor<S>,
        context: &Tensor<S>,
        all_prev: &[LstmState<S>],
    ) -> Result<(LstmState<S>, ModuleTrace<S>)> {
        let (attended, coefficients) = self.feature_attention(tape, module, z, context)?;
        let u_obs = tape.flatten(&attended)?;
        let (u_info, share_weights) = if self.config.sharing {
            self.share_information(tape, module, context, all_prev, None)?
        } else {
            (Tensor::zeros(&[1, self.config.d_hidden]), Vec::new())
        };
        let lstm_in = tape.concat(&[context, &u_obs, &u_info], 1)?;
        let next = self.modules[module]
            .lstm
            .step(tape, &lstm_in, &all_prev[module])?;
        Ok((
            next,
            ModuleTrace {
                coefficients,
                share_weights,
            },
        ))
    }

    /// Updates every module against the same previous-state snapshot and
    /// concatenates the new hidden states into the agent state.
    pub fn step(
        &self,
        tape: &Tape<S>,
        z: &Tensor<S>,
        task: &Tensor<S>,
        prev_action: Option<usize>,
        prev_reward: S,
        prev_states: &[LstmState<S>],
    ) -> Result<(Tensor<S>, Vec<LstmState<S>>, FarmStepTrace<S>)> {
        assert_eq!(prev_states.len(), self.config.n_modules);
        let mut next_states = Vec::with_capacity(self.config.n_modules);
        let mut traces = Vec::with_capacity(self.config.n_modules);
        for i in 0..self.config.n_modules {
            let context = self.module_context(tape, task, &prev_states[i].h, prev_action, prev_reward)?;
            let (state, trace) = self.module_step(tape, i, z, &context, prev_states)?;
            next_states.push(state);
            traces.push(trace);
        }
        let hs: Vec<&Tensor<S>> = next_states.iter().map(|s| &s.h).collect();
        let s_t = tape.concat(&hs, 1)?;
        Ok((s_t, next_states, FarmStepTrace { modules: traces }))
    }
}
