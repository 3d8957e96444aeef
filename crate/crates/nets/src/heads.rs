//! Policy and value heads: separate one-hidden-layer MLPs (ReLU), with
//! zero-initialized final layers so the starting policy is uniform.

use farm_tensor::{init, Param, ParamMap, Result, Scalar, Tape, Tensor};
use rand::Rng;

struct Linear<S: Scalar> {
    w: Param<S>,
    b: Param<S>,
}

impl<S: Scalar> Linear<S> {
    fn new(
        params: &mut ParamMap<S>,
        prefix: &str,
        rng: &mut impl Rng,
        input: usize,
        output: usize,
        zero_init: bool,
    ) -> Self {
        let w = if zero_init {
            init::zeros_param(&[input, output])
        } else {
            init::fan_in_trunc_normal(rng, &[input, output])
        };
        Linear {
            w: params.create(format!("{prefix}/W"), w),
            b: params.create(format!("{prefix}/b"), init::zeros_param(&[output])),
        }
    }

    fn forward(&self, tape: &Tape<S>, x: &Tensor<S>) -> Result<Tensor<S>> {
        tape.add(&tape.matmul(x, &self.w.value())?, &self.b.value())
    }
}

pub struct PolicyValueHeads<S: Scalar> {
    pub state_size: usize,
    pub num_actions: usize,
    policy_hidden: Linear<S>,
    policy_out: Linear<S>,
    value_hidden: Linear<S>,
    value_out: Linear<S>,
}

impl<S: Scalar> PolicyValueHeads<S> {
    pub fn new(
        params: &mut ParamMap<S>,
        prefix: &str,
        rng: &mut impl Rng,
        state_size: usize,
        hidden: usize,
        num_actions: usize,
    ) -> Self {
        PolicyValueHeads {
            state_size,
            num_actions,
            policy_hidden: Linear::new(params, &format!("{prefix}/policy/hidden"), rng, state_size, hidden, false),
            policy_out: Linear::new(params, &format!("{prefix}/policy/out"), rng, hidden, num_actions, true),
            value_hidden: Linear::new(params, &format!("{prefix}/value/hidden"), rng, state_size, hidden, false),
            value_out: Linear::new(params, &format!("{prefix}/value/out"), rng, hidden, 1, true),
        }
    }

    /// `(logits [1, |A|], value [1, 1])` from the agent state `[1, state]`.
    pub fn forward(&self, tape: &Tape<S>, s: &Tensor<S>) -> Result<(Tensor<S>, Tensor<S>)> {
        let ph = tape.relu(&self.policy_hidden.forward(tape, s)?)?;
        let logits = self.policy_out.forward(tape, &ph)?;
        let vh = tape.relu(&self.value_hidden.forward(tape, s)?)?;
        let value = self.value_out.forward(tape, &vh)?;
        Ok((logits, value))
    }
}
