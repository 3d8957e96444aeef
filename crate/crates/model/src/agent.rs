//! Full agent: recurrent observation encoder, optional instruction
//! encoder, modular state representation, and policy/value heads, with one
//! flat parameter namespace for checkpoints.

use std::path::Path;

use farm_tensor::{checkpoint, ParamMap, Result, Scalar, Tape, Tensor};
use farm_nets::{ConvLstmState, LanguageEncoder, LstmState, ObservationEncoder, PolicyValueHeads};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::FarmConfig;
use crate::farm::{Farm, FarmStepTrace};

pub const HEAD_HIDDEN: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub obs_hw: (usize, usize),
    pub farm: FarmConfig,
    /// Instruction vocabulary; empty plus `use_language: false` means the
    /// task embedding is a zero vector.
    pub use_language: bool,
    pub vocab: Vec<String>,
}

impl AgentConfig {
    pub fn num_actions(&self) -> usize {
        self.farm.num_actions
    }
}

#[derive(Clone)]
pub struct AgentState<S: Scalar> {
    pub conv: ConvLstmState<S>,
    pub modules: Vec<LstmState<S>>,
}

impl<S: Scalar> AgentState<S> {
    /// Detached numeric snapshot, for storing at unroll boundaries.
    pub fn snapshot(&self) -> StateSnapshot<S> {
        StateSnapshot {
            conv_shape: self.conv.h.shape().to_vec(),
            conv_h: self.conv.h.data().to_vec(),
            conv_c: self.conv.c.data().to_vec(),
            d_hidden: self.modules[0].h.numel(),
            modules: self
                .modules
                .iter()
                .flat_map(|m| [m.h.data().to_vec(), m.c.data().to_vec()])
                .collect(),
        }
    }
}

/// Plain-data recurrent state (no tape participation), safe to move across
/// threads and replay from.
#[derive(Clone, Debug)]
pub struct StateSnapshot<S: Scalar> {
    conv_shape: Vec<usize>,
    conv_h: Vec<S>,
    conv_c: Vec<S>,
    d_hidden: usize,
    modules: Vec<Vec<S>>, // h0, c0, h1, c1, ...
}

impl<S: Scalar> StateSnapshot<S> {
    pub fn restore(&self) -> AgentState<S> {
        let conv = ConvLstmState {
            h: Tensor::from_vec(self.conv_h.clone(), &self.conv_shape).expect("finite state"),
            c: Tensor::from_vec(self.conv_c.clone(), &self.conv_shape).expect("finite state"),
        };
        let modules = self
            .modules
            .chunks_exact(2)
            .map(|hc| LstmState {
                h: Tensor::from_vec(hc[0].clone(), &[1, self.d_hidden]).expect("finite state"),
                c: Tensor::from_vec(hc[1].clone(), &[1, self.d_hidden]).expect("finite state"),
            })
            .collect();
        AgentState { conv, modules }
    }
}

pub struct AgentStepOutput<S: Scalar> {
    pub logits: Tensor<S>,
    pub value: Tensor<S>,
    pub policy_state: Tensor<S>,
    pub state: AgentState<S>,
    pub trace: FarmStepTrace<S>,
}

pub struct FarmAgent<S: Scalar> {
    pub config: AgentConfig,
    params: ParamMap<S>,
    encoder: ObservationEncoder<S>,
    language: Option<LanguageEncoder<S>>,
    farm: Farm<S>,
    heads: PolicyValueHeads<S>,
}

impl<S: Scalar> FarmAgent<S> {
    pub fn new(config: AgentConfig, init_seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
        let mut params = ParamMap::new();
        let encoder = ObservationEncoder::new(&mut params, "farm/encoder", &mut rng, config.obs_hw);
        let language = config.use_language.then(|| {
            LanguageEncoder::new(
                &mut params,
                "lang",
                &mut rng,
                &config.vocab,
                config.farm.task_dim,
                config.farm.task_dim,
            )
        });
        let farm = Farm::new(
            &mut params,
            "farm",
            &mut rng,
            config.farm.clone(),
            encoder.feature_dim(),
            encoder.num_positions(),
        );
        let heads = PolicyValueHeads::new(
            &mut params,
            "heads",
            &mut rng,
            config.farm.policy_state_size(),
            HEAD_HIDDEN,
            config.farm.num_actions,
        );
        FarmAgent {
            config,
            params,
            encoder,
            language,
            farm,
            heads,
        }
    }

    pub fn params(&self) -> &ParamMap<S> {
        &self.params
    }

    pub fn farm(&self) -> &Farm<S> {
        &self.farm
    }

    pub fn num_params(&self) -> usize {
        self.params.total_params()
    }

    /// Episode-start state: zeroed encoder maps, learned module initials.
    pub fn initial_state(&self) -> AgentState<S> {
        AgentState {
            conv: self.encoder.zero_state(),
            modules: self.farm.initial_module_states(),
        }
    }

    pub fn encode_task(&self, tape: &Tape<S>, tokens: &[String]) -> Result<Tensor<S>> {
        match &self.language {
            Some(lang) => lang.encode_tokens(tape, tokens),
            None => Ok(Tensor::zeros(&[1, self.config.farm.task_dim])),
        }
    }

    /// One control step. `prev_action` is None at episode starts.
    pub fn step(
        &self,
        tape: &Tape<S>,
        observation: &Tensor<S>,
        tokens: &[String],
        prev_action: Option<usize>,
        prev_reward: S,
        state: &AgentState<S>,
    ) -> Result<AgentStepOutput<S>> {
        let (z, conv_next) = self.encoder.forward(tape, observation, &state.conv)?;
        let task = self.encode_task(tape, tokens)?;
        let (policy_state, modules_next, trace) =
            self.farm
                .step(tape, &z, &task, prev_action, prev_reward, &state.modules)?;
        let (logits, value) = self.heads.forward(tape, &policy_state)?;
        Ok(AgentStepOutput {
            logits,
            value,
            policy_state,
            state: AgentState {
                conv: conv_next,
                modules: modules_next,
            },
            trace,
        })
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        checkpoint::save(path, &self.params)
    }

    pub fn load_checkpoint(&self, path: &Path) -> Result<()> {
        checkpoint::load_into(path, &self.params)
    }
}
