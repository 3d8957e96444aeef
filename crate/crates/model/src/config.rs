use farm_tensor::Scalar;

/// Configuration of the modular state representation.
#[derive(Debug, Clone, PartialEq)]
pub struct FarmConfig {
    /// Number of recurrent modules n.
    pub n_modules: usize,
    /// Per-module hidden size d_h.
    pub d_hidden: usize,
    /// Bottleneck width of the shared feature projections W1/W2.
    pub proj_dim: usize,
    /// Heads used when modules retrieve information from each other.
    pub sharing_heads: usize,
    /// Ablation switch: when off, feature coefficients are forced to 1.
    pub feature_attention: bool,
    /// Ablation switch: when off, the retrieval input is zeroed and module
    /// states evolve independently.
    pub sharing: bool,
    /// Action-space size (previous action enters the context one-hot).
    pub num_actions: usize,
    /// Task-embedding length; tasks without language use a zero vector of
    /// this length so the context layout never changes.
    pub task_dim: usize,
}

impl FarmConfig {
    /// The 4-module / 2-head arrangement used on 99x99 tasks.
    pub fn ballet(num_actions: usize) -> Self {
        FarmConfig {
            n_modules: 4,
            d_hidden: 128,
            proj_dim: 16,
            sharing_heads: 2,
            feature_attention: true,
            sharing: true,
            num_actions,
            task_dim: 128,
        }
    }

    /// The 8-module / 4-head arrangement used on 56x56 tasks.
    pub fn keybox(num_actions: usize) -> Self {
        FarmConfig {
            n_modules: 8,
            d_hidden: 128,
            proj_dim: 16,
            sharing_heads: 4,
            feature_attention: true,
            sharing: true,
            num_actions,
            task_dim: 128,
        }
    }

    /// Length of the module context [task, h_prev, action one-hot, reward].
    pub fn context_len(&self) -> usize {
        self.task_dim + self.d_hidden + self.num_actions + 1
    }

    /// Size of the concatenated agent state fed to the heads.
    pub fn policy_state_size(&self) -> usize {
        self.n_modules * self.d_hidden
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_modules == 0 {
            return Err("n_modules must be >= 1".into());
        }
        if self.d_hidden % self.sharing_heads != 0 {
            return Err(format!(
                "d_hidden {} not divisible by sharing_heads {}",
                self.d_hidden, self.sharing_heads
            ));
        }
        if self.num_actions == 0 {
            return Err("num_actions must be >= 1".into());
        }
        Ok(())
    }

    pub fn head_scale<S: Scalar>(&self) -> S {
        S::from_f64(1.0 / (self.d_hidden as f64).sqrt())
    }
}
