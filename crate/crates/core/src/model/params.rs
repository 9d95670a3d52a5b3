use rand::Rng;

use super::arch::ArchitectureConfig;
use crate::error::{Error, Result};
use crate::seed::rng_for;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn zeros(name: impl Into<String>, shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            name: name.into(),
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Index of each layer's weight tensor inside [`ModelParams::tensors`]; the
/// bias always follows its weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Layout {
    pub fpm: Vec<usize>,
    pub spm: Vec<usize>,
    pub head: Vec<usize>,
    pub mu: usize,
    pub var: usize,
}

impl Layout {
    pub fn new(arch: &ArchitectureConfig) -> Self {
        let mut next = 0;
        let mut take = |n: usize| -> Vec<usize> {
            let ids = (0..n).map(|i| next + 2 * i).collect();
            next += 2 * n;
            ids
        };
        let fpm = take(arch.fpm_channels.len());
        let spm = take(arch.spm_blocks.len());
        let head = take(arch.head_hidden.len());
        let tail = take(2);
        Self {
            fpm,
            spm,
            head,
            mu: tail[0],
            var: tail[1],
        }
    }
}

/// Tensor names and shapes in canonical order, with each weight's fan-in.
pub(crate) fn tensor_specs(arch: &ArchitectureConfig) -> Vec<(String, Vec<usize>, usize)> {
    let mut specs = Vec::new();
    let mut push = |prefix: String, w_shape: Vec<usize>| {
        let fan_in = w_shape[1..].iter().product();
        let out = w_shape[0];
        specs.push((format!("{prefix}.weight"), w_shape, fan_in));
        specs.push((format!("{prefix}.bias"), vec![out], fan_in));
    };

    let mut c_in = arch.ssl_dim;
    for (i, &c) in arch.fpm_channels.iter().enumerate() {
        push(format!("fpm.conv{i}"), vec![c, c_in, arch.fpm_kernel]);
        c_in = c;
    }
    let mut c_in = 1;
    for (i, b) in arch.spm_blocks.iter().enumerate() {
        push(format!("spm.conv{i}"), vec![b.out_channels, c_in, b.kernel, b.kernel]);
        c_in = b.out_channels;
    }
    let mut width = arch.fused_dim;
    for (i, &h) in arch.head_hidden.iter().enumerate() {
        push(format!("head.fc{i}"), vec![h, width]);
        width = h;
    }
    push("head.mu".into(), vec![1, width]);
    push("head.var".into(), vec![1, width]);
    specs
}

/// All trainable weights plus the architecture they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: ArchitectureConfig,
    pub init_seed: u64,
    pub tensors: Vec<Tensor>,
}

impl ModelParams {
    /// All-zero parameters for `arch`.
    pub fn zeros(arch: &ArchitectureConfig) -> Result<Self> {
        arch.validate()?;
        let tensors = tensor_specs(arch)
            .into_iter()
            .map(|(name, shape, _)| Tensor::zeros(name, shape))
            .collect();
        Ok(Self {
            arch: arch.clone(),
            init_seed: 0,
            tensors,
        })
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.iter_mut().find(|t| t.name == name)
    }

    pub fn n_params(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// Check shapes against the architecture and that every value is finite.
    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        let specs = tensor_specs(&self.arch);
        if specs.len() != self.tensors.len() {
            return Err(Error::Shape(format!(
                "expected {} tensors, found {}",
                specs.len(),
                self.tensors.len()
            )));
        }
        for ((name, shape, _), t) in specs.iter().zip(&self.tensors) {
            if &t.name != name || &t.shape != shape || t.data.len() != shape.iter().product::<usize>() {
                return Err(Error::Shape(format!(
                    "tensor `{}` {:?} does not match expected `{name}` {shape:?}",
                    t.name, t.shape
                )));
            }
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::numeric(&t.name, "non-finite parameter"));
            }
        }
        Ok(())
    }
}

/// Fan-in scaled uniform weights `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`, zero
/// biases. Each tensor draws from its own stream keyed by `(seed, name)`.
pub fn init_params(arch: &ArchitectureConfig, seed: u64) -> Result<ModelParams> {
    arch.validate()?;
    let tensors = tensor_specs(arch)
        .into_iter()
        .map(|(name, shape, fan_in)| {
            let mut t = Tensor::zeros(name, shape);
            if t.name.ends_with(".weight") {
                let bound = 1.0 / (fan_in as f32).sqrt();
                let mut rng = rng_for(seed, &t.name);
                t.data.iter_mut().for_each(|w| *w = rng.gen_range(-bound..bound));
            }
            t
        })
        .collect();
    Ok(ModelParams {
        arch: arch.clone(),
        init_seed: seed,
        tensors,
    })
}

/// Gradients in the same order as [`ModelParams::tensors`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Self {
            names: params.tensors.iter().map(|t| t.name.clone()).collect(),
            values: params.tensors.iter().map(|t| vec![0.0; t.len()]).collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i].as_slice())
    }

    pub(crate) fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub(crate) fn pair_mut(&mut self, weight: usize) -> (&mut [f64], &mut [f64]) {
        let (lo, hi) = self.values.split_at_mut(weight + 1);
        (&mut lo[weight], &mut hi[0])
    }
}
