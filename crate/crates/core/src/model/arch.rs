use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// SSL branch and spectrogram branch, concatenated.
    DualBranch,
    /// SSL branch only (the layer-selection baseline).
    SslOnly,
}

/// One 2-D block of the spectrogram module: conv → ReLU → 2×2 max-pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpmBlock {
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
}

impl SpmBlock {
    pub const fn new(out_channels: usize, kernel: usize, stride: usize) -> Self {
        Self {
            out_channels,
            kernel,
            stride,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureConfig {
    pub ssl_dim: usize,
    pub fpm_channels: Vec<usize>,
    pub fpm_kernel: usize,
    pub fpm_stride: usize,
    pub spm_blocks: Vec<SpmBlock>,
    pub branch_embed_dim: usize,
    pub fused_dim: usize,
    pub head_hidden: Vec<usize>,
    pub variant: Variant,
}

impl ArchitectureConfig {
    /// Full-size configuration: 1920-dim layer-9 features, 320 + 320 fused.
    pub fn full() -> Self {
        Self {
            ssl_dim: 1920,
            fpm_channels: vec![512, 512, 320],
            fpm_kernel: 3,
            fpm_stride: 2,
            spm_blocks: vec![
                SpmBlock::new(32, 3, 1),
                SpmBlock::new(64, 3, 1),
                SpmBlock::new(128, 3, 1),
                SpmBlock::new(320, 3, 1),
            ],
            branch_embed_dim: 320,
            fused_dim: 640,
            head_hidden: vec![256, 128, 64],
            variant: Variant::DualBranch,
        }
    }

    /// Small configuration that trains in seconds on one CPU core against
    /// pseudo-extracted features.
    pub fn desk(ssl_dim: usize) -> Self {
        Self {
            ssl_dim,
            fpm_channels: vec![16, 16, 8],
            fpm_kernel: 3,
            fpm_stride: 2,
            spm_blocks: vec![SpmBlock::new(4, 3, 2), SpmBlock::new(8, 3, 2)],
            branch_embed_dim: 8,
            fused_dim: 16,
            head_hidden: vec![16, 16, 8],
            variant: Variant::DualBranch,
        }
    }

    /// Tiny configuration used by gradient checks.
    pub fn tiny() -> Self {
        Self {
            ssl_dim: 8,
            fpm_channels: vec![6, 5, 4],
            fpm_kernel: 3,
            fpm_stride: 2,
            spm_blocks: vec![SpmBlock::new(3, 3, 1), SpmBlock::new(4, 2, 1)],
            branch_embed_dim: 4,
            fused_dim: 8,
            head_hidden: vec![8, 8, 8],
            variant: Variant::DualBranch,
        }
    }

    /// Same network with the spectrogram branch removed.
    pub fn ssl_only(mut self) -> Self {
        self.variant = Variant::SslOnly;
        self.spm_blocks.clear();
        self.fused_dim = self.branch_embed_dim;
        self
    }

    pub fn uses_spectrogram(&self) -> bool {
        self.variant == Variant::DualBranch
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.ssl_dim == 0 || self.branch_embed_dim == 0 {
            return bad("ssl_dim and branch_embed_dim must be positive".into());
        }
        if self.fpm_channels.is_empty() {
            return bad("feature processing module needs at least one conv layer".into());
        }
        if self.fpm_kernel == 0 || self.fpm_stride == 0 || self.fpm_channels.contains(&0) {
            return bad("feature processing module has a zero-sized layer".into());
        }
        if *self.fpm_channels.last().unwrap() != self.branch_embed_dim {
            return bad(format!(
                "last FPM channel count {} must equal branch_embed_dim {}",
                self.fpm_channels.last().unwrap(),
                self.branch_embed_dim
            ));
        }
        if self.head_hidden.is_empty() || self.head_hidden.contains(&0) {
            return bad("MOS mapping head needs at least one non-empty hidden layer".into());
        }
        match self.variant {
            Variant::DualBranch => {
                if self.spm_blocks.is_empty() {
                    return bad("dual-branch model needs spectrogram blocks".into());
                }
                if self
                    .spm_blocks
                    .iter()
                    .any(|b| b.out_channels == 0 || b.kernel == 0 || b.stride == 0)
                {
                    return bad("spectrogram module has a zero-sized block".into());
                }
                if self.spm_blocks.last().unwrap().out_channels != self.branch_embed_dim {
                    return bad("last spectrogram block must emit branch_embed_dim channels".into());
                }
                if self.fused_dim != 2 * self.branch_embed_dim {
                    return bad("dual-branch fused_dim must be 2 * branch_embed_dim".into());
                }
            }
            Variant::SslOnly => {
                if !self.spm_blocks.is_empty() {
                    return bad("ssl_only model must not declare spectrogram blocks".into());
                }
                if self.fused_dim != self.branch_embed_dim {
                    return bad("ssl_only fused_dim must equal branch_embed_dim".into());
                }
            }
        }
        Ok(())
    }

    /// Smallest SSL frame count for which every FPM layer emits output.
    pub fn min_ssl_frames(&self) -> usize {
        self.fpm_channels
            .iter()
            .fold(1, |need, _| (need - 1) * self.fpm_stride + self.fpm_kernel)
    }

    /// Smallest spectrogram extent (per axis) that survives every block.
    pub fn min_spec_extent(&self) -> usize {
        self.spm_blocks
            .iter()
            .rev()
            .fold(1, |need, b| (2 * need - 1) * b.stride + b.kernel)
    }
}
