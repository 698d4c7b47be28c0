use rayon::prelude::*;

use super::{run_batch, PipelineConfig, Quantizer, RDCurve};
use crate::context::{ContextKind, ContextModelSpec};
use crate::error::Result;
use crate::transforms::ImagePlane;

/// The three configurations compared by [`component_ablation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AblationArm {
    /// Uniform scalar quantization, no context.
    BaselineUniform,
    /// Gaussian test channel, no context.
    OptimalQuantizer,
    /// Gaussian test channel with context mean prediction.
    WithContext,
}

impl AblationArm {
    pub const ALL: [AblationArm; 3] = [
        AblationArm::BaselineUniform,
        AblationArm::OptimalQuantizer,
        AblationArm::WithContext,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AblationArm::BaselineUniform => "baseline_uniform",
            AblationArm::OptimalQuantizer => "optimal_quantizer",
            AblationArm::WithContext => "with_context",
        }
    }

    /// `base` adjusted for this arm. The context arm keeps the base context
    /// model unless it is `none`, in which case least squares is used.
    pub fn configure(&self, base: &PipelineConfig) -> PipelineConfig {
        let cfg = base.clone();
        match self {
            AblationArm::BaselineUniform => cfg
                .with_quantizer(Quantizer::Uniform)
                .with_context(ContextModelSpec::none()),
            AblationArm::OptimalQuantizer => cfg
                .with_quantizer(Quantizer::TestChannel)
                .with_context(ContextModelSpec::none()),
            AblationArm::WithContext => {
                let ctx = if base.context.kind() == ContextKind::None {
                    ContextModelSpec::causal_lsq()
                } else {
                    base.context.clone()
                };
                cfg.with_quantizer(Quantizer::TestChannel).with_context(ctx)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    pub entries: Vec<(AblationArm, RDCurve)>,
}

impl AblationTable {
    pub fn get(&self, arm: AblationArm) -> Option<&RDCurve> {
        self.entries.iter().find(|(a, _)| *a == arm).map(|(_, c)| c)
    }
}

/// Run every arm on the same inputs and seed over the base config's budgets.
pub fn component_ablation(image: &ImagePlane, base: &PipelineConfig) -> Result<AblationTable> {
    component_ablation_multi(std::slice::from_ref(image), base)
}

/// [`component_ablation`] averaged over several images.
pub fn component_ablation_multi(
    images: &[ImagePlane],
    base: &PipelineConfig,
) -> Result<AblationTable> {
    let entries = AblationArm::ALL
        .par_iter()
        .map(|arm| run_batch(images, &arm.configure(base)).map(|c| (*arm, c)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AblationTable { entries })
}
