use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// How the GRU states are turned into the vector each head reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pooling {
    /// `h_k`
    LastState,
    /// mean of `h_1 … h_k`
    Average,
    /// one attention whose context feeds all four heads
    SharedAttention,
    /// one attention per category
    MultiAttention,
}

/// The eight compared architectures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VariantId {
    LastStateRNN,
    AvgRNN,
    AttentionRNN,
    MultiAttentionRNN,
    ProjectedLastStateRNN,
    ProjectedAvgRNN,
    ProjectedAttentionRNN,
    MultiProjectedAttentionRNN,
}

impl VariantId {
    pub const ALL: [VariantId; 8] = [
        VariantId::AttentionRNN,
        VariantId::MultiAttentionRNN,
        VariantId::MultiProjectedAttentionRNN,
        VariantId::ProjectedAttentionRNN,
        VariantId::AvgRNN,
        VariantId::LastStateRNN,
        VariantId::ProjectedAvgRNN,
        VariantId::ProjectedLastStateRNN,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VariantId::LastStateRNN => "LastStateRNN",
            VariantId::AvgRNN => "AvgRNN",
            VariantId::AttentionRNN => "AttentionRNN",
            VariantId::MultiAttentionRNN => "MultiAttentionRNN",
            VariantId::ProjectedLastStateRNN => "ProjectedLastStateRNN",
            VariantId::ProjectedAvgRNN => "ProjectedAvgRNN",
            VariantId::ProjectedAttentionRNN => "ProjectedAttentionRNN",
            VariantId::MultiProjectedAttentionRNN => "MultiProjectedAttentionRNN",
        }
    }

    pub fn projected(self) -> bool {
        matches!(
            self,
            VariantId::ProjectedLastStateRNN
                | VariantId::ProjectedAvgRNN
                | VariantId::ProjectedAttentionRNN
                | VariantId::MultiProjectedAttentionRNN
        )
    }

    pub fn pooling(self) -> Pooling {
        match self {
            VariantId::LastStateRNN | VariantId::ProjectedLastStateRNN => Pooling::LastState,
            VariantId::AvgRNN | VariantId::ProjectedAvgRNN => Pooling::Average,
            VariantId::AttentionRNN | VariantId::ProjectedAttentionRNN => Pooling::SharedAttention,
            VariantId::MultiAttentionRNN | VariantId::MultiProjectedAttentionRNN => Pooling::MultiAttention,
        }
    }

    pub fn attention_blocks(self) -> usize {
        match self.pooling() {
            Pooling::SharedAttention => 1,
            Pooling::MultiAttention => 4,
            _ => 0,
        }
    }

    /// The variant with the projection layer toggled.
    pub fn counterpart(self) -> VariantId {
        use VariantId::*;
        match self {
            LastStateRNN => ProjectedLastStateRNN,
            AvgRNN => ProjectedAvgRNN,
            AttentionRNN => ProjectedAttentionRNN,
            MultiAttentionRNN => MultiProjectedAttentionRNN,
            ProjectedLastStateRNN => LastStateRNN,
            ProjectedAvgRNN => AvgRNN,
            ProjectedAttentionRNN => AttentionRNN,
            MultiProjectedAttentionRNN => MultiAttentionRNN,
        }
    }
}

impl fmt::Display for VariantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VariantId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VariantId::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown variant '{s}'")))
    }
}
