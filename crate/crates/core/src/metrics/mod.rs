//! Search efficiency and scanpath similarity metrics.

mod aggregate;
mod curve;
mod multimatch;

pub use aggregate::{
    human_auc, human_model, mm_correlation, per_subject_curves, within_human, wh_hm_mm, Correlation, MmOptions,
    TrialMm,
};
pub use curve::{auc, cumulative_curve, CumulativeCurve};
pub use multimatch::{
    align, alignment_cost, multimatch, multimatch_fixations, saccades, simplify, Alignment, MultiMatchScore, Saccade,
    Simplify,
};
