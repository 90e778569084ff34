use crate::reward::RewardFamily;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("mean {value} is outside the {family} domain")]
    MeanOutOfDomain { family: RewardFamily, value: f64 },

    #[error("invalid {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("arm {arm} does not exist (instance has {arms} arms)")]
    InvalidArm { arm: usize, arms: usize },

    #[error("arm has no pulls; the round-robin phase must run first")]
    NoPulls,

    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("at least {min} arms are required, found {found}")]
    TooFewArms { min: usize, found: usize },

    #[error("horizon {horizon} is shorter than the number of arms {arms}")]
    HorizonTooShort { horizon: u64, arms: usize },

    #[error("arm mean {mu_i} is not below the optimal mean {mu_star}")]
    NotSuboptimal { mu_i: f64, mu_star: f64 },

    #[error("record {index}: {clicks} clicks exceed {impressions} impressions")]
    InvalidRecord {
        index: usize,
        clicks: u64,
        impressions: u64,
    },

    #[error("at least one {0} is required")]
    Empty(&'static str),
}
