//! Configuration, seeding, caching, campaign orchestration and result
//! emission.

mod cache;
mod campaigns;
mod config;
mod emit;

pub use cache::{cache_field, field_key, load_field, FieldCache, CACHE_ENV, CACHE_VERSION, FIELD_MAGIC};
pub use campaigns::{run_campaign, run_campaign_with};
pub use config::{
    ExitConfig, ExperimentConfig, FellerConfig, GridConfig, HeatConfig, MomentConfig, OffDiagConfig, OnDiagConfig,
    ScheduleConfig, Tolerances, CAMPAIGNS,
};
pub use emit::{emit, num, CampaignResult, Check, Format, Lineage, Summary, Table, Value, LINEAGE, SCHEMA_VERSION};
