//! Layer schedules, energy statistics along walks, and Monte Carlo checks of
//! the per-layer energy and resistance bounds.

mod energy;
mod lemmas;
mod schedule;

pub use energy::{
    bridge_energy_check, bridge_resistance_check, energy_statistics, layer_resistance,
    orthogonal_increment_check, run_energy_trials, usable, DeterministicCheck, EnergyTrial,
    LayerRecord, TrialConfig, DETERMINISTIC_RTOL,
};
pub use lemmas::{
    cut_edge_frequency, failed_layers, general_tail_trial, hop_ball, lemma_frequencies,
    summarize_trials, union_frequencies, union_resistance_bound, CampaignReport, CutEdgeStat,
    OrthogonalCheck, TailReport, TailTrial,
};
pub use schedule::{
    build_cutsets, layer_schedule_line, LayerSchedule, Layering, ScheduleKind, ABSORBED,
    STABILITY_TOL,
};
