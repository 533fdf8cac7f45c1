//! Configuration, dataset generation, experiments, exporters, and the
//! command implementations behind the `beamsel` CLI.

pub mod commands;
pub mod config;
pub mod export;
pub mod generate;
pub mod study;

pub use commands::{cmd_eval, cmd_gen_dataset, cmd_gen_scene, cmd_map, cmd_train};
pub use config::{DataSpec, DualBandConfig, ExperimentConfig, NetworkConfig, Profile, Scenario};
pub use generate::{device_with_grid, mixture, relabel_generic, sample_rng, Generator, Split};
pub use study::{evaluate_all, generate_all, train_all, Evaluation, Method, MetricRow, Mismatch, ModelSet, StudyData};
