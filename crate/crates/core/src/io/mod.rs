//! Dataset, checkpoint, configuration and scenario file formats.

pub mod checkpoint;
pub mod config;
pub mod mnist;
pub mod scenario;

pub use checkpoint::Checkpoint;
pub use config::RunConfig;
pub use mnist::{load_mnist_idx, load_mnist_split, parse_idx_images, parse_idx_labels, Dataset};
pub use scenario::{run_scenario, run_scenario_file, ScenarioOutcome};
