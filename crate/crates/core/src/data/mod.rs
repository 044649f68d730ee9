//! Feature distributions, teachers and datasets.

mod csv;
mod dataset;
mod dist;
mod teacher;

pub use self::csv::{load_csv_dataset, parse_csv_dataset};
pub use dataset::Dataset;
pub use dist::{beta_radial_radius, sample_features, DistSpec, FeatureSampler, MixtureSpec};
pub use teacher::{gen_labels, label_dataset, Teacher, TeacherSpec};
