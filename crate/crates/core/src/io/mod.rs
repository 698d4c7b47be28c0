//! File formats and synthetic inputs.

pub mod container;
pub mod parse;
pub mod pgm;
pub mod synthetic;
pub mod table;

pub use container::{decode_container, encode_container, ContainerPayload};
pub use parse::{parse_budget_list, parse_size};
pub use pgm::{decode_pgm, encode_pgm, load_image, write_pgm};
pub use synthetic::{generate_source, SyntheticKind, SyntheticSourceSpec};
pub use table::{format_float, read_table, write_table, Table};
