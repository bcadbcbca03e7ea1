//! Generic finite-state-machine substrate shared by the checker and the models.

pub mod channel;
pub mod model;
pub mod state;
pub mod value;

pub use channel::{channel_push, channel_take, delivery_window, WindowError};
pub use model::{Domain, FairnessClass, Model, ModelError, ProcessDef, VarDecl};
pub use state::{canonical_digest, StateDigest, SystemState};
pub use value::{Command, CommandName, Message, Observation, Timestamp, Value};
