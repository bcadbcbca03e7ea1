use std::fmt;

use serde::{Deserialize, Serialize};

/// Logical timestamp carried by every message.
pub type Timestamp = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CommandName {
    Backup,
    Dynamic,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::Backup => "Backup",
            CommandName::Dynamic => "Dynamic",
        }
    }
}

/// A control command: which maneuver (2g or 3g turn) to fly, and when it was issued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Command {
    pub t: Timestamp,
    pub name: CommandName,
    pub kind: u8,
}

impl Command {
    pub fn dynamic(t: Timestamp, kind: u8) -> Self {
        Self { t, name: CommandName::Dynamic, kind }
    }

    pub fn backup(t: Timestamp) -> Self {
        Self { t, name: CommandName::Backup, kind: 2 }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{t: {}, name: \"{}\", type: {}}}", self.t, self.name.as_str(), self.kind)
    }
}

/// A sensor reading of physical health. Values may be non-positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Observation {
    pub t: Timestamp,
    pub sensor: u8,
    pub value: i32,
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{t: {}, sensor: {}, value: {}}}", self.t, self.sensor, self.value)
    }
}

/// Anything that travels over a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Message {
    Command(Command),
    Observation(Observation),
}

impl Message {
    pub fn t(&self) -> Timestamp {
        match self {
            Message::Command(c) => c.t,
            Message::Observation(o) => o.t,
        }
    }

    pub fn as_command(&self) -> Option<&Command> {
        match self {
            Message::Command(c) => Some(c),
            Message::Observation(_) => None,
        }
    }

    pub fn as_observation(&self) -> Option<&Observation> {
        match self {
            Message::Observation(o) => Some(o),
            Message::Command(_) => None,
        }
    }
}

impl From<Command> for Message {
    fn from(c: Command) -> Self {
        Message::Command(c)
    }
}

impl From<Observation> for Message {
    fn from(o: Observation) -> Self {
        Message::Observation(o)
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Message::Command(c) => c.fmt(f),
            Message::Observation(o) => o.fmt(f),
        }
    }
}

/// The value of one state variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Absent,
    Int(i64),
    Bool(bool),
    Command(Command),
    Observation(Observation),
    /// A channel: head is the oldest undelivered message.
    Queue(Vec<Message>),
    /// A collection of messages that is not a channel (e.g. received readings).
    List(Vec<Message>),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_command(&self) -> Option<Command> {
        match self {
            Value::Command(c) => Some(*c),
            _ => None,
        }
    }

    pub fn as_observation(&self) -> Option<Observation> {
        match self {
            Value::Observation(o) => Some(*o),
            _ => None,
        }
    }

    pub fn as_messages(&self) -> Option<&[Message]> {
        match self {
            Value::Queue(q) | Value::List(q) => Some(q),
            _ => None,
        }
    }

    pub fn is_absent(&self) -> bool {
        matches!(self, Value::Absent)
    }
}

impl From<Option<Command>> for Value {
    fn from(c: Option<Command>) -> Self {
        c.map_or(Value::Absent, Value::Command)
    }
}

impl From<Option<Observation>> for Value {
    fn from(o: Option<Observation>) -> Self {
        o.map_or(Value::Absent, Value::Observation)
    }
}

fn write_messages(f: &mut fmt::Formatter<'_>, msgs: &[Message]) -> fmt::Result {
    f.write_str("[")?;
    for (i, m) in msgs.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{m}")?;
    }
    f.write_str("]")
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Absent => f.write_str("none"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(v) => write!(f, "{v}"),
            Value::Command(c) => c.fmt(f),
            Value::Observation(o) => o.fmt(f),
            Value::Queue(q) | Value::List(q) => write_messages(f, q),
        }
    }
}
