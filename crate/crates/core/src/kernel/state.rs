//! States, their canonical byte encoding, and fixed-width digests.

use std::fmt;

use sha2::{Digest as _, Sha256};

use super::value::{Command, CommandName, Message, Observation, Value};

/// A total assignment over a model's declared variables, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SystemState {
    values: Vec<Value>,
}

impl SystemState {
    pub fn new(values: Vec<Value>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn get(&self, var: usize) -> &Value {
        &self.values[var]
    }

    pub fn set(&mut self, var: usize, value: Value) {
        self.values[var] = value;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Canonical, self-delimiting byte encoding. Equal states encode to equal
    /// bytes and vice versa.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.values.len() * 4);
        write_varint(&mut out, self.values.len() as u64);
        for v in &self.values {
            encode_value(&mut out, v);
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader { bytes, pos: 0 };
        let n = r.varint()? as usize;
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(r.value()?);
        }
        if r.pos != bytes.len() {
            return Err(DecodeError("trailing bytes"));
        }
        Ok(Self { values })
    }

    pub fn digest(&self) -> StateDigest {
        StateDigest::of_encoding(&self.encode())
    }
}

/// 128-bit state fingerprint, stable across runs and platforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateDigest(pub u128);

impl StateDigest {
    pub fn of_encoding(bytes: &[u8]) -> Self {
        let hash = Sha256::digest(bytes);
        let mut head = [0u8; 16];
        head.copy_from_slice(&hash[..16]);
        StateDigest(u128::from_be_bytes(head))
    }
}

impl fmt::Display for StateDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

/// Digest of a state. Convenience wrapper over [`SystemState::digest`].
pub fn canonical_digest(state: &SystemState) -> StateDigest {
    state.digest()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed state encoding: {0}")]
pub struct DecodeError(&'static str);

fn write_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

fn unzigzag(v: u64) -> i64 {
    ((v >> 1) as i64) ^ -((v & 1) as i64)
}

fn encode_command(out: &mut Vec<u8>, c: &Command) {
    write_varint(out, c.t as u64);
    out.push(match c.name {
        CommandName::Backup => 0,
        CommandName::Dynamic => 1,
    });
    out.push(c.kind);
}

fn encode_observation(out: &mut Vec<u8>, o: &Observation) {
    write_varint(out, o.t as u64);
    out.push(o.sensor);
    write_varint(out, zigzag(o.value as i64));
}

fn encode_message(out: &mut Vec<u8>, m: &Message) {
    match m {
        Message::Command(c) => {
            out.push(0);
            encode_command(out, c);
        }
        Message::Observation(o) => {
            out.push(1);
            encode_observation(out, o);
        }
    }
}

fn encode_value(out: &mut Vec<u8>, v: &Value) {
    match v {
        Value::Absent => out.push(0),
        Value::Int(i) => {
            out.push(1);
            write_varint(out, zigzag(*i));
        }
        Value::Bool(b) => {
            out.push(2);
            out.push(*b as u8);
        }
        Value::Command(c) => {
            out.push(3);
            encode_command(out, c);
        }
        Value::Observation(o) => {
            out.push(4);
            encode_observation(out, o);
        }
        Value::Queue(ms) | Value::List(ms) => {
            out.push(if matches!(v, Value::Queue(_)) { 5 } else { 6 });
            write_varint(out, ms.len() as u64);
            for m in ms {
                encode_message(out, m);
            }
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn byte(&mut self) -> Result<u8, DecodeError> {
        let b = *self.bytes.get(self.pos).ok_or(DecodeError("unexpected end"))?;
        self.pos += 1;
        Ok(b)
    }

    fn varint(&mut self) -> Result<u64, DecodeError> {
        let mut v = 0u64;
        for shift in (0..64).step_by(7) {
            let b = self.byte()?;
            v |= ((b & 0x7f) as u64) << shift;
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
        Err(DecodeError("varint overflow"))
    }

    fn timestamp(&mut self) -> Result<u32, DecodeError> {
        u32::try_from(self.varint()?).map_err(|_| DecodeError("timestamp overflow"))
    }

    fn command(&mut self) -> Result<Command, DecodeError> {
        let t = self.timestamp()?;
        let name = match self.byte()? {
            0 => CommandName::Backup,
            1 => CommandName::Dynamic,
            _ => return Err(DecodeError("bad command name")),
        };
        Ok(Command { t, name, kind: self.byte()? })
    }

    fn observation(&mut self) -> Result<Observation, DecodeError> {
        let t = self.timestamp()?;
        let sensor = self.byte()?;
        let value = i32::try_from(unzigzag(self.varint()?)).map_err(|_| DecodeError("observation value overflow"))?;
        Ok(Observation { t, sensor, value })
    }

    fn message(&mut self) -> Result<Message, DecodeError> {
        match self.byte()? {
            0 => Ok(Message::Command(self.command()?)),
            1 => Ok(Message::Observation(self.observation()?)),
            _ => Err(DecodeError("bad message tag")),
        }
    }

    fn value(&mut self) -> Result<Value, DecodeError> {
        Ok(match self.byte()? {
            0 => Value::Absent,
            1 => Value::Int(unzigzag(self.varint()?)),
            2 => Value::Bool(self.byte()? != 0),
            3 => Value::Command(self.command()?),
            4 => Value::Observation(self.observation()?),
            tag @ (5 | 6) => {
                let n = self.varint()? as usize;
                let mut ms = Vec::with_capacity(n.min(1024));
                for _ in 0..n {
                    ms.push(self.message()?);
                }
                if tag == 5 {
                    Value::Queue(ms)
                } else {
                    Value::List(ms)
                }
            }
            _ => return Err(DecodeError("bad value tag")),
        })
    }
}
