//! Channels as queues with deterministic writes and windowed nondeterministic reads.

use thiserror::Error;

use super::value::Message;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("channel index {index} outside delivery window 1..={window} (queue length {len})")]
pub struct WindowError {
    pub index: usize,
    pub window: usize,
    pub len: usize,
}

/// Append `m` at the tail.
pub fn channel_push(queue: &[Message], m: Message) -> Vec<Message> {
    let mut out = Vec::with_capacity(queue.len() + 1);
    out.extend_from_slice(queue);
    out.push(m);
    out
}

/// Number of messages the channel may deliver next: `min(eta, len)`.
pub fn delivery_window(queue: &[Message], eta: usize) -> usize {
    eta.min(queue.len())
}

/// Remove and return the message at 1-based position `index` (head = 1,
/// the oldest undelivered message). Only the first `eta` positions are
/// deliverable.
pub fn channel_take(queue: &[Message], index: usize, eta: usize) -> Result<(Message, Vec<Message>), WindowError> {
    let window = delivery_window(queue, eta);
    if index == 0 || index > window {
        return Err(WindowError { index, window, len: queue.len() });
    }
    let mut rest = queue.to_vec();
    let taken = rest.remove(index - 1);
    Ok((taken, rest))
}
