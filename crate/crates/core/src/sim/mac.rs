use std::collections::VecDeque;

use crate::model::NodeId;
use crate::olsr::{HelloMessage, TcMessage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Hello,
    Tc,
    Data,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataPacket {
    pub flow_id: usize,
    pub seq_no: u64,
    pub origin: NodeId,
    pub final_dest: NodeId,
    pub next_hop: NodeId,
    pub ttl: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Hello(HelloMessage),
    Tc { msg: TcMessage, msg_seq: u16, ttl: u8 },
    Data(DataPacket),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    /// Transmitter of this hop.
    pub src: NodeId,
    pub payload_size: usize,
    pub payload: Payload,
}

impl Frame {
    pub fn kind(&self) -> FrameKind {
        match self.payload {
            Payload::Hello(_) => FrameKind::Hello,
            Payload::Tc { .. } => FrameKind::Tc,
            Payload::Data(_) => FrameKind::Data,
        }
    }

    /// Whether `node` is an intended receiver (broadcast control, or the
    /// addressed next hop of a data frame).
    pub fn addressed_to(&self, node: NodeId) -> bool {
        match &self.payload {
            Payload::Data(d) => d.next_hop == node,
            _ => true,
        }
    }

    pub fn data(&self) -> Option<&DataPacket> {
        match &self.payload {
            Payload::Data(d) => Some(d),
            _ => None,
        }
    }
}

/// Serialization time with no preamble or header overhead.
pub fn frame_airtime(payload_size: usize, bandwidth: f64) -> f64 {
    payload_size as f64 * 8.0 / bandwidth
}

/// Bounded FIFO of frames waiting for the transmitter. The frame on the air
/// is not counted.
#[derive(Debug, Clone)]
pub struct MacQueue {
    frames: VecDeque<Frame>,
    capacity: usize,
}

impl MacQueue {
    pub fn new(capacity: usize) -> Self {
        MacQueue {
            frames: VecDeque::with_capacity(capacity.min(1024)),
            capacity,
        }
    }

    /// Appends, or hands the frame back when the queue is full.
    pub fn push(&mut self, frame: Frame) -> Result<(), Frame> {
        if self.frames.len() >= self.capacity {
            return Err(frame);
        }
        self.frames.push_back(frame);
        Ok(())
    }

    pub fn pop(&mut self) -> Option<Frame> {
        self.frames.pop_front()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn drain(&mut self) -> impl Iterator<Item = Frame> + '_ {
        self.frames.drain(..)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Frame> {
        self.frames.iter()
    }
}
