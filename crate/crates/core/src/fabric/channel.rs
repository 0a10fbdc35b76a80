//! Dual-rail channel with four-phase handshake bookkeeping.
//!
//! Each logical bit is a pair of rails; a bit is `Neutral` when both are
//! low and `True`/`False` when exactly one is high. The request is implied
//! by data validity, and the receiver drives a single `ack` wire back.
//! Every mutation checks the protocol and reports the first violation.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rail {
    Neutral,
    True,
    False,
}

impl Rail {
    pub fn from_bit(bit: bool) -> Rail {
        if bit {
            Rail::True
        } else {
            Rail::False
        }
    }

    pub fn is_valid(self) -> bool {
        self != Rail::Neutral
    }
}

/// Handshake phase of a channel. Per token the sequence is exactly
/// `Idle → DataValid → Acked → Returning → Idle`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Rails neutral (or filling), ack low.
    Idle,
    /// All bits valid, ack low.
    DataValid,
    /// All bits valid, ack high.
    Acked,
    /// Rails returning to neutral, ack still high.
    Returning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    /// A bit was driven to the opposite value while valid.
    Exclusivity,
    /// A rail rose on a bit that was already valid.
    DoubleSet,
    /// Data rose while the acknowledge was still high.
    DataWhileAcked,
    /// Data returned to neutral before being acknowledged.
    NeutralBeforeAck,
    /// A neutral bit was reset.
    ResetNeutral,
    /// Acknowledge rose before every bit was valid.
    AckBeforeValid,
    /// Acknowledge fell before every bit was neutral.
    AckBeforeNeutral,
    /// Acknowledge toggled to the level it already had.
    AckGlitch,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::Exclusivity => "dual-rail exclusivity violated",
            ViolationKind::DoubleSet => "rail raised on an already valid bit",
            ViolationKind::DataWhileAcked => "data raised while ack high",
            ViolationKind::NeutralBeforeAck => "input went neutral before ack",
            ViolationKind::ResetNeutral => "reset of a neutral bit",
            ViolationKind::AckBeforeValid => "ack raised before data valid",
            ViolationKind::AckBeforeNeutral => "ack lowered before data neutral",
            ViolationKind::AckGlitch => "ack toggled to its current level",
        };
        f.write_str(s)
    }
}

/// Simulation-side identity carried alongside the rails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TokenMeta {
    pub id: u64,
}

#[derive(Debug, Clone)]
pub struct DualRailChannel {
    width: u32,
    rails: Vec<Rail>,
    valid_bits: u32,
    ack: bool,
    phase: Phase,
    meta: Option<TokenMeta>,
    cycles: u64,
}

/// Outcome of a rail transition that matters to the detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    None,
    AllValid,
    AllNeutral,
}

impl DualRailChannel {
    pub fn new(width: u32) -> Self {
        assert!(width > 0 && width <= 32, "channel width must be in 1..=32");
        Self {
            width,
            rails: vec![Rail::Neutral; width as usize],
            valid_bits: 0,
            ack: false,
            phase: Phase::Idle,
            meta: None,
            cycles: 0,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn ack(&self) -> bool {
        self.ack
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn rails(&self) -> &[Rail] {
        &self.rails
    }

    pub fn is_complete(&self) -> bool {
        self.valid_bits == self.width
    }

    pub fn is_neutral(&self) -> bool {
        self.valid_bits == 0
    }

    /// Completed four-phase cycles.
    pub fn cycles(&self) -> u64 {
        self.cycles
    }

    pub fn meta(&self) -> Option<TokenMeta> {
        self.meta
    }

    pub fn set_meta(&mut self, meta: TokenMeta) {
        self.meta = Some(meta);
    }

    /// Decoded value once every bit is valid.
    pub fn value(&self) -> Option<u32> {
        decode(&self.rails)
    }

    pub fn bit(&self, index: u32) -> Rail {
        self.rails[index as usize]
    }

    pub fn set_rail(&mut self, bit: u32, value: bool) -> Result<Completion, ViolationKind> {
        if self.ack {
            return Err(ViolationKind::DataWhileAcked);
        }
        let r = &mut self.rails[bit as usize];
        match *r {
            Rail::Neutral => {}
            existing if existing == Rail::from_bit(value) => return Err(ViolationKind::DoubleSet),
            _ => return Err(ViolationKind::Exclusivity),
        }
        *r = Rail::from_bit(value);
        self.valid_bits += 1;
        if self.valid_bits == self.width {
            self.phase = Phase::DataValid;
            Ok(Completion::AllValid)
        } else {
            Ok(Completion::None)
        }
    }

    pub fn reset_rail(&mut self, bit: u32) -> Result<Completion, ViolationKind> {
        if !self.ack {
            return Err(ViolationKind::NeutralBeforeAck);
        }
        let r = &mut self.rails[bit as usize];
        if *r == Rail::Neutral {
            return Err(ViolationKind::ResetNeutral);
        }
        *r = Rail::Neutral;
        self.valid_bits -= 1;
        self.phase = Phase::Returning;
        if self.valid_bits == 0 {
            self.meta = None;
            Ok(Completion::AllNeutral)
        } else {
            Ok(Completion::None)
        }
    }

    pub fn raise_ack(&mut self) -> Result<(), ViolationKind> {
        if self.ack {
            return Err(ViolationKind::AckGlitch);
        }
        if self.phase != Phase::DataValid {
            return Err(ViolationKind::AckBeforeValid);
        }
        self.ack = true;
        self.phase = Phase::Acked;
        Ok(())
    }

    pub fn lower_ack(&mut self) -> Result<(), ViolationKind> {
        if !self.ack {
            return Err(ViolationKind::AckGlitch);
        }
        if self.phase != Phase::Returning || self.valid_bits != 0 {
            return Err(ViolationKind::AckBeforeNeutral);
        }
        self.ack = false;
        self.phase = Phase::Idle;
        self.cycles += 1;
        Ok(())
    }
}

/// Dual-rail encoding of the low `width` bits of `value`.
pub fn encode(value: u32, width: u32) -> Vec<Rail> {
    (0..width).map(|i| Rail::from_bit(value >> i & 1 == 1)).collect()
}

/// Inverse of [`encode`]; `None` if any bit is neutral.
pub fn decode(rails: &[Rail]) -> Option<u32> {
    rails.iter().enumerate().try_fold(0u32, |acc, (i, r)| match r {
        Rail::True => Some(acc | 1 << i),
        Rail::False => Some(acc),
        Rail::Neutral => None,
    })
}
