//! Deterministic binary-stack channel: each transmit signal is a stack of
//! q bit levels (index 0 on top), a link of strength n delivers the top n
//! levels shifted to the bottom of the receive stack, and colliding levels
//! add over GF(2).

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LdmError {
    /// A user has no incoming signal path of positive strength.
    UnreachableUser { user: u8 },
    ShiftOutOfRange { shift: u32, len: usize },
    LengthMismatch { expected: usize, got: usize },
    BadBitChar(char),
}

impl fmt::Display for LdmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LdmError::UnreachableUser { user } => {
                write!(f, "user {user} is unreachable (zero-strength links)")
            }
            LdmError::ShiftOutOfRange { shift, len } => {
                write!(f, "shift {shift} exceeds stack height {len}")
            }
            LdmError::LengthMismatch { expected, got } => {
                write!(f, "expected a stack of {expected} levels, got {got}")
            }
            LdmError::BadBitChar(c) => write!(f, "invalid bit character {c:?}"),
        }
    }
}

impl std::error::Error for LdmError {}

/// How to size the common stack height q.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QMode {
    /// q covers the wireless links only.
    Wireless,
    /// q also covers the fronthaul capacity, for transcripts that carry
    /// fronthaul payloads in-band.
    WithFronthaul,
}

/// Integer link strengths. nd1: HeNB to U1; nd2: eNB to U1 (the cross
/// link when it is the stronger route is still nd2); nd3: eNB to U2;
/// nf: fronthaul bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct ChannelParams {
    pub nd1: u32,
    pub nd2: u32,
    pub nd3: u32,
    pub nf: u32,
    pub q: u32,
}

pub fn make_channel(
    nd1: u32,
    nd2: u32,
    nd3: u32,
    nf: u32,
    mode: QMode,
) -> Result<ChannelParams, LdmError> {
    if nd3 == 0 {
        return Err(LdmError::UnreachableUser { user: 2 });
    }
    if nd1.max(nd2) == 0 {
        return Err(LdmError::UnreachableUser { user: 1 });
    }
    let wireless = nd1.max(nd2).max(nd3);
    let q = match mode {
        QMode::Wireless => wireless,
        QMode::WithFronthaul => wireless.max(nf),
    };
    Ok(ChannelParams { nd1, nd2, nd3, nf, q })
}

/// Map Gaussian link budgets to integer strengths: each wireless link of
/// receive power P*g contributes ceil(log2(P*g)) levels (floored at 0),
/// and a fronthaul of capacity cf bits/use carries ceil(cf) levels.
pub fn gaussian_to_ldm(
    p: f64,
    gains: (f64, f64, f64),
    cf: f64,
) -> Result<ChannelParams, LdmError> {
    let level = |g: f64| -> u32 {
        let snr = p * g;
        if snr <= 1.0 {
            0
        } else {
            snr.log2().ceil() as u32
        }
    };
    let nf = if cf <= 0.0 { 0 } else { cf.ceil() as u32 };
    let mode = if cf > 0.0 {
        QMode::WithFronthaul
    } else {
        QMode::Wireless
    };
    make_channel(level(gains.0), level(gains.1), level(gains.2), nf, mode)
}

/// A transmit or receive stack; index 0 is the top (most significant)
/// level.
#[derive(Clone, PartialEq, Eq)]
pub struct BitVec {
    levels: Vec<bool>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec { levels: vec![false; len] }
    }

    pub fn from_levels(levels: Vec<bool>) -> Self {
        BitVec { levels }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.levels[i]
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.levels[i] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.levels.iter().all(|&b| !b)
    }

    pub fn xor_assign(&mut self, rhs: &BitVec) -> Result<(), LdmError> {
        if self.len() != rhs.len() {
            return Err(LdmError::LengthMismatch { expected: self.len(), got: rhs.len() });
        }
        for (a, b) in self.levels.iter_mut().zip(&rhs.levels) {
            *a ^= b;
        }
        Ok(())
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.levels {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

impl FromStr for BitVec {
    type Err = LdmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(LdmError::BadBitChar(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitVec::from_levels)
    }
}

/// Down-shift by k levels: level i of the result is level i-k of the
/// input, with zeros entering from the top. Models a link k levels
/// weaker than the stack height.
pub fn downshift(x: &BitVec, k: u32) -> Result<BitVec, LdmError> {
    let k = k as usize;
    if k > x.len() {
        return Err(LdmError::ShiftOutOfRange { shift: k as u32, len: x.len() });
    }
    let mut out = BitVec::zeros(x.len());
    for i in k..x.len() {
        out.set(i, x.get(i - k));
    }
    Ok(out)
}

/// One channel use: y1 hears both transmitters, y2 hears only the eNB.
pub fn channel_outputs(
    x1: &BitVec,
    x2: &BitVec,
    n: &ChannelParams,
) -> Result<(BitVec, BitVec), LdmError> {
    let q = n.q as usize;
    for x in [x1, x2] {
        if x.len() != q {
            return Err(LdmError::LengthMismatch { expected: q, got: x.len() });
        }
    }
    let mut y1 = downshift(x1, n.q - n.nd1)?;
    y1.xor_assign(&downshift(x2, n.q - n.nd2)?)?;
    let y2 = downshift(x2, n.q - n.nd3)?;
    Ok((y1, y2))
}
