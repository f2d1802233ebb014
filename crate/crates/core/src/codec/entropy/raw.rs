//! Fixed-length serialization used when the entropy stage is disabled.

use crate::error::{Error, Result};

#[derive(Debug, Default, Clone)]
pub(crate) struct BitWriter {
    out: Vec<u8>,
    acc: u64,
    filled: u32,
}

impl BitWriter {
    pub(crate) fn put(&mut self, value: u32, nbits: u32) {
        debug_assert!(nbits <= 32);
        if nbits == 0 {
            return;
        }
        self.acc = (self.acc << nbits) | (value as u64 & ((1u64 << nbits) - 1));
        self.filled += nbits;
        while self.filled >= 8 {
            self.filled -= 8;
            self.out.push((self.acc >> self.filled) as u8);
        }
    }

    pub(crate) fn finish(mut self) -> Vec<u8> {
        if self.filled > 0 {
            let pad = 8 - self.filled;
            self.put(0, pad);
        }
        self.out
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub(crate) fn new(data: &'a [u8]) -> Self {
        BitReader { data, pos: 0 }
    }

    pub(crate) fn get(&mut self, nbits: u32) -> Result<u32> {
        let mut v = 0u32;
        for _ in 0..nbits {
            let byte = *self.data.get(self.pos / 8).ok_or(Error::Truncated)?;
            let bit = (byte >> (7 - self.pos % 8)) & 1;
            v = (v << 1) | bit as u32;
            self.pos += 1;
        }
        Ok(v)
    }
}

fn bit_len(v: u32) -> u32 {
    32 - v.leading_zeros()
}

/// `cbf`, then last position, magnitude width and sign-magnitude levels.
pub(crate) fn write_residual_raw(w: &mut BitWriter, levels: &[i32]) {
    let Some(last) = levels.iter().rposition(|&v| v != 0) else {
        w.put(0, 1);
        return;
    };
    w.put(1, 1);
    w.put(last as u32, levels.len().trailing_zeros());
    let width = levels[..=last].iter().map(|v| bit_len(v.unsigned_abs())).max().unwrap_or(0);
    w.put(width, 5);
    for &v in &levels[..=last] {
        w.put((v < 0) as u32, 1);
        w.put(v.unsigned_abs(), width);
    }
}

pub(crate) fn read_residual_raw(r: &mut BitReader, levels: &mut [i32]) -> Result<()> {
    levels.fill(0);
    if r.get(1)? == 0 {
        return Ok(());
    }
    let last = r.get(levels.len().trailing_zeros())? as usize;
    let width = r.get(5)?;
    if width > 31 {
        return Err(Error::corrupt(format!("level width {width}")));
    }
    for v in &mut levels[..=last] {
        let neg = r.get(1)? == 1;
        let mag = r.get(width)? as i32;
        *v = if neg { -mag } else { mag };
    }
    Ok(())
}
