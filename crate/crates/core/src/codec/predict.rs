//! Intra prediction from reconstructed neighbor samples.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Value used for neighbor samples that lie outside the frame.
pub const BORDER_FILL: i32 = 128;

/// The eight intra modes. Angular modes use the HEVC angle tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredMode {
    Dc,
    Planar,
    Horizontal,
    Vertical,
    /// 45° from the bottom-left (left column and its extension).
    DiagUpRight,
    /// 45° from the top-left corner.
    DiagDownRight,
    /// 45° from the top-right (top row and its extension).
    DiagDownLeft,
    /// Near-vertical, leaning toward the top-left.
    VerticalRight,
}

impl PredMode {
    pub const ALL: [PredMode; 8] = [
        PredMode::Dc,
        PredMode::Planar,
        PredMode::Horizontal,
        PredMode::Vertical,
        PredMode::DiagUpRight,
        PredMode::DiagDownRight,
        PredMode::DiagDownLeft,
        PredMode::VerticalRight,
    ];

    pub fn index(self) -> u8 {
        PredMode::ALL.iter().position(|&m| m == self).unwrap() as u8
    }

    pub fn from_index(i: u8) -> Result<PredMode> {
        PredMode::ALL
            .get(i as usize)
            .copied()
            .ok_or_else(|| Error::invalid(format!("unknown prediction mode {i}")))
    }

    fn name(self) -> &'static str {
        match self {
            PredMode::Dc => "dc",
            PredMode::Planar => "planar",
            PredMode::Horizontal => "horizontal",
            PredMode::Vertical => "vertical",
            PredMode::DiagUpRight => "diag-up-right",
            PredMode::DiagDownRight => "diag-down-right",
            PredMode::DiagDownLeft => "diag-down-left",
            PredMode::VerticalRight => "vertical-right",
        }
    }

    /// HEVC angular mode number for the directional modes.
    fn angular(self) -> Option<i32> {
        match self {
            PredMode::DiagUpRight => Some(2),
            PredMode::DiagDownRight => Some(18),
            PredMode::DiagDownLeft => Some(34),
            PredMode::VerticalRight => Some(22),
            _ => None,
        }
    }
}

impl fmt::Display for PredMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PredMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PredMode::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown prediction mode {s:?}")))
    }
}

/// Reference samples around an `n × n` block: `2n` above (left to right),
/// `2n` to the left (top to bottom) and the top-left corner. Entries past the
/// available ones are already substituted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighbors {
    pub size: usize,
    pub top: Vec<i32>,
    pub left: Vec<i32>,
    pub corner: i32,
    pub top_count: usize,
    pub left_count: usize,
}

impl Neighbors {
    /// Builds references from the available leading samples of each side.
    /// Missing samples repeat the last available one on their side, or take
    /// [`BORDER_FILL`] when a side has none.
    pub fn new(size: usize, top: &[u8], left: &[u8], corner: Option<u8>) -> Result<Self> {
        if size == 0 || top.len() > 2 * size || left.len() > 2 * size {
            return Err(Error::invalid(format!(
                "neighbor counts {}/{} exceed 2×{size}",
                top.len(),
                left.len()
            )));
        }
        let mut nb = Neighbors::empty(size);
        nb.fill(top.iter().map(|&v| v as i32), left.iter().map(|&v| v as i32), corner.map(|c| c as i32));
        Ok(nb)
    }

    pub(crate) fn empty(size: usize) -> Self {
        Neighbors {
            size,
            top: vec![BORDER_FILL; 2 * size],
            left: vec![BORDER_FILL; 2 * size],
            corner: BORDER_FILL,
            top_count: 0,
            left_count: 0,
        }
    }

    pub(crate) fn fill(
        &mut self,
        top: impl Iterator<Item = i32>,
        left: impl Iterator<Item = i32>,
        corner: Option<i32>,
    ) {
        fn side(dst: &mut [i32], src: impl Iterator<Item = i32>) -> usize {
            let mut count = 0;
            for (d, s) in dst.iter_mut().zip(src) {
                *d = s;
                count += 1;
            }
            let last = if count > 0 { dst[count - 1] } else { BORDER_FILL };
            for d in &mut dst[count..] {
                *d = last;
            }
            count
        }
        self.top_count = side(&mut self.top, top);
        self.left_count = side(&mut self.left, left);
        self.corner = match corner {
            Some(c) => c,
            None if self.left_count > 0 => self.left[0],
            None if self.top_count > 0 => self.top[0],
            None => BORDER_FILL,
        };
    }
}

const ANGLE: [i32; 35] = [
    0, 0, 32, 26, 21, 17, 13, 9, 5, 2, 0, -2, -5, -9, -13, -17, -21, -26, -32, -26, -21, -17, -13, -9, -5, -2, 0, 2, 5,
    9, 13, 17, 21, 26, 32,
];

fn inv_angle(angle: i32) -> i32 {
    match angle {
        -2 => -4096,
        -5 => -1638,
        -9 => -910,
        -13 => -630,
        -17 => -482,
        -21 => -390,
        -26 => -315,
        -32 => -256,
        _ => 0,
    }
}

/// Predicts an `n × n` block (row-major) from its neighbors.
pub fn predict_block(nb: &Neighbors, mode: PredMode) -> Vec<i32> {
    let mut out = vec![0; nb.size * nb.size];
    predict_into(nb, mode, &mut out);
    out
}

pub(crate) fn predict_into(nb: &Neighbors, mode: PredMode, out: &mut [i32]) {
    let n = nb.size;
    match mode {
        PredMode::Dc => {
            let t = nb.top_count.min(n);
            let l = nb.left_count.min(n);
            let count = (t + l) as i32;
            let dc = if count == 0 {
                BORDER_FILL
            } else {
                let sum: i32 = nb.top[..t].iter().sum::<i32>() + nb.left[..l].iter().sum::<i32>();
                (sum + count / 2) / count
            };
            out.fill(dc);
        }
        PredMode::Planar => {
            let shift = n.trailing_zeros() + 1;
            let tr = nb.top[n];
            let bl = nb.left[n];
            for y in 0..n {
                for x in 0..n {
                    let v = (n - 1 - x) as i32 * nb.left[y]
                        + (x + 1) as i32 * tr
                        + (n - 1 - y) as i32 * nb.top[x]
                        + (y + 1) as i32 * bl
                        + n as i32;
                    out[y * n + x] = v >> shift;
                }
            }
        }
        PredMode::Horizontal => {
            for y in 0..n {
                out[y * n..(y + 1) * n].fill(nb.left[y]);
            }
        }
        PredMode::Vertical => {
            for y in 0..n {
                out[y * n..(y + 1) * n].copy_from_slice(&nb.top[..n]);
            }
        }
        _ => angular(nb, mode.angular().unwrap(), out),
    }
}

fn angular(nb: &Neighbors, hevc_mode: i32, out: &mut [i32]) {
    let n = nb.size;
    let angle = ANGLE[hevc_mode as usize];
    let vertical = hevc_mode >= 18;
    let (main, side) = if vertical { (&nb.top, &nb.left) } else { (&nb.left, &nb.top) };
    // refs[OFF + i] holds reference index i, for i in -n..=2n
    let off = n;
    let mut refs = vec![0i32; 3 * n + 1];
    refs[off] = nb.corner;
    refs[off + 1..off + 1 + 2 * n].copy_from_slice(main);
    if angle < 0 {
        let last = (n as i32 * angle) >> 5;
        if last < -1 {
            let inv = inv_angle(angle);
            for x in last..=-1 {
                let idx = ((x * inv + 128) >> 8) - 1;
                refs[(off as i32 + x) as usize] = side[idx as usize];
            }
        }
    }
    for j in 0..n {
        let pos = (j as i32 + 1) * angle;
        let idx = pos >> 5;
        let fact = pos & 31;
        for i in 0..n {
            let base = (off as i32 + i as i32 + idx + 1) as usize;
            let v = if fact == 0 { refs[base] } else { ((32 - fact) * refs[base] + fact * refs[base + 1] + 16) >> 5 };
            if vertical {
                out[j * n + i] = v;
            } else {
                out[i * n + j] = v;
            }
        }
    }
}
