use std::ops::Range;

use crate::error::{Error, Result};

/// Filter pair that produced a subband: vertical (along columns) first,
/// horizontal (along rows) second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Scaling band (low/low), only present at the coarsest level.
    LowLow,
    /// Vertical low-pass, horizontal high-pass.
    LowHigh,
    /// Vertical high-pass, horizontal low-pass.
    HighLow,
    HighHigh,
}

impl Orientation {
    pub fn tag(self) -> &'static str {
        match self {
            Orientation::LowLow => "LL",
            Orientation::LowHigh => "LH",
            Orientation::HighLow => "HL",
            Orientation::HighHigh => "HH",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subband {
    /// Decomposition level, 1 = finest.
    pub level: usize,
    pub orientation: Orientation,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Subband {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len()
    }

    pub fn name(&self) -> String {
        format!("{}{}", self.orientation.tag(), self.level)
    }
}

/// Subband layout of a depth-`D` dyadic 2D decomposition.
///
/// Coefficients are stored flat, one subband after another, each subband
/// row-major. The order is fixed: `LL(D)`, then for `d = D, D-1, ..., 1` the
/// triple `LH(d), HL(d), HH(d)`. That gives `L = 3D + 1` subbands, coarsest
/// first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubbandLayout {
    depth: usize,
    height: usize,
    width: usize,
    subbands: Vec<Subband>,
}

impl SubbandLayout {
    pub fn new(height: usize, width: usize, depth: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidInput("empty image".into()));
        }
        let block =
            1usize.checked_shl(depth as u32).ok_or_else(|| Error::InvalidInput(format!("depth {depth} too large")))?;
        if height % block != 0 || width % block != 0 {
            return Err(Error::InvalidInput(format!(
                "{height}x{width} image is not divisible by 2^{depth} = {block}; \
                 a depth-{depth} Haar transform needs both dimensions to be multiples of {block}"
            )));
        }
        let mut subbands = Vec::with_capacity(3 * depth + 1);
        let mut offset = 0;
        let mut push = |level: usize, orientation: Orientation, rows: usize, cols: usize| {
            subbands.push(Subband { level, orientation, offset, rows, cols });
            offset += rows * cols;
        };
        push(depth, Orientation::LowLow, height >> depth, width >> depth);
        for level in (1..=depth).rev() {
            let (r, c) = (height >> level, width >> level);
            push(level, Orientation::LowHigh, r, c);
            push(level, Orientation::HighLow, r, c);
            push(level, Orientation::HighHigh, r, c);
        }
        Ok(SubbandLayout { depth, height, width, subbands })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Total coefficient count `N`.
    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of subbands `L`.
    pub fn num_subbands(&self) -> usize {
        self.subbands.len()
    }

    pub fn subbands(&self) -> &[Subband] {
        &self.subbands
    }

    pub fn subband(&self, ell: usize) -> &Subband {
        &self.subbands[ell]
    }

    pub fn partition(&self) -> Partition {
        Partition { ranges: self.subbands.iter().map(Subband::range).collect() }
    }

    /// Pixel rows/cols covered by coefficient `(i, j)` of subband `ell`.
    pub fn footprint(&self, ell: usize, i: usize, j: usize) -> (Range<usize>, Range<usize>) {
        let b = 1usize << self.subbands[ell].level;
        (i * b..(i + 1) * b, j * b..(j + 1) * b)
    }

    /// Coefficient mask: true where the coefficient's pixel footprint lies
    /// entirely inside `support`.
    pub fn coefficient_support(&self, support: &[bool]) -> Vec<bool> {
        let mut out = vec![false; self.len()];
        for (ell, sb) in self.subbands.iter().enumerate() {
            for i in 0..sb.rows {
                for j in 0..sb.cols {
                    let (rows, cols) = self.footprint(ell, i, j);
                    let inside = rows.clone().all(|y| cols.clone().all(|x| support[y * self.width + x]));
                    out[sb.offset + i * sb.cols + j] = inside;
                }
            }
        }
        out
    }
}

/// Grouping of coefficient indices into contiguous, disjoint blocks covering
/// `0..N`. The GEC precisions are shared within each block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    ranges: Vec<Range<usize>>,
}

impl Partition {
    pub fn from_ranges(ranges: Vec<Range<usize>>) -> Result<Self> {
        let mut next = 0;
        for r in &ranges {
            if r.start != next || r.end <= r.start {
                return Err(Error::InvalidInput(format!(
                    "partition blocks must be contiguous and non-empty, got {ranges:?}"
                )));
            }
            next = r.end;
        }
        if ranges.is_empty() {
            return Err(Error::InvalidInput("empty partition".into()));
        }
        Ok(Partition { ranges })
    }

    /// One block holding every coefficient (the scalar EC case).
    pub fn whole(n: usize) -> Self {
        Partition { ranges: vec![0..n] }
    }

    pub fn num_groups(&self) -> usize {
        self.ranges.len()
    }

    pub fn total_len(&self) -> usize {
        self.ranges.last().map_or(0, |r| r.end)
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn range(&self, ell: usize) -> Range<usize> {
        self.ranges[ell].clone()
    }

    pub fn group_len(&self, ell: usize) -> usize {
        self.ranges[ell].len()
    }

    /// Repeats one value per group into a per-coefficient vector.
    pub fn expand(&self, values: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_len());
        for (r, &v) in self.ranges.iter().zip(values) {
            out.extend(std::iter::repeat_n(v, r.len()));
        }
        out
    }
}
