//! Sobol low-discrepancy sequences and Saltelli cross-sampling designs.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::ControlSpace;

const BITS: usize = 32;

/// Joe & Kuo (2008) primitive polynomials and initial direction numbers,
/// `new-joe-kuo-6.21201`, dimensions 2..=64 as `(degree, a, m)`. Dimension 1
/// is the van der Corput sequence and has no entry.
#[rustfmt::skip]
const JOE_KUO: &[(u32, u32, &[u32])] = &[
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
    (6, 19, &[1, 1, 1, 15, 7, 5]),
    (6, 22, &[1, 3, 1, 15, 13, 25]),
    (6, 25, &[1, 1, 5, 5, 19, 61]),
    (7, 1, &[1, 3, 7, 11, 23, 15, 103]),
    (7, 4, &[1, 3, 7, 13, 13, 15, 69]),
    (7, 7, &[1, 1, 3, 13, 7, 35, 63]),
    (7, 8, &[1, 3, 5, 9, 1, 25, 53]),
    (7, 14, &[1, 3, 1, 13, 9, 35, 107]),
    (7, 19, &[1, 3, 1, 5, 27, 61, 31]),
    (7, 21, &[1, 1, 5, 11, 19, 41, 61]),
    (7, 28, &[1, 3, 5, 3, 3, 13, 69]),
    (7, 31, &[1, 1, 7, 13, 1, 19, 1]),
    (7, 32, &[1, 3, 7, 5, 13, 19, 59]),
    (7, 37, &[1, 1, 3, 9, 25, 29, 41]),
    (7, 41, &[1, 3, 5, 13, 23, 1, 55]),
    (7, 42, &[1, 3, 7, 3, 13, 59, 17]),
    (7, 50, &[1, 3, 1, 3, 5, 53, 69]),
    (7, 55, &[1, 1, 5, 5, 23, 33, 13]),
    (7, 56, &[1, 1, 7, 7, 1, 61, 123]),
    (7, 59, &[1, 1, 7, 9, 13, 61, 49]),
    (7, 62, &[1, 3, 3, 5, 3, 55, 33]),
    (8, 14, &[1, 3, 1, 15, 31, 13, 49, 245]),
    (8, 21, &[1, 3, 5, 15, 31, 59, 63, 97]),
    (8, 22, &[1, 3, 1, 11, 11, 11, 77, 249]),
    (8, 38, &[1, 3, 1, 11, 27, 43, 71, 9]),
    (8, 47, &[1, 1, 7, 15, 21, 11, 81, 45]),
    (8, 49, &[1, 3, 7, 3, 25, 31, 65, 79]),
    (8, 50, &[1, 3, 1, 1, 19, 11, 3, 205]),
    (8, 52, &[1, 1, 5, 9, 19, 21, 29, 157]),
    (8, 56, &[1, 3, 7, 11, 1, 33, 89, 185]),
    (8, 67, &[1, 3, 3, 3, 15, 9, 79, 71]),
    (8, 70, &[1, 3, 7, 11, 15, 39, 119, 27]),
    (8, 84, &[1, 1, 3, 1, 11, 31, 97, 225]),
    (8, 97, &[1, 1, 1, 3, 23, 43, 57, 177]),
    (8, 103, &[1, 3, 7, 7, 17, 17, 37, 71]),
    (8, 115, &[1, 3, 1, 5, 27, 63, 123, 213]),
    (8, 122, &[1, 1, 3, 5, 11, 43, 53, 133]),
    (9, 8, &[1, 3, 5, 5, 29, 17, 47, 173, 479]),
    (9, 13, &[1, 3, 3, 11, 3, 1, 109, 9, 69]),
    (9, 16, &[1, 1, 1, 5, 17, 39, 23, 5, 343]),
    (9, 22, &[1, 3, 1, 5, 25, 15, 31, 103, 499]),
    (9, 25, &[1, 1, 1, 11, 11, 17, 63, 105, 183]),
    (9, 44, &[1, 1, 5, 11, 9, 29, 97, 231, 363]),
    (9, 47, &[1, 1, 5, 15, 19, 45, 41, 7, 383]),
    (9, 52, &[1, 3, 7, 7, 31, 19, 83, 137, 221]),
    (9, 55, &[1, 1, 1, 3, 23, 15, 111, 223, 83]),
    (9, 59, &[1, 1, 5, 13, 31, 15, 55, 25, 161]),
    (9, 62, &[1, 1, 3, 13, 25, 47, 39, 87, 257]),
];

/// Largest supported dimension.
pub const MAX_DIMENSION: usize = JOE_KUO.len() + 1;

fn direction_vectors(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (31 - k);
        }
        return v;
    }
    let (s, a, m) = JOE_KUO[dim - 1];
    let s = s as usize;
    for k in 0..s.min(BITS) {
        v[k] = m[k] << (31 - k);
    }
    for k in s..BITS {
        let mut x = v[k - s] ^ (v[k - s] >> s);
        for j in 1..s {
            if (a >> (s - 1 - j)) & 1 == 1 {
                x ^= v[k - j];
            }
        }
        v[k] = x;
    }
    v
}

/// Unscrambled Sobol sequence in Gray-code order. The first point is the origin.
#[derive(Debug, Clone)]
pub struct SobolStream {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u64,
}

impl SobolStream {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::param("Sobol dimension must be at least 1"));
        }
        if dimension > MAX_DIMENSION {
            return Err(Error::Capability(format!(
                "Sobol dimension {dimension} exceeds the direction-number table ({MAX_DIMENSION})"
            )));
        }
        Ok(Self {
            directions: (0..dimension).map(direction_vectors).collect(),
            state: vec![0; dimension],
            index: 0,
        })
    }

    pub fn dimension(&self) -> usize {
        self.state.len()
    }

    /// Index of the point the next call to [`next_point`](Self::next_point) returns.
    pub fn index(&self) -> u64 {
        self.index
    }

    /// Discards the first `2^m` points.
    pub fn skip_pow2(&mut self, m: u32) {
        for _ in 0..(1u64 << m) {
            self.advance();
        }
    }

    fn advance(&mut self) {
        // Gray code: flip the direction number at the lowest zero bit of the index.
        let c = self.index.trailing_ones() as usize;
        assert!(c < BITS, "Sobol stream exhausted after 2^32 points");
        for (x, v) in self.state.iter_mut().zip(&self.directions) {
            *x ^= v[c];
        }
        self.index += 1;
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        const SCALE: f64 = 1.0 / 4_294_967_296.0;
        let p = self.state.iter().map(|&x| x as f64 * SCALE).collect();
        self.advance();
        p
    }
}

impl Iterator for SobolStream {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        Some(self.next_point())
    }
}

/// First `count` points of the `dimension`-dimensional Sobol sequence.
pub fn sobol_points(dimension: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::param("Sobol point count must be at least 1"));
    }
    Ok(SobolStream::new(dimension)?.take(count).collect())
}

/// Which matrix of a Saltelli design a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    A,
    /// `A` with column `i` taken from `B`.
    AB(usize),
    /// `B` with column `i` taken from `A`.
    BA(usize),
    B,
}

impl std::fmt::Display for Block {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Block::A => write!(f, "A"),
            Block::AB(i) => write!(f, "AB{}", i + 1),
            Block::BA(i) => write!(f, "BA{}", i + 1),
            Block::B => write!(f, "B"),
        }
    }
}

/// Cross-sampling design for Sobol index estimation.
///
/// Rows are stored block by block: `A`, `AB_1..AB_K`, `BA_1..BA_K` (second
/// order only), then `B`. Every block has `n_base` rows aligned by base index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaltelliDesign {
    n_base: usize,
    k: usize,
    second_order: bool,
    rows: Vec<Vec<f64>>,
}

impl SaltelliDesign {
    pub fn new(k: usize, n_base: usize, second_order: bool) -> Result<Self> {
        Self::with_skip(k, n_base, second_order, None)
    }

    /// As [`new`](Self::new), optionally discarding the first `2^m` points of the base stream.
    pub fn with_skip(
        k: usize,
        n_base: usize,
        second_order: bool,
        skip_pow2: Option<u32>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("design needs at least one dimension"));
        }
        if n_base < 2 {
            return Err(Error::param(format!(
                "base sample count must be >= 2, got {n_base}"
            )));
        }
        let mut stream = SobolStream::new(2 * k)?;
        if let Some(m) = skip_pow2 {
            stream.skip_pow2(m);
        }
        let base: Vec<Vec<f64>> = stream.take(n_base).collect();
        let a: Vec<&[f64]> = base.iter().map(|r| &r[..k]).collect();
        let b: Vec<&[f64]> = base.iter().map(|r| &r[k..]).collect();

        let blocks = if second_order { 2 * k + 2 } else { k + 2 };
        let mut rows = Vec::with_capacity(n_base * blocks);
        rows.extend(a.iter().map(|r| r.to_vec()));
        for i in 0..k {
            rows.extend(a.iter().zip(&b).map(|(ra, rb)| {
                let mut row = ra.to_vec();
                row[i] = rb[i];
                row
            }));
        }
        if second_order {
            for i in 0..k {
                rows.extend(a.iter().zip(&b).map(|(ra, rb)| {
                    let mut row = rb.to_vec();
                    row[i] = ra[i];
                    row
                }));
            }
        }
        rows.extend(b.iter().map(|r| r.to_vec()));
        Ok(Self {
            n_base,
            k,
            second_order,
            rows,
        })
    }

    pub fn n_base(&self) -> usize {
        self.n_base
    }

    pub fn dimension(&self) -> usize {
        self.k
    }

    pub fn second_order(&self) -> bool {
        self.second_order
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Blocks in row order.
    pub fn blocks(&self) -> Vec<Block> {
        let mut out = vec![Block::A];
        out.extend((0..self.k).map(Block::AB));
        if self.second_order {
            out.extend((0..self.k).map(Block::BA));
        }
        out.push(Block::B);
        out
    }

    /// Row range occupied by `block`.
    pub fn block_range(&self, block: Block) -> std::ops::Range<usize> {
        let n = self.n_base;
        let k = self.k;
        let start = match block {
            Block::A => 0,
            Block::AB(i) => (1 + i) * n,
            Block::BA(i) => {
                assert!(
                    self.second_order,
                    "BA blocks exist only in second-order designs"
                );
                (1 + k + i) * n
            }
            Block::B => self.rows.len() - n,
        };
        start..start + n
    }

    pub fn block_of(&self, row: usize) -> Block {
        self.blocks()[row / self.n_base]
    }

    /// Writes one CSV line per row. With a space, coordinates are in dimension
    /// units; otherwise unit-cube coordinates under `x1..xk`.
    pub fn write_csv<W: Write>(&self, space: Option<&ControlSpace>, out: W) -> Result<()> {
        let names = match space {
            Some(s) if s.len() == self.k => s.names(),
            Some(s) => {
                return Err(Error::Shape {
                    what: "design dimension",
                    expected: self.k,
                    found: s.len(),
                })
            }
            None => (1..=self.k).map(|i| format!("x{i}")).collect(),
        };
        let mut w = csv::Writer::from_writer(out);
        let mut header = names;
        header.push("block".into());
        w.write_record(&header)?;
        for (r, row) in self.rows.iter().enumerate() {
            let values = match space {
                Some(s) => s.from_unit(row)?.0,
                None => row.clone(),
            };
            let mut rec: Vec<String> = values.iter().map(|v| v.to_string()).collect();
            rec.push(self.block_of(r).to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
