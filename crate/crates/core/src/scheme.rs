//! Construction of the generalized signal alignment scheme.
//!
//! Sources 1 and 2 form one group and sources 3 and 4 the other; every source
//! exchanges an independent message with both sources of the opposite group.
//! The four exchanging pairs are kept in the fixed order
//! `(1,3), (1,4), (2,3), (2,4)`, which is also the row-block order of the
//! relay combiner `A` and the column-block order of the broadcast precoder
//! `U`.
//!
//! Row block `k` of `A` lies in the left null space of the two uplinks that do
//! not belong to pair `k`, so after combining only the pair's own two sources
//! remain. Each source then zero-forces its own `M x M` effective channel,
//! which makes `A H V` a zero/one selection matrix that adds the two opposing
//! streams of every pair. The broadcast side mirrors this: column block `k` of
//! `U` is invisible to the two non-member destinations.
//!
//! Node indices in this module are zero based (`0` is source 1).

use std::fmt;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{block_diagonal, invert, null_space_basis, stack_cols, stack_rows, CMatrix};

/// Exchanging pairs `(group-1 node, group-2 node)` in block order.
pub const PAIRS: [(usize, usize); 4] = [(0, 2), (0, 3), (1, 2), (1, 3)];

/// The two pair blocks each node belongs to, in block order.
pub const MEMBER_BLOCKS: [(usize, usize); 4] = [(0, 1), (2, 3), (0, 2), (1, 3)];

/// Pair blocks that involve `node`.
pub fn member_blocks(node: usize) -> (usize, usize) {
    MEMBER_BLOCKS[node]
}

/// The two nodes outside pair block `k`.
pub fn excluded_nodes(block: usize) -> (usize, usize) {
    let (a, b) = PAIRS[block];
    let mut others = (0..4).filter(|&x| x != a && x != b);
    (others.next().unwrap(), others.next().unwrap())
}

/// The node on the other side of `node` within pair block `k`.
pub fn partner(block: usize, node: usize) -> usize {
    let (a, b) = PAIRS[block];
    if node == a {
        b
    } else {
        a
    }
}

/// Stream counts `d_ij` for every ordered pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamAllocation {
    m: usize,
    /// `d[i][j]`; zero on same-group entries.
    d: [[usize; 4]; 4],
}

impl StreamAllocation {
    pub fn m_antennas(&self) -> usize {
        self.m
    }

    /// `d_ij` for ordered nodes `i -> j`.
    pub fn streams(&self, from: usize, to: usize) -> usize {
        self.d[from][to]
    }

    /// Height of pair block `k`; equals `d_ij = d_ji` for the pair.
    pub fn block_height(&self, block: usize) -> usize {
        let (a, b) = PAIRS[block];
        self.d[a][b]
    }

    pub fn block_heights(&self) -> [usize; 4] {
        [0, 1, 2, 3].map(|k| self.block_height(k))
    }

    /// First row of pair block `k` in `A` (equivalently, first column in `U`).
    pub fn block_offset(&self, block: usize) -> usize {
        (0..block).map(|k| self.block_height(k)).sum()
    }

    /// Largest pair block height; the null space each block draws from must
    /// be at least this large.
    pub fn max_block_height(&self) -> usize {
        self.block_heights().into_iter().max().unwrap_or(0)
    }

    pub fn total_streams(&self) -> usize {
        self.d.iter().flatten().sum()
    }

    /// Partners of `node`, ascending. Fixes the order of the node's two
    /// outgoing stream blocks.
    pub fn partners(node: usize) -> [usize; 2] {
        if node < 2 {
            [2, 3]
        } else {
            [0, 1]
        }
    }

    /// Column of the first symbol of `s_ij` in the stacked vector
    /// `[s_13 s_14 | s_23 s_24 | s_31 s_32 | s_41 s_42]`.
    pub fn stream_offset(&self, from: usize, to: usize) -> usize {
        let mut offset = from * self.m;
        for p in Self::partners(from) {
            if p == to {
                return offset;
            }
            offset += self.d[from][p];
        }
        panic!("nodes {from} and {to} do not exchange streams");
    }
}

/// Even `M`: every `d_ij = M/2`. Odd `M`: `d_13 = d_24 = d_31 = d_42 = (M+1)/2`
/// and the remaining four get `(M-1)/2`.
pub fn allocate_streams(m: usize) -> StreamAllocation {
    assert!(m >= 1, "at least one antenna per source");
    let (big, small) = if m.is_multiple_of(2) {
        (m / 2, m / 2)
    } else {
        (m.div_ceil(2), m / 2)
    };
    let mut d = [[0; 4]; 4];
    for (k, &(a, b)) in PAIRS.iter().enumerate() {
        // Pairs (1,3) and (2,4) take the larger share.
        let count = if k == 0 || k == 3 { big } else { small };
        d[a][b] = count;
        d[b][a] = count;
    }
    StreamAllocation { m, d }
}

/// Null-space dimension each pair block needs: `ceil(M / 2)`.
pub fn required_block_height(m: usize) -> usize {
    m.div_ceil(2)
}

/// Closed-form existence condition of the scheme.
pub fn gsa_feasible(m: usize, n: usize) -> bool {
    if m == 0 || n == 0 {
        return false;
    }
    if m.is_multiple_of(2) {
        m <= 2 * n / 5
    } else {
        m <= (2 * n - 1) / 5
    }
}

/// Smallest relay antenna count for which the scheme exists with `m` source
/// antennas.
pub fn min_relay_antennas(m: usize) -> usize {
    2 * m + required_block_height(m)
}

/// Conventional signal alignment needs `N < 2M`.
pub fn sa_feasible(m: usize, n: usize) -> bool {
    n < 2 * m
}

/// Total DoF upper bound `2 min(2M, N)`.
pub fn dof_upper_bound(m: usize, n: usize) -> usize {
    2 * (2 * m).min(n)
}

/// Zero/one matrix `P` with `A H V = P`, mapping the stacked symbol vector
/// to the network-coded sums.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentPattern {
    matrix: CMatrix,
}

impl AlignmentPattern {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `(row, col)` positions of all ones, row-major.
    pub fn ones(&self) -> Vec<(usize, usize)> {
        let (rows, cols) = self.matrix.shape();
        (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .filter(|&(i, j)| self.matrix.get(i, j).re == 1.0)
            .collect()
    }
}

impl fmt::Display for AlignmentPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.matrix.rows() {
            let row: String = (0..self.matrix.cols())
                .map(|j| {
                    if self.matrix.get(i, j).re == 1.0 {
                        '1'
                    } else {
                        '0'
                    }
                })
                .collect();
            writeln!(f, "{row}")?;
        }
        Ok(())
    }
}

pub fn expected_pattern(alloc: &StreamAllocation) -> AlignmentPattern {
    let m = alloc.m_antennas();
    let mut matrix = CMatrix::zeros(2 * m, 4 * m);
    for (k, &(a, b)) in PAIRS.iter().enumerate() {
        let row = alloc.block_offset(k);
        let height = alloc.block_height(k);
        let eye = CMatrix::identity(height);
        matrix.set_block(row, alloc.stream_offset(a, b), &eye);
        matrix.set_block(row, alloc.stream_offset(b, a), &eye);
    }
    AlignmentPattern { matrix }
}

fn check_channel(ch: &ChannelSet, alloc: &StreamAllocation) -> Result<()> {
    let m = alloc.m_antennas();
    ch.check_dimensions(m, ch.n_antennas)?;
    Ok(())
}

/// First `height` columns of the null space of `m`.
fn null_columns(m: &CMatrix, block: usize, height: usize) -> Result<CMatrix> {
    let basis = null_space_basis(m, 0.0);
    if basis.cols() < height {
        return Err(Error::InsufficientNullSpace {
            block,
            required: height,
            available: basis.cols(),
        });
    }
    Ok(basis.col_block(0, height))
}

/// Relay combiner `A` (`2M x N`). Row block `k` is orthonormal and
/// annihilates the uplinks of the two nodes outside pair `k`.
pub fn build_relay_combiner(ch: &ChannelSet, alloc: &StreamAllocation) -> Result<CMatrix> {
    check_channel(ch, alloc)?;
    let blocks = (0..4)
        .map(|k| {
            let (x, y) = excluded_nodes(k);
            // A_k H_x = 0  <=>  H_x^T A_k^T = 0
            let excluded = stack_rows(&[ch.uplink(x).transpose(), ch.uplink(y).transpose()])?;
            Ok(null_columns(&excluded, k, alloc.block_height(k))?.transpose())
        })
        .collect::<Result<Vec<_>>>()?;
    stack_rows(&blocks)
}

/// Effective channel `C_i`: the two member row blocks of `A` applied to
/// node `i`'s uplink, stacked in block order.
pub fn effective_source_channel(
    a: &CMatrix,
    ch: &ChannelSet,
    alloc: &StreamAllocation,
    node: usize,
) -> Result<CMatrix> {
    let (p, q) = member_blocks(node);
    let h = ch.uplink(node);
    let ap = a.row_block(alloc.block_offset(p), alloc.block_height(p));
    let aq = a.row_block(alloc.block_offset(q), alloc.block_height(q));
    stack_rows(&[ap.matmul(h)?, aq.matmul(h)?])
}

/// Zero-forcing source precoders `V_i = C_i^{-1}`.
pub fn build_source_precoders(
    a: &CMatrix,
    ch: &ChannelSet,
    alloc: &StreamAllocation,
) -> Result<[CMatrix; 4]> {
    let m = alloc.m_antennas();
    if a.shape() != (2 * m, ch.n_antennas) {
        return Err(Error::DimensionMismatch(format!(
            "relay combiner is {}x{}, expected {}x{}",
            a.rows(),
            a.cols(),
            2 * m,
            ch.n_antennas
        )));
    }
    let mut out = Vec::with_capacity(4);
    for node in 0..4 {
        let c = effective_source_channel(a, ch, alloc, node)?;
        let v = invert(&c).map_err(|e| match e {
            Error::SingularMatrix { .. } => Error::SingularEffectiveChannel { node: node + 1 },
            other => other,
        })?;
        out.push(v);
    }
    Ok(out.try_into().expect("four precoders"))
}

/// Broadcast precoder `U = [U_1 U_2 U_3 U_4]` (`N x 2M`). Column block `k`
/// is orthonormal and lies in the null space of the downlinks of the two
/// nodes outside pair `k`.
pub fn build_bc_precoder(ch: &ChannelSet, alloc: &StreamAllocation) -> Result<CMatrix> {
    check_channel(ch, alloc)?;
    let blocks = (0..4)
        .map(|k| {
            let (x, y) = excluded_nodes(k);
            let excluded = stack_rows(&[ch.downlink(x).clone(), ch.downlink(y).clone()])?;
            null_columns(&excluded, k, alloc.block_height(k))
        })
        .collect::<Result<Vec<_>>>()?;
    stack_cols(&blocks)
}

/// Horizontal stack `[H_1 H_2 H_3 H_4]` (`N x 4M`).
pub fn stacked_uplinks(ch: &ChannelSet) -> CMatrix {
    stack_cols(&ch.uplinks).expect("uplinks share the relay dimension")
}

/// Worst-case residuals of one constructed scheme.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SchemeResiduals {
    /// `||A H V - P||_F / ||P||_F`.
    pub alignment: f64,
    /// Max over blocks of `||A_k H_x||_F / ||H_x||_F` for excluded `x`.
    pub relay_exclusion: f64,
    /// Max over blocks of `||G_x U_k||_F / ||G_x||_F` for excluded `x`.
    pub bc_exclusion: f64,
}

impl SchemeResiduals {
    pub fn max(&self, other: &SchemeResiduals) -> SchemeResiduals {
        SchemeResiduals {
            alignment: self.alignment.max(other.alignment),
            relay_exclusion: self.relay_exclusion.max(other.relay_exclusion),
            bc_exclusion: self.bc_exclusion.max(other.bc_exclusion),
        }
    }
}

/// A fully constructed scheme for one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct GsaScheme {
    pub alloc: StreamAllocation,
    pub n_antennas: usize,
    /// Relay combiner, `2M x N`.
    pub a: CMatrix,
    /// Source precoders, each `M x M`.
    pub v: [CMatrix; 4],
    /// Broadcast precoder, `N x 2M`.
    pub u: CMatrix,
    pub pattern: AlignmentPattern,
}

impl GsaScheme {
    /// Runs the four construction steps: allocation, relay combiner, source
    /// precoders, broadcast precoder.
    pub fn build(ch: &ChannelSet) -> Result<GsaScheme> {
        let (m, n) = (ch.m_antennas, ch.n_antennas);
        ch.check_dimensions(m, n)?;
        if !gsa_feasible(m, n) {
            return Err(Error::Infeasible { m, n });
        }
        let alloc = allocate_streams(m);
        let a = build_relay_combiner(ch, &alloc)?;
        let v = build_source_precoders(&a, ch, &alloc)?;
        let u = build_bc_precoder(ch, &alloc)?;
        let pattern = expected_pattern(&alloc);
        Ok(GsaScheme {
            alloc,
            n_antennas: n,
            a,
            v,
            u,
            pattern,
        })
    }

    pub fn m_antennas(&self) -> usize {
        self.alloc.m_antennas()
    }

    /// Row block `k` of `A`.
    pub fn a_block(&self, block: usize) -> CMatrix {
        self.a.row_block(
            self.alloc.block_offset(block),
            self.alloc.block_height(block),
        )
    }

    /// Column block `k` of `U`.
    pub fn u_block(&self, block: usize) -> CMatrix {
        self.u.col_block(
            self.alloc.block_offset(block),
            self.alloc.block_height(block),
        )
    }

    /// `[U_p U_q]` for the two pair blocks of `node`.
    pub fn member_u(&self, node: usize) -> CMatrix {
        let (p, q) = member_blocks(node);
        stack_cols(&[self.u_block(p), self.u_block(q)]).expect("blocks share N rows")
    }

    /// Block-diagonal `diag(V_1, ..., V_4)` (`4M x 4M`).
    pub fn block_precoder(&self) -> CMatrix {
        block_diagonal(&self.v)
    }

    /// `A H V` for the given channel.
    pub fn aligned_map(&self, ch: &ChannelSet) -> CMatrix {
        &(&self.a * &stacked_uplinks(ch)) * &self.block_precoder()
    }

    pub fn residuals(&self, ch: &ChannelSet) -> SchemeResiduals {
        let p = self.pattern.matrix();
        let alignment = (&self.aligned_map(ch) - p).frobenius_norm() / p.frobenius_norm();
        let mut relay_exclusion: f64 = 0.0;
        let mut bc_exclusion: f64 = 0.0;
        for k in 0..4 {
            let (x, y) = excluded_nodes(k);
            let ak = self.a_block(k);
            let uk = self.u_block(k);
            for node in [x, y] {
                let h = ch.uplink(node);
                relay_exclusion =
                    relay_exclusion.max((&ak * h).frobenius_norm() / h.frobenius_norm());
                let g = ch.downlink(node);
                bc_exclusion = bc_exclusion.max((g * &uk).frobenius_norm() / g.frobenius_norm());
            }
        }
        SchemeResiduals {
            alignment,
            relay_exclusion,
            bc_exclusion,
        }
    }
}
