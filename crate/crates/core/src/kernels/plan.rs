use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use super::ThreadConfig;
use crate::{Error, Result};

/// 1-based qubit index at or above which a target counts as "high".
/// Values below 4 are raised to 4 so that high targets never overlap the
/// three lane bits of an aggregated batch.
pub const AGGREGATION_THRESHOLD: usize = 5;

/// Number of amplitude groups processed together.
pub const BATCH: usize = 8;
const LANE_BITS: usize = 3;

/// Smallest amount of work, in amplitudes, handed to one parallel task.
pub const MIN_SEGMENT_AMPLITUDES: usize = 1 << 12;

/// Where the targets of an operation sit relative to the aggregation threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationCase {
    /// Every target is below the threshold: a batch is gathered from one small aligned block.
    BothLow,
    /// Targets on both sides of the threshold.
    Mixed,
    /// Every target is at or above the threshold: each row of a batch is a contiguous run.
    BothHigh,
}

/// How one operation is laid over the amplitude array.
///
/// Amplitudes are visited in blocks of `2^m` rows (all values of the target
/// bits) times `batch` lanes (all values of the lane bits). Blocks are
/// enumerated by an outer index whose bits fill the remaining qubits, and the
/// outer range is cut into contiguous segments that can run concurrently.
#[derive(Debug, Clone, PartialEq)]
pub struct ApplyPlan {
    pub num_qubits: usize,
    /// Zero-based target bits in the operation's position order.
    pub targets: Vec<usize>,
    /// `2^(position - 1)` per target.
    pub strides: Vec<usize>,
    pub case: AggregationCase,
    pub batch: usize,
    /// Zero-based bits enumerating the lanes of a batch.
    pub lane_bits: Vec<usize>,
    /// Target and lane bits, ascending.
    pub block_bits: Vec<usize>,
    pub outer_count: usize,
    pub segments: Vec<Range<usize>>,
    /// Offset of each row (local basis index) from the block base.
    pub row_offsets: Vec<usize>,
    /// Offset of each lane from the block base.
    pub lane_offsets: Vec<usize>,
}

impl ApplyPlan {
    /// Base amplitude index of block `outer`.
    #[inline(always)]
    pub fn base(&self, outer: usize) -> usize {
        insert_zero_bits(outer, &self.block_bits)
    }

    /// Lanes of a batch are the contiguous run `base..base + 8`.
    pub fn contiguous_lanes(&self) -> bool {
        self.batch == BATCH && self.lane_offsets.iter().enumerate().all(|(i, &o)| i == o)
    }

    /// Every amplitude index touched by one segment.
    pub fn segment_slots(&self, segment: usize) -> impl Iterator<Item = usize> + '_ {
        self.segments[segment].clone().flat_map(move |o| {
            let base = self.base(o);
            self.row_offsets.iter().flat_map(move |&r| self.lane_offsets.iter().map(move |&l| base + r + l))
        })
    }
}

#[inline(always)]
pub(crate) fn insert_zero_bits(mut k: usize, sorted_bits: &[usize]) -> usize {
    for &b in sorted_bits {
        let low = k & ((1usize << b) - 1);
        k = ((k >> b) << (b + 1)) | low;
    }
    k
}

/// Plans an operation on 1-based `positions` of an `n`-qubit (pseudo) state.
pub fn plan_apply(positions: &[usize], n: usize, cfg: &ThreadConfig) -> Result<ApplyPlan> {
    for (i, &p) in positions.iter().enumerate() {
        if p == 0 || p > n {
            return Err(Error::Index { index: p, num_qubits: n });
        }
        if positions[..i].contains(&p) {
            return Err(Error::Validity(format!("qubit {p} listed twice")));
        }
    }
    let m = positions.len();
    let targets: Vec<usize> = positions.iter().map(|p| p - 1).collect();
    let strides: Vec<usize> = targets.iter().map(|&t| 1usize << t).collect();

    let threshold = AGGREGATION_THRESHOLD.max(4);
    let low = positions.iter().filter(|&&p| p < threshold).count();
    let case = if low == m {
        AggregationCase::BothLow
    } else if low == 0 {
        AggregationCase::BothHigh
    } else {
        AggregationCase::Mixed
    };

    let free = n - m;
    let lane_count = if m <= 4 && free >= LANE_BITS { LANE_BITS } else { 0 };
    let lane_bits: Vec<usize> = (0..n).filter(|b| !targets.contains(b)).take(lane_count).collect();
    let batch = 1usize << lane_bits.len();

    let mut block_bits: Vec<usize> = targets.iter().chain(lane_bits.iter()).copied().collect();
    block_bits.sort_unstable();

    let row_offsets: Vec<usize> =
        (0..1usize << m).map(|r| (0..m).filter(|k| (r >> k) & 1 == 1).map(|k| strides[k]).sum()).collect();
    let lane_offsets: Vec<usize> = (0..batch)
        .map(|l| lane_bits.iter().enumerate().filter(|(i, _)| (l >> i) & 1 == 1).map(|(_, b)| 1 << b).sum())
        .collect();

    let outer_count = 1usize << (n - block_bits.len());
    let block_size = (1usize << m) * batch;
    let segments = split_outer(outer_count, block_size, 1usize << n, cfg);

    Ok(ApplyPlan {
        num_qubits: n,
        targets,
        strides,
        case,
        batch,
        lane_bits,
        block_bits,
        outer_count,
        segments,
        row_offsets,
        lane_offsets,
    })
}

pub(crate) fn split_outer(
    outer_count: usize,
    block_size: usize,
    total: usize,
    cfg: &ThreadConfig,
) -> Vec<Range<usize>> {
    let threads = cfg.num_threads.max(1);
    if threads == 1 || total < cfg.min_work_per_thread {
        return alloc::vec![0..outer_count];
    }
    let min_blocks = MIN_SEGMENT_AMPLITUDES.max(block_size).div_ceil(block_size);
    let count = threads.min(outer_count / min_blocks).max(1);
    let (q, r) = (outer_count / count, outer_count % count);
    let mut start = 0;
    (0..count)
        .map(|i| {
            let len = q + usize::from(i < r);
            let seg = start..start + len;
            start += len;
            seg
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn threads(t: usize) -> ThreadConfig {
        ThreadConfig::new(t)
    }

    fn assert_partition(plan: &ApplyPlan) {
        let total = 1usize << plan.num_qubits;
        let mut seen = alloc::vec![false; total];
        for s in 0..plan.segments.len() {
            for slot in plan.segment_slots(s) {
                assert!(!seen[slot], "slot {slot} visited twice");
                seen[slot] = true;
            }
        }
        assert!(seen.iter().all(|&v| v));
    }

    #[test]
    fn segments_cover_state_disjointly() {
        let cfg = threads(4).with_min_work(0);
        let plan = plan_apply(&[3, 7], 20, &cfg).unwrap();
        assert_eq!(plan.segments.len(), 4);
        assert_eq!(plan.case, AggregationCase::Mixed);
        assert_partition(&plan);
    }

    #[test]
    fn small_states_stay_serial() {
        let cfg = threads(4).with_min_work(1 << 10);
        let plan = plan_apply(&[1, 2], 4, &cfg).unwrap();
        assert_eq!(plan.segments.len(), 1);
        assert_partition(&plan);
    }

    #[test]
    fn target_order_does_not_change_the_partition() {
        let cfg = threads(3).with_min_work(0);
        let a = plan_apply(&[1, 2], 16, &cfg).unwrap();
        let b = plan_apply(&[2, 1], 16, &cfg).unwrap();
        assert_eq!(a.segments, b.segments);
        for s in 0..a.segments.len() {
            let mut sa: Vec<_> = a.segment_slots(s).collect();
            let mut sb: Vec<_> = b.segment_slots(s).collect();
            sa.sort_unstable();
            sb.sort_unstable();
            assert_eq!(sa, sb);
        }
    }

    #[test]
    fn case_selection() {
        let cfg = ThreadConfig::serial();
        assert_eq!(plan_apply(&[1, 4], 10, &cfg).unwrap().case, AggregationCase::BothLow);
        assert_eq!(plan_apply(&[5, 9], 10, &cfg).unwrap().case, AggregationCase::BothHigh);
        assert_eq!(plan_apply(&[2, 9], 10, &cfg).unwrap().case, AggregationCase::Mixed);
        let high = plan_apply(&[6], 10, &cfg).unwrap();
        assert!(high.contiguous_lanes());
        assert_eq!(high.batch, 8);
    }

    #[test]
    fn tiny_states_use_single_lane_groups() {
        let plan = plan_apply(&[1, 2, 3], 4, &ThreadConfig::serial()).unwrap();
        assert_eq!(plan.batch, 1);
        assert_partition(&plan);
    }

    #[test]
    fn plans_are_deterministic() {
        let cfg = threads(8).with_min_work(0);
        assert_eq!(plan_apply(&[2, 11], 18, &cfg).unwrap(), plan_apply(&[2, 11], 18, &cfg).unwrap());
    }

    #[test]
    fn out_of_range_position() {
        assert!(matches!(plan_apply(&[3], 2, &ThreadConfig::serial()), Err(Error::Index { index: 3, num_qubits: 2 })));
    }
}
