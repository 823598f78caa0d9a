//! Storage accounting: LCM vectors versus a dense symmetric covariance.

const MIB: f64 = 1024.0 * 1024.0;
const GIB: f64 = 1024.0 * MIB;

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryRow {
    pub dim: u64,
    pub lcm_bytes: u64,
    pub dense_bytes: u64,
    pub savings_ratio: u64,
}

impl MemoryRow {
    fn new(dim: u64, lcm_bytes: u64, dense_bytes: u64) -> Self {
        MemoryRow {
            dim,
            lcm_bytes,
            dense_bytes,
            savings_ratio: (dense_bytes as f64 / lcm_bytes as f64).round() as u64,
        }
    }

    pub fn lcm_mib(&self) -> f64 {
        self.lcm_bytes as f64 / MIB
    }

    pub fn dense_gib(&self) -> f64 {
        self.dense_bytes as f64 / GIB
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryReport {
    pub rows: Vec<MemoryRow>,
    pub total: MemoryRow,
}

/// `vectors_per_dim` binary64 vectors per dimension for the LCM, and the upper
/// triangle (`D (D + 1) / 2` binary64 entries) for the dense covariance.
pub fn memory_report(dims: &[u64], vectors_per_dim: u64) -> MemoryReport {
    let rows: Vec<MemoryRow> = dims
        .iter()
        .map(|&d| MemoryRow::new(d, 8 * vectors_per_dim * d, 8 * (d * (d + 1) / 2)))
        .collect();
    let total = MemoryRow::new(
        rows.iter().map(|r| r.dim).sum(),
        rows.iter().map(|r| r.lcm_bytes).sum(),
        rows.iter().map(|r| r.dense_bytes).sum(),
    );
    MemoryReport { rows, total }
}
