/// Evaluation strategy for batched kernel sums.
///
/// `Sequential` sums in index order and is the reference mode; `Parallel`
/// splits work over the current rayon pool and may reorder floating-point
/// accumulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// `--threads 1` maps to the sequential reference path.
    pub fn from_threads(threads: usize) -> Self {
        if threads == 1 {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }
}
