//! LoS beam adaptation. The recovery protocol only needs *some* alignment
//! procedure; this is a simple neighbour-first stand-in behind the
//! [`AlignmentSession`] trait so another strategy can be dropped in.

use super::BeamPair;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentOutcome {
    pub pair: BeamPair,
    pub rss_dbm: f64,
    /// Number of beam measurements spent.
    pub measurements: usize,
    /// True when the adopted pair is back within the margin of the pre-drop
    /// RSS.
    pub restored: bool,
}

/// A resumable alignment procedure. The caller measures the pairs returned
/// by [`pending`](AlignmentSession::pending), in order, and feeds the RSS
/// values back until an outcome is produced.
pub trait AlignmentSession: Send {
    fn pending(&self) -> Option<&[BeamPair]>;
    fn feed(&mut self, rss_dbm: &[f64]) -> Option<AlignmentOutcome>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    MsNeighbors,
    MsSweep,
    BsNeighbors,
    BsSweep,
    Done,
}

/// MS neighbours, then a full MS sweep, then the same two steps at the BS.
/// Each step stops the procedure once the pre-drop RSS is restored within
/// the margin; after the BS sweep the best pair is adopted regardless.
#[derive(Debug, Clone)]
pub struct NeighborFirstAligner {
    n_bs: usize,
    n_ms: usize,
    best: BeamPair,
    best_rss: f64,
    target_dbm: f64,
    stage: Stage,
    request: Vec<BeamPair>,
    measurements: usize,
}

impl NeighborFirstAligner {
    pub fn new(
        current: BeamPair,
        current_rss_dbm: f64,
        pre_drop_rss_dbm: f64,
        margin_db: f64,
        n_bs: usize,
        n_ms: usize,
    ) -> Self {
        let mut a = NeighborFirstAligner {
            n_bs,
            n_ms,
            best: current,
            best_rss: current_rss_dbm,
            target_dbm: pre_drop_rss_dbm - margin_db,
            stage: Stage::MsNeighbors,
            request: Vec::new(),
            measurements: 0,
        };
        a.prepare();
        a
    }

    fn neighbours(index: usize, n: usize) -> Vec<usize> {
        let mut v = Vec::with_capacity(2);
        if index > 0 {
            v.push(index - 1);
        }
        if index + 1 < n {
            v.push(index + 1);
        }
        v
    }

    /// Fill `request` for the current stage, skipping stages with nothing
    /// to measure.
    fn prepare(&mut self) {
        loop {
            self.request = match self.stage {
                Stage::MsNeighbors => Self::neighbours(self.best.ms, self.n_ms)
                    .into_iter()
                    .map(|ms| BeamPair::new(self.best.bs, ms))
                    .collect(),
                Stage::MsSweep => (0..self.n_ms)
                    .map(|ms| BeamPair::new(self.best.bs, ms))
                    .collect(),
                Stage::BsNeighbors => Self::neighbours(self.best.bs, self.n_bs)
                    .into_iter()
                    .map(|bs| BeamPair::new(bs, self.best.ms))
                    .collect(),
                Stage::BsSweep => (0..self.n_bs)
                    .map(|bs| BeamPair::new(bs, self.best.ms))
                    .collect(),
                Stage::Done => Vec::new(),
            };
            if !self.request.is_empty() || self.stage == Stage::Done {
                return;
            }
            self.stage = self.next_stage();
        }
    }

    fn next_stage(&self) -> Stage {
        match self.stage {
            Stage::MsNeighbors => Stage::MsSweep,
            Stage::MsSweep => Stage::BsNeighbors,
            Stage::BsNeighbors => Stage::BsSweep,
            Stage::BsSweep | Stage::Done => Stage::Done,
        }
    }

    fn outcome(&self) -> AlignmentOutcome {
        AlignmentOutcome {
            pair: self.best,
            rss_dbm: self.best_rss,
            measurements: self.measurements,
            restored: self.best_rss >= self.target_dbm,
        }
    }
}

impl AlignmentSession for NeighborFirstAligner {
    fn pending(&self) -> Option<&[BeamPair]> {
        (self.stage != Stage::Done).then_some(self.request.as_slice())
    }

    fn feed(&mut self, rss_dbm: &[f64]) -> Option<AlignmentOutcome> {
        if self.stage == Stage::Done {
            return Some(self.outcome());
        }
        assert_eq!(
            rss_dbm.len(),
            self.request.len(),
            "one RSS value per requested pair"
        );
        self.measurements += rss_dbm.len();
        match self.stage {
            Stage::MsNeighbors | Stage::BsNeighbors => {
                // keep the current pair unless a neighbour is strictly better
                for (&pair, &rss) in self.request.iter().zip(rss_dbm) {
                    if rss > self.best_rss {
                        self.best = pair;
                        self.best_rss = rss;
                    }
                }
            }
            Stage::MsSweep | Stage::BsSweep => {
                // sweep requests are in index order; strict > keeps the
                // lowest index on ties
                let mut best = (self.request[0], rss_dbm[0]);
                for (&pair, &rss) in self.request.iter().zip(rss_dbm).skip(1) {
                    if rss > best.1 {
                        best = (pair, rss);
                    }
                }
                self.best = best.0;
                self.best_rss = best.1;
            }
            Stage::Done => unreachable!(),
        }
        if self.best_rss >= self.target_dbm || self.stage == Stage::BsSweep {
            self.stage = Stage::Done;
            self.request.clear();
            return Some(self.outcome());
        }
        self.stage = self.next_stage();
        self.prepare();
        if self.stage == Stage::Done {
            return Some(self.outcome());
        }
        None
    }
}

/// Run the neighbour-first alignment to completion using `measure` for
/// every beam test.
pub fn ba_align(
    current: BeamPair,
    current_rss_dbm: f64,
    pre_drop_rss_dbm: f64,
    margin_db: f64,
    n_bs: usize,
    n_ms: usize,
    mut measure: impl FnMut(BeamPair) -> f64,
) -> AlignmentOutcome {
    let mut session = NeighborFirstAligner::new(
        current,
        current_rss_dbm,
        pre_drop_rss_dbm,
        margin_db,
        n_bs,
        n_ms,
    );
    loop {
        let pairs = session
            .pending()
            .map(<[BeamPair]>::to_vec)
            .unwrap_or_default();
        let values: Vec<f64> = pairs.iter().map(|&p| measure(p)).collect();
        if let Some(out) = session.feed(&values) {
            return out;
        }
    }
}
