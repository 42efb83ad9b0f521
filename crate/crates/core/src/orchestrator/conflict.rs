use serde::{Deserialize, Serialize};

use crate::intent::{Direction, LinkTarget};

/// An intent waiting for the writer, in arrival order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingRequest {
    pub request_id: u64,
    pub user_id: String,
    pub target: LinkTarget,
    pub parameter: String,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Resolution {
    FirstWins,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictReport {
    pub window_id: u64,
    /// Winner first, then the requests that lost to it.
    pub request_ids: Vec<u64>,
    pub winner: u64,
    pub conflicted: Vec<u64>,
    pub target: LinkTarget,
    pub parameter: String,
    /// Direction of each request in `request_ids`.
    pub directions: Vec<Direction>,
    pub resolution: Resolution,
}

/// One report per `(target, parameter)` group in which a later request
/// opposes the first one.
pub fn detect_all_conflicts(pending: &[PendingRequest], window_id: u64) -> Vec<ConflictReport> {
    let mut reports: Vec<ConflictReport> = Vec::new();
    let mut firsts: Vec<&PendingRequest> = Vec::new();
    for req in pending {
        let Some(first) = firsts
            .iter()
            .find(|f| f.target == req.target && f.parameter == req.parameter)
        else {
            firsts.push(req);
            continue;
        };
        if first.direction == req.direction {
            continue;
        }
        match reports.iter_mut().find(|r| r.winner == first.request_id) {
            Some(r) => {
                r.request_ids.push(req.request_id);
                r.conflicted.push(req.request_id);
                r.directions.push(req.direction);
            }
            None => reports.push(ConflictReport {
                window_id,
                request_ids: vec![first.request_id, req.request_id],
                winner: first.request_id,
                conflicted: vec![req.request_id],
                target: req.target,
                parameter: req.parameter.clone(),
                directions: vec![first.direction, req.direction],
                resolution: Resolution::FirstWins,
            }),
        }
    }
    reports
}

/// First conflict in `pending`, if any.
pub fn detect_conflicts(pending: &[PendingRequest], window_id: u64) -> Option<ConflictReport> {
    detect_all_conflicts(pending, window_id).into_iter().next()
}

/// Tumbling window aligned to multiples of `window_ms`. A width of zero
/// disables detection.
#[derive(Debug, Clone)]
pub struct ConflictWindow {
    window_ms: u64,
    window_id: u64,
    admitted: Vec<PendingRequest>,
}

impl ConflictWindow {
    pub fn new(window_ms: u64) -> Self {
        ConflictWindow {
            window_ms,
            window_id: 0,
            admitted: Vec::new(),
        }
    }

    pub fn window_ms(&self) -> u64 {
        self.window_ms
    }

    fn roll(&mut self, t_ms: u64) {
        let id = t_ms / self.window_ms;
        // Late stamps from slow threads stay in the current window.
        if id > self.window_id {
            self.window_id = id;
            self.admitted.clear();
        }
    }

    /// The report naming `req` as a loser, if it opposes an earlier
    /// admitted request in the same window.
    pub fn check(&mut self, req: &PendingRequest, t_ms: u64) -> Option<ConflictReport> {
        if self.window_ms == 0 {
            return None;
        }
        self.roll(t_ms);
        let mut all = self.admitted.clone();
        all.push(req.clone());
        detect_all_conflicts(&all, self.window_id)
            .into_iter()
            .find(|r| r.conflicted.contains(&req.request_id))
    }

    /// Records a request that went through to the store.
    pub fn admit(&mut self, req: PendingRequest) {
        if self.window_ms > 0 {
            self.admitted.push(req);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(id: u64, user: &str, dir: Direction) -> PendingRequest {
        PendingRequest {
            request_id: id,
            user_id: user.into(),
            target: LinkTarget::new(1, 2),
            parameter: "encoding_depth".into(),
            direction: dir,
        }
    }

    #[test]
    fn first_wins() {
        let r = detect_conflicts(
            &[req(1, "u1", Direction::Increase), req(2, "u2", Direction::Decrease)],
            3,
        )
        .unwrap();
        assert_eq!(r.winner, 1);
        assert_eq!(r.conflicted, vec![2]);
        assert_eq!(r.window_id, 3);
        assert_eq!(r.directions, vec![Direction::Increase, Direction::Decrease]);
        assert_eq!(r.resolution, Resolution::FirstWins);
    }

    #[test]
    fn agreeing_and_unrelated_requests() {
        assert!(detect_conflicts(
            &[req(1, "u1", Direction::Increase), req(2, "u2", Direction::Increase)],
            0
        )
        .is_none());
        let mut other = req(2, "u2", Direction::Decrease);
        other.target = LinkTarget::new(3, 4);
        assert!(detect_conflicts(&[req(1, "u1", Direction::Increase), other], 0).is_none());
        assert!(detect_conflicts(&[], 0).is_none());
    }

    #[test]
    fn window_rolls() {
        let mut w = ConflictWindow::new(250);
        let a = req(1, "u1", Direction::Increase);
        assert!(w.check(&a, 10).is_none());
        w.admit(a);
        assert!(w.check(&req(2, "u2", Direction::Decrease), 240).is_some());
        assert!(w.check(&req(3, "u2", Direction::Decrease), 260).is_none());
        let mut off = ConflictWindow::new(0);
        off.admit(req(1, "u1", Direction::Increase));
        assert!(off.check(&req(2, "u2", Direction::Decrease), 0).is_none());
    }
}
