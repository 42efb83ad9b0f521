//! Linearizability checking for small recorded histories.
//!
//! A history is a set of completed operations, each with an invocation and a
//! response timestamp taken from one shared monotonic counter. The checker
//! searches for a total order that respects real-time precedence and under
//! which a sequential model reproduces every observed output.

use std::collections::HashSet;
use std::hash::Hash;
use std::sync::atomic::{AtomicU64, Ordering};

#[derive(Debug, Clone, PartialEq)]
pub struct Operation<I, O> {
    pub invoke: u64,
    pub response: u64,
    pub input: I,
    pub output: O,
}

pub trait SequentialModel {
    type State: Clone + Eq + Hash;
    type Input;
    type Output: PartialEq;

    fn step(&self, state: &Self::State, input: &Self::Input) -> (Self::State, Self::Output);
}

/// Shared logical clock for stamping invocations and responses.
#[derive(Debug, Default)]
pub struct Stamp(AtomicU64);

impl Stamp {
    pub fn new() -> Self {
        Stamp::default()
    }

    pub fn next(&self) -> u64 {
        self.0.fetch_add(1, Ordering::SeqCst)
    }
}

/// Indices of `ops` in a valid linearization order, or `None` if the
/// history is not linearizable. Histories are limited to 128 operations.
pub fn find_witness<M: SequentialModel>(
    model: &M,
    init: M::State,
    ops: &[Operation<M::Input, M::Output>],
) -> Option<Vec<usize>> {
    assert!(ops.len() <= 128, "history too long for the checker");
    let mut seen = HashSet::new();
    let mut order = Vec::with_capacity(ops.len());
    if search(model, &init, ops, 0, &mut order, &mut seen) {
        Some(order)
    } else {
        None
    }
}

fn search<M: SequentialModel>(
    model: &M,
    state: &M::State,
    ops: &[Operation<M::Input, M::Output>],
    done: u128,
    order: &mut Vec<usize>,
    seen: &mut HashSet<(u128, M::State)>,
) -> bool {
    if order.len() == ops.len() {
        return true;
    }
    if !seen.insert((done, state.clone())) {
        return false;
    }
    // An op may go next only if no pending op finished before it started.
    let frontier = ops
        .iter()
        .enumerate()
        .filter(|(i, _)| done & (1 << i) == 0)
        .map(|(_, op)| op.response)
        .min()
        .unwrap_or(u64::MAX);
    for (i, op) in ops.iter().enumerate() {
        if done & (1 << i) != 0 || op.invoke > frontier {
            continue;
        }
        let (next, out) = model.step(state, &op.input);
        if out != op.output {
            continue;
        }
        order.push(i);
        if search(model, &next, ops, done | (1 << i), order, seen) {
            return true;
        }
        order.pop();
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Register;

    #[derive(Debug, Clone, PartialEq)]
    enum Op {
        Write(i64),
        Read,
    }

    impl SequentialModel for Register {
        type State = i64;
        type Input = Op;
        type Output = Option<i64>;

        fn step(&self, s: &i64, i: &Op) -> (i64, Option<i64>) {
            match i {
                Op::Write(v) => (*v, None),
                Op::Read => (*s, Some(*s)),
            }
        }
    }

    fn op(invoke: u64, response: u64, input: Op, output: Option<i64>) -> Operation<Op, Option<i64>> {
        Operation {
            invoke,
            response,
            input,
            output,
        }
    }

    #[test]
    fn overlapping_write_read() {
        let h = [op(0, 3, Op::Write(1), None), op(1, 2, Op::Read, Some(1))];
        assert_eq!(find_witness(&Register, 0, &h), Some(vec![0, 1]));
    }

    #[test]
    fn stale_read_after_write_rejected() {
        let h = [op(0, 1, Op::Write(1), None), op(2, 3, Op::Read, Some(0))];
        assert_eq!(find_witness(&Register, 0, &h), None);
    }

    #[test]
    fn concurrent_reads_see_either_value() {
        let h = [
            op(0, 5, Op::Write(1), None),
            op(1, 2, Op::Read, Some(0)),
            op(3, 4, Op::Read, Some(1)),
        ];
        assert!(find_witness(&Register, 0, &h).is_some());
        let h = [
            op(0, 5, Op::Write(1), None),
            op(1, 2, Op::Read, Some(1)),
            op(3, 4, Op::Read, Some(0)),
        ];
        assert!(find_witness(&Register, 0, &h).is_none());
    }
}
