//! Hard-voting fusion of aligned label maps.
//!
//! Each output pixel takes the label with the most votes among the labels
//! actually cast at that pixel. Ties go to the smallest label value, so the
//! result never depends on member order. The ignore index votes like any
//! other label.

use rayon::prelude::*;

use crate::label::LabelMap;
use crate::{Error, Result};

/// K aligned prediction maps for one frame.
#[derive(Clone, Debug)]
pub struct VoteStack {
    members: Vec<LabelMap>,
    member_ids: Vec<String>,
}

impl VoteStack {
    pub fn new(members: Vec<LabelMap>, member_ids: Vec<String>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyStack);
        }
        if members.len() != member_ids.len() {
            return Err(Error::InvalidArgument(format!(
                "{} members but {} ids",
                members.len(),
                member_ids.len()
            )));
        }
        let first = &members[0];
        for (m, id) in members.iter().zip(&member_ids).skip(1) {
            if m.same_shape(first).is_err() {
                return Err(Error::MemberShapeMismatch {
                    member: id.clone(),
                    reason: format!(
                        "{}x{} vs {}x{}",
                        m.width(),
                        m.height(),
                        first.width(),
                        first.height()
                    ),
                });
            }
            if m.ignore_index() != first.ignore_index() {
                return Err(Error::MemberShapeMismatch {
                    member: id.clone(),
                    reason: format!(
                        "ignore index {} vs {}",
                        m.ignore_index(),
                        first.ignore_index()
                    ),
                });
            }
        }
        Ok(Self {
            members,
            member_ids,
        })
    }

    /// Ids default to `m0`, `m1`, ...
    pub fn from_members(members: Vec<LabelMap>) -> Result<Self> {
        let ids = (0..members.len()).map(|i| format!("m{i}")).collect();
        Self::new(members, ids)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[LabelMap] {
        &self.members
    }

    pub fn member_ids(&self) -> &[String] {
        &self.member_ids
    }

    pub fn width(&self) -> u32 {
        self.members[0].width()
    }

    pub fn height(&self) -> u32 {
        self.members[0].height()
    }

    /// Runs `kernel` on each output row in parallel, handing it the matching
    /// row of every member.
    fn for_rows<T: Send>(&self, out: &mut [T], kernel: impl Fn(&[&[u8]], &mut [T]) + Sync) {
        let w = self.width() as usize;
        if w == 0 {
            return;
        }
        out.par_chunks_mut(w).enumerate().for_each(|(y, row_out)| {
            let rows: Vec<&[u8]> = self
                .members
                .iter()
                .map(|m| &m.data()[y * w..(y + 1) * w])
                .collect();
            kernel(&rows, row_out);
        });
    }
}

/// Winning label and its vote count at one pixel.
#[inline]
fn plurality(rows: &[&[u8]], x: usize) -> (u8, usize) {
    let mut best = (u8::MAX, 0usize);
    for (i, row) in rows.iter().enumerate() {
        let v = row[x];
        // count each distinct label once, at its first occurrence
        if rows[..i].iter().any(|r| r[x] == v) {
            continue;
        }
        let count = 1 + rows[i + 1..].iter().filter(|r| r[x] == v).count();
        if count > best.1 || (count == best.1 && v < best.0) {
            best = (v, count);
        }
    }
    best
}

pub fn hard_vote(stack: &VoteStack) -> LabelMap {
    let first = &stack.members[0];
    let mut data = vec![0u8; first.len()];
    stack.for_rows(&mut data, |rows, out| {
        for (x, o) in out.iter_mut().enumerate() {
            *o = plurality(rows, x).0;
        }
    });
    LabelMap::with_ignore(first.width(), first.height(), data, first.ignore_index())
        .expect("shape taken from a member")
}

/// Row-major per-pixel vote fractions, `(winning count) / K`.
#[derive(Clone, Debug, PartialEq)]
pub struct AgreementMap {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f64>,
}

impl AgreementMap {
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 1.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

pub fn agreement_map(stack: &VoteStack) -> AgreementMap {
    let k = stack.len() as f64;
    let mut data = vec![0f64; stack.members[0].len()];
    stack.for_rows(&mut data, |rows, out| {
        for (x, o) in out.iter_mut().enumerate() {
            *o = plurality(rows, x).1 as f64 / k;
        }
    });
    AgreementMap {
        width: stack.width(),
        height: stack.height(),
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn map(w: u32, h: u32, data: &[u8]) -> LabelMap {
        LabelMap::new(w, h, data.to_vec()).unwrap()
    }

    /// Histogram over all 256 values, argmax with smallest-value tie break.
    fn oracle(members: &[LabelMap]) -> Vec<u8> {
        (0..members[0].len())
            .map(|i| {
                let mut hist = [0usize; 256];
                for m in members {
                    hist[m.data()[i] as usize] += 1;
                }
                let max = *hist.iter().max().unwrap();
                hist.iter().position(|&c| c == max).unwrap() as u8
            })
            .collect()
    }

    #[test]
    fn single_member_is_identity() {
        let m = map(3, 2, &[0, 1, 2, 255, 4, 5]);
        let stack = VoteStack::from_members(vec![m.clone()]).unwrap();
        assert_eq!(hard_vote(&stack), m);
        assert!(agreement_map(&stack).data.iter().all(|&a| a == 1.0));
    }

    #[test]
    fn worked_example() {
        let stack = VoteStack::from_members(vec![
            map(4, 1, &[0, 1, 2, 0]),
            map(4, 1, &[0, 2, 2, 1]),
            map(4, 1, &[1, 2, 0, 1]),
        ])
        .unwrap();
        assert_eq!(hard_vote(&stack).data(), &[0, 2, 2, 1]);
        let agree = agreement_map(&stack);
        assert_eq!(agree.data, vec![2.0 / 3.0; 4]);
    }

    #[test]
    fn three_way_tie_goes_to_smallest() {
        let stack = VoteStack::from_members(vec![map(1, 1, &[2]), map(1, 1, &[0]), map(1, 1, &[1])]).unwrap();
        assert_eq!(hard_vote(&stack).data(), &[0]);
        assert_eq!(agreement_map(&stack).data, vec![1.0 / 3.0]);
    }

    #[test]
    fn ignore_votes_like_any_label() {
        let stack = VoteStack::from_members(vec![
            map(3, 1, &[255, 255, 255]),
            map(3, 1, &[255, 1, 255]),
            map(3, 1, &[255, 1, 3]),
        ])
        .unwrap();
        assert_eq!(hard_vote(&stack).data(), &[255, 1, 255]);
        // a tie between a class and 255 goes to the class
        let tie = VoteStack::from_members(vec![map(1, 1, &[255]), map(1, 1, &[4])]).unwrap();
        assert_eq!(hard_vote(&tie).data(), &[4]);
    }

    #[test]
    fn unanimous_agreement_is_one() {
        let m = map(2, 2, &[1, 2, 3, 0]);
        let stack = VoteStack::from_members(vec![m.clone(), m.clone(), m]).unwrap();
        assert_eq!(agreement_map(&stack).mean(), 1.0);
    }

    #[test]
    fn stack_errors() {
        assert!(matches!(VoteStack::from_members(vec![]), Err(Error::EmptyStack)));
        let err = VoteStack::new(
            vec![map(2, 1, &[0, 0]), map(1, 2, &[0, 0])],
            vec!["a".into(), "b".into()],
        )
        .unwrap_err();
        assert!(matches!(err, Error::MemberShapeMismatch { ref member, .. } if member == "b"));
        let other_ignore = LabelMap::with_ignore(2, 1, vec![0, 0], 9).unwrap();
        assert!(matches!(
            VoteStack::from_members(vec![map(2, 1, &[0, 0]), other_ignore]),
            Err(Error::MemberShapeMismatch { .. })
        ));
    }

    fn stack_strategy() -> impl Strategy<Value = Vec<LabelMap>> {
        (1usize..=5, 1u32..=8, 1u32..=8).prop_flat_map(|(k, w, h)| {
            let n = (w * h) as usize;
            let value = prop_oneof![6 => 0u8..4, 1 => Just(255u8)];
            proptest::collection::vec(proptest::collection::vec(value, n), k)
                .prop_map(move |ms| ms.into_iter().map(|d| map(w, h, &d)).collect())
        })
    }

    proptest! {
        #[test]
        fn matches_histogram_oracle(members in stack_strategy()) {
            let expected = oracle(&members);
            let stack = VoteStack::from_members(members).unwrap();
            prop_assert_eq!(hard_vote(&stack).into_data(), expected);
        }

        #[test]
        fn voter_order_does_not_matter(members in stack_strategy(), seed in any::<u64>()) {
            let base = hard_vote(&VoteStack::from_members(members.clone()).unwrap());
            let mut shuffled = members;
            // rotate by a seed-dependent amount and reverse
            let k = shuffled.len();
            shuffled.rotate_left(seed as usize % k);
            shuffled.reverse();
            prop_assert_eq!(hard_vote(&VoteStack::from_members(shuffled).unwrap()), base);
        }

        #[test]
        fn strict_majority_wins(members in stack_strategy()) {
            let k = members.len();
            let out = hard_vote(&VoteStack::from_members(members.clone()).unwrap());
            for i in 0..out.len() {
                for v in 0..=255u8 {
                    let count = members.iter().filter(|m| m.data()[i] == v).count();
                    if 2 * count > k {
                        prop_assert_eq!(out.data()[i], v);
                    }
                }
            }
        }

        #[test]
        fn duplicating_the_output_is_stable(members in stack_strategy()) {
            let out = hard_vote(&VoteStack::from_members(members.clone()).unwrap());
            let mut more = members;
            more.push(out.clone());
            prop_assert_eq!(hard_vote(&VoteStack::from_members(more).unwrap()), out);
        }

        #[test]
        fn consensus_is_idempotent(members in stack_strategy(), copies in 1usize..5) {
            let m = members[0].clone();
            let stack = VoteStack::from_members(vec![m.clone(); copies]).unwrap();
            prop_assert_eq!(hard_vote(&stack), m);
        }

        #[test]
        fn agreement_in_unit_interval(members in stack_strategy()) {
            let k = members.len() as f64;
            let agree = agreement_map(&VoteStack::from_members(members).unwrap());
            for a in agree.data {
                prop_assert!(a > 0.0 && a <= 1.0 && a >= 1.0 / k);
            }
        }
    }
}
