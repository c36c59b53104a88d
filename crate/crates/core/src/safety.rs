//! Binary action masks for collision avoidance.
//!
//! * Penalty mode masks only moves that would leave the area.
//! * Flat masking forbids any move bringing an agent closer than
//!   `d_th + v dt` to the *current* position of a peer; the extra `v dt`
//!   absorbs the peer's own unknown move.
//! * Rank masking orders agents by the summed priority they cover. Pairs
//!   closer than `d_th + 2 v dt` are potential colliders. Agents commit in
//!   rank order and each one only avoids the committed next positions of
//!   higher-ranked colliders, so the top agent of every pair moves freely.
//!
//! When a mask ends up empty, [`fallback`] re-legalizes the in-bounds move
//! that maximizes the minimum next-step distance to the others.

use alloc::vec::Vec;

use crate::config::SafetyMode;
use crate::env::Action;
use crate::error::{Error, Result};
use crate::scenario::{Area, Position};
use crate::service::BeamPriorityVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyParams {
    pub d_th: f64,
    /// Distance covered in one step, `v * dt`.
    pub step: f64,
    pub area: Area,
}

impl SafetyParams {
    pub fn of(config: &crate::config::SimConfig) -> Self {
        Self { d_th: config.d_th, step: config.step_len(), area: Area::of(config) }
    }

    /// Radius below which two agents are potential colliders under rank
    /// masking.
    pub fn collider_radius(&self) -> f64 {
        self.d_th + 2.0 * self.step
    }
}

/// Legal flags indexed by [`Action::index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
pub struct ActionMask {
    pub legal: [bool; 4],
}

impl ActionMask {
    pub const ALL: ActionMask = ActionMask { legal: [true; 4] };
    pub const NONE: ActionMask = ActionMask { legal: [false; 4] };

    pub fn is_legal(&self, a: Action) -> bool {
        self.legal[a.index()]
    }

    pub fn forbid(&mut self, a: Action) {
        self.legal[a.index()] = false;
    }

    pub fn count(&self) -> usize {
        self.legal.iter().filter(|&&l| l).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn legal_actions(&self) -> impl Iterator<Item = Action> + '_ {
        Action::ALL.into_iter().filter(|a| self.is_legal(*a))
    }

    pub fn intersect(self, other: ActionMask) -> ActionMask {
        let mut legal = [false; 4];
        for (i, l) in legal.iter_mut().enumerate() {
            *l = self.legal[i] && other.legal[i];
        }
        ActionMask { legal }
    }
}

pub fn next_position(p: Position, a: Action, step: f64) -> Position {
    let (dx, dy) = a.unit();
    Position::new(p.x + dx * step, p.y + dy * step)
}

/// Moves that keep the agent inside the area.
pub fn bounds_mask(p: Position, params: &SafetyParams) -> ActionMask {
    let mut m = ActionMask::ALL;
    for a in Action::ALL {
        if !params.area.contains(next_position(p, a, params.step)) {
            m.forbid(a);
        }
    }
    m
}

/// Flat masks before fallback resolution.
pub fn flat_masks(positions: &[Position], params: &SafetyParams) -> Vec<ActionMask> {
    let margin = params.d_th + params.step;
    positions
        .iter()
        .enumerate()
        .map(|(u, &p)| {
            let mut m = bounds_mask(p, params);
            for a in Action::ALL {
                let next = next_position(p, a, params.step);
                let unsafe_move = positions
                    .iter()
                    .enumerate()
                    .any(|(w, &q)| w != u && next.distance(q) < margin);
                if unsafe_move {
                    m.forbid(a);
                }
            }
            m
        })
        .collect()
}

/// Scores `F(u) = ||b_u||_1` and the processing order: descending score,
/// ties by ascending agent index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankAssignment {
    pub scores: Vec<u64>,
    pub order: Vec<usize>,
    /// `position[u]` is u's index in `order`; 0 is the highest rank.
    pub position: Vec<usize>,
}

impl RankAssignment {
    pub fn outranks(&self, w: usize, u: usize) -> bool {
        self.position[w] < self.position[u]
    }
}

pub fn rank_scores(beam_infos: &[BeamPriorityVector]) -> RankAssignment {
    let scores: Vec<u64> = beam_infos.iter().map(BeamPriorityVector::l1).collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].cmp(&scores[a]).then(a.cmp(&b)));
    let mut position = alloc::vec![0; scores.len()];
    for (i, &u) in order.iter().enumerate() {
        position[u] = i;
    }
    RankAssignment { scores, order, position }
}

pub fn are_colliders(a: Position, b: Position, params: &SafetyParams) -> bool {
    a.distance(b) < params.collider_radius()
}

/// Rank mask of agent `u` before fallback. `chosen[w]` must be set for
/// every higher-ranked potential collider `w`.
pub fn rank_mask(
    u: usize,
    positions: &[Position],
    ranks: &RankAssignment,
    chosen: &[Option<Action>],
    params: &SafetyParams,
) -> ActionMask {
    let p = positions[u];
    let mut m = bounds_mask(p, params);
    for (w, &q) in positions.iter().enumerate() {
        if w == u || !ranks.outranks(w, u) || !are_colliders(p, q, params) {
            continue;
        }
        // An uncommitted superior is treated like a flat-mask peer.
        let (target, limit) = match chosen[w] {
            Some(aw) => (next_position(q, aw, params.step), params.d_th),
            None => (q, params.d_th + params.step),
        };
        for a in Action::ALL {
            if next_position(p, a, params.step).distance(target) < limit {
                m.forbid(a);
            }
        }
    }
    m
}

/// Rank masks for every agent given a (possibly complete) choice map.
pub fn rank_masks(
    positions: &[Position],
    ranks: &RankAssignment,
    chosen: &[Option<Action>],
    params: &SafetyParams,
) -> Vec<ActionMask> {
    (0..positions.len()).map(|u| rank_mask(u, positions, ranks, chosen, params)).collect()
}

/// Leaves a non-empty mask untouched. An empty one gets back the single
/// in-bounds action maximizing the minimum distance to the others' next
/// positions (committed move if known, current position otherwise); ties go
/// to the earlier action. The flag reports whether the fallback fired.
pub fn fallback(
    mask: ActionMask,
    u: usize,
    positions: &[Position],
    committed: &[Option<Action>],
    params: &SafetyParams,
) -> (ActionMask, bool) {
    if !mask.is_empty() {
        return (mask, false);
    }
    let p = positions[u];
    let bounds = bounds_mask(p, params);
    assert!(!bounds.is_empty(), "area smaller than one step");
    let others: Vec<Position> = positions
        .iter()
        .enumerate()
        .filter(|&(w, _)| w != u)
        .map(|(w, &q)| committed[w].map_or(q, |a| next_position(q, a, params.step)))
        .collect();
    let mut best: Option<(Action, f64)> = None;
    for a in bounds.legal_actions() {
        let next = next_position(p, a, params.step);
        let clearance = others.iter().map(|q| next.distance(*q)).fold(f64::INFINITY, f64::min);
        if best.is_none_or(|(_, c)| clearance > c) {
            best = Some((a, clearance));
        }
    }
    let mut out = ActionMask::NONE;
    if let Some((a, _)) = best {
        out.legal[a.index()] = true;
    }
    (out, true)
}

/// Masks, actions and fallback flags of one joint decision.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDecision {
    pub actions: Vec<Action>,
    pub masks: Vec<ActionMask>,
    pub fallbacks: Vec<bool>,
    /// Order in which agents committed.
    pub order: Vec<usize>,
}

impl JointDecision {
    pub fn fallback_count(&self) -> usize {
        self.fallbacks.iter().filter(|&&f| f).count()
    }
}

/// Runs the controller's decision protocol for one step. `choose(u, mask)`
/// is called once per agent, in commitment order, and must return a legal
/// action.
pub fn resolve_joint<F>(
    mode: SafetyMode,
    positions: &[Position],
    beam_infos: &[BeamPriorityVector],
    params: &SafetyParams,
    mut choose: F,
) -> Result<JointDecision>
where
    F: FnMut(usize, &ActionMask) -> Result<Action>,
{
    let m = positions.len();
    let mut actions = alloc::vec![Action::Up; m];
    let mut masks = alloc::vec![ActionMask::NONE; m];
    let mut fallbacks = alloc::vec![false; m];
    let none = alloc::vec![None; m];
    let order: Vec<usize>;
    match mode {
        SafetyMode::Penalty | SafetyMode::FlatMask => {
            order = (0..m).collect();
            let raw = if mode == SafetyMode::Penalty {
                positions.iter().map(|&p| bounds_mask(p, params)).collect()
            } else {
                flat_masks(positions, params)
            };
            for u in 0..m {
                let (mask, fired) = fallback(raw[u], u, positions, &none, params);
                masks[u] = mask;
                fallbacks[u] = fired;
            }
            for u in 0..m {
                actions[u] = checked(u, &masks[u], &mut choose)?;
            }
        }
        SafetyMode::RankMask => {
            let ranks = rank_scores(beam_infos);
            let mut chosen: Vec<Option<Action>> = none;
            for &u in &ranks.order {
                let raw = rank_mask(u, positions, &ranks, &chosen, params);
                let (mask, fired) = fallback(raw, u, positions, &chosen, params);
                masks[u] = mask;
                fallbacks[u] = fired;
                let a = checked(u, &mask, &mut choose)?;
                actions[u] = a;
                chosen[u] = Some(a);
            }
            order = ranks.order;
        }
    }
    Ok(JointDecision { actions, masks, fallbacks, order })
}

fn checked<F>(u: usize, mask: &ActionMask, choose: &mut F) -> Result<Action>
where
    F: FnMut(usize, &ActionMask) -> Result<Action>,
{
    let a = choose(u, mask)?;
    if mask.is_legal(a) {
        Ok(a)
    } else {
        Err(Error::IllegalAction { agent: u, action: a })
    }
}

/// Replays the decision protocol with fixed actions and fails on the first
/// one its mask forbids.
pub fn verify_joint(
    mode: SafetyMode,
    positions: &[Position],
    beam_infos: &[BeamPriorityVector],
    params: &SafetyParams,
    actions: &[Action],
) -> Result<JointDecision> {
    if actions.len() != positions.len() {
        return Err(Error::ActionCount { expected: positions.len(), got: actions.len() });
    }
    resolve_joint(mode, positions, beam_infos, params, |u, _| Ok(actions[u]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use proptest::prelude::*;
    use rand::Rng;

    fn params() -> SafetyParams {
        SafetyParams { d_th: 72.794, step: 20.0, area: Area { width: 350.0, height: 170.0 } }
    }

    fn after(positions: &[Position], actions: &[Action], step: f64) -> Vec<Position> {
        positions.iter().zip(actions).map(|(&p, &a)| next_position(p, a, step)).collect()
    }

    fn min_pair(ps: &[Position]) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..ps.len() {
            for j in i + 1..ps.len() {
                m = m.min(ps[i].distance(ps[j]));
            }
        }
        m
    }

    #[test]
    fn bounds_at_corner_and_edges() {
        let p = params();
        let legal = |pos| bounds_mask(pos, &p).legal_actions().collect::<Vec<_>>();
        assert_eq!(legal(Position::new(0.0, 0.0)), [Action::Up, Action::Right]);
        assert_eq!(legal(Position::new(175.0, 85.0)), Action::ALL);
        assert_eq!(legal(Position::new(0.0, 85.0)), [Action::Up, Action::Right, Action::Down]);
    }

    #[test]
    fn flat_pair_far_enough_keeps_approach_moves() {
        let p = params();
        let eps = 1e-6;
        let a = Position::new(100.0, 85.0);
        let b = Position::new(100.0 + p.d_th + 2.0 * p.step + eps, 85.0);
        let masks = flat_masks(&[a, b], &p);
        assert!(masks[0].is_legal(Action::Right));
        assert!(masks[1].is_legal(Action::Left));
        // brute force: every joint legal move keeps the separation
        for &x in &Action::ALL {
            for &y in &Action::ALL {
                if masks[0].is_legal(x) && masks[1].is_legal(y) {
                    let n = after(&[a, b], &[x, y], p.step);
                    assert!(n[0].distance(n[1]) >= p.d_th);
                }
            }
        }
    }

    #[test]
    fn flat_pair_at_threshold_masks_closing_moves() {
        let p = params();
        let a = Position::new(100.0, 85.0);
        let b = Position::new(100.0 + p.d_th, 85.0);
        let masks = flat_masks(&[a, b], &p);
        for (u, (me, other)) in [(a, b), (b, a)].into_iter().enumerate() {
            for act in Action::ALL {
                let d = next_position(me, act, p.step).distance(other);
                assert_eq!(masks[u].is_legal(act), d >= p.d_th + p.step, "{u} {act:?}");
            }
        }
        for act in [Action::Up, Action::Right, Action::Down] {
            assert!(!masks[0].is_legal(act));
        }
    }

    #[test]
    fn single_agent_only_bounds() {
        let p = params();
        let pos = [Position::new(0.0, 85.0)];
        assert_eq!(flat_masks(&pos, &p)[0], bounds_mask(pos[0], &p));
        let r = rank_scores(&[BeamPriorityVector::zeros(9)]);
        assert_eq!(rank_mask(0, &pos, &r, &[None], &p), bounds_mask(pos[0], &p));
    }

    fn bpv(total: u32) -> BeamPriorityVector {
        let mut v = BeamPriorityVector::zeros(9);
        v.0[0] = total;
        v
    }

    #[test]
    fn rank_order_examples() {
        let r = rank_scores(&[bpv(12), bpv(5), bpv(9)]);
        assert_eq!(r.order, [0, 2, 1]);
        let r = rank_scores(&[bpv(0), bpv(0), bpv(0)]);
        assert_eq!(r.order, [0, 1, 2]);
    }

    proptest! {
        #[test]
        fn rank_order_is_permutation_equivariant(scores in proptest::collection::vec(0u32..6, 1..8), seed in any::<u64>()) {
            let mut rng = stream_rng(seed, Stream::Rollout, 0);
            let n = scores.len();
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            // relabel: new agent perm[i] gets old agent i's score
            let mut relabeled = alloc::vec![0; n];
            for i in 0..n {
                relabeled[perm[i]] = scores[i];
            }
            let a = rank_scores(&scores.iter().map(|&s| bpv(s)).collect::<Vec<_>>());
            let b = rank_scores(&relabeled.iter().map(|&s| bpv(s)).collect::<Vec<_>>());
            let mapped: Vec<u64> = a.order.iter().map(|&u| a.scores[u]).collect();
            let relabeled_scores: Vec<u64> = b.order.iter().map(|&u| b.scores[u]).collect();
            prop_assert_eq!(mapped, relabeled_scores);
            // among distinct scores the relabeled order is the mapped order
            for (i, &u) in a.order.iter().enumerate() {
                for &w in &a.order[i + 1..] {
                    if a.scores[u] > a.scores[w] {
                        prop_assert!(b.position[perm[u]] < b.position[perm[w]]);
                    }
                }
            }
        }
    }

    #[test]
    fn rank_far_pair_unconstrained() {
        let p = params();
        let a = Position::new(100.0, 85.0);
        let b = Position::new(100.0 + p.d_th + 3.0 * p.step, 85.0);
        let r = rank_scores(&[bpv(5), bpv(1)]);
        let masks = rank_masks(&[a, b], &r, &[Some(Action::Right), None], &p);
        assert_eq!(masks[0], ActionMask::ALL);
        assert_eq!(masks[1], ActionMask::ALL);
    }

    #[test]
    fn rank_lower_agent_free_when_leader_retreats() {
        let p = params();
        let a = Position::new(100.0, 85.0);
        let b = Position::new(100.0 + p.d_th + p.step, 85.0);
        let r = rank_scores(&[bpv(1), bpv(5)]);
        // agent 1 leads and moves away to the right
        let masks = rank_masks(&[a, b], &r, &[None, Some(Action::Right)], &p);
        assert_eq!(masks[1], ActionMask::ALL);
        let lead = next_position(b, Action::Right, p.step);
        for act in Action::ALL {
            assert!(next_position(a, act, p.step).distance(lead) >= p.d_th);
            assert!(masks[0].is_legal(act));
        }
    }

    #[test]
    fn rank_lower_agent_masks_exactly_violating_moves() {
        let p = params();
        let a = Position::new(100.0, 85.0);
        let b = Position::new(100.0 + p.d_th, 85.0);
        let r = rank_scores(&[bpv(1), bpv(5)]);
        let masks = rank_masks(&[a, b], &r, &[None, Some(Action::Left)], &p);
        let lead = next_position(b, Action::Left, p.step);
        for act in Action::ALL {
            let ok = next_position(a, act, p.step).distance(lead) >= p.d_th;
            assert_eq!(masks[0].is_legal(act), ok, "{act:?}");
        }
        for act in [Action::Up, Action::Right, Action::Down] {
            assert!(!masks[0].is_legal(act));
        }
    }

    #[test]
    fn fallback_examples() {
        let p = params();
        let full = ActionMask::ALL;
        assert_eq!(fallback(full, 0, &[Position::new(1.0, 1.0)], &[None], &p), (full, false));

        let me = Position::new(100.0, 85.0);
        let east = Position::new(120.0, 85.0);
        let (m, fired) = fallback(ActionMask::NONE, 0, &[me, east], &[None, None], &p);
        assert!(fired);
        assert_eq!(m.legal_actions().collect::<Vec<_>>(), [Action::Left]);
    }

    #[test]
    fn fallback_matches_exhaustive_max_min() {
        let p = params();
        let mut rng = stream_rng(5, Stream::Rollout, 0);
        for _ in 0..2000 {
            let me = Position::new(30.0 + rng.random::<f64>() * 290.0, 30.0 + rng.random::<f64>() * 110.0);
            let ps: Vec<Position> = core::iter::once(me)
                .chain((0..3).map(|_| Position::new(me.x + rng.random_range(-40.0..40.0), me.y + rng.random_range(-40.0..40.0))))
                .collect();
            let (m, _) = fallback(ActionMask::NONE, 0, &ps, &[None; 4], &p);
            let mut best = (Action::Up, f64::NEG_INFINITY);
            for a in Action::ALL {
                let n = next_position(me, a, p.step);
                if !p.area.contains(n) {
                    continue;
                }
                let c = ps[1..].iter().map(|q| n.distance(*q)).fold(f64::INFINITY, f64::min);
                if c > best.1 {
                    best = (a, c);
                }
            }
            assert_eq!(m.legal_actions().collect::<Vec<_>>(), [best.0]);
        }
    }

    #[test]
    fn enlarging_threshold_never_adds_moves() {
        let mut rng = stream_rng(9, Stream::Rollout, 0);
        for _ in 0..2000 {
            let ps: Vec<Position> =
                (0..4).map(|_| Position::new(rng.random::<f64>() * 350.0, rng.random::<f64>() * 170.0)).collect();
            let infos: Vec<BeamPriorityVector> = (0..4).map(|_| bpv(rng.random_range(0..20))).collect();
            let chosen: Vec<Option<Action>> = (0..4).map(|_| Some(Action::ALL[rng.random_range(0..4)])).collect();
            let small = params();
            let big = SafetyParams { d_th: small.d_th + rng.random::<f64>() * 50.0, ..small };
            let r = rank_scores(&infos);
            for (s, b) in flat_masks(&ps, &small).iter().zip(flat_masks(&ps, &big)) {
                assert_eq!(s.intersect(b), b);
            }
            for (s, b) in rank_masks(&ps, &r, &chosen, &small).iter().zip(rank_masks(&ps, &r, &chosen, &big)) {
                assert_eq!(s.intersect(b), b);
            }
        }
    }

    #[test]
    fn random_legal_rollouts_stay_separated() {
        for mode in [SafetyMode::FlatMask, SafetyMode::RankMask] {
            for m in 2..=4usize {
                let p = params();
                let mut rng = stream_rng(m as u64, Stream::Rollout, mode as u64);
                // start from a separated configuration
                let mut ps: Vec<Position> = loop {
                    let c: Vec<Position> = (0..m)
                        .map(|_| Position::new(rng.random::<f64>() * 350.0, rng.random::<f64>() * 170.0))
                        .collect();
                    if min_pair(&c) >= p.d_th {
                        break c;
                    }
                };
                for _ in 0..10_000 {
                    let infos: Vec<BeamPriorityVector> = (0..m).map(|_| bpv(rng.random_range(0..30))).collect();
                    let d = resolve_joint(mode, &ps, &infos, &p, |_, mask| {
                        let legal: Vec<Action> = mask.legal_actions().collect();
                        Ok(legal[rng.random_range(0..legal.len())])
                    })
                    .unwrap();
                    let r = rank_scores(&infos);
                    if mode == SafetyMode::RankMask {
                        // the leader of every collider pair is never masked by it
                        let top = r.order[0];
                        assert_eq!(d.masks[top], bounds_mask(ps[top], &p));
                    }
                    ps = after(&ps, &d.actions, p.step);
                    if d.fallback_count() == 0 {
                        assert!(min_pair(&ps) >= p.d_th, "{mode:?} M={m}");
                    }
                    assert!(min_pair(&ps) >= 1.0);
                    assert!(ps.iter().all(|q| p.area.contains(*q)));
                }
            }
        }
    }

    #[test]
    fn verify_rejects_illegal_move() {
        let p = params();
        let ps = [Position::new(0.0, 0.0), Position::new(200.0, 100.0)];
        let infos = [bpv(0), bpv(0)];
        let err = verify_joint(SafetyMode::FlatMask, &ps, &infos, &p, &[Action::Left, Action::Up]).unwrap_err();
        assert_eq!(err, Error::IllegalAction { agent: 0, action: Action::Left });
        assert!(verify_joint(SafetyMode::FlatMask, &ps, &infos, &p, &[Action::Up]).is_err());
    }

    #[test]
    fn empty_collider_set_reduces_to_bounds() {
        let p = params();
        let ps = [Position::new(0.0, 0.0), Position::new(340.0, 160.0)];
        let r = rank_scores(&[bpv(0), bpv(3)]);
        let masks = rank_masks(&ps, &r, &[None, Some(Action::Down)], &p);
        for (m, q) in masks.iter().zip(ps) {
            assert_eq!(*m, bounds_mask(q, &p));
        }
    }
}
