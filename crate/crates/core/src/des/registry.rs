use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::DesError;
use crate::fock::{partial_trace, FockCutoff, ModeOperator, OutcomeTable, TruncatedFockState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeId(pub u64);

#[derive(Debug, Clone)]
struct Group {
    /// `modes[k]` is stored as mode `k` of `state`.
    modes: Vec<ModeId>,
    state: TruncatedFockState,
}

/// Run-wide store of the joint quantum state.
///
/// The state is kept as a product of independent factors. Operations on
/// modes from different factors first tensor those factors together, so
/// entangled signals on different ports always refer to one joint state.
#[derive(Debug, Clone)]
pub struct QuantumRegistry {
    cutoff: FockCutoff,
    next_mode: u64,
    next_group: u64,
    groups: BTreeMap<u64, Group>,
    owner: BTreeMap<ModeId, u64>,
}

impl QuantumRegistry {
    pub fn new(cutoff: FockCutoff) -> Self {
        Self { cutoff, next_mode: 0, next_group: 0, groups: BTreeMap::new(), owner: BTreeMap::new() }
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    /// Registers a new independent factor; returns one id per mode of `state`.
    pub fn insert(&mut self, state: TruncatedFockState) -> Result<Vec<ModeId>, DesError> {
        if state.cutoff() != self.cutoff {
            return Err(DesError::Quantum(format!(
                "state cutoff {} differs from run cutoff {}",
                state.cutoff().dim(),
                self.cutoff.dim()
            )));
        }
        let ids: Vec<ModeId> = (0..state.modes()).map(|k| ModeId(self.next_mode + k as u64)).collect();
        self.next_mode += ids.len() as u64;
        let gid = self.next_group;
        self.next_group += 1;
        for &id in &ids {
            self.owner.insert(id, gid);
        }
        self.groups.insert(gid, Group { modes: ids.clone(), state });
        Ok(ids)
    }

    pub fn insert_vacuum(&mut self) -> ModeId {
        self.insert(TruncatedFockState::vacuum(1, self.cutoff)).expect("cutoff matches")[0]
    }

    pub fn contains(&self, mode: ModeId) -> bool {
        self.owner.contains_key(&mode)
    }

    fn group_of(&self, mode: ModeId) -> Result<u64, DesError> {
        self.owner.get(&mode).copied().ok_or_else(|| DesError::Quantum(format!("unknown mode {}", mode.0)))
    }

    /// Merges the factors holding `modes` into one. Returns the group id and
    /// the position of each requested mode inside it.
    fn gather(&mut self, modes: &[ModeId]) -> Result<(u64, Vec<usize>), DesError> {
        let mut gids: Vec<u64> = modes.iter().map(|&m| self.group_of(m)).collect::<Result<_, _>>()?;
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(DesError::Quantum(format!("mode {} listed twice", m.0)));
            }
        }
        gids.sort_unstable();
        gids.dedup();
        let target = gids[0];
        for &gid in &gids[1..] {
            let other = self.groups.remove(&gid).expect("owner map is consistent");
            let base = self.groups.get_mut(&target).expect("owner map is consistent");
            base.state = base.state.tensor(&other.state)?;
            for &m in &other.modes {
                self.owner.insert(m, target);
            }
            base.modes.extend(other.modes);
        }
        let group = &self.groups[&target];
        let positions = modes.iter().map(|m| group.modes.iter().position(|x| x == m).expect("gathered")).collect();
        Ok((target, positions))
    }

    /// Applies `op` to `modes` (in operator order).
    pub fn apply(&mut self, op: &ModeOperator, modes: &[ModeId]) -> Result<(), DesError> {
        self.update(modes, |state, pos| Ok(state.apply(op, pos)?))
    }

    /// Replaces the joint state of the factor holding `modes` with `f(state, positions)`.
    /// `f` must keep the number of modes unchanged.
    pub fn update<F>(&mut self, modes: &[ModeId], f: F) -> Result<(), DesError>
    where
        F: FnOnce(&TruncatedFockState, &[usize]) -> Result<TruncatedFockState, DesError>,
    {
        let (gid, pos) = self.gather(modes)?;
        let group = self.groups.get_mut(&gid).expect("gathered");
        let next = f(&group.state, &pos)?;
        if next.modes() != group.state.modes() || next.cutoff() != group.state.cutoff() {
            return Err(DesError::Quantum("update changed the shape of the state".into()));
        }
        group.state = next;
        Ok(())
    }

    /// Reduced state of `modes`, in the order given.
    pub fn reduced_state(&self, modes: &[ModeId]) -> Result<TruncatedFockState, DesError> {
        let mut copy = self.clone();
        let (gid, pos) = copy.gather(modes)?;
        let state = &copy.groups[&gid].state;
        if pos.iter().enumerate().all(|(k, &p)| k == p) && pos.len() == state.modes() {
            return Ok(state.clone());
        }
        Ok(partial_trace(state, &pos)?)
    }

    /// Joint photon-number distribution of `modes`.
    pub fn distribution(&self, modes: &[ModeId]) -> Result<OutcomeTable, DesError> {
        Ok(crate::fock::photon_number_distribution(&self.reduced_state(modes)?))
    }

    /// Traces `mode` out of its factor and forgets it.
    pub fn discard(&mut self, mode: ModeId) -> Result<(), DesError> {
        let gid = self.group_of(mode)?;
        self.owner.remove(&mode);
        let group = self.groups.get_mut(&gid).expect("owner map is consistent");
        let pos = group.modes.iter().position(|&m| m == mode).expect("owner map is consistent");
        if group.modes.len() == 1 {
            self.groups.remove(&gid);
            return Ok(());
        }
        let keep: Vec<usize> = (0..group.modes.len()).filter(|&k| k != pos).collect();
        group.state = partial_trace(&group.state, &keep)?;
        group.modes.remove(pos);
        Ok(())
    }

    pub fn mode_count(&self) -> usize {
        self.owner.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_gate, GateKind, GateParams};
    use std::f64::consts::FRAC_PI_4;

    fn cut() -> FockCutoff {
        FockCutoff::new(3).unwrap()
    }

    #[test]
    fn separate_factors_merge_on_joint_gate() {
        let mut q = QuantumRegistry::new(cut());
        let a = q.insert(TruncatedFockState::basis(&[1], cut()).unwrap()).unwrap()[0];
        let b = q.insert(TruncatedFockState::basis(&[1], cut()).unwrap()).unwrap()[0];
        let bs = build_gate(GateKind::Beamsplitter, &GateParams::beamsplitter(FRAC_PI_4, 0.0), cut()).unwrap();
        q.apply(&bs, &[a, b]).unwrap();
        let t = q.distribution(&[a, b]).unwrap();
        assert!(t.get(&[1, 1]) < 1e-12);
        assert!((t.get(&[2, 0]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reduced_state_respects_requested_order() {
        let mut q = QuantumRegistry::new(cut());
        let ids = q.insert(TruncatedFockState::basis(&[2, 0, 1], cut()).unwrap()).unwrap();
        let t = q.distribution(&[ids[2], ids[0]]).unwrap();
        assert!((t.get(&[1, 2]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn discard_traces_out() {
        let mut q = QuantumRegistry::new(cut());
        let ids = q.insert(TruncatedFockState::basis(&[2, 1], cut()).unwrap()).unwrap();
        q.discard(ids[0]).unwrap();
        assert!(!q.contains(ids[0]));
        assert!((q.distribution(&[ids[1]]).unwrap().get(&[1]) - 1.0).abs() < 1e-12);
        q.discard(ids[1]).unwrap();
        assert_eq!(q.mode_count(), 0);
        assert!(q.discard(ids[1]).is_err());
    }

    #[test]
    fn rejects_foreign_cutoff() {
        let mut q = QuantumRegistry::new(cut());
        assert!(q.insert(TruncatedFockState::vacuum(1, FockCutoff::new(4).unwrap())).is_err());
    }
}
