//! Acquisition-pathway analysis.
//!
//! A batch of episodes induces a tree over acquisition sets: every episode
//! starts at the empty set, each *new* slot acquired moves it one level down
//! (re-acquiring an already-held slot changes nothing and adds no edge), and
//! the episode's end — termination or timeout — is tallied at the set it
//! held when it stopped. Node keys are bitmasks over slots, so the tree is
//! bounded by 32 slots.
//!
//! Every episode contributes one root-to-end path, which yields the
//! conservation law checked by [`PathwayTree::check_conservation`]: at each
//! node, arrivals equal departures plus endings.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::env::EpisodeRecord;
use crate::error::{Error, Result};

/// One acquisition set reached by at least one episode.
#[derive(Debug, Clone, Serialize)]
pub struct PathwayNode {
    /// Bitmask of acquired slots (bit `i` = slot `i`).
    pub mask: u32,
    /// Episodes whose acquisition path passed through this set.
    pub visits: usize,
    /// Episodes that stopped here (terminated or timed out).
    pub terminations: usize,
    /// Of those, how many ended with a correct prediction. Timeouts make no
    /// prediction and never count as correct.
    pub correct: usize,
    /// Outgoing traversal counts, keyed by the newly acquired slot.
    pub children: BTreeMap<usize, usize>,
}

impl PathwayNode {
    fn new(mask: u32) -> Self {
        PathwayNode { mask, visits: 0, terminations: 0, correct: 0, children: BTreeMap::new() }
    }

    pub fn depth(&self) -> u32 {
        self.mask.count_ones()
    }

    /// Accuracy among episodes that stopped here, if any did.
    pub fn stop_accuracy(&self) -> Option<f64> {
        (self.terminations > 0).then(|| self.correct as f64 / self.terminations as f64)
    }
}

/// Tree of acquisition sets with per-node traffic and outcome counts.
#[derive(Debug, Clone)]
pub struct PathwayTree {
    n_slots: usize,
    n_episodes: usize,
    nodes: BTreeMap<u32, PathwayNode>,
}

/// Aggregate the acquisition paths of a batch of episodes.
pub fn build_pathway_tree(episodes: &[EpisodeRecord], n_slots: usize) -> Result<PathwayTree> {
    if n_slots == 0 || n_slots > 32 {
        return Err(Error::InvalidConfig(format!(
            "pathway trees support 1 to 32 slots, got {n_slots}"
        )));
    }
    let mut nodes: BTreeMap<u32, PathwayNode> = BTreeMap::new();
    // An empty batch still has a (zero-traffic) root so consumers can rely
    // on the root's existence.
    nodes.insert(0, PathwayNode::new(0));
    for ep in episodes {
        let mut mask: u32 = 0;
        nodes.get_mut(&0).unwrap().visits += 1;
        for &action in &ep.actions {
            if action == 0 {
                break; // terminate: path ends at the current set
            }
            let slot = action - 1;
            if slot >= n_slots {
                return Err(Error::InvalidAction(format!(
                    "episode {} acquires slot {slot} outside {n_slots} slots",
                    ep.study_id
                )));
            }
            let bit = 1u32 << slot;
            if mask & bit != 0 {
                continue; // re-selection: no new information, no edge
            }
            let next = mask | bit;
            *nodes.get_mut(&mask).unwrap().children.entry(slot).or_insert(0) += 1;
            nodes.entry(next).or_insert_with(|| PathwayNode::new(next)).visits += 1;
            mask = next;
        }
        let end = nodes.get_mut(&mask).unwrap();
        end.terminations += 1;
        if ep.prediction == Some(ep.label) {
            end.correct += 1;
        }
    }
    Ok(PathwayTree { n_slots, n_episodes: episodes.len(), nodes })
}

impl PathwayTree {
    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn n_episodes(&self) -> usize {
        self.n_episodes
    }

    pub fn node(&self, mask: u32) -> Option<&PathwayNode> {
        self.nodes.get(&mask)
    }

    pub fn root(&self) -> &PathwayNode {
        &self.nodes[&0]
    }

    /// Nodes ordered by depth (set size), then by mask value within a depth.
    pub fn nodes(&self) -> Vec<&PathwayNode> {
        let mut out: Vec<&PathwayNode> = self.nodes.values().collect();
        out.sort_by_key(|n| (n.depth(), n.mask));
        out
    }

    /// Verify that every node's arrivals equal its departures plus endings,
    /// that the root saw every episode, and that every episode ended.
    pub fn check_conservation(&self) -> Result<()> {
        if self.root().visits != self.n_episodes {
            return Err(Error::InvalidConfig(format!(
                "root saw {} visits for {} episodes",
                self.root().visits,
                self.n_episodes
            )));
        }
        let mut total_terminations = 0;
        for node in self.nodes.values() {
            let departures: usize = node.children.values().sum();
            if node.visits != departures + node.terminations {
                return Err(Error::InvalidConfig(format!(
                    "node {:#b}: {} visits vs {} departures + {} terminations",
                    node.mask, node.visits, departures, node.terminations
                )));
            }
            for (&slot, &count) in &node.children {
                let child = node.mask | (1u32 << slot);
                match self.nodes.get(&child) {
                    Some(c) if c.visits >= count => {}
                    _ => {
                        return Err(Error::InvalidConfig(format!(
                            "edge {:#b} -> {:#b} carries {count} episodes but the child is lighter",
                            node.mask, child
                        )));
                    }
                }
            }
            total_terminations += node.terminations;
        }
        if total_terminations != self.n_episodes {
            return Err(Error::InvalidConfig(format!(
                "{total_terminations} endings for {} episodes",
                self.n_episodes
            )));
        }
        Ok(())
    }

    fn mask_label(&self, mask: u32, slot_names: &[String]) -> String {
        if mask == 0 {
            return "start".into();
        }
        (0..self.n_slots)
            .filter(|&s| mask & (1 << s) != 0)
            .map(|s| slot_names.get(s).cloned().unwrap_or_else(|| format!("slot{s}")))
            .collect::<Vec<_>>()
            .join("+")
    }

    /// Graphviz rendering: one box per acquisition set, edges labeled with
    /// the slot acquired and the episode count that took it.
    pub fn to_dot(&self, slot_names: &[String]) -> String {
        let mut out = String::from("digraph pathways {\n");
        out.push_str("  rankdir=LR;\n  node [shape=box, style=rounded, fontname=\"monospace\"];\n");
        for node in self.nodes() {
            let mut label = format!("{}\\nvisits {}", self.mask_label(node.mask, slot_names), node.visits);
            if node.terminations > 0 {
                label.push_str(&format!(
                    "\\nstops {} (acc {:.2})",
                    node.terminations,
                    node.stop_accuracy().unwrap()
                ));
            }
            out.push_str(&format!("  n{} [label=\"{}\"];\n", node.mask, label));
        }
        for node in self.nodes() {
            for (&slot, &count) in &node.children {
                let child = node.mask | (1u32 << slot);
                let name = slot_names
                    .get(slot)
                    .cloned()
                    .unwrap_or_else(|| format!("slot{slot}"));
                out.push_str(&format!(
                    "  n{} -> n{} [label=\"{} x{}\"];\n",
                    node.mask, child, name, count
                ));
            }
        }
        out.push_str("}\n");
        out
    }

    /// Flat, serialization-friendly view in depth order.
    pub fn report(&self, slot_names: &[String]) -> PathwayReport {
        PathwayReport {
            n_slots: self.n_slots,
            n_episodes: self.n_episodes,
            nodes: self
                .nodes()
                .into_iter()
                .map(|n| PathwayNodeReport {
                    mask: n.mask,
                    slots: self.mask_label(n.mask, slot_names),
                    depth: n.depth(),
                    visits: n.visits,
                    terminations: n.terminations,
                    correct: n.correct,
                    stop_accuracy: n.stop_accuracy(),
                    children: n
                        .children
                        .iter()
                        .map(|(&slot, &count)| PathwayEdgeReport { slot, count })
                        .collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PathwayReport {
    pub n_slots: usize,
    pub n_episodes: usize,
    pub nodes: Vec<PathwayNodeReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathwayNodeReport {
    pub mask: u32,
    pub slots: String,
    pub depth: u32,
    pub visits: usize,
    pub terminations: usize,
    pub correct: usize,
    pub stop_accuracy: Option<f64>,
    pub children: Vec<PathwayEdgeReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathwayEdgeReport {
    pub slot: usize,
    pub count: usize,
}
