//! S-connectivity of the point cloud under the kernel neighbor relation.
//!
//! Two cloud points are neighbors when `R_delta > 0`; a labeled point is a
//! neighbor of anything (cloud or labeled) with `K_delta > 0`. The cloud is
//! S-connected when every cloud point reaches some labeled point through a
//! chain of neighbors. Breadth-first search seeded at the labeled set also
//! yields hop counts to the nearest label, useful for diagnosing
//! barely-connected instances.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::AffinityGraph;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub s_connected: bool,
    /// Cloud indices that cannot reach any labeled point.
    pub unreachable: Vec<u32>,
    pub reachable_count: usize,
    /// BFS hop count to the nearest label per cloud point; `None` when
    /// unreachable.
    pub hops: Vec<Option<u32>>,
}

/// Breadth-first traversal over the union neighbor relation, seeded at all
/// labeled points.
pub fn check_s_connected(graph: &AffinityGraph) -> ConnectivityReport {
    let n = graph.n();
    let m = graph.m();
    let profile = &graph.profile;
    let r_support = profile.r_support_distance();
    let k_support = profile.k_support_distance();

    let mut visited_p = vec![false; n];
    let mut visited_s = vec![false; m];
    let mut hops = vec![None; n];
    let mut queue: VecDeque<(u32, bool, u32)> = VecDeque::new(); // (idx, is_labeled, hop)
    for s in 0..m {
        visited_s[s] = true;
        queue.push_back((s as u32, true, 0));
    }

    while let Some((v, is_labeled, hop)) = queue.pop_front() {
        if is_labeled {
            let x = graph.point_s(v as usize);
            graph.index_p().for_each_within(x, k_support, |j, d2| {
                if !visited_p[j as usize] && profile.k_positive(d2) {
                    visited_p[j as usize] = true;
                    hops[j as usize] = Some(hop + 1);
                    queue.push_back((j, false, hop + 1));
                }
            });
            graph.index_s().for_each_within(x, k_support, |j, d2| {
                if !visited_s[j as usize] && profile.k_positive(d2) {
                    visited_s[j as usize] = true;
                    queue.push_back((j, true, hop + 1));
                }
            });
        } else {
            let x = graph.point_p(v as usize);
            graph.index_p().for_each_within(x, r_support, |j, d2| {
                if !visited_p[j as usize] && profile.r_positive(d2) {
                    visited_p[j as usize] = true;
                    hops[j as usize] = Some(hop + 1);
                    queue.push_back((j, false, hop + 1));
                }
            });
            graph.index_s().for_each_within(x, k_support, |j, d2| {
                if !visited_s[j as usize] && profile.k_positive(d2) {
                    visited_s[j as usize] = true;
                    queue.push_back((j, true, hop + 1));
                }
            });
        }
    }

    let unreachable: Vec<u32> = (0..n as u32).filter(|&i| !visited_p[i as usize]).collect();
    ConnectivityReport {
        s_connected: unreachable.is_empty(),
        reachable_count: n - unreachable.len(),
        unreachable,
        hops,
    }
}
