//! Grouping strategies: balanced partitions of the RIS elements into groups
//! that share a fully connected reactance network.
//!
//! Statistics-based strategies ([`correlated_grouping`],
//! [`uncorrelated_grouping`]) are fixed in time. [`optimal_grouping`] adapts
//! the partition to one channel realization by hill climbing on the grouping
//! quality [`rho`] over the two-element swap neighbourhood.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;

use crate::channels::Polarization;
use crate::netmodel::ChannelRealization;
use crate::{Error, Result};

/// Candidates within this distance of the best ρ are treated as ties.
const RHO_TIE_TOL: f64 = 1e-12;

/// Balanced partition of `n_i` element indices into `n_i / n_g` groups.
///
/// Group `g` holds the elements whose `assignment` entry equals `g`. Inside
/// a group, local port `k` is the `k`-th smallest element index of the group.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupingStrategy {
    n_g: usize,
    assignment: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl GroupingStrategy {
    /// Builds a strategy from an element → group id map.
    ///
    /// Group ids must cover `0..G` and every id must occur equally often.
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        let n_i = assignment.len();
        if n_i == 0 {
            return Err(Error::invalid("grouping needs at least one element"));
        }
        let groups = assignment.iter().copied().max().unwrap_or(0) + 1;
        let mut members = vec![Vec::new(); groups];
        for (element, &g) in assignment.iter().enumerate() {
            members[g].push(element);
        }
        let n_g = n_i / groups;
        if n_g * groups != n_i || members.iter().any(|m| m.len() != n_g) {
            return Err(Error::invalid(format!(
                "grouping {} is not balanced over {groups} groups",
                display_assignment(&assignment)
            )));
        }
        Ok(Self {
            n_g,
            assignment,
            members,
        })
    }

    /// Every element in its own group (single connected architecture).
    pub fn singletons(n_i: usize) -> Result<Self> {
        Self::new((0..n_i).collect())
    }

    /// One group holding every element (fully connected architecture).
    pub fn single_group(n_i: usize) -> Result<Self> {
        Self::new(vec![0; n_i])
    }

    pub fn n_i(&self) -> usize {
        self.assignment.len()
    }

    pub fn n_g(&self) -> usize {
        self.n_g
    }

    pub fn group_count(&self) -> usize {
        self.members.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Element indices of group `g`, ascending.
    pub fn members(&self, g: usize) -> &[usize] {
        &self.members[g]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.members
    }

    /// Assignment relabelled so groups are numbered by first appearance.
    /// Two strategies describe the same partition iff their canonical forms match.
    pub fn canonical(&self) -> Vec<usize> {
        let mut relabel = vec![usize::MAX; self.group_count()];
        let mut next = 0;
        self.assignment
            .iter()
            .map(|&g| {
                if relabel[g] == usize::MAX {
                    relabel[g] = next;
                    next += 1;
                }
                relabel[g]
            })
            .collect()
    }

    pub fn same_partition(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }

    /// Strategy obtained by exchanging the groups of elements `i` and `k`.
    pub fn swapped(&self, i: usize, k: usize) -> Self {
        let mut assignment = self.assignment.clone();
        assignment.swap(i, k);
        // Swapping keeps every group size, so the result is balanced.
        Self::new(assignment).expect("swap preserves balance")
    }
}

fn display_assignment(assignment: &[usize]) -> String {
    assignment
        .iter()
        .map(|g| g.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for GroupingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&display_assignment(&self.assignment))
    }
}

impl FromStr for GroupingStrategy {
    type Err = Error;

    /// Parses the comma-separated form, e.g. `0,0,1,1`.
    fn from_str(s: &str) -> Result<Self> {
        let assignment = s
            .trim()
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad group id `{t}` in `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(assignment)
    }
}

fn check_sizes(n_i: usize, n_g: usize) -> Result<usize> {
    if n_i == 0 || n_g == 0 || !n_i.is_multiple_of(n_g) {
        return Err(Error::invalid(format!(
            "group size {n_g} must divide element count {n_i}"
        )));
    }
    Ok(n_i / n_g)
}

/// Groups adjacent elements: group `g` is `g·N_G .. g·N_G + N_G − 1`.
pub fn correlated_grouping(n_i: usize, n_g: usize, polarization: Polarization) -> Result<GroupingStrategy> {
    check_sizes(n_i, n_g)?;
    if polarization == Polarization::Dual && !n_i.is_multiple_of(2) {
        return Err(Error::invalid("dual polarization needs an even element count"));
    }
    GroupingStrategy::new((0..n_i).map(|e| e / n_g).collect())
}

/// Stride interleave: group `g` is `g, g + G, g + 2G, …`.
///
/// For dual polarization the elements are ordered by polarization class
/// (even indices first, then odd) before the stride is applied, so elements
/// of one polarization inside a group sit `2G` indices apart.
pub fn uncorrelated_grouping(n_i: usize, n_g: usize, polarization: Polarization) -> Result<GroupingStrategy> {
    let groups = check_sizes(n_i, n_g)?;
    let order: Vec<usize> = match polarization {
        Polarization::Uni => (0..n_i).collect(),
        Polarization::Dual => {
            if !n_i.is_multiple_of(2) {
                return Err(Error::invalid("dual polarization needs an even element count"));
            }
            (0..n_i).step_by(2).chain((1..n_i).step_by(2)).collect()
        }
    };
    let mut assignment = vec![0; n_i];
    for (slot, &element) in order.iter().enumerate() {
        assignment[element] = slot % groups;
    }
    GroupingStrategy::new(assignment)
}

fn check_grouping(ch: &ChannelRealization, grouping: &GroupingStrategy) -> Result<()> {
    if ch.n_i() != grouping.n_i() {
        return Err(Error::DimensionMismatch {
            expected: ch.n_i(),
            found: grouping.n_i(),
        });
    }
    Ok(())
}

/// Per-element squared moduli of both RIS links.
fn element_powers(ch: &ChannelRealization) -> (Vec<f64>, Vec<f64>) {
    (
        ch.h_ri().iter().map(|h| h.norm_sqr()).collect(),
        ch.h_it().iter().map(|h| h.norm_sqr()).collect(),
    )
}

fn channel_norm_product(ri: &[f64], it: &[f64]) -> Result<f64> {
    let d = (ri.iter().sum::<f64>() * it.iter().sum::<f64>()).sqrt();
    if d <= 0.0 || !d.is_finite() {
        return Err(Error::invalid("grouping quality needs nonzero channels"));
    }
    Ok(d)
}

/// Cosine similarity between the per-group channel norm vectors `m_RI` and
/// `m_IT`. Equals 1 exactly when the group bound meets the fully connected bound.
pub fn rho(ch: &ChannelRealization, grouping: &GroupingStrategy) -> Result<f64> {
    check_grouping(ch, grouping)?;
    let (ri, it) = element_powers(ch);
    let denom = channel_norm_product(&ri, &it)?;
    let numer: f64 = grouping
        .groups()
        .iter()
        .map(|m| {
            let a: f64 = m.iter().map(|&e| ri[e]).sum();
            let b: f64 = m.iter().map(|&e| it[e]).sum();
            (a * b).sqrt()
        })
        .sum();
    Ok((numer / denom).min(1.0))
}

/// All strategies reachable by exchanging two elements of different groups,
/// in ascending `(i, k)` order with `i < k`.
///
/// The count is `N_I·N_G·(G − 1)/2`.
pub fn swap_neighborhood(grouping: &GroupingStrategy) -> Vec<GroupingStrategy> {
    let a = grouping.assignment();
    let n = a.len();
    let mut out = Vec::with_capacity(n * grouping.n_g() * (grouping.group_count() - 1) / 2);
    for i in 0..n {
        for k in (i + 1)..n {
            if a[i] != a[k] {
                out.push(grouping.swapped(i, k));
            }
        }
    }
    out
}

/// Per-realization grouping optimization starting from uni-polarized
/// uncorrelated grouping.
pub fn optimal_grouping(ch: &ChannelRealization, n_g: usize) -> Result<GroupingStrategy> {
    let start = uncorrelated_grouping(ch.n_i(), n_g, Polarization::Uni)?;
    optimal_grouping_from(ch, &start)
}

/// Best-improvement swap search on ρ from an explicit starting strategy.
///
/// Each iteration scans the whole swap neighbourhood and moves to the best
/// candidate only if it beats the incumbent by more than `1e-12`. Among
/// near-equal best candidates the lexicographically smallest assignment wins.
pub fn optimal_grouping_from(ch: &ChannelRealization, start: &GroupingStrategy) -> Result<GroupingStrategy> {
    check_grouping(ch, start)?;
    let (ri, it) = element_powers(ch);
    let denom = channel_norm_product(&ri, &it)?;
    let mut current = start.clone();
    if current.group_count() == 1 || current.n_g() == 1 {
        return Ok(current);
    }

    loop {
        let groups = current.group_count();
        let assignment = current.assignment();
        let mut sum_ri = vec![0.0; groups];
        let mut sum_it = vec![0.0; groups];
        for (e, &g) in assignment.iter().enumerate() {
            sum_ri[g] += ri[e];
            sum_it[g] += it[e];
        }
        let term: Vec<f64> = (0..groups).map(|g| (sum_ri[g] * sum_it[g]).sqrt()).collect();
        let numer: f64 = term.iter().sum();
        let current_rho = numer / denom;

        // (rho, i, k) of every candidate swap.
        let mut candidates = Vec::new();
        let mut best = f64::NEG_INFINITY;
        for i in 0..assignment.len() {
            let g1 = assignment[i];
            for k in (i + 1)..assignment.len() {
                let g2 = assignment[k];
                if g1 == g2 {
                    continue;
                }
                let a1 = (sum_ri[g1] - ri[i] + ri[k]).max(0.0);
                let b1 = (sum_it[g1] - it[i] + it[k]).max(0.0);
                let a2 = (sum_ri[g2] - ri[k] + ri[i]).max(0.0);
                let b2 = (sum_it[g2] - it[k] + it[i]).max(0.0);
                let cand = (numer - term[g1] - term[g2] + (a1 * b1).sqrt() + (a2 * b2).sqrt()) / denom;
                best = best.max(cand);
                candidates.push((cand, i, k));
            }
        }

        if best <= current_rho + RHO_TIE_TOL {
            return Ok(current);
        }
        let next = candidates
            .into_iter()
            .filter(|&(r, _, _)| r >= best - RHO_TIE_TOL)
            .map(|(_, i, k)| current.swapped(i, k))
            .min_by(|x, y| x.assignment().cmp(y.assignment()))
            .expect("at least one best candidate");
        current = next;
    }
}

/// Number of distinct balanced partitions, `N_I! / (G!·(N_G!)^G)`.
pub fn count_groupings(n_i: usize, n_g: usize) -> Result<BigUint> {
    let groups = check_sizes(n_i, n_g)?;
    let factorial = |n: usize| (1..=n).fold(BigUint::from(1u32), |acc, k| acc * BigUint::from(k));
    let denom = factorial(groups) * factorial(n_g).pow(groups as u32);
    Ok(factorial(n_i) / denom)
}
