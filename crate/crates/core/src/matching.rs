//! Pair-score matrix and the user-pairing subproblem.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pair_opt::PairSolution;
use crate::scenario::Scenario;

/// Largest instance the exhaustive matcher accepts.
pub const EXACT_MAX_USERS: usize = 12;

/// Symmetric one-to-one assignment of users. Users may stay unpaired.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing {
    partner: Vec<Option<usize>>,
}

impl Pairing {
    pub fn empty(num_users: usize) -> Self {
        Pairing { partner: vec![None; num_users] }
    }

    pub fn from_pairs(num_users: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut p = Pairing::empty(num_users);
        for &(i, j) in pairs {
            if i == j || i >= num_users || j >= num_users || p.partner[i].is_some() || p.partner[j].is_some() {
                return Err(Error::InvalidPairing(format!("cannot add pair ({i}, {j})")));
            }
            p.pair(i, j);
        }
        Ok(p)
    }

    /// Link `i` and `j`. Both must currently be unpaired.
    pub fn pair(&mut self, i: usize, j: usize) {
        assert!(i != j && self.partner[i].is_none() && self.partner[j].is_none());
        self.partner[i] = Some(j);
        self.partner[j] = Some(i);
    }

    pub fn num_users(&self) -> usize {
        self.partner.len()
    }

    pub fn partner(&self, i: usize) -> Option<usize> {
        self.partner[i]
    }

    /// Matched pairs `(i, j)` with `i < j`, ordered by `i`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.partner
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.filter(|&j| j > i).map(|j| (i, j)))
            .collect()
    }

    pub fn unpaired(&self) -> Vec<usize> {
        (0..self.partner.len()).filter(|&i| self.partner[i].is_none()).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.partner
            .iter()
            .enumerate()
            .all(|(i, p)| p.is_none_or(|j| j != i && j < self.partner.len() && self.partner[j] == Some(i)))
    }

    /// Symmetry plus mutual eligibility in `scn`.
    pub fn validate(&self, scn: &Scenario) -> Result<()> {
        if self.partner.len() != scn.num_users() {
            return Err(Error::InvalidPairing(format!(
                "pairing covers {} users, scenario has {}",
                self.partner.len(),
                scn.num_users()
            )));
        }
        if !self.is_symmetric() {
            return Err(Error::InvalidPairing("partner map is not symmetric".into()));
        }
        for (i, j) in self.pairs() {
            if !scn.is_eligible(i, j) {
                return Err(Error::NotEligible { i, j });
            }
        }
        Ok(())
    }
}

/// Symmetric matrix of optimal pair scores. Diagonal and ineligible or
/// infeasible cells are absent and can never be selected.
#[derive(Clone, Debug)]
pub struct OmegaMatrix {
    n: usize,
    scores: Vec<Option<f64>>,
    solutions: BTreeMap<(usize, usize), PairSolution>,
}

impl OmegaMatrix {
    /// Matrix over `n` users with the given `(i, j, score)` cells set
    /// symmetrically.
    pub fn from_entries<I: IntoIterator<Item = (usize, usize, f64)>>(n: usize, entries: I) -> Result<Self> {
        let mut scores = vec![None; n * n];
        for (i, j, w) in entries {
            if i == j || i >= n || j >= n {
                return Err(Error::InvalidArgument(format!("invalid omega cell ({i}, {j})")));
            }
            if w.is_nan() {
                return Err(Error::InvalidArgument(format!("omega cell ({i}, {j}) is NaN")));
            }
            if w.is_finite() {
                scores[i * n + j] = Some(w);
                scores[j * n + i] = Some(w);
            }
        }
        Ok(OmegaMatrix { n, scores, solutions: BTreeMap::new() })
    }

    pub fn num_users(&self) -> usize {
        self.n
    }

    pub fn score(&self, i: usize, j: usize) -> Option<f64> {
        self.scores[i * self.n + j]
    }

    /// The pair solution behind cell `(i, j)`, if the matrix was built from
    /// solutions.
    pub fn solution(&self, i: usize, j: usize) -> Option<&PairSolution> {
        self.solutions.get(&(i.min(j), i.max(j)))
    }

    /// Present cells `(i, j, score)` with `i < j`.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| ((i + 1)..self.n).filter_map(move |j| self.score(i, j).map(|w| (i, j, w))))
    }

    /// Total score of the pairs in `pairing`; absent cells count as errors.
    pub fn weight(&self, pairing: &Pairing) -> Result<f64> {
        pairing
            .pairs()
            .into_iter()
            .map(|(i, j)| self.score(i, j).ok_or(Error::InvalidPairing(format!("pair ({i}, {j}) is absent"))))
            .sum()
    }
}

/// Assemble the score matrix from one solution per eligible pair.
/// Infeasible solutions yield absent cells.
pub fn build_omega(scn: &Scenario, solutions: BTreeMap<(usize, usize), PairSolution>) -> Result<OmegaMatrix> {
    let n = scn.num_users();
    for (i, j) in scn.eligible_pairs() {
        if !solutions.contains_key(&(i, j)) {
            return Err(Error::MissingPairSolution { i, j });
        }
    }
    if let Some(&(i, j)) = solutions.keys().find(|&&(i, j)| i >= j || !scn.is_eligible(i, j)) {
        return Err(Error::NotEligible { i, j });
    }
    let entries: Vec<(usize, usize, f64)> = solutions
        .iter()
        .filter(|(_, s)| s.feasible && s.omega.is_finite())
        .map(|(&(i, j), s)| (i, j, s.omega))
        .collect();
    let mut omega = OmegaMatrix::from_entries(n, entries)?;
    omega.solutions = solutions;
    Ok(omega)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchingMode {
    /// Repeatedly fix the remaining pair with the largest score.
    #[default]
    #[serde(alias = "round")]
    Greedy,
    /// Exhaustive maximum-weight matching for small instances.
    Exact,
}

impl std::str::FromStr for MatchingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" | "round" => Ok(MatchingMode::Greedy),
            "exact" => Ok(MatchingMode::Exact),
            other => Err(Error::InvalidArgument(format!("unknown matching mode {other:?}"))),
        }
    }
}

/// Solve the pairing subproblem. Cells with a negative score never enter a
/// pairing since leaving both users unpaired scores higher.
pub fn solve_dup(omega: &OmegaMatrix, mode: MatchingMode) -> Result<Pairing> {
    match mode {
        MatchingMode::Greedy => Ok(greedy(omega)),
        MatchingMode::Exact => exact(omega),
    }
}

fn greedy(omega: &OmegaMatrix) -> Pairing {
    let mut cells: Vec<(usize, usize, f64)> = omega.cells().filter(|&(_, _, w)| w >= 0.0).collect();
    cells.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut pairing = Pairing::empty(omega.n);
    for (i, j, _) in cells {
        if pairing.partner(i).is_none() && pairing.partner(j).is_none() {
            pairing.pair(i, j);
        }
    }
    pairing
}

fn exact(omega: &OmegaMatrix) -> Result<Pairing> {
    let n = omega.n;
    if n > EXACT_MAX_USERS {
        return Err(Error::TooLarge { what: "users", max: EXACT_MAX_USERS, got: n });
    }
    struct Search<'a> {
        omega: &'a OmegaMatrix,
        stack: Vec<(usize, usize)>,
        best: (f64, usize, Vec<(usize, usize)>),
    }
    impl Search<'_> {
        fn run(&mut self, free: u32, weight: f64) {
            if free == 0 {
                let better = weight > self.best.0 || (weight == self.best.0 && self.stack.len() > self.best.1);
                if better {
                    self.best = (weight, self.stack.len(), self.stack.clone());
                }
                return;
            }
            let u = free.trailing_zeros() as usize;
            let rest = free & !(1 << u);
            let mut others = rest;
            while others != 0 {
                let v = others.trailing_zeros() as usize;
                others &= others - 1;
                if let Some(w) = self.omega.score(u, v).filter(|&w| w >= 0.0) {
                    self.stack.push((u, v));
                    self.run(rest & !(1 << v), weight + w);
                    self.stack.pop();
                }
            }
            self.run(rest, weight);
        }
    }
    let mut search = Search { omega, stack: Vec::new(), best: (f64::NEG_INFINITY, 0, Vec::new()) };
    let all = if n == 0 { 0 } else { (1u32 << n) - 1 };
    search.run(all, 0.0);
    Pairing::from_pairs(n, &search.best.2)
}
