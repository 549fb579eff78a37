//! Word alignment: EM-trained lexical tables, Viterbi alignment and
//! bidirectional symmetrization.

mod ibm1;
mod ibm2;

pub use ibm1::{
    read_ttable, train_ibm1, viterbi_align, write_ttable, Direction, TranslationTable, NULL_TOKEN,
    PROB_FLOOR,
};
pub use ibm2::{train_ibm2, viterbi_align_ibm2, Ibm2Model};

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// A set of word links over a sentence pair, 0-based, source index first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentMatrix {
    pub source_len: usize,
    pub target_len: usize,
    links: BTreeSet<(usize, usize)>,
}

impl AlignmentMatrix {
    pub fn new(source_len: usize, target_len: usize) -> Self {
        AlignmentMatrix {
            source_len,
            target_len,
            links: BTreeSet::new(),
        }
    }

    pub fn from_links(
        source_len: usize,
        target_len: usize,
        links: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut matrix = AlignmentMatrix::new(source_len, target_len);
        for (i, j) in links {
            matrix.insert(i, j)?;
        }
        Ok(matrix)
    }

    pub fn insert(&mut self, i: usize, j: usize) -> Result<()> {
        if i >= self.source_len || j >= self.target_len {
            return Err(Error::validation(format!(
                "link {i}-{j} out of bounds for {}x{} alignment",
                self.source_len, self.target_len
            )));
        }
        self.links.insert((i, j));
        Ok(())
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.links.contains(&(i, j))
    }

    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.links.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn source_is_aligned(&self, i: usize) -> bool {
        self.links.iter().any(|&(li, _)| li == i)
    }

    pub fn target_is_aligned(&self, j: usize) -> bool {
        self.links.iter().any(|&(_, lj)| lj == j)
    }

    fn same_shape(&self, other: &AlignmentMatrix) -> bool {
        self.source_len == other.source_len && self.target_len == other.target_len
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetrizationHeuristic {
    Intersection,
    Union,
    GrowDiagFinal,
}

impl std::str::FromStr for SymmetrizationHeuristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intersection" => Ok(SymmetrizationHeuristic::Intersection),
            "union" => Ok(SymmetrizationHeuristic::Union),
            "grow-diag-final" => Ok(SymmetrizationHeuristic::GrowDiagFinal),
            other => Err(Error::validation(format!(
                "unknown symmetrization heuristic `{other}` (expected intersection, union or grow-diag-final)"
            ))),
        }
    }
}

impl std::fmt::Display for SymmetrizationHeuristic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            SymmetrizationHeuristic::Intersection => "intersection",
            SymmetrizationHeuristic::Union => "union",
            SymmetrizationHeuristic::GrowDiagFinal => "grow-diag-final",
        };
        f.write_str(name)
    }
}

const NEIGHBORS: [(isize, isize); 8] = [
    (-1, 0),
    (0, -1),
    (1, 0),
    (0, 1),
    (-1, -1),
    (-1, 1),
    (1, -1),
    (1, 1),
];

/// Combines forward and reverse Viterbi alignments. Both inputs must share
/// dimensions; the result always satisfies intersection ⊆ result ⊆ union.
pub fn symmetrize(
    forward: &AlignmentMatrix,
    reverse: &AlignmentMatrix,
    heuristic: SymmetrizationHeuristic,
) -> Result<AlignmentMatrix> {
    if !forward.same_shape(reverse) {
        return Err(Error::validation(format!(
            "alignment dimensions differ: {}x{} vs {}x{}",
            forward.source_len, forward.target_len, reverse.source_len, reverse.target_len
        )));
    }
    let mut result = AlignmentMatrix::new(forward.source_len, forward.target_len);
    match heuristic {
        SymmetrizationHeuristic::Intersection => {
            result.links = forward.links.intersection(&reverse.links).copied().collect();
        }
        SymmetrizationHeuristic::Union => {
            result.links = forward.links.union(&reverse.links).copied().collect();
        }
        SymmetrizationHeuristic::GrowDiagFinal => {
            grow_diag_final(forward, reverse, &mut result);
        }
    }
    Ok(result)
}

fn grow_diag_final(forward: &AlignmentMatrix, reverse: &AlignmentMatrix, result: &mut AlignmentMatrix) {
    let m = forward.source_len;
    let n = forward.target_len;
    let union: BTreeSet<(usize, usize)> = forward.links.union(&reverse.links).copied().collect();
    result.links = forward.links.intersection(&reverse.links).copied().collect();

    // grow-diag: repeatedly extend aligned points to neighboring union links
    // that touch an unaligned word on either side. Additions take effect
    // immediately within a pass.
    loop {
        let mut changed = false;
        for i in 0..m {
            for j in 0..n {
                if !result.links.contains(&(i, j)) {
                    continue;
                }
                for (di, dj) in NEIGHBORS {
                    let (ni, nj) = (i as isize + di, j as isize + dj);
                    if ni < 0 || nj < 0 || ni as usize >= m || nj as usize >= n {
                        continue;
                    }
                    let cand = (ni as usize, nj as usize);
                    if union.contains(&cand)
                        && !result.links.contains(&cand)
                        && (!result.source_is_aligned(cand.0) || !result.target_is_aligned(cand.1))
                    {
                        result.links.insert(cand);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    // final: sweep the directional alignments, adding links whose source or
    // target word is still unaligned.
    for direction in [&forward.links, &reverse.links] {
        for &(i, j) in direction {
            if !result.links.contains(&(i, j))
                && (!result.source_is_aligned(i) || !result.target_is_aligned(j))
            {
                result.links.insert((i, j));
            }
        }
    }
}

/// Per-iteration corpus log-likelihood from EM training.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmTrace {
    pub log_likelihoods: Vec<f64>,
}

impl EmTrace {
    pub fn is_non_decreasing(&self, slack: f64) -> bool {
        self.log_likelihoods
            .windows(2)
            .all(|w| w[1] >= w[0] - slack)
    }
}

/// Writes one line per alignment: space-separated `i-j` links in ascending
/// order, an empty line for an empty alignment.
pub fn write_alignments(path: &Path, alignments: &[AlignmentMatrix]) -> Result<()> {
    let mut out = Vec::new();
    for alignment in alignments {
        let line: Vec<String> = alignment.links().map(|(i, j)| format!("{i}-{j}")).collect();
        writeln!(out, "{}", line.join(" ")).expect("write to vec");
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Reads raw link lines. Dimensions are not stored in the format, so callers
/// attach the result to a corpus via [`AlignmentMatrix::from_links`].
pub fn read_alignment_links(path: &Path) -> Result<Vec<Vec<(usize, usize)>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let origin = path.display().to_string();
    let mut all = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let mut links = Vec::new();
        for token in line.split_whitespace() {
            let link = token.split_once('-').and_then(|(i, j)| {
                Some((i.parse::<usize>().ok()?, j.parse::<usize>().ok()?))
            });
            match link {
                Some(l) => links.push(l),
                None => {
                    return Err(Error::parse(
                        &origin,
                        idx + 1,
                        format!("bad link token `{token}`"),
                    ))
                }
            }
        }
        all.push(links);
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(m: usize, n: usize, links: &[(usize, usize)]) -> AlignmentMatrix {
        AlignmentMatrix::from_links(m, n, links.iter().copied()).unwrap()
    }

    #[test]
    fn out_of_bounds_links_rejected() {
        let mut a = AlignmentMatrix::new(2, 2);
        assert!(a.insert(1, 1).is_ok());
        assert!(a.insert(2, 0).is_err());
        assert!(a.insert(0, 2).is_err());
    }

    #[test]
    fn identical_inputs_are_fixed_points() {
        let a = matrix(3, 3, &[(0, 0), (1, 2), (2, 1)]);
        for heuristic in [
            SymmetrizationHeuristic::Intersection,
            SymmetrizationHeuristic::Union,
            SymmetrizationHeuristic::GrowDiagFinal,
        ] {
            assert_eq!(symmetrize(&a, &a, heuristic).unwrap(), a);
        }
    }

    #[test]
    fn disjoint_links_intersect_empty_union_full() {
        let fwd = matrix(2, 2, &[(0, 0)]);
        let rev = matrix(2, 2, &[(1, 1)]);
        let inter = symmetrize(&fwd, &rev, SymmetrizationHeuristic::Intersection).unwrap();
        assert!(inter.is_empty());
        let union = symmetrize(&fwd, &rev, SymmetrizationHeuristic::Union).unwrap();
        assert_eq!(union.links().collect::<Vec<_>>(), vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn grow_diag_extends_to_union_neighbors() {
        let fwd = matrix(2, 2, &[(0, 0), (1, 1)]);
        let rev = matrix(2, 2, &[(0, 0), (0, 1)]);
        let gdf = symmetrize(&fwd, &rev, SymmetrizationHeuristic::GrowDiagFinal).unwrap();
        assert_eq!(gdf.links().collect::<Vec<_>>(), vec![(0, 0), (0, 1), (1, 1)]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = matrix(2, 2, &[(0, 0)]);
        let b = matrix(2, 3, &[(0, 0)]);
        assert!(symmetrize(&a, &b, SymmetrizationHeuristic::Union).is_err());
    }

    #[test]
    fn pharaoh_roundtrip() {
        let alignments = vec![matrix(2, 2, &[(0, 0), (1, 1)]), matrix(1, 1, &[]), matrix(3, 2, &[(2, 0)])];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("aligned.grow-diag-final");
        write_alignments(&path, &alignments).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "0-0 1-1\n\n2-0\n"
        );
        let links = read_alignment_links(&path).unwrap();
        assert_eq!(links, vec![vec![(0, 0), (1, 1)], vec![], vec![(2, 0)]]);
    }

    #[test]
    fn bad_pharaoh_token_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("aligned");
        std::fs::write(&path, "0-0\n1_2\n").unwrap();
        match read_alignment_links(&path).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    /// Naive transcription of the published grow-diag-final pseudocode,
    /// kept structurally different from the production code on purpose.
    mod oracle {
        use std::collections::HashSet;

        type Links = HashSet<(usize, usize)>;

        fn aligned_src(a: &Links, i: usize) -> bool {
            a.iter().any(|&(x, _)| x == i)
        }

        fn aligned_tgt(a: &Links, j: usize) -> bool {
            a.iter().any(|&(_, y)| y == j)
        }

        pub fn grow_diag_final(m: usize, n: usize, fwd: &Links, rev: &Links) -> Links {
            let union: Links = fwd.union(rev).copied().collect();
            let mut a: Links = fwd.intersection(rev).copied().collect();
            let neighbors: [(isize, isize); 8] = [
                (-1, 0),
                (0, -1),
                (1, 0),
                (0, 1),
                (-1, -1),
                (-1, 1),
                (1, -1),
                (1, 1),
            ];
            loop {
                let mut added = false;
                for i in 0..m {
                    for j in 0..n {
                        if !a.contains(&(i, j)) {
                            continue;
                        }
                        for (di, dj) in neighbors {
                            let ni = i as isize + di;
                            let nj = j as isize + dj;
                            if ni < 0 || nj < 0 {
                                continue;
                            }
                            let (ni, nj) = (ni as usize, nj as usize);
                            if ni >= m || nj >= n {
                                continue;
                            }
                            if (!aligned_src(&a, ni) || !aligned_tgt(&a, nj))
                                && union.contains(&(ni, nj))
                                && !a.contains(&(ni, nj))
                            {
                                a.insert((ni, nj));
                                added = true;
                            }
                        }
                    }
                }
                if !added {
                    break;
                }
            }
            for dir in [fwd, rev] {
                let mut sorted: Vec<(usize, usize)> = dir.iter().copied().collect();
                sorted.sort_unstable();
                for (i, j) in sorted {
                    if (!aligned_src(&a, i) || !aligned_tgt(&a, j)) && !a.contains(&(i, j)) {
                        a.insert((i, j));
                    }
                }
            }
            a
        }
    }

    fn all_matrices(m: usize, n: usize) -> Vec<Vec<(usize, usize)>> {
        let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        (0..(1u32 << cells.len()))
            .map(|mask| {
                cells
                    .iter()
                    .enumerate()
                    .filter(|(bit, _)| mask & (1 << bit) != 0)
                    .map(|(_, &link)| link)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn grow_diag_final_matches_oracle_exhaustively() {
        for (m, n) in [(2, 2), (3, 3)] {
            let candidates = all_matrices(m, n);
            for fwd_links in &candidates {
                let fwd = matrix(m, n, fwd_links);
                for rev_links in &candidates {
                    let rev = matrix(m, n, rev_links);
                    let got = symmetrize(&fwd, &rev, SymmetrizationHeuristic::GrowDiagFinal)
                        .unwrap()
                        .links()
                        .collect::<std::collections::HashSet<_>>();
                    let want = oracle::grow_diag_final(
                        m,
                        n,
                        &fwd_links.iter().copied().collect(),
                        &rev_links.iter().copied().collect(),
                    );
                    assert_eq!(got, want, "fwd {fwd_links:?} rev {rev_links:?}");
                }
            }
        }
    }

    #[test]
    fn symmetrize_respects_set_bounds() {
        // Spot version of the property test: intersection ⊆ gdf ⊆ union.
        let fwd = matrix(3, 3, &[(0, 0), (1, 1), (2, 1)]);
        let rev = matrix(3, 3, &[(0, 0), (1, 2)]);
        let inter: Vec<_> = symmetrize(&fwd, &rev, SymmetrizationHeuristic::Intersection)
            .unwrap()
            .links()
            .collect();
        let union: Vec<_> = symmetrize(&fwd, &rev, SymmetrizationHeuristic::Union)
            .unwrap()
            .links()
            .collect();
        let gdf: Vec<_> = symmetrize(&fwd, &rev, SymmetrizationHeuristic::GrowDiagFinal)
            .unwrap()
            .links()
            .collect();
        assert!(inter.iter().all(|l| gdf.contains(l)));
        assert!(gdf.iter().all(|l| union.contains(l)));
    }
}
