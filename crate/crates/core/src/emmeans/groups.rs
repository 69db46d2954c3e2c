//! Compact letter display for closed confidence intervals: two levels share
//! a letter exactly when their intervals overlap.

use std::collections::{BTreeSet, HashSet};

use super::EmmeansError;

/// Letter sets per interval, in input order.
///
/// Letters are the maximal cliques of the interval-overlap graph, found by a
/// sweep with left endpoints ahead of right endpoints at equal coordinates
/// (touching intervals overlap). Cliques are lettered in lexicographic order
/// of their sorted member indices.
pub fn overlap_groups(intervals: &[(f64, f64)]) -> Result<Vec<Vec<String>>, EmmeansError> {
    for (index, &(lower, upper)) in intervals.iter().enumerate() {
        if !(lower.is_finite() && upper.is_finite() && lower <= upper) {
            return Err(EmmeansError::InvalidInterval { index, lower, upper });
        }
    }

    let mut events: Vec<(f64, u8, usize)> = Vec::with_capacity(2 * intervals.len());
    for (i, &(lower, upper)) in intervals.iter().enumerate() {
        events.push((lower, 0, i));
        events.push((upper, 1, i));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut cliques: Vec<Vec<usize>> = Vec::new();
    let mut active = BTreeSet::new();
    let mut grew = false;
    for (_, kind, i) in events {
        if kind == 0 {
            active.insert(i);
            grew = true;
        } else {
            if grew {
                cliques.push(active.iter().copied().collect());
                grew = false;
            }
            active.remove(&i);
        }
    }

    let mut seen_vertices = HashSet::new();
    let mut seen_edges = HashSet::new();
    cliques.retain(|clique| {
        let mut adds = false;
        for (k, &a) in clique.iter().enumerate() {
            adds |= seen_vertices.insert(a);
            for &b in &clique[k + 1..] {
                adds |= seen_edges.insert((a, b));
            }
        }
        adds
    });
    cliques.sort();

    let mut letters = vec![Vec::new(); intervals.len()];
    for (k, clique) in cliques.iter().enumerate() {
        let name = letter_name(k);
        for &i in clique {
            letters[i].push(name.clone());
        }
    }
    Ok(letters)
}

/// `a`..`z`, then `aa`, `ab`, ...
fn letter_name(mut k: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'a' + (k % 26) as u8);
        if k < 26 {
            break;
        }
        k = k / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

/// Letters concatenated (`"ab"`), or comma-separated once any letter name
/// has more than one character.
pub fn format_letters(letters: &[String]) -> String {
    if letters.iter().all(|l| l.len() == 1) {
        letters.concat()
    } else {
        letters.join(",")
    }
}
