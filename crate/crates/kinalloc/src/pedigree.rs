//! Relatedness coefficients from parentage records.
//!
//! Kinship is computed by the tabular recursion over a topological ordering:
//! founders are unrelated and non-inbred, each individual's self-kinship is
//! `(1 + kinship of her parents) / 2`, and kinship with an earlier individual
//! averages that individual's kinship with the two parents. The coefficient
//! of relationship then divides twice the kinship by the geometric mean of
//! the parties' `1 + inbreeding`; the diagonal of that formula is identically
//! one, so it is set exactly.

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One entry of a pedigree file. Founders omit both parents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PedigreeMember {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mother: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub father: Option<String>,
}

/// A parentage table. The member order is preserved in every derived matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pedigree {
    pub members: Vec<PedigreeMember>,
}

/// Relatedness coefficients in pedigree order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelatednessMatrix {
    pub ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl RelatednessMatrix {
    pub fn get(&self, source: &str, target: &str) -> Option<f64> {
        let s = self.ids.iter().position(|id| id == source)?;
        let t = self.ids.iter().position(|id| id == target)?;
        Some(self.values[s][t])
    }
}

impl Pedigree {
    /// Parent indices per member, verifying that every referenced parent
    /// exists and no id repeats.
    fn parent_indices(&self) -> Result<Vec<[Option<usize>; 2]>, Error> {
        let n = self.members.len();
        let mut parents = vec![[None, None]; n];
        for (i, member) in self.members.iter().enumerate() {
            if self.members[..i].iter().any(|m| m.id == member.id) {
                return Err(Error::DuplicateId(member.id.clone()));
            }
        }
        for (i, member) in self.members.iter().enumerate() {
            for (slot, parent) in [&member.mother, &member.father].into_iter().enumerate() {
                if let Some(pid) = parent {
                    let p = self
                        .members
                        .iter()
                        .position(|m| &m.id == pid)
                        .ok_or_else(|| Error::UnknownParent {
                            child: member.id.clone(),
                            parent: pid.clone(),
                        })?;
                    parents[i][slot] = Some(p);
                }
            }
        }
        Ok(parents)
    }

    /// Members ordered parents-first; errors when the parent relation has a
    /// cycle (which includes anyone being her own ancestor).
    fn topological_order(&self, parents: &[[Option<usize>; 2]]) -> Result<Vec<usize>, Error> {
        let n = self.members.len();
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut pending = vec![0usize; n];
        for (i, ps) in parents.iter().enumerate() {
            for p in ps.iter().flatten() {
                children[*p].push(i);
                pending[i] += 1;
            }
        }
        let mut queue: Vec<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = queue.pop() {
            order.push(i);
            for &c in &children[i] {
                pending[c] -= 1;
                if pending[c] == 0 {
                    queue.push(c);
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n)
                .find(|&i| pending[i] > 0)
                .expect("some member is unprocessed");
            return Err(Error::PedigreeCycle(self.members[stuck].id.clone()));
        }
        Ok(order)
    }

    /// Kinship coefficients in member order.
    pub fn kinship(&self) -> Result<Vec<Vec<f64>>, Error> {
        let n = self.members.len();
        let parents = self.parent_indices()?;
        let order = self.topological_order(&parents)?;

        let mut kin = vec![vec![0.0; n]; n];
        let mut processed: Vec<usize> = Vec::with_capacity(n);
        for &j in &order {
            let [mother, father] = parents[j];
            let parental_kinship = match (mother, father) {
                (Some(m), Some(f)) => kin[m][f],
                _ => 0.0,
            };
            kin[j][j] = 0.5 * (1.0 + parental_kinship);
            for &i in &processed {
                // j is no ancestor of i: i was processed first
                let with_mother = mother.map_or(0.0, |m| kin[i][m]);
                let with_father = father.map_or(0.0, |f| kin[i][f]);
                let value = 0.5 * (with_mother + with_father);
                kin[i][j] = value;
                kin[j][i] = value;
            }
            processed.push(j);
        }
        Ok(kin)
    }

    /// Coefficients of relationship in member order. The diagonal is exactly
    /// one and every entry lies in `[0, 1]`.
    pub fn relatedness(&self) -> Result<RelatednessMatrix, Error> {
        let n = self.members.len();
        let parents = self.parent_indices()?;
        let kin = self.kinship()?;
        let inbreeding: Vec<f64> = (0..n)
            .map(|i| match parents[i] {
                [Some(m), Some(f)] => kin[m][f],
                _ => 0.0,
            })
            .collect();

        let mut values = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                values[i][j] = if i == j {
                    1.0
                } else {
                    // the true value never exceeds 1; clamp away the rounding
                    // of the square root so derived games always validate
                    (2.0 * kin[i][j] / ((1.0 + inbreeding[i]) * (1.0 + inbreeding[j])).sqrt())
                        .clamp(0.0, 1.0)
                };
            }
        }
        Ok(RelatednessMatrix {
            ids: self.members.iter().map(|m| m.id.clone()).collect(),
            values,
        })
    }
}
