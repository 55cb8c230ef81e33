use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fem::{Family, FeFunction, FeSpace};
use crate::linalg::CsrMatrix;
use crate::refinement::{BisectionRule, RefinementRecord};

const SNAP: f64 = 1e-12;

/// Sparse map from coarse to fine coefficients of nested spaces, valid for
/// one refinement step.
#[derive(Debug, Clone, PartialEq)]
pub struct Prolongation {
    matrix: CsrMatrix,
    coarse_generation: u64,
    fine_generation: u64,
}

fn check_record(coarse: &FeSpace, fine: &FeSpace, record: &RefinementRecord) -> Result<()> {
    if coarse.generation() != record.generation_before {
        return Err(Error::StaleProlongation {
            built: record.generation_before,
            found: coarse.generation(),
        });
    }
    if fine.generation() != record.generation_after {
        return Err(Error::StaleProlongation {
            built: record.generation_after,
            found: fine.generation(),
        });
    }
    if coarse.element() != fine.element() {
        return Err(Error::InvalidElementOrder(fine.element().order()));
    }
    Ok(())
}

impl Prolongation {
    /// Interpolates the coarse function at the fine Lagrange nodes.
    pub fn general(coarse: &FeSpace, fine: &FeSpace, record: &RefinementRecord) -> Result<Self> {
        check_record(coarse, fine, record)?;
        let element = coarse.element();
        let nodes = element.nodes();
        let mut rows: Vec<Option<Vec<(usize, f64)>>> = vec![None; fine.n_dofs()];
        for (t, rule) in record.rules.iter().enumerate() {
            let coarse_dofs = coarse.element_dofs(t);
            for (child, f) in rule.children().iter().zip(record.children(t)) {
                let corners = child.map(BisectionRule::entity_barycentric);
                for (mu, &fine_dof) in nodes.iter().zip(fine.element_dofs(f)) {
                    if rows[fine_dof].is_some() {
                        continue;
                    }
                    let mut lambda = [0.0; 3];
                    for (m, corner) in mu.iter().zip(&corners) {
                        for k in 0..3 {
                            lambda[k] += m * corner[k];
                        }
                    }
                    let mut row: Vec<(usize, f64)> = element
                        .values(&lambda)
                        .into_iter()
                        .zip(coarse_dofs)
                        .filter(|(v, _)| v.abs() > SNAP)
                        .map(|(v, &d)| (d, if (v - 1.0).abs() <= SNAP { 1.0 } else { v }))
                        .collect();
                    row.sort_unstable_by_key(|&(d, _)| d);
                    rows[fine_dof] = Some(row);
                }
            }
        }
        Ok(Prolongation {
            matrix: CsrMatrix::from_rows(coarse.n_dofs(), rows.into_iter().map(Option::unwrap_or_default).collect()),
            coarse_generation: record.generation_before,
            fine_generation: record.generation_after,
        })
    }

    /// Specialized transfer for continuous P1 and discontinuous P0.
    pub fn lowest_order(coarse: &FeSpace, fine: &FeSpace, record: &RefinementRecord) -> Result<Self> {
        check_record(coarse, fine, record)?;
        let element = coarse.element();
        let rows: Vec<Vec<(usize, f64)>> = match (element.family(), element.order()) {
            (Family::H1, 1) => {
                let mut rows = vec![Vec::new(); fine.n_dofs()];
                for (v, row) in rows.iter_mut().enumerate().take(record.n_coarse_vertices) {
                    row.push((v, 1.0));
                }
                for (e, midpoint) in record.edge_midpoint.iter().enumerate() {
                    if let Some(m) = *midpoint {
                        let [a, b] = record.coarse_edges[e];
                        rows[m] = vec![(a.min(b), 0.5), (a.max(b), 0.5)];
                    }
                }
                for (t, point) in record.interior_point.iter().enumerate() {
                    if let Some(c) = *point {
                        let [z0, z1, z2] = record.coarse_elements[t];
                        let mut row = vec![(z0, 0.25), (z1, 0.25), (z2, 0.5)];
                        row.sort_unstable_by_key(|&(d, _)| d);
                        rows[c] = row;
                    }
                }
                rows
            }
            (Family::L2, 0) => (0..record.rules.len())
                .flat_map(|t| record.children(t).map(move |_| vec![(t, 1.0)]))
                .collect(),
            (_, p) => return Err(Error::InvalidElementOrder(p)),
        };
        Ok(Prolongation {
            matrix: CsrMatrix::from_rows(coarse.n_dofs(), rows),
            coarse_generation: record.generation_before,
            fine_generation: record.generation_after,
        })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn prolongate(&self, coarse: &[f64]) -> Result<Vec<f64>> {
        if coarse.len() != self.matrix.n_cols() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.n_cols(),
                found: coarse.len(),
            });
        }
        Ok(self.matrix.matvec(coarse))
    }

    /// Replaces `u` on the coarse space by its prolongation on `fine`.
    pub fn prolongate_function(&self, u: &FeFunction, fine: Rc<FeSpace>) -> Result<()> {
        let stamp = u.space().generation();
        if stamp != self.coarse_generation {
            return Err(Error::StaleProlongation {
                built: self.coarse_generation,
                found: stamp,
            });
        }
        if fine.generation() != self.fine_generation {
            return Err(Error::StaleProlongation {
                built: self.fine_generation,
                found: fine.generation(),
            });
        }
        let coefficients = u.with_data(|c| self.prolongate(c))?;
        u.rebind(fine, coefficients)
    }
}
