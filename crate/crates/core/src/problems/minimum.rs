use crate::envelope::{interval_of, minimize_on_interval};
use crate::error::{Error, Result};
use crate::problem::{Aggregation, KnownMin, ProblemInstance};
use crate::scalar::Scalar;
use crate::set::SetKind;
use crate::vector::{solve_dense, Vector};

/// Largest dimension handled by vertex enumeration on boxes.
const VERTEX_DIM: usize = 3;

/// Minimizer and minimal value of `phi`.
///
/// Returns the planted minimum when the instance has one, solves 1-D
/// instances exactly by breakpoint enumeration, and enumerates the vertices
/// of the linearity arrangement for unperturbed box instances in `d <= 3`.
pub fn true_min<S: Scalar>(instance: &ProblemInstance<S>) -> Result<KnownMin<S>> {
    if let Some(km) = instance.known_min() {
        return Ok(km.clone());
    }
    let objective = instance.objective();
    if let Some((lo, hi)) = interval_of(instance.set()) {
        let (kappa, c) = match &objective.quadratic {
            Some(q) => (q.total_weight(), q.centroid()[0]),
            None => (S::zero(), S::zero()),
        };
        let y = minimize_on_interval(&objective.pieces, kappa, c, lo, hi, |y| objective.value(&[y]));
        let point = Vector::from_vec_unchecked(vec![y]);
        let value = instance.value(&point);
        return Ok(KnownMin { point, value });
    }
    if objective.quadratic.is_none() && instance.dim() <= VERTEX_DIM {
        if let SetKind::Box { lower, upper } = instance.set().kind() {
            return vertex_minimum(instance, lower.as_slice(), upper.as_slice());
        }
    }
    Err(Error::Unsupported(format!(
        "no exact minimum for a {}-dimensional instance without a planted solution",
        instance.dim()
    )))
}

fn vertex_minimum<S: Scalar>(instance: &ProblemInstance<S>, lower: &[S], upper: &[S]) -> Result<KnownMin<S>> {
    let p = &instance.objective().pieces;
    let d = p.dim();
    // hyperplanes <n, x> = c on which the objective changes linearity
    let mut planes: Vec<(Vec<S>, S)> = Vec::new();
    match p.aggregation() {
        Aggregation::Max => {
            for j in 0..p.pieces() {
                for k in j + 1..p.pieces() {
                    let n: Vec<S> = p.row(j).iter().zip(p.row(k)).map(|(&a, &b)| a - b).collect();
                    planes.push((n, p.offset(k) - p.offset(j)));
                }
            }
        }
        Aggregation::MeanAbs => {
            for j in 0..p.pieces() {
                planes.push((p.row(j).to_vec(), -p.offset(j)));
            }
        }
    }
    for i in 0..d {
        let e: Vec<S> = (0..d).map(|k| if k == i { S::one() } else { S::zero() }).collect();
        planes.push((e.clone(), lower[i]));
        planes.push((e, upper[i]));
    }

    let slack = S::lit(1e-12) * (S::one() + instance.diameter());
    let mut best: Option<KnownMin<S>> = None;
    let mut choice: Vec<usize> = (0..d).collect();
    loop {
        if let Some(x) = solve_system(&planes, &choice) {
            let point = Vector::from_vec_unchecked(
                x.iter().zip(lower.iter().zip(upper)).map(|(&v, (&lo, &hi))| v.max(lo).min(hi)).collect(),
            );
            let inside = x.iter().zip(lower.iter().zip(upper)).all(|(&v, (&lo, &hi))| v >= lo - slack && v <= hi + slack);
            if inside {
                let value = instance.value(&point);
                if best.as_ref().map_or(true, |b| value < b.value) {
                    best = Some(KnownMin { point, value });
                }
            }
        }
        if !next_combination(&mut choice, planes.len()) {
            break;
        }
    }
    best.ok_or_else(|| Error::Unsupported("vertex enumeration found no feasible vertex".into()))
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn solve_system<S: Scalar>(planes: &[(Vec<S>, S)], rows: &[usize]) -> Option<Vec<S>> {
    let m = rows.iter().map(|&r| planes[r].0.clone()).collect();
    solve_dense(m, rows.iter().map(|&r| planes[r].1).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{l1_regression, piecewise_max};
    use crate::set::ConstraintSet;

    fn v(c: &[f64]) -> Vector<f64> {
        Vector::from_f64(c).unwrap()
    }

    #[test]
    fn abs_on_interval() {
        let inst = l1_regression(&[(v(&[1.0]), 0.0)], ConstraintSet::cube(1, 1.0).unwrap(), None).unwrap();
        let km = true_min(&inst).unwrap();
        assert_eq!((km.point[0], km.value), (0.0, 0.0));
    }

    #[test]
    fn shifted_abs_hits_the_boundary() {
        let inst = l1_regression(&[(v(&[1.0]), 3.0)], ConstraintSet::cube(1, 1.0).unwrap(), None).unwrap();
        let km = true_min(&inst).unwrap();
        assert_eq!((km.point[0], km.value), (1.0, 2.0));
    }

    #[test]
    fn high_dimension_without_plant_is_unsupported() {
        let inst = piecewise_max(&[v(&[1.0; 5]), v(&[-1.0; 5])], vec![0.0, 0.0], 0.0, ConstraintSet::cube(5, 1.0).unwrap(), None)
            .unwrap();
        assert!(matches!(true_min(&inst), Err(Error::Unsupported(_))));
    }

    #[test]
    fn combinations_are_enumerated_once() {
        let mut c = vec![0, 1];
        let mut count = 1;
        while next_combination(&mut c, 5) {
            count += 1;
        }
        assert_eq!(count, 10);
    }
}
