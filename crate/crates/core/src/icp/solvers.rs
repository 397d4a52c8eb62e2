//! Closed-form and linearized incremental-transform solvers.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6, SVD};

use crate::association::Correspondence;
use crate::se3::{self, Pose, Twist};
use crate::{Error, Result};

/// Relative singular-value cutoff below which a direction counts as
/// unconstrained and is excluded from the solve (minimum-norm behaviour).
const RANK_EPS: f64 = 1e-12;

/// Closed-form minimizer of the point-to-point error
/// `Σ ||T o - c||²` by centroid alignment and SVD of the cross-covariance,
/// with the usual reflection fix.
pub fn solve_point_to_point(pairs: &[Correspondence]) -> Result<Pose> {
    if pairs.len() < 3 {
        return Err(Error::DegenerateConfiguration);
    }
    let n = pairs.len() as f64;
    let mut o_centroid = Vector3::zeros();
    let mut c_centroid = Vector3::zeros();
    for pair in pairs {
        o_centroid += pair.o;
        c_centroid += pair.c;
    }
    o_centroid /= n;
    c_centroid /= n;

    let mut cross = Matrix3::zeros();
    for pair in pairs {
        cross += (pair.o - o_centroid) * (pair.c - c_centroid).transpose();
    }

    let svd = SVD::new(cross, true, true);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if sv[0] <= 0.0 || sv[1] <= RANK_EPS * sv[0] {
        return Err(Error::DegenerateConfiguration);
    }
    let u = svd.u.expect("svd with u");
    let v_t = svd.v_t.expect("svd with v_t");
    let sign = (u.determinant() * v_t.determinant()).signum();
    let d = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, sign));
    let rotation = v_t.transpose() * d * u.transpose();
    let translation = c_centroid - rotation * o_centroid;
    Ok(Pose::new(rotation, translation))
}

/// One linearized point-to-plane step: minimize
/// `Σ ||nᵀ(T o - c)||²` over a small twist and re-orthonormalize through the
/// exponential map.
///
/// The 6x6 normal equations are solved by SVD with small singular values
/// truncated, so directions the geometry does not constrain receive a
/// zero (minimum-norm) update rather than a wild one.
pub fn solve_point_to_plane(pairs: &[Correspondence]) -> Result<Pose> {
    if pairs.is_empty() {
        return Err(Error::SingularSystem);
    }
    let mut a = Matrix6::<f64>::zeros();
    let mut b = Vector6::<f64>::zeros();
    for pair in pairs {
        let jac = {
            let cross = pair.o.cross(&pair.n);
            Vector6::new(pair.n[0], pair.n[1], pair.n[2], cross[0], cross[1], cross[2])
        };
        let residual = pair.n.dot(&(pair.c - pair.o));
        a += jac * jac.transpose();
        b += jac * residual;
    }

    let svd = SVD::new(a, true, true);
    let sigma_max = svd
        .singular_values
        .iter()
        .fold(0.0f64, |acc, &s| acc.max(s));
    if sigma_max <= f64::MIN_POSITIVE {
        return Err(Error::SingularSystem);
    }
    let x = svd
        .solve(&b, RANK_EPS * sigma_max)
        .map_err(|_| Error::SingularSystem)?;
    Ok(se3::exp(&Twist::from_vector(&x)))
}

/// Mean point-to-point loss of `t` over the pairs (squared meters).
pub fn point_to_point_loss(t: &Pose, pairs: &[Correspondence]) -> f64 {
    let sum: f64 = pairs
        .iter()
        .map(|p| (t.transform_point(&p.o) - p.c).norm_squared())
        .sum();
    sum / pairs.len() as f64
}

/// Mean point-to-plane loss of `t` over the pairs (squared meters).
pub fn point_to_plane_loss(t: &Pose, pairs: &[Correspondence]) -> f64 {
    let sum: f64 = pairs
        .iter()
        .map(|p| {
            let d = p.n.dot(&(t.transform_point(&p.o) - p.c));
            d * d
        })
        .sum();
    sum / pairs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::se3::{exp, sample_perturbation, Twist};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pairs_from_transform(
        points: &[Vector3<f64>],
        t: &Pose,
    ) -> Vec<Correspondence> {
        points
            .iter()
            .map(|&o| Correspondence {
                o,
                m: Vector3::z(),
                c: t.transform_point(&o),
                n: Vector3::z(),
            })
            .collect()
    }

    fn random_points(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vector3<f64>> {
        (0..n)
            .map(|_| {
                Vector3::new(
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                )
            })
            .collect()
    }

    #[test]
    fn p2p_identity_on_perfect_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let points = random_points(30, &mut rng);
        let pairs = pairs_from_transform(&points, &Pose::identity());
        let t = solve_point_to_point(&pairs).unwrap();
        assert!((t.rotation - Matrix3::identity()).norm() < 1e-12);
        assert!(t.translation.norm() < 1e-12);
    }

    #[test]
    fn p2p_recovers_random_rigid_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let points = random_points(50, &mut rng);
            let t_true = exp(&Twist::new(
                Vector3::new(
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                ),
                Vector3::new(
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                ),
            ));
            let pairs = pairs_from_transform(&points, &t_true);
            let t = solve_point_to_point(&pairs).unwrap();
            assert!(t.rotation_error(&t_true) < 1e-9);
            assert!(t.translation_error(&t_true) < 1e-9);
        }
    }

    #[test]
    fn p2p_collinear_points_are_degenerate() {
        let points: Vec<Vector3<f64>> = (0..5)
            .map(|i| Vector3::new(i as f64 * 0.1, 0.0, 0.0))
            .collect();
        // Scene rotated about the common axis: cross-covariance rank 1.
        let t = exp(&Twist::new(Vector3::zeros(), Vector3::new(0.7, 0.0, 0.0)));
        let pairs = pairs_from_transform(&points, &t);
        assert!(matches!(
            solve_point_to_point(&pairs),
            Err(Error::DegenerateConfiguration)
        ));
    }

    #[test]
    fn p2p_too_few_pairs_is_degenerate() {
        let pairs = pairs_from_transform(
            &[Vector3::zeros(), Vector3::x()],
            &Pose::identity(),
        );
        assert!(matches!(
            solve_point_to_point(&pairs),
            Err(Error::DegenerateConfiguration)
        ));
    }

    #[test]
    fn p2p_never_worsens_its_own_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let points = random_points(40, &mut rng);
            let perturb = sample_perturbation(0.05, 0.3, &mut rng);
            let t_scene = crate::se3::apply_perturbation(&Pose::identity(), &perturb);
            let mut pairs = pairs_from_transform(&points, &t_scene);
            // Non-rigid contamination so the solve is not exact.
            for (k, p) in pairs.iter_mut().enumerate() {
                p.c[k % 3] += 0.01 * ((k as f64) * 0.77).sin();
            }
            let t = solve_point_to_point(&pairs).unwrap();
            assert!(
                point_to_point_loss(&t, &pairs)
                    <= point_to_point_loss(&Pose::identity(), &pairs) + 1e-15
            );
        }
    }

    #[test]
    fn p2l_identity_on_perfect_alignment() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let pairs: Vec<Correspondence> = (0..50)
            .map(|_| {
                let o = Vector3::new(
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                );
                let n = Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
                .normalize();
                Correspondence { o, m: n, c: o, n }
            })
            .collect();
        let t = solve_point_to_plane(&pairs).unwrap();
        assert!((t.rotation - Matrix3::identity()).norm() < 1e-10);
        assert!(t.translation.norm() < 1e-10);
    }

    #[test]
    fn p2l_plane_offset_recovers_normal_component_only() {
        // Scene plane z = 0, model floating 1 cm above it: the solve must
        // push the model down by exactly 1 cm and leave the unconstrained
        // tangential/azimuthal directions at zero.
        let mut pairs = Vec::new();
        for i in -5..=5 {
            for j in -5..=5 {
                let x = i as f64 * 0.02;
                let y = j as f64 * 0.02;
                pairs.push(Correspondence {
                    o: Vector3::new(x, y, 0.01),
                    m: Vector3::z(),
                    c: Vector3::new(x, y, 0.0),
                    n: Vector3::z(),
                });
            }
        }
        let t = solve_point_to_plane(&pairs).unwrap();
        assert!((t.translation[2] + 0.01).abs() < 1e-8, "{}", t.translation[2]);
        assert!(t.translation[0].abs() < 1e-10);
        assert!(t.translation[1].abs() < 1e-10);
        assert!((t.rotation - Matrix3::identity()).norm() < 1e-8);
    }

    #[test]
    fn p2l_tangential_offset_is_invisible() {
        // Model shifted along the plane: the metric's null space, so the
        // increment is the identity.
        let mut pairs = Vec::new();
        for i in -5..=5 {
            for j in -5..=5 {
                let x = i as f64 * 0.02;
                let y = j as f64 * 0.02;
                pairs.push(Correspondence {
                    o: Vector3::new(x + 0.004, y, 0.0),
                    m: Vector3::z(),
                    c: Vector3::new(x, y, 0.0),
                    n: Vector3::z(),
                });
            }
        }
        let t = solve_point_to_plane(&pairs).unwrap();
        assert!(t.translation.norm() < 1e-10);
        assert!((t.rotation - Matrix3::identity()).norm() < 1e-10);
    }

    #[test]
    fn p2l_linearized_objective_decreases_vs_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..20 {
            let perturb = sample_perturbation(0.004, 0.01, &mut rng);
            let t_true = crate::se3::apply_perturbation(&Pose::identity(), &perturb);
            let pairs: Vec<Correspondence> = (0..60)
                .map(|_| {
                    let o = Vector3::new(
                        rng.random_range(-0.3..0.3),
                        rng.random_range(-0.3..0.3),
                        rng.random_range(-0.3..0.3),
                    );
                    let n = Vector3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    )
                    .normalize();
                    Correspondence {
                        o,
                        m: n,
                        c: t_true.transform_point(&o),
                        n,
                    }
                })
                .collect();
            let t = solve_point_to_plane(&pairs).unwrap();
            assert!(
                point_to_plane_loss(&t, &pairs)
                    < point_to_plane_loss(&Pose::identity(), &pairs)
            );
        }
    }

    #[test]
    fn p2l_first_order_optimality_by_finite_differences() {
        // The solve zeroes the linearized gradient exactly; the true
        // gradient at the solution carries an O(|x|²) remainder, so the
        // check runs in the small-displacement regime the linearization is
        // built for.
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let perturb = sample_perturbation(1e-5, 2e-5, &mut rng);
        let t_true = crate::se3::apply_perturbation(&Pose::identity(), &perturb);
        let pairs: Vec<Correspondence> = (0..80)
            .map(|_| {
                let o = Vector3::new(
                    rng.random_range(-0.4..0.4),
                    rng.random_range(-0.4..0.4),
                    rng.random_range(-0.4..0.4),
                );
                let n = Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
                .normalize();
                Correspondence {
                    o,
                    m: n,
                    c: t_true.transform_point(&o),
                    n,
                }
            })
            .collect();
        let solved = solve_point_to_plane(&pairs).unwrap();
        let x0 = crate::se3::log(&solved).as_vector();
        let objective = |x: &Vector6<f64>| {
            let t = exp(&Twist::from_vector(x));
            point_to_plane_loss(&t, &pairs) * pairs.len() as f64
        };
        let h = 1e-7;
        for dim in 0..6 {
            let mut plus = x0;
            let mut minus = x0;
            plus[dim] += h;
            minus[dim] -= h;
            let grad = (objective(&plus) - objective(&minus)) / (2.0 * h);
            assert!(grad.abs() < 1e-6, "dim {dim} gradient {grad}");
        }
    }
}
