//! Rotation representations and conversions: 6D <-> matrix, axis-angle <->
//! matrix, geodesic distance, and frame-to-frame rotation deltas.
//!
//! The 6D form stores the first two columns of a rotation matrix,
//! column-major (a1 then a2). Conversion back to a matrix runs Gram-Schmidt,
//! so arbitrary finite 6D inputs are accepted as long as they are not
//! degenerate. A hand-derived vector-Jacobian product for the Gram-Schmidt
//! construction is exposed for the differentiable graph ops.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::{real, Real};

/// 6D encoding of the identity rotation.
pub const SIXD_IDENTITY: [f64; 6] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];

/// Inputs with a column norm below this are rejected as degenerate.
pub const DEGENERACY_EPS: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum RotationError {
    #[error("degenerate 6D input: {0}")]
    DegenerateInput(String),
    #[error("matrix is not a valid rotation: {0}")]
    InvalidRotation(String),
}

/// First two columns of a rotation matrix, column-major: [a1, a2].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rot6D(pub [f64; 6]);

/// 3x3 rotation matrix, stored row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotMatrix(pub [[f64; 3]; 3]);

/// Axis scaled by angle in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisAngle(pub [f64; 3]);

#[inline]
fn dot3<T: Real>(a: &[T], b: &[T]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn cross3<T: Real>(a: &[T], b: &[T]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Gram-Schmidt 6D -> rotation matrix, generic over scalar type.
///
/// Returns the matrix row-major. Errors if either orthonormalized column
/// collapses below [`DEGENERACY_EPS`].
pub fn gram_schmidt<T: Real>(v: &[T; 6]) -> Result<[T; 9], RotationError> {
    let a1 = &v[0..3];
    let a2 = &v[3..6];
    let n1 = dot3(a1, a1).sqrt();
    if n1.to_f64() < DEGENERACY_EPS {
        return Err(RotationError::DegenerateInput(format!(
            "|a1| = {} below {DEGENERACY_EPS}",
            n1
        )));
    }
    let b1 = [a1[0] / n1, a1[1] / n1, a1[2] / n1];
    let d = dot3(&b1, a2);
    let u = [a2[0] - d * b1[0], a2[1] - d * b1[1], a2[2] - d * b1[2]];
    let n2 = dot3(&u, &u).sqrt();
    if n2.to_f64() < DEGENERACY_EPS {
        return Err(RotationError::DegenerateInput(format!(
            "a2 parallel to a1: residual norm {} below {DEGENERACY_EPS}",
            n2
        )));
    }
    let b2 = [u[0] / n2, u[1] / n2, u[2] / n2];
    let b3 = cross3(&b1, &b2);
    // Columns are b1, b2, b3.
    Ok([
        b1[0], b2[0], b3[0], //
        b1[1], b2[1], b3[1], //
        b1[2], b2[2], b3[2],
    ])
}

/// Vector-Jacobian product of [`gram_schmidt`]: given dL/dM (row-major),
/// returns dL/dv. The input must be non-degenerate.
pub fn gram_schmidt_vjp<T: Real>(v: &[T; 6], grad_m: &[T; 9]) -> [T; 6] {
    let a1 = [v[0], v[1], v[2]];
    let a2 = [v[3], v[4], v[5]];
    let n1 = dot3(&a1, &a1).sqrt();
    let b1 = [a1[0] / n1, a1[1] / n1, a1[2] / n1];
    let d = dot3(&b1, &a2);
    let u = [a2[0] - d * b1[0], a2[1] - d * b1[1], a2[2] - d * b1[2]];
    let n2 = dot3(&u, &u).sqrt();
    let b2 = [u[0] / n2, u[1] / n2, u[2] / n2];

    // Column gradients of M = [b1 b2 b3].
    let g1 = [grad_m[0], grad_m[3], grad_m[6]];
    let g2 = [grad_m[1], grad_m[4], grad_m[7]];
    let g3 = [grad_m[2], grad_m[5], grad_m[8]];

    // b3 = b1 x b2  =>  dL/db1 += b2 x g3,  dL/db2 += g3 x b1.
    let gb2 = [
        g2[0] + cross3(&g3, &b1)[0],
        g2[1] + cross3(&g3, &b1)[1],
        g2[2] + cross3(&g3, &b1)[2],
    ];
    let cb = cross3(&b2, &g3);
    let mut gb1 = [g1[0] + cb[0], g1[1] + cb[1], g1[2] + cb[2]];

    // b2 = u / |u|  =>  dL/du = (gb2 - (gb2.b2) b2) / |u|.
    let s2 = dot3(&gb2, &b2);
    let gu = [
        (gb2[0] - s2 * b2[0]) / n2,
        (gb2[1] - s2 * b2[1]) / n2,
        (gb2[2] - s2 * b2[2]) / n2,
    ];

    // u = a2 - (b1.a2) b1.
    let bg = dot3(&b1, &gu);
    let ga2 = [gu[0] - bg * b1[0], gu[1] - bg * b1[1], gu[2] - bg * b1[2]];
    for i in 0..3 {
        gb1[i] = gb1[i] - a2[i] * bg - d * gu[i];
    }

    // b1 = a1 / |a1|.
    let s1 = dot3(&gb1, &b1);
    let ga1 = [
        (gb1[0] - s1 * b1[0]) / n1,
        (gb1[1] - s1 * b1[1]) / n1,
        (gb1[2] - s1 * b1[2]) / n1,
    ];

    [ga1[0], ga1[1], ga1[2], ga2[0], ga2[1], ga2[2]]
}

impl RotMatrix {
    pub fn identity() -> Self {
        RotMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Rotation by `angle` radians about the x axis.
    pub fn rot_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        RotMatrix([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    }

    /// Rotation by `angle` radians about the y axis.
    pub fn rot_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        RotMatrix([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    }

    /// Rotation by `angle` radians about the z axis.
    pub fn rot_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        RotMatrix([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        RotMatrix([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn matmul(&self, rhs: &RotMatrix) -> RotMatrix {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        RotMatrix(out)
    }

    pub fn apply(&self, v: &[f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// Max deviation from orthonormality (|R^T R - I|) plus |det - 1|
    /// must stay within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let rt = self.transpose();
        let gram = rt.matmul(self);
        let mut max_dev: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                max_dev = max_dev.max((gram.0[i][j] - expect).abs());
            }
        }
        max_dev <= tol && (self.det() - 1.0).abs() <= tol
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        ]
    }

    pub fn from_row_major(v: &[f64]) -> Self {
        RotMatrix([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]])
    }
}

/// 6D -> matrix via Gram-Schmidt.
pub fn sixd_to_matrix(r: &Rot6D) -> Result<RotMatrix, RotationError> {
    let m = gram_schmidt(&r.0)?;
    Ok(RotMatrix::from_row_major(&m))
}

/// Matrix -> first two columns as 6D. Rejects matrices that violate the
/// rotation invariants beyond 1e-4.
pub fn matrix_to_sixd(m: &RotMatrix) -> Result<Rot6D, RotationError> {
    if !m.is_valid(1e-4) {
        return Err(RotationError::InvalidRotation(format!(
            "orthonormality/determinant deviation above 1e-4: {:?}",
            m.0
        )));
    }
    let v = &m.0;
    Ok(Rot6D([
        v[0][0], v[1][0], v[2][0], v[0][1], v[1][1], v[2][1],
    ]))
}

/// Rodrigues' formula. The zero vector maps to the identity; small angles
/// use series expansions of sin(t)/t and (1-cos(t))/t^2.
pub fn axis_angle_to_matrix(r: &AxisAngle) -> RotMatrix {
    let [x, y, z] = r.0;
    let theta2 = x * x + y * y + z * z;
    let theta = theta2.sqrt();
    let (a, b) = if theta < 1e-6 {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    // R = I + a K + b K^2, K = skew(r).
    RotMatrix([
        [
            1.0 + b * (-z * z - y * y),
            -a * z + b * x * y,
            a * y + b * x * z,
        ],
        [
            a * z + b * x * y,
            1.0 + b * (-z * z - x * x),
            -a * x + b * y * z,
        ],
        [
            -a * y + b * x * z,
            a * x + b * y * z,
            1.0 + b * (-y * y - x * x),
        ],
    ])
}

/// Inverse Rodrigues with angle in [0, pi]. Near pi the axis is recovered
/// from the largest-diagonal branch of (M + M^T)/2.
pub fn matrix_to_axis_angle(m: &RotMatrix) -> AxisAngle {
    let v = &m.0;
    let cos_t = ((m.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let theta = cos_t.acos();
    // Twice the skew part; equals 2 sin(theta) * axis.
    let s = [
        v[2][1] - v[1][2],
        v[0][2] - v[2][0],
        v[1][0] - v[0][1],
    ];
    if theta < 1e-7 {
        return AxisAngle([s[0] / 2.0, s[1] / 2.0, s[2] / 2.0]);
    }
    if theta < std::f64::consts::PI - 1e-4 {
        let k = theta / (2.0 * theta.sin());
        return AxisAngle([s[0] * k, s[1] * k, s[2] * k]);
    }
    // Near pi: axis from the largest diagonal of uu^T = (M + M^T - 2cI)/(2(1-c)).
    let one_minus_c = 1.0 - cos_t;
    let mut i = 0;
    for j in 1..3 {
        if v[j][j] > v[i][i] {
            i = j;
        }
    }
    let ui = (((v[i][i] - cos_t) / one_minus_c).max(0.0)).sqrt();
    let mut u = [0.0; 3];
    u[i] = ui;
    for j in 0..3 {
        if j != i {
            u[j] = (v[i][j] + v[j][i]) / (2.0 * one_minus_c * ui);
        }
    }
    // Fix the sign from the skew part when it is meaningful; at exactly pi
    // both signs are equivalent, pick the first nonzero component positive.
    let sign_dot = u[0] * s[0] + u[1] * s[1] + u[2] * s[2];
    if sign_dot < 0.0 {
        for c in &mut u {
            *c = -*c;
        }
    } else if sign_dot == 0.0 {
        let first = if u[0] != 0.0 {
            u[0]
        } else if u[1] != 0.0 {
            u[1]
        } else {
            u[2]
        };
        if first < 0.0 {
            for c in &mut u {
                *c = -*c;
            }
        }
    }
    let n = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    AxisAngle([u[0] / n * theta, u[1] / n * theta, u[2] / n * theta])
}

/// Geodesic angle between two rotations in degrees, in [0, 180].
pub fn geodesic_angle_deg(a: &RotMatrix, b: &RotMatrix) -> f64 {
    let rel = a.transpose().matmul(b);
    let cos_t = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    cos_t.acos().to_degrees()
}

/// World-frame rotation delta: curr * prev^T, so delta * prev = curr.
pub fn rotation_delta(curr: &RotMatrix, prev: &RotMatrix) -> RotMatrix {
    curr.matmul(&prev.transpose())
}

/// Generic helper for graph code: 6D identity as T.
pub fn sixd_identity<T: Real>() -> [T; 6] {
    [
        real(1.0),
        real(0.0),
        real(0.0),
        real(0.0),
        real(1.0),
        real(0.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_mat_close(a: &RotMatrix, b: &RotMatrix, tol: f64) {
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (a.0[i][j] - b.0[i][j]).abs() <= tol,
                    "entry ({i},{j}): {} vs {}",
                    a.0[i][j],
                    b.0[i][j]
                );
            }
        }
    }

    fn random_rotation(rng: &mut impl Rng) -> RotMatrix {
        // Random axis-angle with angle < pi.
        let axis = loop {
            let v: [f64; 3] = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n > 1e-3 {
                break [v[0] / n, v[1] / n, v[2] / n];
            }
        };
        let angle = rng.gen_range(0.0..3.0);
        axis_angle_to_matrix(&AxisAngle([
            axis[0] * angle,
            axis[1] * angle,
            axis[2] * angle,
        ]))
    }

    #[test]
    fn sixd_identity_case() {
        let m = sixd_to_matrix(&Rot6D(SIXD_IDENTITY)).unwrap();
        assert_mat_close(&m, &RotMatrix::identity(), 1e-15);
    }

    #[test]
    fn sixd_gram_schmidt_removes_parallel_part() {
        // Hand Gram-Schmidt: a1=(1,0,0) -> b1=(1,0,0); a2=(1,1,0) minus
        // projection = (0,1,0); b3 = z-hat. Identity.
        let m = sixd_to_matrix(&Rot6D([1.0, 0.0, 0.0, 1.0, 1.0, 0.0])).unwrap();
        assert_mat_close(&m, &RotMatrix::identity(), 1e-15);
    }

    #[test]
    fn sixd_ninety_about_z() {
        // Explicit column assembly: b1=(0,1,0), b2=(-1,0,0), b3=(0,0,1).
        let m = sixd_to_matrix(&Rot6D([0.0, 1.0, 0.0, -1.0, 0.0, 0.0])).unwrap();
        let expect = RotMatrix([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        assert_mat_close(&m, &expect, 1e-15);
        assert_mat_close(&m, &RotMatrix::rot_z(std::f64::consts::FRAC_PI_2), 1e-12);
    }

    #[test]
    fn sixd_degenerate_inputs_error() {
        assert!(matches!(
            sixd_to_matrix(&Rot6D([0.0; 6])),
            Err(RotationError::DegenerateInput(_))
        ));
        assert!(matches!(
            sixd_to_matrix(&Rot6D([1.0, 0.0, 0.0, 2.0, 0.0, 0.0])),
            Err(RotationError::DegenerateInput(_))
        ));
    }

    #[test]
    fn matrix_to_sixd_reads_columns_and_round_trips() {
        let id6 = matrix_to_sixd(&RotMatrix::identity()).unwrap();
        assert_eq!(id6.0, SIXD_IDENTITY);

        let rz = RotMatrix::rot_z(std::f64::consts::FRAC_PI_2);
        let v = matrix_to_sixd(&rz).unwrap();
        for (got, want) in v.0.iter().zip([0.0, 1.0, 0.0, -1.0, 0.0, 0.0]) {
            assert!((got - want).abs() < 1e-12);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let m = random_rotation(&mut rng);
            let back = sixd_to_matrix(&matrix_to_sixd(&m).unwrap()).unwrap();
            assert_mat_close(&m, &back, 1e-6);
        }
    }

    #[test]
    fn matrix_to_sixd_rejects_invalid() {
        let bad = RotMatrix([[1.1, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(matches!(
            matrix_to_sixd(&bad),
            Err(RotationError::InvalidRotation(_))
        ));
    }

    #[test]
    fn axis_angle_basics() {
        assert_mat_close(
            &axis_angle_to_matrix(&AxisAngle([0.0; 3])),
            &RotMatrix::identity(),
            1e-15,
        );
        // Rodrigues oracle: (0,0,pi/2) is a 90 degree turn about z.
        assert_mat_close(
            &axis_angle_to_matrix(&AxisAngle([0.0, 0.0, std::f64::consts::FRAC_PI_2])),
            &RotMatrix::rot_z(std::f64::consts::FRAC_PI_2),
            1e-12,
        );
    }

    #[test]
    fn axis_angle_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let r = AxisAngle([
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ]);
            let scale = rng.gen_range(0.0..2.9);
            let n = (r.0[0] * r.0[0] + r.0[1] * r.0[1] + r.0[2] * r.0[2]).sqrt();
            if n < 1e-3 {
                continue;
            }
            let r = AxisAngle([r.0[0] / n * scale, r.0[1] / n * scale, r.0[2] / n * scale]);
            let back = matrix_to_axis_angle(&axis_angle_to_matrix(&r));
            for i in 0..3 {
                assert!((back.0[i] - r.0[i]).abs() < 1e-6, "{:?} vs {:?}", back, r);
            }
        }
    }

    #[test]
    fn axis_angle_near_pi_branch() {
        for axis in [[1.0f64, 0.0, 0.0], [0.0, 1.0, 0.0], [0.3, -0.5, 0.81]] {
            let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
            let angle = std::f64::consts::PI - 1e-6;
            let r = AxisAngle([
                axis[0] / n * angle,
                axis[1] / n * angle,
                axis[2] / n * angle,
            ]);
            let m = axis_angle_to_matrix(&r);
            let back = matrix_to_axis_angle(&m);
            let m2 = axis_angle_to_matrix(&back);
            assert_mat_close(&m, &m2, 1e-8);
        }
    }

    #[test]
    fn geodesic_angles() {
        let id = RotMatrix::identity();
        assert_eq!(geodesic_angle_deg(&id, &id), 0.0);
        let rz90 = RotMatrix::rot_z(90f64.to_radians());
        assert!((geodesic_angle_deg(&id, &rz90) - 90.0).abs() < 1e-9);
        // Angle subtraction oracle.
        let a = RotMatrix::rot_z(30f64.to_radians());
        let b = RotMatrix::rot_z(75f64.to_radians());
        assert!((geodesic_angle_deg(&a, &b) - 45.0).abs() < 1e-9);
        assert!((geodesic_angle_deg(&b, &a) - 45.0).abs() < 1e-9);
    }

    #[test]
    fn geodesic_symmetry_and_triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = random_rotation(&mut rng);
            let b = random_rotation(&mut rng);
            let c = random_rotation(&mut rng);
            let ab = geodesic_angle_deg(&a, &b);
            let ba = geodesic_angle_deg(&b, &a);
            assert!((ab - ba).abs() < 1e-9);
            let ac = geodesic_angle_deg(&a, &c);
            let cb = geodesic_angle_deg(&c, &b);
            assert!(ab <= ac + cb + 1e-9);
            assert!((0.0..=180.0).contains(&ab));
        }
    }

    #[test]
    fn rotation_delta_composes() {
        let r = RotMatrix::rot_z(0.7);
        assert_mat_close(&rotation_delta(&r, &r), &RotMatrix::identity(), 1e-12);
        let rz90 = RotMatrix::rot_z(90f64.to_radians());
        assert_mat_close(&rotation_delta(&rz90, &RotMatrix::identity()), &rz90, 1e-12);
        // Composition oracle: delta(Rz80, Rz50) = Rz30 and delta*prev = curr.
        let r80 = RotMatrix::rot_z(80f64.to_radians());
        let r50 = RotMatrix::rot_z(50f64.to_radians());
        let d = rotation_delta(&r80, &r50);
        assert_mat_close(&d, &RotMatrix::rot_z(30f64.to_radians()), 1e-12);
        assert_mat_close(&d.matmul(&r50), &r80, 1e-12);
    }

    #[test]
    fn gram_schmidt_orthonormal_and_continuous() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..500 {
            let mut v = [0.0f64; 6];
            for c in &mut v {
                *c = rng.gen_range(-2.0..2.0);
            }
            let Ok(m) = gram_schmidt(&v) else { continue };
            let rm = RotMatrix::from_row_major(&m);
            assert!(rm.is_valid(1e-6), "not orthonormal for {v:?}");

            // Continuity: 1e-6 perturbation moves the output by < 1e-4.
            let mut vp = v;
            for c in &mut vp {
                *c += rng.gen_range(-1e-6..1e-6);
            }
            if let Ok(mp) = gram_schmidt(&vp) {
                let max_delta = m
                    .iter()
                    .zip(mp.iter())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                assert!(max_delta < 1e-4, "discontinuity {max_delta} at {v:?}");
            }
        }
    }

    #[test]
    fn gram_schmidt_vjp_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let h = 1e-5;
        for _ in 0..100 {
            let mut v = [0.0f64; 6];
            for c in &mut v {
                *c = rng.gen_range(-2.0..2.0);
            }
            if gram_schmidt(&v).is_err() {
                continue;
            }
            // Full 9x6 Jacobian from 9 unit VJP seeds vs central differences.
            for out_idx in 0..9 {
                let mut seed = [0.0f64; 9];
                seed[out_idx] = 1.0;
                let analytic = gram_schmidt_vjp(&v, &seed);
                for in_idx in 0..6 {
                    let mut vp = v;
                    vp[in_idx] += h;
                    let mut vm = v;
                    vm[in_idx] -= h;
                    let fd = (gram_schmidt(&vp).unwrap()[out_idx]
                        - gram_schmidt(&vm).unwrap()[out_idx])
                        / (2.0 * h);
                    let denom = analytic[in_idx].abs().max(fd.abs()).max(1.0);
                    assert!(
                        (analytic[in_idx] - fd).abs() / denom < 1e-5,
                        "J[{out_idx}][{in_idx}]: analytic {} vs fd {} at {v:?}",
                        analytic[in_idx],
                        fd
                    );
                }
            }
        }
    }
}
